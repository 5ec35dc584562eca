# small-scale version of the fluctuation and wandering exponent scans
# (the full N=256..4096 run lives in the acceptance tests)
from betawalk.experiments import log_rho_variance_scan, wandering_experiment
from betawalk.specfun import ModelParams

p = ModelParams(1.0, 1.0)
ns = [64, 128, 256, 512]

scan = log_rho_variance_scan(p, 1.0, ns, 400, seed=1)
print(scan.to_csv())
f = scan.fits["var_log_rho"]
print(f"Var(log rho) ~ N^{f.slope:.3f}   (2/3 expected, r2={f.r2:.4f})")
print(f"control slope {scan.fits['control_var_log_rho'].slope:.3f}  (linear off the characteristic)")

wan = wandering_experiment(p, 0.8, ns, 300, seed=2)
f = wan.fits["var_x1"]
print(f"Var(X.e1) ~ N^{f.slope:.3f}   (4/3 expected, r2={f.r2:.4f})")
