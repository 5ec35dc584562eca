# KS suite for the stationary marginals, the variance identity and the LDP proxy
from betawalk.experiments import distribution_suite, identity_holds, ldp_proxy, variance_identity_experiment
from betawalk.specfun import ModelParams

p = ModelParams(1.0, 2.0)
rep = distribution_suite(p, 0.7, 2000, seed=5, busemann_n=500)
for k, t in rep.tests.items():
    print(f"{k:20s} D={t.statistic:.4f}  p={t.p_value:.3g}  {'ok' if t.passed else 'REJECT'}")

vi = variance_identity_experiment(ModelParams(1.0, 1.0), 1.0, 32, 1000, seed=6)
for k, (v, se) in sorted(vi.point_estimates.items()):
    print(f"{k:12s} {v:.4f} +- {se:.4f}")
print("identity holds (e1, e2):", identity_holds(vi, "e1"), identity_holds(vi, "e2"))

ld = ldp_proxy(ModelParams(1.0, 1.0), [0.6, 0.7, 0.8], 128, 20, seed=7)
print(ld.columns)
for row in ld.rows:
    print(["%.4f" % x for x in row])
