# build a stationary field and look at its exact identities and marginals
import numpy as np
from scipy import stats

from betawalk.specfun import Branch, ModelParams
from betawalk.stationary import build_stationary, harmonic_residuals, plaquette_residual

p = ModelParams(1.0, 1.0)
lam = 1.0
f = build_stationary(p, lam, Branch.RIGHT, (200, 200), seed=3)

print("harmonic residuals (fwd, bwd):", harmonic_residuals(f))
print("plaquette closure:", plaquette_residual(f))

# edge ratios along the bottom row should be iid Beta(alpha+lam, beta)
h = f.rho_h[:, 0]
print("rho_h bottom row vs Beta(2,1):", stats.kstest(h, stats.beta(p.alpha + lam, p.beta).cdf).pvalue)
v = 1 / f.rho_v[0, :]
print("1/rho_v left column vs Beta(1,1):", stats.kstest(v, stats.beta(lam, p.alpha).cdf).pvalue)

# log rho from the corner out along the diagonal
for n in (10, 50, 100, 200):
    print(n, f.log_rho((0, 0), (n, n)))

# the flipped weights are again Beta(alpha, beta) and iid
w = f.omega_flipped.ravel()
print("omega^lambda mean", w.mean(), "expected", p.alpha / (p.alpha + p.beta))
print("neighbour corr", np.corrcoef(f.omega_flipped[:-1, :].ravel(), f.omega_flipped[1:, :].ravel())[0, 1])
