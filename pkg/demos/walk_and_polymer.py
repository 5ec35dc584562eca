# hitting probabilities, brute force check, the polymer identity and a Doob path
import numpy as np

from betawalk.selftest import brute_force_log_hit
from betawalk.specfun import Branch, ModelParams
from betawalk.stationary import build_stationary, doob_forward, sample_env
from betawalk.walk import busemann_estimate, hit_prob_table, polymer_partition, sample_path

p = ModelParams(1.0, 1.0)
env = sample_env(p, (8, 8), seed=11)
lp = hit_prob_table(env, (8, 8)).log_p[0, 0]
print("DP   log P(hit (8,8)):", lp)
print("sum  log P(hit (8,8)):", brute_force_log_hit(env.omega_e1, (8, 8)))

# Busemann increments far out in direction 0.8 (one environment, so noisy)
env = sample_env(p, (700, 700), seed=12)
for d in (64, 256, 512):
    z = (int(0.8 * d) + 20, d - int(0.8 * d) + 20)
    print(d, "B(0,e1) ~", busemann_estimate(env, (0, 0), (1, 0), z))

# stationary polymer partition function equals log rho
f = build_stationary(p, 1.0, Branch.RIGHT, (64, 64), seed=4)
z = polymer_partition(f)
print("polymer vs log rho at (64,64):", z[64, 64], f.log_rho((0, 0), (64, 64)))

# one Doob-transformed path; its velocity should drift toward 0.8
path = sample_path(doob_forward(f), (0, 0), 60, rng=np.random.default_rng(0))
print("end", path.end, "x1/N =", path.end[0] / 60)
print(path.steps()[:60])
