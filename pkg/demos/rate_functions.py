# quenched vs averaged rate functions and the lambda <-> velocity map
import numpy as np

from betawalk.duality import iq_star, lambda_of_xi, rate_ia, rate_iq
from betawalk.specfun import ModelParams

p = ModelParams(1.0, 2.0)
chi1 = p.chi[0]
print("LLN velocity xi1 =", chi1)

xs = np.round(np.arange(0.05, 0.96, 0.05), 2)
iq = rate_iq(p, xs)
ia = rate_ia(p, xs)

print()
print("  xi1     lambda   branch     I_q        I_a       gap")
for x, q, a in zip(xs, iq, ia):
    dp = lambda_of_xi(p, x)
    print(f"{x:5.2f}  {dp.lam:9.4f}  {dp.branch.value:7s}  {q:9.6f}  {a:9.6f}  {q - a:.2e}")

# gap is quartic near chi
for h in (0.08, 0.04, 0.02):
    g = rate_iq(p, chi1 + h) - rate_ia(p, chi1 + h)
    print(f"h={h}: gap/h^4 = {g / h**4:.4f}")
print("(a+b)^4/(24 a^3 b^3) =", (p.alpha + p.beta) ** 4 / (24 * p.alpha**3 * p.beta**3))

# conjugate
x = np.linspace(0, 1, 4001)
for t in (-2.0, 0.0, 2.0):
    print(f"t={t:+.1f}  I_q*(t)={iq_star(p, t):.6f}  grid sup={np.max(t * x - rate_iq(p, x)):.6f}")
