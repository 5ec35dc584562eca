"""Exact-identity checks run by ``betawalk selftest``."""
from __future__ import annotations

import itertools
import math
import time
from typing import Callable

import numpy as np

from .duality import lambda_of_xi, rate_iq, xi_of_lambda
from .experiments import ExperimentReport, _rseed
from .specfun import Branch, ModelParams, polygamma, polygamma_diff
from .stationary import (_flip, build_stationary, harmonic_residuals, log_rho_point, plaquette_residual,
                         sample_env, stream_stationary)
from .walk import hit_prob_table, polymer_partition


def _recurrence() -> float:
    worst = 0.0
    for n in range(4):
        for x in (0.1, 0.5, 1.0, 2.0, 10.0, 100.0):
            r = polygamma(n, x) - polygamma(n, x + 1) + (-1) ** n * math.factorial(n) * x ** -(n + 1)
            worst = max(worst, abs(r) / max(1.0, abs(polygamma(n, x))))
    return worst


def psi_expansion(n: int, a: float, x: float) -> float:
    """Five-term large-x expansion of psi_n(x + a) - psi_n(x)."""
    f = math.factorial
    s = (f(n) - (a - 1) * f(n + 1) / (2 * x) + (a - 1) * (2 * a - 1) * f(n + 2) / (12 * x * x)
         - a * (a - 1) ** 2 * f(n + 3) / (24 * x ** 3)
         + (6 * a ** 4 - 15 * a ** 3 + 10 * a * a - 1) * f(n + 4) / (720 * x ** 4))
    return (-1) ** n * a / x ** (n + 1) * s


def _expansion() -> float:
    worst = 0.0
    for n in (1, 2, 3):
        for a in (0.5, 1.0, 2.0):
            exact = polygamma_diff(n, 50.0, a)
            worst = max(worst, abs(psi_expansion(n, a, 50.0) / exact - 1))
    return worst


def _psi_positivity() -> float:
    x = np.logspace(-3, 3, 400)
    return float(np.min(polygamma(2, x) + polygamma(1, x) ** 2))


def _uniform_rate() -> float:
    xs = np.arange(1, 100) / 100
    return float(np.max(np.abs(rate_iq(ModelParams(1, 1), xs) - (1 - 2 * np.sqrt(xs * (1 - xs))))))


def _round_trip() -> float:
    worst = 0.0
    for a, b in itertools.product((0.5, 1.0, 2.0), repeat=2):
        p = ModelParams(a, b)
        for x in (0.1, 0.3, 0.7, 0.9):
            dp = lambda_of_xi(p, x)
            worst = max(worst, abs(xi_of_lambda(p, dp.lam, dp.branch).xi1 - x))
    return worst


def _double_flip(n: int) -> float:
    rng = np.random.default_rng(1)
    u, v, w = rng.random(n), 1 / rng.random(n), rng.random(n)
    worst = 0.0
    for k in range(n):
        t = _flip(*_flip(u[k], v[k], w[k]))
        worst = max(worst, abs(t[0] - u[k]), abs(t[1] - v[k]) / v[k], abs(t[2] - w[k]))
    return worst


def _fields(size: int):
    return [build_stationary(ModelParams(1, 1), 1.0, Branch.RIGHT, (size, size), 11),
            build_stationary(ModelParams(1, 2), 0.7, Branch.LEFT, (size, size), 12)]


def _harmonic(size: int) -> float:
    return max(max(harmonic_residuals(f)) for f in _fields(size))


def _plaquette(size: int) -> float:
    return max(plaquette_residual(f) for f in _fields(size))


def _polymer(size: int) -> float:
    f = build_stationary(ModelParams(1, 2), 0.7, Branch.RIGHT, (size, size), 3)
    z = polymer_partition(f)
    worst = 0.0
    for i in range(size + 1):
        for j in range(size + 1):
            if i + j:
                lr = log_rho_point(f, (0, 0), (i, j))
                worst = max(worst, abs(z[i, j] - lr) / max(1.0, abs(lr)))
    return worst


def brute_force_log_hit(p: np.ndarray, z: tuple[int, int]) -> float:
    """log P_0(hit z) by summing over every path (small z only)."""
    z1, z2 = z
    n = z1 + z2
    combos = list(itertools.combinations(range(n), z1))
    step1 = np.zeros((len(combos), n), dtype=bool)
    if z1:
        step1[np.arange(len(combos))[:, None], np.array(combos)] = True
    # site occupied before step t
    i = np.cumsum(step1, axis=1) - step1
    j = np.arange(n) - i
    w = np.where(step1, p[i, j], 1.0 - p[i, j])
    return math.log(np.prod(w, axis=1).sum())


def _dp_oracle(count: int, size: int) -> float:
    worst = 0.0
    for s in range(count):
        env = sample_env(ModelParams(0.5 + s % 3, 1.0), (size, size), _rseed(5, s))
        lp = hit_prob_table(env, (size, size)).log_p[0, 0]
        worst = max(worst, abs(math.expm1(lp - brute_force_log_hit(env.omega_e1, (size, size)))))
    return worst


def _stream_equality(size: int) -> float:
    p = ModelParams(1, 2)
    worst = 0.0
    for br in (Branch.RIGHT, Branch.LEFT):
        f = build_stationary(p, 0.7, br, (size, size), 21)
        r = stream_stationary(p, 0.7, br, 21, dims=(size, size), record=True)
        worst = max(worst, float(np.max(np.abs(r.rho_h - f.rho_h))), float(np.max(np.abs(r.rho_v - f.rho_v))))
    return worst


def run_selftest(quick: bool = False) -> tuple[ExperimentReport, bool]:
    size = 96 if quick else 256
    checks: list[tuple[str, Callable[[], float], float, str]] = [
        ("polygamma_recurrence", _recurrence, 1e-12, "max"),
        ("polygamma_expansion_x50", _expansion, 1e-6, "max"),
        ("psi2_plus_psi1_sq", _psi_positivity, 0.0, "min"),
        ("uniform_rate_closed_form", _uniform_rate, 1e-9, "max"),
        ("duality_round_trip", _round_trip, 1e-9, "max"),
        ("involution_double_flip", lambda: _double_flip(10_000 if quick else 200_000), 1e-12, "max"),
        ("harmonicity", lambda: _harmonic(size), 1e-12, "max"),
        ("plaquette_closure", lambda: _plaquette(size), 1e-10, "max"),
        ("polymer_oracle", lambda: _polymer(48 if quick else 128), 1e-8, "max"),
        ("dp_brute_force", lambda: _dp_oracle(5 if quick else 30, 6 if quick else 8), 1e-10, "max"),
        ("stream_vs_full_build", lambda: _stream_equality(64 if quick else 200), 0.0, "max"),
    ]
    rep = ExperimentReport("selftest", {"quick": quick}, 0)
    rep.columns = ["check", "value", "tolerance", "passed", "seconds"]
    ok = True
    for name, fn, tol, kind in checks:
        t0 = time.perf_counter()
        val = fn()
        good = val <= tol if kind == "max" else val > tol
        ok &= bool(good)
        rep.point_estimates[name] = (float(val), 0.0)
        rep.rows.append([name, float(val), tol, bool(good), time.perf_counter() - t0])
    rep.notes.append("all checks passed" if ok else "some checks failed")
    return rep, ok
