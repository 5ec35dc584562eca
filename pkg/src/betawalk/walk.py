"""Quenched walk computations: hitting probabilities, sampled paths, backward
exits, the polymer partition function and ratio-ordering checks."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np
from numba import njit

from .errors import ValidationError
from .rng import ROLE_PATH, key_for, site_uniform
from .stationary import Direction, EnvField, StationaryField, TransitionField

__all__ = [
    "HittingTable",
    "LatticePath",
    "hit_prob_table",
    "hit_log_prob",
    "busemann_estimate",
    "sample_path",
    "backward_exit",
    "backward_exit_law",
    "polymer_partition",
    "conditioned_prefix_law",
    "MonotonicityReport",
    "ratio_monotonicity_check",
    "sandwich_check",
    "nearest_lattice_point",
]


def nearest_lattice_point(n: int, xi1: float) -> tuple[int, int]:
    """Point of the antidiagonal |x| = n closest to n * xi."""
    k = int(math.floor(n * xi1 + 0.5))
    k = min(max(k, 0), n)
    return (k, n - k)


# ---------------------------------------------------------------------------
# access to "probability of an e1-step" for environments and transitions

def _forward_probs(field) -> tuple[np.ndarray, tuple[int, int]]:
    if isinstance(field, EnvField):
        return field.omega_e1, (0, 0)
    if isinstance(field, TransitionField):
        if field.direction is not Direction.FORWARD:
            raise ValidationError("expected a forward transition field")
        return field.p_e1, field.offset
    if isinstance(field, StationaryField):
        raise ValidationError("pass doob_forward(field) or the raw environment")
    raise ValidationError(f"unsupported field type {type(field).__name__}")


def _point(x) -> tuple[int, int]:
    try:
        i, j = (int(c) for c in x)
    except Exception:
        raise ValidationError(f"not a lattice point: {x!r}") from None
    return i, j


@njit(cache=True, inline="always")
def _lae(a, b):
    if a == -math.inf:
        return b
    if b == -math.inf:
        return a
    if a > b:
        return a + math.log1p(math.exp(b - a))
    return b + math.log1p(math.exp(a - b))


@njit(cache=True, inline="always")
def _logp(p):
    return math.log(p) if p > 0.0 else -math.inf


@njit(cache=True, inline="always")
def _logq(p):
    return math.log1p(-p) if p < 1.0 else -math.inf


@njit(cache=True)
def _hit_dp(p, z1, z2):
    lp = np.empty((z1 + 1, z2 + 1))
    lp[z1, z2] = 0.0
    for i in range(z1, -1, -1):
        for j in range(z2, -1, -1):
            if i == z1 and j == z2:
                continue
            a = lp[i + 1, j] + _logp(p[i, j]) if i < z1 else -math.inf
            b = lp[i, j + 1] + _logq(p[i, j]) if j < z2 else -math.inf
            lp[i, j] = _lae(a, b)
    return lp


@dataclass
class HittingTable:
    """log P_x(walk passes through z) for all x in [0, z]."""

    z: tuple[int, int]
    log_p: np.ndarray

    def log_prob(self, x) -> float:
        i, j = _point(x)
        if not (0 <= i <= self.z[0] and 0 <= j <= self.z[1]):
            return -math.inf
        return float(self.log_p[i, j])


def hit_prob_table(field, z) -> HittingTable:
    """Backward dynamic programme in log space over the rectangle [0, z]."""
    p, off = _forward_probs(field)
    if off != (0, 0):
        raise ValidationError("forward fields must start at the origin")
    z1, z2 = _point(z)
    if z1 < 0 or z2 < 0 or z1 >= p.shape[0] or z2 >= p.shape[1]:
        raise ValidationError(f"target {z!r} outside the field")
    return HittingTable((z1, z2), _hit_dp(p, z1, z2))


def hit_log_prob(field, x, z) -> float:
    return hit_prob_table(field, z).log_prob(x)


def busemann_estimate(field, x, y, z) -> float:
    """Finite-volume Busemann increment log P_x(hit z) - log P_y(hit z)."""
    tab = hit_prob_table(field, z)
    return tab.log_prob(x) - tab.log_prob(y)


# ---------------------------------------------------------------------------
# paths

@dataclass
class LatticePath:
    sites: np.ndarray  # (n_steps + 1, 2)

    @property
    def end(self) -> tuple[int, int]:
        return (int(self.sites[-1, 0]), int(self.sites[-1, 1]))

    def steps(self) -> str:
        d = np.diff(self.sites, axis=0)
        return "".join("1" if s[0] else "2" for s in d)


@njit(cache=True)
def _walk_forward(p, i0, j0, u, out):
    i = i0
    j = j0
    out[0, 0] = i
    out[0, 1] = j
    for t in range(u.shape[0]):
        if i >= p.shape[0] or j >= p.shape[1]:
            return t
        if u[t] < p[i, j]:
            i += 1
        else:
            j += 1
        out[t + 1, 0] = i
        out[t + 1, 1] = j
    return u.shape[0]


def _uniforms(rng, n: int) -> np.ndarray:
    if isinstance(rng, np.random.Generator):
        return rng.random(n)
    out = np.empty(n)
    k = key_for(int(rng), ROLE_PATH)
    _path_uniforms(k, out)
    return out


@njit(cache=True)
def _path_uniforms(key, out):
    for t in range(out.shape[0]):
        out[t] = site_uniform(key, t, 0)


def sample_path(transitions, start, n_steps: int, rng) -> LatticePath:
    """Forward walk of n_steps steps. `rng` is a numpy Generator or an integer
    stream seed (counter-based, reproducible)."""
    p, off = _forward_probs(transitions)
    i0, j0 = _point(start)
    i0 -= off[0]
    j0 -= off[1]
    if i0 < 0 or j0 < 0:
        raise ValidationError("start outside the field")
    u = _uniforms(rng, int(n_steps))
    out = np.empty((int(n_steps) + 1, 2), dtype=np.int64)
    done = _walk_forward(p, i0, j0, u, out)
    if done < n_steps:
        raise ValidationError("walk left the field before n_steps")
    out[:, 0] += off[0]
    out[:, 1] += off[1]
    return LatticePath(out)


def _backward_probs(tr: TransitionField) -> np.ndarray:
    if not isinstance(tr, TransitionField) or tr.direction is not Direction.BACKWARD:
        raise ValidationError("expected a backward transition field")
    if tr.offset != (1, 1):
        raise ValidationError("backward fields are indexed from (1, 1)")
    return tr.p_e1


@njit(cache=True)
def _walk_backward(p, i, j, key):
    t = 0
    while i > 0 and j > 0:
        if site_uniform(key, t, 1) < p[i - 1, j - 1]:
            i -= 1
        else:
            j -= 1
        t += 1
    return i, j


def backward_exit(transitions: TransitionField, v, rng) -> tuple[tuple[int, int], str]:
    """Run the backward walk from v until it hits the axes.

    Returns the exit site and the arm hit: "e1" for the horizontal axis,
    "e2" for the vertical one, "origin" only when v is the origin.
    """
    p = _backward_probs(transitions)
    i, j = _point(v)
    if not (0 <= i <= p.shape[0] and 0 <= j <= p.shape[1]):
        raise ValidationError("start outside the field")
    if isinstance(rng, np.random.Generator):
        while i > 0 and j > 0:
            if rng.random() < p[i - 1, j - 1]:
                i -= 1
            else:
                j -= 1
    else:
        i, j = _walk_backward(p, i, j, key_for(int(rng), ROLE_PATH))
        i, j = int(i), int(j)
    if i == 0 and j == 0:
        return (0, 0), "origin"
    return (i, j), ("e1" if j == 0 else "e2")


@njit(cache=True)
def _exit_law(p, v1, v2, q1, q2):
    # push mass down from v; absorb on the axes
    mass = np.zeros((v1 + 1, v2 + 1))
    mass[v1, v2] = 1.0
    for s in range(v1 + v2, 1, -1):
        for i in range(max(1, s - v2), min(v1, s - 1) + 1):
            j = s - i
            m = mass[i, j]
            if m == 0.0:
                continue
            pe = p[i - 1, j - 1]
            mass[i - 1, j] += m * pe
            mass[i, j - 1] += m * (1.0 - pe)
    for i in range(1, v1 + 1):
        q1[i] = mass[i, 0]
    for j in range(1, v2 + 1):
        q2[j] = mass[0, j]


def backward_exit_law(transitions: TransitionField, v) -> tuple[np.ndarray, np.ndarray]:
    """Exact exit distribution of the backward walk from v (v in the bulk).

    q1[k] = P(exit at (k, 0)), q2[l] = P(exit at (0, l)); index 0 unused."""
    p = _backward_probs(transitions)
    v1, v2 = _point(v)
    if not (1 <= v1 <= p.shape[0] and 1 <= v2 <= p.shape[1]):
        raise ValidationError("v must lie in the bulk of the field")
    q1 = np.zeros(v1 + 1)
    q2 = np.zeros(v2 + 1)
    _exit_law(p, v1, v2, q1, q2)
    return q1, q2


# ---------------------------------------------------------------------------
# polymer

@njit(cache=True)
def _polymer(lrh, lrv, lpe1, lpe2):
    m = lrh.shape[0]
    n = lrv.shape[1]
    z = np.empty((m + 1, n + 1))
    z[0, 0] = 0.0
    for i in range(1, m + 1):
        z[i, 0] = z[i - 1, 0] + lrh[i - 1, 0]
    for j in range(1, n + 1):
        z[0, j] = z[0, j - 1] + lrv[0, j - 1]
    for i in range(1, m + 1):
        for j in range(1, n + 1):
            z[i, j] = _lae(z[i - 1, j] + lpe1[i, j], z[i, j - 1] + lpe2[i, j])
    return z


def polymer_partition(field: StationaryField) -> np.ndarray:
    """log Z over [0, M] x [0, N]: boundary weights log rho on the axes, bulk
    weights log p_{x, x-e_j} across the edge (x - e_j, x)."""
    pc = field.backward_env.omega_e1
    return _polymer(np.log(field.rho_h), np.log(field.rho_v), np.log(pc), np.log1p(-pc))


# ---------------------------------------------------------------------------
# prefix laws

def conditioned_prefix_law(field, z, m: int) -> dict[str, float]:
    """Law of the first m steps given that the walk passes through z.

    Keys are step strings ("1" for e1, "2" for e2)."""
    z1, z2 = _point(z)
    if m < 0 or m > z1 + z2:
        raise ValidationError("prefix length must lie in [0, |z|]")
    p, _ = _forward_probs(field)
    tab = hit_prob_table(field, z)
    base = tab.log_p[0, 0]
    out: dict[str, float] = {}
    for steps in itertools.product("12", repeat=m):
        i = j = 0
        lw = 0.0
        ok = True
        for s in steps:
            if s == "1":
                lw += math.log(p[i, j]) if p[i, j] > 0 else -math.inf
                i += 1
            else:
                lw += math.log1p(-p[i, j]) if p[i, j] < 1 else -math.inf
                j += 1
            if i > z1 or j > z2:
                ok = False
                break
        if not ok:
            continue
        val = math.exp(lw + tab.log_p[i, j] - base)
        if val > 0:
            out["".join(steps)] = val
    return out


# ---------------------------------------------------------------------------
# ordering of hitting-probability ratios

@dataclass
class MonotonicityReport:
    checks: int
    violations: int
    worst: float  # largest amount by which an inequality failed (log scale)

    @property
    def ok(self) -> bool:
        return self.violations == 0


@njit(cache=True)
def _spread(p, a1, a2, out):
    # out[y] = log P_a(pass through y) for y >= a, -inf elsewhere
    m = out.shape[0]
    n = out.shape[1]
    for i in range(m):
        for j in range(n):
            out[i, j] = -math.inf
    out[a1, a2] = 0.0
    for i in range(a1, m):
        for j in range(a2, n):
            if i == a1 and j == a2:
                continue
            a = out[i - 1, j] + _logp(p[i - 1, j]) if i > a1 else -math.inf
            b = out[i, j - 1] + _logq(p[i, j - 1]) if j > a2 else -math.inf
            out[i, j] = _lae(a, b)


@njit(cache=True, inline="always")
def _excess(lo, hi):
    # amount by which lo <= hi fails, both in log scale
    if lo == -math.inf:
        return 0.0
    if hi == -math.inf:
        return math.inf
    return lo - hi


@njit(cache=True)
def _order_check(p, slack):
    m = p.shape[0]
    n = p.shape[1]
    fa = np.empty((m, n))
    f1 = np.empty((m, n))
    f2 = np.empty((m, n))
    checks = 0
    bad = 0
    worst = 0.0
    for a1 in range(m - 1):
        for a2 in range(n - 1):
            _spread(p, a1, a2, fa)
            _spread(p, a1 + 1, a2, f1)
            _spread(p, a1, a2 + 1, f2)
            for y1 in range(a1, m - 1):
                for y2 in range(a2, n - 1):
                    # shift a by e1: y+e2 <= y <= y+e1 ; shift a by e2: mirrored
                    for k in range(2):
                        if k == 0:
                            lo = f1[y1, y2 + 1] - fa[y1, y2 + 1]
                            mid = f1[y1, y2] - fa[y1, y2]
                            hi = f1[y1 + 1, y2] - fa[y1 + 1, y2]
                        else:
                            lo = f2[y1 + 1, y2] - fa[y1 + 1, y2]
                            mid = f2[y1, y2] - fa[y1, y2]
                            hi = f2[y1, y2 + 1] - fa[y1, y2 + 1]
                        checks += 2
                        d1 = _excess(lo, mid)
                        d2 = _excess(mid, hi)
                        if d1 > slack:
                            bad += 1
                        if d2 > slack:
                            bad += 1
                        worst = max(worst, d1, d2)
    return checks, bad, worst


def ratio_monotonicity_check(field, slack: float = 1e-12) -> MonotonicityReport:
    """Check, for all a <= y in the field,

    F(a+e1, y+e2)/F(a, y+e2) <= F(a+e1, y)/F(a, y) <= F(a+e1, y+e1)/F(a, y+e1)

    and the same with e1 and e2 exchanged, F being the hitting probability.
    """
    p, off = _forward_probs(field)
    if off != (0, 0):
        raise ValidationError("forward fields must start at the origin")
    checks, bad, worst = _order_check(np.ascontiguousarray(p), float(slack))
    return MonotonicityReport(int(checks), int(bad), float(worst))


@njit(cache=True)
def _exit_split(p, y1, y2, f, out1, out2):
    # out_k[x] = E_x[f(X_tau), X_tau on arm k] for the walk stopped on
    # {x1 = y1} or {x2 = y2}; arm 1 is the row x2 = y2, arm 2 the column x1 = y1
    for i in range(y1, -1, -1):
        for j in range(y2, -1, -1):
            if j == y2 and i < y1:
                out1[i, j] = f[i, j]
                out2[i, j] = 0.0
            elif i == y1 and j < y2:
                out1[i, j] = 0.0
                out2[i, j] = f[i, j]
            elif i == y1 and j == y2:
                out1[i, j] = 0.0
                out2[i, j] = 0.0
            else:
                pe = p[i, j]
                out1[i, j] = pe * out1[i + 1, j] + (1.0 - pe) * out1[i, j + 1]
                out2[i, j] = pe * out2[i + 1, j] + (1.0 - pe) * out2[i, j + 1]


def sandwich_check(field: StationaryField, a, v, slack: float = 1e-12) -> dict:
    """Sandwich of the hitting ratio F(a, v)/F(a+e1, v) between the split
    exit expectations of f(x) = rho_{x, y}, y = v + (1, 1), under the reflected
    environment. Also reports how far the two exit expectations from a sum
    away from rho_{a, y}."""
    a1, a2 = _point(a)
    v1, v2 = _point(v)
    y1, y2 = v1 + 1, v2 + 1
    if not (0 <= a1 and 0 <= a2 and a1 + 1 <= v1 and a2 <= v2 and y1 <= field.dims[0] and y2 <= field.dims[1]):
        raise ValidationError("need a + e1 <= v and v + (1,1) inside the field")
    p = field.omega_flipped
    f = np.zeros((y1 + 1, y2 + 1))
    for i in range(y1 + 1):
        f[i, y2] = math.exp(field.log_rho((i, y2), (y1, y2)))
    for j in range(y2 + 1):
        f[y1, j] = math.exp(field.log_rho((y1, j), (y1, y2)))
    e1 = np.empty_like(f)
    e2 = np.empty_like(f)
    _exit_split(p, y1, y2, f, e1, e2)
    tab = _hit_dp(p, v1, v2)
    mid = math.exp(tab[a1, a2] - tab[a1 + 1, a2])
    lo = e2[a1, a2] / e2[a1 + 1, a2]
    hi = e1[a1, a2] / e1[a1 + 1, a2]
    ok = lo <= mid * (1 + slack) and mid <= hi * (1 + slack)
    harm = abs((e1[a1, a2] + e2[a1, a2]) / math.exp(field.log_rho((a1, a2), (y1, y2))) - 1.0)
    return {"ok": bool(ok), "lower": lo, "ratio": mid, "upper": hi, "harmonic_residual": harm}
