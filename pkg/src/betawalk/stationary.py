"""Environments, the corner-flip involution and stationary ratio fields.

Lattice conventions used throughout the package (sites are (i, j)):

* ``rho_h[i, j]`` is the ratio on the edge (i, j) -> (i+1, j), shape (M, N+1)
* ``rho_v[i, j]`` is the ratio on the edge (i, j) -> (i, j+1), shape (M+1, N)
* ``omega_flipped[i, j]`` is the e1-weight of the reflected environment at
  (i, j), shape (M, N)
* the backward weights live on the full (M+1, N+1) grid; only i, j >= 1 is used

Ratios on e1-edges lie in (0, 1) and ratios on e2-edges exceed 1 to the
right of the LLN direction; the left branch is the transposed picture with
alpha and beta exchanged.
"""
from __future__ import annotations

import enum
import io
import math
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from numba import njit

from .errors import DomainError, NumericDegeneracyError, ValidationError
from .rng import ROLE_BOUNDARY, ROLE_BULK, ROLE_ENV, ROLE_PATH, key_for, site_uniform
from .specfun import Branch, ModelParams, _beta_ppf

__all__ = [
    "EnvField",
    "StationaryField",
    "TransitionField",
    "Direction",
    "StreamResult",
    "involution_flip",
    "sample_env",
    "build_stationary",
    "stream_stationary",
    "rho_point",
    "log_rho_point",
    "doob_forward",
    "doob_backward",
    "kappa_from_increments",
    "write_field",
    "read_field",
]

_TINY = 2.2250738585072014e-308
_ONE_MINUS = 1.0 - 2.0 ** -53
_ONE_PLUS = 1.0 + 2.0 ** -52
_SLACK = 1e-12


class Direction(str, enum.Enum):
    FORWARD = "forward"
    BACKWARD = "backward"


def _dims(dims) -> tuple[int, int]:
    try:
        m, n = (int(d) for d in dims)
    except Exception:
        raise ValidationError(f"dims must be a pair of integers, got {dims!r}") from None
    if m < 1 or n < 1:
        raise ValidationError("dims must be positive")
    return m, n


@dataclass
class EnvField:
    """i.i.d. Beta(alpha, beta) e1-weights on the sites [0, M] x [0, N]."""

    params: ModelParams
    dims: tuple[int, int]
    omega_e1: np.ndarray
    seed: int
    offset: tuple[int, int] = (0, 0)

    @property
    def omega_e2(self) -> np.ndarray:
        return 1.0 - self.omega_e1

    def window(self, lo: tuple[int, int], dims: tuple[int, int]) -> "EnvField":
        """Sub-field with its own origin at `lo`."""
        m, n = _dims(dims)
        i0, j0 = lo
        w = self.omega_e1[i0:i0 + m + 1, j0:j0 + n + 1]
        if w.shape != (m + 1, n + 1):
            raise ValidationError("window exceeds the field")
        return EnvField(self.params, (m, n), w.copy(), self.seed,
                        (self.offset[0] + i0, self.offset[1] + j0))


@dataclass
class TransitionField:
    """Nearest-neighbour transition probabilities; p_e1[k, l] belongs to site
    (k + offset[0], l + offset[1]). Forward fields step by +e1/+e2, backward
    fields by -e1/-e2."""

    p_e1: np.ndarray
    direction: Direction
    offset: tuple[int, int] = (0, 0)

    @property
    def dims(self) -> tuple[int, int]:
        return (self.p_e1.shape[0] + self.offset[0] - 1, self.p_e1.shape[1] + self.offset[1] - 1)


@dataclass
class StationaryField:
    params: ModelParams
    lam: float
    branch: Branch
    dims: tuple[int, int]
    rho_h: np.ndarray
    rho_v: np.ndarray
    omega_flipped: np.ndarray
    backward_env: EnvField
    seed: int
    degenerate_count: int = 0

    def log_rho(self, x, y) -> float:
        return log_rho_point(self, x, y)

    def rho(self, x, y) -> float:
        return rho_point(self, x, y)


# ---------------------------------------------------------------------------
# the involution

@njit(cache=True, inline="always")
def _flip(u, v, w):
    s = w * v + (1.0 - w) * u
    return s / v, s / u, u * (v - 1.0) / (v - u)


def involution_flip(u, v, w):
    """(U, V, W) -> (U', V', W') on (0,1) x (1,inf) x (0,1); an involution."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    w = np.asarray(w, dtype=float)
    if np.any(~((u > 0) & (u < 1))) or np.any(~(v > 1)) or np.any(~((w > 0) & (w < 1))):
        raise DomainError("need U in (0,1), V > 1 and W in (0,1)")
    s = w * v + (1.0 - w) * u
    out = (s / v, s / u, u * (v - 1.0) / (v - u))
    if out[0].ndim == 0:
        return tuple(float(o) for o in out)
    return out


def kappa_from_increments(b1, b2):
    """kappa = (e^{b2} - 1)/(e^{b2} - e^{b1}) for Busemann-type increments."""
    b1 = np.asarray(b1, dtype=float)
    b2 = np.asarray(b2, dtype=float)
    num = np.expm1(b2)
    den = num - np.expm1(b1)
    if np.any(np.abs(den) < 1e-300):
        raise NumericDegeneracyError("e^{b2} - e^{b1} vanishes")
    k = num / den
    return float(k) if k.ndim == 0 else k


# ---------------------------------------------------------------------------
# environments

@njit(cache=True)
def _fill_env(out, key, off_i, off_j, a, b):
    for i in range(out.shape[0]):
        for j in range(out.shape[1]):
            out[i, j] = _beta_ppf(site_uniform(key, i + off_i, j + off_j), a, b)


@njit(cache=True, inline="always")
def _clamp01(x):
    # force a beta quantile into the open unit interval; flags clamping
    if x <= 0.0:
        return _TINY, 1
    if x >= 1.0:
        return _ONE_MINUS, 1
    return x, 0


def sample_env(params: ModelParams, dims, seed: int, offset: tuple[int, int] = (0, 0),
               role: int = ROLE_ENV) -> EnvField:
    """Site (i, j) receives beta_inv_cdf(u(seed, i + offset, j + offset))."""
    m, n = _dims(dims)
    out = np.empty((m + 1, n + 1))
    _fill_env(out, key_for(seed, role), int(offset[0]), int(offset[1]), params.alpha, params.beta)
    bad = (out <= 0) | (out >= 1)
    if np.any(bad):
        out = np.clip(out, _TINY, _ONE_MINUS)
    return EnvField(params, (m, n), out, int(seed), (int(offset[0]), int(offset[1])))


# ---------------------------------------------------------------------------
# builders; everything runs in a "frame" where the field looks like the right
# branch with parameters (a, b). For the left branch the frame is the
# transpose with (a, b) = (beta, alpha).

@njit(cache=True, inline="always")
def _bnd_h(key, swap, i, a, b, lam):
    # ratio on the frame e1-axis edge (i-1, 0) -> (i, 0)
    if swap:
        u = site_uniform(key, 0, i)
    else:
        u = site_uniform(key, i, 0)
    return _clamp01(_beta_ppf(u, a + lam, b))


@njit(cache=True, inline="always")
def _bnd_v(key, swap, j, a, b, lam):
    # ratio on the frame e2-axis edge (0, j-1) -> (0, j)
    if swap:
        u = site_uniform(key, j, 0)
    else:
        u = site_uniform(key, 0, j)
    x, c = _clamp01(_beta_ppf(u, lam, a))
    r = 1.0 / x
    if r <= 1.0:
        return _ONE_PLUS, 1
    return r, c


@njit(cache=True, inline="always")
def _bulk(key, swap, i, j, a, b):
    # frame backward e1-weight at (i, j)
    if swap:
        x, _ = _clamp01(_beta_ppf(site_uniform(key, j, i), b, a))
        return 1.0 - x
    x, _ = _clamp01(_beta_ppf(site_uniform(key, i, j), a, b))
    return x


@njit(cache=True, inline="always")
def _legal(u2, v2, w2):
    """Clamp flip outputs into their ranges. Returns (u2, v2, w2, n_clamped, hard)."""
    c = 0
    hard = False
    if not (u2 < 1.0):
        hard = hard or u2 - 1.0 > _SLACK
        u2 = _ONE_MINUS
        c += 1
    elif not (u2 > 0.0):
        hard = True
        u2 = _TINY
        c += 1
    if not (v2 > 1.0):
        hard = hard or 1.0 - v2 > _SLACK
        v2 = _ONE_PLUS
        c += 1
    elif not (v2 < math.inf):
        hard = True
    if not (w2 > 0.0):
        hard = hard or w2 < -_SLACK
        w2 = _TINY
        c += 1
    elif not (w2 < 1.0):
        hard = hard or w2 - 1.0 > _SLACK
        w2 = _ONE_MINUS
        c += 1
    return u2, v2, w2, c, hard


@njit(cache=True)
def _build_frame(a, b, lam, kb, kw, swap, rho_h, rho_v, omega, wf):
    """Full build in the frame. Fills boundary, bulk weights (wf) and flips.

    Returns the number of clamped values, or -1 on a hard degeneracy."""
    m = rho_h.shape[0]
    n = rho_v.shape[1]
    count = 0
    for i in range(1, m + 1):
        r, c = _bnd_h(kb, swap, i, a, b, lam)
        rho_h[i - 1, 0] = r
        count += c
    for j in range(1, n + 1):
        r, c = _bnd_v(kb, swap, j, a, b, lam)
        rho_v[0, j - 1] = r
        count += c
    for i in range(1, m + 1):
        for j in range(1, n + 1):
            w = _bulk(kw, swap, i, j, a, b)
            wf[i, j] = w
            u2, v2, w2 = _flip(rho_h[i - 1, j - 1], rho_v[i - 1, j - 1], w)
            u2, v2, w2, c, hard = _legal(u2, v2, w2)
            if hard:
                return -1
            count += c
            rho_h[i - 1, j] = u2
            rho_v[i, j - 1] = v2
            omega[i - 1, j - 1] = w2
    return count


def _frame(params: ModelParams, branch: Branch):
    if branch is Branch.LEFT:
        return params.beta, params.alpha, True
    return params.alpha, params.beta, False


def build_stationary(params: ModelParams, lam: float, branch, dims, seed: int) -> StationaryField:
    """Stationary ratio field on [0, M] x [0, N] by corner flips from the axes."""
    branch = Branch.parse(branch)
    m, n = _dims(dims)
    if not (lam > 0):
        raise DomainError("lambda must be positive")
    if branch is Branch.AT_LLN and not math.isinf(lam):
        raise DomainError("the LLN branch requires lambda = inf")
    bulk = sample_env(params, (m, n), seed, role=ROLE_BULK)
    if math.isinf(lam):
        return StationaryField(params, math.inf, Branch.AT_LLN, (m, n), np.ones((m, n + 1)),
                               np.ones((m + 1, n)), bulk.omega_e1[1:, 1:].copy(), bulk, int(seed), 0)
    a, b, swap = _frame(params, branch)
    fm, fn = (n, m) if swap else (m, n)
    rh = np.empty((fm, fn + 1))
    rv = np.empty((fm + 1, fn))
    om = np.empty((fm, fn))
    wf = np.zeros((fm + 1, fn + 1))
    count = _build_frame(a, b, float(lam), key_for(seed, ROLE_BOUNDARY), key_for(seed, ROLE_BULK), swap,
                         rh, rv, om, wf)
    if count < 0:
        raise NumericDegeneracyError("a flipped ratio left its legal interval")
    if swap:
        rh, rv, om = rv.T.copy(), rh.T.copy(), 1.0 - om.T
    return StationaryField(params, float(lam), branch, (m, n), rh, rv, om, bulk, int(seed), int(count))


# --- streaming over antidiagonals

@njit(cache=True, nogil=True)
def _stream(a, b, lam, kb, kw, swap, imax, jmax, kmax,
            tgt_m, tgt_n, out_logrho,
            walk, kp, walk_times, out_pos,
            rec_h, rec_v, rec_om):
    """Sweep antidiagonals s = 1..kmax inside [0, imax] x [0, jmax].

    Accumulates log rho_{0, (m_t, n_t)} for each target and optionally runs
    one forward Doob walk from the origin, lagging two antidiagonals behind
    the sweep. Returns the number of clamped values, -1 on hard failure and
    -2 if the walk left the swept region.
    """
    h = np.empty(imax + 2)
    v = np.empty(imax + 2)
    hn = np.empty(imax + 2)
    vn = np.empty(imax + 2)
    count = 0
    hpre = 0.0
    ntg = tgt_m.shape[0]
    for t in range(ntg):
        out_logrho[t] = 0.0
    record = rec_h.shape[0] > 0
    xa = 0
    tw = 0
    nxt = 0
    nwalk = walk_times.shape[0]
    for s in range(1, kmax + 1):
        ilo = max(0, s - jmax)
        ihi = min(s, imax)
        if ilo > ihi:
            break
        for i in range(ilo, ihi + 1):
            j = s - i
            if j == 0:
                r, c = _bnd_h(kb, swap, i, a, b, lam)
                count += c
                hn[i] = r
                hpre += math.log(r)
                for t in range(ntg):
                    if tgt_m[t] == i:
                        out_logrho[t] += hpre
                if record:
                    rec_h[i - 1, 0] = r
            elif i == 0:
                r, c = _bnd_v(kb, swap, j, a, b, lam)
                count += c
                vn[0] = r
                if record:
                    rec_v[0, j - 1] = r
            else:
                w = _bulk(kw, swap, i, j, a, b)
                uu = h[i]
                u2, v2, w2 = _flip(uu, v[i - 1], w)
                u2, v2, w2, c, hard = _legal(u2, v2, w2)
                if hard:
                    return -1
                count += c
                hn[i] = u2
                vn[i] = v2
                if record:
                    rec_h[i - 1, j] = u2
                    rec_v[i, j - 1] = v2
                    rec_om[i - 1, j - 1] = w2
                if walk and nxt < nwalk and tw == s - 2 and xa == i - 1:
                    p = w2 / uu
                    if site_uniform(kp, tw, 0) < p:
                        xa += 1
                    tw += 1
                    while nxt < nwalk and walk_times[nxt] == tw:
                        out_pos[nxt] = xa
                        nxt += 1
            if j >= 1:
                for t in range(ntg):
                    if tgt_m[t] == i and j <= tgt_n[t]:
                        out_logrho[t] += math.log(vn[i])
        h, hn = hn, h
        v, vn = vn, v
    if walk and nxt < nwalk:
        return -2
    return count


@dataclass
class StreamResult:
    log_rho: np.ndarray
    positions: np.ndarray
    degenerate_count: int
    rho_h: np.ndarray | None = None
    rho_v: np.ndarray | None = None
    omega_flipped: np.ndarray | None = None


def _empty2():
    return np.empty((0, 0))


def stream_stationary(params: ModelParams, lam: float, branch, seed: int, *,
                      targets=(), walk_times=(), dims=None, record: bool = False) -> StreamResult:
    """Build a stationary field antidiagonal by antidiagonal in O(M + N) memory.

    targets: lattice points v whose log rho_{0,v} is returned.
    walk_times: increasing times at which the e1-coordinate of one forward
    Doob walk from the origin is reported (the walk uses the same seed).
    dims: bounding box (M, N); defaults to the smallest box holding the
    targets and the walk's reach.
    record: also return the full arrays (for testing against the full builder).
    """
    branch = Branch.parse(branch)
    if branch is Branch.AT_LLN or math.isinf(lam):
        raise DomainError("streaming is implemented for finite lambda only")
    tg = np.array(targets, dtype=np.int64).reshape(-1, 2)
    wt = np.array(walk_times, dtype=np.int64)
    if wt.size and (np.any(np.diff(wt) <= 0) or wt[0] < 1):
        raise ValidationError("walk times must be positive and increasing")
    reach = int(wt[-1]) + 1 if wt.size else 0
    if dims is None:
        m = max([reach] + [int(t[0]) for t in tg] + [1])
        n = max([reach] + [int(t[1]) for t in tg] + [1])
    else:
        m, n = _dims(dims)
    if np.any(tg < 0) or (tg.size and (tg[:, 0].max() > m or tg[:, 1].max() > n)):
        raise ValidationError("target outside the field")
    a, b, swap = _frame(params, branch)
    fm, fn = (n, m) if swap else (m, n)
    ftg = tg[:, ::-1].copy() if swap else tg.copy()
    kmax = fm + fn
    if wt.size and not ftg.size:
        kmax = min(kmax, reach + 1)
    if record:
        rh, rv, om = np.empty((fm, fn + 1)), np.empty((fm + 1, fn)), np.empty((fm, fn))
    else:
        rh = rv = om = _empty2()
    logrho = np.zeros(len(ftg))
    pos = np.zeros(wt.size, dtype=np.int64)
    count = _stream(a, b, float(lam), key_for(seed, ROLE_BOUNDARY), key_for(seed, ROLE_BULK), swap,
                    fm, fn, kmax, np.ascontiguousarray(ftg[:, 0]), np.ascontiguousarray(ftg[:, 1]), logrho,
                    bool(wt.size), key_for(seed, ROLE_PATH), wt, pos, rh, rv, om)
    if count == -1:
        raise NumericDegeneracyError("a flipped ratio left its legal interval")
    if count == -2:
        raise ValidationError("walk left the swept region")
    if swap:
        # the frame's e1-coordinate is the e2-coordinate of the lattice
        pos = wt - pos
        if record:
            rh, rv, om = rv.T.copy(), rh.T.copy(), 1.0 - om.T
    res = StreamResult(logrho, pos, int(count))
    if record:
        res.rho_h, res.rho_v, res.omega_flipped = rh, rv, om
    return res


# ---------------------------------------------------------------------------
# point-to-point ratios and Doob transforms

def _site(x, dims) -> tuple[int, int]:
    i, j = (int(c) for c in x)
    if not (0 <= i <= dims[0] and 0 <= j <= dims[1]):
        raise ValidationError(f"point {x!r} outside the field")
    return i, j


def log_rho_point(f: StationaryField, x, y) -> float:
    """log rho_{x,y} along the staircase x -> (y1, x2) -> y."""
    i0, j0 = _site(x, f.dims)
    i1, j1 = _site(y, f.dims)
    lh = np.log(f.rho_h[min(i0, i1):max(i0, i1), j0]).sum()
    lv = np.log(f.rho_v[i1, min(j0, j1):max(j0, j1)]).sum()
    return float((lh if i1 >= i0 else -lh) + (lv if j1 >= j0 else -lv))


def rho_point(f: StationaryField, x, y) -> float:
    return math.exp(log_rho_point(f, x, y))


def doob_forward(f: StationaryField) -> TransitionField:
    """pi_{x,x+e1} = omega^lambda_{x,x+e1} / rho_{x,x+e1} on [0, M-1] x [0, N-1]."""
    m, n = f.dims
    p = np.clip(f.omega_flipped / f.rho_h[:, :n], 0.0, 1.0)
    return TransitionField(p, Direction.FORWARD, (0, 0))


def doob_backward(f: StationaryField) -> TransitionField:
    """pi_{x,x-e1} = p_{x,x-e1} / rho_{x-e1,x} on [1, M] x [1, N]."""
    m, n = f.dims
    p = np.clip(f.backward_env.omega_e1[1:, 1:] / f.rho_h[:, 1:], 0.0, 1.0)
    return TransitionField(p, Direction.BACKWARD, (1, 1))


def harmonic_residuals(f: StationaryField) -> tuple[float, float]:
    """Max deviations from 1 of the forward and backward averaging identities."""
    m, n = f.dims
    om = f.omega_flipped
    fwd = om / f.rho_h[:, :n] + (1.0 - om) / f.rho_v[:m, :]
    pc = f.backward_env.omega_e1[1:, 1:]
    bwd = pc / f.rho_h[:, 1:] + (1.0 - pc) / f.rho_v[1:, :]
    return float(np.max(np.abs(fwd - 1.0))), float(np.max(np.abs(bwd - 1.0)))


def plaquette_residual(f: StationaryField) -> float:
    """Max relative failure of rho(x, x+e1) rho(x+e1, x+e1+e2) = rho(x, x+e2) rho(x+e2, x+e1+e2)."""
    m, n = f.dims
    lhs = f.rho_h[:, :n] * f.rho_v[1:, :]
    rhs = f.rho_v[:m, :] * f.rho_h[:, 1:]
    return float(np.max(np.abs(lhs / rhs - 1.0)))


# ---------------------------------------------------------------------------
# binary dump: 64-byte header, then rho_h, rho_v, omega_flipped and the
# backward weights as little-endian float64 in row-major order

_MAGIC = b"BWRE"
_VERSION = 1
_HEADER = struct.Struct("<4sIdddIIIQ12x")
_BRANCH_CODE = {Branch.RIGHT: 0, Branch.LEFT: 1, Branch.AT_LLN: 2}


def write_field(path, f: StationaryField) -> None:
    head = _HEADER.pack(_MAGIC, _VERSION, f.params.alpha, f.params.beta, f.lam, _BRANCH_CODE[f.branch],
                        f.dims[0], f.dims[1], int(f.seed) & ((1 << 64) - 1))
    with open(path, "wb") as fh:
        fh.write(head)
        for arr in (f.rho_h, f.rho_v, f.omega_flipped, f.backward_env.omega_e1):
            fh.write(np.ascontiguousarray(arr, dtype="<f8").tobytes())


def read_field(path) -> StationaryField:
    data = Path(path).read_bytes()
    if len(data) < _HEADER.size:
        raise ValidationError("truncated field file")
    magic, ver, al, be, lam, code, m, n, seed = _HEADER.unpack_from(data)
    if magic != _MAGIC or ver != _VERSION:
        raise ValidationError("not a field dump")
    branch = {v: k for k, v in _BRANCH_CODE.items()}[code]
    buf = io.BytesIO(data[_HEADER.size:])
    shapes = [(m, n + 1), (m + 1, n), (m, n), (m + 1, n + 1)]
    arrs = []
    for shp in shapes:
        k = shp[0] * shp[1] * 8
        raw = buf.read(k)
        if len(raw) != k:
            raise ValidationError("truncated field file")
        arrs.append(np.frombuffer(raw, dtype="<f8").reshape(shp).copy())
    params = ModelParams(al, be)
    env = EnvField(params, (m, n), arrs[3], int(seed))
    return StationaryField(params, lam, branch, (m, n), arrs[0], arrs[1], arrs[2], env, int(seed))
