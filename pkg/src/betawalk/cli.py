"""Command-line entry point: ``betawalk <command> [flags]``."""
from __future__ import annotations

import argparse
import json
import math
import secrets
import sys
import time
from dataclasses import asdict, dataclass, fields
from pathlib import Path

import numpy as np

from . import __version__
from .duality import (DualPoint, iq_star, lambda_of_tilt, lambda_of_xi, rate_ia, rate_iq, tilt_of_lambda,
                      xi_of_lambda)
from .errors import BetaWalkError, ConvergenceError, DomainError, NumericDegeneracyError, ValidationError
from .experiments import (ExperimentReport, KSResult, _rseed, busemann_samples, format_value, ks_test,
                          log_rho_variance_scan, resolve_threads, variance_identity_experiment,
                          wandering_experiment)
from .rng import as_seed
from .specfun import Branch, ModelParams, beta_cdf
from .stationary import build_stationary, harmonic_residuals, plaquette_residual, stream_stationary, write_field

COMMANDS = ("rate", "dual", "stationary", "simulate", "variance-id", "exponent", "busemann", "selftest")
EXIT_OK, EXIT_INPUT, EXIT_NUMERIC, EXIT_CHECK = 0, 2, 3, 4
STOCHASTIC = ("stationary", "simulate", "variance-id", "exponent", "busemann")
DUAL_KEYS = ("alpha", "beta", "xi1", "lambda", "branch", "tilt", "iq", "ia", "iq_star")


@dataclass
class RunConfig:
    command: str
    alpha: float | None = None
    beta: float | None = None
    xi1: float | None = None
    lam: float | None = None
    tilt: float | None = None
    branch: str = "right"
    dims: list[int] | None = None
    n: int | None = None
    n_list: list[int] | None = None
    replicas: int | None = None
    seed: int | None = None
    output: str | None = None
    format: str = "json"
    threads: int | None = None
    quick: bool = False
    observable: str = "log-rho"

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        known = {f.name for f in fields(cls)}
        extra = set(d) - known
        if extra:
            raise ValidationError(f"unknown configuration keys: {sorted(extra)}")
        d = dict(d)
        for key in ("dims", "n_list"):
            if d.get(key) is not None:
                d[key] = _int_list(d[key])
        return cls(**d)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "RunConfig":
        return cls.from_dict(json.loads(text))

    def validate(self) -> None:
        if self.command not in COMMANDS:
            raise ValidationError(f"unknown command {self.command!r}")
        if self.format not in ("csv", "json"):
            raise ValidationError("format must be csv or json")
        if self.observable not in ("log-rho", "wandering"):
            raise ValidationError("observable must be log-rho or wandering")
        Branch.parse(self.branch)
        if self.command in ("rate", "dual", "stationary", "simulate", "variance-id", "exponent", "busemann"):
            if self.alpha is None or self.beta is None:
                raise ValidationError("--alpha and --beta are required")
            ModelParams(self.alpha, self.beta)
            given = [k for k in ("xi1", "lam", "tilt") if getattr(self, k) is not None]
            if len(given) != 1:
                raise ValidationError("give exactly one of --xi1, --lambda, --tilt")
        if self.replicas is not None and self.replicas < 0:
            raise ValidationError("--replicas must be non-negative")
        if self.threads is not None and self.threads < 1:
            raise ValidationError("--threads must be positive")


def _int_list(x) -> list[int]:
    if isinstance(x, str):
        x = [p for p in x.replace(" ", "").split(",") if p]
    try:
        return [int(v) for v in x]
    except (TypeError, ValueError):
        raise ValidationError(f"expected a comma-separated list of integers, got {x!r}") from None


# ---------------------------------------------------------------------------
# duality input

def resolve_dual(cfg: RunConfig) -> tuple[ModelParams, DualPoint]:
    """Dual point from exactly one of xi1, lambda (with branch) or a signed tilt."""
    p = ModelParams(cfg.alpha, cfg.beta)
    if cfg.xi1 is not None:
        return p, lambda_of_xi(p, cfg.xi1)
    if cfg.lam is not None:
        lam = float(cfg.lam)
        if math.isinf(lam):
            return p, DualPoint(math.inf, Branch.AT_LLN, xi_of_lambda(p, math.inf, Branch.AT_LLN), 0.0)
        br = Branch.parse(cfg.branch)
        if br is Branch.AT_LLN:
            raise ValidationError("the at_lln branch needs --lambda inf")
        return p, DualPoint(lam, br, xi_of_lambda(p, lam, br), float(tilt_of_lambda(p, lam)))
    t = float(cfg.tilt)
    dp = lambda_of_tilt(p, abs(t))
    if t < 0:
        dp = DualPoint(dp.lam, Branch.LEFT, xi_of_lambda(p, dp.lam, Branch.LEFT), dp.tilt)
    return p, dp


def e1_slope(dp: DualPoint) -> float:
    """Slope t of the tilt t e1 dual to the point (the tilt acts along e2 on the left branch)."""
    if dp.branch is Branch.AT_LLN:
        return 0.0
    return dp.tilt if dp.branch is Branch.RIGHT else -dp.tilt


def dual_record(p: ModelParams, dp: DualPoint) -> dict:
    x = dp.xi.xi1
    t1 = e1_slope(dp)
    return {
        "alpha": p.alpha,
        "beta": p.beta,
        "xi1": x,
        "lambda": dp.lam,
        "branch": dp.branch.value,
        "tilt": t1,
        "iq": float(rate_iq(p, x)),
        "ia": float(rate_ia(p, x)),
        "iq_star": float(iq_star(p, t1)),
    }


# ---------------------------------------------------------------------------
# commands; each returns (report, exit code)

def _need(cfg: RunConfig, key: str, default=None):
    v = getattr(cfg, key)
    if v is None:
        if default is None:
            raise ValidationError(f"--{key.replace('_', '-')} is required for {cfg.command}")
        return default
    return v


def _finite_dual(cfg: RunConfig):
    p, dp = resolve_dual(cfg)
    if dp.branch is Branch.AT_LLN:
        raise ValidationError(f"{cfg.command} needs a direction off the LLN velocity")
    return p, dp


def _record_report(name: str, rec: dict) -> ExperimentReport:
    rep = ExperimentReport(name, {k: rec[k] for k in ("alpha", "beta")}, 0)
    rep.columns = list(rec)
    rep.rows = [[rec[k] for k in rec]]
    return rep


def cmd_rate(cfg: RunConfig):
    p, dp = resolve_dual(cfg)
    rec = dual_record(p, dp)
    return _record_report("rate", {k: rec[k] for k in ("alpha", "beta", "xi1", "lambda", "branch", "iq", "ia")}), 0


def cmd_dual(cfg: RunConfig):
    p, dp = resolve_dual(cfg)
    return _record_report("dual", dual_record(p, dp)), 0


def cmd_stationary(cfg: RunConfig):
    p, dp = _finite_dual(cfg)
    dims = _need(cfg, "dims", [64, 64])
    if len(dims) != 2:
        raise ValidationError("--dims takes M,N")
    f = build_stationary(p, dp.lam, dp.branch, tuple(dims), cfg.seed)
    fwd, bwd = harmonic_residuals(f)
    rep = ExperimentReport("stationary", {"alpha": p.alpha, "beta": p.beta, "lambda": dp.lam,
                                          "branch": dp.branch.value, "dims": list(dims)}, 1)
    rep.point_estimates = {"forward_harmonic_residual": (fwd, 0.0), "backward_harmonic_residual": (bwd, 0.0),
                           "plaquette_residual": (plaquette_residual(f), 0.0),
                           "degenerate_count": (float(f.degenerate_count), 0.0)}
    rep.columns = ["statistic", "value"]
    rep.rows = [[k, v[0]] for k, v in rep.point_estimates.items()]
    if cfg.output:
        dump = Path(cfg.output).with_suffix(".bwre")
        write_field(dump, f)
        rep.notes.append(f"field written to {dump}")
    return rep, 0


def cmd_simulate(cfg: RunConfig):
    p, dp = _finite_dual(cfg)
    ns = _need(cfg, "n_list", [_need(cfg, "n", 256)])
    m = _need(cfg, "replicas", 100)
    rep = ExperimentReport("simulate", {"alpha": p.alpha, "beta": p.beta, "lambda": dp.lam,
                                        "branch": dp.branch.value, "N_list": ns}, m)
    rep.columns = ["replica", "N", "x1", "x2"]
    for r in range(m):
        pos = stream_stationary(p, dp.lam, dp.branch, _rseed(cfg.seed, r), walk_times=ns).positions
        for n, x in zip(ns, pos):
            rep.rows.append([r, n, int(x), n - int(x)])
    return rep, 0


def cmd_variance_id(cfg: RunConfig):
    p, dp = _finite_dual(cfg)
    if dp.branch is not Branch.RIGHT:
        raise ValidationError("the variance identity is stated for the right branch")
    rep = variance_identity_experiment(p, dp.lam, _need(cfg, "n", 64), _need(cfg, "replicas", 1000), cfg.seed,
                                       threads=cfg.threads)
    return rep, 0


def cmd_exponent(cfg: RunConfig):
    p, dp = _finite_dual(cfg)
    ns = _need(cfg, "n_list", [256, 512, 1024])
    m = _need(cfg, "replicas", 500)
    if cfg.observable == "wandering":
        return wandering_experiment(p, dp.xi.xi1, ns, m, cfg.seed, threads=cfg.threads), 0
    return log_rho_variance_scan(p, dp.lam, ns, m, cfg.seed, branch=dp.branch, threads=cfg.threads), 0


def cmd_busemann(cfg: RunConfig):
    p, dp = _finite_dual(cfg)
    n = _need(cfg, "n", 512)
    m = _need(cfg, "replicas", 2000)
    b = busemann_samples(p, dp.xi.xi1, n, m, cfg.seed)
    rep = ExperimentReport("busemann", {"alpha": p.alpha, "beta": p.beta, "xi1": dp.xi.xi1, "lambda": dp.lam,
                                        "branch": dp.branch.value, "N": n}, m)
    rep.columns = ["replica", "busemann_0_e1"]
    rep.rows = [[r, float(x)] for r, x in enumerate(b)]
    if m >= 8:
        if dp.branch is Branch.RIGHT:
            d, pv = ks_test(np.exp(b), lambda x: beta_cdf(x, p.alpha + dp.lam, p.beta))
            null = "exp(B) ~ Beta(a+l, b)"
        else:
            d, pv = ks_test(np.exp(-b), lambda x: beta_cdf(x, dp.lam, p.beta))
            null = "exp(-B) ~ Beta(l, b)"
        rep.tests["busemann_ks"] = KSResult(d, pv, pv > 1e-3, null)
    if m >= 2:
        rep.point_estimates["mean"] = (float(b.mean()), float(b.std(ddof=1) / math.sqrt(m)))
    return rep, 0


def cmd_selftest(cfg: RunConfig):
    from .selftest import run_selftest
    rep, ok = run_selftest(quick=cfg.quick)
    return rep, (EXIT_OK if ok else EXIT_CHECK)


HANDLERS = {
    "rate": cmd_rate, "dual": cmd_dual, "stationary": cmd_stationary, "simulate": cmd_simulate,
    "variance-id": cmd_variance_id, "exponent": cmd_exponent, "busemann": cmd_busemann, "selftest": cmd_selftest,
}


# ---------------------------------------------------------------------------
# output

def render(rep: ExperimentReport, fmt: str) -> str:
    if fmt == "csv":
        return rep.to_csv()
    if rep.name in ("rate", "dual") and rep.rows:
        rec = {k: _jsonable(v) for k, v in zip(rep.columns, rep.rows[0])}
        return json.dumps(rec, indent=2) + "\n"
    return rep.to_json() + "\n"


def _jsonable(v):
    if isinstance(v, float) and math.isinf(v):
        return "inf"
    return v


def emit(rep: ExperimentReport, cfg: RunConfig, wall: float) -> None:
    text = render(rep, cfg.format)
    if cfg.output is None:
        sys.stdout.write(text)
        return
    out = Path(cfg.output)
    try:
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_text(text)
        manifest = {"config": cfg.to_dict(), "seed": cfg.seed, "version": __version__, "wall_time_s": wall,
                    "argv": sys.argv[1:]}
        Path(str(out) + ".manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    except OSError as e:
        raise OSError(f"cannot write {out}: {e.strerror or e}") from e


# ---------------------------------------------------------------------------
# argument parsing

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="betawalk", description="Beta random walk in a random environment.")
    ap.add_argument("--version", action="version", version=f"betawalk {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", help="JSON configuration file; flags override it")
        sp.add_argument("--alpha", type=float)
        sp.add_argument("--beta", type=float)
        g = sp.add_mutually_exclusive_group()
        g.add_argument("--xi1", type=float)
        g.add_argument("--lambda", dest="lam", type=float)
        g.add_argument("--tilt", type=float, help="signed e1 slope; negative selects the left branch")
        sp.add_argument("--branch", choices=["right", "left", "at_lln"])
        sp.add_argument("--dims", type=_int_list)
        sp.add_argument("--n", type=int)
        sp.add_argument("--n-list", dest="n_list", type=_int_list)
        sp.add_argument("--replicas", type=int)
        sp.add_argument("--seed", type=int)
        sp.add_argument("--output", "-o")
        sp.add_argument("--format", choices=["csv", "json"])
        sp.add_argument("--threads", type=int)
        sp.add_argument("--observable", choices=["log-rho", "wandering"])
        sp.add_argument("--quick", action="store_true", default=None)
    return ap


def config_from_args(argv: list[str] | None = None) -> RunConfig:
    ns = build_parser().parse_args(argv)
    base: dict = {}
    if ns.config:
        try:
            base = json.loads(Path(ns.config).read_text())
        except OSError as e:
            raise ValidationError(f"cannot read config {ns.config}: {e.strerror or e}") from None
        except json.JSONDecodeError as e:
            raise ValidationError(f"config {ns.config} is not valid JSON: {e}") from None
        base.pop("command", None)
    flags = {k: v for k, v in vars(ns).items() if v is not None and k != "config"}
    if any(k in flags for k in ("xi1", "lam", "tilt")):
        for k in ("xi1", "lam", "tilt"):
            base.pop(k, None)
    merged = {**base, **flags}
    if "format" not in merged and str(merged.get("output", "")).endswith(".csv"):
        merged["format"] = "csv"
    cfg = RunConfig.from_dict(merged)
    if cfg.seed is None:
        cfg.seed = secrets.randbits(63)
        if cfg.command in STOCHASTIC:
            print(f"seed: {cfg.seed}", file=sys.stderr)
    cfg.seed = int(as_seed(cfg.seed))
    cfg.threads = resolve_threads(cfg.threads)
    return cfg


def run(cfg: RunConfig) -> int:
    t0 = time.perf_counter()
    cfg.validate()
    rep, code = HANDLERS[cfg.command](cfg)
    emit(rep, cfg, time.perf_counter() - t0)
    return code


def main(argv: list[str] | None = None) -> int:
    try:
        cfg = config_from_args(argv)
        return run(cfg)
    except (ValidationError, DomainError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INPUT
    except (ConvergenceError, NumericDegeneracyError, ArithmeticError) as e:
        print(f"numeric failure: {e}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INPUT
    except BetaWalkError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
