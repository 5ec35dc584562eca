import json
import math
import warnings

import numpy as np
import pytest
from scipy import stats

from betawalk.errors import ValidationError
from betawalk.experiments import (ExperimentReport, Fit, KSResult, busemann_proxies, distribution_suite,
                                  fit_loglog, format_value, identity_holds, involution_tests, ks_test,
                                  ldp_proxy, lln_check, log_rho_variance_scan, mean_se, resolve_threads,
                                  var_se, variance_identity_experiment, wandering_experiment)
from betawalk.specfun import Branch, ModelParams

U = ModelParams(1.0, 1.0)


# --- statistics helpers

def test_ks_calibration():
    rng = np.random.default_rng(0)
    ps = [ks_test(rng.random(10_000), lambda x: x)[1] for _ in range(100)]
    assert sum(p > 1e-3 for p in ps) >= 99
    assert all(0 <= p <= 1 for p in ps)
    # close to scipy's asymptotic answer
    x = rng.random(5000)
    d, p = ks_test(x, lambda t: t)
    ref = stats.kstest(x, "uniform", method="asymp")
    assert d == pytest.approx(ref.statistic, abs=1e-15)
    assert p == pytest.approx(ref.pvalue, rel=1e-6)


def test_ks_point_mass_and_errors():
    d, p = ks_test(np.full(100, 0.5), lambda t: t)
    assert d == pytest.approx(0.5)
    assert p < 1e-10
    with pytest.raises(ValidationError):
        ks_test([0.1, 0.2, 0.3], lambda t: t)


def test_ks_unsorted_input():
    rng = np.random.default_rng(1)
    x = rng.random(500)
    assert ks_test(x, lambda t: t) == ks_test(np.sort(x), lambda t: t)


def test_mean_and_variance_se():
    rng = np.random.default_rng(2)
    x = rng.normal(size=40_000)
    m, se = mean_se(x)
    assert se == pytest.approx(1 / math.sqrt(40_000), rel=0.02)
    v, vse = var_se(x)
    # for a normal sample Var(s^2) is about 2 sigma^4 / n
    assert vse == pytest.approx(math.sqrt(2 / 40_000), rel=0.05)
    assert math.isnan(mean_se([1.0])[1])


def test_fit_loglog():
    ns = [64, 128, 256, 512]
    f = fit_loglog(ns, [3 * n ** (2 / 3) for n in ns], expected=(0.5, 0.85))
    assert f.slope == pytest.approx(2 / 3) and f.r2 == pytest.approx(1.0) and f.in_expected
    assert fit_loglog([64], [1.0]) is None
    # a wild first point is dropped
    g = fit_loglog([16] + ns, [50.0] + [n ** 1.0 for n in ns])
    assert g.n_used == ns and g.slope == pytest.approx(1.0)


def test_resolve_threads(monkeypatch):
    monkeypatch.setenv("BETAWALK_THREADS", "3")
    assert resolve_threads(None) == 3
    assert resolve_threads(2) == 2
    monkeypatch.delenv("BETAWALK_THREADS")
    assert resolve_threads(None) >= 1


def test_stderr_shrinks_with_replicas():
    a = lln_check(U, 100, 2000, 1).stderr("raw_velocity")
    b = lln_check(U, 100, 4000, 1).stderr("raw_velocity")
    assert 0.6 <= b / a <= 0.8


# --- reports

def test_report_round_trip():
    rep = ExperimentReport("x", {"alpha": 1.0}, 3)
    rep.point_estimates["a"] = (1.5, 0.25)
    rep.fits["f"] = Fit(0.6, -1.0, 0.99, [1, 2, 3], [0.5, 0.85])
    rep.tests["t"] = KSResult(0.01, 0.5, True, "null")
    rep.columns = ["N", "v", "ok"]
    rep.rows = [[256, 0.1, True]]
    back = ExperimentReport.from_dict(json.loads(rep.to_json()))
    assert back == rep
    assert rep.to_csv() == "N,v,ok\n256,0.10000000000000001,true\n"
    assert list(json.loads(rep.to_json())) == sorted(json.loads(rep.to_json()))


def test_empty_report_csv():
    rep = ExperimentReport("empty", {}, 0)
    rep.columns = ["N", "value"]
    assert rep.to_csv() == "N,value\n"


def test_format_value():
    assert format_value(0.1) == "0.10000000000000001"
    assert format_value(np.int64(3)) == "3"
    assert format_value(np.bool_(False)) == "false"
    assert format_value("e1") == "e1"


# --- variance identity

@pytest.mark.parametrize("pl", [(1.0, 1.0, 1.0), (1.0, 2.0, 0.7), (2.0, 0.5, 1.5)])
def test_variance_identity(pl):
    rep = variance_identity_experiment(ModelParams(pl[0], pl[1]), pl[2], 64, 1500, 10)
    for which in ("e1", "e2", "sum"):
        assert identity_holds(rep, which), rep.point_estimates
    assert rep.stderr("var_log_rho") > 0


def test_variance_identity_walk_method():
    rep = variance_identity_experiment(U, 1.0, 32, 1500, 3, method="walk")
    assert identity_holds(rep, "e1") and identity_holds(rep, "e2")


def test_variance_identity_reproducible_and_thread_independent():
    a = variance_identity_experiment(U, 1.0, 32, 200, 5, threads=1)
    b = variance_identity_experiment(U, 1.0, 32, 200, 5, threads=3)
    assert a.point_estimates == b.point_estimates


def test_variance_identity_warns_and_validates():
    with pytest.warns(UserWarning):
        rep = variance_identity_experiment(U, 1.0, 16, 20, 1)
    assert rep.notes
    with pytest.raises(ValidationError):
        variance_identity_experiment(U, 1.0, 16, 200, 1, method="magic")
    with pytest.raises(ValidationError):
        variance_identity_experiment(U, 1.0, 2, 200, 1)


# --- exponent scans (small scale; full scale lives in the acceptance suite)

def test_scan_schema_and_single_point():
    rep = log_rho_variance_scan(U, 1.0, [64], 200, 1)
    assert rep.columns == ["N", "m", "n", "var_log_rho", "stderr", "replicas"]
    assert not rep.fits and len(rep.rows) == 1
    assert rep.rows[0][:3] == [64, 51, 12]
    with pytest.raises(ValidationError):
        log_rho_variance_scan(U, 1.0, [128, 64], 10, 1)


def test_scan_growth_and_control():
    rep = log_rho_variance_scan(U, 1.0, [128, 256, 512], 600, 2)
    assert 0.3 < rep.fits["var_log_rho"].slope < 1.0
    assert rep.fits["control_var_log_rho"].slope > rep.fits["var_log_rho"].slope


def test_scan_reproducible():
    a = log_rho_variance_scan(U, 1.0, [32, 64], 100, 9).to_csv()
    b = log_rho_variance_scan(U, 1.0, [32, 64], 100, 9).to_csv()
    assert a == b


def test_wandering_small():
    ns = [128, 256, 512]
    rep = wandering_experiment(U, 0.8, ns, 400, 4)
    tails = np.array([r[4:9] for r in rep.rows], dtype=float)
    assert np.all(np.diff(tails, axis=1) <= 0)
    assert np.all(tails[:, 0] >= 0.05)
    assert rep.fits["var_x1"].slope > 1.0
    with pytest.raises(ValidationError):
        wandering_experiment(U, 0.5, ns, 10, 1)


# --- distribution suite

def test_involution_tests_pass():
    t = involution_tests(ModelParams(1.0, 2.0), 0.7, Branch.RIGHT, 20_000, 1)
    assert all(r.passed for r in t.values()), t


@pytest.mark.parametrize("ab", [(1.0, 2.0), (2.0, 1.0)])
def test_suite_mirror_symmetry(ab):
    p = ModelParams(*ab)
    right = distribution_suite(p, 0.7, 1000, 3, branch=Branch.RIGHT, busemann_n=400)
    left = distribution_suite(p.swapped(), 0.7, 1000, 3, branch=Branch.LEFT, busemann_n=400)
    assert right.all_passed, right.rows
    assert left.all_passed, left.rows
    assert set(right.tests) == set(left.tests)


def test_suite_requires_samples():
    with pytest.raises(ValidationError):
        distribution_suite(U, 1.0, 100, 1)


# --- proxies

def test_ldp_proxy():
    rep = ldp_proxy(U, [0.6, 0.7, 0.8], 256, 50, 1)
    for row in rep.rows:
        assert row[4] <= 0.05


def test_busemann_proxies_decrease():
    rep = busemann_proxies(U, 0.8, [64, 128, 256], 200, 1)
    gaps = [r[1] for r in rep.rows]
    res = [r[2] for r in rep.rows]
    assert gaps[0] > gaps[1] > gaps[2]
    assert res[0] > res[1] > res[2]


def test_lln_report():
    rep = lln_check(U, 50, 100, 1, lam=1.0)
    assert set(rep.point_estimates) == {"raw_velocity", "chi1", "doob_velocity", "xi1"}
    assert rep.manifest["seed"] == 1 and rep.manifest["version"]
