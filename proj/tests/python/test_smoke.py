import json
import math
import os
import pathlib

import numpy as np
import pytest
from scipy import integrate

import osclaims as oc

CONFIGS = pathlib.Path(os.environ.get("OSCLAIMS_CONFIG_DIR", pathlib.Path(__file__).parents[2] / "configs"))


def benchmark(beta=1.0):
    return oc.DependenceModel.boudreault(beta, oc.SeverityLaw.exponential(10.0), oc.SeverityLaw.exponential(1.0))


def test_small_claims_matches_its_integral():
    t, lam, beta = 2.0, 1.0, 1.0
    ref, _ = integrate.quad(lambda v: math.exp(-(beta + lam) * v) * lam * (lam * (t - v) + 1.0), 0.0, t,
                            epsabs=0, epsrel=1e-13)
    assert oc.expected_small_claims(t, lam, beta) == pytest.approx(ref, rel=1e-12)
    assert oc.expected_small_claims(t, lam, 0.0) == pytest.approx(lam * t, rel=1e-14)


def test_pair_sum_matches_its_double_integral():
    t, lam, th, de = 1.5, 0.8, 0.4, 1.1
    ref, _ = integrate.dblquad(
        lambda v, y: lam ** 2 * math.exp(-(lam + th) * y - (lam + de) * v) * ((lam * (t - y - v) + 2) ** 2 - 2),
        0.0, t, lambda y: 0.0, lambda y: t - y, epsabs=0, epsrel=1e-12)
    assert oc.discounted_pair_sum(t, lam, th, de) == pytest.approx(ref, rel=1e-9)


def test_benchmark_engines_agree():
    p = oc.ProcessSpec.mixed_poisson(oc.StructureDistribution.degenerate(1.0))
    mean = oc.mean_closed(2.0, p, benchmark())
    assert mean == pytest.approx(8.79121018749965, rel=1e-13)
    series = oc.mean_mixed_series(2.0, p, benchmark())
    assert series["value"] == pytest.approx(mean, rel=1e-8)
    assert series["residual_bound"] >= 0.0
    second = oc.second_moment_closed(2.0, p, benchmark())
    assert oc.second_moment_mixed_integral(2.0, p, benchmark())["value"] == pytest.approx(second, rel=1e-8)
    assert oc.variance_closed(2.0, p, benchmark()) == pytest.approx(second - mean ** 2, rel=1e-12)


def test_negative_binomial_counts():
    p = oc.ProcessSpec.mixed_poisson(oc.StructureDistribution.gamma(2.0, 1.0))
    q = 0.5
    pmf = np.array([oc.count_pmf(p, 1.0, n) for n in range(40)])
    expected = np.array([(n + 1) * q * q * (1 - q) ** n for n in range(40)])
    np.testing.assert_allclose(pmf, expected, rtol=1e-10)


def test_monte_carlo_brackets_the_closed_form():
    p = oc.ProcessSpec.homogeneous(1.0)
    est = oc.estimate_moments(p, benchmark(), horizon=2.0, replicates=100000, seed=7)
    mean = oc.mean_closed(2.0, p, benchmark())
    assert abs(est["mean"]["point"] - mean) < 4 * est["mean"]["standard_error"]
    again = oc.estimate_moments(p, benchmark(), horizon=2.0, replicates=100000, seed=7, threads=2)
    assert again["mean"]["point"] == est["mean"]["point"]


def test_errors_map_to_python_exceptions():
    with pytest.raises(ValueError):
        oc.StructureDistribution.gamma(-1.0, 1.0)
    p = oc.ProcessSpec.homogeneous(1.0)
    heavy = oc.DependenceModel.independent(oc.SeverityLaw.pareto(1.5, 1.0))
    with pytest.raises(ArithmeticError):
        oc.second_moment_closed(1.0, p, heavy)


def test_cli_round_trip(tmp_path):
    out = tmp_path / "r.json"
    code, stdout, _ = oc.run_cli(["validate", "--config", str(CONFIGS / "bench.cfg"), "--output", str(out)])
    assert code == 0
    assert stdout.startswith("validate PASS")
    report = json.loads(out.read_text())
    assert report["passed"] is True
    assert any(row["quantity"] == "mean.z_score" for row in report["rows"])
