"""Seed derivation, ensemble execution, and the statistics toolkit."""

import math

import numpy as np
import pytest
import scipy.stats

from corrlab import ensemble
from corrlab.ensemble import (
    CHUNK_SIZE,
    EnsembleSpec,
    derive_seed,
    ks_critical,
    ks_statistic,
    loglog_slope,
    normality_stats,
    register_task,
    run,
)


def _toy_task(params, epsilon, seed):
    """Deterministic pseudo-measurement with a failure hook and a counter."""
    if params.get("fail_below") and seed % 7 < params["fail_below"]:
        raise ValueError("synthetic failure")
    rng = np.random.Generator(np.random.PCG64(seed))
    x = rng.normal()
    return {
        "value": params.get("scale", 1.0) * epsilon * x,
        "square": x * x,
        "count_positive": 1 if x > 0 else 0,
    }


register_task("toy", _toy_task)


def test_derive_seed_distinct_and_stable():
    seeds = {
        derive_seed(123, k, j) for k in range(4) for j in range(500)
    }
    assert len(seeds) == 2000
    assert derive_seed(123, 0, 0) == derive_seed(123, 0, 0)
    assert derive_seed(123, 0, 0) != derive_seed(124, 0, 0)
    assert all(0 <= s < (1 << 64) for s in seeds)
    with pytest.raises(ValueError):
        derive_seed(1, 0, 1 << 32)


def test_spec_validation():
    with pytest.raises(ValueError):
        EnsembleSpec(1, 1, (0.1,), "toy")
    with pytest.raises(ValueError):
        EnsembleSpec(1, 10, (0.1, 0.2), "toy")  # increasing
    with pytest.raises(ValueError):
        EnsembleSpec(1, 10, (0.1, 0.1), "toy")  # ties
    with pytest.raises(ValueError):
        EnsembleSpec(1, 10, (0.1, -0.05), "toy")
    spec = EnsembleSpec(1, 10, [0.2, 0.1], "toy")
    assert spec.epsilon_list == (0.2, 0.1)
    with pytest.raises(KeyError):
        run(EnsembleSpec(1, 5, (0.1,), "no-such-task"))


def test_run_serial_statistics():
    spec = EnsembleSpec(11, 400, (0.2, 0.1), "toy", {"scale": 2.0})
    rep = run(spec)
    assert rep.status == "ok"
    assert rep.functional_names() == ["square", "value"]
    st = rep.stats[0]["value"]
    assert st.n == 400
    # independent moment oracle on the recorded samples
    vals = np.asarray(rep.samples[0]["value"])
    assert st.mean == pytest.approx(float(np.mean(vals)), rel=1e-12)
    assert st.variance == pytest.approx(float(np.var(vals, ddof=1)), rel=1e-12)
    assert st.skewness == pytest.approx(
        float(scipy.stats.skew(vals, bias=False)), rel=1e-10
    )
    assert st.excess_kurtosis == pytest.approx(
        float(scipy.stats.kurtosis(vals, bias=False)), rel=1e-10
    )
    assert st.stderr_mean == pytest.approx(math.sqrt(st.variance / st.n), rel=1e-12)
    # counters sum the per-realization integers
    pos = sum(1 for v in vals if v > 0)
    assert rep.counts[0]["count_positive"] == pos
    assert rep.counts[0]["count_failed"] == 0


def test_run_worker_count_invariance():
    spec = EnsembleSpec(5, 3 * CHUNK_SIZE + 7, (0.1, 0.05), "toy", {})
    rep1 = run(spec, workers=1)
    rep2 = run(spec, workers=2)
    assert rep1.to_csv() == rep2.to_csv()
    assert rep1.to_json_dict() == rep2.to_json_dict()


def test_run_records_failures_in_order():
    spec = EnsembleSpec(9, 50, (0.1,), "toy", {"fail_below": 2})
    rep = run(spec)
    assert rep.counts[0]["count_failed"] == len(rep.failures)
    assert rep.counts[0]["count_failed"] > 1
    # failure tuples carry (eps_index, real_index, seed, message)
    for k, j, seed, msg in rep.failures:
        assert k == 0
        assert derive_seed(9, k, j) == seed
        assert "synthetic failure" in msg
    # 1% failure budget exceeded -> error status
    assert rep.status == "error"
    # stats still computed from the survivors
    assert rep.stats[0]["value"].n == 50 - len(rep.failures)


def test_failure_budget_boundary():
    # exactly 1% failures stays ok
    def one_fail(params, epsilon, seed):
        if params["boom"] == seed:
            raise RuntimeError("boom")
        return {"v": 1.0}

    register_task("one-fail", one_fail)
    seeds = [derive_seed(3, 0, j) for j in range(100)]
    spec = EnsembleSpec(3, 100, (0.1,), "one-fail", {"boom": seeds[17]})
    assert run(spec).status == "ok"


def test_csv_layout_and_determinism():
    spec = EnsembleSpec(2, 50, (0.1,), "toy", {})
    rep = run(spec)
    csv = rep.to_csv()
    assert csv == run(spec).to_csv()
    lines = csv.splitlines()
    assert lines[0] == "# task=toy"
    assert "epsilon,functional,statistic,value" in lines
    assert any(line.startswith("0.1,value,mean,") for line in lines)
    assert any(",count_positive,count," in line for line in lines)
    # every epsilon value round-trips through repr
    data = [l for l in lines if l.startswith("0.1,")]
    assert data, "expected data rows for epsilon 0.1"


def test_ks_statistic_matches_scipy():
    rng = np.random.Generator(np.random.PCG64(8))
    x = rng.normal(size=500)
    got = ks_statistic(x, 0.0, 1.0)
    want = scipy.stats.kstest(x, "norm").statistic
    assert got == pytest.approx(float(want), rel=1e-10)
    skewed = np.exp(rng.normal(size=500))
    m, s = float(np.mean(skewed)), float(np.std(skewed))
    got2 = ks_statistic(skewed, m, s)
    want2 = scipy.stats.kstest(skewed, "norm", args=(m, s)).statistic
    assert got2 == pytest.approx(float(want2), rel=1e-10)
    with pytest.raises(ValueError):
        ks_statistic(x, 0.0, 0.0)


def test_ks_critical_frozen():
    assert ks_critical(400, 0.05) == pytest.approx(1.358 / 20.0)
    assert ks_critical(100, 0.01) == pytest.approx(1.628 / 10.0)
    with pytest.raises(ValueError):
        ks_critical(100, 0.1)


def test_normality_stats_gaussian_and_errors():
    rng = np.random.Generator(np.random.PCG64(21))
    x = rng.normal(size=4000)
    skew, kurt, ks = normality_stats(x)
    assert abs(skew) < 4.0 * math.sqrt(6.0 / 4000)
    assert abs(kurt) < 4.0 * math.sqrt(24.0 / 4000)
    assert ks < ks_critical(4000, 0.01)
    with pytest.raises(ValueError):
        normality_stats(np.zeros(50))
    with pytest.raises(ValueError):
        normality_stats(np.zeros(200))


def test_loglog_slope_exact_recovery():
    eps = [0.2, 0.1, 0.05, 0.025]
    fit = loglog_slope([(e, 3.0 * e**1.5) for e in eps])
    assert fit.slope == pytest.approx(1.5, abs=1e-12)
    assert fit.intercept == pytest.approx(math.log(3.0), abs=1e-12)
    assert fit.max_residual < 1e-13
    assert fit.log_coeff is None
    # eps |log eps| data: the extra regressor recovers both exponents
    fit2 = loglog_slope(
        [(e, e * abs(math.log(e))) for e in eps], with_log_regressor=True
    )
    assert fit2.slope == pytest.approx(1.0, abs=1e-10)
    assert fit2.log_coeff == pytest.approx(1.0, abs=1e-10)
    with pytest.raises(ValueError):
        loglog_slope([(0.1, 1.0), (0.05, 1.0)])
    with pytest.raises(ValueError):
        loglog_slope([(0.1, 1.0), (0.05, -1.0), (0.025, 1.0)])


def test_run_report_json_shape():
    spec = EnsembleSpec(4, 20, (0.2, 0.1), "toy", {})
    d = run(spec, version="vX").to_json_dict()
    assert d["task"] == "toy"
    assert d["version"] == "vX"
    assert d["status"] == "ok"
    assert [b["epsilon"] for b in d["per_epsilon"]] == [0.2, 0.1]
    block = d["per_epsilon"][0]
    assert set(block["stats"]["value"]) == {
        "n", "mean", "variance", "skewness", "excess_kurtosis",
        "ks_statistic", "stderr_mean", "stderr_variance",
    }
    assert ensemble.REGISTRY["toy"] is _toy_task
