"""Experiment catalog: config validation, grading, and report layout."""

import json

import numpy as np
import pytest

from corrlab.experiments import (
    KINDS,
    ConfigError,
    aligned_mesh,
    describe_kinds,
    run_experiment,
    source_profile,
    validate_config,
)

ALL_KINDS = [
    "field-stats",
    "helmholtz-corrector",
    "helmholtz-moments-2d",
    "elliptic-corrector",
    "spectral-corrector",
    "heat-corrector",
    "scaling-study",
    "periodic-compare",
]


def test_kind_registry_stable_order():
    assert list(KINDS) == ALL_KINDS
    text = describe_kinds()
    for name in ALL_KINDS:
        assert f"{name}: " in text


def test_validate_config_requires_kind():
    with pytest.raises(ConfigError) as err:
        validate_config({})
    assert err.value.field == "kind"
    with pytest.raises(ConfigError) as err:
        validate_config({"kind": "bogus"})
    assert err.value.field == "kind"
    with pytest.raises(ConfigError):
        validate_config([1, 2])


def test_validate_config_rejects_unknown_fields():
    with pytest.raises(ConfigError) as err:
        validate_config({"kind": "field-stats", "nonsense": 1})
    assert err.value.field == "nonsense"
    # nested unknown field names the dotted path
    with pytest.raises(ConfigError) as err:
        validate_config({"kind": "field-stats", "field": {"wieghts": [1]}})
    assert "wieghts" in err.value.field


def test_validate_config_type_and_range_errors():
    with pytest.raises(ConfigError) as err:
        validate_config({"kind": "field-stats", "n_real": 1})
    assert err.value.field == "n_real"
    with pytest.raises(ConfigError) as err:
        validate_config({"kind": "field-stats", "epsilon_list": [0.1, -0.2]})
    assert err.value.field == "epsilon_list"
    with pytest.raises(ConfigError) as err:
        validate_config({"kind": "field-stats", "field": {"marginal": "cauchy"}})
    assert err.value.field == "field"
    assert "marginal" in str(err.value)


def test_validate_config_round_trip_idempotent():
    for kind in ALL_KINDS:
        full = validate_config({"kind": kind})
        again = validate_config(full)
        assert again == full
        assert again["kind"] == kind
        # defaults fully materialized and JSON-clean
        json.dumps(full, sort_keys=True)


def test_aligned_mesh_snaps_to_epsilon():
    mesh = aligned_mesh(0.1, 8)
    assert mesh.h == pytest.approx(0.1 / 8)
    assert mesh.n_nodes == 81
    # epsilon that does not divide 1: node count rounds up
    mesh2 = aligned_mesh(0.03, 4)
    assert mesh2.h <= 0.03 / 4 + 1e-15
    assert (mesh2.n_nodes - 1) * mesh2.h == pytest.approx(1.0)


def test_source_profile_variants():
    x = np.linspace(0.0, 1.0, 11)
    assert np.allclose(source_profile("one", x), 1.0)
    assert np.allclose(source_profile("sine", x), np.sin(np.pi * x))
    assert np.allclose(source_profile("parabola", x), x * (1 - x))
    with pytest.raises(ValueError):
        source_profile("cubic", x)


def test_field_stats_experiment_small():
    res = run_experiment(
        {
            "kind": "field-stats",
            "seed": 7,
            "n_real": 60,
            "epsilon_list": [0.05],
            "thresholds": {"stderr_factor": 6.0},
        }
    )
    assert res.status in ("ok", "fail")
    names = [c.name for c in res.checks]
    assert any("sigma2" in n for n in names)
    # exact-estimator mean check is present and graded
    csv = res.to_csv()
    assert csv.startswith("# kind=field-stats")
    assert "# config_sha256=" in csv
    assert "epsilon,functional,statistic,value" in csv
    assert any(line.startswith("check,") for line in csv.splitlines())


def test_experiment_csv_json_deterministic_and_worker_invariant():
    cfg = {
        "kind": "field-stats",
        "seed": 3,
        "n_real": 40,
        "epsilon_list": [0.1],
    }
    r1 = run_experiment(cfg, workers=1)
    r2 = run_experiment(cfg, workers=2)
    assert r1.to_csv() == r2.to_csv()
    assert json.dumps(r1.to_json_dict(), sort_keys=True) == json.dumps(
        r2.to_json_dict(), sort_keys=True
    )
    assert r1.config_sha256() == r2.config_sha256()


def test_amplitude_zero_field_statistics_vanish():
    res = run_experiment(
        {
            "kind": "field-stats",
            "seed": 1,
            "n_real": 50,
            "epsilon_list": [0.1],
            "field": {"amplitude": 0.0},
        }
    )
    for name, st in res.ensembles["main"].stats[0].items():
        assert st.mean == 0.0
        assert st.variance == 0.0


def test_scaling_study_experiment_runs_clean():
    res = run_experiment(
        {
            "kind": "scaling-study",
            "dimensions": [1, 5],
            "epsilon_list": [0.2, 0.12, 0.072, 0.043, 0.026, 0.0156, 0.0094, 0.0056],
        }
    )
    assert res.status == "ok"
    names = [c.name for c in res.checks]
    assert any(n.startswith("slope_d1") for n in names)
    assert any(n.startswith("slope_d5") for n in names)
    # deterministic: no ensembles, everything in rows/tables
    assert res.ensembles == {}
    assert res.rows
    txt = res.summary_text()
    assert "[PASS]" in txt
    assert txt.rstrip().endswith("overall: OK")


def test_experiment_status_fail_on_impossible_threshold():
    res = run_experiment(
        {
            "kind": "field-stats",
            "seed": 2,
            "n_real": 40,
            "epsilon_list": [0.1],
            "thresholds": {"stderr_factor": 1e-9},
        }
    )
    assert res.status == "fail"
    assert any(not c.passed for c in res.checks)
    assert "[FAIL]" in res.summary_text()


def test_config_sha_tracks_content():
    a = validate_config({"kind": "field-stats", "seed": 1})
    b = validate_config({"kind": "field-stats", "seed": 2})
    ra = run_experiment(a | {"n_real": 40, "epsilon_list": [0.1]})
    rb = run_experiment(b | {"n_real": 40, "epsilon_list": [0.1]})
    assert ra.config_sha256() != rb.config_sha256()
