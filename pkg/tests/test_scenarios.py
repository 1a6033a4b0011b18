import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from kspectral.decomposition import Contour, eigen_count
from kspectral.errors import InputError
from kspectral.linalg import spectral_norm
from kspectral.scenarios import (
    REPORT_SCHEMA, SCENARIO_SCHEMA, Check, Scenario, bundled_scenarios, convergence_study, load_bundled,
    random_operator, run, trial_rng,
)


def _strip(report):
    doc = report.to_json()
    doc.pop("timestamp")
    return json.dumps(doc, sort_keys=True)


# random operators


def test_normal_profile_example():
    t = random_operator(7, 3, "normal")
    assert spectral_norm(t @ t.conj().T - t.conj().T @ t) <= 1e-12


@given(st.integers(0, 2**64 - 1), st.integers(1, 8))
def test_contraction_profile(seed, dim):
    assert spectral_norm(random_operator(seed, dim, "contraction")) <= 1 + 1e-12


def test_split_spectrum_example():
    t = random_operator(11, 6, "split_spectrum(3)")
    lam = np.linalg.eigvals(t)
    left, right = lam[lam.real < 2], lam[lam.real >= 2]
    assert left.size and right.size
    assert np.abs(left[:, None] - right[None, :]).min() >= 3
    # contour counting sees the same two clusters
    assert eigen_count(t, Contour(0, 1.5)) == left.size
    assert eigen_count(t, Contour(4, 1.5)) == right.size


@given(st.integers(0, 2**32 - 1), st.sampled_from(["generic", "contraction", "nilpotent_mix", "normal"]))
def test_random_operator_is_deterministic(seed, profile):
    assert np.array_equal(random_operator(seed, 4, profile), random_operator(seed, 4, profile))


def test_nilpotent_mix_is_nilpotent():
    t = random_operator(3, 4, "nilpotent_mix")
    assert spectral_norm(np.linalg.matrix_power(t, 4)) <= 1e-12


def test_random_operator_errors():
    with pytest.raises(InputError):
        random_operator(0, 65)
    with pytest.raises(InputError):
        random_operator(0, 3, "mystery")


def test_trial_streams_are_independent_of_order():
    a = [trial_rng(5, i).standard_normal() for i in range(4)]
    b = [trial_rng(5, i).standard_normal() for i in reversed(range(4))][::-1]
    assert a == b
    assert len(set(a)) == 4


# scenario schema


def test_scenario_json_round_trip():
    s = Scenario("hull_identity", 3, 2, {"m": 90})
    assert Scenario.from_json(s.to_json()) == s
    assert Scenario.from_json(s.to_json(), seed_override=9).seed == 9


@pytest.mark.parametrize("doc", [
    {"schema": SCENARIO_SCHEMA, "kind": "hull_identity", "trials": 2},
    {"schema": "other/1", "kind": "hull_identity", "seed": 1},
    {"schema": SCENARIO_SCHEMA, "kind": "nope", "seed": 1},
    {"schema": SCENARIO_SCHEMA, "kind": "hull_identity", "seed": 1, "extra": 1},
    {"schema": SCENARIO_SCHEMA, "kind": "hull_identity", "seed": 1, "params": {"bogus": 1}},
    {"schema": SCENARIO_SCHEMA, "kind": "hull_identity", "seed": -1},
    {"schema": SCENARIO_SCHEMA, "kind": "hull_identity", "seed": 1, "trials": 0},
])
def test_scenario_rejects(doc):
    with pytest.raises(InputError):
        Scenario.from_json(doc)


def test_check_semantics():
    assert Check("AC1", "x", 1e-9, "<=", 1e-8).passed
    assert not Check("AC1", "x", float("nan"), "<=", 1e-8).passed
    assert not Check("AC1", "x", None, "<=", 1e-8).passed
    assert Check("AC8", "x", 2.0, ">=", 1.8).passed


def test_bundled_scenarios_load():
    names = bundled_scenarios()
    assert "hull_identity.json" in names and "impossible_margin.json" in names
    for name in names:
        load_bundled(name)
    with pytest.raises(InputError):
        load_bundled("missing")


# running


def test_run_is_deterministic_modulo_timestamp():
    s = Scenario("hull_identity", 42, 5, {"m": 90})
    assert _strip(run(s)) == _strip(run(s))
    assert _strip(run(s)) == _strip(run(s, workers=3))


def test_report_shape(tmp_path):
    rep = run(Scenario("hull_identity", 1, 3, {"m": 90}))
    doc = rep.to_json()
    assert doc["schema"] == REPORT_SCHEMA
    assert all(c["criterion"].startswith("AC") for c in doc["checks"])
    assert doc["pass"] is rep.passed is True
    rows = rep.csv_rows()
    assert len(rows) == 4 and rows[0][:2] == ["trial", "error"]
    rep.write(tmp_path)
    assert json.loads((tmp_path / "report.json").read_text())["pass"] is True
    with pytest.raises(FileExistsError):
        rep.write(tmp_path)
    rep.write(tmp_path, force=True)


def test_errors_are_isolated():
    rep = run(load_bundled("impossible_margin"))
    assert len(rep.errors) == rep.scenario.trials
    assert {e["error"] for e in rep.errors} == {"RegionViolation"}
    assert not rep.passed
    assert [e["trial"] for e in rep.errors] == list(range(rep.scenario.trials))


def test_partial_failure_keeps_other_trials():
    # only the Jordan trial sits inside a disc of radius 0.9; the rest are scaled to 1.0
    s = Scenario("np_reconstruct", 4, 3, {
        "curve": {"kind": "disc", "params": {"center": [0, 0], "radius": 1}},
        "M": [128], "numerical_radius": 1.0, "include_jordan": True,
    })
    rep = run(s)
    assert [r["trial"] for r in rep.records] == [0]
    assert [e["trial"] for e in rep.errors] == [1, 2]


def test_small_bundled_runs_pass():
    for name, trials in (("hull_identity", 5), ("realness", 3), ("measure_decomposition", 2)):
        s = load_bundled(name)
        rep = run(Scenario(s.kind, s.seed, trials, s.params))
        assert rep.passed, [c for c in rep.checks if not c.passed]


# convergence studies


def test_riesz_contour_ladder():
    out = convergence_study(Scenario("riesz_decomposition", 1, 5), "M", [64, 128, 256], "max_idempotent",
                            min_ratio=10, floor=1e-12)
    assert out["pass"]
    assert [r["rung"] for r in out["table"]] == [64, 128, 256]


def test_hull_sampling_ladder():
    out = convergence_study(Scenario("hull_identity", 1, 10), "m", [90, 180, 360, 720], "max_sampling_gap")
    assert out["pass"]
    assert out["ratios"][-1] > 3  # approaching the quadratic rate


def test_gleason_degree_ladder():
    s = Scenario("gleason_distance", 1, 1, {
        "cases": [{"domain": "two_discs", "x1": [0, 0], "x2": [5, 0]}],
        "config": {"restarts": 4, "iterations": 200},
    })
    out = convergence_study(s, "config.degree", [2, 4, 8, 12], "min_d_hat", expect="increase")
    values = [r["value"] for r in out["table"]]
    assert values == sorted(values)
    assert out["pass"]


def test_ladder_must_be_sorted():
    with pytest.raises(InputError):
        convergence_study(Scenario("hull_identity", 1, 1), "m", [180, 90], "max_hausdorff")
