"""Experiment orchestration: KS comparisons, audits, reports, determinism."""

import json

import numpy as np
import pytest

from stablesums.models import (
    GARCH11Squared,
    IID,
    MA,
    MarginalSpec,
    normalizing_sequence,
    centering_sequence,
    simulate_series,
)
from stablesums.tailproc import LevyTriple
from stablesums.harness import (
    ExperimentConfig,
    emit_report,
    ks_two_sample,
    psi_decomposition_residual,
    run_flt_experiment,
)

IID_SPEC = IID(MarginalSpec(0.8, 1.0))


# ---------------------------------------------------------------------------
# KS helper
# ---------------------------------------------------------------------------

def test_ks_identical_samples():
    x = np.linspace(0, 1, 200)
    stat, p = ks_two_sample(x, x.copy())
    assert stat == 0.0
    assert p == 1.0


def test_ks_requires_enough_points():
    with pytest.raises(ValueError):
        ks_two_sample(np.zeros(10), np.zeros(100))


def test_ks_separates_shifted_samples():
    rng = np.random.default_rng(1)
    a = rng.normal(0.0, 1.0, 500)
    b = rng.normal(3.0, 1.0, 500)
    stat, p = ks_two_sample(a, b)
    assert stat > 0.5
    assert p < 1e-6


def test_ks_holds_its_level():
    rng = np.random.default_rng(2)
    hits = 0
    for _ in range(100):
        a = rng.normal(size=200)
        b = rng.normal(size=200)
        _, p = ks_two_sample(a, b)
        hits += p > 0.01
    assert hits >= 96


# ---------------------------------------------------------------------------
# pathwise audits
# ---------------------------------------------------------------------------

def test_psi_decomposition_residual_is_rounding_level():
    spec = MA(MarginalSpec(1.0, 0.5), (0.5, 0.5))
    x = simulate_series(spec, 2000, seed=9)
    a_n = normalizing_sequence(spec, 2000)
    b_n = centering_sequence(spec, 2000, a_n, reps=10_000).value
    assert psi_decomposition_residual(x, a_n, b_n, u=0.1) < 1e-12


# ---------------------------------------------------------------------------
# configuration
# ---------------------------------------------------------------------------

def test_config_validation():
    good = dict(model=IID_SPEC, n=500, replicates=100, seed=0)
    ExperimentConfig(**good)
    with pytest.raises(ValueError):
        ExperimentConfig(**{**good, "replicates": 50})
    with pytest.raises(ValueError):
        ExperimentConfig(**{**good, "n": 0})
    with pytest.raises(ValueError):
        ExperimentConfig(**good, comparison_times=(0.5, 0.25))
    with pytest.raises(ValueError):
        ExperimentConfig(**good, comparison_times=(0.5, 1.5))
    with pytest.raises(ValueError):
        ExperimentConfig(**good, theta_quantile=1.0)
    with pytest.raises(ValueError):
        ExperimentConfig(**good, scheme_exponent=0.0)


def test_experiment_id_tracks_scientific_fields_only():
    a = ExperimentConfig(model=IID_SPEC, n=500, replicates=100, seed=0)
    b = ExperimentConfig(model=IID_SPEC, n=500, replicates=100, seed=0)
    c = ExperimentConfig(model=IID_SPEC, n=501, replicates=100, seed=0)
    assert a.experiment_id == b.experiment_id
    assert a.experiment_id != c.experiment_id
    assert len(a.experiment_id) == 12
    d = a.to_dict()
    assert d["model"]["model"] == "iid"
    assert "workers" not in d


def test_unknown_model_needs_explicit_triple():
    cfg = ExperimentConfig(model=GARCH11Squared(1.0, 1.0, 0.0), n=200,
                           replicates=100, seed=0)
    with pytest.raises(ValueError, match="LevyTriple"):
        run_flt_experiment(cfg)


# ---------------------------------------------------------------------------
# end-to-end runs
# ---------------------------------------------------------------------------

def _small_config(**kw):
    base = dict(model=IID_SPEC, n=400, replicates=120, seed=3)
    base.update(kw)
    return ExperimentConfig(**base)


def test_report_structure_and_audits():
    rep = run_flt_experiment(_small_config())
    assert rep.triple["source"] == "analytic"
    assert rep.triple["c_plus"] == 1.0
    assert rep.scaling["b_n_method"] == "exact"
    assert len(rep.ks) == 3
    for entry in rep.ks:
        assert 0.0 <= entry["p_value"] <= 1.0
        assert entry["n_prelimit"] == 120
    assert rep.audits["conservation_pass"]
    assert rep.audits["decomposition_pass"]
    assert rep.audits["conservation_max_abs"] <= rep.audits["conservation_tolerance"]
    assert isinstance(rep.all_ks_pass, bool)
    assert rep.samples["prelimit"].shape == (120, 3)
    assert rep.notes == []
    assert rep.runtime_seconds > 0.0


def test_supplied_triple_is_used_verbatim():
    tr = LevyTriple(0.8, 1.0, 0.0, 0.0)
    rep = run_flt_experiment(_small_config(triple=tr))
    assert rep.triple["source"] == "supplied"
    assert rep.triple["alpha"] == 0.8


def test_noisy_centering_is_flagged():
    spec = MA(MarginalSpec(0.5, 1.0), (0.25, 0.25))
    cfg = ExperimentConfig(model=spec, n=400, replicates=100, seed=3,
                           centering_reps=2000)
    rep = run_flt_experiment(cfg)
    assert rep.scaling["b_n_method"] == "mc"
    assert any("centering Monte Carlo error" in note for note in rep.notes)


def test_underpowered_run_is_flagged_but_completes():
    rep = run_flt_experiment(_small_config(n=50))
    assert any("underpowered" in note for note in rep.notes)
    assert all(entry["underpowered"] for entry in rep.ks)
    # theta estimators may fail at this size; failures are recorded, not raised
    assert "runs" in rep.theta
    # too few replicates for the small-step diagnostic at its default floor
    assert rep.small_step is None or rep.small_step["parameters"]["n_replicates"] >= 200


def test_worker_count_does_not_change_the_report():
    cfg = _small_config()
    r1 = run_flt_experiment(cfg, workers=1)
    r3 = run_flt_experiment(cfg, workers=3, seed_source="library")
    assert r1.to_json() == r3.to_json()
    with pytest.raises(ValueError):
        run_flt_experiment(cfg, workers=0)


def test_report_json_round_trip():
    rep = run_flt_experiment(_small_config())
    parsed = json.loads(rep.to_json())
    assert parsed == rep.to_json_dict()
    assert "runtime_seconds" not in parsed
    assert "samples" not in parsed


# ---------------------------------------------------------------------------
# artifact emission
# ---------------------------------------------------------------------------

def test_emit_report_writes_all_formats(tmp_path):
    rep = run_flt_experiment(_small_config())
    paths = emit_report(rep, str(tmp_path))
    names = sorted(p.split("/")[-1] for p in paths)
    assert len(paths) == 1 + 2 + 3  # json + 2 sample csvs + 3 survival svgs
    assert any(n.endswith("-report.json") for n in names)
    assert sum(n.endswith(".svg") for n in names) == 3
    assert rep.artifacts == sorted(rep.artifacts)
    # artifact names embed the experiment id and seed
    for n in names:
        assert rep.experiment_id in n
        assert "seed3" in n
    # the JSON references exactly the artifacts on disk
    blob = json.loads(open(paths[0]).read())
    assert blob["artifacts"] == rep.artifacts


def test_emit_report_json_only(tmp_path):
    rep = run_flt_experiment(_small_config())
    paths = emit_report(rep, str(tmp_path), formats=("json",))
    assert len(paths) == 1
    assert rep.artifacts == []
    with pytest.raises(ValueError):
        emit_report(rep, str(tmp_path), formats=("json", "pdf"))


def test_emit_report_json_plus_svg_counts(tmp_path):
    # one JSON plus one survival overlay per comparison time
    rep = run_flt_experiment(_small_config(comparison_times=(0.5, 1.0)))
    paths = emit_report(rep, str(tmp_path), formats=("json", "svg"))
    names = [p.split("/")[-1] for p in paths]
    assert sum(n.endswith(".json") for n in names) == 1
    assert sum(n.endswith(".svg") for n in names) == 2


def test_emit_report_is_byte_deterministic(tmp_path):
    rep = run_flt_experiment(_small_config())
    d1, d2 = tmp_path / "a", tmp_path / "b"
    p1 = emit_report(rep, str(d1))
    p2 = emit_report(rep, str(d2))
    for a, b in zip(p1, p2):
        assert open(a, "rb").read() == open(b, "rb").read()
