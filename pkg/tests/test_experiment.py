"""Harness round trips: matrix files, configs, trials, emission, sweeps."""

import dataclasses
import json
import math

import numpy as np
import pytest

from nystromlab import (
    CoherencePlan,
    ConfigError,
    ExperimentConfig,
    MatrixFileError,
    NotPSDError,
    SpectrumSpec,
    SymMatrix,
    chernoff_sweep,
    chernoff_tail,
    config_from_file,
    config_from_mapping,
    emit_results,
    load_matrix,
    run_experiment,
    save_matrix,
)
from nystromlab.experiment import (
    CSV_HEADER,
    INSTANCE_STREAM,
    emit_table,
    prepare,
    run_trial,
)

from helpers import gram_psd

# ---------------------------------------------------------------------------
# matrix files


def test_load_identity(tmp_path):
    p = tmp_path / "m.txt"
    p.write_text("2\n1 0\n0 1\n")
    a = load_matrix(p)
    assert np.array_equal(a.entries, np.eye(2))


def test_load_tolerates_trailing_blank_lines(tmp_path):
    p = tmp_path / "m.txt"
    p.write_text("1\n3.5\n\n\n")
    assert load_matrix(p).entries[0, 0] == 3.5


def test_load_indefinite_is_allowed(tmp_path):
    # the loader checks shape and symmetry only; definiteness is checked
    # where the extension actually needs it
    p = tmp_path / "m.txt"
    p.write_text("2\n0 1\n1 0\n")
    a = load_matrix(p)
    assert a.entries[0, 1] == 1.0


def test_save_load_round_trip_bit_exact(tmp_path):
    rng = np.random.default_rng(3)
    a = gram_psd(7, rng, scale=math.pi)
    p = tmp_path / "m.txt"
    save_matrix(a, p)
    b = load_matrix(p)
    assert np.array_equal(a.entries, b.entries)


def test_load_error_empty(tmp_path):
    p = tmp_path / "m.txt"
    p.write_text("")
    with pytest.raises(MatrixFileError) as ei:
        load_matrix(p)
    assert ei.value.kind == "header"


def test_load_error_bad_header(tmp_path):
    p = tmp_path / "m.txt"
    p.write_text("two\n1 0\n0 1\n")
    with pytest.raises(MatrixFileError) as ei:
        load_matrix(p)
    assert ei.value.kind == "header" and ei.value.line == 1


def test_load_error_missing_row(tmp_path):
    p = tmp_path / "m.txt"
    p.write_text("3\n1 0 0\n0 1 0\n")
    with pytest.raises(MatrixFileError) as ei:
        load_matrix(p)
    assert ei.value.kind == "count"


def test_load_error_wrong_row_width(tmp_path):
    p = tmp_path / "m.txt"
    p.write_text("2\n1 0\n0 1 5\n")
    with pytest.raises(MatrixFileError) as ei:
        load_matrix(p)
    assert ei.value.kind == "count" and ei.value.line == 3


def test_load_error_bad_value(tmp_path):
    p = tmp_path / "m.txt"
    p.write_text("2\n1 zero\n0 1\n")
    with pytest.raises(MatrixFileError) as ei:
        load_matrix(p)
    assert ei.value.kind == "value" and ei.value.line == 2


def test_load_error_non_finite(tmp_path):
    p = tmp_path / "m.txt"
    p.write_text("2\n1 inf\ninf 1\n")
    with pytest.raises(MatrixFileError) as ei:
        load_matrix(p)
    assert ei.value.kind == "value" and ei.value.line == 2


def test_load_error_asymmetric(tmp_path):
    p = tmp_path / "m.txt"
    p.write_text("2\n1 0.5\n0 1\n")
    with pytest.raises(MatrixFileError) as ei:
        load_matrix(p)
    assert ei.value.kind == "asymmetry"


# ---------------------------------------------------------------------------
# configs


def _gen_config(**over):
    base = dict(
        k=2,
        trials=8,
        master_seed=7,
        n=16,
        gen=SpectrumSpec(kind="exp-decay", n=16, k=2, rate=0.5),
        coherence=CoherencePlan(target="low"),
    )
    base.update(over)
    return ExperimentConfig(**base)


def test_config_requires_exactly_one_source(tmp_path):
    with pytest.raises(ConfigError) as ei:
        ExperimentConfig(k=2, trials=1, master_seed=0).validate()
    assert ei.value.field == "matrix"
    p = tmp_path / "m.txt"
    with pytest.raises(ConfigError):
        _gen_config(matrix_path=str(p)).validate()


def test_config_gen_needs_plan_and_n():
    with pytest.raises(ConfigError) as ei:
        _gen_config(coherence=None).validate()
    assert ei.value.field == "coherence"
    with pytest.raises(ConfigError) as ei:
        _gen_config(n=None).validate()
    assert ei.value.field == "n"


def test_config_bounds_validation():
    with pytest.raises(ConfigError):
        _gen_config(k=0).validate()
    with pytest.raises(ConfigError):
        _gen_config(k=16).validate()  # k > n-1
    with pytest.raises(ConfigError):
        _gen_config(trials=0).validate()
    with pytest.raises(ConfigError):
        _gen_config(epsilon=1.0).validate()
    with pytest.raises(ConfigError):
        _gen_config(delta=0.0).validate()
    with pytest.raises(ConfigError):
        _gen_config(l=0).validate()
    with pytest.raises(ConfigError):
        _gen_config(master_seed=-1).validate()
    with pytest.raises(ConfigError):
        _gen_config(fmt="xml").validate()
    with pytest.raises(ConfigError):
        _gen_config(jobs=0).validate()


def test_config_from_mapping_minimal():
    cfg = config_from_mapping(
        {"n": 16, "k": 2, "trials": 5, "seed": 3, "gen": "exp:0.5", "coherence": "low"}
    )
    assert cfg.k == 2 and cfg.l is None and cfg.epsilon == 0.5
    assert cfg.gen.kind == "exp-decay"


def test_config_from_mapping_l_auto():
    cfg = config_from_mapping(
        {
            "n": 16,
            "k": 2,
            "trials": 5,
            "seed": 3,
            "l": "auto",
            "gen": "exact-rank-k",
            "coherence": "flat",
        }
    )
    assert cfg.l is None


def test_config_from_mapping_unknown_key():
    with pytest.raises(ConfigError) as ei:
        config_from_mapping({"k": 2, "trials": 5, "seed": 3, "matrix": "m", "bogus": 1})
    assert ei.value.field == "bogus"


def test_config_from_mapping_missing_required():
    with pytest.raises(ConfigError) as ei:
        config_from_mapping({"k": 2, "seed": 3, "matrix": "m"})
    assert ei.value.field == "trials"


def test_config_from_file_bad_json_reports_line(tmp_path):
    p = tmp_path / "c.json"
    p.write_text('{\n"k": 2,\n"trials": oops\n}\n')
    with pytest.raises(ConfigError) as ei:
        config_from_file(p)
    assert "line 3" in str(ei.value)


def test_config_from_file_non_object(tmp_path):
    p = tmp_path / "c.json"
    p.write_text("[1, 2]\n")
    with pytest.raises(ConfigError):
        config_from_file(p)


# ---------------------------------------------------------------------------
# prepare / run


def test_prepare_rejects_indefinite_file(tmp_path):
    p = tmp_path / "m.txt"
    p.write_text("2\n0 1\n1 0\n")
    cfg = ExperimentConfig(k=1, trials=1, master_seed=0, matrix_path=str(p))
    with pytest.raises(NotPSDError):
        prepare(cfg)


def test_prepare_file_dimension_cross_check(tmp_path):
    p = tmp_path / "m.txt"
    p.write_text("2\n1 0\n0 1\n")
    cfg = ExperimentConfig(k=1, trials=1, master_seed=0, n=3, matrix_path=str(p))
    with pytest.raises(ConfigError) as ei:
        prepare(cfg)
    assert ei.value.field == "n"


def test_prepare_auto_l_caps_at_n():
    cfg = _gen_config(coherence=CoherencePlan(target="spiked", m=1))
    setup = prepare(cfg)
    # spiked coherence is n/k = 8, so required samples far exceed n
    assert setup.l_required > setup.n
    assert setup.l == setup.n


def test_prepare_explicit_l_out_of_range():
    with pytest.raises(ConfigError) as ei:
        prepare(_gen_config(l=17))
    assert ei.value.field == "l"


def test_prepare_instance_independent_of_trial_count():
    s1 = prepare(_gen_config(trials=2))
    s2 = prepare(_gen_config(trials=50))
    assert np.array_equal(s1.a.entries, s2.a.entries)
    assert s1.tau == s2.tau


def test_run_trial_matches_batch_record():
    cfg = _gen_config(trials=10, l=8)
    records, _ = run_experiment(cfg)
    setup = prepare(cfg)
    solo = run_trial(setup, cfg.master_seed, 7)
    a = dataclasses.replace(solo, wall_ms=0.0)
    b = dataclasses.replace(records[7], wall_ms=0.0)
    assert a == b


def test_full_sample_run_has_no_failures():
    cfg = _gen_config(trials=6, l=16)
    records, summary = run_experiment(cfg)
    assert summary["failures"] == 0
    assert summary["rank_deficient"] == 0
    assert summary["error_max"] <= 1e-9 * summary["lambda1"]
    assert all(r.error_le_bound for r in records)


def test_summary_consistent_with_records():
    cfg = _gen_config(trials=40, l=6, master_seed=11)
    records, summary = run_experiment(cfg)
    errors = [r.spectral_error for r in records]
    assert summary["failures"] == sum(1 for r in records if not r.error_le_bound)
    assert summary["rank_deficient"] == sum(
        1 for r in records if not r.omega1_full_rank
    )
    assert summary["error_min"] == min(errors)
    assert summary["error_max"] == max(errors)
    assert summary["error_median"] == float(np.quantile(np.array(errors), 0.5))
    assert summary["trials"] == 40
    assert summary["l"] == 6


def test_records_deterministic_across_jobs():
    cfg1 = _gen_config(trials=24, l=8, jobs=1)
    cfg4 = _gen_config(trials=24, l=8, jobs=4)
    r1, s1 = run_experiment(cfg1)
    r4, s4 = run_experiment(cfg4)
    t1 = emit_results(r1, s1, fmt="csv")
    t4 = emit_results(r4, s4, fmt="csv")
    assert t1 == t4


def test_rank_deficient_trials_get_na_fields():
    # spiked basis + tiny sample: some trials must miss the spike
    cfg = ExperimentConfig(
        k=1,
        trials=30,
        master_seed=5,
        n=16,
        l=2,
        gen=SpectrumSpec(kind="exact-rank-k", n=16, k=1),
        coherence=CoherencePlan(target="spiked", m=1),
    )
    records, summary = run_experiment(cfg)
    assert summary["rank_deficient"] > 0
    for r in records:
        if not r.omega1_full_rank:
            assert r.det_bound is None and r.pinv_norm_sq is None
        else:
            assert r.det_bound is not None and r.pinv_norm_sq is not None


# ---------------------------------------------------------------------------
# emission


def test_emit_csv_layout(tmp_path):
    cfg = _gen_config(trials=3, l=8)
    records, summary = run_experiment(cfg)
    out = tmp_path / "r.csv"
    text = emit_results(records, summary, fmt="csv", path=out)
    assert out.read_text() == text
    lines = text.splitlines()
    assert len(lines) == 4
    assert lines[0] == CSV_HEADER
    row = lines[1].split(",")
    assert len(row) == len(CSV_HEADER.split(","))
    assert row[0] == "0" and row[1] == "0"
    assert row[2] == "8" and row[3] == "2"
    # float cells round-trip exactly
    assert float(row[6]) == records[0].spectral_error
    assert float(row[8]) == records[0].prob_bound
    assert row[-1] == "NA"
    assert row[-2] in ("true", "false")


def test_emit_csv_timings_opt_in():
    cfg = _gen_config(trials=2, l=8)
    records, summary = run_experiment(cfg)
    text = emit_results(records, summary, fmt="csv", timings=True)
    cell = text.splitlines()[1].split(",")[-1]
    assert cell != "NA" and float(cell) >= 0.0


def test_emit_json_nulls_and_summary():
    cfg = _gen_config(trials=2, l=8)
    records, summary = run_experiment(cfg)
    doc = json.loads(emit_results(records, summary, fmt="json"))
    assert doc["summary"]["trials"] == 2
    assert len(doc["records"]) == 2
    assert doc["records"][0]["wall_ms"] is None
    assert doc["records"][0]["spectral_error"] == records[0].spectral_error


def test_emit_rejects_unknown_format():
    cfg = _gen_config(trials=1, l=8)
    records, summary = run_experiment(cfg)
    with pytest.raises(ConfigError):
        emit_results(records, summary, fmt="tsv")


def test_emitted_text_identical_across_runs():
    cfg = _gen_config(trials=12, l=8)
    out1 = emit_results(*run_experiment(cfg), fmt="csv")
    out2 = emit_results(*run_experiment(cfg), fmt="csv")
    assert out1 == out2


def test_config_file_end_to_end(tmp_path):
    p = tmp_path / "c.json"
    p.write_text(
        json.dumps(
            {
                "n": 16,
                "k": 2,
                "trials": 4,
                "seed": 9,
                "l": 8,
                "gen": "exact-rank-k",
                "coherence": "flat",
            }
        )
    )
    cfg = config_from_file(p)
    records, summary = run_experiment(cfg)
    assert summary["tau"] == pytest.approx(1.0, abs=1e-9)
    assert len(records) == 4


# ---------------------------------------------------------------------------
# chernoff sweep


def test_chernoff_sweep_flat_point():
    rows = chernoff_sweep(
        n=32,
        ks=[2],
        plans=[CoherencePlan(target="flat")],
        epsilons=[0.5],
        trials=50,
        master_seed=13,
    )
    assert len(rows) == 1
    row = rows[0]
    assert row["tau"] == pytest.approx(1.0, abs=1e-9)
    assert row["plan"] == "flat"
    assert 1 <= row["l"] <= 32
    assert row["threshold"] == pytest.approx(0.5 * row["l"] / 32)
    assert row["chernoff_tail"] == pytest.approx(
        chernoff_tail(2, row["tau"], row["l"], 0.5), rel=1e-12
    )
    assert row["failures"] == round(row["empirical_rate"] * 50)


def test_chernoff_sweep_spiked_fallback_l():
    rows = chernoff_sweep(
        n=32,
        ks=[4],
        plans=[CoherencePlan(target="spiked", m=1)],
        epsilons=[0.5],
        trials=20,
        master_seed=13,
    )
    # worst-case coherence: informative window unreachable, fallback kicks in
    assert rows[0]["tau"] == pytest.approx(8.0, abs=1e-8)
    assert rows[0]["l"] == math.ceil(0.6 * 32)
    assert rows[0]["chernoff_tail"] > 0.5


def test_chernoff_sweep_deterministic_and_grid_order():
    kwargs = dict(
        n=16,
        ks=[1, 2],
        plans=[CoherencePlan(target="flat"), CoherencePlan(target="low")],
        epsilons=[0.25, 0.5],
        trials=10,
        master_seed=21,
    )
    r1 = chernoff_sweep(**kwargs)
    r2 = chernoff_sweep(**kwargs, jobs=3)
    assert emit_table(r1) == emit_table(r2)
    assert len(r1) == 8
    assert [r["k"] for r in r1] == [1, 1, 1, 1, 2, 2, 2, 2]
    assert [r["epsilon"] for r in r1[:4]] == [0.25, 0.5, 0.25, 0.5]


def test_chernoff_sweep_explicit_ls_validation():
    with pytest.raises(ConfigError):
        chernoff_sweep(
            n=16,
            ks=[1, 2],
            plans=[CoherencePlan(target="flat")],
            epsilons=[0.5],
            trials=5,
            master_seed=0,
            ls=[4, 5, 6],
        )


def test_emit_table_csv_round_trip():
    rows = chernoff_sweep(
        n=16,
        ks=[2],
        plans=[CoherencePlan(target="flat")],
        epsilons=[0.5],
        trials=10,
        master_seed=2,
    )
    text = emit_table(rows, fmt="csv")
    lines = text.splitlines()
    assert lines[0].split(",") == list(rows[0])
    cells = lines[1].split(",")
    assert float(cells[list(rows[0]).index("tau")]) == rows[0]["tau"]
    assert cells[list(rows[0]).index("dominated")] in ("true", "false")
    doc = json.loads(emit_table(rows, fmt="json"))
    assert doc["rows"][0]["k"] == 2


def test_instance_stream_spacing():
    # trial streams are indices; the instance stream must sit far above any
    # realistic trial count so the two can never collide
    assert INSTANCE_STREAM == 2**63
