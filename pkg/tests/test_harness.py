import json
import warnings

import numpy as np
import pytest
from scipy.special import erfc

import rareber.sampler
from rareber.channel import sigma2_from_snr
from rareber.cli import main
from rareber.harness import (
    CSV_COLUMNS,
    ConfigError,
    ExperimentConfig,
    ResultRow,
    compare_methods,
    emit_results,
    format_results,
    load_config,
    parse_config_text,
    read_results,
    run_experiment,
    without_wall_time,
)
from rareber.lowdisc import SequenceGenerator
from rareber.sampler import MonteCarloSampler
from rareber.problems import LinkProblem

SMALL = dict(modulation="bpsk", snr=(4.0, 8.0), method=("mc", "qmc-sobol"), words_per_pack=200, packs=5)


def _row(snr, method, p, se=1e-3, zero=False):
    return ResultRow(snr, method, p, se, 100.0, 1000, zero, 0.01, 0)


# ---------------------------------------------------------------- config


def test_parse_config_text():
    text = """
    # sweep
    modulation = qam
    order = 16
    snr = 5, 10, 15   # dB
    method = mc, is-scale
    words-per-pack = 50
    """
    vals = parse_config_text(text)
    assert vals == {"modulation": "qam", "order": 16, "snr": (5.0, 10.0, 15.0),
                    "method": ("mc", "is-scale"), "words_per_pack": 50}


def test_defaults_match_experiment_setup():
    cfg = ExperimentConfig()
    assert (cfg.modulation, cfg.order, cfg.words_per_pack, cfg.packs) == ("qam", 16, 5000, 100)
    assert cfg.n_samples == 500_000
    assert cfg.init_proposal_snr_offset == 5


def test_file_then_overrides(tmp_path):
    path = tmp_path / "a.cfg"
    path.write_text("snr = 1, 2\nseed = 4\n")
    cfg = load_config(path, seed=9, method=None)
    assert cfg.snr == (1.0, 2.0) and cfg.seed == 9


@pytest.mark.parametrize(
    "overrides, field",
    [
        ({"packs": 0}, "packs"),
        ({"words_per_pack": 0}, "words_per_pack"),
        ({"snr": ()}, "snr"),
        ({"method": ("mc", "magic")}, "method"),
        ({"order": 32}, "order"),
        ({"loss": "ser"}, "loss"),
        ({"format": "xml"}, "format"),
        ({"bits_per_word": 3}, "bits_per_word"),
    ],
)
def test_config_errors_name_the_field(overrides, field):
    with pytest.raises(ConfigError) as info:
        load_config(**overrides)
    assert info.value.field == field
    assert field in str(info.value)


def test_unknown_and_malformed_keys():
    with pytest.raises(ConfigError, match="colour"):
        parse_config_text("colour = red")
    with pytest.raises(ConfigError, match="order"):
        parse_config_text("order = sixteen")
    with pytest.raises(ConfigError, match="line 1"):
        parse_config_text("just words")


def test_inapplicable_fields_warn():
    with pytest.warns(UserWarning, match="adapt_iterations"):
        load_config(method=("mc",), adapt_iterations=3)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        load_config(method=("is-scale",), adapt_iterations=5)


# ---------------------------------------------------------------- output


def test_header_only_and_one_row(tmp_path):
    path = tmp_path / "r.csv"
    emit_results([], path)
    assert path.read_text() == ",".join(CSV_COLUMNS) + "\n"
    emit_results([_row(5.0, "mc", 0.1)], path)
    assert len(path.read_text().splitlines()) == 2


def test_csv_round_trip(tmp_path):
    rows = [_row(5.0, "mc", 0.1 + 1e-17 * 3, se=1 / 3), _row(25.0, "mc", 0.0, zero=True),
            _row(25.0, "is-scale", 6.377293461537264e-16, se=np.pi * 1e-17)]
    path = tmp_path / "r.csv"
    emit_results(rows, path)
    assert read_results(path) == rows
    assert "true" in path.read_text()


def test_json_lines_round_trip(tmp_path):
    rows = [_row(5.0, "mc", 0.125), _row(6.0, "qmc-sobol", 1 / 7)]
    path = tmp_path / "r.jsonl"
    emit_results(rows, path, "json-lines")
    lines = path.read_text().splitlines()
    assert list(json.loads(lines[0])) == list(CSV_COLUMNS)
    assert read_results(path) == rows


def test_unwritable_path(tmp_path):
    with pytest.raises(OSError):
        emit_results([], tmp_path / "missing" / "r.csv")


# ---------------------------------------------------------------- compare


def test_compare_with_itself_is_zero():
    rows = [_row(5.0, "mc", 0.1), _row(10.0, "mc", 0.01)]
    assert all(d["difference"] == 0 for d in compare_methods(rows, "mc"))


def test_compare_signed_difference():
    rows = [_row(5.0, "mc", 0.1), _row(5.0, "is-scale", 0.25)]
    out = {d["method"]: d for d in compare_methods(rows, "is-scale")}
    assert out["mc"]["difference"] == pytest.approx(-0.15)
    assert out["mc"]["combined_std_err"] == pytest.approx(np.sqrt(2) * 1e-3)


def test_compare_missing_baseline():
    with pytest.raises(ValueError, match="SNR 10"):
        compare_methods([_row(5.0, "mc", 0.1), _row(5.0, "is-scale", 0.1), _row(10.0, "mc", 0.0)], "is-scale")


def test_low_snr_methods_agree_with_is_baseline():
    cfg = load_config(modulation="qam", snr=(5.0, 10.0, 15.0), method=("mc", "qmc-sobol", "rqmc-sobol", "is-scale"),
                      words_per_pack=2000, packs=20, seed=3)
    for d in compare_methods(run_experiment(cfg), "is-scale"):
        assert abs(d["difference"]) <= 5 * d["combined_std_err"]


# ---------------------------------------------------------------- runs


def test_rows_ordered_by_snr_then_method():
    rows = run_experiment(load_config(**SMALL))
    assert [(r.snr_db, r.method) for r in rows] == [(4.0, "mc"), (4.0, "qmc-sobol"), (8.0, "mc"), (8.0, "qmc-sobol")]
    assert all(r.n_samples == 1000 and r.p_hat >= 0 for r in rows)


def test_identical_configs_are_byte_identical(tmp_path):
    cfg = load_config(**{**SMALL, "method": ("mc", "rqmc-sobol", "is-scale", "is-tilt")})
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    emit_results(without_wall_time(run_experiment(cfg)), a)
    emit_results(without_wall_time(run_experiment(cfg)), b)
    assert a.read_bytes() == b.read_bytes()


def test_zero_events_are_flagged_not_raised():
    rows = run_experiment(load_config(snr=(40.0,), method=("mc", "is-tilt"), words_per_pack=100, packs=2))
    mc = rows[0]
    assert mc.zero_events and mc.p_hat == 0.0


def test_method_isolation_via_spy(monkeypatch):
    # mc and qmc-sobol must differ only in the point-source kind handed to the generator
    seen = []

    class Spy(SequenceGenerator):
        def __init__(self, kind, dimension, seed=0, cursor=0):
            seen.append(kind)
            super().__init__("pseudo-random", dimension, seed, cursor)

    monkeypatch.setattr(rareber.sampler, "SequenceGenerator", Spy)
    cfg = dict(modulation="bpsk", snr=(3.0,), words_per_pack=300, packs=2, seed=5)
    mc = run_experiment(load_config(method=("mc",), **cfg))[0]
    kinds_mc = set(seen)
    seen.clear()
    qmc = run_experiment(load_config(method=("qmc-sobol",), **cfg))[0]
    assert kinds_mc == {"pseudo-random"} and set(seen) == {"sobol"}
    assert (qmc.p_hat, qmc.std_err) == (mc.p_hat, mc.std_err)


def test_rqmc_mean_matches_mc_mean():
    problem = LinkProblem("bpsk", snr_db=4.0)
    rq = [MonteCarloSampler(n_samples=4096, point_source="scrambled-sobol", seed=s).fit(problem).report_.p_hat for s in range(30)]
    mc = [MonteCarloSampler(n_samples=4096, seed=s).fit(problem).report_.p_hat for s in range(30)]
    se = np.hypot(np.std(rq, ddof=1), np.std(mc, ddof=1)) / np.sqrt(30)
    assert abs(np.mean(rq) - np.mean(mc)) <= 3 * se
    q = 0.5 * erfc(1 / np.sqrt(2 * sigma2_from_snr(4.0)))
    assert abs(np.mean(rq) - q) <= 3 * np.std(rq, ddof=1) / np.sqrt(30)


# ---------------------------------------------------------------- CLI


def test_cli_run_and_compare(tmp_path, capsys):
    cfg = tmp_path / "c.cfg"
    cfg.write_text("modulation = bpsk\nwords_per_pack = 100\npacks = 2\n")
    out = tmp_path / "r.csv"
    assert main(["run", "--config", str(cfg), "--snr", "4", "6", "--method", "mc", "qmc-halton", "--out", str(out)]) == 0
    rows = read_results(out)
    assert len(rows) == 4
    cmp_out = tmp_path / "d.csv"
    assert main(["compare", "--baseline", "mc", "--in", str(out), "--out", str(cmp_out)]) == 0
    assert cmp_out.read_text().splitlines()[0].startswith("snr_db,method,baseline")
    assert main(["run", "--config", str(cfg), "--snr", "4", "--method", "mc"]) == 0
    assert capsys.readouterr().out.startswith("snr_db,method")


def test_cli_exit_codes(tmp_path):
    assert main(["run", "--method", "nope"]) == 2
    assert main(["run", "--config", str(tmp_path / "absent.cfg")]) == 3
    cfg = tmp_path / "c.cfg"
    cfg.write_text("modulation = bpsk\nwords_per_pack = 10\npacks = 1\n")
    assert main(["run", "--config", str(cfg), "--snr", "4", "--out", str(tmp_path / "no" / "r.csv")]) == 3
    rows = tmp_path / "r.csv"
    emit_results([_row(5.0, "mc", 0.1)], rows)
    assert main(["compare", "--baseline", "is-scale", "--in", str(rows), "--out", str(tmp_path / "d.csv")]) == 2


def test_format_results_rejects_unknown():
    with pytest.raises(ValueError):
        format_results([], "xml")


def test_qmc_differences_vary_less_than_mc_differences():
    cfg = dict(modulation="bpsk", snr=(8.0,), method=("mc", "qmc-sobol", "is-scale"), words_per_pack=16_000, packs=1)
    diffs = {"mc": [], "qmc-sobol": []}
    for seed in range(20):
        for d in compare_methods(run_experiment(load_config(seed=seed, **cfg)), "is-scale"):
            if d["method"] in diffs:
                diffs[d["method"]].append(d["difference"])
    assert np.var(diffs["qmc-sobol"], ddof=1) <= np.var(diffs["mc"], ddof=1)
