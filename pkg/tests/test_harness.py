import json
import xml.etree.ElementTree as ET

import numpy as np
import pytest

from polyres import cli
from polyres.dynamics import BlowUpError
from polyres.harness import experiments as ex
from polyres.harness.config import ConfigError, ExperimentConfig, load_config
from polyres.harness.io import COLUMNS, emit_csv, format_csv, parse_csv, read_csv
from polyres.harness.plots import emit_plot
from polyres.metrics import histogram_pdf


def tiny_open(**kw):
    params = dict(n=[3, 5], degree=[1, 2], seeds=[0, 1], train_samples=300, washout=20, eval_samples=200)
    params.update(kw)
    return ExperimentConfig.for_mode("open_loop", **params)


def tiny_closed(**kw):
    params = dict(
        n=[4], degree=[1, 2], seeds=[0, 1], train_samples=1500, washout=100,
        eval_samples=200, mce_time=2.0, pdf_samples=2000,
    )
    params.update(kw)
    return ExperimentConfig.for_mode("closed_loop", **params)


# -- config ---------------------------------------------------------------


def test_mode_defaults():
    o = ExperimentConfig.for_mode("open_loop")
    c = ExperimentConfig.for_mode("closed_loop")
    assert o.n == [5, 10, 20, 40] and o.degree == [1, 2] and o.tau == 0.2
    assert c.degree == [1, 2, 3] and c.seeds == list(range(10)) and c.beta == 1e-6
    assert c.mce_steps == 2500


@pytest.mark.parametrize(
    "bad",
    [
        {"mode": "sideways"},
        {"degree": [4]},
        {"n": []},
        {"tau": 0.015},
        {"washout": 500, "train_samples": 400},
        {"seeds": []},
        {"seeds": [-1]},
        {"schema_version": 9},
        {"system": "duffing"},
        {"whatever": 1},
        {"seeds": [0], "base_seed": 3},
    ],
)
def test_config_rejects(bad):
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict(bad)


def test_config_seed_range_and_roundtrip(tmp_path):
    cfg = ExperimentConfig.from_dict({"mode": "closed_loop", "base_seed": 5, "n_seeds": 3})
    assert cfg.seeds == [5, 6, 7]
    assert cfg.with_seed_offset(10).seeds == [15, 16, 17]
    path = tmp_path / "c.json"
    path.write_text(json.dumps(cfg.to_dict()))
    assert load_config(path) == cfg


def test_shipped_configs_load():
    assert load_config("configs/fig2b.json").seeds == list(range(20))
    assert load_config("configs/fig6.json") == ExperimentConfig.for_mode("closed_loop")


def test_missing_config_file(tmp_path):
    with pytest.raises(ConfigError, match="nope.json"):
        load_config(tmp_path / "nope.json")


# -- CSV ------------------------------------------------------------------


def _rows():
    return [
        ex.ResultRow("closed_loop", "lorenz", 10, 2, 0, 1.0 / 3, 0.123456789012345, 1e-5, 3.5, False),
        ex.ResultRow("closed_loop", "lorenz", 10, 1, 1, None, None, None, 0.2, True),
    ]


def test_empty_rows_raise_without_file(tmp_path):
    with pytest.raises(ValueError):
        emit_csv([], tmp_path / "x.csv")
    assert not (tmp_path / "x.csv").exists()


def test_csv_header_and_precision():
    text = format_csv(_rows())
    lines = text.splitlines()
    assert lines[0] == ",".join(COLUMNS)
    assert COLUMNS == ["mode", "system", "n", "degree", "seed", "rmse", "mce", "kld", "valid_time", "diverged"]
    assert "0.3333333333" in lines[1] and "0.33333333333" not in lines[1]
    assert "0.123456789" in lines[1]


def test_csv_roundtrip(tmp_path):
    rows = _rows()
    path = emit_csv(rows, tmp_path / "sub" / "r.csv")
    assert read_csv(path) == rows
    assert parse_csv(format_csv(rows)) == rows


# -- runs -------------------------------------------------------------------


def test_open_loop_rows_sorted_and_complete():
    cfg = tiny_open()
    rows = ex.run_open_loop(cfg)
    assert [r.key for r in rows] == sorted((n, d, s) for n in (3, 5) for d in (1, 2) for s in (0, 1))
    assert all(r.rmse > 0 and r.mce is None for r in rows)


def test_open_loop_byte_identical_across_workers(monkeypatch):
    cfg = tiny_open()
    monkeypatch.setenv("POLYRES_THREADS", "1")
    a = format_csv(ex.run_open_loop(cfg))
    b = format_csv(ex.run_open_loop(cfg))
    monkeypatch.setenv("POLYRES_THREADS", "2")
    c = format_csv(ex.run_open_loop(cfg))
    assert a == b == c


def test_closed_loop_byte_identical_across_workers(monkeypatch):
    cfg = tiny_closed()
    monkeypatch.setenv("POLYRES_THREADS", "1")
    a = format_csv(ex.run_closed_loop(cfg))
    monkeypatch.setenv("POLYRES_THREADS", "2")
    assert format_csv(ex.run_closed_loop(cfg)) == a


def test_bad_thread_count(monkeypatch):
    monkeypatch.setenv("POLYRES_THREADS", "many")
    with pytest.raises(ValueError):
        ex.n_workers()


def test_seed_offset_changes_rows():
    cfg = tiny_open(n=[3], seeds=[0])
    a = ex.run_open_loop(cfg)
    b = ex.run_open_loop(cfg.with_seed_offset(1))
    assert a[0].seed == 0 and b[0].seed == 1 and a[0].rmse != b[0].rmse


def test_divergence_keeps_one_row_per_cell(monkeypatch):
    def boom(*args, **kwargs):
        raise BlowUpError("forced")

    monkeypatch.setenv("POLYRES_THREADS", "1")
    monkeypatch.setattr(ex, "mce", boom)
    rows = ex.run_closed_loop(tiny_closed())
    assert len(rows) == 4
    assert all(r.diverged and r.mce is None and r.kld is None for r in rows)
    assert all(r.valid_time is not None for r in rows)
    s = ex.summarize(rows, "mce")
    assert all(v["count"] == 0 and v["dropped"] == 2 for v in s.values())


def test_mode_mismatch():
    with pytest.raises(ValueError):
        ex.run_closed_loop(tiny_open())


def test_summarize():
    rows = [ex.ResultRow("open_loop", "lorenz", 5, 1, s, rmse=float(s)) for s in range(5)]
    s = ex.summarize(rows, "rmse")[(5, 1)]
    assert s["median"] == 2.0 and s["iqr"] == 2.0 and s["count"] == 5


def test_csis_check_converges():
    res = ex.csis_check({"seeds": [0, 1]})
    assert len(res) == 4 and all(r["passed"] for r in res)


# -- plots -------------------------------------------------------------------


def _parse_svg(path):
    root = ET.parse(path).getroot()
    assert root.tag.endswith("svg")
    return root


def test_plot_single_point(tmp_path):
    rows = [ex.ResultRow("open_loop", "lorenz", 5, 1, 0, rmse=0.5)]
    _parse_svg(emit_plot(rows, "rmse_vs_n", tmp_path / "a.svg"))


def test_plot_deterministic(tmp_path):
    rows = _rows()
    a = emit_plot(rows, "metric_scatter", tmp_path / "a.svg").read_bytes()
    b = emit_plot(rows, "metric_scatter", tmp_path / "b.svg").read_bytes()
    assert a == b


def test_plot_pdf_identical(tmp_path):
    p = histogram_pdf(np.random.default_rng(0).normal(size=1000), -5, 5, 20)
    _parse_svg(emit_plot((p, p), "pdf_overlay", tmp_path / "p.svg"))


def test_plot_timeseries_and_phase(tmp_path):
    from polyres.dynamics import Trajectory

    y = np.random.default_rng(1).normal(size=(50, 3))
    _parse_svg(emit_plot((Trajectory(y, 0.02), y), "timeseries", tmp_path / "t.svg"))
    _parse_svg(emit_plot((y, np.abs(y[:, 0])), "phase_xz", tmp_path / "x.svg"))


def test_plot_errors(tmp_path):
    with pytest.raises(ValueError):
        emit_plot(_rows(), "histogram3d", tmp_path / "z.svg")
    with pytest.raises(ValueError):
        emit_plot([], "rmse_vs_n", tmp_path / "z.svg")


# -- CLI ---------------------------------------------------------------------


def _write(tmp_path, cfg, name="tiny.json"):
    path = tmp_path / name
    path.write_text(json.dumps(cfg.to_dict()))
    return path


def test_cli_open_loop(tmp_path, capsys):
    cfg_path = _write(tmp_path, tiny_open(n=[3], seeds=[0]))
    out = tmp_path / "out"
    assert cli.main(["open-loop", "--config", str(cfg_path), "--out", str(out), "--seed-offset", "2"]) == 0
    rows = read_csv(out / "tiny.csv")
    assert {r.seed for r in rows} == {2}
    _parse_svg(out / "tiny.svg")
    assert "open-loop" in capsys.readouterr().out


def test_cli_closed_loop_examples(tmp_path):
    cfg_path = _write(tmp_path, tiny_closed(seeds=[0], degree=[2]))
    out = tmp_path / "out"
    assert cli.main(["closed-loop", "--config", str(cfg_path), "--out", str(out), "--examples"]) == 0
    assert (out / "tiny.csv").is_file()
    for suffix in ("timeseries", "phase", "pdf"):
        _parse_svg(out / f"tiny_seed0_d2_{suffix}.svg")


def test_cli_missing_config(tmp_path, capsys):
    missing = tmp_path / "absent.json"
    assert cli.main(["open-loop", "--config", str(missing), "--out", str(tmp_path)]) != 0
    assert str(missing) in capsys.readouterr().err


def test_cli_wrong_mode(tmp_path):
    cfg_path = _write(tmp_path, tiny_closed())
    assert cli.main(["open-loop", "--config", str(cfg_path), "--out", str(tmp_path)]) == 2


def test_cli_unknown_subcommand():
    assert cli.main(["sideways"]) != 0


def test_cli_lyapunov(tmp_path):
    cfg_path = tmp_path / "ly.json"
    cfg_path.write_text(json.dumps({"horizon": 200.0}))
    assert cli.main(["lyapunov", "--config", str(cfg_path), "--out", str(tmp_path)]) == 0
    lam = json.loads((tmp_path / "ly.json").read_text())["lambda_max"]
    assert 0.7 < lam < 1.1


def test_cli_csis(tmp_path):
    cfg_path = tmp_path / "cs.json"
    cfg_path.write_text(json.dumps({"seeds": [0], "steps": 800}))
    assert cli.main(["csis-check", "--config", str(cfg_path), "--out", str(tmp_path)]) == 0
    assert (tmp_path / "cs.csv").read_text().startswith("tau,")


def test_cli_plot(tmp_path):
    csv_path = emit_csv(_rows(), tmp_path / "r.csv")
    assert cli.main(["plot", "--csv", str(csv_path), "--out", str(tmp_path)]) == 0
    _parse_svg(tmp_path / "r_metric_scatter.svg")
    assert cli.main(["plot", "--out", str(tmp_path)]) == 2
