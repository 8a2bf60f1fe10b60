from __future__ import annotations

import json
from pathlib import Path

import jsonschema
import numpy as np
import pytest

from dampwave.cli import EXIT_ABORT, EXIT_CHECK, EXIT_INVALID, EXIT_OK, EXIT_PARSE, main
from dampwave.config import OUTPUT_ENV, load_config
from dampwave.experiment import VERDICT_SCHEMA, RunArtifact, emit_plots, run_experiment
from dampwave.io import read_csv, write_csv

CONFIGS = Path(__file__).resolve().parents[1] / "configs"
SHORT = json.loads((CONFIGS / "short.json").read_text(encoding="utf-8"))


def _cfg(tmp_path, **patch):
    d = json.loads(json.dumps(SHORT))
    for key, val in patch.items():
        section, _, leaf = key.partition("__")
        if leaf:
            d[section][leaf] = val
        else:
            d[section] = val
    d["output_dir"] = str(tmp_path / "out")
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(d), encoding="utf-8")
    return path


def test_exit_codes_for_bad_configs(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("{", encoding="utf-8")
    assert main(["wave", str(bad)]) == EXIT_PARSE
    assert main(["wave", str(tmp_path / "missing.json")]) == EXIT_PARSE
    assert main(["wave", str(_cfg(tmp_path, alpha=-1.0))]) == EXIT_INVALID
    assert "alpha" in capsys.readouterr().err
    assert main(["wave", str(_cfg(tmp_path, checks=["weight", "cor2"]))]) == EXIT_INVALID
    assert "run.fit_window" in capsys.readouterr().err
    assert main(["wave", str(_cfg(tmp_path, grid__r_max=12.0))]) == EXIT_INVALID
    assert "finite-speed" in capsys.readouterr().err


def test_unknown_subcommand_is_a_usage_error():
    with pytest.raises(SystemExit) as info:
        main(["explode", "cfg.json"])
    assert info.value.code == 2


def test_duhamel_time_beyond_run_is_invalid(tmp_path):
    path = _cfg(tmp_path, run__duhamel_t=20.0)
    assert main(["duhamel", str(path)]) == EXIT_INVALID


def test_sweep_reports_runs(tmp_path, capsys):
    path = _cfg(tmp_path, checks=["weight"], grid__n=401)
    code = main(["sweep", str(path), "--kind", "weight", "--param", "eps=0.1,0.2", "--workers", "2"])
    assert code == EXIT_OK
    summary = json.loads((tmp_path / "out" / "sweep.json").read_text(encoding="utf-8"))
    assert [r["status"] for r in summary["runs"]] == ["ok", "ok"]
    assert all(Path(r["output_dir"]).joinpath("weight.csv").exists() for r in summary["runs"])
    assert main(["sweep", str(path), "--param", "eps"]) == EXIT_INVALID


@pytest.fixture(scope="module")
def compare_run(tmp_path_factory):
    tmp = tmp_path_factory.mktemp("cmp")
    path = _cfg(tmp)
    code = main(["compare", str(path), "--seed-check"])
    return tmp / "out", code


def test_compare_outputs_and_schema(compare_run):
    out, code = compare_run
    verdict = json.loads((out / "verdict.json").read_text(encoding="utf-8"))
    jsonschema.validate(verdict, VERDICT_SCHEMA)
    names = {c["name"]: c["pass"] for c in verdict["checks"]}
    assert set(names) >= {"weight", "hardy", "monotonicity", "appfps", "composite", "support"}
    assert code == (EXIT_OK if verdict["all_pass"] else EXIT_CHECK)
    run = json.loads((out / "run.json").read_text(encoding="utf-8"))
    assert run["status"] == "ok" and run["grid"]["n"] == 801
    energy = read_csv(out / "energy.csv")
    assert energy["t"][0] == 0.0 and np.all(np.diff(energy["t"]) > 0)


def test_seed_check_reports_identical_csvs(compare_run):
    out, _ = compare_run
    det = json.loads((out / "determinism.json").read_text(encoding="utf-8"))
    assert det == {"identical": True, "differing": []}


def test_repeated_runs_are_byte_identical(tmp_path):
    cfg = load_config(_cfg(tmp_path))
    a = run_experiment(cfg.with_output_dir(tmp_path / "a"), "wave")
    b = run_experiment(cfg.with_output_dir(tmp_path / "b"), "wave")
    pa, pb = a.csv_paths(), b.csv_paths()
    assert [p.relative_to(a.output_dir) for p in pa] == [p.relative_to(b.output_dir) for p in pb]
    assert pa and all(x.read_bytes() == y.read_bytes() for x, y in zip(pa, pb))


def test_zero_amplitude_run_is_vacuous(tmp_path):
    path = _cfg(tmp_path, data__amp_u0=0.0, data__amp_u1=0.0)
    assert main(["compare", str(path)]) == EXIT_OK
    out = tmp_path / "out"
    cols = read_csv(out / "energy.csv")
    for name, values in cols.items():
        if name != "t":
            assert not np.any(values), name
    verdict = json.loads((out / "verdict.json").read_text(encoding="utf-8"))
    assert verdict["all_pass"]


def test_env_var_redirects_output(tmp_path, monkeypatch):
    monkeypatch.setenv(OUTPUT_ENV, str(tmp_path / "env_out"))
    assert main(["weight", str(_cfg(tmp_path))]) == EXIT_OK
    assert (tmp_path / "env_out" / "weight.csv").exists()
    assert not (tmp_path / "out").exists()


def test_weight_subcommand(tmp_path):
    assert main(["weight", str(_cfg(tmp_path))]) == EXIT_OK
    rep = json.loads((tmp_path / "out" / "weight_report.json").read_text(encoding="utf-8"))["report"]
    assert rep["ellip_pass"] and rep["grad_pass"]
    cols = read_csv(tmp_path / "out" / "weight.csv")
    assert np.all(cols["A"] > 0)


def test_transform_check_subcommand(tmp_path):
    assert main(["transform-check", str(_cfg(tmp_path, N=3))]) == EXIT_OK
    rep = json.loads((tmp_path / "out" / "transform.json").read_text(encoding="utf-8"))
    assert rep["isometry_relative_error"] < 1e-6
    assert 3.5 <= rep["psi0_ratios"][-1] <= 4.5


def test_duhamel_subcommand(tmp_path):
    assert main(["duhamel", str(_cfg(tmp_path))]) == EXIT_OK
    verdict = json.loads((tmp_path / "out" / "verdict.json").read_text(encoding="utf-8"))
    checks = {c["name"]: c for c in verdict["checks"]}
    assert checks["duhamel_t"]["relative_mismatch"] < 0.05
    assert checks["duhamel_t0"]["pass"]


def test_heat_subcommand_without_rate_check(tmp_path):
    assert main(["heat", str(_cfg(tmp_path))]) == EXIT_OK
    cols = read_csv(tmp_path / "out" / "heat.csv")
    assert np.all(np.diff(cols["l2dmu_v"]) <= 0)


def test_plots_carry_slopes(tmp_path):
    out = tmp_path / "p"
    t = np.arange(0.0, 50.0)
    energy = write_csv(out / "energy.csv", {"t": t, "l2a_u": (1 + t) ** -0.5})
    art = RunArtifact("wave", out, {}, energy_csv=energy)
    paths = emit_plots(art, {"l2a_u": {"fitted_slope": -0.49, "target": 0.5}})
    assert [p.name for p in paths] == ["l2a_u.svg"]
    text = paths[0].read_text(encoding="utf-8")
    assert "fitted_slope=-0.49" in text and "target_slope=-0.5" in text
    again = emit_plots(art, {"l2a_u": {"fitted_slope": -0.49, "target": 0.5}})
    assert again[0].read_text(encoding="utf-8") == text


def test_plots_reject_empty_series(tmp_path):
    out = tmp_path / "p"
    energy = write_csv(out / "energy.csv", {"t": [], "l2a_u": []})
    with pytest.raises(ValueError):
        emit_plots(RunArtifact("wave", out, {}, energy_csv=energy))
    with pytest.raises(FileNotFoundError):
        emit_plots(RunArtifact("wave", out, {}))


def test_abort_exit_code(tmp_path, monkeypatch):
    import dampwave.experiment as ex

    def boom(cfg):
        raise FloatingPointError("diverged")

    monkeypatch.setitem(ex.PIPELINES, "wave", boom)
    assert main(["wave", str(_cfg(tmp_path))]) == EXIT_ABORT
    run = json.loads((tmp_path / "out" / "run.json").read_text(encoding="utf-8"))
    assert run["status"] == "aborted" and run["partial"]
