from __future__ import annotations

import json
from pathlib import Path

import pytest

from dampwave.config import (
    DEFAULT_CHECKS,
    OUTPUT_ENV,
    ConfigParseError,
    ConfigValidationError,
    config_from_dict,
    load_config,
)

CONFIGS = Path(__file__).resolve().parents[1] / "configs"


def _write(tmp_path, obj, name="cfg.json"):
    path = tmp_path / name
    path.write_text(obj if isinstance(obj, str) else json.dumps(obj), encoding="utf-8")
    return path


def test_defaults(tmp_path):
    cfg = load_config(_write(tmp_path, {"output_dir": str(tmp_path / "out")}))
    assert cfg.eps == 0.1 and cfg.run.cfl == 0.5
    assert cfg.checks == DEFAULT_CHECKS
    assert cfg.dt == pytest.approx(0.5 * cfg.grid.dr)
    assert cfg.fit_window == (20.0, 200.0)
    assert cfg.sample_times[0] == 0.0 and cfg.sample_times[-1] == pytest.approx(200.0)


def test_shipped_configs_load():
    for name in ("reference.json", "short.json"):
        load_config(CONFIGS / name)
    load_config(CONFIGS / "heat_reference.json", require_wave=False)


@pytest.mark.parametrize(
    "patch,path",
    [
        ({"alpha": -1.0}, "alpha"),
        ({"N": 1}, "N"),
        ({"eps": 0.5}, "eps"),
        ({"grid": {"n": 8}}, "grid.n"),
        ({"grid": {"r0": 5.0, "r_max": 4.0}}, "grid.r_max"),
        ({"data": {"center": 1.5}}, "data.center"),
        ({"run": {"cfl": 0.95}}, "run.cfl"),
        ({"run": {"fit_window": [0.5, 100.0]}}, "run.fit_window"),
        ({"run": {"sample_times": [1.0, 900.0]}}, "run.sample_times"),
        ({"checks": ["weight", "nonsense"]}, "checks[1]"),
        ({"bogus": 1}, "bogus"),
        ({"grid": {"nodes": 10}}, "grid.nodes"),
        ({"alpha": "one"}, "alpha"),
        ({"grid": {"n": 100.5}}, "grid.n"),
        ({"output_dir": ""}, "output_dir"),
    ],
)
def test_validation_names_the_field(patch, path):
    with pytest.raises(ConfigValidationError) as info:
        config_from_dict(patch)
    assert info.value.path == path
    assert str(info.value).startswith(path)


def test_truncation_rule():
    with pytest.raises(ConfigValidationError, match="finite-speed") as info:
        config_from_dict({"grid": {"r_max": 100.0}, "run": {"T": 200.0}})
    assert info.value.path == "grid.r_max"
    # heat runs are not bound by the light cone
    config_from_dict({"grid": {"r_max": 100.0}, "run": {"T": 200.0}}, require_wave=False)


def test_empty_default_fit_window_is_rejected():
    d = {"grid": {"r_max": 21.0, "n": 801}, "run": {"T": 10.0}}
    with pytest.raises(ConfigValidationError) as info:
        config_from_dict(d)
    assert info.value.path == "run.fit_window"
    config_from_dict({**d, "checks": ["weight", "hardy"]})


def test_parse_errors(tmp_path):
    with pytest.raises(ConfigParseError, match="line 1"):
        load_config(_write(tmp_path, "{not json"))
    with pytest.raises(ConfigParseError):
        load_config(tmp_path / "missing.json")
    with pytest.raises(ConfigValidationError):
        load_config(_write(tmp_path, "[1, 2]"))


def test_env_overrides_output_dir(tmp_path, monkeypatch):
    path = _write(tmp_path, {"output_dir": "somewhere"})
    monkeypatch.setenv(OUTPUT_ENV, str(tmp_path / "env"))
    assert load_config(path).output_dir == str(tmp_path / "env")
    monkeypatch.delenv(OUTPUT_ENV)
    assert load_config(path).output_dir == "somewhere"


def test_to_dict_round_trips():
    cfg = load_config(CONFIGS / "short.json")
    again = config_from_dict({k: v for k, v in cfg.to_dict().items()
                              if k not in ("run", "perturbation")} | {"run": {"T": 10.0, "cfl": 0.45}})
    assert again.grid == cfg.grid and again.data == cfg.data and again.checks == cfg.checks
