"""JSON experiment configuration with validation that names the offending field."""
from __future__ import annotations

import json
import math
import os
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

from dampwave.grid import MIN_NODES

KNOWN_CHECKS = (
    "weight", "cor2", "thm1", "propmain", "heat_rate", "hardy", "monotonicity",
    "appfps", "composite", "support",
)
DEFAULT_CHECKS = ("weight", "cor2", "thm1", "propmain", "hardy", "monotonicity", "appfps",
                  "composite", "support")
DEFAULT_EPS = 0.1
DEFAULT_CFL = 0.5
OUTPUT_ENV = "DAMPWAVE_OUTPUT_DIR"


class ConfigParseError(ValueError):
    exit_code = 2


class ConfigValidationError(ValueError):
    exit_code = 3

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


@dataclass(frozen=True)
class GridConfig:
    r0: float = 1.0
    r_max: float = 205.0
    n: int = 4001

    @property
    def dr(self) -> float:
        return (self.r_max - self.r0) / (self.n - 1)


@dataclass(frozen=True)
class DataConfig:
    center: float = 3.0
    width: float = 1.0
    amp_u0: float = 1.0
    amp_u1: float = 0.0

    @property
    def support_radius(self) -> float:
        return self.center + self.width


@dataclass(frozen=True)
class PerturbationConfig:
    height: float
    center: float
    width: float


@dataclass(frozen=True)
class RunConfig:
    T: float = 200.0
    dt: float | None = None
    cfl: float = DEFAULT_CFL
    sample_every: float = 1.0
    sample_times: tuple[float, ...] | None = None
    field_times: tuple[float, ...] = ()
    fit_window: tuple[float, float] | None = None
    duhamel_t: float = 8.0


@dataclass(frozen=True)
class ExperimentConfig:
    N: int = 2
    alpha: float = 1.0
    a0: float = 1.0
    eps: float = DEFAULT_EPS
    grid: GridConfig = field(default_factory=GridConfig)
    data: DataConfig = field(default_factory=DataConfig)
    run: RunConfig = field(default_factory=RunConfig)
    perturbation: PerturbationConfig | None = None
    checks: tuple[str, ...] = DEFAULT_CHECKS
    output_dir: str = "runs/default"

    @property
    def dt(self) -> float:
        return self.run.dt if self.run.dt is not None else self.run.cfl * self.grid.dr

    @property
    def sample_times(self) -> tuple[float, ...]:
        if self.run.sample_times is not None:
            return self.run.sample_times
        k = int(math.floor(self.run.T / self.run.sample_every + 1e-9))
        return tuple(j * self.run.sample_every for j in range(k + 1))

    @property
    def fit_window(self) -> tuple[float, float]:
        if self.run.fit_window is not None:
            return self.run.fit_window
        return (max(1.0, 5.0 * self.data.support_radius), self.run.T)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["checks"] = list(self.checks)
        return d

    def with_output_dir(self, output_dir: str | Path) -> "ExperimentConfig":
        return replace(self, output_dir=str(output_dir))


def _number(d: dict, key: str, path: str, default=None, positive=False, integer=False):
    if key not in d:
        if default is None:
            raise ConfigValidationError(f"{path}{key}", "missing required field")
        return default
    v = d[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigValidationError(f"{path}{key}", f"expected a number, got {v!r}")
    if integer and (not float(v).is_integer()):
        raise ConfigValidationError(f"{path}{key}", f"expected an integer, got {v!r}")
    if not math.isfinite(v):
        raise ConfigValidationError(f"{path}{key}", "must be finite")
    if positive and not v > 0:
        raise ConfigValidationError(f"{path}{key}", f"must be positive, got {v!r}")
    return int(v) if integer else float(v)


def _section(d: dict, key: str) -> dict:
    sub = d.get(key, {})
    if sub is None:
        return {}
    if not isinstance(sub, dict):
        raise ConfigValidationError(key, "expected an object")
    return sub


def _unknown(d: dict, allowed: set[str], path: str) -> None:
    extra = sorted(set(d) - allowed)
    if extra:
        raise ConfigValidationError(f"{path}{extra[0]}", "unknown field")


def _times(v, path: str) -> tuple[float, ...]:
    if not isinstance(v, list) or any(isinstance(x, bool) or not isinstance(x, (int, float)) for x in v):
        raise ConfigValidationError(path, "expected a list of numbers")
    return tuple(float(x) for x in v)


def config_from_dict(d: dict, require_wave: bool = True) -> ExperimentConfig:
    """Validate a parsed JSON object; ``require_wave`` enforces the light-cone truncation rule."""
    if not isinstance(d, dict):
        raise ConfigValidationError("<root>", "expected a JSON object")
    _unknown(d, {"N", "alpha", "a0", "eps", "grid", "data", "run", "perturbation", "checks",
                 "output_dir"}, "")
    N = _number(d, "N", "", default=2, integer=True)
    if N < 2:
        raise ConfigValidationError("N", f"must be >= 2, got {N}")
    alpha = _number(d, "alpha", "", default=1.0, positive=True)
    a0 = _number(d, "a0", "", default=1.0, positive=True)
    eps = _number(d, "eps", "", default=DEFAULT_EPS, positive=True)
    if not eps < 1.0 / 3.0:
        raise ConfigValidationError("eps", f"must lie in (0, 1/3), got {eps}")

    g = _section(d, "grid")
    _unknown(g, {"r0", "r_max", "n"}, "grid.")
    gd = GridConfig()
    grid = GridConfig(
        r0=_number(g, "r0", "grid.", default=gd.r0, positive=True),
        r_max=_number(g, "r_max", "grid.", default=gd.r_max, positive=True),
        n=_number(g, "n", "grid.", default=gd.n, integer=True),
    )
    if grid.n < MIN_NODES:
        raise ConfigValidationError("grid.n", f"must be >= {MIN_NODES}, got {grid.n}")
    if not grid.r_max > grid.r0:
        raise ConfigValidationError("grid.r_max", "must exceed grid.r0")

    dd = _section(d, "data")
    _unknown(dd, {"center", "width", "amp_u0", "amp_u1"}, "data.")
    ddef = DataConfig()
    data = DataConfig(
        center=_number(dd, "center", "data.", default=ddef.center),
        width=_number(dd, "width", "data.", default=ddef.width, positive=True),
        amp_u0=_number(dd, "amp_u0", "data.", default=ddef.amp_u0),
        amp_u1=_number(dd, "amp_u1", "data.", default=ddef.amp_u1),
    )
    if not grid.r0 < data.center - data.width:
        raise ConfigValidationError("data.center", "bump must stay clear of the inner radius r0")
    if not data.support_radius < grid.r_max:
        raise ConfigValidationError("data.center", "bump must end below grid.r_max")

    rr = _section(d, "run")
    _unknown(rr, {"T", "dt", "cfl", "sample_every", "sample_times", "field_times", "fit_window",
                  "duhamel_t"}, "run.")
    rdef = RunConfig()
    T = _number(rr, "T", "run.", default=rdef.T, positive=True)
    dt = _number(rr, "dt", "run.", positive=True) if rr.get("dt") is not None else None
    cfl = _number(rr, "cfl", "run.", default=rdef.cfl, positive=True)
    sample_times = _times(rr["sample_times"], "run.sample_times") if rr.get("sample_times") is not None else None
    if sample_times is not None and any(not 0 <= s <= T for s in sample_times):
        raise ConfigValidationError("run.sample_times", "all times must lie in [0, run.T]")
    field_times = _times(rr.get("field_times", []), "run.field_times")
    if any(not 0 <= s <= T for s in field_times):
        raise ConfigValidationError("run.field_times", "all times must lie in [0, run.T]")
    fit_window = None
    if rr.get("fit_window") is not None:
        fw = _times(rr["fit_window"], "run.fit_window")
        if len(fw) != 2 or not 1.0 <= fw[0] < fw[1] <= T:
            raise ConfigValidationError("run.fit_window", "expected [t_lo, t_hi] with 1 <= t_lo < t_hi <= run.T")
        fit_window = (fw[0], fw[1])
    run = RunConfig(
        T=T, dt=dt, cfl=cfl,
        sample_every=_number(rr, "sample_every", "run.", default=rdef.sample_every, positive=True),
        sample_times=sample_times,
        field_times=field_times,
        fit_window=fit_window,
        duhamel_t=_number(rr, "duhamel_t", "run.", default=rdef.duhamel_t, positive=True),
    )
    step = dt if dt is not None else cfl * grid.dr
    if require_wave:
        if step / grid.dr > 0.9 + 1e-12:
            raise ConfigValidationError("run.cfl", f"dt/dr = {step / grid.dr:.4g} exceeds 0.9")
        limit = grid.r_max - data.support_radius - 4.0 * grid.dr
        if T > limit + 1e-12:
            raise ConfigValidationError(
                "grid.r_max",
                f"r_max={grid.r_max} < R0 + T + 4 dr = {data.support_radius + T + 4 * grid.dr:.6g}; "
                "finite-speed truncation rule: the light cone must not reach the outer radius",
            )

    pert = None
    if d.get("perturbation") is not None:
        pd = _section(d, "perturbation")
        _unknown(pd, {"height", "center", "width"}, "perturbation.")
        pert = PerturbationConfig(
            height=_number(pd, "height", "perturbation."),
            center=_number(pd, "center", "perturbation."),
            width=_number(pd, "width", "perturbation.", positive=True),
        )

    checks = d.get("checks", list(DEFAULT_CHECKS))
    if not isinstance(checks, list) or not all(isinstance(c, str) for c in checks):
        raise ConfigValidationError("checks", "expected a list of check names")
    for i, c in enumerate(checks):
        if c not in KNOWN_CHECKS:
            raise ConfigValidationError(f"checks[{i}]", f"unknown check {c!r}; known: {', '.join(KNOWN_CHECKS)}")
    rate_checks = sorted(set(checks) & {"cor2", "thm1", "propmain", "heat_rate"})
    if rate_checks:
        lo, hi = fit_window if fit_window is not None else (max(1.0, 5.0 * data.support_radius), T)
        if not hi > lo:
            raise ConfigValidationError(
                "run.fit_window",
                f"default window [{lo:g}, {hi:g}] is empty; lengthen run.T, set run.fit_window "
                f"or drop the rate checks {rate_checks}",
            )
    out = d.get("output_dir", "runs/default")
    if not isinstance(out, str) or not out:
        raise ConfigValidationError("output_dir", "expected a non-empty string")
    return ExperimentConfig(N, alpha, a0, eps, grid, data, run, pert, tuple(checks), out)


def load_config(path: str | Path, require_wave: bool = True) -> ExperimentConfig:
    """Read and validate a JSON config; ``$DAMPWAVE_OUTPUT_DIR`` overrides ``output_dir``."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigParseError(f"cannot read {path}: {exc}") from exc
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigParseError(f"{path}: invalid JSON at line {exc.lineno}: {exc.msg}") from exc
    cfg = config_from_dict(raw, require_wave=require_wave)
    override = os.environ.get(OUTPUT_ENV)
    if override:
        cfg = cfg.with_output_dir(override)
    return cfg
