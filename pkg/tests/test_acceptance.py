"""End-to-end acceptance checks, one test per criterion.

Each test prints a single ``PASS``/``FAIL`` line (shown even without ``-s``)
and then asserts at the stated tolerance.
"""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np
import pytest

from dampwave.cli import EXIT_CHECK, EXIT_INVALID, EXIT_OK, EXIT_PARSE, main
from dampwave.config import config_from_dict, load_config
from dampwave.energy import identity_residual_e1
from dampwave.experiment import run_experiment, transform_report
from dampwave.grid import DampingProfile, build_grid, bump_initial_data
from dampwave.io import read_csv
from dampwave.rates import fit_decay_slope
from dampwave.wave import WaveRunConfig, solve_wave
from dampwave.weight import assemble_A_eps

CONFIGS = Path(__file__).resolve().parents[1] / "configs"
WINDOW = (40.0, 200.0)


def _report(capsys, number: int, ok: bool, detail: str) -> None:
    with capsys.disabled():
        print(f"\n{'PASS' if ok else 'FAIL'} criterion {number:>2}: {detail}")


def _json(path: Path) -> dict:
    return json.loads(path.read_text(encoding="utf-8"))


@pytest.fixture(scope="module")
def reference(tmp_path_factory):
    cfg = load_config(CONFIGS / "reference.json")
    out = tmp_path_factory.mktemp("reference")
    art = run_experiment(cfg.with_output_dir(out), "compare")
    return art, read_csv(out / "energy.csv"), _json(out / "verdict.json")


def _slope(cols, name, window=WINDOW):
    return fit_decay_slope((cols["t"], cols[name]), window).slope


def _check(verdict, name):
    return next(c for c in verdict["checks"] if c["name"] == name)


def test_criterion_01_l2a_decay_rate(reference, capsys):
    art, cols, _ = reference
    s = _slope(cols, "l2a_u")
    ok = abs(s + 0.5) <= 0.08
    _report(capsys, 1, ok, f"slope of ||sqrt(a) u|| on [40, 200] = {s:+.4f}, target -0.5 +/- 0.08 "
                           f"(run took {art.wall_clock:.1f} s)")
    assert ok


def test_criterion_02_diffusion_gap(reference, capsys):
    _, cols, _ = reference
    s_u = _slope(cols, "l2a_u")
    s_d = _slope(cols, "l2a_diff")
    gap = s_u - s_d
    ok = gap >= 0.45
    _report(capsys, 2, ok, f"slope(u - v) = {s_d:+.4f}, slope(u) = {s_u:+.4f}, gap {gap:.4f} >= 0.45")
    assert ok


def test_criterion_03_heat_rate(tmp_path, capsys):
    cfg = load_config(CONFIGS / "heat_reference.json", require_wave=False)
    run_experiment(cfg.with_output_dir(tmp_path), "heat")
    cols = read_csv(tmp_path / "heat.csv")
    s = fit_decay_slope((cols["t"], cols["l2dmu_v"]), (40.0, 500.0)).slope
    tail = _check(_json(tmp_path / "verdict.json"), "heat_tail")["pass"]
    ok = abs(s + 0.5) <= 0.06 and tail
    _report(capsys, 3, ok, f"heat slope of ||v||_dmu on [40, 500] = {s:+.4f}, target -0.5 +/- 0.06; "
                           f"tail clear {tail}")
    assert ok


def test_criterion_04_energy_rates(reference, capsys):
    _, cols, _ = reference
    s_ea = _slope(cols, "E_a")
    s_e1 = _slope(cols, "E1")
    ok = s_ea <= -0.85 and s_e1 <= -1.8
    _report(capsys, 4, ok, f"slope E_a = {s_ea:+.4f} (<= -0.85), slope E1 = {s_e1:+.4f} (<= -1.8)")
    assert ok


def test_criterion_05_weight_construction(capsys):
    p = DampingProfile(1.0, 1.0)
    w = assemble_A_eps(p, build_grid(1.0, 300.0, 6001, 2), 0.1)
    rep = w.report
    h = rep.h
    tail_ok = abs(rep.tail_ratio_min - h) <= 0.05 * h and abs(rep.tail_ratio_max - h) <= 0.05 * h
    ok = rep.ellip_pass and rep.positive and rep.grad_ratio_sup <= h + 0.1 + 0.02 and tail_ok
    _report(capsys, 5, ok,
            f"Lap A / a in [{rep.ellip_min:.4f}, {rep.ellip_max:.4f}] (tol {rep.ellip_tol:.1e}), "
            f"grad ratio sup {rep.grad_ratio_sup:.4f} <= {h + 0.12:.2f}, "
            f"tail ratio in [{rep.tail_ratio_min:.4f}, {rep.tail_ratio_max:.4f}] vs h={h:g}")
    assert ok


def _e1_worst(n: int) -> float:
    p = DampingProfile(1.0, 1.0)
    g = build_grid(1.0, 20.0, n, 2)
    d = bump_initial_data(g, 3.0, 1.0, 1.0, 0.5)
    w = assemble_A_eps(p, g, 0.1)
    dt = 0.45 * g.dr
    ts = []
    for t in np.arange(1.0, 10.0, 0.5):
        k = round(t / dt)
        ts += [(k - 1) * dt, k * dt, (k + 1) * dt]
    sn = solve_wave(WaveRunConfig(dt=dt, T=9.6, sample_times=ts), d, g, p)
    return max(identity_residual_e1(sn[i], sn[i + 1], sn[i + 2], w, p).residual
               for i in range(0, len(sn), 3))


def test_criterion_06_energy_identity_order(capsys):
    coarse, fine = _e1_worst(1521), _e1_worst(3041)
    ratio = coarse / fine
    ok = 3.3 <= ratio <= 4.8
    _report(capsys, 6, ok, f"identity residual {coarse:.3e} -> {fine:.3e}, ratio {ratio:.3f} in [3.3, 4.8]")
    assert ok


def test_criterion_07_inequality_suite(reference, capsys):
    _, cols, verdict = reference
    hardy_ok = bool(np.all(cols["hardy_margin"] >= -1e-8 * cols["E_dx"]))
    mono_ok = bool(np.all(cols["mono_violation"] <= 1e-8 * cols["E1"][0]))
    app = _check(verdict, "appfps")
    ok = hardy_ok and mono_ok and app["pass"] and _check(verdict, "composite")["pass"]
    _report(capsys, 7, ok, f"hardy {hardy_ok}, monotonicity {mono_ok} "
                           f"(worst {cols['mono_violation'].max():.2e}), appfps {app['pass']}")
    assert ok


def test_criterion_08_finite_propagation(reference, capsys):
    _, _, verdict = reference
    sup = _check(verdict, "support")
    ok = sup["worst"] < 1e-12
    _report(capsys, 8, ok, f"max |u| beyond R0 + t + 2 dr = {sup['worst']:.3e} at t={sup['worst_time']:.3f}; "
                           f"beyond the one-node-per-step cone {sup['discrete_cone_leak']:.1e}")
    assert ok


def test_criterion_09_transform(capsys):
    rep3 = transform_report(config_from_dict({"N": 3, "alpha": 1.0}, require_wave=False))
    rep2 = transform_report(config_from_dict({"N": 2, "alpha": 1.0}, require_wave=False))
    ratios = rep3["psi0_ratios"]
    iso = max(rep3["isometry_relative_error"], rep2["isometry_relative_error"])
    ok = iso < 1e-6 and all(3.5 <= q <= 4.5 for q in ratios)
    _report(capsys, 9, ok, f"isometry error {iso:.2e} < 1e-6; psi0 residual ratios "
                           + ", ".join(f"{q:.3f}" for q in ratios))
    assert ok


def test_criterion_10_duhamel(tmp_path, capsys):
    cfg = load_config(CONFIGS / "short.json")
    run_experiment(cfg.with_output_dir(tmp_path), "duhamel")
    verdict = _json(tmp_path / "verdict.json")
    at_t = _check(verdict, "duhamel_t")
    at_0 = _check(verdict, "duhamel_t0")
    ok = at_t["relative_mismatch"] < 0.05 and at_0["max_abs_error"] <= 1e-12
    _report(capsys, 10, ok, f"mismatch at t={at_t['t']:.4f}: {at_t['relative_mismatch']:.2e} < 0.05; "
                            f"at t=0: {at_0['max_abs_error']:.1e}")
    assert ok


def test_criterion_11_determinism_and_exit_codes(reference, tmp_path, capsys):
    art, _, _ = reference
    cfg = load_config(CONFIGS / "reference.json")
    again = run_experiment(cfg.with_output_dir(tmp_path / "again"), "compare")
    pa, pb = art.csv_paths(), again.csv_paths()
    same_names = [p.relative_to(art.output_dir) for p in pa] == [p.relative_to(again.output_dir) for p in pb]
    identical = bool(pa) and same_names and all(x.read_bytes() == y.read_bytes() for x, y in zip(pa, pb))

    bad = tmp_path / "bad.json"
    bad.write_text("{", encoding="utf-8")
    raw = _json(CONFIGS / "short.json")
    invalid = tmp_path / "invalid.json"
    invalid.write_text(json.dumps({**raw, "alpha": -1.0}), encoding="utf-8")
    weight_only = tmp_path / "weight.json"
    weight_only.write_text(json.dumps({**raw, "output_dir": str(tmp_path / "w")}), encoding="utf-8")
    failing = tmp_path / "failing.json"
    failing.write_text(json.dumps({**raw, "output_dir": str(tmp_path / "f")}), encoding="utf-8")
    codes = {
        "parse": main(["wave", str(bad)]),
        "invalid": main(["wave", str(invalid)]),
        "ok": main(["weight", str(weight_only)]),
        "check": main(["wave", str(failing)]),
    }
    expected = {"parse": EXIT_PARSE, "invalid": EXIT_INVALID, "ok": EXIT_OK, "check": EXIT_CHECK}
    ok = identical and codes == expected
    _report(capsys, 11, ok, f"{len(pa)} CSVs byte-identical {identical}; exit codes {codes}")
    assert ok
