"""``dampwave`` command line.

Exit codes: 0 all checks pass, 1 a check failed, 2 the config could not be
parsed, 3 the config is invalid, 4 the run aborted.
"""
from __future__ import annotations

import argparse
import itertools
import json
import logging
import sys
import tempfile
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from dampwave.config import (
    ConfigParseError,
    ConfigValidationError,
    config_from_dict,
    load_config,
)
from dampwave.experiment import PIPELINES, run_experiment
from dampwave.io import write_json

EXIT_OK, EXIT_CHECK, EXIT_PARSE, EXIT_INVALID, EXIT_ABORT = 0, 1, 2, 3, 4

log = logging.getLogger("dampwave")


def _identical_csvs(a: Path, b: Path) -> tuple[bool, list[str]]:
    names_a = sorted(p.relative_to(a) for p in a.rglob("*.csv"))
    names_b = sorted(p.relative_to(b) for p in b.rglob("*.csv"))
    if names_a != names_b:
        return False, ["file sets differ"]
    diff = [str(n) for n in names_a if (a / n).read_bytes() != (b / n).read_bytes()]
    return not diff, diff


def _run_one(kind: str, cfg, seed_check: bool) -> int:
    art = run_experiment(cfg, kind)
    status = EXIT_OK if art.all_pass else EXIT_CHECK
    if seed_check:
        with tempfile.TemporaryDirectory() as tmp:
            run_experiment(cfg.with_output_dir(tmp), kind)
            same, diff = _identical_csvs(Path(cfg.output_dir), Path(tmp))
        write_json(Path(cfg.output_dir) / "determinism.json", {"identical": same, "differing": diff})
        log.info("determinism check: %s", "identical" if same else f"differs in {diff}")
        if not same:
            status = EXIT_CHECK
    _summarize(art)
    return status


def _summarize(art) -> None:
    verdict = json.loads(Path(art.verdict_json).read_text(encoding="utf-8"))
    for v in verdict["verdicts"]:
        slope = v["fitted_slope"]
        shown = "n/a" if slope is None else f"{slope:+.4f}"
        print(f"{'PASS' if v['pass'] else 'FAIL'}  {v['quantity']:<10} slope {shown}  target -{v['target']:.4f} tol {v['tol']}")
    for c in verdict["checks"]:
        print(f"{'PASS' if c['pass'] else 'FAIL'}  {c['name']}")
    print(f"artifacts in {art.output_dir}")


def _parse_param(spec: str) -> tuple[str, list]:
    key, sep, values = spec.partition("=")
    if not sep or not values:
        raise ConfigValidationError("--param", f"expected key=v1,v2,... got {spec!r}")
    out = []
    for tok in values.split(","):
        try:
            out.append(json.loads(tok))
        except json.JSONDecodeError as exc:
            raise ConfigValidationError(f"--param {key}", f"bad value {tok!r}") from exc
    return key, out


def _set_path(d: dict, dotted: str, value) -> None:
    keys = dotted.split(".")
    for k in keys[:-1]:
        d = d.setdefault(k, {})
    d[keys[-1]] = value


def _sweep_worker(args) -> dict:
    kind, raw, out = args
    cfg = config_from_dict(raw, require_wave=kind != "heat").with_output_dir(out)
    try:
        art = run_experiment(cfg, kind)
    except Exception as exc:  # reported per run, the sweep continues
        return {"output_dir": out, "status": "aborted", "error": f"{type(exc).__name__}: {exc}"}
    return {"output_dir": out, "status": "ok", "all_pass": art.all_pass}


def _sweep(args) -> int:
    raw_path = Path(args.config)
    try:
        raw = json.loads(raw_path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigParseError(str(exc)) from exc
    base = load_config(raw_path, require_wave=args.kind != "heat")
    params = [_parse_param(p) for p in args.param]
    jobs = []
    for i, combo in enumerate(itertools.product(*[vals for _, vals in params])):
        d = json.loads(json.dumps(raw))
        label = []
        for (key, _), val in zip(params, combo):
            _set_path(d, key, val)
            label.append(f"{key.split('.')[-1]}={val}")
        out = str(Path(base.output_dir) / f"run{i:03d}_{'_'.join(label) or 'base'}")
        config_from_dict(d, require_wave=args.kind != "heat")  # fail fast with exit 3
        jobs.append((args.kind, d, out))
    with ProcessPoolExecutor(max_workers=args.workers) as pool:
        results = list(pool.map(_sweep_worker, jobs))
    write_json(Path(base.output_dir) / "sweep.json", {"kind": args.kind, "runs": results})
    for r in results:
        print(f"{r['status']:<8} {r.get('all_pass')!s:<6} {r['output_dir']} {r.get('error', '')}")
    if any(r["status"] != "ok" for r in results):
        return EXIT_ABORT
    return EXIT_OK if all(r["all_pass"] for r in results) else EXIT_CHECK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dampwave", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in PIPELINES:
        sp = sub.add_parser(name)
        sp.add_argument("config", help="experiment JSON file")
        sp.add_argument("--output-dir", help="override output_dir from the config")
        sp.add_argument("--seed-check", action="store_true",
                        help="run twice and require byte-identical CSV output")
    sw = sub.add_parser("sweep", help="run one pipeline over a parameter grid, concurrently")
    sw.add_argument("config")
    sw.add_argument("--kind", default="compare", choices=sorted(PIPELINES))
    sw.add_argument("--param", action="append", default=[],
                    help="dotted.key=v1,v2,... (repeatable; the cartesian product is run)")
    sw.add_argument("--workers", type=int, default=None)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        if args.command == "sweep":
            return _sweep(args)
        cfg = load_config(args.config, require_wave=args.command in ("wave", "compare", "duhamel"))
        if args.output_dir:
            cfg = cfg.with_output_dir(args.output_dir)
        return _run_one(args.command, cfg, args.seed_check)
    except ConfigParseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except ConfigValidationError as exc:
        print(f"invalid config: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except Exception as exc:
        print(f"run aborted: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_ABORT


if __name__ == "__main__":
    sys.exit(main())
