"""Command-line driver: ``twistlab <command> [--config c.json] [--out dir] [--tol t] [--jobs n]``.

Each check writes one CSV per table plus a JSON summary into the output
directory, and the run writes ``manifest.json`` (config hash, versions, pass
flags).  The exit code is 0 iff every invoked check passes, 2 on configuration
errors.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import inspect
import io
import json
import logging
import os
import platform
import sys
import tempfile
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import suite

log = logging.getLogger("twistlab")

COMMANDS = {
    "degenerate": ["degeneration_roundtrip"],
    "extend": ["extension_exactness"],
    "action-growth": ["action_growth"],
    "smooth": ["smoothing"],
    "index": ["index_suite"],
    "katok": ["katok_values", "katok_fixed_points"],
    "billiard": ["billiard"],
    "orbits": ["orbit_survey"],
    "chords": ["chords"],
    "symplecticity": ["symplecticity"],
    "all": [fn.__name__ for fn in suite.ACCEPTANCE] + ["chords"],
}
CHECKS = {name: getattr(suite, name) for names in COMMANDS.values() for name in names}


class ConfigError(ValueError):
    pass


def load_config(path: str | None) -> tuple[dict, str]:
    """Parse and validate a JSON config; returns the dict and its sha256."""
    if path is None:
        return {}, hashlib.sha256(b"{}").hexdigest()
    raw = Path(path).read_bytes()
    try:
        cfg = json.loads(raw.decode("utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc
    if not isinstance(cfg, dict):
        raise ConfigError(f"{path}:1:1: top level must be an object")
    validate_config(cfg)
    return cfg, hashlib.sha256(raw).hexdigest()


def validate_config(cfg: dict) -> None:
    for key, val in cfg.items():
        if key in ("seed", "tol"):
            continue
        if key not in CHECKS:
            raise ConfigError(f"unknown check {key!r} (known: {', '.join(sorted(CHECKS))})")
        if not isinstance(val, dict):
            raise ConfigError(f"section {key!r} must be an object of keyword arguments")
        params = inspect.signature(CHECKS[key]).parameters
        for arg in val:
            if arg not in params:
                raise ConfigError(f"check {key!r} has no parameter {arg!r}")
    for key, val in _walk(cfg):
        if "tol" in key and not (isinstance(val, (int, float)) and val > 0):
            raise ConfigError(f"tolerance {key!r} must be a positive number")


def _walk(cfg, prefix=""):
    for k, v in cfg.items():
        if isinstance(v, dict):
            yield from _walk(v, f"{prefix}{k}.")
        else:
            yield f"{prefix}{k}", v


def check_kwargs(name: str, cfg: dict, tol: float | None) -> dict:
    params = inspect.signature(CHECKS[name]).parameters
    kw = dict(cfg.get(name, {}))
    if "seed" in cfg and "seed" in params:
        kw.setdefault("seed", cfg["seed"])
    t = tol if tol is not None else cfg.get("tol")
    if t is not None and "tol" in params:
        kw.setdefault("tol", t)
    return kw


def _cell(v):
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if v is None:
        return ""
    return str(v)


def _jsonable(v):
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple, np.ndarray)):
        return [_jsonable(x) for x in v]
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        f = float(v)
        return f if np.isfinite(f) else repr(f)
    return v


def atomic_write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def table_csv(rows: list[dict]) -> str:
    cols: list[str] = []
    for r in rows:
        cols += [k for k in r if k not in cols]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(cols)
    for r in rows:
        w.writerow([_cell(r.get(c)) for c in cols])
    return buf.getvalue()


def run_check(name: str, kwargs: dict, out: Path | None) -> dict:
    res = CHECKS[name](**kwargs)
    stem = name.replace("_", "-")
    files = []
    if out is not None:
        for tname, rows in res.tables.items():
            p = out / f"{stem}.{tname}.csv"
            atomic_write(p, table_csv(rows))
            files.append(p.name)
        p = out / f"{stem}.json"
        atomic_write(p, json.dumps(_jsonable({"check": res.name, "passes": res.passes, "summary": res.summary}),
                                   indent=2, sort_keys=True) + "\n")
        files.append(p.name)
    return {"check": name, "label": res.name, "passes": bool(res.passes), "runtime": res.runtime,
            "summary": _jsonable(res.summary), "files": files}


def _versions() -> dict:
    import scipy

    from . import __version__
    return {"twistlab": __version__, "python": platform.python_version(), "numpy": np.__version__,
            "scipy": scipy.__version__}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="twistlab", description=__doc__.splitlines()[0])
    ap.add_argument("command", choices=sorted(COMMANDS))
    ap.add_argument("--config", help="JSON file: {check_name: {kwarg: value}, 'seed': int, 'tol': float}")
    ap.add_argument("--out", default="twistlab-out", help="output directory (TWISTLAB_OUT overrides)")
    ap.add_argument("--tol", type=float, help="integrator tolerance for checks that accept one")
    ap.add_argument("--jobs", type=int, default=1, help="worker processes for independent checks")
    ap.add_argument("-v", "--verbose", action="store_true")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    if args.tol is not None and not args.tol > 0:
        print("error: --tol must be positive", file=sys.stderr)
        return 2
    try:
        cfg, digest = load_config(args.config)
    except (ConfigError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    out = Path(os.environ.get("TWISTLAB_OUT") or args.out)
    names = COMMANDS[args.command]
    jobs = [(n, check_kwargs(n, cfg, args.tol)) for n in names]
    if args.jobs > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            futs = [pool.submit(run_check, n, kw, out) for n, kw in jobs]
            results = [f.result() for f in futs]
    else:
        results = [run_check(n, kw, out) for n, kw in jobs]
    for r in results:
        print(f"[{'PASS' if r['passes'] else 'FAIL'}] {r['label']} ({r['runtime']:.2f} s)")
    ok = all(r["passes"] for r in results)
    manifest = {"command": args.command, "config_sha256": digest, "config": _jsonable(cfg),
                "tol": args.tol, "versions": _versions(), "passes": ok,
                "checks": [{k: r[k] for k in ("check", "passes", "files", "summary")} for r in results]}
    atomic_write(out / "manifest.json", json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    print(f"{'PASS' if ok else 'FAIL'}: {sum(r['passes'] for r in results)}/{len(results)} checks, output in {out}")
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main())
