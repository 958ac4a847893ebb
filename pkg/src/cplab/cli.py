"""Command-line front end.

    cplab <verb> --config exp.ini --out results/ [--seed N] [--jobs N] [--golden DIR]

Verbs: check-weight, sparse-dominate, verify, hunt, sweep, report.  Exit
codes: 0 success, 1 golden mismatch, 2 bad invocation or config, 3 numeric
failure.  Errors are also written to stderr as one JSON object.
"""
from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import json
import logging
import math
import os
import sys
import tempfile
from pathlib import Path
from typing import List

from .config import ExperimentConfig, load_config
from .core import format_gridfn
from .errors import ConfigError, CplabError, NumericError
from .lab import ExperimentResult, Row, run_experiment, sweep

VERBS = ("check-weight", "sparse-dominate", "verify", "hunt", "sweep", "report")
COLUMNS = ("experiment", "K", "L", "p", "r", "constant", "extremizer-id")
_LEVELS = {"quiet": logging.WARNING, "info": logging.INFO, "debug": logging.DEBUG}

log = logging.getLogger("cplab")


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, float):
        return repr(x)
    return str(x)


def rows_to_csv(rows: List[Row]) -> str:
    buf = io.StringIO()
    out = csv.writer(buf, lineterminator="\n")
    out.writerow(COLUMNS)
    for r in rows:
        out.writerow([r.experiment, r.K, r.L, _fmt(r.p), _fmt(r.r), _fmt(float(r.constant)), r.extremizer])
    return buf.getvalue()


def _json_safe(x):
    if isinstance(x, float) and not math.isfinite(x):
        return repr(x)
    if isinstance(x, dict):
        return {str(k): _json_safe(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_json_safe(v) for v in x]
    return x


def _atomic_write(path: Path, text: str):
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        os.unlink(tmp)
        raise


def _check_finite(verb: str, rows: List[Row]):
    for r in rows:
        if isinstance(r.constant, float) and math.isnan(r.constant):
            raise NumericError(r.experiment, f"NaN constant in {verb}")


def _write_outputs(out: Path, verb: str, cfg: ExperimentConfig, result: ExperimentResult, extra=None):
    report = {
        "verb": verb,
        "experiment": cfg.experiment,
        "seed": cfg.seed,
        "config": _json_safe({k: v for k, v in dataclasses.asdict(cfg).items() if k != "extras"}),
        "rows": [_json_safe(dataclasses.asdict(r)) for r in result.rows],
        "details": _json_safe(result.details),
    }
    if extra:
        report.update(_json_safe(extra))
    # artifacts and tables first, the report last: its presence marks a complete run
    for name, f in sorted(result.artifacts.items()):
        _atomic_write(out / "artifacts" / f"{name}.gridfn", format_gridfn(f))
    _atomic_write(out / "tables" / f"{verb}.csv", rows_to_csv(result.rows))
    _atomic_write(out / "report.json", json.dumps(report, indent=2, sort_keys=True) + "\n")


def _read_table(path: Path) -> List[dict]:
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


def compare_golden(rows: List[Row], golden: Path, verb: str, rel: float = 1e-6) -> List[str]:
    path = golden / "tables" / f"{verb}.csv" if (golden / "tables").is_dir() else golden / f"{verb}.csv"
    if not path.exists():
        return [f"golden table {path} missing"]
    want = _read_table(path)
    got = list(csv.DictReader(io.StringIO(rows_to_csv(rows))))
    problems = []
    if len(want) != len(got):
        problems.append(f"row count {len(got)} != golden {len(want)}")
    for g, w in zip(got, want):
        a, b = float(g["constant"]), float(w["constant"])
        if g["experiment"] != w["experiment"] or not math.isclose(a, b, rel_tol=rel, abs_tol=1e-300):
            problems.append(f"{g['experiment']} {a!r} != golden {w['experiment']} {b!r}")
    return problems


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="cplab", description="Weighted inequality laboratory on dyadic grids.")
    ap.add_argument("verb", choices=VERBS)
    ap.add_argument("--config", type=Path)
    ap.add_argument("--out", type=Path, default=Path("results"))
    ap.add_argument("--seed", type=int)
    ap.add_argument("--jobs", type=int, default=1)
    ap.add_argument("--golden", type=Path)
    return ap


def _fail(code: int, kind: str, message: str, **extra) -> int:
    rec = {"error": kind, "message": message}
    rec.update(extra)
    print(json.dumps(rec, sort_keys=True), file=sys.stderr)
    return code


def _report(out: Path) -> int:
    path = out / "report.json"
    if not path.exists():
        return _fail(2, "usage", f"no report at {path}")
    data = json.loads(path.read_text(encoding="utf-8"))
    rows = [Row(**r) for r in data["rows"]]
    sys.stdout.write(rows_to_csv(rows))
    return 0


def main(argv=None) -> int:
    level = os.environ.get("CPLAB_LOG", "quiet").lower()
    logging.basicConfig(level=_LEVELS.get(level, logging.WARNING), format="%(levelname)s %(name)s: %(message)s")
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if args.verb == "report":
        return _report(args.out)
    if args.config is None:
        return _fail(2, "usage", f"{args.verb} needs --config")
    if args.jobs < 1:
        return _fail(2, "usage", "--jobs must be positive")
    try:
        cfg = load_config(args.config)
    except ConfigError as exc:
        return _fail(2, "config", str(exc))
    if args.seed is not None:
        cfg = dataclasses.replace(cfg, seed=args.seed)
    experiment = {"check-weight": "check-weight", "sparse-dominate": "sparse-dominate",
                  "verify": "best-constant", "hunt": "hunt"}.get(args.verb, cfg.experiment)
    cfg = dataclasses.replace(cfg, experiment=experiment)
    try:
        extra = None
        if args.verb == "sweep":
            rep = sweep(cfg, jobs=args.jobs)
            result = ExperimentResult(rep.rows)
            extra = {"drift": rep.drift, "unstable": [list(u) for u in rep.unstable], "threshold": rep.threshold}
        else:
            result = run_experiment(cfg, jobs=args.jobs)
        _check_finite(args.verb, result.rows)
    except ConfigError as exc:
        return _fail(2, "config", str(exc))
    except NumericError as exc:
        return _fail(3, "numeric", str(exc), operation=exc.operation)
    except FloatingPointError as exc:
        return _fail(3, "numeric", str(exc), operation=args.verb)
    except CplabError as exc:
        return _fail(2, type(exc).__name__, str(exc))
    _write_outputs(args.out, args.verb, cfg, result, extra)
    if args.golden is not None:
        problems = compare_golden(result.rows, args.golden, args.verb)
        if problems:
            return _fail(1, "golden", "; ".join(problems))
    return 0


if __name__ == "__main__":
    sys.exit(main())
