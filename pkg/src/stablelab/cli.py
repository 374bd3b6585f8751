"""Command-line runner: ``stablelab <kind> --config FILE`` and ``stablelab report``."""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import tempfile
import time
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from stablelab import __version__
from stablelab._kernels import BACKEND
from stablelab.config import KINDS, MAX_SEED, Check, ConfigError, ExperimentConfig, load_config
from stablelab.experiments import RUNNERS

OUT_ENV = "STABLELAB_OUT"
CSV_HEADER = ["experiment_id", "metric", "value", "trials", "seed"]


@dataclass
class RunManifest:
    experiment_id: str
    kind: str
    config_hash: str
    version: str
    backend: str
    seed: int
    wall_time: float
    files: list[str]
    checks: list[str]

    def save(self, out_dir: Path) -> Path:
        path = out_dir / f"{self.experiment_id}.manifest.json"
        atomic_write(path, json.dumps(asdict(self), indent=2, sort_keys=True) + "\n")
        return path

    @classmethod
    def load(cls, path) -> RunManifest:
        return cls(**json.loads(Path(path).read_text()))


def format_value(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    v = float(v)
    if math.isnan(v):
        return "nan"
    return format(v, ".12g")


def atomic_write(path: Path, text: str):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _csv_text(rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    for row in rows:
        writer.writerow(row)
    return buf.getvalue()


def run_experiment(
    cfg: ExperimentConfig, out_dir, include_failures: bool = False, write_json: bool = False
) -> RunManifest:
    """Run one experiment, write its CSV (and JSON) outputs and its manifest."""
    out_dir = Path(out_dir)
    checks = cfg.checks()
    if cfg.kind != "dims" and cfg.text("mode", "class_error") != "agnostic":
        _ = cfg.trials  # fail fast on a bad trial count
    start = time.perf_counter()
    result = RUNNERS[cfg.kind](cfg, include_failures)
    wall = time.perf_counter() - start
    seed = cfg.seed
    rows = [CSV_HEADER] + [
        [cfg.experiment_id, name, format_value(value), result.trials, seed] for name, value in result.metrics
    ]
    files = []
    main_csv = f"{cfg.experiment_id}.csv"
    atomic_write(out_dir / main_csv, _csv_text(rows))
    files.append(main_csv)
    for suffix, table in result.extra_csv.items():
        name = f"{cfg.experiment_id}_{suffix}.csv"
        atomic_write(out_dir / name, _csv_text([table[0]] + [[format_value(v) for v in r] for r in table[1:]]))
        files.append(name)
    if write_json:
        name = f"{cfg.experiment_id}.json"
        payload = {
            "experiment_id": cfg.experiment_id,
            "kind": cfg.kind,
            "seed": seed,
            "trials": result.trials,
            "metrics": {k: format_value(v) for k, v in result.metrics},
            "detail": result.detail,
        }
        atomic_write(out_dir / name, json.dumps(payload, indent=2, sort_keys=True) + "\n")
        files.append(name)
    manifest = RunManifest(
        cfg.experiment_id,
        cfg.kind,
        cfg.fingerprint(),
        __version__,
        BACKEND,
        seed,
        round(wall, 6),
        files,
        [str(c) for c in checks],
    )
    manifest.save(out_dir)
    return manifest


def _read_metrics(path: Path) -> list[list[str]]:
    if not path.is_file():
        raise FileNotFoundError(f"missing output file {path}")
    with path.open(newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0] != CSV_HEADER:
        raise ValueError(f"{path} is not a metrics CSV")
    return rows[1:]


def _parse_check(text: str) -> Check:
    metric, op, target = text.split()
    return Check(metric, op, float(target))


def emit_report(manifests, out_dir) -> tuple[str, int]:
    """Combined CSV plus a pass/fail summary. Returns ``(summary, failures)``."""
    manifests = list(manifests)
    if not manifests:
        raise ValueError("no manifests to report")
    out_dir = Path(out_dir)
    combined = [CSV_HEADER]
    lines, failures, total = [], 0, 0
    for m in manifests:
        rows = _read_metrics(out_dir / f"{m.experiment_id}.csv")
        combined.extend(rows)
        values = {r[1]: r[2] for r in rows}
        lines.append(f"[{m.experiment_id}] kind={m.kind} seed={m.seed} metrics={len(rows)}")
        for text in m.checks:
            check = _parse_check(text)
            total += 1
            raw = values.get(check.metric)
            if raw is None:
                ok, shown = False, "missing"
            else:
                num = {"true": 1.0, "false": 0.0}.get(raw, None)
                num = float(raw) if num is None else num
                ok, shown = check.evaluate(num), raw
            failures += not ok
            lines.append(f"  {'PASS' if ok else 'FAIL'}  {text}  (value {shown})")
    lines.append(f"experiments: {len(manifests)}  checks: {total}  failures: {failures}")
    summary = "\n".join(lines) + "\n"
    atomic_write(out_dir / "report.csv", _csv_text(combined))
    atomic_write(out_dir / "summary.txt", summary)
    return summary, failures


def _seed_arg(text: str) -> int:
    value = int(text)
    if not 0 <= value <= MAX_SEED:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="stablelab", description="Stability and list-replicability experiments.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in KINDS + ("report",):
        p = sub.add_parser(name, help=f"run {name} experiments" if name != "report" else "summarise runs")
        p.add_argument("--config", type=Path, required=name != "report", help="INI experiment file")
        p.add_argument("--seed", type=_seed_arg, help="override every experiment's master seed")
        p.add_argument("--out", type=Path, help=f"output directory (default ${OUT_ENV} or ./stablelab-out)")
        p.add_argument("--include-failures", action="store_true", help="count flagged failures in reported mass")
        p.add_argument("--json", action="store_true", help="also write JSON mirrors")
        if name != "report":
            p.add_argument("--only", help="run just this experiment id")
    return parser


def _error(payload: dict) -> int:
    print(json.dumps(payload, sort_keys=True), file=sys.stderr)
    return 2


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    out_dir = args.out or Path(os.environ.get(OUT_ENV, "stablelab-out"))
    try:
        configs = load_config(args.config, args.seed) if args.config else []
        if args.command == "report":
            if configs:
                manifests = [run_experiment(c, out_dir, args.include_failures, args.json) for c in configs]
            else:
                paths = sorted(Path(out_dir).glob("*.manifest.json"))
                manifests = [RunManifest.load(p) for p in paths]
            summary, failures = emit_report(manifests, out_dir)
            sys.stdout.write(summary)
            return 1 if failures else 0
        selected = [c for c in configs if c.kind == args.command]
        if args.only:
            selected = [c for c in selected if c.experiment_id == args.only]
        if not selected:
            raise ConfigError("-", "kind", f"no {args.command} experiments in {args.config}")
        for cfg in selected:
            m = run_experiment(cfg, out_dir, args.include_failures, args.json)
            print(f"{m.experiment_id}: wrote {', '.join(m.files)} ({m.wall_time:.2f}s)")
        return 0
    except ConfigError as exc:
        return _error(exc.as_dict())
    except (FileNotFoundError, ValueError) as exc:
        return _error({"error": type(exc).__name__, "reason": str(exc)})


if __name__ == "__main__":
    sys.exit(main())
