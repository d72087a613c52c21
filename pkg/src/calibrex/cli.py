"""Command-line interface: eval, correlate, search, enumerate, report.

Every command is deterministic given its flags (CALIBREX_SEED supplies the
seed when --seed is absent), writes outputs atomically via a temp file and
rename, and exits 2 with a one-line "error: ..." message on failure.
"""
from __future__ import annotations

import argparse
import contextlib
import csv
import json
import multiprocessing
import os
import sys
import tempfile
from pathlib import Path

import numpy as np

from . import analysis, archspace, search, suite
from .predictions import SplitSpec, read_csv_predictions, read_logits_file

DEFAULT_BINS = ",".join(str(b) for b in suite.DEFAULT_BIN_SIZES)


def _resolve_seed(value) -> int:
    if value is not None:
        return value
    return int(os.environ.get("CALIBREX_SEED", "0"))


@contextlib.contextmanager
def _atomic_out(path: str):
    """Yield a temp path; rename onto the target only on success."""
    directory = os.path.dirname(os.path.abspath(path)) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    os.close(fd)
    try:
        yield tmp
        os.replace(tmp, path)
    finally:
        if os.path.exists(tmp):
            os.unlink(tmp)


def _read_predictions(path: str, fmt: str):
    if not os.path.exists(path):
        raise OSError(f"no such file: {path}")
    if fmt == "bin":
        return read_logits_file(path)
    return read_csv_predictions(path)


def _read_confidences(path: str) -> np.ndarray:
    if not os.path.exists(path):
        raise OSError(f"no such file: {path}")
    values = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                values.append(float(line))
            except ValueError:
                raise ValueError(f"{path}:{lineno}: not a number: "
                                 f"{line!r}") from None
    if not values:
        raise ValueError(f"{path}: no confidence values")
    return np.asarray(values)


def _eval_one(task):
    path, fmt, config = task
    preds = _read_predictions(path, fmt)
    return suite.run_suite(preds, config)


def cmd_eval(args) -> int:
    seed = _resolve_seed(args.seed)
    bins = tuple(int(b) for b in args.bins.split(","))
    if (args.ood_in is None) != (args.ood_out is None):
        raise ValueError("--ood-in and --ood-out must be given together")
    ood = None
    if args.ood_in is not None:
        ood = (_read_confidences(args.ood_in),
               _read_confidences(args.ood_out))
    tasks = []
    for idx, path in enumerate(args.logits):
        config = suite.SuiteConfig(
            bin_sizes=bins, ood_inputs=ood,
            temperature_scale=args.temperature_scale,
            split=SplitSpec(args.val_fraction, seed=seed),
            include_accuracy=args.include_accuracy,
            benchmark_dataset=Path(path).stem,
            search_space=args.space, arch_index=idx)
        tasks.append((path, args.format, config))
    if args.jobs > 1:
        with multiprocessing.Pool(args.jobs) as pool:
            per_file = pool.map(_eval_one, tasks)
    else:
        per_file = [_eval_one(t) for t in tasks]
    records = [r for batch in per_file for r in batch]
    with _atomic_out(args.out) as tmp:
        suite.write_records(records, tmp)
    print(f"{len(records)} records written")
    return 0


def _read_table_csv(path: str) -> analysis.MetricTable:
    if not os.path.exists(path):
        raise OSError(f"no such file: {path}")
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValueError(f"{path}: empty table") from None
        if not header or header[0] != "arch_index":
            raise ValueError(f"{path}: first column must be arch_index")
        names = header[1:]
        rows = list(reader)
    if not rows:
        raise ValueError(f"{path}: no data rows")
    arch = np.array([int(r[0]) for r in rows])
    cols = {name: np.array([float(r[i + 1]) for r in rows])
            for i, name in enumerate(names)}
    return analysis.MetricTable(arch, cols)


def cmd_correlate(args) -> int:
    table = _read_table_csv(args.table)
    if args.top_k is not None:
        if args.by is None:
            raise ValueError("--top-k requires --by COLUMN")
        if args.top_k > table.n_rows:
            raise ValueError(f"--top-k {args.top_k} exceeds table size "
                             f"{table.n_rows}")
        table = analysis.top_k_by(table, args.by, args.top_k)
    columns = args.columns.split(",") if args.columns else None
    names, mat = analysis.correlation_matrix(table, columns)
    with _atomic_out(args.out) as tmp:
        analysis.write_matrix_csv(names, mat, tmp)
    print(f"{len(names)}x{len(names)} correlation matrix written")
    return 0


def cmd_search(args) -> int:
    seed = _resolve_seed(args.seed)
    if args.benchmark == "synthetic":
        bench = search.synth_benchmark(args.space, seed=seed)
    else:
        if not os.path.exists(args.benchmark):
            raise OSError(f"no such file: {args.benchmark}")
        bench = search.load_benchmark(args.benchmark)
        if bench.space != args.space:
            raise ValueError(f"benchmark is {bench.space}, "
                             f"--space says {args.space}")
    objective = search.make_objective(args.objective, args.beta)
    config = search.SearchConfig(budget=args.budget, seed=seed)
    algo = {"rs": search.random_search, "re": search.regularized_evolution,
            "ls": search.local_search}[args.algo]
    result = algo(bench, objective, config)
    with _atomic_out(args.out) as tmp:
        with open(tmp, "w") as fh:
            json.dump(result.to_dict(), fh, sort_keys=True, indent=2)
            fh.write("\n")
    shown = result.best_value * 100.0 if args.percent else result.best_value
    print(f"best {result.best_arch} objective {shown!r} "
          f"({result.evaluations} evaluations)")
    return 0


def cmd_enumerate(args) -> int:
    if args.space == "tss":
        archs = archspace.enumerate_tss()
    else:
        archs = archspace.enumerate_sss()
    lines = []
    if args.dedupe and args.space == "tss":
        if args.jobs > 1:
            with multiprocessing.Pool(args.jobs) as pool:
                fps = pool.map(archspace.canonical_fingerprint, archs,
                               chunksize=512)
        else:
            fps = [archspace.canonical_fingerprint(a) for a in archs]
        seen = set()
        for a, fp in zip(archs, fps):
            if fp not in seen:
                seen.add(fp)
                lines.append(a.to_string())
    else:
        lines = [a.to_string() for a in archs]
    with _atomic_out(args.out) as tmp:
        with open(tmp, "w") as fh:
            for line in lines:
                fh.write(line + "\n")
    print(f"{len(lines)} architectures written")
    return 0


def _bracket_labels(edges) -> list:
    labels = [f"<{edges[0]:g}"]
    for lo, hi in zip(edges, edges[1:]):
        labels.append(f"[{lo:g},{hi:g})")
    labels.append(f">={edges[-1]:g}")
    return labels


def cmd_report(args) -> int:
    records = suite.read_records(args.records)
    if not records:
        raise ValueError("no records")
    groups = {}
    if args.group_by == "bin_count":
        for r in records:
            key = "unbinned" if r.bin_count is None else str(r.bin_count)
            groups.setdefault(key, []).append(r.value)
        order = sorted((k for k in groups if k != "unbinned"), key=int)
        if "unbinned" in groups:
            order.append("unbinned")
    else:
        if args.brackets is None:
            raise ValueError("--group-by size_bracket requires --brackets")
        edges = [float(x) for x in args.brackets.split(",")]
        if any(b not in ("sss",) for b in
               {r.search_space for r in records}):
            raise ValueError("size brackets need sss records (model size "
                             "is the channel sum)")
        space = archspace.enumerate_sss()
        labels = _bracket_labels(edges)
        for r in records:
            if not 0 <= r.arch_index < len(space):
                raise ValueError(f"arch_index {r.arch_index} outside the "
                                 "sss space")
            size = archspace.model_size(space[r.arch_index])
            bracket = int(analysis.size_brackets([size], edges)[0])
            groups.setdefault(labels[bracket], []).append(r.value)
        order = [lab for lab in labels if lab in groups]
    scale = 100.0 if args.percent else 1.0
    with _atomic_out(args.out) as tmp:
        with open(tmp, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["group", "n", "median", "q1", "q3", "whisker_lo",
                        "whisker_hi", "n_outliers"])
            for key in order:
                s = analysis.boxplot_stats(groups[key])
                w.writerow([key, s.n] +
                           [repr(v * scale) for v in
                            (s.median, s.q1, s.q3, s.whisker_lo,
                             s.whisker_hi)] + [s.n_outliers])
    print(f"{len(order)} groups written")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="calibrex",
        description="Calibration measurement and architecture search over "
                    "tabular NAS benchmarks.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("eval", help="run the measurement suite on "
                                    "prediction files")
    p.add_argument("--logits", action="append", required=True,
                   metavar="PATH", help="prediction file; repeat for "
                   "several architectures")
    p.add_argument("--format", choices=("bin", "csv"), default="bin")
    p.add_argument("--bins", default=DEFAULT_BINS,
                   help="comma-separated bin counts")
    p.add_argument("--temperature-scale", default=True,
                   action=argparse.BooleanOptionalAction)
    p.add_argument("--val-fraction", type=float, default=0.2)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--ood-in", metavar="PATH",
                   help="first OoD confidence file (one value per line)")
    p.add_argument("--ood-out", metavar="PATH",
                   help="second OoD confidence file")
    p.add_argument("--space", choices=("tss", "sss"), default="tss")
    p.add_argument("--include-accuracy", action="store_true")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("correlate", help="Kendall correlation matrix over "
                                         "a metric table CSV")
    p.add_argument("--table", required=True, metavar="PATH")
    p.add_argument("--columns", help="comma-separated column subset")
    p.add_argument("--top-k", type=int, default=None)
    p.add_argument("--by", help="column for the top-k filter")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_correlate)

    p = sub.add_parser("search", help="architecture search on a tabular "
                                      "benchmark")
    p.add_argument("--benchmark", required=True,
                   help="records JSONL path, or 'synthetic'")
    p.add_argument("--space", choices=("tss", "sss"), default="tss")
    p.add_argument("--algo", choices=("re", "ls", "rs"), default="rs")
    p.add_argument("--objective", choices=search.OBJECTIVES, default="acc")
    p.add_argument("--beta", type=float, default=1.0)
    p.add_argument("--budget", type=int, required=True)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--percent", action="store_true")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_search)

    p = sub.add_parser("enumerate", help="list a search space, optionally "
                                         "deduplicated")
    p.add_argument("--space", choices=("tss", "sss"), default="tss")
    p.add_argument("--dedupe", action="store_true",
                   help="one representative per fingerprint class")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_enumerate)

    p = sub.add_parser("report", help="grouped boxplot statistics from "
                                      "records")
    p.add_argument("--records", required=True, metavar="PATH")
    p.add_argument("--group-by", choices=("bin_count", "size_bracket"),
                   default="bin_count")
    p.add_argument("--stat", choices=("boxplot",), default="boxplot")
    p.add_argument("--brackets",
                   help="comma-separated size edges for size_bracket")
    p.add_argument("--percent", action="store_true")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (OSError, ValueError, KeyError, RuntimeError) as exc:
        msg = exc.args[0] if exc.args else exc
        print(f"error: {msg}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
