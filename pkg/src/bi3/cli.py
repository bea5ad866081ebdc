"""Command-line interface: ``bi3 measure | synth | experiment | sweep-k``.

Exit codes: 0 success, 1 usage, 2 I/O or parse failure, 3 precondition
failure. ``--output -`` writes the report to standard output; diagnostics
always go to standard error.
"""
import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from bi3 import __version__, evaluation, recovery, suites, synth
from bi3.dataset import load_file, load_report, to_csv
from bi3.errors import ParseError, PreconditionError
from bi3.measures import CL_MODES, bi3
from bi3.neighbors import NOMINAL_MODES, NORMALIZATIONS, MetricConfig

EXIT_OK, EXIT_USAGE, EXIT_IO, EXIT_PRECONDITION = 0, 1, 2, 3

log = logging.getLogger("bi3")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _positive_int(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return v


def _methods(text):
    names = [t.strip().lower() for t in text.split(",") if t.strip()]
    bad = [n for n in names if n not in recovery.METHODS]
    if bad or not names:
        raise argparse.ArgumentTypeError(
            f"unknown recovery method(s) {','.join(bad) or text!r}; choose from {','.join(recovery.METHODS)}")
    return tuple(dict.fromkeys(names))


def _add_metric(p):
    p.add_argument("--normalization", choices=NORMALIZATIONS, default="none")
    p.add_argument("--nominal", choices=NOMINAL_MODES, default="overlap",
                   help="nominal column handling in the distance")


def _add_common(p):
    p.add_argument("--output", "-o", default=None, help="output path, or '-' for standard output")
    p.add_argument("--output-format", choices=("json", "csv"), default="json")
    p.add_argument("--threads", type=_positive_int, default=None, help="worker threads (default: all cores)")
    p.add_argument("--verbose", "-v", action="store_true")


def _add_cv(p):
    p.add_argument("--suite", required=True, help="syn_overlap, syn_noise, keel or dir:PATH")
    p.add_argument("--recovery", type=_methods, default=recovery.METHODS, help="comma-separated: os,us,smote,sw")
    p.add_argument("--folds", type=_positive_int, default=10)
    p.add_argument("--runs", type=_positive_int, default=5)
    p.add_argument("--classifier-k", type=_positive_int, default=5)
    p.add_argument("--seed", type=int, default=0)


def build_parser():
    parser = _Parser(prog="bi3", description="BI3 imbalance measures and evaluation harness")
    parser.add_argument("--version", action="version", version=f"bi3 {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    m = sub.add_parser("measure", help="compute IBI3/BI3 and comparison measures for one dataset")
    m.add_argument("--input", "-i", required=True)
    m.add_argument("--format", choices=("keel", "csv"), default=None, help="default: from the file extension")
    m.add_argument("--label-column", default="-1", help="CSV label column name or index")
    m.add_argument("--no-header", action="store_true", help="CSV input has no header row")
    m.add_argument("--k", type=_positive_int, default=5)
    m.add_argument("--no-flexible", dest="flexible", action="store_false", help="fixed-k variant")
    m.add_argument("--cl-bins", type=int, default=10)
    m.add_argument("--cl-mode", choices=CL_MODES, default="bins")
    m.add_argument("--cm-k", type=_positive_int, default=None, help="k for CM and kDN (default: --k)")
    _add_metric(m)
    _add_common(m)

    s = sub.add_parser("synth", help="generate one synthetic dataset")
    s.add_argument("family", choices=tuple(synth.FAMILIES))
    s.add_argument("--ir", type=_positive_int, required=True)
    s.add_argument("--dist", type=float, default=None, help="class-mean separation (overlap family)")
    s.add_argument("--noise", type=float, default=0.0, help="label-noise rate (noise family)")
    s.add_argument("--n-pos", type=_positive_int, default=synth.N_POS)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--output", "-o", default="-", help="CSV path ('-' for standard output)")
    s.add_argument("--spec", default=None, help="sidecar JSON path (default: next to the CSV)")
    s.add_argument("--verbose", "-v", action="store_true")

    e = sub.add_parser("experiment", help="instance- and data-level correlation study")
    _add_cv(e)
    e.add_argument("--k", type=_positive_int, default=5)
    e.add_argument("--cl-bins", type=int, default=10)
    e.add_argument("--dump-resampled", default=None, metavar="DIR",
                   help="write the run-0/fold-0 training set of every method to DIR")
    _add_metric(e)
    _add_common(e)

    w = sub.add_parser("sweep-k", help="correlations of flexible and fixed BI3 over a range of k")
    _add_cv(w)
    w.add_argument("--k-from", type=_positive_int, default=2)
    w.add_argument("--k-to", type=_positive_int, default=50)
    _add_metric(w)
    _add_common(w)
    return parser


def _metric(args):
    return MetricConfig(args.normalization, args.nominal)


def _emit(args, payload, csv_text=None):
    """Write the report; returns True when it went to standard output."""
    if args.output is None:
        return False
    if args.output_format == "csv":
        text = csv_text
    else:
        text = json.dumps(payload, indent=2) + "\n"
    if args.output == "-":
        sys.stdout.write(text)
        sys.stdout.flush()
        return True
    Path(args.output).write_text(text, encoding="utf-8")
    return False


def _info(to_stdout_taken, line):
    print(line, file=sys.stderr if to_stdout_taken else sys.stdout)


def cmd_measure(args):
    label = args.label_column
    label = int(label) if label.lstrip("-").isdigit() else label
    ds = load_file(args.input, args.format, label_column=label, header=not args.no_header)
    report = bi3(ds, args.k, _metric(args), args.flexible, args.cl_bins, args.cl_mode, args.cm_k, args.threads)
    payload = report.to_dict()
    payload["load"] = load_report(ds)
    taken = _emit(args, payload, report.to_csv())
    if ds.info is not None and ds.info.rows_dropped_missing:
        log.warning("dropped %d rows with missing values", ds.info.rows_dropped_missing)
    _info(taken, report.summary_line())
    return EXIT_OK


def cmd_synth(args):
    family = args.family
    if family == "overlap":
        if args.noise:
            raise UsageError("--noise applies to the noise family only")
        dist = 2.0 if args.dist is None else args.dist
    else:
        if args.dist is not None and args.dist != synth.NOISE_DIST:
            raise UsageError(f"the noise family fixes dist at {synth.NOISE_DIST:g}")
        dist = synth.NOISE_DIST
    rng = np.random.default_rng([args.seed, synth.FAMILIES[family]])
    cov_pos, cov_neg = synth.random_covariance(rng), synth.random_covariance(rng)
    data_seed = [args.seed, synth.FAMILIES[family], 1]
    if family == "overlap":
        ds = synth.gen_overlap(args.ir, dist, cov_pos, cov_neg, data_seed, args.n_pos)
    else:
        ds = synth.gen_noise(args.ir, args.noise, cov_pos, cov_neg, data_seed, args.n_pos)
    spec = dict(ds.meta["spec"])
    spec["seed"] = args.seed
    spec["schema"] = 1
    text = to_csv(ds)
    if args.output == "-":
        sys.stdout.write(text)
        if args.spec:
            Path(args.spec).write_text(json.dumps(spec, indent=2) + "\n", encoding="utf-8")
        return EXIT_OK
    out = Path(args.output)
    out.write_text(text, encoding="utf-8")
    spec_path = Path(args.spec) if args.spec else out.with_suffix(".json")
    spec_path.write_text(json.dumps(spec, indent=2) + "\n", encoding="utf-8")
    print(f"wrote {ds.n} rows to {out} and spec to {spec_path}")
    return EXIT_OK


def _suite(args):
    datasets = suites.resolve(args.suite, args.seed)
    if not datasets:
        raise PreconditionError(f"suite {args.suite!r} holds no loadable dataset")
    return datasets


def _dump_resampled(directory, datasets, methods, args):
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    metric = _metric(args)
    for i, ds in enumerate(datasets):
        plan = evaluation.fold_plan(ds.y, args.folds, args.runs, [args.seed, i])
        for m in ("none",) + tuple(methods):
            train = evaluation.resampled_fold(ds, m, plan, 0, 0, metric)
            names = [f"x{j + 1}" for j in range(train.X.shape[1])]
            lines = [",".join(names + ["label", "weight", "provenance", "source"])]
            for row, lab, wt, pv, src in zip(train.X, train.y, train.weights, train.provenance, train.source):
                lines.append(",".join([repr(float(v)) for v in row] + [str(int(lab)), repr(float(wt)),
                                                                       ("original", "duplicated", "synthetic")[pv],
                                                                       str(int(src))]))
            safe = ds.name.replace("/", "_") or f"dataset{i}"
            (directory / f"{safe}_{m}.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")


def cmd_experiment(args):
    datasets = _suite(args)
    methods = args.recovery
    metric = _metric(args)
    total = len(datasets)

    def progress(res):
        log.info("%s: BI3=%.4f F1=%.4f", res.name, res.indices["bi3"], res.f1["none"])

    results = evaluation.run_suite(datasets, args.k, methods, args.folds, args.runs, args.seed, metric,
                                   args.cl_bins, args.classifier_k, args.threads, on_result=progress)
    config = {"k0": args.k, "recovery": list(methods), "folds": args.folds, "runs": args.runs,
              "classifier_k": args.classifier_k, "seed": args.seed, "metric": metric.to_dict(),
              "cl_bins": args.cl_bins, "datasets": total}
    report = evaluation.CorrelationReport.from_results(args.suite, results, methods, config)
    if args.dump_resampled:
        _dump_resampled(args.dump_resampled, datasets, methods, args)
    taken = _emit(args, report.to_dict(), report.to_csv())
    parts = []
    for m, c in report.instance.items():
        parts.append(f"{m}={c.value:.4f}" if c.defined else f"{m}=undefined")
    _info(taken, f"instance-level IBI3: {' '.join(parts)}")
    for ix, row in report.data.items():
        cells = " ".join(f"{m}={c.value:.4f}" if c.defined else f"{m}=undefined" for m, c in row.items())
        _info(taken, f"data-level {ix}: {cells}")
    return EXIT_OK


def cmd_sweep_k(args):
    if args.k_from > args.k_to:
        raise UsageError(f"--k-from {args.k_from} exceeds --k-to {args.k_to}")
    datasets = _suite(args)
    report = evaluation.sweep_k(datasets, range(args.k_from, args.k_to + 1), args.recovery, args.folds,
                                args.runs, args.seed, _metric(args), args.classifier_k, args.threads,
                                suite=args.suite)
    taken = _emit(args, report.to_dict(), report.to_csv())
    fmt = lambda v: "undefined" if v is None else f"{v:.4f}"  # noqa: E731
    for row in report.rows:
        _info(taken, f"k={row['k']} instance {fmt(row['instance_flexible'])}/{fmt(row['instance_fixed'])} "
                     f"data {fmt(row['data_flexible'])}/{fmt(row['data_fixed'])}")
    return EXIT_OK


COMMANDS = {"measure": cmd_measure, "synth": cmd_synth, "experiment": cmd_experiment, "sweep-k": cmd_sweep_k}


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if getattr(args, "verbose", False) else logging.WARNING,
                        format="bi3: %(levelname)s: %(message)s", stream=sys.stderr, force=True)
    logging.captureWarnings(True)
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"bi3: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ParseError as exc:
        print(f"bi3: error: {getattr(args, 'input', '')}: {exc}", file=sys.stderr)
        return EXIT_IO
    except OSError as exc:
        name = exc.filename if getattr(exc, "filename", None) else ""
        print(f"bi3: error: {name + ': ' if name else ''}{exc.strerror or exc}", file=sys.stderr)
        return EXIT_IO
    except PreconditionError as exc:
        print(f"bi3: error: {exc}", file=sys.stderr)
        return EXIT_PRECONDITION
    except ValueError as exc:
        print(f"bi3: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
