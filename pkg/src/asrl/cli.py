"""Command-line entry point: ``asrl {bench,losscurve,scatter,summary}``.

Exit codes: 0 success, 2 usage error, 3 data error, 4 internal invariant
failure. Errors go to stderr as one line ``error[CODE]: message``.
"""

from __future__ import annotations

import argparse
import csv
import logging
import sys
from pathlib import Path

import numpy as np

from asrl import bench, data
from asrl.errors import DataError, DomainError, InvariantError
from asrl.gbdt import TrainConfig
from asrl.losses import ASRLConfig, ASRLState
from asrl.report import LOSS_ORDER, format_report, format_summary, format_table, read_report, write_report

EXIT_USAGE, EXIT_DATA, EXIT_INVARIANT = 2, 3, 4

log = logging.getLogger("asrl")


def _add_train_flags(p: argparse.ArgumentParser) -> None:
    d = TrainConfig()
    a = ASRLConfig()
    g = p.add_argument_group("training")
    g.add_argument("--rounds", type=int, default=d.n_rounds)
    g.add_argument("--lr", type=float, default=d.learning_rate)
    g.add_argument("--max-depth", type=int, default=d.max_depth)
    g.add_argument("--min-child-weight", type=float, default=d.min_child_weight)
    g.add_argument("--lambda", dest="reg_lambda", type=float, default=d.reg_lambda)
    g.add_argument("--h-floor", type=float, default=d.h_floor)
    g.add_argument("--curvature", choices=["irls", "hessian"], default=d.curvature,
                   help="Newton weight: loss majorizer (irls) or floored second derivative (hessian)")
    g.add_argument("--hessian-scale", choices=["median", "none"], default=d.hessian_scale)
    g.add_argument("--q-low", type=float, default=a.q_low)
    g.add_argument("--q-high", type=float, default=a.q_high)
    g.add_argument("--epsilon", type=float, default=a.eps)
    g.add_argument("--huber-delta", type=float, default=1.0)
    g.add_argument("--seed", type=int, default=0, help="split seed (also recorded in the train config)")
    g.add_argument("--test-fraction", type=float, default=0.2)
    g.add_argument("--standardize", action="store_true", help="z-score features with training statistics")


def _add_data_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--dataset", required=True, help="registry name or path to a delimited file")
    p.add_argument("--target", help="target column (required when --dataset is a path)")
    p.add_argument("--features", help="comma-separated feature columns (default: all but target)")
    p.add_argument("--data-dir", help="directory holding registry files (default $ASRL_DATA_DIR or ./data)")


def _setup(args) -> bench.BenchSetup:
    return bench.BenchSetup(
        train=TrainConfig(
            n_rounds=args.rounds,
            learning_rate=args.lr,
            max_depth=args.max_depth,
            min_child_weight=args.min_child_weight,
            reg_lambda=args.reg_lambda,
            h_floor=args.h_floor,
            seed=args.seed,
            curvature=args.curvature,
            hessian_scale=args.hessian_scale,
        ),
        split=data.SplitSpec(args.test_fraction, args.seed),
        asrl=ASRLConfig(args.q_low, args.q_high, args.epsilon),
        huber_delta=args.huber_delta,
        standardize=args.standardize,
    )


def _resolve_dataset(args):
    """(Dataset, label, source) from a registry name or an explicit file."""
    reg = data.registry()
    if args.dataset in reg and not args.target:
        return data.load_registered(args.dataset, args.data_dir), args.dataset, f"registry:{args.dataset}"
    path = Path(args.dataset)
    if not path.is_file():
        raise DataError(f"{args.dataset!r} is neither a registered dataset ({', '.join(reg)}) nor a file")
    if not args.target:
        raise DomainError("--target is required when --dataset is a file path")
    if args.features:
        features = [c.strip() for c in args.features.split(",") if c.strip()]
    else:
        with open(path, encoding="utf-8-sig", newline="") as fh:
            header_line = fh.readline()
        delim = ";" if header_line.count(";") > header_line.count(",") else ","
        header = [c.strip() for c in next(csv.reader([header_line], delimiter=delim))]
        features = [c for c in header if c != args.target]
    spec = data.DatasetSpec(name=path.stem, target_column=args.target, feature_columns=features)
    return data.load_csv(path, spec), path.stem, str(path)


def cmd_bench(args) -> int:
    setup = _setup(args)
    ds, label, source = _resolve_dataset(args)
    losses = args.losses.split(",") if args.losses else list(LOSS_ORDER)
    models = {} if args.save_models else None
    report = bench.run_bench(ds, label, setup, source=source, losses=losses, jobs=args.jobs, keep_models=models)
    sys.stdout.write(format_table(report))
    if args.out:
        out = Path(args.out)
        if out.parent and not out.parent.exists():
            out.parent.mkdir(parents=True)
        write_report(report, out)
        log.info("wrote report %s", out)
    if models:
        mdir = Path(args.save_models)
        mdir.mkdir(parents=True, exist_ok=True)
        for name, model in models.items():
            model.save(mdir / f"{label}_{name}.json")
    if args.print_report:
        sys.stdout.write(format_report(report))
    return 0


def _write_rows(header, rows, fh=None):
    fh = fh or sys.stdout
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)


def cmd_losscurve(args) -> int:
    if args.dataset:
        setup = _setup(args)
        ds, label, _ = _resolve_dataset(args)
        state, _ = bench.fit_asrl_state(ds, setup)
        origin = f"fitted on {label} training residuals"
    else:
        missing = [f for f in ("delta1", "delta2", "alpha", "beta", "gamma") if getattr(args, f) is None]
        if missing:
            raise DomainError("without --dataset, all of --delta1 --delta2 --alpha --beta --gamma are required")
        state = ASRLState(args.delta1, args.delta2, args.alpha, args.beta, args.gamma)
        origin = "given"
    r_max = args.range if args.range is not None else max(3.0 * state.delta2, 1.0)
    step = args.step if args.step is not None else r_max / 200.0
    r, vals, region, edge = bench.loss_curve(state, r_max, step)
    print(f"# ASRL state ({origin}): delta1={state.delta1!r} delta2={state.delta2!r} "
          f"alpha={state.alpha!r} beta={state.beta!r} gamma={state.gamma!r}")
    names = np.array(["small", "medium", "large"])
    _write_rows(["r", "loss", "region", "edge"],
                [(repr(float(a)), repr(float(b)), names[c], int(e)) for a, b, c, e in zip(r, vals, region, edge)])
    return 0


def cmd_scatter(args) -> int:
    setup = _setup(args)
    ds, _, _ = _resolve_dataset(args)
    y, y_hat = bench.scatter_pairs(ds, args.loss, setup)
    out = open(args.out, "w", encoding="utf-8", newline="") if args.out else sys.stdout
    try:
        _write_rows(["y_test", "y_pred"], [(repr(float(a)), repr(float(b))) for a, b in zip(y, y_hat)], out)
    finally:
        if args.out:
            out.close()
    return 0


def cmd_summary(args) -> int:
    grid: dict[str, dict[str, float]] = {}
    for path in args.reports:
        rep = read_report(path)
        if rep.dataset in grid:
            log.warning("duplicate dataset %r: %s overrides the earlier report", rep.dataset, path)
        grid[rep.dataset] = {name: ev.mse for name, ev in rep.results.items()}
    sys.stdout.write(format_summary(grid))
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="asrl", description="ASRL gradient-boosting benchmark tools")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("bench", help="compare ASRL, squared, absolute and Huber losses on one dataset")
    _add_data_flags(p)
    _add_train_flags(p)
    p.add_argument("--losses", help=f"comma-separated subset of {','.join(LOSS_ORDER)}")
    p.add_argument("--jobs", type=int, default=1, help="train losses concurrently (timings then overlap)")
    p.add_argument("--out", help="write the machine-readable report here")
    p.add_argument("--save-models", metavar="DIR", help="also save each trained model as JSON")
    p.add_argument("--print-report", action="store_true", help="echo the machine-readable report to stdout")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("losscurve", help="ASRL value over a residual grid (plot data)")
    for f in ("delta1", "delta2", "alpha", "beta", "gamma"):
        p.add_argument(f"--{f}", type=float)
    p.add_argument("--range", type=float, help="grid covers [-range, range] (default 3*delta2)")
    p.add_argument("--step", type=float, help="grid spacing (default range/200)")
    p.add_argument("--dataset", help="fit the state on this dataset's ASRL training residuals instead")
    p.add_argument("--target")
    p.add_argument("--features")
    p.add_argument("--data-dir")
    _add_train_flags(p)
    p.set_defaults(func=cmd_losscurve)

    p = sub.add_parser("scatter", help="test-set truth vs prediction pairs for one loss (plot data)")
    _add_data_flags(p)
    _add_train_flags(p)
    p.add_argument("--loss", choices=LOSS_ORDER, default="asrl")
    p.add_argument("--out")
    p.set_defaults(func=cmd_scatter)

    p = sub.add_parser("summary", help="cross-dataset MSE grid from report files")
    p.add_argument("reports", nargs="+")
    p.set_defaults(func=cmd_summary)
    return ap


def _fail(code: str, exit_code: int, msg: str) -> int:
    print(f"error[{code}]: {msg}", file=sys.stderr)
    return exit_code


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    if getattr(args, "data_dir", None):
        args.data_dir = Path(args.data_dir)
    try:
        return args.func(args)
    except DataError as exc:
        return _fail("E_DATA", EXIT_DATA, str(exc))
    except DomainError as exc:
        return _fail("E_USAGE", EXIT_USAGE, str(exc))
    except InvariantError as exc:
        return _fail("E_INVARIANT", EXIT_INVARIANT, str(exc))


if __name__ == "__main__":
    sys.exit(main())
