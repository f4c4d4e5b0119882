"""Command-line entry point: ``anchorcal <command> ...``.

Exit codes: 0 success, 1 usage error, 2 data or contract error.
All tables go to stdout as CSV or JSON.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from . import mapper as _mapper
from .core import ContractError, Orientation, column_arrays
from .ingest import load_records, write_calibrated
from .metrics import DEFAULT_BINS, minmax_normalize, reliability_bins
from .proxy_lab import build_base_world, sweep, sweep_csv
from .supervision import ProtocolSpec, fit, rows_csv, run_protocol


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _seed(value):
    if value is not None:
        return value
    env = os.environ.get("TAC_SEED")
    if env is None:
        return 0
    try:
        return int(env)
    except ValueError:
        raise UsageError(f"TAC_SEED must be an integer, got {env!r}") from None


def _float_list(text):
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _int_list(text):
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _orientation(pairs):
    o = Orientation()
    for item in pairs or []:
        name, sep, direction = item.partition("=")
        if not sep:
            raise UsageError(f"--orient expects NAME=confidence|uncertainty, got {item!r}")
        o[name] = direction
    return o


def _add_common(p, score=True):
    p.add_argument("--in", dest="infile", required=True, type=Path)
    if score:
        p.add_argument("--score", required=True)
    p.add_argument("--orient", action="append", metavar="NAME=DIR", help="override score direction (confidence|uncertainty)")
    p.add_argument("--seed", type=int, default=None)


def _add_training(p):
    p.add_argument("--phi-rank", type=float, default=1.0)
    p.add_argument("--max-epochs", type=int, default=500)
    p.add_argument("--patience", type=int, default=50)


def _config(args):
    return _mapper.MapperConfig(
        phi_rank=args.phi_rank, max_epochs=args.max_epochs, patience=args.patience, seed=_seed(args.seed)
    )


def build_parser():
    parser = _Parser(prog="anchorcal", description="Calibrate uncertainty-proxy scores against correctness labels.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("eval", help="vanilla ECE/AUROC of one score")
    _add_common(p)
    p.add_argument("--bins", type=int, default=DEFAULT_BINS)
    p.add_argument("--normalize", action="store_true", help="orient then min-max normalize before binning")

    p = sub.add_parser("train", help="fit a mapper")
    _add_common(p)
    p.add_argument("--pair", help="second score for a two-input mapper")
    _add_training(p)
    p.add_argument("--out", type=Path)

    p = sub.add_parser("apply", help="write calibrated records")
    _add_common(p, score=False)
    p.add_argument("--mapper", required=True, type=Path)
    p.add_argument("--out", required=True, type=Path)

    p = sub.add_parser("protocol", help="few-shot / noisy / transfer runs")
    psub = p.add_subparsers(dest="kind", required=True)
    for kind in ("fewshot", "corrupt", "transfer"):
        q = psub.add_parser(kind)
        if kind == "transfer":
            q.add_argument("--train", required=True, type=Path)
            q.add_argument("--test", required=True, type=Path)
            q.add_argument("--score", required=True)
            q.add_argument("--orient", action="append", metavar="NAME=DIR")
            q.add_argument("--seed", type=int, default=None)
        else:
            _add_common(q)
            q.add_argument("--train-fraction", type=float, default=0.5)
        if kind == "fewshot":
            q.add_argument("--k", type=_int_list, required=True, help="label budget(s), comma-separated")
        if kind == "corrupt":
            q.add_argument("--rate", type=_float_list, required=True, help="corruption rate(s), comma-separated")
        q.add_argument("--bins", type=int, default=DEFAULT_BINS)
        _add_training(q)

    p = sub.add_parser("lab", help="bound checks on constructed distributions")
    lsub = p.add_subparsers(dest="experiment", required=True)
    q = lsub.add_parser("prop2", help="entropy-proxy mixture sweep")
    q.add_argument("--queries", type=int, required=True)
    q.add_argument("--lambdas", type=_float_list, required=True)
    q.add_argument("--bonus", type=float, default=None, help="extra entropy on wrong responses (default ln 3)")
    q.add_argument("--agg", choices=("sum", "mean"), default="sum")
    q.add_argument("--min-length", type=int, default=1)
    q.add_argument("--max-length", type=int, default=20)
    q.add_argument("--seed", type=int, default=None)

    p = sub.add_parser("diagram", help="reliability bin table")
    _add_common(p)
    p.add_argument("--bins", type=int, default=DEFAULT_BINS)
    p.add_argument("--normalize", action="store_true")
    p.add_argument("--out", required=True, type=Path)
    return parser


def _eval_preds(args):
    ds = load_records(args.infile, seed=_seed(args.seed))
    orient = _orientation(args.orient)
    if args.normalize:
        x, y = column_arrays(ds, [args.score], orient)
        return minmax_normalize(x[:, 0]), y
    if orient[args.score] != "confidence":
        raise ContractError("unnormalized-prediction", f"{args.score!r} is an uncertainty score; pass --normalize")
    x, y = column_arrays(ds, [args.score], orient)
    return x[:, 0], y


def cmd_eval(args, out):
    preds, y = _eval_preds(args)
    out.write(reliability_bins(preds, y, args.bins).to_json() + "\n")


def cmd_diagram(args, out):
    preds, y = _eval_preds(args)
    report = reliability_bins(preds, y, args.bins)
    args.out.write_text(report.bins_csv(), encoding="utf-8")


def cmd_train(args, out):
    seed = _seed(args.seed)
    ds = load_records(args.infile, seed=seed)
    names = [args.score] + ([args.pair] if args.pair else [])
    params, hist = fit(ds, names, _config(args), _orientation(args.orient))
    if args.out:
        args.out.write_text(params.to_json(), encoding="utf-8")
    out.write(json.dumps(hist.summary(), sort_keys=True) + "\n")


def cmd_apply(args, out):
    ds = load_records(args.infile, seed=_seed(args.seed))
    try:
        params = _mapper.MapperParams.from_json(args.mapper.read_text(encoding="utf-8"))
    except (OSError, ValueError, KeyError) as e:
        if isinstance(e, ContractError):
            raise
        raise ContractError("bad-mapper", f"{args.mapper}: {e}") from None
    names = params.meta.get("scores")
    if not names:
        raise ContractError("bad-mapper", "mapper file does not record its input score names")
    orient = Orientation(params.meta.get("orientation"))
    for k, v in _orientation(args.orient).items():
        orient[k] = v
    x, _ = column_arrays(ds, names, orient)
    write_calibrated(args.out, ds, _mapper.apply(params, x))


def cmd_protocol(args, out):
    seed = _seed(args.seed)
    cfg = _config(args)
    orient = _orientation(args.orient)
    rows = []
    if args.kind == "transfer":
        train_ds = load_records(args.train, seed=seed)
        test_ds = load_records(args.test, seed=seed)
        spec = ProtocolSpec("transfer", seed=seed)
        rows.append(run_protocol(spec, train_ds, args.score, cfg, orient, test_ds=test_ds, m_bins=args.bins))
    else:
        ds = load_records(args.infile, seed=seed)
        if args.kind == "fewshot":
            specs = [ProtocolSpec("fewshot", k_labels=k, seed=seed) for k in args.k]
        else:
            specs = [ProtocolSpec("corrupt", corrupt_rate=r, seed=seed) for r in args.rate]
        for spec in specs:
            rows.append(run_protocol(spec, ds, args.score, cfg, orient, args.train_fraction, m_bins=args.bins))
    out.write(rows_csv(rows))


def cmd_lab(args, out):
    kwargs = {} if args.bonus is None else {"bonus": args.bonus}
    world = build_base_world(args.queries, (args.min_length, args.max_length), _seed(args.seed), **kwargs)
    out.write(sweep_csv(sweep(world, args.lambdas, args.agg)))


COMMANDS = {
    "eval": cmd_eval,
    "train": cmd_train,
    "apply": cmd_apply,
    "protocol": cmd_protocol,
    "lab": cmd_lab,
    "diagram": cmd_diagram,
}


def run(argv=None, out=None, err=None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        COMMANDS[args.command](args, out)
    except UsageError as e:
        err.write(f"{e}\n")
        return 1
    except ContractError as e:
        err.write(f"error: {e}\n")
        return 2
    except OSError as e:
        err.write(f"error: io: {e}\n")
        return 2
    except SystemExit as e:
        # --help
        return 0 if e.code in (0, None) else 1
    return 0


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
