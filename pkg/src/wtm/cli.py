"""``wtm`` command line: convert, train, eval, predict, inspect, bench-sampling.

Exit codes: 0 success, 2 usage, 3 parse (bad dataset or model file),
4 config (inconsistent widths, labels or hyperparameters), 5 I/O.
"""
from __future__ import annotations

import argparse
import logging
import math
import os
import secrets
import sys

import numpy as np

from . import __version__
from .automata import render_clause
from .data import (ParseError, load_dataset, read_connect4, read_idx_pair, save_dataset, split_dataset,
                   _load_text)
from .machine import MulticlassWTM, WTMParams, train_epochs, weight_statistics
from .persistence import ModelFileError, load_model, save_model
from .sampling import SAMPLERS, Rng, benchmark_samplers

EXIT_USAGE = 2
EXIT_PARSE = 3
EXIT_CONFIG = 4
EXIT_IO = 5

log = logging.getLogger("wtm")


class ConfigError(Exception):
    pass


def _out(*args):
    print(*args, flush=True)


# ---------------------------------------------------------------------------
# commands


def cmd_convert(args) -> int:
    if args.format == "idx":
        if not args.labels:
            raise ConfigError("--labels is required for idx input")
        d = read_idx_pair(args.input, args.labels, args.threshold, args.classes)
    elif args.format == "connect4":
        d = read_connect4(args.input)
    else:
        with open(args.input, "rb") as f:
            d = _load_text(f.read().decode("ascii", errors="replace"), args.input)
    save_dataset(d, args.output)
    _out(f"wrote {args.output}: rows={len(d)} o={d.o} classes={d.n_classes}")
    return 0


def _resolve_seed(seed) -> int:
    if seed is None:
        env = os.environ.get("WTM_SEED")
        if env is not None:
            try:
                seed = int(env)
            except ValueError:
                raise ConfigError(f"WTM_SEED must be an integer, got {env!r}") from None
        else:
            seed = secrets.randbits(63)
            print(f"seed: {seed}", file=sys.stderr)
    if not 0 <= seed < 2**64:
        raise ConfigError("seed must lie in [0, 2^64)")
    return seed


def _params(args, n_features: int) -> WTMParams:
    try:
        return WTMParams.per_class(n_features, args.clauses, threshold=args.threshold, sparsity=args.ps,
                                   learning_rate=args.gamma, n_states=args.states)
    except ValueError as e:
        raise ConfigError(str(e)) from None


def cmd_train(args) -> int:
    seed = _resolve_seed(args.seed)
    train = load_dataset(args.train)
    rng = Rng(seed)
    evald = load_dataset(args.eval) if args.eval else None
    if args.split is not None:
        if evald is not None:
            raise ConfigError("use either --eval or --split, not both")
        try:
            train, evald = split_dataset(train, args.split, rng)
        except ValueError as e:
            raise ConfigError(str(e)) from None
    if len(train) == 0:
        raise ConfigError(f"{args.train} has no rows")
    if evald is not None:
        if evald.o != train.o:
            raise ConfigError(f"eval set has o={evald.o} but training set has o={train.o}")
        if evald.n_classes != train.n_classes:
            raise ConfigError(f"eval set has {evald.n_classes} classes but training set has {train.n_classes}")
    if train.n_classes < 2:
        raise ConfigError("training needs at least two classes")
    params = _params(args, train.o)
    mm = MulticlassWTM(params, train.n_classes, rng)
    log.info("%r on %d rows", mm, len(train))
    _out("# epoch\ttrain_acc\teval_acc\tseconds")
    train_epochs(mm, train, args.epochs, rng, args.shuffle, eval_data=evald, sampler=args.sampler,
                 negatives=args.negatives, workers=args.workers, eval_train=not args.no_train_acc,
                 on_epoch=lambda m: _out(m.line()))
    checksum = save_model(mm, args.output, seed)
    print(f"model: {args.output} sha256={checksum}", file=sys.stderr)
    return 0


def _load_pair(model_path, data_path):
    mf = load_model(model_path)
    d = load_dataset(data_path)
    mm = mf.machine
    if d.o != mm.params.n_features:
        raise ConfigError(f"model expects o={mm.params.n_features} but {data_path} has o={d.o}")
    if d.n_classes > mm.n_classes:
        raise ConfigError(f"model has {mm.n_classes} classes but {data_path} declares {d.n_classes}")
    return mm, d


def cmd_eval(args) -> int:
    mm, d = _load_pair(args.model, args.data)
    if len(d) == 0:
        raise ConfigError(f"{args.data} has no rows")
    pred = mm.predict(d.features)
    confusion = np.zeros((mm.n_classes, mm.n_classes), dtype=np.int64)
    np.add.at(confusion, (d.labels, pred), 1)
    _out(f"accuracy\t{np.mean(pred == d.labels):.6f}\t({int(np.sum(pred == d.labels))}/{len(d)})")
    _out("confusion (rows: true, columns: predicted)")
    _out("\t" + "\t".join(str(k) for k in range(mm.n_classes)))
    for k, row in enumerate(confusion):
        _out(f"{k}\t" + "\t".join(str(v) for v in row))
    return 0


def cmd_predict(args) -> int:
    mm, d = _load_pair(args.model, args.data)
    for label in mm.predict(d.features):
        _out(int(label))
    return 0


def log_histogram(weights, bins: int = 10, width: int = 40) -> list[str]:
    """Text histogram of positive values over logarithmically spaced bins."""
    w = np.asarray(weights, dtype=np.float64).ravel()
    lo, hi = math.log10(w.min()), math.log10(w.max())
    if hi - lo < 1e-12:
        return [f"[{w.min():.4g}, {w.max():.4g}]  {'#' * width} {w.size}"]
    edges = np.logspace(lo, hi, bins + 1)
    counts, _ = np.histogram(w, bins=edges)
    top = counts.max()
    closing = [")"] * (bins - 1) + ["]"]
    return [f"[{a:9.4g}, {b:9.4g}{end}  {'#' * int(round(width * c / top)):<{width}} {c}"
            for a, b, c, end in zip(edges[:-1], edges[1:], counts, closing)]


def cmd_inspect(args) -> int:
    mf = load_model(args.model)
    mm = mf.machine
    p = mm.params
    _out(f"o={p.n_features} classes={mm.n_classes} clauses={p.pos_clauses}+{p.neg_clauses} "
         f"N={p.n_states} T={p.threshold} ps={p.sparsity} gamma={p.learning_rate} seed={mf.seed}")
    _out(f"sha256={mf.checksum}")
    if args.cls is not None and not 0 <= args.cls < mm.n_classes:
        raise ConfigError(f"class {args.cls} outside [0, {mm.n_classes})")
    classes = [args.cls] if args.cls is not None else range(mm.n_classes)
    stats = weight_statistics(mm)
    _out("class\tmin\tmax\tmean\tratio")
    for k in classes:
        s = stats[k]
        _out(f"{k}\t{s.min:.4f}\t{s.max:.4f}\t{s.mean:.4f}\t{s.ratio:.4f}")
    if args.clause is not None:
        if args.cls is None:
            raise ConfigError("--clause needs --class")
        if not 0 <= args.clause < p.n_clauses:
            raise ConfigError(f"clause {args.clause} outside [0, {p.n_clauses})")
        _show_clauses(mm, args.cls, [args.clause])
    elif args.top:
        for k in classes:
            order = np.argsort(-mm.weights[k], kind="stable")[: args.top]
            _show_clauses(mm, k, order)
    if args.histogram:
        for k in classes:
            _out(f"class {k} weights (log bins)")
            for line in log_histogram(mm.weights[k], args.bins):
                _out("  " + line)
    return 0


def _show_clauses(mm: MulticlassWTM, k: int, indices):
    machine = mm.machines[k]
    for j in indices:
        sign = "+" if j < mm.params.pos_clauses else "-"
        c = machine.clause(int(j))
        _out(f"class {k} clause {j} {sign} w={c.weight:.4f}: {render_clause(c)}")


def cmd_bench_sampling(args) -> int:
    if args.u < 1 or not 0.0 <= args.p <= 1.0 or args.iterations < 1:
        raise ConfigError("need u >= 1, 0 <= p <= 1 and iterations >= 1")
    b = benchmark_samplers(args.u, args.p, args.iterations, args.seed if args.seed is not None else 1, args.repeats)
    _out("sampler\tdraws_per_call\tseconds_per_call")
    for t in (b.binomial, b.bernoulli):
        _out(f"{t.sampler}\t{t.draws_per_call:.3f}\t{t.seconds_per_call:.3e}")
    _out(f"speedup\t{b.speedup:.2f}")
    _out(f"draw_ratio\t{b.draw_ratio:.2f}")
    return 0


# ---------------------------------------------------------------------------
# parser


def _train_flags(p: argparse.ArgumentParser):
    g = p.add_argument_group("machine")
    g.add_argument("--clauses", type=int, default=100, help="clauses per class, split evenly by polarity")
    g.add_argument("--states", type=int, default=100, help="states per action N")
    g.add_argument("--threshold", type=int, default=15, help="summation target T")
    g.add_argument("--ps", type=float, default=0.1, help="probability of each stochastic Type I event")
    g.add_argument("--gamma", type=float, default=0.002, help="weight learning rate; 0 gives a plain TM")
    g = p.add_argument_group("training")
    g.add_argument("--epochs", type=int, default=100)
    g.add_argument("--seed", type=int, help="defaults to $WTM_SEED, else a fresh seed is printed")
    g.add_argument("--sampler", choices=SAMPLERS, default="binomial")
    g.add_argument("--negatives", choices=("one", "all"), default="one",
                   help="train one random other class or all other classes as negatives")
    g.add_argument("--workers", type=int, default=1, help="train classes in parallel (changes random streams)")
    g.add_argument("--shuffle", action=argparse.BooleanOptionalAction, default=True)
    g.add_argument("--no-train-acc", action="store_true", help="skip the per-epoch training accuracy")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="wtm", description="Weighted Tsetlin Machine")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("convert", help="convert IDX, UCI Connect-4 or text data to WTMD")
    p.add_argument("input")
    p.add_argument("-f", "--format", choices=("idx", "connect4", "text"), required=True)
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--labels", help="IDX label file (idx format)")
    p.add_argument("--threshold", type=int, default=77, help="grayscale binarization threshold (idx format)")
    p.add_argument("--classes", type=int, help="class count for idx input (default: max label + 1)")
    p.set_defaults(func=cmd_convert)

    p = sub.add_parser("train", help="train a machine and stream per-epoch metrics")
    p.add_argument("train")
    p.add_argument("--eval", help="WTMD evaluation set")
    p.add_argument("--split", type=float, help="hold out this fraction of the training set for evaluation")
    p.add_argument("-o", "--output", required=True, help="model file to write")
    _train_flags(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="accuracy and confusion counts")
    p.add_argument("model")
    p.add_argument("data")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("predict", help="print one predicted label per row")
    p.add_argument("model")
    p.add_argument("data")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("inspect", help="weight statistics, clauses and weight histograms")
    p.add_argument("model")
    p.add_argument("--class", dest="cls", type=int)
    p.add_argument("--clause", type=int)
    p.add_argument("--top", type=int, default=0, help="show the N heaviest clauses per class")
    p.add_argument("--histogram", action="store_true")
    p.add_argument("--bins", type=int, default=10)
    p.set_defaults(func=cmd_inspect)

    p = sub.add_parser("bench-sampling", help="compare the two Type I mask samplers")
    p.add_argument("--u", type=int, default=1568, help="mask length (2 * features)")
    p.add_argument("--p", type=float, default=0.1)
    p.add_argument("--iterations", type=int, default=100_000)
    p.add_argument("--repeats", type=int, default=5)
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_bench_sampling)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    logging.basicConfig(level=logging.WARNING - 10 * args.verbose, format="%(levelname)s %(message)s",
                        stream=sys.stderr)
    try:
        return args.func(args)
    except (ParseError, ModelFileError) as e:
        print(f"wtm: parse error: {e}", file=sys.stderr)
        return EXIT_PARSE
    except (ConfigError, ValueError) as e:
        print(f"wtm: config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as e:
        print(f"wtm: {e}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
