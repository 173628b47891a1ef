"""Command-line entry point: train, predict, evaluate, table, generate.

Results go to stdout; diagnostics go to stderr.  Every failure exits 1.
"""

from __future__ import annotations

import argparse
import sys

from . import archive, engine
from .ensemble import KINDS, TrainConfig, cross_validate, score_table, train
from .errors import TextEnsembleError
from .knn import DistanceMetric
from .synth import GeneratorSpec, generate
from .text_pipeline import load_corpus, write_corpus

ALGOS = (*KINDS, "ensemble")


def _common(parser: argparse.ArgumentParser) -> None:
    g = parser.add_argument_group("training options")
    g.add_argument("--seed", type=int, default=42)
    g.add_argument("--partitions", type=int, default=4, help="dataset partition count")
    g.add_argument("--threads", type=int, default=1, help="engine worker-pool size")
    g.add_argument("--alpha", type=float, default=1.0, help="naive Bayes smoothing")
    g.add_argument("--k", type=int, default=1, help="neighbours for KNN")
    g.add_argument("--metric", choices=[m.value for m in DistanceMetric], default="cosine")
    g.add_argument("--lambda", dest="reg_lambda", type=float, default=1e-3, help="SVM L2 coefficient")
    g.add_argument("--lr", type=float, default=0.1, help="SVM initial step size")
    g.add_argument("--iters", type=int, default=200, help="SVM iterations")
    g.add_argument("--trees", type=int, default=100)
    g.add_argument("--depth", type=int, default=16)
    g.add_argument("--units", type=int, default=128, help="MLP hidden units")
    g.add_argument("--batch", type=int, default=32, help="MLP minibatch size per worker")
    g.add_argument("--epochs", type=int, default=1)
    g.add_argument("--workers", type=int, default=4, help="MLP parameter-averaging workers")
    g.add_argument("--avg-freq", type=int, default=5, help="minibatches between averaging")


def _config(args) -> TrainConfig:
    return TrainConfig(
        seed=args.seed, partitions=args.partitions, alpha=args.alpha, k=args.k,
        metric=args.metric, reg_lambda=args.reg_lambda, learning_rate=args.lr,
        iterations=args.iters, n_trees=args.trees, max_depth=args.depth,
        units=args.units, batch_size=args.batch, epochs=args.epochs,
        workers=args.workers, averaging_frequency=args.avg_freq,
    )


def _phrases(args) -> list[str]:
    if args.text:
        return list(args.text)
    return [line.rstrip("\r\n") for line in sys.stdin if line.strip()]


def cmd_train(args) -> int:
    corpus = load_corpus(args.input)
    model = train(args.algo, corpus, _config(args))
    archive.save(model, args.out)
    print(f"trained {args.algo} on {len(corpus)} phrases -> {args.out}", file=sys.stderr)
    return 0


def cmd_predict(args) -> int:
    model = archive.load(args.model)
    labels = model.label_set.labels
    for text in _phrases(args):
        probs, label = model.predict(text)
        cells = " ".join(f"{lab}={p:.3f}" for lab, p in zip(labels, probs))
        print(f"{label}\t{cells}")
    return 0


def cmd_evaluate(args) -> int:
    corpus = load_corpus(args.input)
    report = cross_validate(corpus, args.folds, args.algo, _config(args))
    print(f"algorithm: {args.algo}  folds: {args.folds}")
    print(report.render())
    return 0


def cmd_table(args) -> int:
    model = archive.load(args.model)
    if model.kind != "ensemble":
        raise TextEnsembleError(f"score tables need an ensemble archive, got {model.kind!r}")
    tables = [score_table(model, text) for text in _phrases(args)]
    if args.format == "csv":
        for i, table in enumerate(tables):
            text = table.to_csv()
            # header row only once
            sys.stdout.write(text if i == 0 else text.split("\r\n", 1)[1])
    else:
        print("\n\n".join(t.to_text() for t in tables))
    return 0


def cmd_generate(args) -> int:
    spec = GeneratorSpec(
        phrases_per_class=args.phrases_per_class,
        keywords_per_class=args.keywords_per_class,
        shared_noise_vocab_size=args.noise_vocab,
        noise_rate=args.noise_rate,
        seed=args.seed,
    )
    corpus = generate(spec)
    if args.out:
        write_corpus(corpus, args.out)
        print(f"wrote {len(corpus)} phrases -> {args.out}", file=sys.stderr)
    else:
        for p in corpus:
            sys.stdout.write(f"{p.label}\t{p.text}\n")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="textensemble", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train one algorithm or the full ensemble")
    p.add_argument("--algo", choices=ALGOS, default="ensemble")
    p.add_argument("--input", required=True, help="label<TAB>text corpus")
    p.add_argument("--out", required=True, help="archive path to write")
    _common(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("predict", help="predict labels for phrases")
    p.add_argument("--model", required=True)
    p.add_argument("--text", action="append", help="phrase to classify (repeatable); default: stdin lines")
    p.add_argument("--threads", type=int, default=1)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("evaluate", help="stratified k-fold cross-validation")
    p.add_argument("--algo", choices=ALGOS, default="ensemble")
    p.add_argument("--input", required=True)
    p.add_argument("--folds", type=int, default=5)
    _common(p)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("table", help="per-model score table for phrases")
    p.add_argument("--model", required=True)
    p.add_argument("--text", action="append")
    p.add_argument("--format", choices=("text", "csv"), default="text")
    p.add_argument("--threads", type=int, default=1)
    p.set_defaults(func=cmd_table)

    p = sub.add_parser("generate", help="write a synthetic 10-class corpus")
    p.add_argument("--out")
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--phrases-per-class", type=int, default=200)
    p.add_argument("--keywords-per-class", type=int, default=12)
    p.add_argument("--noise-vocab", type=int, default=30)
    p.add_argument("--noise-rate", type=float, default=0.1)
    p.set_defaults(func=cmd_generate)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        threads = getattr(args, "threads", 1)
        if threads < 1:
            raise TextEnsembleError("--threads must be >= 1")
        engine.set_pool_size(threads)
        return args.func(args)
    except FileNotFoundError as exc:
        print(f"error: no such file: {exc.filename}", file=sys.stderr)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
    except TextEnsembleError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
    return 1


if __name__ == "__main__":
    sys.exit(main())
