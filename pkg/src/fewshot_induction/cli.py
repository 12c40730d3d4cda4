"""Command-line interface.

Subcommands: train, eval, predict, gradcheck, synth, dump-vectors.
Exit codes: 0 success, 1 usage problems, 2 data/config problems,
3 numeric failure (a NaN was detected).
"""

from __future__ import annotations

import argparse
import json
import logging
import sys

import numpy as np

from . import autodiff as ad
from .analysis import DUMP_KINDS, dump_vectors
from .checkpoint import load_checkpoint
from .data import (
    EmbeddingTable,
    TokenizedText,
    generate_synthetic,
    load_corpus,
    load_embeddings,
    resolve_data_path,
    save_corpus,
    save_embeddings,
)
from .episodes import Episode, EpisodeSpec, episode_loss
from .errors import ConfigError, DataError, NumericError
from .gradcheck import DEFAULT_TOLERANCE, check_gradients
from .model import ModelConfig, forward_episode, init_model_params
from .training import TrainConfig, evaluate, train

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_NUMERIC = 3


class _Parser(argparse.ArgumentParser):
    """argparse exits with 2 on usage errors; the contract here is 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _build_parser() -> _Parser:
    parser = _Parser(prog="fewshot-induction",
                     description="Few-shot text classification via class-vector induction.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p_train = sub.add_parser("train", help="meta-train a model from a JSON config")
    p_train.add_argument("--config", required=True, help="path to a JSON config file")
    p_train.add_argument("--episodes", type=int)
    p_train.add_argument("--seed", type=int)
    p_train.add_argument("--induction", choices=("routing", "sum", "attention"))
    p_train.add_argument("--relation", choices=("ntn", "cosine"))
    p_train.add_argument("--routing-iterations", type=int, dest="routing_iterations")
    p_train.add_argument("--checkpoint", dest="checkpoint_path")
    p_train.add_argument("--metrics", dest="metrics_path")

    p_eval = sub.add_parser("eval", help="evaluate a checkpoint over sampled episodes")
    p_eval.add_argument("--checkpoint", required=True)
    p_eval.add_argument("--data", required=True, help="JSON-lines corpus of evaluation classes")
    p_eval.add_argument("--way", type=int, default=5)
    p_eval.add_argument("--shot", type=int, default=5)
    p_eval.add_argument("--queries", type=int, default=10)
    p_eval.add_argument("--episodes", type=int, default=600)
    p_eval.add_argument("--seed", type=int, default=0)

    p_pred = sub.add_parser("predict", help="score queries against an ad-hoc support set")
    p_pred.add_argument("--checkpoint", required=True)
    p_pred.add_argument("--support", required=True, help="JSON-lines corpus used as support set")
    p_pred.add_argument("--input", required=True, help="file with one query text per line")

    p_grad = sub.add_parser("gradcheck", help="finite-difference check on a fresh micro model")
    p_grad.add_argument("--seed", type=int, default=0)

    p_synth = sub.add_parser("synth", help="write a synthetic corpus and embedding table")
    p_synth.add_argument("--classes", type=int, default=12)
    p_synth.add_argument("--samples", type=int, default=40)
    p_synth.add_argument("--vocab-per-class", type=int, default=20, dest="vocab_per_class")
    p_synth.add_argument("--dim", type=int, default=16)
    p_synth.add_argument("--noise", type=float, default=0.0)
    p_synth.add_argument("--seed", type=int, default=0)
    p_synth.add_argument("--out-corpus", required=True, dest="out_corpus")
    p_synth.add_argument("--out-embeddings", required=True, dest="out_embeddings")

    p_dump = sub.add_parser("dump-vectors", help="write encoded vectors of one episode as CSV")
    p_dump.add_argument("--checkpoint", required=True)
    p_dump.add_argument("--data", required=True)
    p_dump.add_argument("--way", type=int, default=5)
    p_dump.add_argument("--shot", type=int, default=10)
    p_dump.add_argument("--queries", type=int, default=10)
    p_dump.add_argument("--which", choices=DUMP_KINDS, default="post_transform")
    p_dump.add_argument("--out", required=True)
    p_dump.add_argument("--seed", type=int, default=0)
    p_dump.add_argument("--labels", nargs="*", default=None,
                        help="restrict output to these class labels")
    return parser


def _cmd_train(args) -> int:
    config_path = resolve_data_path(args.config)
    try:
        with open(config_path, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise DataError(f"cannot read config file {config_path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise DataError(f"{config_path}: invalid JSON ({exc.msg})") from exc
    for key in ("episodes", "seed", "induction", "relation", "routing_iterations",
                "checkpoint_path", "metrics_path"):
        value = getattr(args, key, None)
        if value is not None:
            raw[key] = value
    config = TrainConfig.from_dict(raw)
    if not config.corpus_path or not config.embeddings_path:
        raise ConfigError("config must set corpus_path and embeddings_path")
    corpus = load_corpus(resolve_data_path(config.corpus_path))
    table = load_embeddings(resolve_data_path(config.embeddings_path))
    result = train(corpus, table, config)
    summary = {
        "episodes_run": result.episodes_run,
        "best_val_accuracy": result.best_val_accuracy,
        "checkpoint": config.checkpoint_path,
    }
    print(json.dumps(summary))
    return EXIT_OK


def _cmd_eval(args) -> int:
    params, snapshot = load_checkpoint(resolve_data_path(args.checkpoint))
    corpus = load_corpus(resolve_data_path(args.data))
    trained_on = set(snapshot.get("train_labels", []))
    overlap = trained_on & set(corpus.labels)
    if overlap:
        raise DataError(
            f"evaluation classes overlap the training classes: {sorted(overlap)[:5]}"
        )
    spec = EpisodeSpec(args.way, args.shot, args.queries, seed=args.seed)
    mean, std = evaluate(corpus, params, spec, args.episodes)
    print(json.dumps({"episodes": args.episodes, "way": args.way, "shot": args.shot,
                      "accuracy": mean, "stddev": std}))
    return EXIT_OK


def _cmd_predict(args) -> int:
    params, _ = load_checkpoint(resolve_data_path(args.checkpoint))
    support_corpus = load_corpus(resolve_data_path(args.support))
    tokenizer = params.tokenizer()
    try:
        with open(resolve_data_path(args.input), "r", encoding="utf-8") as fh:
            queries = [line.strip() for line in fh if line.strip()]
    except OSError as exc:
        raise DataError(f"cannot read query file {args.input}: {exc}") from exc
    if not queries:
        raise DataError(f"{args.input}: no query texts found")

    support = []
    for label in support_corpus.labels:
        texts = [tokenizer.tokenize(support_corpus.examples[i][0])
                 for i in support_corpus.by_label[label]]
        support.append(texts)
    for query in queries:
        episode = Episode(support=support,
                          query=[(tokenizer.tokenize(query), 1)],
                          class_labels=support_corpus.labels)
        scores = forward_episode(episode, params)
        values = scores.data[:, 0]
        if not np.all(np.isfinite(values)):
            raise NumericError("non-finite relation score")
        best = int(np.argmax(values))
        print(json.dumps({
            "text": query,
            "scores": {label: float(v) for label, v in zip(support_corpus.labels, values)},
            "predicted": support_corpus.labels[best],
        }))
    return EXIT_OK


def _cmd_gradcheck(args) -> int:
    rng = np.random.default_rng(args.seed)
    with ad.precision(np.float64):
        table = EmbeddingTable([f"w{i}" for i in range(12)],
                               rng.normal(0.0, 0.5, size=(12, 6)))
        config = ModelConfig(embedding_dim=6, hidden_size=4, attention_dim=3,
                             relation_slices=2, max_text_len=8)
        params = init_model_params(config, table, rng)

        def text():
            return TokenizedText(tuple(int(t) for t in rng.integers(0, 12, size=rng.integers(2, 5))))

        episode = Episode(
            support=[[text(), text()], [text(), text()]],
            query=[(text(), 1), (text(), 2)],
            class_labels=["a", "b"],
        )

        def loss_fn():
            return episode_loss(forward_episode(episode, params), episode.labels)

        errors = check_gradients(loss_fn, params.trainable_tensors())
    worst = max(errors.values())
    for name in sorted(errors):
        print(f"{name}: {errors[name]:.3e}")
    print(f"max relative error: {worst:.3e} (tolerance {DEFAULT_TOLERANCE:.0e})")
    if worst >= DEFAULT_TOLERANCE:
        raise NumericError(f"gradient check failed: max relative error {worst:.3e}")
    return EXIT_OK


def _cmd_synth(args) -> int:
    corpus, table = generate_synthetic(args.classes, args.samples, args.vocab_per_class,
                                       args.dim, args.noise, args.seed)
    save_corpus(corpus, args.out_corpus)
    save_embeddings(table, args.out_embeddings)
    print(json.dumps({"classes": args.classes, "examples": len(corpus),
                      "corpus": args.out_corpus, "embeddings": args.out_embeddings}))
    return EXIT_OK


def _cmd_dump(args) -> int:
    params, _ = load_checkpoint(resolve_data_path(args.checkpoint))
    corpus = load_corpus(resolve_data_path(args.data))
    spec = EpisodeSpec(args.way, args.shot, args.queries, seed=args.seed)
    rows = dump_vectors(params, corpus, spec, args.which, args.out, labels=args.labels)
    print(json.dumps({"rows": rows, "which": args.which, "out": args.out}))
    return EXIT_OK


_COMMANDS = {
    "train": _cmd_train,
    "eval": _cmd_eval,
    "predict": _cmd_predict,
    "gradcheck": _cmd_gradcheck,
    "synth": _cmd_synth,
    "dump-vectors": _cmd_dump,
}


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        return _COMMANDS[args.command](args)
    except SystemExit as exc:
        code = exc.code if isinstance(exc.code, int) else EXIT_USAGE
        return code
    except (DataError, ConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except NumericError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
