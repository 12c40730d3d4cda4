"""Vector dumps and ablation harnesses.

``dump_vectors`` writes encoded support vectors (before or after the
shared transform) or query vectors as CSV so external tooling can project
and plot them. The ablation helpers train small model variants side by
side and emit a JSON-friendly report comparing them.
"""

from __future__ import annotations

import csv
import logging

import numpy as np

from .data import Corpus, EmbeddingTable
from .episodes import EpisodeSpec, sample_episode
from .errors import ConfigError
from .induction import transform
from .model import ModelParams, encode_queries, encode_support
from .training import TrainConfig, evaluate, train

logger = logging.getLogger(__name__)

DUMP_KINDS = ("pre_transform", "post_transform", "query")


def dump_vectors(params: ModelParams, corpus: Corpus, spec: EpisodeSpec, which: str,
                 path: str, labels: list[str] | None = None) -> int:
    """Sample one episode and write the requested vectors as CSV rows.

    ``pre_transform`` emits the encoded support vectors, ``post_transform``
    the same vectors after the shared transform + squash, and ``query`` the
    encoded query vectors. Rows carry the original class label and a
    running per-class sample id; ``labels`` (when given) restricts output
    to those classes, so an empty list yields a header-only file. Returns
    the number of data rows written.
    """
    if which not in DUMP_KINDS:
        raise ConfigError(f"which must be one of {DUMP_KINDS}, got {which!r}")
    if which == "post_transform" and params.induction is None:
        raise ConfigError("post_transform dump needs the routing induction parameters")

    if corpus.tokens is None:
        corpus.attach_tokens(params.tokenizer())
    rng = np.random.default_rng(spec.seed)
    episode = sample_episode(corpus, spec, rng)

    dim = params.config.vector_dim
    rows_written = 0
    keep = None if labels is None else set(labels)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["label", "sample"] + [f"e{i}" for i in range(dim)])
        if which == "query":
            vectors = encode_queries(episode, params)
            counters = {}
            for (text, slot), vec in zip(episode.query, vectors):
                label = episode.class_labels[slot - 1]
                if keep is not None and label not in keep:
                    continue
                counters[label] = counters.get(label, 0) + 1
                writer.writerow([label, counters[label] - 1] + [repr(float(v)) for v in vec.data])
                rows_written += 1
        else:
            support_vecs = encode_support(episode, params)
            for slot, class_vecs in enumerate(support_vecs):
                label = episode.class_labels[slot]
                if keep is not None and label not in keep:
                    continue
                for j, vec in enumerate(class_vecs):
                    out = transform(vec, params.induction) if which == "post_transform" else vec
                    writer.writerow([label, j] + [repr(float(v)) for v in out.data])
                    rows_written += 1
    logger.info("wrote %d %s vectors to %s", rows_written, which, path)
    return rows_written


def run_variant_comparison(train_corpus: Corpus, test_corpus: Corpus, table: EmbeddingTable,
                           base_config: TrainConfig, variants: list[dict], seeds: list[int],
                           eval_spec: EpisodeSpec, eval_episodes: int) -> dict:
    """Train each config variant across seeds; report per-variant mean accuracy."""
    report = {"variants": [], "seeds": list(seeds)}
    for overrides in variants:
        accs = []
        for seed in seeds:
            cfg = TrainConfig.from_dict({**base_config.to_dict(), **overrides, "seed": seed})
            result = train(train_corpus, table, cfg)
            acc, _ = evaluate(test_corpus, result.params, eval_spec, eval_episodes)
            accs.append(acc)
        report["variants"].append({
            "overrides": overrides,
            "accuracies": accs,
            "mean_accuracy": float(np.mean(accs)),
        })
    return report


def routing_vs_sum_report(train_corpus: Corpus, test_corpus: Corpus, table: EmbeddingTable,
                          base_config: TrainConfig, seeds: list[int], eval_spec: EpisodeSpec,
                          eval_episodes: int) -> dict:
    """Compare routing against sum induction under noisy supports.

    The report always carries both means plus an ``ordering_holds`` flag;
    a failed ordering is flagged, never hidden.
    """
    report = run_variant_comparison(
        train_corpus, test_corpus, table, base_config,
        variants=[{"induction": "routing"}, {"induction": "sum"}],
        seeds=seeds, eval_spec=eval_spec, eval_episodes=eval_episodes)
    routing_mean = report["variants"][0]["mean_accuracy"]
    sum_mean = report["variants"][1]["mean_accuracy"]
    report["routing_mean"] = routing_mean
    report["sum_mean"] = sum_mean
    report["ordering_holds"] = bool(routing_mean >= sum_mean)
    if not report["ordering_holds"]:
        logger.warning("ablation ordering violated: routing %.4f < sum %.4f", routing_mean, sum_mean)
    return report


def iteration_ablation_report(train_corpus: Corpus, test_corpus: Corpus, table: EmbeddingTable,
                              base_config: TrainConfig, iteration_counts: list[int],
                              eval_spec: EpisodeSpec, eval_episodes: int) -> dict:
    """Train one routing model per iteration count and record test accuracy."""
    report = {"iterations": [], "accuracies": []}
    for iters in iteration_counts:
        cfg = TrainConfig.from_dict({**base_config.to_dict(),
                                     "induction": "routing", "routing_iterations": iters})
        result = train(train_corpus, table, cfg)
        acc, std = evaluate(test_corpus, result.params, eval_spec, eval_episodes)
        report["iterations"].append(iters)
        report["accuracies"].append(acc)
        logger.info("routing iterations=%d: accuracy %.4f (std %.4f)", iters, acc, std)
    return report
