"""Episode construction and the episodic objective.

An episode is one simulated few-shot task: C distinct classes drawn from
the corpus, K support texts per class, and a query set from the same
classes. Class slots are relabeled 1..C within each episode; all sampling
flows through an explicit numpy generator for reproducibility.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor
from .data import Corpus, TokenizedText
from .errors import ConfigError, ContractError, DataError


@dataclass(frozen=True)
class EpisodeSpec:
    """Shape of sampled episodes: C-way, K-shot, queries per class, seed.

    ``support_token_noise`` optionally corrupts each support token with the
    given probability by a uniformly drawn corpus token; it exists to study
    robustness of the induction strategies to support-side noise.
    """

    way: int
    shot: int
    queries_per_class: int
    seed: int = 0
    support_token_noise: float = 0.0

    def __post_init__(self):
        if self.way < 2:
            raise ConfigError(f"way must be >= 2, got {self.way}")
        if self.shot < 1:
            raise ConfigError(f"shot must be >= 1, got {self.shot}")
        if self.queries_per_class < 1:
            raise ConfigError(f"queries_per_class must be >= 1, got {self.queries_per_class}")
        if not 0.0 <= self.support_token_noise <= 1.0:
            raise ConfigError(f"support_token_noise must lie in [0, 1], got {self.support_token_noise}")


@dataclass
class Episode:
    """Support texts per class slot, queries with slot labels 1..C."""

    support: list[list[TokenizedText]]
    query: list[tuple[TokenizedText, int]]
    class_labels: list[str]

    @property
    def way(self) -> int:
        return len(self.support)

    @property
    def labels(self) -> list[int]:
        return [label for _, label in self.query]


def _corrupt(text: TokenizedText, noise: float, pool: np.ndarray,
             rng: np.random.Generator) -> TokenizedText:
    ids = list(text.ids)
    for i in range(len(ids)):
        if rng.random() < noise:
            ids[i] = int(pool[rng.integers(len(pool))])
    return TokenizedText(tuple(ids))


def sample_episode(corpus: Corpus, spec: EpisodeSpec, rng: np.random.Generator) -> Episode:
    """Draw one episode without replacement; support and query sets are disjoint."""
    if corpus.tokens is None:
        raise ContractError("corpus has no token cache; call attach_tokens() first")
    if corpus.num_classes < spec.way:
        raise DataError(
            f"corpus has {corpus.num_classes} classes but the episode needs {spec.way}"
        )
    needed = spec.shot + spec.queries_per_class
    chosen = rng.choice(corpus.num_classes, size=spec.way, replace=False)

    support: list[list[TokenizedText]] = []
    query: list[tuple[TokenizedText, int]] = []
    class_labels: list[str] = []

    for slot, class_pos in enumerate(chosen, start=1):
        label = corpus.labels[int(class_pos)]
        indices = corpus.by_label[label]
        if len(indices) < needed:
            raise DataError(
                f"class {label!r} has {len(indices)} examples but the episode needs {needed}"
            )
        picked = rng.choice(len(indices), size=needed, replace=False)
        texts = [corpus.tokens[indices[int(p)]] for p in picked]
        support.append(texts[: spec.shot])
        query.extend((t, slot) for t in texts[spec.shot:])
        class_labels.append(label)

    if spec.support_token_noise > 0:
        # Corrupt after all sampling so the same seed picks the same texts
        # with or without noise.
        pool = corpus.token_pool
        support = [[_corrupt(t, spec.support_token_noise, pool, rng) for t in texts]
                   for texts in support]

    return Episode(support=support, query=query, class_labels=class_labels)


def episode_loss(scores: Tensor, labels: list[int]) -> Tensor:
    """Sum of squared residuals against the 0/1 match targets.

    ``scores`` is (C, n); query q in class i targets 1 at row i and 0 at
    every other row, so the loss sums over all C*n pairs unnormalized.
    """
    way, n = scores.shape
    if len(labels) != n:
        raise ContractError(f"{n} score columns but {len(labels)} labels")
    target = np.zeros((way, n), dtype=scores.data.dtype)
    for q, label in enumerate(labels):
        if not 1 <= label <= way:
            raise ContractError(f"label {label} out of range 1..{way}")
        target[label - 1, q] = 1.0
    diff = ad.sub(scores, ad.constant(target))
    return ad.sum_all(ad.mul(diff, diff))


def predict(scores: Tensor) -> list[int]:
    """Predicted class slot (1..C) per query; ties go to the lowest slot."""
    return [int(i) + 1 for i in np.argmax(scores.data, axis=0)]


def episode_accuracy(scores: Tensor, labels: list[int]) -> float:
    guesses = predict(scores)
    return float(np.mean([g == y for g, y in zip(guesses, labels)]))
