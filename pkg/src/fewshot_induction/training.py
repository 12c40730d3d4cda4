"""Episode-based meta-training and evaluation.

Each training iteration samples one episode from the training classes,
runs the traced forward pass, backpropagates the squared-error episode
loss and applies one Adagrad step. There is never any fine-tuning on the
classes used at evaluation time; generalization comes entirely from the
accumulated episodes. A slice of the training classes is held out to pick
the best checkpoint and to stop early on an accuracy plateau.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field, asdict

import numpy as np

from .autodiff import Trace, backward
from .checkpoint import save_checkpoint
from .data import Corpus, EmbeddingTable
from .episodes import EpisodeSpec, episode_accuracy, episode_loss, sample_episode
from .errors import ConfigError, DataError, NumericError
from .model import (
    INDUCTION_VARIANTS,
    RELATION_VARIANTS,
    ModelConfig,
    ModelParams,
    forward_episode,
    init_model_params,
    scores_for_loss,
)
from .optim import AdagradState

logger = logging.getLogger(__name__)


@dataclass
class TrainConfig:
    """Everything a training run needs; JSON configs mirror these fields."""

    episodes: int = 10000
    way: int = 5
    shot: int = 5
    queries_per_class: int = 20
    seed: int = 0
    induction: str = "routing"
    relation: str = "ntn"
    routing_iterations: int = 3
    learning_rate: float = 0.01
    adagrad_epsilon: float = 1e-8
    hidden_size: int = 128
    attention_dim: int = 64
    relation_slices: int = 100
    max_text_len: int = 64
    trainable_embeddings: bool = False
    support_token_noise: float = 0.0
    eval_every: int = 100
    val_fraction: float = 0.1
    val_episodes: int = 20
    val_queries_per_class: int = 10
    patience: int = 20
    log_every: int = 10
    checkpoint_path: str | None = None
    metrics_path: str | None = None
    corpus_path: str | None = None
    embeddings_path: str | None = None

    def __post_init__(self):
        if self.episodes < 0:
            raise ConfigError(f"episodes must be >= 0, got {self.episodes}")
        if self.induction not in INDUCTION_VARIANTS:
            raise ConfigError(f"induction must be one of {INDUCTION_VARIANTS}, got {self.induction!r}")
        if self.relation not in RELATION_VARIANTS:
            raise ConfigError(f"relation must be one of {RELATION_VARIANTS}, got {self.relation!r}")
        if self.learning_rate <= 0:
            raise ConfigError(f"learning_rate must be positive, got {self.learning_rate}")
        if not 0.0 <= self.val_fraction < 1.0:
            raise ConfigError(f"val_fraction must lie in [0, 1), got {self.val_fraction}")
        for name in ("eval_every", "val_episodes", "patience", "log_every"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1, got {getattr(self, name)}")

    @classmethod
    def from_dict(cls, data: dict) -> "TrainConfig":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        return cls(**data)

    def to_dict(self) -> dict:
        return asdict(self)

    def model_config(self, embedding_dim: int) -> ModelConfig:
        return ModelConfig(
            embedding_dim=embedding_dim,
            hidden_size=self.hidden_size,
            attention_dim=self.attention_dim,
            relation_slices=self.relation_slices,
            induction=self.induction,
            relation=self.relation,
            routing_iterations=self.routing_iterations,
            max_text_len=self.max_text_len,
            trainable_embeddings=self.trainable_embeddings,
        )

    def episode_spec(self) -> EpisodeSpec:
        return EpisodeSpec(self.way, self.shot, self.queries_per_class, seed=self.seed,
                           support_token_noise=self.support_token_noise)


@dataclass
class TrainResult:
    params: ModelParams
    metrics: list[dict] = field(default_factory=list)
    best_val_accuracy: float | None = None
    episodes_run: int = 0


def _check_finite(value: np.ndarray, what: str) -> None:
    if not np.all(np.isfinite(value)):
        raise NumericError(f"non-finite value detected in {what}")


def split_validation_classes(corpus: Corpus, config: TrainConfig,
                             rng: np.random.Generator) -> tuple[Corpus, Corpus | None]:
    """Hold out a slice of training classes for model selection.

    The held-out slice is at least ``way`` classes (otherwise no validation
    episode could be formed) and the remainder keeps at least ``way``; when
    the corpus is too small for both, validation is disabled.
    """
    if config.val_fraction <= 0:
        return corpus, None
    n = corpus.num_classes
    n_val = max(config.way, math.ceil(config.val_fraction * n))
    if n - n_val < config.way:
        logger.warning("corpus has too few classes (%d) for a validation split; disabling", n)
        return corpus, None
    order = rng.permutation(n)
    val_labels = [corpus.labels[i] for i in order[:n_val]]
    train_labels = [corpus.labels[i] for i in order[n_val:]]
    return corpus.subset(train_labels), corpus.subset(val_labels)


def _train_step(corpus: Corpus, spec: EpisodeSpec, params: ModelParams,
                optimizer: AdagradState, rng: np.random.Generator) -> tuple[float, float]:
    """One episode: sample, forward, loss, backward, Adagrad. Returns (loss, acc)."""
    episode = sample_episode(corpus, spec, rng)
    with Trace() as trace:
        scores = forward_episode(episode, params)
        loss = episode_loss(scores_for_loss(scores, params.config.relation), episode.labels)
    _check_finite(loss.data, "episode loss")
    acc = episode_accuracy(scores, episode.labels)
    backward(loss, trace)
    for name, tensor in params.trainable_tensors():
        if tensor.grad is not None:
            _check_finite(tensor.grad, f"gradient of {name}")
    if params.config.trainable_embeddings and params.embedding.grad is not None:
        params.embedding.grad[len(params.vocab)] = 0.0  # OOV row stays zero
    optimizer.step()
    return loss.item(), acc


def evaluate(corpus: Corpus, params: ModelParams, spec: EpisodeSpec,
             episodes: int) -> tuple[float, float]:
    """Mean and standard deviation of query accuracy over sampled episodes.

    Deterministic for a fixed ``spec.seed``. The caller guarantees the
    corpus classes are disjoint from the classes trained on.
    """
    if corpus.tokens is None:
        corpus.attach_tokens(params.tokenizer())
    rng = np.random.default_rng(spec.seed)
    accuracies = np.empty(episodes, dtype=np.float64)
    for i in range(episodes):
        episode = sample_episode(corpus, spec, rng)
        scores = forward_episode(episode, params)
        accuracies[i] = episode_accuracy(scores, episode.labels)
    return float(np.mean(accuracies)), float(np.std(accuracies))


def train(corpus: Corpus, table: EmbeddingTable, config: TrainConfig,
          params: ModelParams | None = None) -> TrainResult:
    """Run the full meta-training loop; returns the selected parameters.

    When validation is active the returned parameters are the ones saved at
    the best validation accuracy; otherwise the final parameters. Metric
    records {episode, loss, train_acc, val_acc} are collected and, when
    ``config.metrics_path`` is set, appended there as JSON lines.
    """
    rng = np.random.default_rng(config.seed)
    if params is None:
        params = init_model_params(config.model_config(table.dimension), table, rng)
    tokenizer = params.tokenizer()

    train_corpus, val_corpus = split_validation_classes(corpus, config, rng)
    spec = config.episode_spec()
    # Surface data problems before the loop: every class must support an episode.
    needed = spec.shot + spec.queries_per_class
    if train_corpus.num_classes < spec.way:
        raise DataError(
            f"training corpus has {train_corpus.num_classes} classes but episodes need {spec.way}"
        )
    for label in train_corpus.labels:
        if len(train_corpus.by_label[label]) < needed:
            raise DataError(
                f"class {label!r} has {len(train_corpus.by_label[label])} examples "
                f"but episodes need {needed}"
            )
    train_corpus.attach_tokens(tokenizer)
    if val_corpus is not None:
        val_corpus.attach_tokens(tokenizer)
    val_spec = EpisodeSpec(config.way, config.shot, config.val_queries_per_class,
                           seed=config.seed + 1)

    optimizer = AdagradState(params.trainable_tensors(), learning_rate=config.learning_rate,
                             epsilon=config.adagrad_epsilon)

    result = TrainResult(params=params)
    metrics_fh = open(config.metrics_path, "a", encoding="utf-8") if config.metrics_path else None
    best_val = -1.0
    best_snapshot: dict[str, np.ndarray] | None = None
    evals_since_improvement = 0
    window_loss: list[float] = []
    window_acc: list[float] = []
    try:
        for episode_idx in range(1, config.episodes + 1):
            loss, acc = _train_step(train_corpus, spec, params, optimizer, rng)
            window_loss.append(loss)
            window_acc.append(acc)
            result.episodes_run = episode_idx

            record = None
            if episode_idx % config.log_every == 0 or episode_idx == config.episodes:
                record = {
                    "episode": episode_idx,
                    "loss": float(np.mean(window_loss)),
                    "train_acc": float(np.mean(window_acc)),
                    "val_acc": None,
                }
                window_loss.clear()
                window_acc.clear()

            if val_corpus is not None and episode_idx % config.eval_every == 0:
                val_acc, _ = evaluate(val_corpus, params, val_spec, config.val_episodes)
                if record is None:
                    record = {"episode": episode_idx, "loss": loss, "train_acc": acc,
                              "val_acc": val_acc}
                else:
                    record["val_acc"] = val_acc
                if val_acc > best_val:
                    best_val = val_acc
                    evals_since_improvement = 0
                    result.best_val_accuracy = val_acc
                    best_snapshot = {name: t.data.copy() for name, t in params.named_tensors()}
                    if config.checkpoint_path:
                        save_checkpoint(params, config.checkpoint_path,
                                        train_labels=corpus.labels,
                                        extra_config={"train": config.to_dict()})
                else:
                    evals_since_improvement += 1

            if record is not None:
                result.metrics.append(record)
                if metrics_fh is not None:
                    metrics_fh.write(json.dumps(record) + "\n")
                logger.info("episode %d: loss %.4f train_acc %.3f val_acc %s",
                            record["episode"], record["loss"], record["train_acc"],
                            record["val_acc"])

            if val_corpus is not None and evals_since_improvement >= config.patience:
                logger.info("validation accuracy plateaued; stopping at episode %d", episode_idx)
                break
    finally:
        if metrics_fh is not None:
            metrics_fh.close()

    if best_snapshot is not None:
        # Hand back the weights that scored best on validation.
        for name, tensor in params.named_tensors():
            tensor.data = best_snapshot[name]
    if config.checkpoint_path and (val_corpus is None or best_val < 0):
        save_checkpoint(params, config.checkpoint_path, train_labels=corpus.labels,
                        extra_config={"train": config.to_dict()})
    return result
