"""Model parameter bundle and the episode forward pass.

A model is the embedding table, the shared text encoder, the configured
induction strategy and the configured relation scorer. The forward pass
over one episode encodes every support and query text, induces one vector
per class, and scores every (class, query) pair.
"""

from __future__ import annotations

from dataclasses import dataclass, field, asdict

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor
from .data import EmbeddingTable, Tokenizer
from .encoder import EncoderParams, encode, init_encoder_params
from .errors import ConfigError, ContractError
from .induction import (
    AttentionInductionParams,
    InductionParams,
    induce_attention,
    induce_routing,
    induce_sum,
    init_attention_induction_params,
    init_induction_params,
)
from .relation import RelationParams, cosine_score, init_relation_params, score_pair

INDUCTION_VARIANTS = ("routing", "sum", "attention")
RELATION_VARIANTS = ("ntn", "cosine")


@dataclass
class ModelConfig:
    """Architecture settings; dimensions follow the usual defaults."""

    embedding_dim: int
    hidden_size: int = 128
    attention_dim: int = 64
    relation_slices: int = 100
    induction: str = "routing"
    relation: str = "ntn"
    routing_iterations: int = 3
    max_text_len: int = 64
    trainable_embeddings: bool = False

    def __post_init__(self):
        if self.induction not in INDUCTION_VARIANTS:
            raise ConfigError(f"induction must be one of {INDUCTION_VARIANTS}, got {self.induction!r}")
        if self.relation not in RELATION_VARIANTS:
            raise ConfigError(f"relation must be one of {RELATION_VARIANTS}, got {self.relation!r}")
        if not 1 <= self.routing_iterations <= 10:
            raise ConfigError(f"routing_iterations must be in 1..10, got {self.routing_iterations}")
        for name in ("embedding_dim", "hidden_size", "attention_dim", "relation_slices", "max_text_len"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be positive, got {getattr(self, name)}")

    @property
    def vector_dim(self) -> int:
        """Dimension of encoded texts and class vectors (2u)."""
        return 2 * self.hidden_size

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "ModelConfig":
        return cls(**data)


@dataclass
class ModelParams:
    """Every tensor of a model plus the vocabulary it was built against."""

    config: ModelConfig
    vocab: list[str]
    embedding: Tensor
    encoder: EncoderParams
    induction: InductionParams | None = None
    induction_attention: AttentionInductionParams | None = None
    relation: RelationParams | None = None
    _tokenizer: Tokenizer | None = field(default=None, repr=False)

    def named_tensors(self) -> list[tuple[str, Tensor]]:
        """All tensors in a fixed order, frozen embedding included."""
        out = [("embedding", self.embedding)]
        out.extend(self.encoder.named_tensors())
        if self.induction is not None:
            out.extend(self.induction.named_tensors())
        if self.induction_attention is not None:
            out.extend(self.induction_attention.named_tensors())
        if self.relation is not None:
            out.extend(self.relation.named_tensors())
        return out

    def trainable_tensors(self) -> list[tuple[str, Tensor]]:
        return [(name, t) for name, t in self.named_tensors() if t.requires_grad]

    def tokenizer(self) -> Tokenizer:
        if self._tokenizer is None:
            vocab_map = {tok: i for i, tok in enumerate(self.vocab)}
            self._tokenizer = Tokenizer(vocab_map, oov_id=len(self.vocab),
                                        max_len=self.config.max_text_len)
        return self._tokenizer


def init_model_params(config: ModelConfig, table: EmbeddingTable,
                      rng: np.random.Generator) -> ModelParams:
    """Fresh parameters for the configured variant; only needed pieces exist."""
    if table.dimension != config.embedding_dim:
        raise ConfigError(
            f"embedding table dimension {table.dimension} does not match config {config.embedding_dim}"
        )
    dim = config.vector_dim
    params = ModelParams(
        config=config,
        vocab=table.tokens_in_order(),
        embedding=table.as_tensor(trainable=config.trainable_embeddings),
        encoder=init_encoder_params(config.embedding_dim, config.hidden_size,
                                    config.attention_dim, rng),
    )
    if config.induction == "routing":
        params.induction = init_induction_params(dim, rng)
    elif config.induction == "attention":
        params.induction_attention = init_attention_induction_params(dim, config.attention_dim, rng)
    if config.relation == "ntn":
        params.relation = init_relation_params(dim, config.relation_slices, rng)
    return params


def encode_support(episode, params: ModelParams) -> list[list[Tensor]]:
    """Encoded support vectors, one list of K vectors per class slot."""
    return [[encode(text, params.embedding, params.encoder) for text in class_texts]
            for class_texts in episode.support]


def encode_queries(episode, params: ModelParams) -> list[Tensor]:
    return [encode(text, params.embedding, params.encoder) for text, _ in episode.query]


def induce_class_vectors(support_vecs: list[list[Tensor]], params: ModelParams) -> Tensor:
    """Class vectors (C, 2u) via the configured induction variant."""
    kind = params.config.induction
    if kind == "routing":
        if params.induction is None:
            raise ContractError("routing induction requires InductionParams")
        return induce_routing(support_vecs, params.induction, params.config.routing_iterations)
    if kind == "sum":
        return induce_sum(support_vecs)
    if params.induction_attention is None:
        raise ContractError("attention induction requires AttentionInductionParams")
    return induce_attention(support_vecs, params.induction_attention)


def forward_episode(episode, params: ModelParams) -> Tensor:
    """Relation scores of shape (C, n): row i scores every query against class i."""
    support_vecs = encode_support(episode, params)
    query_vecs = encode_queries(episode, params)
    class_matrix = induce_class_vectors(support_vecs, params)

    use_ntn = params.config.relation == "ntn"
    if use_ntn and params.relation is None:
        raise ContractError("ntn relation requires RelationParams")
    rows = []
    for i in range(len(episode.support)):
        class_vec = ad.row(class_matrix, i)
        if use_ntn:
            scores = [score_pair(class_vec, q, params.relation) for q in query_vecs]
        else:
            scores = [cosine_score(class_vec, q) for q in query_vecs]
        rows.append(ad.stack(scores))
    return ad.stack(rows)


def scores_for_loss(scores: Tensor, relation_kind: str) -> Tensor:
    """Map raw scores into [0, 1] for the MSE objective.

    Sigmoid scores already live there; cosine scores in [-1, 1] are mapped
    through (r + 1) / 2 so the 0/1 targets remain reachable.
    """
    if relation_kind == "cosine":
        return ad.scale(ad.add_const(scores, 1.0), 0.5)
    return scores
