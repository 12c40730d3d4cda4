"""Match scoring between a class vector and a query vector.

The main scorer is a neural tensor layer: h bilinear forms c^T M_k q with
a relu, followed by a fully connected sigmoid head, giving a score in
(0, 1). A parameter-free cosine similarity is available as the ablation
alternative.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor
from .errors import DimensionError

logger = logging.getLogger(__name__)


@dataclass
class RelationParams:
    """h bilinear slices plus the scalar scoring head."""

    bilinear: Tensor      # (h, 2u, 2u)
    head_weight: Tensor   # (h,)
    head_bias: Tensor     # scalar

    @property
    def slices(self) -> int:
        return self.bilinear.shape[0]

    def named_tensors(self, prefix: str = "relation") -> list[tuple[str, Tensor]]:
        return [
            (f"{prefix}.bilinear", self.bilinear),
            (f"{prefix}.head_weight", self.head_weight),
            (f"{prefix}.head_bias", self.head_bias),
        ]


def init_relation_params(vector_dim: int, slices: int, rng: np.random.Generator) -> RelationParams:
    if slices < 1:
        raise DimensionError(f"relation layer needs at least one slice, got {slices}")
    s = 1.0 / vector_dim
    bilinear = ad.parameter(rng.uniform(-s, s, size=(slices, vector_dim, vector_dim)))
    head_weight = ad.parameter(rng.uniform(-s, s, size=slices))
    head_bias = ad.parameter(0.0)
    return RelationParams(bilinear, head_weight, head_bias)


def ntn(class_vec: Tensor, query_vec: Tensor, params: RelationParams) -> Tensor:
    """Relation vector v with v_k = relu(c^T M_k q), computed for all k at once.

    The slice stack (h, 2u, 2u) is flattened to (h*2u, 2u) so the h
    matrix-vector products collapse into one; the reshaped result times c
    yields all h bilinear forms.
    """
    h, dim, dim2 = params.bilinear.shape
    if class_vec.ndim != 1 or query_vec.ndim != 1:
        raise DimensionError("ntn expects 1-d class and query vectors")
    if class_vec.shape[0] != dim or query_vec.shape[0] != dim2:
        raise DimensionError(
            f"ntn dimension mismatch: slices are {dim}x{dim2}, got vectors "
            f"{class_vec.shape[0]} and {query_vec.shape[0]}"
        )
    flat = ad.reshape(params.bilinear, (h * dim, dim2))
    per_slice = ad.reshape(ad.matmul(flat, query_vec), (h, dim))
    return ad.relu(ad.matmul(per_slice, class_vec))


def relation_score(relation_vec: Tensor, params: RelationParams) -> Tensor:
    """Sigmoid head over the relation vector: a scalar strictly inside (0, 1)."""
    if relation_vec.shape[0] != params.head_weight.shape[0]:
        raise DimensionError(
            f"relation vector dim {relation_vec.shape[0]} does not match head dim {params.head_weight.shape[0]}"
        )
    return ad.sigmoid(ad.add(ad.dot(params.head_weight, relation_vec), params.head_bias))


def score_pair(class_vec: Tensor, query_vec: Tensor, params: RelationParams) -> Tensor:
    return relation_score(ntn(class_vec, query_vec, params), params)


def cosine_score(class_vec: Tensor, query_vec: Tensor) -> Tensor:
    """Cosine similarity in [-1, 1]; an exactly zero vector scores 0 (logged)."""
    if class_vec.ndim != 1 or query_vec.ndim != 1 or class_vec.shape != query_vec.shape:
        raise DimensionError(
            f"cosine_score expects equal-length vectors, got {class_vec.shape} and {query_vec.shape}"
        )
    if not np.any(class_vec.data) or not np.any(query_vec.data):
        logger.warning("cosine_score received a zero vector; returning 0 by convention")
        return ad.constant(np.zeros((), dtype=class_vec.data.dtype))
    denom = ad.mul(ad.norm(class_vec), ad.norm(query_vec))
    return ad.div(ad.dot(class_vec, query_vec), denom)
