"""Class-vector induction from support samples.

The main path applies a shared affine transform plus squash to every
support sample, then runs routing-by-agreement per class: coupling logits
start at zero, each iteration softmax-normalizes them over the class's K
samples, forms the squashed weighted sum, and raises the logit of samples
agreeing with the result. The whole loop is unrolled inside the
differentiation trace; routing itself has no trainable parameters.

Two alternative induction strategies live here as well: plain summation
of the sample vectors, and an attention-weighted sum with its own learned
scoring weights.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor
from .errors import ConfigError, ContractError, DimensionError


@dataclass
class InductionParams:
    """Shared sample-to-class transform: a square matrix and a bias vector."""

    transform_weight: Tensor  # (2u, 2u)
    transform_bias: Tensor    # (2u,)

    def named_tensors(self, prefix: str = "induction") -> list[tuple[str, Tensor]]:
        return [
            (f"{prefix}.transform_weight", self.transform_weight),
            (f"{prefix}.transform_bias", self.transform_bias),
        ]


@dataclass
class AttentionInductionParams:
    """Scoring weights for the attention induction variant."""

    att_proj: Tensor  # (attention_dim, 2u)
    att_vec: Tensor   # (attention_dim,)

    def named_tensors(self, prefix: str = "induction_attention") -> list[tuple[str, Tensor]]:
        return [
            (f"{prefix}.att_proj", self.att_proj),
            (f"{prefix}.att_vec", self.att_vec),
        ]


@dataclass
class RoutingState:
    """Final coupling logits and coefficients per class, for inspection only."""

    logits: list[np.ndarray]
    coefficients: list[np.ndarray]
    iterations: int


def init_induction_params(vector_dim: int, rng: np.random.Generator) -> InductionParams:
    s = 1.0 / np.sqrt(vector_dim)
    weight = ad.parameter(rng.uniform(-s, s, size=(vector_dim, vector_dim)))
    bias = ad.parameter(np.zeros(vector_dim))
    return InductionParams(weight, bias)


def init_attention_induction_params(vector_dim: int, attention_dim: int,
                                    rng: np.random.Generator) -> AttentionInductionParams:
    s = 1.0 / np.sqrt(vector_dim)
    proj = ad.parameter(rng.uniform(-s, s, size=(attention_dim, vector_dim)))
    vec = ad.parameter(rng.uniform(-1.0 / np.sqrt(attention_dim), 1.0 / np.sqrt(attention_dim),
                                   size=attention_dim))
    return AttentionInductionParams(proj, vec)


def squash(x: Tensor) -> Tensor:
    """Shrink a vector to norm n^2/(1+n^2) < 1 without changing its direction.

    Computed as x * ||x|| / (1 + ||x||^2), which is exactly zero at the
    origin; the norm carries a tiny epsilon so the gradient is finite there.
    """
    if x.ndim != 1:
        raise DimensionError(f"squash expects a 1-d tensor, got shape {x.shape}")
    n2 = ad.squared_norm(x)
    n = ad.sqrt(ad.add_const(n2, 1e-12))
    return ad.mul(x, ad.div(n, ad.add_const(n2, 1.0)))


def transform(sample: Tensor, params: InductionParams) -> Tensor:
    """Sample prediction vector: squash(W . e + b), shared across all samples."""
    if sample.ndim != 1 or sample.shape[0] != params.transform_weight.shape[1]:
        raise DimensionError(
            f"transform expects a vector of dim {params.transform_weight.shape[1]}, got shape {sample.shape}"
        )
    return squash(ad.add(ad.matmul(params.transform_weight, sample), params.transform_bias))


def route(predictions: list[list[Tensor]], iterations: int,
          return_state: bool = False):
    """Routing-by-agreement over each class's sample prediction vectors.

    ``predictions[i]`` holds class i's K prediction vectors (K may vary by
    class). Returns the stacked class vectors of shape (C, 2u); with
    ``return_state`` also the final coupling logits/coefficients.
    """
    if iterations < 1:
        raise ConfigError(f"routing iterations must be >= 1, got {iterations}")
    if not predictions:
        raise ContractError("route requires at least one class")
    class_vectors = []
    logits_out, coeff_out = [], []
    for i, samples in enumerate(predictions):
        if not samples:
            raise ContractError(f"class {i + 1} has no sample prediction vectors")
        stacked = ad.stack(samples)  # (K, 2u)
        logits = ad.zeros(len(samples))
        coefficients = None
        class_vec = None
        for _ in range(iterations):
            coefficients = ad.softmax(logits)
            candidate = ad.matmul(coefficients, stacked)
            class_vec = squash(candidate)
            agreement = ad.matmul(stacked, class_vec)
            logits = ad.add(logits, agreement)
        class_vectors.append(class_vec)
        logits_out.append(logits.data.copy())
        coeff_out.append(coefficients.data.copy())
    result = ad.stack(class_vectors)
    if return_state:
        return result, RoutingState(logits_out, coeff_out, iterations)
    return result


def induce_routing(samples_per_class: list[list[Tensor]], params: InductionParams,
                   iterations: int, return_state: bool = False):
    """Transform every support sample, then route each class to its vector."""
    predictions = [[transform(e, params) for e in samples] for samples in samples_per_class]
    return route(predictions, iterations, return_state=return_state)


def induce_sum(samples_per_class: list[list[Tensor]]) -> Tensor:
    """Class vector = plain sum of the class's sample vectors."""
    if not samples_per_class:
        raise ContractError("induce_sum requires at least one class")
    out = []
    for i, samples in enumerate(samples_per_class):
        if not samples:
            raise ContractError(f"class {i + 1} has no sample vectors")
        acc = samples[0]
        for e in samples[1:]:
            acc = ad.add(acc, e)
        out.append(acc)
    return ad.stack(out)


def induce_attention(samples_per_class: list[list[Tensor]],
                     params: AttentionInductionParams) -> Tensor:
    """Class vector = attention-weighted sum of the class's sample vectors."""
    if not samples_per_class:
        raise ContractError("induce_attention requires at least one class")
    out = []
    for i, samples in enumerate(samples_per_class):
        if not samples:
            raise ContractError(f"class {i + 1} has no sample vectors")
        stacked = ad.stack(samples)  # (K, 2u)
        projected = ad.tanh(ad.matmul(params.att_proj, ad.transpose(stacked)))
        weights = ad.softmax(ad.matmul(params.att_vec, projected))
        out.append(ad.matmul(weights, stacked))
    return ad.stack(out)
