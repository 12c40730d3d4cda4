"""Independent straight-line float64 forward pass used as a test oracle.

Everything here is plain numpy with explicit loops: per-gate LSTM
recurrences, per-slice bilinear forms, hand-unrolled routing. It shares
only the parameter layout contract with the package (fused gate blocks in
input|forget|cell|output order) and never touches the autodiff code, so
agreement between the two paths is meaningful evidence.
"""

from __future__ import annotations

import numpy as np


def sigmoid_ref(x):
    return 1.0 / (1.0 + np.exp(-np.asarray(x, dtype=np.float64)))


def softmax_ref(x):
    e = np.exp(np.asarray(x, dtype=np.float64))
    return e / e.sum()


def squash_ref(x):
    x = np.asarray(x, dtype=np.float64)
    n2 = float(x @ x)
    if n2 == 0.0:
        return np.zeros_like(x)
    return (n2 / (1.0 + n2)) * x / np.sqrt(n2)


def params_to_float64(params) -> dict[str, np.ndarray]:
    return {name: t.data.astype(np.float64) for name, t in params.named_tensors()}


def lstm_direction_ref(inputs: list[np.ndarray], w_input, w_hidden, bias, u: int):
    """Per-gate LSTM recurrence with zero initial state."""
    w_i, w_f, w_g, w_o = (w_input[k * u:(k + 1) * u] for k in range(4))
    u_i, u_f, u_g, u_o = (w_hidden[k * u:(k + 1) * u] for k in range(4))
    b_i, b_f, b_g, b_o = (bias[k * u:(k + 1) * u] for k in range(4))
    h = np.zeros(u)
    c = np.zeros(u)
    states = []
    for x in inputs:
        gate_i = sigmoid_ref(w_i @ x + u_i @ h + b_i)
        gate_f = sigmoid_ref(w_f @ x + u_f @ h + b_f)
        cand = np.tanh(w_g @ x + u_g @ h + b_g)
        gate_o = sigmoid_ref(w_o @ x + u_o @ h + b_o)
        c = gate_f * c + gate_i * cand
        h = gate_o * np.tanh(c)
        states.append(h)
    return states


def encode_ref(ids, weights: dict[str, np.ndarray], u: int) -> np.ndarray:
    """Embedding lookup -> BiLSTM -> self-attention pooling, all float64."""
    embedded = [weights["embedding"][t].astype(np.float64) for t in ids]
    fwd = lstm_direction_ref(embedded, weights["encoder.fwd.w_input"],
                             weights["encoder.fwd.w_hidden"], weights["encoder.fwd.bias"], u)
    bwd = lstm_direction_ref(embedded[::-1], weights["encoder.bwd.w_input"],
                             weights["encoder.bwd.w_hidden"], weights["encoder.bwd.bias"], u)
    bwd = bwd[::-1]
    hidden = np.stack([np.concatenate([f, b]) for f, b in zip(fwd, bwd)])  # (T, 2u)
    scores = weights["encoder.att_vec"] @ np.tanh(weights["encoder.att_proj"] @ hidden.T)
    attention = softmax_ref(scores)
    return attention @ hidden


def routing_ref(predictions: list[np.ndarray], iterations: int) -> np.ndarray:
    """Hand-unrolled routing over one class's prediction vectors."""
    stacked = np.stack([np.asarray(p, dtype=np.float64) for p in predictions])
    logits = np.zeros(len(predictions))
    class_vec = None
    for _ in range(iterations):
        coeff = softmax_ref(logits)
        class_vec = squash_ref(coeff @ stacked)
        logits = logits + stacked @ class_vec
    return class_vec


def ntn_score_ref(class_vec, query_vec, weights: dict[str, np.ndarray]) -> float:
    """Slice-by-slice bilinear forms -> relu -> sigmoid head."""
    slices = weights["relation.bilinear"]
    v = np.empty(slices.shape[0])
    for k in range(slices.shape[0]):
        v[k] = max(0.0, float(class_vec @ slices[k] @ query_vec))
    return float(sigmoid_ref(weights["relation.head_weight"] @ v + weights["relation.head_bias"]))


def forward_scores_ref(episode, params) -> np.ndarray:
    """Full episode scores per the routing + tensor-layer composition."""
    weights = params_to_float64(params)
    u = params.config.hidden_size
    iterations = params.config.routing_iterations

    class_vecs = []
    for class_texts in episode.support:
        predictions = []
        for text in class_texts:
            e = encode_ref(text.ids, weights, u)
            predictions.append(squash_ref(weights["induction.transform_weight"] @ e
                                          + weights["induction.transform_bias"]))
        class_vecs.append(routing_ref(predictions, iterations))

    query_vecs = [encode_ref(text.ids, weights, u) for text, _ in episode.query]
    scores = np.empty((len(class_vecs), len(query_vecs)))
    for i, c in enumerate(class_vecs):
        for q, e_q in enumerate(query_vecs):
            scores[i, q] = ntn_score_ref(c, e_q, weights)
    return scores
