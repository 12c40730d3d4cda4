"""Text encoder: embedding lookup, bidirectional LSTM, self-attention pooling.

A text of any length T maps to a fixed-size vector of dimension 2u (the
concatenated forward/backward hidden sizes). Texts are encoded one at a
time at their true length, so no padding or masking is ever involved. The
same parameters encode support and query texts.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor
from .data import TokenizedText
from .errors import DataError, DimensionError

GATE_ORDER = ("input", "forget", "cell", "output")  # row blocks of the fused matrices


@dataclass
class EncoderParams:
    """BiLSTM and attention weights.

    LSTM weights are stored fused: each direction has an input projection
    of shape (4u, d), a hidden projection of shape (4u, u) and a bias of
    length 4u, with gate rows ordered input | forget | cell | output.
    """

    fwd_w_input: Tensor
    fwd_w_hidden: Tensor
    fwd_bias: Tensor
    bwd_w_input: Tensor
    bwd_w_hidden: Tensor
    bwd_bias: Tensor
    att_proj: Tensor   # (attention_dim, 2u)
    att_vec: Tensor    # (attention_dim,)

    @property
    def hidden_size(self) -> int:
        return self.fwd_w_hidden.shape[1]

    @property
    def input_size(self) -> int:
        return self.fwd_w_input.shape[1]

    def named_tensors(self, prefix: str = "encoder") -> list[tuple[str, Tensor]]:
        return [
            (f"{prefix}.fwd.w_input", self.fwd_w_input),
            (f"{prefix}.fwd.w_hidden", self.fwd_w_hidden),
            (f"{prefix}.fwd.bias", self.fwd_bias),
            (f"{prefix}.bwd.w_input", self.bwd_w_input),
            (f"{prefix}.bwd.w_hidden", self.bwd_w_hidden),
            (f"{prefix}.bwd.bias", self.bwd_bias),
            (f"{prefix}.att_proj", self.att_proj),
            (f"{prefix}.att_vec", self.att_vec),
        ]


def init_encoder_params(input_dim: int, hidden_size: int, attention_dim: int,
                        rng: np.random.Generator) -> EncoderParams:
    """Uniform init in [-1/sqrt(u), 1/sqrt(u)] with forget-gate bias set to 1."""
    u, d, da = hidden_size, input_dim, attention_dim
    s = 1.0 / np.sqrt(u)

    def lstm_weights():
        w_in = ad.parameter(rng.uniform(-s, s, size=(4 * u, d)))
        w_hid = ad.parameter(rng.uniform(-s, s, size=(4 * u, u)))
        bias = np.zeros(4 * u)
        bias[u:2 * u] = 1.0
        return w_in, w_hid, ad.parameter(bias)

    fw_in, fw_hid, fb = lstm_weights()
    bw_in, bw_hid, bb = lstm_weights()
    sa = 1.0 / np.sqrt(2 * u)
    att_proj = ad.parameter(rng.uniform(-sa, sa, size=(da, 2 * u)))
    att_vec = ad.parameter(rng.uniform(-1.0 / np.sqrt(da), 1.0 / np.sqrt(da), size=da))
    return EncoderParams(fw_in, fw_hid, fb, bw_in, bw_hid, bb, att_proj, att_vec)


def embed(text: TokenizedText, table: Tensor) -> Tensor:
    """Look up one row per token; the reserved OOV row is all zeros."""
    rows = table.shape[0]
    for tok in text.ids:
        if not 0 <= tok < rows:
            raise DataError(f"token id {tok} out of range for embedding table with {rows} rows")
    return ad.gather_rows(table, list(text.ids))


def _lstm_direction(inputs: list[Tensor], w_input: Tensor, w_hidden: Tensor,
                    bias: Tensor) -> list[Tensor]:
    """Run one LSTM direction over the given step inputs (zero initial state)."""
    u = w_hidden.shape[1]
    h = ad.zeros(u)
    c = ad.zeros(u)
    states = []
    for x in inputs:
        z = ad.add(ad.add(ad.matmul(w_input, x), ad.matmul(w_hidden, h)), bias)
        i_gate = ad.sigmoid(ad.segment(z, 0, u))
        f_gate = ad.sigmoid(ad.segment(z, u, 2 * u))
        g_cand = ad.tanh(ad.segment(z, 2 * u, 3 * u))
        o_gate = ad.sigmoid(ad.segment(z, 3 * u, 4 * u))
        c = ad.add(ad.mul(f_gate, c), ad.mul(i_gate, g_cand))
        h = ad.mul(o_gate, ad.tanh(c))
        states.append(h)
    return states


def bilstm(embedded: Tensor, params: EncoderParams) -> Tensor:
    """Hidden states (T, 2u): forward and reversed-direction states concatenated per step."""
    if embedded.ndim != 2:
        raise DimensionError(f"bilstm expects (T, d) input, got shape {embedded.shape}")
    if embedded.shape[1] != params.input_size:
        raise DimensionError(
            f"bilstm input dim {embedded.shape[1]} does not match encoder input dim {params.input_size}"
        )
    steps = [ad.row(embedded, t) for t in range(embedded.shape[0])]
    fwd = _lstm_direction(steps, params.fwd_w_input, params.fwd_w_hidden, params.fwd_bias)
    bwd = _lstm_direction(steps[::-1], params.bwd_w_input, params.bwd_w_hidden, params.bwd_bias)
    bwd = bwd[::-1]
    return ad.stack([ad.concat([f, b]) for f, b in zip(fwd, bwd)])


def attend(hidden: Tensor, params: EncoderParams) -> Tensor:
    """Attention weights over the T steps: softmax(att_vec . tanh(att_proj . H^T))."""
    projected = ad.tanh(ad.matmul(params.att_proj, ad.transpose(hidden)))
    logits = ad.matmul(params.att_vec, projected)
    return ad.softmax(logits)


def encode(text: TokenizedText, table: Tensor, params: EncoderParams) -> Tensor:
    """Fixed-size representation: attention-weighted sum of the BiLSTM states."""
    hidden = bilstm(embed(text, table), params)
    weights = attend(hidden, params)
    return ad.matmul(weights, hidden)
