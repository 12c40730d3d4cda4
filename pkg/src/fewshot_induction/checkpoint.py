"""Versioned binary checkpoints: JSON manifest header + float32 payload.

The first line of a checkpoint file is a JSON object carrying the format
tag, version, a config snapshot (model settings, vocabulary, training
label set) and the tensor manifest (name, shape, byte offset). The rest of
the file is the concatenated little-endian float32 tensor data, so the
round trip is bit-exact and the payload stays readable from any language.
"""

from __future__ import annotations

import json

import numpy as np

from .autodiff import Tensor
from .data import EmbeddingTable
from .errors import ContractError, DataError
from .model import ModelConfig, ModelParams, init_model_params

FORMAT_TAG = "fewshot-induction-checkpoint"
FORMAT_VERSION = 1


def save_checkpoint(params: ModelParams, path: str, train_labels: list[str] | None = None,
                    extra_config: dict | None = None) -> None:
    """Write all model tensors plus the config snapshot needed to rebuild them."""
    tensors = params.named_tensors()
    manifest = []
    offset = 0
    blobs = []
    for name, tensor in tensors:
        if tensor.data.dtype != np.float32:
            raise ContractError(f"checkpoints store float32 tensors; {name} is {tensor.data.dtype}")
        blob = np.ascontiguousarray(tensor.data, dtype="<f4").tobytes()
        manifest.append({"name": name, "shape": list(tensor.shape), "offset": offset})
        blobs.append(blob)
        offset += len(blob)

    header = {
        "format": FORMAT_TAG,
        "version": FORMAT_VERSION,
        "config": {
            "model": params.config.to_dict(),
            "vocab": params.vocab,
            "train_labels": train_labels or [],
            **(extra_config or {}),
        },
        "tensors": manifest,
        "payload_bytes": offset,
    }
    with open(path, "wb") as fh:
        fh.write(json.dumps(header).encode("utf-8"))
        fh.write(b"\n")
        for blob in blobs:
            fh.write(blob)


def load_checkpoint(path: str) -> tuple[ModelParams, dict]:
    """Rebuild ModelParams from a checkpoint; returns (params, config snapshot)."""
    try:
        with open(path, "rb") as fh:
            header_line = fh.readline()
            payload = fh.read()
    except OSError as exc:
        raise DataError(f"cannot read checkpoint {path}: {exc}") from exc

    try:
        header = json.loads(header_line.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise DataError(f"{path}: checkpoint header is not valid JSON") from exc
    if header.get("format") != FORMAT_TAG:
        raise DataError(f"{path}: not a {FORMAT_TAG} file")
    if header.get("version") != FORMAT_VERSION:
        raise DataError(
            f"{path}: unsupported checkpoint version {header.get('version')!r} "
            f"(this build reads version {FORMAT_VERSION})"
        )
    if len(payload) != header["payload_bytes"]:
        raise DataError(
            f"{path}: payload is {len(payload)} bytes but the manifest declares "
            f"{header['payload_bytes']} (truncated or corrupt file)"
        )

    config = header["config"]
    model_config = ModelConfig.from_dict(config["model"])
    vocab = config["vocab"]

    arrays = {}
    names = set()
    for entry in header["tensors"]:
        name, shape, offset = entry["name"], tuple(entry["shape"]), entry["offset"]
        if name in names:
            raise DataError(f"{path}: duplicate tensor {name!r} in manifest")
        names.add(name)
        count = int(np.prod(shape)) if shape else 1
        end = offset + 4 * count
        if end > len(payload):
            raise DataError(f"{path}: tensor {name!r} extends past the payload")
        arrays[name] = np.frombuffer(payload, dtype="<f4", count=count, offset=offset).reshape(shape)

    if "embedding" not in arrays:
        raise DataError(f"{path}: manifest is missing the embedding tensor")
    matrix = arrays["embedding"]
    if matrix.shape[0] != len(vocab) + 1:
        raise DataError(f"{path}: embedding rows {matrix.shape[0]} do not match vocab size {len(vocab)}")
    table = EmbeddingTable(vocab, matrix[:-1].copy())

    rng = np.random.default_rng(0)  # values are overwritten below
    params = init_model_params(model_config, table, rng)
    expected = dict(params.named_tensors())
    missing = set(expected) - set(arrays)
    if missing:
        raise DataError(f"{path}: manifest is missing tensors: {sorted(missing)}")
    for name, tensor in expected.items():
        arr = arrays[name]
        if arr.shape != tensor.data.shape:
            raise DataError(
                f"{path}: tensor {name!r} has shape {arr.shape}, expected {tensor.data.shape}"
            )
        tensor.data = arr.astype(np.float32).copy()
    return params, config
