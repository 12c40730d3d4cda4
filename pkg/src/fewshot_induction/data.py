"""Corpus and embedding I/O, tokenization, and synthetic task generation.

Corpus files are JSON lines with string fields ``text`` and ``label``.
Embedding files follow the common plain-text convention: one token per
line followed by its vector components, space separated. Parsers reject
malformed input with the offending line number; nothing is coerced
silently.
"""

from __future__ import annotations

import json
import logging
import os
from dataclasses import dataclass

import numpy as np

from .autodiff import Tensor
from .errors import ConfigError, ContractError, DataError

logger = logging.getLogger(__name__)

DATA_DIR_ENV = "FEWSHOT_INDUCTION_DATA_DIR"


def resolve_data_path(path: str) -> str:
    """Resolve a data file path, falling back to $FEWSHOT_INDUCTION_DATA_DIR.

    Absolute paths and paths that exist relative to the working directory
    are returned unchanged; otherwise the environment directory, when set,
    is tried as a prefix.
    """
    if os.path.isabs(path) or os.path.exists(path):
        return path
    base = os.environ.get(DATA_DIR_ENV)
    if base:
        candidate = os.path.join(base, path)
        if os.path.exists(candidate):
            return candidate
    return path


@dataclass(frozen=True)
class TokenizedText:
    """Token ids of one text after lowercasing, splitting and truncation."""

    ids: tuple[int, ...]

    def __post_init__(self):
        if len(self.ids) == 0:
            raise ContractError("tokenized text must contain at least one token")

    def __len__(self) -> int:
        return len(self.ids)


class Corpus:
    """Labeled texts with a dense label -> class-index map (indices from 1)."""

    def __init__(self, examples: list[tuple[str, str]]):
        if not examples:
            raise DataError("corpus contains no examples")
        self.examples = list(examples)
        self.labels = sorted({label for _, label in self.examples})
        self.class_index = {label: i + 1 for i, label in enumerate(self.labels)}
        self.by_label: dict[str, list[int]] = {label: [] for label in self.labels}
        for i, (_, label) in enumerate(self.examples):
            self.by_label[label].append(i)
        self.tokens: list[TokenizedText] | None = None
        self.token_pool: np.ndarray | None = None

    def __len__(self) -> int:
        return len(self.examples)

    @property
    def num_classes(self) -> int:
        return len(self.labels)

    def subset(self, labels) -> "Corpus":
        """New corpus restricted to the given labels (token cache dropped)."""
        keep = set(labels)
        missing = keep - set(self.labels)
        if missing:
            raise DataError(f"labels not present in corpus: {sorted(missing)}")
        return Corpus([(t, l) for t, l in self.examples if l in keep])

    def attach_tokens(self, tokenizer: "Tokenizer") -> "Corpus":
        """Tokenize every example once; episode sampling requires this."""
        self.tokens = [tokenizer.tokenize(text) for text, _ in self.examples]
        self.token_pool = np.unique(np.concatenate([np.asarray(t.ids) for t in self.tokens]))
        return self


class EmbeddingTable:
    """Pretrained word vectors plus a reserved all-zero row for unknown tokens.

    The matrix has ``len(vocab) + 1`` rows; the appended last row is the
    out-of-vocabulary row and stays zero.
    """

    def __init__(self, tokens: list[str], vectors: np.ndarray):
        vectors = np.asarray(vectors, dtype=np.float32)
        if vectors.ndim != 2 or vectors.shape[0] != len(tokens):
            raise DataError(f"embedding matrix shape {vectors.shape} does not match {len(tokens)} tokens")
        self.dimension = int(vectors.shape[1])
        self.vocab = {tok: i for i, tok in enumerate(tokens)}
        if len(self.vocab) != len(tokens):
            raise DataError("duplicate tokens passed to EmbeddingTable")
        self.matrix = np.vstack([vectors, np.zeros((1, self.dimension), dtype=np.float32)])
        self.oov_id = len(tokens)

    @property
    def rows(self) -> int:
        return self.matrix.shape[0]

    def tokens_in_order(self) -> list[str]:
        out = [""] * (self.rows - 1)
        for tok, i in self.vocab.items():
            out[i] = tok
        return out

    def as_tensor(self, trainable: bool = False) -> Tensor:
        return Tensor(self.matrix.copy(), requires_grad=trainable, name="embedding")


class Tokenizer:
    """Lowercase + whitespace tokenization against a fixed vocabulary."""

    def __init__(self, vocab: dict[str, int], oov_id: int, max_len: int = 64):
        if max_len < 1:
            raise ConfigError(f"max_len must be positive, got {max_len}")
        self.vocab = vocab
        self.oov_id = oov_id
        self.max_len = max_len

    @classmethod
    def for_table(cls, table: EmbeddingTable, max_len: int = 64) -> "Tokenizer":
        return cls(table.vocab, table.oov_id, max_len=max_len)

    def tokenize(self, text: str) -> TokenizedText:
        parts = text.lower().split()
        if not parts:
            raise DataError("text has no tokens")
        ids = tuple(self.vocab.get(tok, self.oov_id) for tok in parts[: self.max_len])
        return TokenizedText(ids)


# ---------------------------------------------------------------------------
# file I/O


def load_corpus(path: str) -> Corpus:
    """Read a JSON-lines corpus; every record needs string text and label."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise DataError(f"cannot read corpus file {path}: {exc}") from exc

    examples = []
    for lineno, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            record = json.loads(line)
        except json.JSONDecodeError as exc:
            raise DataError(f"{path}: line {lineno}: invalid JSON ({exc.msg})") from exc
        if not isinstance(record, dict):
            raise DataError(f"{path}: line {lineno}: expected a JSON object")
        for key in ("text", "label"):
            if key not in record:
                raise DataError(f"{path}: line {lineno}: missing field {key!r}")
            if not isinstance(record[key], str):
                raise DataError(f"{path}: line {lineno}: field {key!r} must be a string")
        if not record["text"].strip():
            raise DataError(f"{path}: line {lineno}: empty text")
        if not record["label"].strip():
            raise DataError(f"{path}: line {lineno}: empty label")
        examples.append((record["text"], record["label"]))
    if not examples:
        raise DataError(f"{path}: corpus contains no examples")
    return Corpus(examples)


def save_corpus(corpus: Corpus, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for text, label in corpus.examples:
            fh.write(json.dumps({"text": text, "label": label}) + "\n")


def load_embeddings(path: str, vocab_limit: int | None = None) -> EmbeddingTable:
    """Read plain-text word vectors; dimension is fixed by the first line.

    Tokens past ``vocab_limit`` are dropped. On duplicate tokens the first
    occurrence wins and a warning is logged.
    """
    tokens: list[str] = []
    vectors: list[np.ndarray] = []
    seen: set[str] = set()
    dimension: int | None = None
    try:
        fh = open(path, "r", encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot read embeddings file {path}: {exc}") from exc
    with fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            parts = line.rstrip("\n").split(" ")
            if len(parts) < 2:
                raise DataError(f"{path}: line {lineno}: expected a token and vector components")
            token, values = parts[0], parts[1:]
            if dimension is None:
                dimension = len(values)
            elif len(values) != dimension:
                raise DataError(
                    f"{path}: line {lineno}: expected {dimension} components, found {len(values)}"
                )
            try:
                vec = np.array([float(v) for v in values], dtype=np.float32)
            except ValueError as exc:
                raise DataError(f"{path}: line {lineno}: non-numeric component") from exc
            if token in seen:
                logger.warning("%s: line %d: duplicate token %r ignored", path, lineno, token)
                continue
            if vocab_limit is not None and len(tokens) >= vocab_limit:
                break
            seen.add(token)
            tokens.append(token)
            vectors.append(vec)
    if not tokens:
        raise DataError(f"{path}: no embedding rows found")
    return EmbeddingTable(tokens, np.stack(vectors))


def save_embeddings(table: EmbeddingTable, path: str) -> None:
    """Write vectors in the plain-text format (OOV row is not written)."""
    tokens = table.tokens_in_order()
    with open(path, "w", encoding="utf-8") as fh:
        for i, tok in enumerate(tokens):
            comps = " ".join("%.9g" % v for v in table.matrix[i])
            fh.write(f"{tok} {comps}\n")


# ---------------------------------------------------------------------------
# synthetic tasks


def generate_synthetic(classes: int, samples_per_class: int, vocab_per_class: int,
                       dim: int, noise: float, seed: int) -> tuple[Corpus, EmbeddingTable]:
    """Build a labeled corpus whose classes own separable token clusters.

    Each class gets ``vocab_per_class`` tokens embedded near a class mean.
    Texts are 3-10 tokens drawn from the class cluster; with probability
    ``noise`` a position is drawn from a uniformly chosen other class
    instead, so ``noise=0`` is cleanly separable and ``noise=1`` carries no
    class signal of its own. Fully deterministic for a given seed.
    """
    if min(classes, samples_per_class, vocab_per_class, dim) < 1:
        raise ConfigError("classes, samples_per_class, vocab_per_class and dim must be positive")
    if not 0.0 <= noise <= 1.0:
        raise ConfigError(f"noise must lie in [0, 1], got {noise}")
    rng = np.random.default_rng(seed)

    means = rng.normal(0.0, 1.0, size=(classes, dim))
    tokens: list[str] = []
    vectors = np.empty((classes * vocab_per_class, dim), dtype=np.float64)
    for ci in range(classes):
        for j in range(vocab_per_class):
            tokens.append(f"c{ci:02d}w{j:03d}")
            vectors[ci * vocab_per_class + j] = means[ci] + rng.normal(0.0, 0.25, size=dim)

    def draw_token(ci: int) -> str:
        if classes > 1 and noise > 0 and rng.random() < noise:
            other = int(rng.integers(classes - 1))
            if other >= ci:
                other += 1
            ci = other
        j = int(rng.integers(vocab_per_class))
        return f"c{ci:02d}w{j:03d}"

    examples = []
    for ci in range(classes):
        label = f"class{ci:02d}"
        for _ in range(samples_per_class):
            length = int(rng.integers(3, 11))
            examples.append((" ".join(draw_token(ci) for _ in range(length)), label))

    return Corpus(examples), EmbeddingTable(tokens, vectors)
