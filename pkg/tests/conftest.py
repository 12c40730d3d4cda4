import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from fewshot_induction.data import EmbeddingTable, TokenizedText
from fewshot_induction.episodes import Episode
from fewshot_induction.model import ModelConfig, init_model_params


def random_text(rng, vocab_size, min_len=2, max_len=6) -> TokenizedText:
    length = int(rng.integers(min_len, max_len + 1))
    return TokenizedText(tuple(int(t) for t in rng.integers(0, vocab_size, size=length)))


def micro_model(rng, vocab_size=12, embedding_dim=6, hidden_size=4, attention_dim=3,
                relation_slices=2, **overrides):
    """Small random model used throughout the suite (u=4, d=6, h=2 by default)."""
    table = EmbeddingTable([f"w{i}" for i in range(vocab_size - 1)],
                           rng.normal(0.0, 0.5, size=(vocab_size - 1, embedding_dim)))
    config = ModelConfig(embedding_dim=embedding_dim, hidden_size=hidden_size,
                         attention_dim=attention_dim, relation_slices=relation_slices,
                         max_text_len=16, **overrides)
    return init_model_params(config, table, rng)


def random_episode(rng, vocab_size, way=2, shot=2, queries_per_class=2) -> Episode:
    support = [[random_text(rng, vocab_size) for _ in range(shot)] for _ in range(way)]
    query = []
    for slot in range(1, way + 1):
        query.extend((random_text(rng, vocab_size), slot) for _ in range(queries_per_class))
    return Episode(support=support, query=query, class_labels=[f"label{i}" for i in range(way)])


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
