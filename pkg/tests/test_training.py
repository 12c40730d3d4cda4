"""Training loop behavior: no-op runs, learning, determinism, NaN sentinel."""

import json

import numpy as np
import pytest

from fewshot_induction.data import generate_synthetic
from fewshot_induction.episodes import EpisodeSpec
from fewshot_induction.errors import ConfigError, DataError, NumericError
from fewshot_induction.model import init_model_params
from fewshot_induction.training import (
    TrainConfig,
    evaluate,
    split_validation_classes,
    train,
)


def tiny_config(**overrides):
    base = dict(episodes=40, way=2, shot=2, queries_per_class=3, seed=5,
                hidden_size=6, attention_dim=3, relation_slices=3, max_text_len=16,
                eval_every=20, val_episodes=4, val_fraction=0.2, patience=50,
                log_every=10)
    base.update(overrides)
    return TrainConfig(**base)


@pytest.fixture(scope="module")
def synthetic_pair():
    corpus, table = generate_synthetic(classes=10, samples_per_class=12, vocab_per_class=8,
                                       dim=8, noise=0.1, seed=21)
    return corpus, table


class TestTrainBasics:
    def test_zero_episodes_is_a_noop(self, synthetic_pair):
        corpus, table = synthetic_pair
        config = tiny_config(episodes=0)
        rng = np.random.default_rng(config.seed)
        params = init_model_params(config.model_config(table.dimension), table, rng)
        before = {name: t.data.copy() for name, t in params.named_tensors()}
        result = train(corpus, table, config, params=params)
        assert result.metrics == []
        assert result.episodes_run == 0
        for name, t in result.params.named_tensors():
            assert np.array_equal(t.data, before[name]), name

    def test_parameters_change_only_via_optimizer(self, synthetic_pair):
        corpus, table = synthetic_pair
        config = tiny_config(episodes=3, val_fraction=0.0)
        rng = np.random.default_rng(config.seed)
        params = init_model_params(config.model_config(table.dimension), table, rng)
        frozen_before = params.embedding.data.copy()
        trainable_before = {n: t.data.copy() for n, t in params.trainable_tensors()}
        train(corpus, table, config, params=params)
        # frozen embedding untouched; trainable tensors moved
        assert np.array_equal(params.embedding.data, frozen_before)
        assert any(not np.array_equal(t.data, trainable_before[n])
                   for n, t in params.trainable_tensors())

    def test_metrics_log_has_expected_records(self, synthetic_pair, tmp_path):
        corpus, table = synthetic_pair
        path = tmp_path / "metrics.jsonl"
        config = tiny_config(episodes=40, metrics_path=str(path))
        result = train(corpus, table, config)
        lines = [json.loads(line) for line in path.read_text().splitlines()]
        assert lines == result.metrics
        assert [r["episode"] for r in lines] == [10, 20, 30, 40]
        for record in lines:
            assert set(record) == {"episode", "loss", "train_acc", "val_acc"}
        assert lines[-1]["val_acc"] is not None  # eval cadence hits episode 40

    def test_insufficient_corpus_fails_before_training(self, synthetic_pair):
        corpus, table = synthetic_pair
        config = tiny_config(queries_per_class=100)
        with pytest.raises(DataError, match="class"):
            train(corpus, table, config)

    def test_config_validation(self):
        with pytest.raises(ConfigError):
            TrainConfig(learning_rate=-1.0)
        with pytest.raises(ConfigError):
            TrainConfig(induction="bogus")
        with pytest.raises(ConfigError):
            TrainConfig.from_dict({"not_a_field": 1})


class TestDeterminism:
    def test_same_seed_bit_identical_metrics(self, synthetic_pair, tmp_path):
        corpus, table = synthetic_pair
        logs = []
        for run in range(2):
            path = tmp_path / f"metrics{run}.jsonl"
            config = tiny_config(episodes=30, metrics_path=str(path))
            train(corpus, table, config)
            logs.append(path.read_bytes())
        assert logs[0] == logs[1]

    def test_different_seed_changes_metrics(self, synthetic_pair):
        corpus, table = synthetic_pair
        first = train(corpus, table, tiny_config(episodes=20, seed=1)).metrics
        second = train(corpus, table, tiny_config(episodes=20, seed=2)).metrics
        assert first != second


class TestValidationSplit:
    def test_split_is_disjoint_and_sized(self, synthetic_pair):
        corpus, _ = synthetic_pair
        config = tiny_config()
        rng = np.random.default_rng(0)
        train_c, val_c = split_validation_classes(corpus, config, rng)
        assert val_c is not None
        assert not (set(train_c.labels) & set(val_c.labels))
        assert len(val_c.labels) >= config.way
        assert len(train_c.labels) >= config.way

    def test_split_disabled_when_corpus_too_small(self, synthetic_pair):
        corpus, table = synthetic_pair
        small = corpus.subset(corpus.labels[:3])
        config = tiny_config()
        train_c, val_c = split_validation_classes(small, config, np.random.default_rng(0))
        assert val_c is None
        assert train_c is small

    def test_zero_fraction_disables_split(self, synthetic_pair):
        corpus, _ = synthetic_pair
        config = tiny_config(val_fraction=0.0)
        _, val_c = split_validation_classes(corpus, config, np.random.default_rng(0))
        assert val_c is None


class TestEvaluate:
    def test_deterministic_under_seed(self, synthetic_pair, rng):
        corpus, table = synthetic_pair
        config = tiny_config()
        params = init_model_params(config.model_config(table.dimension), table, rng)
        spec = EpisodeSpec(2, 2, 4, seed=77)
        first = evaluate(corpus, params, spec, 20)
        second = evaluate(corpus, params, spec, 20)
        assert first == second

    def test_untrained_accuracy_near_chance(self, synthetic_pair, rng):
        corpus, table = synthetic_pair
        config = tiny_config(way=2)
        params = init_model_params(config.model_config(table.dimension), table, rng)
        spec = EpisodeSpec(2, 2, 4, seed=3)
        mean, std = evaluate(corpus, params, spec, 100)
        assert abs(mean - 0.5) < 0.15
        assert std >= 0.0


class TestNanSentinel:
    def test_poisoned_parameters_raise_numeric_error(self, synthetic_pair):
        corpus, table = synthetic_pair
        config = tiny_config(episodes=2)
        rng = np.random.default_rng(0)
        params = init_model_params(config.model_config(table.dimension), table, rng)
        params.encoder.att_vec.data[0] = np.nan
        with pytest.raises(NumericError):
            train(corpus, table, config, params=params)
