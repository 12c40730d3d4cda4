"""Few-shot text classification with dynamic-routing class induction.

The package is organized as a small numpy-backed library:

- :mod:`~fewshot_induction.autodiff` / :mod:`~fewshot_induction.optim` —
  tensors with reverse-mode differentiation and the Adagrad optimizer;
- :mod:`~fewshot_induction.encoder` — embedding + BiLSTM + self-attention;
- :mod:`~fewshot_induction.induction` — squash, shared transform and
  routing-by-agreement (plus sum/attention variants);
- :mod:`~fewshot_induction.relation` — neural tensor scoring (plus cosine);
- :mod:`~fewshot_induction.episodes` / :mod:`~fewshot_induction.training` —
  episode sampling, the meta-training loop and evaluation;
- :mod:`~fewshot_induction.data` / :mod:`~fewshot_induction.checkpoint` /
  :mod:`~fewshot_induction.analysis` — corpora, embeddings, synthetic
  tasks, checkpoints and vector dumps;
- :mod:`~fewshot_induction.cli` — the command-line front end.
"""

from .autodiff import Tensor, Trace, backward, precision
from .data import Corpus, EmbeddingTable, Tokenizer, generate_synthetic, load_corpus, load_embeddings
from .episodes import Episode, EpisodeSpec, episode_loss, predict, sample_episode
from .errors import ConfigError, ContractError, DataError, DimensionError, NumericError
from .model import ModelConfig, ModelParams, forward_episode, init_model_params
from .optim import AdagradState
from .training import TrainConfig, TrainResult, evaluate, train

__version__ = "0.1.0"

__all__ = [
    "AdagradState",
    "ConfigError",
    "ContractError",
    "Corpus",
    "DataError",
    "DimensionError",
    "EmbeddingTable",
    "Episode",
    "EpisodeSpec",
    "ModelConfig",
    "ModelParams",
    "NumericError",
    "Tensor",
    "Tokenizer",
    "Trace",
    "TrainConfig",
    "TrainResult",
    "backward",
    "episode_loss",
    "evaluate",
    "forward_episode",
    "generate_synthetic",
    "init_model_params",
    "load_corpus",
    "load_embeddings",
    "precision",
    "predict",
    "sample_episode",
    "train",
]
