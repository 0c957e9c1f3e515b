"""From-scratch NN engine: four equalizer families with exact multiply counts."""

from ._mem import tune_allocator as _tune_allocator

_tune_allocator()

from .equalize import (Equalizer, EqualizerPair, center_slice, center_targets,
                       evaluate_pair, load_pair, make_equalizer, save_pair,
                       sliding_windows, stream_features, train_pair,
                       unequalized_result)
from .families import (ArchFamily, FAMILY_HYPERS, N_FEATURES, N_OUTPUTS,
                       family_from_name, family_model, family_rmps)
from .layers import MultiplyCounter
from .model import Network
from .train import Adam, TrainConfig, TrainResult, mse, train

__all__ = [name for name in dir() if not name.startswith("_")]
