"""The four equalizer architecture families over a symbol window of size M.

Input features per window position: Re/Im of both polarizations (4).
Output: Re/Im of the recovered center symbol for one polarization target (2).
Conv layers use odd kernels with "same" padding so the window length is
preserved; recurrent outputs are flattened across all steps before the
linear readout.
"""

from __future__ import annotations

from enum import Enum

from .. import complexity as cx
from ..errors import ConfigError

N_FEATURES = 4
N_OUTPUTS = 2


class ArchFamily(str, Enum):
    MLP3 = "mlp"
    CNN_MLP2 = "cnn-mlp"
    BILSTM1 = "bilstm"
    CNN_BILSTM1 = "cnn-bilstm"


FAMILY_HYPERS = {
    ArchFamily.MLP3: ("n1", "n2", "n3"),
    ArchFamily.CNN_MLP2: ("f", "k", "n1", "n2"),
    ArchFamily.BILSTM1: ("nh",),
    ArchFamily.CNN_BILSTM1: ("f", "k", "nh"),
}


def family_from_name(name: str) -> ArchFamily:
    try:
        return ArchFamily(name)
    except ValueError:
        raise ConfigError(
            f"unknown family {name!r} (expected one of "
            f"{[f.value for f in ArchFamily]})") from None


def family_model(family: ArchFamily, memory: int, hyper: dict,
                 n_features: int = N_FEATURES,
                 n_out: int = N_OUTPUTS) -> cx.ModelSpec:
    """Build the layer stack of one family from its free hyperparameters."""
    if memory < 1 or memory % 2 == 0:
        raise ConfigError(f"memory must be odd for center-symbol recovery, got {memory}")
    missing = [h for h in FAMILY_HYPERS[family] if h not in hyper]
    if missing:
        raise ConfigError(f"{family.value}: missing hyperparameters {missing}")

    def same_conv(f, k):
        if k % 2 == 0:
            raise ConfigError(f"conv kernel must be odd for same padding, got {k}")
        return cx.conv1d(f, k, stride=1, padding=(k - 1) // 2, dilation=1)

    if family == ArchFamily.MLP3:
        layers = [cx.dense(hyper["n1"]), cx.dense(hyper["n2"]),
                  cx.dense(hyper["n3"]), cx.dense(n_out, activation="linear")]
    elif family == ArchFamily.CNN_MLP2:
        layers = [same_conv(hyper["f"], hyper["k"]), cx.flatten(),
                  cx.dense(hyper["n1"]), cx.dense(hyper["n2"]),
                  cx.dense(n_out, activation="linear")]
    elif family == ArchFamily.BILSTM1:
        layers = [cx.bilstm(hyper["nh"]), cx.flatten(),
                  cx.dense(n_out, activation="linear")]
    else:
        layers = [same_conv(hyper["f"], hyper["k"]), cx.bilstm(hyper["nh"]),
                  cx.flatten(), cx.dense(n_out, activation="linear")]
    return cx.ModelSpec(layers, memory=memory, features=n_features, n_out=n_out)


def family_rmps(family: ArchFamily, memory: int, hyper: dict) -> int:
    return cx.rmps_model(family_model(family, memory, hyper)).total_rmps
