import numpy as np
import pytest

from eqlab import complexity as cx
from eqlab.txrx import dataset as dsm
from eqlab.txrx import fiber as fb


def random_model_spec(rng: np.random.Generator) -> cx.ModelSpec:
    """Random shape-valid layer stack ending in a linear readout."""
    memory = int(rng.integers(1, 13))
    features = int(rng.integers(1, 7))
    layers = []
    seq, feat = memory, features
    for _ in range(int(rng.integers(0, 5))):
        kind = rng.choice(["dense", "conv1d", "lstm", "bilstm", "flatten"])
        if kind == "dense":
            layer = cx.dense(int(rng.integers(1, 9)))
        elif kind == "conv1d":
            k = int(rng.integers(1, min(seq, 4) + 1))
            layer = cx.conv1d(int(rng.integers(1, 7)), k,
                              stride=int(rng.integers(1, 3)),
                              padding=int(rng.integers(0, 3)))
        elif kind == "lstm":
            layer = cx.lstm(int(rng.integers(1, 7)))
        elif kind == "bilstm":
            layer = cx.bilstm(int(rng.integers(1, 7)))
        else:
            layer = cx.flatten()
        layers.append(layer)
        shape = cx._layer_out_shape(cx.TensorShape(1, seq, feat), layer, "t")
        seq, feat = shape.seq, shape.features
    layers.append(cx.dense(int(rng.integers(1, 4)), activation="linear"))
    return cx.ModelSpec(layers, memory, features, layers[-1].units)


def linear_link(fiber=fb.TWC, power_dbm=2.0, noise=False) -> fb.LinkConfig:
    """gamma=0 variant of a preset; one split step suffices when linear."""
    lin_fiber = fb.FiberParams(
        alpha_db_km=fiber.alpha_db_km,
        dispersion_ps_nm_km=fiber.dispersion_ps_nm_km,
        gamma_w_km=0.0, span_length_km=fiber.span_length_km,
        span_count=fiber.span_count)
    nf = 4.5 if noise else -np.inf
    return fb.LinkConfig(fiber=lin_fiber, launch_power_dbm=power_dbm,
                         edfa_noise_figure_db=nf, steps_per_span_sim=1)


@pytest.fixture(scope="session")
def linear_dataset():
    """Small noiseless linear dataset used by training-path tests."""
    link = linear_link()
    return dsm.make_dataset(link, 6000, 6000, train_seed=11, test_seed=22,
                            xcorr_limit=None)


@pytest.fixture(scope="session")
def nonlinear_dataset():
    """Small TWC nonlinear dataset (coarse steps, still faithful enough)."""
    link = fb.LinkConfig(fiber=fb.TWC, launch_power_dbm=2.0,
                         steps_per_span_sim=10)
    return dsm.make_dataset(link, 6000, 6000, train_seed=31, test_seed=42,
                            xcorr_limit=None)
