"""Sequential network assembled from a declarative layer stack."""

from __future__ import annotations

import numpy as np

from .. import complexity as cx
from ..errors import ConfigError
from .layers import BiLSTM, Conv1D, Dense, Flatten, LSTM, MultiplyCounter


class Network:
    """Executable stack mirroring a :class:`~eqlab.complexity.ModelSpec`.

    Recurrent and conv layers consume ``[B, n_s, n_i]``; dense layers flatten
    whatever reaches them, exactly as the complexity accounting assumes.
    Parameter order (for flat vectors and serialization): layers in stack
    order; dense/conv contribute W then b, lstm contributes W, U, b, bilstm
    the forward then the backward direction.
    """

    def __init__(self, spec: cx.ModelSpec, seed: int = 0):
        self.spec = spec
        self.seed = seed
        rng = np.random.default_rng(seed)
        shapes = cx.trace_shapes(spec)
        self.layers: list = []
        for layer, shape in zip(spec.layers, shapes[:-1]):
            k = layer.kind
            if k == cx.LayerKind.DENSE:
                self.layers.append(
                    Dense(shape.width, layer.units, layer.activation, rng))
            elif k == cx.LayerKind.CONV1D:
                self.layers.append(
                    Conv1D(shape.features, layer.filters, layer.kernel,
                           layer.stride, layer.padding, layer.dilation,
                           layer.activation, rng))
            elif k == cx.LayerKind.LSTM:
                self.layers.append(LSTM(shape.features, layer.hidden, rng))
            elif k == cx.LayerKind.BILSTM:
                self.layers.append(BiLSTM(shape.features, layer.hidden, rng))
            else:
                self.layers.append(Flatten())

    # -- execution ----------------------------------------------------------

    def forward(self, x: np.ndarray, count_multiplies: bool = False):
        """Run the stack; optionally return (output, exact multiply count).

        The count covers the whole batch: per-symbol cost is count / B.
        """
        if x.ndim == 2:
            expected = self.spec.memory * self.spec.features
            if x.shape[1] != expected:
                raise ConfigError(
                    f"expected input width {expected}, got {x.shape[1]}")
            x = x.reshape(x.shape[0], self.spec.memory, self.spec.features)
        elif x.ndim == 3:
            if x.shape[1:] != (self.spec.memory, self.spec.features):
                raise ConfigError(
                    f"expected input [B, {self.spec.memory}, "
                    f"{self.spec.features}], got {x.shape}")
        else:
            raise ConfigError(f"expected 2-D or 3-D input, got ndim={x.ndim}")
        counter = MultiplyCounter() if count_multiplies else None
        y = x
        for layer in self.layers:
            y = layer.forward(y, counter)
        y = y.reshape(y.shape[0], -1)
        if count_multiplies:
            return y, counter.count
        return y

    def backward(self, dy: np.ndarray) -> np.ndarray:
        for layer in reversed(self.layers):
            dy = layer.backward(dy)
        return dy

    # -- parameter plumbing --------------------------------------------------

    def params(self) -> list[np.ndarray]:
        return [p for layer in self.layers for p in layer.params()]

    def grads(self) -> list[np.ndarray]:
        return [g for layer in self.layers for g in layer.grads()]

    def n_params(self) -> int:
        return sum(p.size for p in self.params())

    def get_flat(self) -> np.ndarray:
        ps = self.params()
        if not ps:
            return np.zeros(0)
        return np.concatenate([p.ravel() for p in ps])

    def set_flat(self, flat: np.ndarray):
        pos = 0
        for p in self.params():
            p[...] = flat[pos:pos + p.size].reshape(p.shape)
            pos += p.size
        if pos != flat.size:
            raise ConfigError(
                f"parameter vector has {flat.size} entries, model needs {pos}")

    def grad_flat(self) -> np.ndarray:
        gs = self.grads()
        if not gs:
            return np.zeros(0)
        return np.concatenate([g.ravel() for g in gs])
