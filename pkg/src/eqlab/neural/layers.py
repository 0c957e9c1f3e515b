"""From-scratch NN layers with exact multiply instrumentation.

Everything runs in float64 numpy.  Each layer's ``forward`` optionally
threads a :class:`MultiplyCounter` that tallies the scalar real
multiplications the layer actually executes: matrix products, convolution
products, and the three elementwise state products per recurrent step.
Biases, additions and activation functions are free by convention, so the
counter reproduces the closed-form per-layer counts exactly.
"""

from __future__ import annotations

import numpy as np

from ..errors import ConfigError


class MultiplyCounter:
    """Per-call multiplication tally; never shared between forwards."""

    __slots__ = ("count",)

    def __init__(self):
        self.count = 0

    def add(self, n: int):
        self.count += int(n)


def _sigmoid(z):
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


LEAKY_SLOPE = 0.01


def _apply_activation(name: str, z):
    if name == "linear":
        return z
    if name == "leaky_relu":
        # max(z, slope*z); one temporary, written in place
        out = z * LEAKY_SLOPE
        np.maximum(out, z, out=out)
        return out
    if name == "tanh":
        return np.tanh(z)
    if name == "sigmoid":
        return _sigmoid(z)
    raise ConfigError(f"unknown activation {name!r}")


def _grad_through_activation(name: str, dy, z, y):
    """dy * d(activation)/dz given pre-activation z and output y."""
    if name == "linear":
        return dy
    if name == "leaky_relu":
        return dy * (LEAKY_SLOPE + (1.0 - LEAKY_SLOPE) * (z >= 0))
    if name == "tanh":
        return dy * (1.0 - y * y)
    if name == "sigmoid":
        return dy * (y * (1.0 - y))
    raise ConfigError(f"unknown activation {name!r}")


class Layer:
    """Interface: forward caches whatever backward needs; grads overwrite."""

    def params(self) -> list[np.ndarray]:
        return []

    def grads(self) -> list[np.ndarray]:
        return []

    def forward(self, x, counter: MultiplyCounter | None = None):
        raise NotImplementedError

    def backward(self, dy):
        raise NotImplementedError

    # 2-D data entering a sequence layer is a one-step sequence [B, 1, w]
    def _as_sequence(self, x):
        self._expanded = x.ndim == 2
        return x[:, None, :] if self._expanded else x

    def _unexpand(self, dx):
        return dx[:, 0, :] if self._expanded else dx


class Flatten(Layer):
    def forward(self, x, counter=None):
        self._shape = x.shape
        return x.reshape(x.shape[0], -1)

    def backward(self, dy):
        return dy.reshape(self._shape)


class Dense(Layer):
    """Fully connected layer; 3-D inputs are flattened per sample."""

    def __init__(self, in_width: int, units: int, activation: str, rng):
        limit = 1.0 / np.sqrt(in_width)
        self.W = rng.uniform(-limit, limit, (in_width, units))
        self.b = np.zeros(units)
        self.activation = activation
        self.dW = np.zeros_like(self.W)
        self.db = np.zeros_like(self.b)

    def params(self):
        return [self.W, self.b]

    def grads(self):
        return [self.dW, self.db]

    def forward(self, x, counter=None):
        self._in_shape = x.shape
        x2 = x.reshape(x.shape[0], -1)
        if x2.shape[1] != self.W.shape[0]:
            raise ConfigError(
                f"dense expects width {self.W.shape[0]}, got {x2.shape[1]}")
        if counter is not None:
            counter.add(x2.shape[0] * self.W.shape[0] * self.W.shape[1])
        self._x = x2
        z = x2 @ self.W
        z += self.b
        self._z = z
        self._y = _apply_activation(self.activation, z)
        return self._y

    def backward(self, dy):
        dz = _grad_through_activation(self.activation, dy, self._z, self._y)
        self.dW[...] = self._x.T @ dz
        self.db[...] = dz.sum(axis=0)
        return (dz @ self.W.T).reshape(self._in_shape)


class Conv1D(Layer):
    """1-D convolution over [B, n_s, n_i] via gathered windows."""

    def __init__(self, n_in: int, filters: int, kernel: int, stride: int,
                 padding: int, dilation: int, activation: str, rng):
        fan_in = kernel * n_in
        limit = 1.0 / np.sqrt(fan_in)
        self.W = rng.uniform(-limit, limit, (kernel, n_in, filters))
        self.b = np.zeros(filters)
        self.stride = stride
        self.padding = padding
        self.dilation = dilation
        self.activation = activation
        self.dW = np.zeros_like(self.W)
        self.db = np.zeros_like(self.b)

    def params(self):
        return [self.W, self.b]

    def grads(self):
        return [self.dW, self.db]

    def _indices(self, n_s: int):
        k = self.W.shape[0]
        effective = self.dilation * (k - 1) + 1
        padded = n_s + 2 * self.padding
        if effective > padded:
            raise ConfigError(
                f"conv1d: effective kernel {effective} exceeds padded input "
                f"length {padded}")
        n_out = (padded - effective) // self.stride + 1
        starts = np.arange(n_out) * self.stride
        taps = np.arange(k) * self.dilation
        return starts[:, None] + taps[None, :], n_out, padded

    def forward(self, x, counter=None):
        x = self._as_sequence(x)
        if x.ndim != 3:
            raise ConfigError(f"conv1d expects [B, n_s, n_i], got ndim={x.ndim}")
        B, n_s, n_in = x.shape
        idx, n_out, padded = self._indices(n_s)
        xp = np.zeros((B, padded, n_in))
        xp[:, self.padding:self.padding + n_s, :] = x
        k, _, f = self.W.shape
        if counter is not None:
            counter.add(B * n_out * k * n_in * f)
        # contiguous im2col (strided window view, then one packed copy + gemm)
        s_b, s_t, s_c = xp.strides
        view = np.lib.stride_tricks.as_strided(
            xp, shape=(B, n_out, k, n_in),
            strides=(s_b, s_t * self.stride, s_t * self.dilation, s_c))
        cols = np.ascontiguousarray(view).reshape(B * n_out, k * n_in)
        z = cols @ self.W.reshape(k * n_in, f)
        z += self.b
        z = z.reshape(B, n_out, f)
        self._cols = cols
        self._idx = idx
        self._n_s = n_s
        self._padded = padded
        self._z = z
        self._y = _apply_activation(self.activation, z)
        return self._y

    def backward(self, dy):
        dz = _grad_through_activation(self.activation, dy, self._z, self._y)
        B, n_out, f = dz.shape
        k, n_in, _ = self.W.shape
        dz2 = dz.reshape(B * n_out, f)
        self.dW[...] = (self._cols.T @ dz2).reshape(k, n_in, f)
        self.db[...] = dz2.sum(axis=0)
        dcols = (dz2 @ self.W.reshape(k * n_in, f).T).reshape(B, n_out, k, n_in)
        dxp = np.zeros((B, self._padded, n_in))
        np.add.at(dxp, (slice(None), self._idx, slice(None)), dcols)
        return self._unexpand(dxp[:, self.padding:self.padding + self._n_s, :])


class _LSTMCore:
    """One recurrent direction; gate order i, f, g, o in the fused matrices."""

    def __init__(self, n_in: int, hidden: int, rng):
        limit = 1.0 / np.sqrt(n_in)
        self.W = rng.uniform(-limit, limit, (n_in, 4 * hidden))
        self.U = np.concatenate(
            [_orthogonal(hidden, rng) for _ in range(4)], axis=1)
        self.b = np.zeros(4 * hidden)
        self.b[hidden:2 * hidden] = 1.0  # forget-gate bias
        self.hidden = hidden
        self.dW = np.zeros_like(self.W)
        self.dU = np.zeros_like(self.U)
        self.db = np.zeros_like(self.b)

    def params(self):
        return [self.W, self.U, self.b]

    def grads(self):
        return [self.dW, self.dU, self.db]

    def forward(self, x, counter=None):
        B, T, n_in = x.shape
        H = self.hidden
        if n_in != self.W.shape[0]:
            raise ConfigError(
                f"lstm expects {self.W.shape[0]} features, got {n_in}")
        h = np.zeros((B, H))
        c = np.zeros((B, H))
        self._cache = []
        ys = np.empty((B, T, H))
        for t in range(T):
            xt = x[:, t, :]
            if counter is not None:
                # 4 input products, 4 recurrent products, 3 state products
                counter.add(B * n_in * 4 * H + B * H * 4 * H + 3 * B * H)
            a = xt @ self.W + h @ self.U + self.b
            i = _sigmoid(a[:, :H])
            f = _sigmoid(a[:, H:2 * H])
            g = np.tanh(a[:, 2 * H:3 * H])
            o = _sigmoid(a[:, 3 * H:])
            c_new = f * c + i * g
            tc = np.tanh(c_new)
            h_new = o * tc
            self._cache.append((xt, h, c, i, f, g, o, tc))
            h, c = h_new, c_new
            ys[:, t, :] = h
        self._x_shape = x.shape
        return ys

    def backward(self, dys):
        B, T, H = dys.shape
        n_in = self.W.shape[0]
        self.dW[...] = 0.0
        self.dU[...] = 0.0
        self.db[...] = 0.0
        dx = np.zeros((B, T, n_in))
        dh_next = np.zeros((B, H))
        dc_next = np.zeros((B, H))
        for t in range(T - 1, -1, -1):
            xt, h_prev, c_prev, i, f, g, o, tc = self._cache[t]
            dh = dys[:, t, :] + dh_next
            do = dh * tc
            dc = dh * o * (1.0 - tc * tc) + dc_next
            di = dc * g
            df = dc * c_prev
            dg = dc * i
            da = np.concatenate([
                di * i * (1.0 - i),
                df * f * (1.0 - f),
                dg * (1.0 - g * g),
                do * o * (1.0 - o),
            ], axis=1)
            self.dW += xt.T @ da
            self.dU += h_prev.T @ da
            self.db += da.sum(axis=0)
            dx[:, t, :] = da @ self.W.T
            dh_next = da @ self.U.T
            dc_next = dc * f
        return dx


def _orthogonal(n: int, rng) -> np.ndarray:
    q, r = np.linalg.qr(rng.standard_normal((n, n)))
    return q * np.sign(np.diag(r))


class LSTM(Layer):
    """Unidirectional recurrent layer returning the full sequence."""

    def __init__(self, n_in: int, hidden: int, rng):
        self.core = _LSTMCore(n_in, hidden, rng)

    def params(self):
        return self.core.params()

    def grads(self):
        return self.core.grads()

    def forward(self, x, counter=None):
        return self.core.forward(self._as_sequence(x), counter)

    def backward(self, dy):
        return self._unexpand(self.core.backward(dy))


class BiLSTM(Layer):
    """Two independent recurrent passes, outputs concatenated per step."""

    def __init__(self, n_in: int, hidden: int, rng):
        self.fwd = _LSTMCore(n_in, hidden, rng)
        self.bwd = _LSTMCore(n_in, hidden, rng)
        self.hidden = hidden

    def params(self):
        return self.fwd.params() + self.bwd.params()

    def grads(self):
        return self.fwd.grads() + self.bwd.grads()

    def forward(self, x, counter=None):
        x = self._as_sequence(x)
        yf = self.fwd.forward(x, counter)
        yb = self.bwd.forward(x[:, ::-1, :], counter)[:, ::-1, :]
        return np.concatenate([yf, yb], axis=2)

    def backward(self, dy):
        H = self.hidden
        dxf = self.fwd.backward(dy[:, :, :H])
        dxb = self.bwd.backward(np.ascontiguousarray(dy[:, ::-1, H:]))[:, ::-1, :]
        return self._unexpand(dxf + dxb)
