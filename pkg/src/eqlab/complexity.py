"""Exact accounting of real multiplications per recovered symbol (RMpS).

Single-layer closed forms (all plain integer arithmetic):

    dense  : n_i*n1 + n1*n_o        one hidden layer plus its readout
    conv1d : k*n_i*n_o*n_s'         n_o = filter count, n_s' = output length
    lstm   : n_s*n_h*(4*n_i + 4*n_h + 3 + n_o)
    bilstm : 2x lstm

For layer stacks, ``rmps_model`` charges every input->output multiplication
to the consuming layer exactly once, so sequential layers never double-count
the matrix product between them.  A recurrent layer inside a stack is charged
only its gate and state work, ``n_s*n_h*(4*n_i + 4*n_h + 3)``; the readout
that the standalone formula folds in (the ``+ n_o`` term) belongs to whatever
dense layer consumes the flattened sequence, and the two views agree exactly.

Additions, biases and activation functions are free by convention; the ``+3``
in the recurrent form is the three elementwise state products per step.
Counts are Python ints, so budgets at the 1e8 scale cannot overflow.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable

from .errors import ConfigError

__all__ = [
    "LayerKind",
    "LayerSpec",
    "TensorShape",
    "ModelSpec",
    "LayerReport",
    "RmpsReport",
    "conv_output_length",
    "rmps_dense",
    "rmps_conv1d",
    "rmps_lstm",
    "rmps_bilstm",
    "rmps_model",
    "param_count",
    "big_o",
    "dense",
    "conv1d",
    "lstm",
    "bilstm",
    "flatten",
    "model_from_json",
    "model_to_json",
    "report_table",
]


class LayerKind(str, Enum):
    DENSE = "dense"
    CONV1D = "conv1d"
    LSTM = "lstm"
    BILSTM = "bilstm"
    FLATTEN = "flatten"


BIG_O_TAGS = {
    LayerKind.DENSE: "O(n d)",
    LayerKind.CONV1D: "O(k n d²)",
    LayerKind.LSTM: "O(n d²)",
    LayerKind.BILSTM: "O(n d²)",
    LayerKind.FLATTEN: "O(1)",
}


def _check_positive(name: str, value, minimum: int = 1) -> int:
    if not isinstance(value, (int,)) or isinstance(value, bool):
        raise ConfigError(f"{name} must be an integer, got {value!r}")
    if value < minimum:
        raise ConfigError(f"{name} must be >= {minimum}, got {value}")
    return int(value)


@dataclass(frozen=True)
class LayerSpec:
    """One layer of an equalizer stack; ``activation`` is metadata only."""

    kind: LayerKind
    units: int | None = None       # dense
    filters: int | None = None     # conv1d
    kernel: int | None = None      # conv1d
    stride: int = 1                # conv1d
    padding: int = 0               # conv1d
    dilation: int = 1              # conv1d
    hidden: int | None = None      # lstm / bilstm
    activation: str = "linear"

    def __post_init__(self):
        k = self.kind
        if k == LayerKind.DENSE:
            _check_positive("dense units", self.units)
        elif k == LayerKind.CONV1D:
            _check_positive("conv1d filters", self.filters)
            _check_positive("conv1d kernel", self.kernel)
            _check_positive("conv1d stride", self.stride)
            _check_positive("conv1d padding", self.padding, minimum=0)
            _check_positive("conv1d dilation", self.dilation)
        elif k in (LayerKind.LSTM, LayerKind.BILSTM):
            _check_positive(f"{k.value} hidden units", self.hidden)

    def label(self) -> str:
        if self.kind == LayerKind.DENSE:
            return f"dense[{self.units}]"
        if self.kind == LayerKind.CONV1D:
            return f"conv1d[f={self.filters},k={self.kernel}]"
        if self.kind in (LayerKind.LSTM, LayerKind.BILSTM):
            return f"{self.kind.value}[{self.hidden}]"
        return "flatten"


def dense(units: int, activation: str = "leaky_relu") -> LayerSpec:
    return LayerSpec(LayerKind.DENSE, units=units, activation=activation)


def conv1d(filters: int, kernel: int, stride: int = 1, padding: int = 0,
           dilation: int = 1, activation: str = "leaky_relu") -> LayerSpec:
    return LayerSpec(LayerKind.CONV1D, filters=filters, kernel=kernel,
                     stride=stride, padding=padding, dilation=dilation,
                     activation=activation)


def lstm(hidden: int) -> LayerSpec:
    return LayerSpec(LayerKind.LSTM, hidden=hidden)


def bilstm(hidden: int) -> LayerSpec:
    return LayerSpec(LayerKind.BILSTM, hidden=hidden)


def flatten() -> LayerSpec:
    return LayerSpec(LayerKind.FLATTEN)


@dataclass(frozen=True)
class TensorShape:
    """Shape ``[batch, seq, features]``; 2-D data uses seq=1, flattened width."""

    batch: int
    seq: int
    features: int

    def __post_init__(self):
        _check_positive("batch", self.batch)
        _check_positive("seq", self.seq)
        _check_positive("features", self.features)

    @property
    def width(self) -> int:
        """Flattened per-sample width."""
        return self.seq * self.features


@dataclass(frozen=True)
class ModelSpec:
    """Ordered layer stack over a ``memory x features`` input window.

    The stack lists every layer including the readout; ``n_out`` declares the
    expected flattened output width and is validated against the shape chain.
    """

    layers: tuple[LayerSpec, ...]
    memory: int
    features: int
    n_out: int

    def __init__(self, layers: Iterable[LayerSpec], memory: int,
                 features: int, n_out: int):
        object.__setattr__(self, "layers", tuple(layers))
        object.__setattr__(self, "memory", _check_positive("memory", memory))
        object.__setattr__(self, "features", _check_positive("features", features))
        object.__setattr__(self, "n_out", _check_positive("n_out", n_out))

    def input_shape(self, batch: int = 1) -> TensorShape:
        return TensorShape(batch, self.memory, self.features)


@dataclass(frozen=True)
class LayerReport:
    name: str
    kind: str
    rmps: int
    params: int
    big_o: str


@dataclass(frozen=True)
class RmpsReport:
    layers: tuple[LayerReport, ...]
    total_rmps: int
    total_params: int

    def to_dict(self) -> dict:
        return {
            "schema": "eqlab-rmps-v1",
            "layers": [vars(r) for r in self.layers],
            "total_rmps": self.total_rmps,
            "total_params": self.total_params,
        }


# ---------------------------------------------------------------------------
# single-layer counts


def conv_output_length(n_s: int, kernel: int, padding: int = 0,
                       dilation: int = 1, stride: int = 1,
                       layer_name: str = "conv1d") -> int:
    """Output sequence length of a 1-D convolution.

    ``floor((n_s + 2*padding - dilation*(kernel-1) - 1) / stride) + 1``
    """
    n_s = _check_positive("n_s", n_s)
    kernel = _check_positive("kernel", kernel)
    padding = _check_positive("padding", padding, minimum=0)
    dilation = _check_positive("dilation", dilation)
    stride = _check_positive("stride", stride)
    effective = dilation * (kernel - 1) + 1
    if effective > n_s + 2 * padding:
        raise ConfigError(
            f"{layer_name}: effective kernel {effective} exceeds padded input "
            f"length {n_s + 2 * padding}"
        )
    return (n_s + 2 * padding - dilation * (kernel - 1) - 1) // stride + 1


def rmps_dense(n_i: int, n1: int, n_o: int) -> int:
    """Multiplications of input->hidden->output: ``n_i*n1 + n1*n_o``."""
    n_i = _check_positive("n_i", n_i)
    n1 = _check_positive("n1", n1)
    n_o = _check_positive("n_o", n_o)
    return n_i * n1 + n1 * n_o


def rmps_conv1d(kernel: int, n_i: int, n_o: int, n_s_out: int) -> int:
    """Multiplications of a 1-D convolution: ``k*n_i*n_o*n_s'``."""
    kernel = _check_positive("kernel", kernel)
    n_i = _check_positive("n_i", n_i)
    n_o = _check_positive("n_o", n_o)
    n_s_out = _check_positive("n_s_out", n_s_out)
    return kernel * n_i * n_o * n_s_out


def rmps_lstm(n_s: int, n_i: int, n_h: int, n_o: int) -> int:
    """Standalone recurrent layer with per-step readout.

    ``n_s*n_h*(4*n_i + 4*n_h + 3 + n_o)``: four input and four recurrent
    products per gate block, three elementwise state products, plus the
    per-step projection to ``n_o`` outputs.
    """
    n_s = _check_positive("n_s", n_s)
    n_i = _check_positive("n_i", n_i)
    n_h = _check_positive("n_h", n_h)
    n_o = _check_positive("n_o", n_o)
    return n_s * n_h * (4 * n_i + 4 * n_h + 3 + n_o)


def rmps_bilstm(n_s: int, n_i: int, n_h: int, n_o: int) -> int:
    """Bidirectional recurrent layer: two independent passes, so 2x lstm."""
    return 2 * rmps_lstm(n_s, n_i, n_h, n_o)


def big_o(layer: LayerSpec) -> str:
    """Asymptotic tag; a pure function of the layer kind."""
    return BIG_O_TAGS[layer.kind]


# ---------------------------------------------------------------------------
# stack composition


def _layer_out_shape(shape: TensorShape, layer: LayerSpec, name: str) -> TensorShape:
    if layer.kind == LayerKind.DENSE:
        # dense consumes the flattened width of whatever precedes it
        return TensorShape(shape.batch, 1, layer.units)
    if layer.kind == LayerKind.CONV1D:
        n_out = conv_output_length(shape.seq, layer.kernel, layer.padding,
                                   layer.dilation, layer.stride, layer_name=name)
        return TensorShape(shape.batch, n_out, layer.filters)
    if layer.kind == LayerKind.LSTM:
        return TensorShape(shape.batch, shape.seq, layer.hidden)
    if layer.kind == LayerKind.BILSTM:
        return TensorShape(shape.batch, shape.seq, 2 * layer.hidden)
    return TensorShape(shape.batch, 1, shape.width)  # flatten


def _layer_rmps(shape: TensorShape, layer: LayerSpec) -> int:
    """Per-symbol multiplications charged to this layer as the consumer."""
    if layer.kind == LayerKind.DENSE:
        return shape.width * layer.units
    if layer.kind == LayerKind.CONV1D:
        n_out = conv_output_length(shape.seq, layer.kernel, layer.padding,
                                   layer.dilation, layer.stride)
        return layer.kernel * shape.features * layer.filters * n_out
    if layer.kind == LayerKind.LSTM:
        return shape.seq * layer.hidden * (4 * shape.features + 4 * layer.hidden + 3)
    if layer.kind == LayerKind.BILSTM:
        return 2 * shape.seq * layer.hidden * (4 * shape.features + 4 * layer.hidden + 3)
    return 0  # flatten


def _layer_params(shape: TensorShape, layer: LayerSpec) -> int:
    if layer.kind == LayerKind.DENSE:
        return shape.width * layer.units + layer.units
    if layer.kind == LayerKind.CONV1D:
        return layer.kernel * shape.features * layer.filters + layer.filters
    if layer.kind == LayerKind.LSTM:
        return 4 * (shape.features * layer.hidden + layer.hidden ** 2 + layer.hidden)
    if layer.kind == LayerKind.BILSTM:
        return 2 * 4 * (shape.features * layer.hidden + layer.hidden ** 2 + layer.hidden)
    return 0


def trace_shapes(model: ModelSpec, batch: int = 1) -> list[TensorShape]:
    """Shapes before/after each layer; validates chaining and output width."""
    shapes = [model.input_shape(batch)]
    for i, layer in enumerate(model.layers):
        name = f"layer {i} ({layer.label()})"
        shapes.append(_layer_out_shape(shapes[-1], layer, name))
    if shapes[-1].width != model.n_out:
        raise ConfigError(
            f"model output shape [seq={shapes[-1].seq}, features="
            f"{shapes[-1].features}] has width {shapes[-1].width}, "
            f"declared output width is {model.n_out}"
        )
    return shapes


def rmps_model(model: ModelSpec) -> RmpsReport:
    """Per-layer and total multiplications for one recovered symbol."""
    shapes = trace_shapes(model)
    rows = []
    for layer, shape in zip(model.layers, shapes[:-1]):
        rows.append(LayerReport(
            name=layer.label(),
            kind=layer.kind.value,
            rmps=_layer_rmps(shape, layer),
            params=_layer_params(shape, layer),
            big_o=big_o(layer),
        ))
    total = sum(r.rmps for r in rows)
    params = sum(r.params for r in rows)
    return RmpsReport(layers=tuple(rows), total_rmps=total, total_params=params)


def param_count(model: ModelSpec) -> int:
    """Exact trainable weight + bias count of the stack."""
    return rmps_model(model).total_params


# ---------------------------------------------------------------------------
# JSON config format
#
# {"input": {"memory": M, "features": n_i}, "output": n_o,
#  "layers": [{"kind": "dense", "units": 100},
#             {"kind": "conv1d", "filters": 8, "kernel": 3, "stride": 1,
#              "padding": 1, "dilation": 1},
#             {"kind": "lstm", "hidden": 16},
#             {"kind": "bilstm", "hidden": 16},
#             {"kind": "flatten"}]}

_LAYER_FIELDS = {
    "dense": {"units"},
    "conv1d": {"filters", "kernel", "stride", "padding", "dilation"},
    "lstm": {"hidden"},
    "bilstm": {"hidden"},
    "flatten": set(),
}


def _layer_from_dict(i: int, obj: dict) -> LayerSpec:
    if not isinstance(obj, dict):
        raise ConfigError(f"layers[{i}]: expected an object, got {type(obj).__name__}")
    kind = obj.get("kind")
    if kind not in _LAYER_FIELDS:
        raise ConfigError(
            f"layers[{i}]: unknown kind {kind!r} "
            f"(expected one of {sorted(_LAYER_FIELDS)})"
        )
    allowed = _LAYER_FIELDS[kind] | {"kind", "activation"}
    extra = set(obj) - allowed
    if extra:
        raise ConfigError(f"layers[{i}] ({kind}): unexpected fields {sorted(extra)}")
    try:
        if kind == "dense":
            return dense(obj["units"], activation=obj.get("activation", "leaky_relu"))
        if kind == "conv1d":
            return conv1d(obj["filters"], obj["kernel"],
                          stride=obj.get("stride", 1),
                          padding=obj.get("padding", 0),
                          dilation=obj.get("dilation", 1),
                          activation=obj.get("activation", "leaky_relu"))
        if kind == "lstm":
            return lstm(obj["hidden"])
        if kind == "bilstm":
            return bilstm(obj["hidden"])
        return flatten()
    except KeyError as e:
        raise ConfigError(f"layers[{i}] ({kind}): missing field {e.args[0]!r}") from None
    except ConfigError as e:
        raise ConfigError(f"layers[{i}]: {e}") from None


def model_from_json(text: str) -> ModelSpec:
    """Parse a model config; errors carry layer indices or JSON line numbers."""
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError(f"invalid JSON at line {e.lineno}, column {e.colno}: {e.msg}") from None
    if not isinstance(obj, dict):
        raise ConfigError("model config must be a JSON object")
    for key in ("input", "output", "layers"):
        if key not in obj:
            raise ConfigError(f"model config missing {key!r}")
    inp = obj["input"]
    if not isinstance(inp, dict) or "memory" not in inp or "features" not in inp:
        raise ConfigError('"input" must be {"memory": M, "features": n_i}')
    layers = [_layer_from_dict(i, l) for i, l in enumerate(obj["layers"])]
    model = ModelSpec(layers, memory=inp["memory"], features=inp["features"],
                      n_out=obj["output"])
    trace_shapes(model)  # surface chain errors at parse time
    return model


def model_to_json(model: ModelSpec) -> str:
    layers = []
    for layer in model.layers:
        d: dict = {"kind": layer.kind.value}
        if layer.kind == LayerKind.DENSE:
            d["units"] = layer.units
        elif layer.kind == LayerKind.CONV1D:
            d.update(filters=layer.filters, kernel=layer.kernel,
                     stride=layer.stride, padding=layer.padding,
                     dilation=layer.dilation)
        elif layer.kind in (LayerKind.LSTM, LayerKind.BILSTM):
            d["hidden"] = layer.hidden
        if layer.kind not in (LayerKind.LSTM, LayerKind.BILSTM, LayerKind.FLATTEN):
            d["activation"] = layer.activation
        layers.append(d)
    return json.dumps({
        "input": {"memory": model.memory, "features": model.features},
        "output": model.n_out,
        "layers": layers,
    }, indent=2)


def report_table(report: RmpsReport) -> str:
    """One line per layer, plus totals."""
    rows = [(r.name, r.kind, str(r.rmps), str(r.params), r.big_o)
            for r in report.layers]
    rows.append(("total", "", str(report.total_rmps), str(report.total_params), ""))
    header = ("layer", "kind", "rmps", "params", "big-O")
    widths = [max(len(header[j]), *(len(r[j]) for r in rows)) for j in range(5)]
    lines = ["  ".join(h.ljust(w) for h, w in zip(header, widths))]
    for r in rows:
        lines.append("  ".join(c.ljust(w) for c, w in zip(r, widths)))
    return "\n".join(lines)
