"""Sliding-window equalization of post-DSP symbol streams.

One model per polarization target: both consume the same 4-feature windows
(Re/Im of X and Y) and regress the Re/Im of the center symbol of their own
polarization.  Edge symbols without a full window are excluded everywhere,
so predictions, decisions and baselines always score the same index range.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass

import numpy as np

from ..errors import ConfigError
from ..txrx import metrics, qam
from .families import ArchFamily, FAMILY_HYPERS, family_model
from .model import Network
from .train import TrainConfig, TrainResult, train

MODEL_MAGIC = b"EQLM"
MODEL_FORMAT = "eqlab-equalizer"
MODEL_VERSION = 1


def stream_features(rx_x: np.ndarray, rx_y: np.ndarray) -> np.ndarray:
    """[N, 4] feature rows: Re/Im of X, Re/Im of Y."""
    return np.stack([rx_x.real, rx_x.imag, rx_y.real, rx_y.imag], axis=1)


def sliding_windows(rx_x: np.ndarray, rx_y: np.ndarray, memory: int) -> np.ndarray:
    """[N-M+1, M, 4] stride-1 windows (a view, no copy)."""
    n = len(rx_x)
    if memory % 2 == 0 or memory < 1:
        raise ConfigError(f"memory must be odd and >= 1, got {memory}")
    if n < memory:
        raise ConfigError(f"stream has {n} symbols, window needs {memory}")
    feats = stream_features(rx_x, rx_y)
    return np.lib.stride_tricks.sliding_window_view(
        feats, (memory, 4)).reshape(n - memory + 1, memory, 4)


def center_slice(n: int, memory: int) -> slice:
    """Symbol indices that own a full window."""
    h = (memory - 1) // 2
    return slice(h, n - h)


def center_targets(tx: np.ndarray, memory: int) -> np.ndarray:
    """[N-M+1, 2] Re/Im regression targets for the window centers."""
    c = tx[center_slice(len(tx), memory)]
    return np.stack([c.real, c.imag], axis=1)


@dataclass
class Equalizer:
    """A trained (or fresh) network plus everything needed to apply it."""

    net: Network
    family: ArchFamily
    hyper: dict
    memory: int
    target_pol: str   # "x" or "y"
    seed: int

    def predict_symbols(self, rx_x: np.ndarray, rx_y: np.ndarray,
                        chunk: int = 8192) -> np.ndarray:
        """Complex center-symbol estimates for every full window."""
        wins = sliding_windows(rx_x, rx_y, self.memory)
        out = np.empty(len(wins), dtype=np.complex128)
        for start in range(0, len(wins), chunk):
            block = np.ascontiguousarray(wins[start:start + chunk])
            pred = self.net.forward(block)
            out[start:start + chunk] = pred[:, 0] + 1j * pred[:, 1]
        return out


def make_equalizer(family: ArchFamily, memory: int, hyper: dict,
                   target_pol: str, seed: int) -> Equalizer:
    if target_pol not in ("x", "y"):
        raise ConfigError(f"target_pol must be 'x' or 'y', got {target_pol!r}")
    spec = family_model(family, memory, hyper)
    return Equalizer(net=Network(spec, seed=seed), family=family,
                     hyper=dict(hyper), memory=memory,
                     target_pol=target_pol, seed=seed)


@dataclass
class EqualizerPair:
    """Twin models covering both polarization targets."""

    eq_x: Equalizer
    eq_y: Equalizer

    @property
    def memory(self) -> int:
        return self.eq_x.memory

    @property
    def family(self) -> ArchFamily:
        return self.eq_x.family

    @property
    def hyper(self) -> dict:
        return self.eq_x.hyper


def train_pair(family: ArchFamily, memory: int, hyper: dict, split,
               cfg: TrainConfig, window_cap: int | None = None
               ) -> tuple[EqualizerPair, dict[str, TrainResult]]:
    """Train both polarization targets on the same windows of one split."""
    wins = sliding_windows(split.rx_x, split.rx_y, memory)
    n = len(wins)
    if window_cap is not None and n > window_cap:
        wins = wins[:window_cap]
    wins = np.ascontiguousarray(wins)
    curves = {}
    pair = []
    for pol, tx in (("x", split.tx_x), ("y", split.tx_y)):
        targets = center_targets(tx, memory)[:len(wins)]
        eq = make_equalizer(family, memory, hyper, pol,
                            seed=cfg.seed * 2 + (0 if pol == "x" else 1))
        sub_cfg = TrainConfig(
            learning_rate=cfg.learning_rate, batch_size=cfg.batch_size,
            epochs=cfg.epochs, beta1=cfg.beta1, beta2=cfg.beta2, eps=cfg.eps,
            patience=cfg.patience, seed=eq.seed)
        curves[pol] = train(eq.net, wins, targets, sub_cfg)
        pair.append(eq)
    return EqualizerPair(eq_x=pair[0], eq_y=pair[1]), curves


def evaluate_pair(pair: EqualizerPair, split,
                  baseline_q_db: float | None = None) -> metrics.EvalResult:
    """Hard-decision BER/Q of the pair over one split (both polarizations)."""
    m = pair.memory
    sl = center_slice(split.n_symbols, m)
    pred_x = pair.eq_x.predict_symbols(split.rx_x, split.rx_y)
    pred_y = pair.eq_y.predict_symbols(split.rx_x, split.rx_y)
    dec = np.concatenate([qam.qam16_demap_hard(pred_x),
                          qam.qam16_demap_hard(pred_y)])
    tb_x, tb_y = split.truth_bits()
    truth = np.concatenate([
        tb_x.reshape(-1, 4)[sl].reshape(-1),
        tb_y.reshape(-1, 4)[sl].reshape(-1)])
    return metrics.ber_count(dec, truth, baseline_q_db=baseline_q_db)


def unequalized_result(split, memory: int) -> metrics.EvalResult:
    """Baseline decisions straight off the post-DSP stream, same index range."""
    sl = center_slice(split.n_symbols, memory)
    dec = np.concatenate([qam.qam16_demap_hard(split.rx_x[sl]),
                          qam.qam16_demap_hard(split.rx_y[sl])])
    tb_x, tb_y = split.truth_bits()
    truth = np.concatenate([
        tb_x.reshape(-1, 4)[sl].reshape(-1),
        tb_y.reshape(-1, 4)[sl].reshape(-1)])
    return metrics.ber_count(dec, truth)


# -- serialization -----------------------------------------------------------
#
# b"EQLM" | uint32 header length | header JSON | float64 LE parameter blob
# (eq_x parameters then eq_y, each in network layer order: dense/conv W then
# b, lstm W U b, bilstm forward then backward direction).


def save_pair(pair: EqualizerPair, path: str, manifest_hash: str = ""):
    header = {
        "format": MODEL_FORMAT,
        "version": MODEL_VERSION,
        "family": pair.family.value,
        "hyper": pair.hyper,
        "memory": pair.memory,
        "targets": ["x", "y"],
        "seeds": {"x": pair.eq_x.seed, "y": pair.eq_y.seed},
        "param_counts": {"x": pair.eq_x.net.n_params(),
                         "y": pair.eq_y.net.n_params()},
        "manifest_hash": manifest_hash,
    }
    blob = json.dumps(header, sort_keys=True).encode()
    with open(path, "wb") as f:
        f.write(MODEL_MAGIC)
        f.write(struct.pack("<I", len(blob)))
        f.write(blob)
        f.write(pair.eq_x.net.get_flat().astype("<f8").tobytes())
        f.write(pair.eq_y.net.get_flat().astype("<f8").tobytes())


def load_pair(path: str) -> EqualizerPair:
    with open(path, "rb") as f:
        raw = f.read()
    if raw[:4] != MODEL_MAGIC:
        raise ConfigError(f"{path}: not an equalizer file (bad magic)")
    (hlen,) = struct.unpack("<I", raw[4:8])
    header = json.loads(raw[8:8 + hlen].decode())
    if header.get("format") != MODEL_FORMAT:
        raise ConfigError(f"{path}: unexpected format {header.get('format')!r}")
    if header.get("version", 0) > MODEL_VERSION:
        raise ConfigError(
            f"{path}: file version {header['version']} is newer than "
            f"supported {MODEL_VERSION}")
    family = ArchFamily(header["family"])
    hyper = {k: int(v) for k, v in header["hyper"].items()}
    memory = header["memory"]
    pos = 8 + hlen
    pair = []
    for pol in ("x", "y"):
        eq = make_equalizer(family, memory, hyper, pol,
                            seed=header["seeds"][pol])
        n = eq.net.n_params()
        if n != header["param_counts"][pol]:
            raise ConfigError(
                f"{path}: parameter count mismatch for {pol} "
                f"({n} vs {header['param_counts'][pol]})")
        flat = np.frombuffer(raw[pos:pos + 8 * n], dtype="<f8")
        eq.net.set_flat(flat.astype(np.float64))
        pos += 8 * n
        pair.append(eq)
    return EqualizerPair(eq_x=pair[0], eq_y=pair[1])
