"""Train/test dataset generation and its binary file format.

Container layout (all little-endian)::

    b"EQDS" | uint32 header length | header JSON (utf-8) | payload

The header records the link config, seeds, symbol counts, guard trim,
receiver normalization constants and the measured train/test
cross-correlation.  The payload holds, for the train split then the test
split: the post-DSP received samples as float64 interleaved (re, im), X
polarization stream then Y, followed by the ground-truth constellation
indices as uint8, X then Y.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass

import numpy as np
from numpy.fft import fft, ifft
from scipy.fft import next_fast_len

from ..errors import DatasetError
from . import qam
from .fiber import LinkConfig
from .frames import SignalFrame, propagate, receive, transmit

MAGIC = b"EQDS"
FORMAT_NAME = "eqlab-dataset"
FORMAT_VERSION = 1
DEFAULT_GUARD = 64
XCORR_LIMIT = 0.02


@dataclass
class Split:
    """One post-DSP section at one sample per symbol, edge-trimmed."""

    rx_x: np.ndarray
    rx_y: np.ndarray
    idx_x: np.ndarray     # uint8 ground-truth constellation indices
    idx_y: np.ndarray
    seed: int
    norm_x: float
    norm_y: float

    @property
    def n_symbols(self) -> int:
        return len(self.rx_x)

    @property
    def tx_x(self) -> np.ndarray:
        return qam.symbols_from_indices(self.idx_x)

    @property
    def tx_y(self) -> np.ndarray:
        return qam.symbols_from_indices(self.idx_y)

    def truth_bits(self) -> tuple[np.ndarray, np.ndarray]:
        return qam.index_bits(self.idx_x), qam.index_bits(self.idx_y)


@dataclass
class Dataset:
    link: LinkConfig
    train: Split
    test: Split | None
    guard: int
    xcorr_max: float
    manifest_hash: str = ""


def max_cross_correlation(a: np.ndarray, b: np.ndarray) -> float:
    """Max |normalized cross-correlation| over all lags (FFT, zero-padded)."""
    n = next_fast_len(len(a) + len(b))
    fa = fft(a, n)
    fb = fft(b, n)
    c = ifft(fa * np.conj(fb))
    denom = np.linalg.norm(a) * np.linalg.norm(b)
    return float(np.max(np.abs(c)) / denom)


def _make_split(link: LinkConfig, n_symbols: int, seed: int, guard: int) -> Split:
    tx = transmit(link, n_symbols + 2 * guard, seed)
    rx = receive(propagate(tx, link), link)
    sl = slice(guard, guard + n_symbols)
    return Split(
        rx_x=rx.x[sl].copy(), rx_y=rx.y[sl].copy(),
        idx_x=qam.qam16_decide(rx.symbols_x[sl]),
        idx_y=qam.qam16_decide(rx.symbols_y[sl]),
        seed=seed, norm_x=rx.norm_x, norm_y=rx.norm_y)


def make_dataset(link: LinkConfig, n_train: int, n_test: int,
                 train_seed: int, test_seed: int,
                 guard: int = DEFAULT_GUARD,
                 xcorr_limit: float | None = XCORR_LIMIT) -> Dataset:
    """Simulate independent train/test splits through the full chain.

    Seeds must differ; the measured max cross-correlation between the two
    transmitted symbol streams must stay below ``xcorr_limit`` (pass None to
    record it without enforcing, e.g. for very short smoke-test splits where
    the estimator's own noise floor exceeds the limit).
    """
    if n_train < 1:
        raise DatasetError(f"n_train must be >= 1, got {n_train}")
    if n_test < 0:
        raise DatasetError(f"n_test must be >= 0, got {n_test}")
    if n_test > 0 and train_seed == test_seed:
        raise DatasetError(
            f"train and test seeds must differ, both are {train_seed}")
    train = _make_split(link, n_train, train_seed, guard)
    test = _make_split(link, n_test, test_seed, guard) if n_test > 0 else None
    xc = 0.0
    if test is not None:
        xc = max(
            max_cross_correlation(train.tx_x, test.tx_x),
            max_cross_correlation(train.tx_y, test.tx_y))
        if xcorr_limit is not None and xc >= xcorr_limit:
            raise DatasetError(
                f"train/test cross-correlation {xc:.4f} >= {xcorr_limit}")
    return Dataset(link=link, train=train, test=test, guard=guard, xcorr_max=xc)


# -- file I/O ----------------------------------------------------------------


def _split_payload(split: Split) -> bytes:
    parts = []
    for arr in (split.rx_x, split.rx_y):
        inter = np.empty(2 * len(arr))
        inter[0::2] = arr.real
        inter[1::2] = arr.imag
        parts.append(inter.astype("<f8").tobytes())
    parts.append(split.idx_x.astype(np.uint8).tobytes())
    parts.append(split.idx_y.astype(np.uint8).tobytes())
    return b"".join(parts)


def save_dataset(ds: Dataset, path: str):
    header = {
        "format": FORMAT_NAME,
        "version": FORMAT_VERSION,
        "link": ds.link.to_dict(),
        "config_hash": ds.link.config_hash(),
        "manifest_hash": ds.manifest_hash,
        "seeds": {"train": ds.train.seed,
                  "test": ds.test.seed if ds.test else None},
        "counts": {"train": ds.train.n_symbols,
                   "test": ds.test.n_symbols if ds.test else 0},
        "guard_symbols": ds.guard,
        "normalization": {
            "train": {"x": ds.train.norm_x, "y": ds.train.norm_y},
            "test": ({"x": ds.test.norm_x, "y": ds.test.norm_y}
                     if ds.test else None),
        },
        "xcorr_max": ds.xcorr_max,
        "window_alignment": "center",
    }
    blob = json.dumps(header, sort_keys=True).encode()
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<I", len(blob)))
        f.write(blob)
        f.write(_split_payload(ds.train))
        if ds.test is not None:
            f.write(_split_payload(ds.test))


def _read_split(buf: memoryview, pos: int, n: int, seed: int,
                norm: dict) -> tuple[Split, int]:
    def take(count, dtype, itemsize):
        nonlocal pos
        arr = np.frombuffer(buf[pos:pos + count * itemsize], dtype=dtype)
        pos += count * itemsize
        return arr

    rx = []
    for _ in range(2):
        inter = take(2 * n, "<f8", 8)
        rx.append(inter[0::2] + 1j * inter[1::2])
    idx_x = take(n, np.uint8, 1).copy()
    idx_y = take(n, np.uint8, 1).copy()
    return Split(rx_x=rx[0], rx_y=rx[1], idx_x=idx_x, idx_y=idx_y,
                 seed=seed, norm_x=norm["x"], norm_y=norm["y"]), pos


def load_dataset(path: str) -> Dataset:
    with open(path, "rb") as f:
        raw = f.read()
    if raw[:4] != MAGIC:
        raise DatasetError(f"{path}: not a dataset file (bad magic)")
    (hlen,) = struct.unpack("<I", raw[4:8])
    header = json.loads(raw[8:8 + hlen].decode())
    if header.get("format") != FORMAT_NAME:
        raise DatasetError(f"{path}: unexpected format {header.get('format')!r}")
    if header.get("version", 0) > FORMAT_VERSION:
        raise DatasetError(
            f"{path}: file version {header['version']} is newer than "
            f"supported {FORMAT_VERSION}")
    link = LinkConfig.from_dict(header["link"])
    buf = memoryview(raw)
    pos = 8 + hlen
    train, pos = _read_split(buf, pos, header["counts"]["train"],
                             header["seeds"]["train"],
                             header["normalization"]["train"])
    test = None
    if header["counts"]["test"] > 0:
        test, pos = _read_split(buf, pos, header["counts"]["test"],
                                header["seeds"]["test"],
                                header["normalization"]["test"])
    return Dataset(link=link, train=train, test=test,
                   guard=header["guard_symbols"],
                   xcorr_max=header["xcorr_max"],
                   manifest_hash=header.get("manifest_hash", ""))
