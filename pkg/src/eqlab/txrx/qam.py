"""Gray-mapped 16-QAM at unit average symbol energy."""

from __future__ import annotations

import numpy as np

# per-axis Gray code: bit pair -> level, neighbors differ in one bit
_GRAY_LEVELS = {(0, 0): -3, (0, 1): -1, (1, 1): 1, (1, 0): 3}
_SCALE = 1.0 / np.sqrt(10.0)

# constellation indexed by the 4-bit word (b0 b1 b2 b3): I from b0 b1, Q from b2 b3
CONSTELLATION = np.empty(16, dtype=np.complex128)
for _b0 in (0, 1):
    for _b1 in (0, 1):
        for _b2 in (0, 1):
            for _b3 in (0, 1):
                _word = (_b0 << 3) | (_b1 << 2) | (_b2 << 1) | _b3
                CONSTELLATION[_word] = _SCALE * (
                    _GRAY_LEVELS[(_b0, _b1)] + 1j * _GRAY_LEVELS[(_b2, _b3)])

BITS_PER_SYMBOL = 4


def qam16_map(bits: np.ndarray) -> np.ndarray:
    """Map a bit array (values 0/1, length divisible by 4) to symbols."""
    bits = np.asarray(bits, dtype=np.uint8)
    if bits.size % BITS_PER_SYMBOL != 0:
        raise ValueError(
            f"bit count must be divisible by {BITS_PER_SYMBOL}, got {bits.size}")
    words = bits.reshape(-1, 4)
    idx = (words[:, 0].astype(np.int64) << 3) | (words[:, 1] << 2) \
        | (words[:, 2] << 1) | words[:, 3]
    return CONSTELLATION[idx]


def qam16_indices(bits: np.ndarray) -> np.ndarray:
    """4-bit word per symbol, same packing as :func:`qam16_map`."""
    bits = np.asarray(bits, dtype=np.uint8)
    if bits.size % BITS_PER_SYMBOL != 0:
        raise ValueError(
            f"bit count must be divisible by {BITS_PER_SYMBOL}, got {bits.size}")
    words = bits.reshape(-1, 4)
    return ((words[:, 0].astype(np.uint8) << 3) | (words[:, 1] << 2)
            | (words[:, 2] << 1) | words[:, 3])


def qam16_demap_hard(symbols: np.ndarray) -> np.ndarray:
    """Nearest-neighbor decisions back to bits; inverse of map when noise-free."""
    idx = qam16_decide(symbols)
    return _index_bits(idx)


def qam16_decide(symbols: np.ndarray) -> np.ndarray:
    """Nearest constellation index per symbol (independent per axis)."""
    symbols = np.asarray(symbols)
    d = np.abs(symbols[:, None] - CONSTELLATION[None, :])
    return np.argmin(d, axis=1).astype(np.uint8)


def symbols_from_indices(idx: np.ndarray) -> np.ndarray:
    return CONSTELLATION[np.asarray(idx, dtype=np.int64)]


def _index_bits(idx: np.ndarray) -> np.ndarray:
    idx = np.asarray(idx, dtype=np.uint8)
    out = np.empty((idx.size, 4), dtype=np.uint8)
    out[:, 0] = (idx >> 3) & 1
    out[:, 1] = (idx >> 2) & 1
    out[:, 2] = (idx >> 1) & 1
    out[:, 3] = idx & 1
    return out.reshape(-1)


def index_bits(idx: np.ndarray) -> np.ndarray:
    """Unpack constellation indices back into the bit stream."""
    return _index_bits(idx)
