"""Pseudo-random bit sequences from Fibonacci LFSRs."""

from __future__ import annotations

import numpy as np

# x^32 + x^22 + x^2 + x + 1
PRBS32_TAPS = (32, 22, 2, 1)
# x^7 + x^6 + 1 (used for exhaustive period checks on the same code path)
PRBS7_TAPS = (7, 6)


def lfsr_sequence(order: int, taps: tuple[int, ...], seed: int,
                  n_bits: int) -> np.ndarray:
    """Fibonacci LFSR bitstream; initial fill is all-ones XOR seed.

    Taps are polynomial exponents: tap e reads register bit ``order - e``
    (so the x^order term reads the LSB), the XOR feeds the MSB after a right
    shift, and the output is the LSB before each shift.  Seeds that leave
    the register all-zero are rejected (the LFSR would be stuck).
    """
    if n_bits < 0:
        raise ValueError(f"n_bits must be >= 0, got {n_bits}")
    if seed == 0:
        raise ValueError("seed must be nonzero")
    mask = (1 << order) - 1
    state = mask ^ (seed & mask)
    if state == 0:
        raise ValueError(f"seed {seed:#x} yields the degenerate all-zero register")
    out = np.empty(n_bits, dtype=np.uint8)
    for n in range(n_bits):
        out[n] = state & 1
        fb = 0
        for t in taps:
            fb ^= (state >> (order - t)) & 1
        state = (state >> 1) | (fb << (order - 1))
    return out


def prbs32(seed: int, n_bits: int) -> np.ndarray:
    """Order-32 PRBS bitstream, deterministic per seed."""
    return lfsr_sequence(32, PRBS32_TAPS, seed, n_bits)
