"""Root-raised-cosine pulse shaping and matched filtering."""

from __future__ import annotations

import numpy as np
from scipy.signal import fftconvolve


def rrc_taps(rolloff: float, sps: int, n_taps: int,
             normalize: bool = True) -> np.ndarray:
    """RRC impulse response sampled at ``sps`` samples per symbol.

    ``n_taps`` must be odd so the filter has a center tap.  With
    ``normalize`` the taps carry unit energy, making shape+matched a
    raised-cosine (Nyquist) cascade with unity center sample.
    """
    if not 0.0 <= rolloff <= 1.0:
        raise ValueError(f"rolloff must be in [0, 1], got {rolloff}")
    if n_taps % 2 == 0:
        raise ValueError(f"tap count must be odd, got {n_taps}")
    if sps < 2:
        raise ValueError(f"sps must be >= 2, got {sps}")
    t = (np.arange(n_taps) - (n_taps - 1) / 2) / sps  # in symbol periods
    h = np.empty_like(t)
    if rolloff == 0.0:
        h[:] = np.sinc(t)
    else:
        singular = np.isclose(np.abs(t), 1.0 / (4.0 * rolloff))
        with np.errstate(divide="ignore", invalid="ignore"):
            num = (np.sin(np.pi * t * (1.0 - rolloff))
                   + 4.0 * rolloff * t * np.cos(np.pi * t * (1.0 + rolloff)))
            den = np.pi * t * (1.0 - (4.0 * rolloff * t) ** 2)
            h = num / den
        h[t == 0.0] = 1.0 + rolloff * (4.0 / np.pi - 1.0)
        h[singular] = (rolloff / np.sqrt(2.0)) * (
            (1.0 + 2.0 / np.pi) * np.sin(np.pi / (4.0 * rolloff))
            + (1.0 - 2.0 / np.pi) * np.cos(np.pi / (4.0 * rolloff)))
    if normalize:
        h = h / np.sqrt(np.sum(h ** 2))
    return h


def default_taps(sps: int, span_symbols: int = 32) -> int:
    """Odd tap count spanning +-span_symbols symbol periods."""
    return 2 * span_symbols * sps + 1


def rrc_shape(symbols: np.ndarray, rolloff: float, sps: int,
              n_taps: int | None = None) -> np.ndarray:
    """Upsample by zero stuffing and filter; output length = n_symbols*sps."""
    if n_taps is None:
        n_taps = default_taps(sps)
    h = rrc_taps(rolloff, sps, n_taps)
    up = np.zeros(len(symbols) * sps, dtype=np.complex128)
    up[::sps] = symbols
    return fftconvolve(up, h, mode="same")


def rrc_matched(waveform: np.ndarray, rolloff: float, sps: int,
                n_taps: int | None = None) -> np.ndarray:
    """Matched counterpart of :func:`rrc_shape` (same real symmetric taps)."""
    if n_taps is None:
        n_taps = default_taps(sps)
    h = rrc_taps(rolloff, sps, n_taps)
    return fftconvolve(waveform, h, mode="same")
