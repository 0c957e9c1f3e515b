"""Signal frames and the transmit / receive chains around the fiber."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import fiber as fb
from . import qam, rrc
from .prbs import prbs32


@dataclass
class SignalFrame:
    """Sampled dual-polarization waveform with aligned ground truth.

    Used at the simulation rate (sps = samples_per_symbol_sim) and, after the
    receiver DSP, at one sample per symbol.  ``symbols_x/y`` are the
    transmitted unit-energy constellation points; provenance is the frame
    seed plus the link config hash.
    """

    x: np.ndarray
    y: np.ndarray
    sps: int
    symbol_rate_hz: float
    symbols_x: np.ndarray
    symbols_y: np.ndarray
    seed: int
    config_hash: str
    norm_x: float = 1.0   # amplitude normalization applied by the receiver
    norm_y: float = 1.0

    def __post_init__(self):
        if len(self.x) != len(self.y):
            raise ValueError("polarization streams differ in length")
        if len(self.x) != len(self.symbols_x) * self.sps:
            raise ValueError(
                f"sample count {len(self.x)} != symbol count "
                f"{len(self.symbols_x)} x sps {self.sps}")

    @property
    def n_symbols(self) -> int:
        return len(self.symbols_x)

    @property
    def sample_rate_hz(self) -> float:
        return self.symbol_rate_hz * self.sps

    def tobytes(self) -> bytes:
        """Canonical little-endian byte image (determinism checks)."""
        parts = [
            np.int64(self.sps).tobytes(),
            np.float64(self.symbol_rate_hz).tobytes(),
            np.int64(self.seed).tobytes(),
            self.config_hash.encode(),
        ]
        for arr in (self.x, self.y, self.symbols_x, self.symbols_y):
            parts.append(np.ascontiguousarray(arr, dtype="<c16").tobytes())
        return b"".join(parts)


def frame_bits(frame: SignalFrame) -> tuple[np.ndarray, np.ndarray]:
    """Ground-truth bit streams (X pol, Y pol)."""
    ix = qam.qam16_decide(frame.symbols_x)
    iy = qam.qam16_decide(frame.symbols_y)
    return qam.index_bits(ix), qam.index_bits(iy)


def _frame_prbs_seed(rng: np.random.Generator) -> int:
    # avoid 0 (rejected) and 2^32-1 (all-zero register)
    return int(rng.integers(1, 0xFFFFFFFF))


def transmit(link: fb.LinkConfig, n_symbols: int, seed: int) -> SignalFrame:
    """PRBS -> 16-QAM -> RRC-shaped dual-pol waveform at launch power."""
    if n_symbols < 1:
        raise ValueError(f"n_symbols must be >= 1, got {n_symbols}")
    rng = np.random.default_rng(np.random.SeedSequence([seed, 0xB175]))
    bits = prbs32(_frame_prbs_seed(rng), 2 * 4 * n_symbols)
    sym_x = qam.qam16_map(bits[:4 * n_symbols])
    sym_y = qam.qam16_map(bits[4 * n_symbols:])
    sps = link.samples_per_symbol_sim
    wx = rrc.rrc_shape(sym_x, link.rrc_rolloff, sps)
    wy = rrc.rrc_shape(sym_y, link.rrc_rolloff, sps)
    # scale so mean total power (both polarizations) equals launch power
    p = np.mean(np.abs(wx) ** 2 + np.abs(wy) ** 2)
    scale = np.sqrt(link.launch_power_w / p)
    return SignalFrame(x=wx * scale, y=wy * scale, sps=sps,
                       symbol_rate_hz=link.symbol_rate_hz,
                       symbols_x=sym_x, symbols_y=sym_y,
                       seed=seed, config_hash=link.config_hash())


def propagate(frame: SignalFrame, link: fb.LinkConfig) -> SignalFrame:
    """Run the frame through all spans; ASE seeded from the frame seed."""
    rng = np.random.default_rng(np.random.SeedSequence([frame.seed, 0xA5E]))
    x, y = fb.propagate_waveform(frame.x, frame.y, link, noise_rng=rng)
    return SignalFrame(x=x, y=y, sps=frame.sps,
                       symbol_rate_hz=frame.symbol_rate_hz,
                       symbols_x=frame.symbols_x, symbols_y=frame.symbols_y,
                       seed=frame.seed, config_hash=frame.config_hash)


DSP_SPS = 2  # receiver chain runs at two samples per symbol


def _normalize(sym: np.ndarray) -> tuple[np.ndarray, float]:
    scale = float(np.sqrt(np.mean(np.abs(sym) ** 2)))
    return sym / scale, scale


def receive(frame: SignalFrame, link: fb.LinkConfig, equalizer: str = "cdc",
            dbp_steps_per_span: int = 3) -> SignalFrame:
    """Receiver DSP down to one normalized sample per symbol.

    ``equalizer`` selects dispersion handling: "cdc" is the frequency-domain
    all-pass (the unequalized baseline for NN gains), "dbp" the reverse
    split-step run at the incoming sample rate, "none" skips both
    (back-to-back use).  Then matched RRC filtering, symbol-rate decimation
    and per-polarization amplitude normalization.
    """
    x, y = frame.x, frame.y
    fs = frame.sample_rate_hz
    if equalizer == "dbp":
        x, y = fb.dbp_compensate(x, y, link, dbp_steps_per_span,
                                 sample_rate_hz=fs)
    down = frame.sps // DSP_SPS
    if frame.sps % DSP_SPS != 0:
        raise ValueError(f"sps {frame.sps} not divisible by {DSP_SPS}")
    if down > 1:
        x = fb.spectral_decimate(x, down)
        y = fb.spectral_decimate(y, down)
        fs = fs / down
    if equalizer == "cdc":
        d_total = link.fiber.total_dispersion_ps_nm
        x = fb.cd_compensate(x, d_total, fs, link.center_wavelength_nm)
        y = fb.cd_compensate(y, d_total, fs, link.center_wavelength_nm)
    elif equalizer not in ("dbp", "none"):
        raise ValueError(f"unknown equalizer {equalizer!r}")
    x = rrc.rrc_matched(x, link.rrc_rolloff, DSP_SPS)
    y = rrc.rrc_matched(y, link.rrc_rolloff, DSP_SPS)
    sym_x, sx = _normalize(x[::DSP_SPS])
    sym_y, sy = _normalize(y[::DSP_SPS])
    return SignalFrame(x=sym_x, y=sym_y, sps=1,
                       symbol_rate_hz=frame.symbol_rate_hz,
                       symbols_x=frame.symbols_x, symbols_y=frame.symbols_y,
                       seed=frame.seed, config_hash=frame.config_hash,
                       norm_x=sx, norm_y=sy)


def dbp_equalize(frame: SignalFrame, link: fb.LinkConfig,
                 steps_per_span: int = 3) -> SignalFrame:
    """Reverse split-step on the received waveform, then the matched chain."""
    return receive(frame, link, equalizer="dbp",
                   dbp_steps_per_span=steps_per_span)


def decide_frame(rx: SignalFrame, guard: int = 0) -> "tuple":
    """Hard decisions vs truth over [guard, n-guard); returns (bits, truth)."""
    n = rx.n_symbols
    sl = slice(guard, n - guard if guard else n)
    dec_x = qam.qam16_demap_hard(rx.x[sl])
    dec_y = qam.qam16_demap_hard(rx.y[sl])
    tb_x, tb_y = frame_bits(rx)
    tb_x = tb_x.reshape(n, 4)[sl].reshape(-1)
    tb_y = tb_y.reshape(n, 4)[sl].reshape(-1)
    return (np.concatenate([dec_x, dec_y]), np.concatenate([tb_x, tb_y]))
