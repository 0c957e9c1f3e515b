"""Dual-polarization fiber propagation and its DSP inverses.

Propagation solves the polarization-averaged (8/9-factor) nonlinear
Schrödinger model with a symmetric split-step scheme: linear
dispersion+attenuation half-steps in the frequency domain around a
nonlinear phase rotation in the time domain.  Each span ends in an EDFA
that restores the span loss exactly and injects circular Gaussian ASE with
per-polarization PSD rho = (G-1)*h*nu*n_sp, n_sp = NF_lin*G / (2*(G-1)).

Digital back-propagation reuses the same stepper with negated alpha,
beta2 and gamma, so a matched-step, noise-free reverse run inverts the
link to numerical precision.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, asdict

import numpy as np
from numpy.fft import fft, ifft, fftfreq

C_M_S = 299792458.0
PLANCK_J_S = 6.62607015e-34

MAX_MEAN_POWER_W = 1.0  # +30 dBm sanity limit


@dataclass(frozen=True)
class FiberParams:
    """Per-span fiber constants; span_count 0 means back-to-back."""

    alpha_db_km: float
    dispersion_ps_nm_km: float
    gamma_w_km: float
    span_length_km: float
    span_count: int

    def __post_init__(self):
        if self.alpha_db_km <= 0:
            raise ValueError(f"alpha must be > 0 dB/km, got {self.alpha_db_km}")
        if self.span_length_km <= 0:
            raise ValueError(f"span length must be > 0, got {self.span_length_km}")
        if self.span_count < 0:
            raise ValueError(f"span count must be >= 0, got {self.span_count}")
        if self.gamma_w_km < 0:
            raise ValueError(f"gamma must be >= 0, got {self.gamma_w_km}")

    @property
    def total_length_km(self) -> float:
        return self.span_length_km * self.span_count

    @property
    def total_dispersion_ps_nm(self) -> float:
        return self.dispersion_ps_nm_km * self.total_length_km


SSMF = FiberParams(alpha_db_km=0.2, dispersion_ps_nm_km=17.0,
                   gamma_w_km=1.2, span_length_km=50.0, span_count=5)
TWC = FiberParams(alpha_db_km=0.23, dispersion_ps_nm_km=2.8,
                  gamma_w_km=2.5, span_length_km=50.0, span_count=9)

FIBER_PRESETS = {"ssmf": SSMF, "twc": TWC}


@dataclass(frozen=True)
class LinkConfig:
    """One transmission scenario; noise figure -inf disables ASE."""

    fiber: FiberParams
    launch_power_dbm: float
    symbol_rate_gbd: float = 34.4
    rrc_rolloff: float = 0.1
    edfa_noise_figure_db: float = 4.5
    center_wavelength_nm: float = 1550.0
    samples_per_symbol_sim: int = 8
    steps_per_span_sim: int = 50
    rng_seed: int = 1234

    def __post_init__(self):
        if self.symbol_rate_gbd <= 0:
            raise ValueError(f"symbol rate must be > 0, got {self.symbol_rate_gbd}")
        if not 0.0 <= self.rrc_rolloff <= 1.0:
            raise ValueError(f"rolloff must be in [0, 1], got {self.rrc_rolloff}")
        if self.samples_per_symbol_sim < 4:
            raise ValueError(
                f"samples_per_symbol_sim must be >= 4, got {self.samples_per_symbol_sim}")
        if self.steps_per_span_sim < 1:
            raise ValueError(
                f"steps_per_span_sim must be >= 1, got {self.steps_per_span_sim}")

    @property
    def symbol_rate_hz(self) -> float:
        return self.symbol_rate_gbd * 1e9

    @property
    def sim_sample_rate_hz(self) -> float:
        return self.symbol_rate_hz * self.samples_per_symbol_sim

    @property
    def launch_power_w(self) -> float:
        return 1e-3 * 10.0 ** (self.launch_power_dbm / 10.0)

    def to_dict(self) -> dict:
        d = asdict(self)
        if math.isinf(d["edfa_noise_figure_db"]):
            d["edfa_noise_figure_db"] = "-inf"
        return d

    @staticmethod
    def from_dict(d: dict) -> "LinkConfig":
        d = dict(d)
        if d.get("edfa_noise_figure_db") == "-inf":
            d["edfa_noise_figure_db"] = -math.inf
        d["fiber"] = FiberParams(**d["fiber"])
        return LinkConfig(**d)

    def config_hash(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


def beta2_s2_per_km(dispersion_ps_nm_km: float, wavelength_nm: float) -> float:
    """beta2 = -D * lambda^2 / (2*pi*c), in s^2/km."""
    d_si = dispersion_ps_nm_km * 1e-3          # s / m / km
    lam = wavelength_nm * 1e-9                 # m
    return -d_si * lam ** 2 / (2.0 * np.pi * C_M_S)


def _alpha_per_km(alpha_db_km: float) -> float:
    return alpha_db_km * np.log(10.0) / 10.0


def edfa_gain_lin(fiber: FiberParams) -> float:
    return 10.0 ** (fiber.alpha_db_km * fiber.span_length_km / 10.0)


def ase_psd_w_hz(link: LinkConfig) -> float:
    """Per-polarization ASE PSD of one span's EDFA."""
    if math.isinf(link.edfa_noise_figure_db) and link.edfa_noise_figure_db < 0:
        return 0.0
    g = edfa_gain_lin(link.fiber)
    if g <= 1.0:
        return 0.0
    nf_lin = 10.0 ** (link.edfa_noise_figure_db / 10.0)
    n_sp = nf_lin * g / (2.0 * (g - 1.0))
    nu = C_M_S / (link.center_wavelength_nm * 1e-9)
    return (g - 1.0) * PLANCK_J_S * nu * n_sp


def _mean_power(x: np.ndarray, y: np.ndarray) -> float:
    return float(np.mean(np.abs(x) ** 2 + np.abs(y) ** 2))


def _check_power(x, y, where: str):
    p = _mean_power(x, y)
    if not np.isfinite(p) or p > MAX_MEAN_POWER_W:
        raise FloatingPointError(
            f"mean power {p:.3e} W exceeds +30 dBm sanity limit ({where})")


def split_step_span(x: np.ndarray, y: np.ndarray, link: LinkConfig,
                    steps: int, direction: int = +1,
                    sample_rate_hz: float | None = None):
    """Symmetric split-step over one span; direction -1 negates alpha/beta2/gamma.

    Trailing/leading linear half-steps of adjacent steps are merged, which is
    algebraically identical to the textbook scheme.
    """
    fiber = link.fiber
    fs = sample_rate_hz if sample_rate_hz is not None else link.sim_sample_rate_hz
    n = len(x)
    omega = 2.0 * np.pi * fftfreq(n, d=1.0 / fs)
    dz = fiber.span_length_km / steps
    alpha = direction * _alpha_per_km(fiber.alpha_db_km)
    beta2 = direction * beta2_s2_per_km(fiber.dispersion_ps_nm_km,
                                        link.center_wavelength_nm)
    gamma = direction * fiber.gamma_w_km
    half = np.exp((-alpha / 2.0 + 1j * (beta2 / 2.0) * omega ** 2) * (dz / 2.0))
    full = half * half
    fx, fy = fft(x) * half, fft(y) * half
    for step in range(steps):
        tx, ty = ifft(fx), ifft(fy)
        phi = (8.0 / 9.0) * gamma * (np.abs(tx) ** 2 + np.abs(ty) ** 2) * dz
        rot = np.exp(1j * phi)
        tx, ty = tx * rot, ty * rot
        op = half if step == steps - 1 else full
        fx, fy = fft(tx) * op, fft(ty) * op
    return ifft(fx), ifft(fy)


def propagate_waveform(x: np.ndarray, y: np.ndarray, link: LinkConfig,
                       noise_rng: np.random.Generator | None = None):
    """All spans plus EDFAs; ``noise_rng`` None draws from link.rng_seed."""
    if noise_rng is None:
        noise_rng = np.random.default_rng(
            np.random.SeedSequence([link.rng_seed, 0xA5E]))
    rho = ase_psd_w_hz(link)
    g = edfa_gain_lin(link.fiber)
    sigma2 = rho * link.sim_sample_rate_hz      # total noise power per pol
    _check_power(x, y, "launch")
    for _ in range(link.fiber.span_count):
        x, y = split_step_span(x, y, link, link.steps_per_span_sim)
        x, y = x * np.sqrt(g), y * np.sqrt(g)
        if sigma2 > 0.0:
            s = np.sqrt(sigma2 / 2.0)
            x = x + noise_rng.normal(0.0, s, len(x)) \
                + 1j * noise_rng.normal(0.0, s, len(x))
            y = y + noise_rng.normal(0.0, s, len(y)) \
                + 1j * noise_rng.normal(0.0, s, len(y))
        _check_power(x, y, "span output")
    return x, y


def cd_compensate(waveform: np.ndarray, total_dispersion_ps_nm: float,
                  sample_rate_hz: float,
                  wavelength_nm: float = 1550.0) -> np.ndarray:
    """Frequency-domain all-pass inverting accumulated dispersion."""
    if total_dispersion_ps_nm == 0.0:
        return waveform.copy()
    beta2_l = beta2_s2_per_km(total_dispersion_ps_nm, wavelength_nm)  # D*L lumped
    n = len(waveform)
    omega = 2.0 * np.pi * fftfreq(n, d=1.0 / sample_rate_hz)
    return ifft(fft(waveform) * np.exp(-1j * (beta2_l / 2.0) * omega ** 2))


def dbp_compensate(x: np.ndarray, y: np.ndarray, link: LinkConfig,
                   steps_per_span: int = 3,
                   sample_rate_hz: float | None = None):
    """Reverse split-step over all spans (waveform in, waveform out)."""
    if steps_per_span < 1:
        raise ValueError(f"steps_per_span must be >= 1, got {steps_per_span}")
    g = edfa_gain_lin(link.fiber)
    for _ in range(link.fiber.span_count):
        x, y = x / np.sqrt(g), y / np.sqrt(g)
        x, y = split_step_span(x, y, link, steps_per_span, direction=-1,
                               sample_rate_hz=sample_rate_hz)
    return x, y


def spectral_decimate(waveform: np.ndarray, factor: int) -> np.ndarray:
    """Ideal brick-wall decimation: keep the central spectrum, drop the rest.

    Exact for signals band-limited to the target Nyquist band; used when
    stepping the receiver down from the simulation rate so broadband ASE
    does not alias into the signal band.
    """
    if factor == 1:
        return waveform.copy()
    n = len(waveform)
    if n % factor != 0:
        raise ValueError(f"length {n} not divisible by factor {factor}")
    m = n // factor
    spec = fft(waveform)
    kept = np.concatenate([spec[:m // 2], spec[n - (m - m // 2):]])
    # zero the fold bin for odd-ish splits: kept has exactly m bins already
    return ifft(kept) / factor
