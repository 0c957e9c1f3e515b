"""Bit error counting and Q-factor conversion."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import erfcinv


@dataclass(frozen=True)
class EvalResult:
    bit_errors: int
    bit_count: int
    ber: float
    q_db: float
    q_gain_db: float = 0.0

    def to_dict(self) -> dict:
        return {
            "bit_errors": self.bit_errors,
            "bit_count": self.bit_count,
            "ber": self.ber,
            "q_db": _json_float(self.q_db),
            "q_gain_db": _json_float(self.q_gain_db),
        }


def _json_float(x: float):
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return x


def q_factor_db(ber: float) -> float:
    """Q_dB = 20*log10(sqrt(2)*erfcinv(2*BER)).

    BER 0 maps to +inf, BER >= 0.5 to nan (undefined).
    """
    if ber < 0.0:
        raise ValueError(f"BER must be >= 0, got {ber}")
    if ber == 0.0:
        return math.inf
    if ber >= 0.5:
        return math.nan
    return float(20.0 * np.log10(np.sqrt(2.0) * erfcinv(2.0 * ber)))


def ber_count(decided_bits: np.ndarray, truth_bits: np.ndarray,
              baseline_q_db: float | None = None) -> EvalResult:
    """Count errors between equal-length bit streams."""
    decided_bits = np.asarray(decided_bits, dtype=np.uint8)
    truth_bits = np.asarray(truth_bits, dtype=np.uint8)
    if decided_bits.shape != truth_bits.shape:
        raise ValueError(
            f"bit streams differ in length: {decided_bits.shape} vs {truth_bits.shape}")
    errors = int(np.count_nonzero(decided_bits != truth_bits))
    total = int(decided_bits.size)
    ber = errors / total if total else 0.0
    q = q_factor_db(ber)
    gain = 0.0
    if baseline_q_db is not None:
        gain = q - baseline_q_db
    return EvalResult(bit_errors=errors, bit_count=total, ber=ber,
                      q_db=q, q_gain_db=gain)
