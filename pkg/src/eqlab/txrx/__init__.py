"""Simulated transmitter, fiber channel, and receiver DSP."""

from .fiber import (FIBER_PRESETS, SSMF, TWC, FiberParams, LinkConfig,
                    ase_psd_w_hz, cd_compensate, dbp_compensate,
                    edfa_gain_lin, propagate_waveform, spectral_decimate)
from .frames import (SignalFrame, dbp_equalize, decide_frame, frame_bits,
                     propagate, receive, transmit)
from .metrics import EvalResult, ber_count, q_factor_db
from .prbs import lfsr_sequence, prbs32
from .qam import (BITS_PER_SYMBOL, CONSTELLATION, index_bits, qam16_decide,
                  qam16_demap_hard, qam16_indices, qam16_map,
                  symbols_from_indices)
from .rrc import rrc_matched, rrc_shape, rrc_taps

__all__ = [name for name in dir() if not name.startswith("_")]
