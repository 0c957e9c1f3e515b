"""Keep large numpy temporaries on the heap instead of per-call mmaps.

glibc hands allocations above M_MMAP_THRESHOLD straight to mmap and returns
them to the kernel on free, so every batch-sized temporary pays a fresh
page-fault storm.  Raising the threshold (and the trim threshold) lets the
allocator recycle those buffers, which speeds the forward/backward hot path
up severalfold on small hosts.  Set EQLAB_NO_MALLOC_TUNING=1 to skip.
"""

from __future__ import annotations

import ctypes
import os

_M_TRIM_THRESHOLD = -1
_M_MMAP_THRESHOLD = -3


def tune_allocator(threshold: int = 1 << 26) -> bool:
    if os.environ.get("EQLAB_NO_MALLOC_TUNING"):
        return False
    try:
        libc = ctypes.CDLL("libc.so.6", use_errno=True)
        libc.mallopt(_M_MMAP_THRESHOLD, threshold)
        libc.mallopt(_M_TRIM_THRESHOLD, threshold)
        return True
    except OSError:  # non-glibc platform
        return False
