"""Wall-clock inference latency versus multiplication count.

Measurements time ``Network.forward`` only, single-threaded: BLAS pools are
pinned to one thread for the duration of a run and the harness refuses to
start if the neural engine was configured for intra-op parallelism
(``EQLAB_NEURAL_THREADS`` > 1).  Per-symbol latency is batch time divided by
batch size; warmup iterations are discarded.
"""

from __future__ import annotations

import contextlib
import os
import platform
import time
from dataclasses import dataclass

import numpy as np
from scipy.stats import spearmanr

from . import complexity as cx
from .neural import ArchFamily, Network, family_model
from .search import Budget, feasible_space

NEURAL_THREADS_ENV = "EQLAB_NEURAL_THREADS"
MIN_REPORT_ITERS = 100

try:
    from threadpoolctl import threadpool_limits
except ImportError:  # pragma: no cover
    threadpool_limits = None


def _require_single_thread():
    configured = os.environ.get(NEURAL_THREADS_ENV, "1")
    try:
        n = int(configured)
    except ValueError:
        raise RuntimeError(
            f"{NEURAL_THREADS_ENV}={configured!r} is not an integer") from None
    if n > 1:
        raise RuntimeError(
            f"latency harness needs single-threaded inference, but "
            f"{NEURAL_THREADS_ENV}={n}")


@contextlib.contextmanager
def pinned_single_thread():
    """Refuse multi-threaded config and pin BLAS pools to one thread."""
    _require_single_thread()
    if threadpool_limits is not None:
        with threadpool_limits(limits=1):
            yield
    else:  # pragma: no cover
        yield


def host_descriptor() -> str:
    cpu = platform.processor() or "unknown-cpu"
    try:
        with open("/proc/cpuinfo") as f:
            for line in f:
                if line.startswith("model name"):
                    cpu = line.split(":", 1)[1].strip()
                    break
    except OSError:  # pragma: no cover
        pass
    return f"{cpu} x{os.cpu_count()} / {platform.system()} {platform.machine()}"


@dataclass
class LatencyRow:
    family: str
    decade: str
    rmps: int
    params: int
    batch: int
    warmup: int
    iters: int
    mean_s: float      # per symbol
    median_s: float
    p95_s: float
    reliable: bool
    host: str


def measure_latency(net: Network, batch_input: np.ndarray, warmup: int,
                    iters: int) -> dict:
    """Time forward passes; returns per-symbol stats over the kept iterations.

    A report is flagged unreliable when the timer resolution exceeds 1% of
    the measured batch time.
    """
    if iters < 1:
        raise ValueError(f"iters must be >= 1, got {iters}")
    if warmup < 0:
        raise ValueError(f"warmup must be >= 0, got {warmup}")
    batch = batch_input.shape[0]
    with pinned_single_thread():
        for _ in range(warmup):
            net.forward(batch_input)
        times = np.empty(iters)
        for i in range(iters):
            t0 = time.perf_counter()
            net.forward(batch_input)
            times[i] = time.perf_counter() - t0
    if np.any(times <= 0.0):
        # sub-resolution measurement; clamp to the timer tick and flag it
        tick = time.get_clock_info("perf_counter").resolution
        times = np.maximum(times, tick)
        reliable = False
    else:
        reliable = (time.get_clock_info("perf_counter").resolution
                    <= 0.01 * float(np.mean(times)))
    per_symbol = times / batch
    return {
        "batch": batch,
        "warmup": warmup,
        "iters": iters,
        "mean_s": float(np.mean(per_symbol)),
        "median_s": float(np.median(per_symbol)),
        "p95_s": float(np.percentile(per_symbol, 95)),
        "reliable": bool(reliable),
    }


def model_at_budget(family: ArchFamily, budget: Budget,
                    memory: int) -> tuple[dict, int, int]:
    """Max-corner configuration of the feasible box: (hyper, rmps, params)."""
    space = feasible_space(family, budget, memory)
    hyper = space.max_corner()
    report = cx.rmps_model(family_model(family, memory, hyper))
    return hyper, report.total_rmps, report.total_params


def latency_vs_rmps(families: list[ArchFamily], decades: list[Budget],
                    batches: tuple[int, ...] = (1, 256), warmup: int = 5,
                    iters: int = MIN_REPORT_ITERS, memory: int = 41,
                    seed: int = 0) -> tuple[list[LatencyRow], dict]:
    """Latency grid plus Spearman rank correlation of RMpS vs mean latency.

    Correlations are computed per (family, batch size) group across the
    decades; weights are random since timing does not depend on them.
    """
    if iters < MIN_REPORT_ITERS:
        raise ValueError(
            f"report requires >= {MIN_REPORT_ITERS} iterations, got {iters}")
    host = host_descriptor()
    rng = np.random.default_rng(seed)
    rows: list[LatencyRow] = []
    for family in families:
        for budget in decades:
            hyper, rmps, params = model_at_budget(family, budget, memory)
            net = Network(family_model(family, memory, hyper), seed=seed)
            for batch in batches:
                x = rng.standard_normal((batch, memory, 4))
                stats = measure_latency(net, x, warmup, iters)
                rows.append(LatencyRow(
                    family=family.value, decade=budget.label, rmps=rmps,
                    params=params, host=host, **stats))
    spearman: dict[tuple[str, int], float] = {}
    for family in families:
        for batch in batches:
            grp = [r for r in rows
                   if r.family == family.value and r.batch == batch]
            if len(grp) >= 2:
                rho = spearmanr([r.rmps for r in grp],
                                [r.mean_s for r in grp]).statistic
                spearman[(family.value, batch)] = float(rho)
    return rows, spearman


BENCH_SCHEMA = "eqlab-latency-csv v1"
BENCH_COLUMNS = ("family", "decade", "rmps", "params", "batch", "warmup",
                 "iters", "mean_per_symbol_s", "median_per_symbol_s",
                 "p95_per_symbol_s", "reliable", "host")


def write_latency_csv(rows: list[LatencyRow], path: str,
                      manifest_hash: str = ""):
    lines = [f"# {BENCH_SCHEMA} manifest={manifest_hash}"]
    lines.append(",".join(BENCH_COLUMNS))
    for r in rows:
        lines.append(",".join([
            r.family, r.decade, str(r.rmps), str(r.params), str(r.batch),
            str(r.warmup), str(r.iters), f"{r.mean_s:.9e}",
            f"{r.median_s:.9e}", f"{r.p95_s:.9e}", str(int(r.reliable)),
            f'"{r.host}"']))
    with open(path, "w") as f:
        f.write("\n".join(lines) + "\n")
