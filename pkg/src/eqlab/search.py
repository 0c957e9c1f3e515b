"""Budget-constrained topology search over the equalizer families.

For each multiplication budget the feasible space is an integer box whose
maximal corner still fits the budget (counts are monotone in every
hyperparameter, so every point in the box fits).  Configurations are drawn
uniformly from the box, trained with one fixed small recipe, and scored by
Q-factor gain over the unequalized baseline on held-out data.  Everything
is deterministic per seed: trial i depends only on (seed, i), so best-of-N
over a trial prefix is monotone in N and parallel execution cannot change
the result.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import complexity as cx
from .errors import (AllTrialsDivergedError, InfeasibleBudgetError,
                     TrainingDivergedError)
from .neural import (ArchFamily, FAMILY_HYPERS, TrainConfig, evaluate_pair,
                     family_model, family_rmps, train_pair,
                     unequalized_result)
from .txrx import dataset as dsm
from .txrx import frames as frm
from .txrx.metrics import ber_count

DEFAULT_MEMORY = 41
WORKERS_ENV = "EQLAB_WORKERS"


@dataclass(frozen=True)
class Budget:
    max_rmps: int
    label: str

    def __post_init__(self):
        if self.max_rmps <= 0:
            raise ValueError(f"budget must be > 0, got {self.max_rmps}")

    @staticmethod
    def parse(text: str) -> "Budget":
        return Budget(int(float(text)), text)


@dataclass(frozen=True)
class FeasibleSpace:
    family: ArchFamily
    budget: Budget
    memory: int
    bounds: dict   # param -> (lo, hi); kernels sample odd values only

    def max_corner(self) -> dict:
        return {p: hi for p, (lo, hi) in self.bounds.items()}

    def sample(self, rng: np.random.Generator) -> dict:
        hyper = {}
        for p, (lo, hi) in self.bounds.items():
            if p == "k":
                n_odd = (hi - lo) // 2 + 1
                hyper[p] = lo + 2 * int(rng.integers(0, n_odd))
            else:
                hyper[p] = int(rng.integers(lo, hi + 1))
        return hyper


def _corner_hyper(family: ArchFamily, t: int, memory: int) -> dict:
    """Balanced growth profile: all size parameters at t, kernel ~ sqrt(t)."""
    k = min(2 * int(np.sqrt(t)) + 1, memory)
    if family == ArchFamily.MLP3:
        return dict(n1=t, n2=t, n3=t)
    if family == ArchFamily.CNN_MLP2:
        return dict(f=t, k=k, n1=t, n2=t)
    if family == ArchFamily.BILSTM1:
        return dict(nh=t)
    return dict(f=t, k=k, nh=t)


def _min_hyper(family: ArchFamily) -> dict:
    return {p: 1 for p in FAMILY_HYPERS[family]}


def feasible_space(family: ArchFamily, budget: Budget,
                   memory: int = DEFAULT_MEMORY) -> FeasibleSpace:
    """Integer hyperparameter box whose maximal corner fits the budget."""
    min_rmps = family_rmps(family, memory, _min_hyper(family))
    if min_rmps > budget.max_rmps:
        raise InfeasibleBudgetError(family.value, budget.max_rmps, min_rmps)
    # largest balanced t whose corner still fits
    lo_t, hi_t = 1, 2
    while family_rmps(family, memory,
                      _corner_hyper(family, hi_t, memory)) <= budget.max_rmps:
        lo_t, hi_t = hi_t, hi_t * 2
    while hi_t - lo_t > 1:
        mid = (lo_t + hi_t) // 2
        if family_rmps(family, memory,
                       _corner_hyper(family, mid, memory)) <= budget.max_rmps:
            lo_t = mid
        else:
            hi_t = mid
    corner = _corner_hyper(family, lo_t, memory)
    bounds = {p: (1, corner[p]) for p in FAMILY_HYPERS[family]}
    space = FeasibleSpace(family=family, budget=budget, memory=memory,
                          bounds=bounds)
    achieved = family_rmps(family, memory, space.max_corner())
    assert achieved <= budget.max_rmps, (achieved, budget.max_rmps)
    return space


SEARCH_TRAIN = TrainConfig(learning_rate=2e-3, batch_size=512, epochs=6)


@dataclass
class TrialRecord:
    index: int
    hyper: dict
    rmps: int
    params: int
    q_db: float = float("nan")
    q_gain_db: float = float("nan")
    ber: float = float("nan")
    diverged: bool = False
    error: str = ""


@dataclass
class SearchResult:
    family: ArchFamily
    budget: Budget
    best: TrialRecord
    trials: list[TrialRecord]
    loss_curves: dict = field(default_factory=dict)
    baseline_q_db: float = float("nan")


def _n_workers() -> int:
    try:
        return max(1, int(os.environ.get(WORKERS_ENV, "1")))
    except ValueError:
        return 1


def random_search(family: ArchFamily, budget: Budget, dataset: dsm.Dataset,
                  trials: int, seed: int, memory: int = DEFAULT_MEMORY,
                  train_cfg: TrainConfig = SEARCH_TRAIN,
                  window_cap: int | None = 30000) -> SearchResult:
    """Best-of-``trials`` uniform draws from the feasible box.

    Ties on Q-gain break toward smaller RMpS, then fewer parameters, then
    the lower trial index.  Raises if every trial diverged.
    """
    if trials < 1:
        raise ValueError(f"trials must be >= 1, got {trials}")
    if dataset.test is None:
        raise ValueError("random_search needs a dataset with a test split")
    space = feasible_space(family, budget, memory)
    baseline = unequalized_result(dataset.test, memory)

    curves_by_index: dict[int, dict] = {}

    def run_trial(i: int) -> TrialRecord:
        rng = np.random.default_rng(np.random.SeedSequence([seed, i]))
        hyper = space.sample(rng)
        spec = family_model(family, memory, hyper)
        report = cx.rmps_model(spec)
        assert report.total_rmps <= budget.max_rmps, (hyper, report.total_rmps)
        rec = TrialRecord(index=i, hyper=hyper, rmps=report.total_rmps,
                          params=report.total_params)
        cfg = TrainConfig(
            learning_rate=train_cfg.learning_rate,
            batch_size=train_cfg.batch_size, epochs=train_cfg.epochs,
            beta1=train_cfg.beta1, beta2=train_cfg.beta2, eps=train_cfg.eps,
            patience=train_cfg.patience,
            seed=int(rng.integers(0, 2 ** 31)))
        try:
            pair, curves = train_pair(family, memory, hyper, dataset.train,
                                      cfg, window_cap=window_cap)
        except TrainingDivergedError as e:
            rec.diverged = True
            rec.error = str(e)
            return rec
        res = evaluate_pair(pair, dataset.test, baseline_q_db=baseline.q_db)
        rec.q_db = res.q_db
        rec.q_gain_db = res.q_gain_db
        rec.ber = res.ber
        curves_by_index[i] = {
            pol: {"train": c.train_loss, "val": c.val_loss}
            for pol, c in curves.items()}
        return rec

    workers = _n_workers()
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(run_trial, range(trials)))
    else:
        records = [run_trial(i) for i in range(trials)]
    records.sort(key=lambda r: r.index)

    alive = [r for r in records if not r.diverged]
    if not alive:
        raise AllTrialsDivergedError(records)
    best = min(alive, key=lambda r: (-r.q_gain_db, r.rmps, r.params, r.index))
    return SearchResult(family=family, budget=budget, best=best,
                        trials=records,
                        loss_curves=curves_by_index.get(best.index, {}),
                        baseline_q_db=baseline.q_db)


# -- full sweep ---------------------------------------------------------------

SWEEP_SCHEMA = "eqlab-sweep-csv v1"
CSV_COLUMNS = ("family", "budget", "rmps", "params", "q_db", "q_gain_db",
               "latency_ref")


@dataclass
class SweepRow:
    family: str
    budget: str
    rmps: int | None
    params: int | None
    q_db: float | None
    q_gain_db: float | None
    latency_ref: str
    hyper: dict | None = None
    infeasible: bool = False


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return f"{v:.6g}"
    return str(v)


def _dbp_row(dataset: dsm.Dataset, base_q: float, steps_per_span: int = 3):
    """Re-simulate the test frame and score reverse split-step equalization."""
    link = dataset.link
    test = dataset.test
    n = test.n_symbols + 2 * dataset.guard
    tx = frm.transmit(link, n, test.seed)
    rx = frm.dbp_equalize(frm.propagate(tx, link), link,
                          steps_per_span=steps_per_span)
    dec, truth = frm.decide_frame(rx, guard=dataset.guard)
    res = ber_count(dec, truth, baseline_q_db=base_q)
    return res


def sweep(families: list[ArchFamily], budgets: list[Budget],
          dataset: dsm.Dataset, trials: int, seed: int,
          memory: int = DEFAULT_MEMORY, train_cfg: TrainConfig = SEARCH_TRAIN,
          window_cap: int | None = 30000,
          dbp_steps_per_span: int = 3) -> tuple[list[SweepRow], dict]:
    """Family x budget grid plus unequalized and reverse split-step baselines."""
    if dataset.test is None:
        raise ValueError("sweep needs a dataset with a test split")
    rows: list[SweepRow] = []
    losses: dict[str, dict] = {}
    for family in families:
        for budget in budgets:
            ref = f"{family.value}@{budget.label}"
            try:
                result = random_search(family, budget, dataset, trials,
                                       seed, memory=memory,
                                       train_cfg=train_cfg,
                                       window_cap=window_cap)
            except InfeasibleBudgetError:
                rows.append(SweepRow(family.value, budget.label, None, None,
                                     None, None, "", infeasible=True))
                continue
            b = result.best
            rows.append(SweepRow(family.value, budget.label, b.rmps, b.params,
                                 b.q_db, b.q_gain_db, ref, hyper=b.hyper))
            losses[ref] = result.loss_curves
    base = unequalized_result(dataset.test, memory=1)
    rows.append(SweepRow("unequalized", "", None, None, base.q_db, 0.0, ""))
    dbp = _dbp_row(dataset, base.q_db, steps_per_span=dbp_steps_per_span)
    rows.append(SweepRow(f"dbp-{dbp_steps_per_span}stps", "", None, None,
                         dbp.q_db, dbp.q_gain_db, ""))
    return rows, losses


def write_sweep_csv(rows: list[SweepRow], path: str, manifest_hash: str = ""):
    lines = [f"# {SWEEP_SCHEMA} manifest={manifest_hash}"]
    lines.append(",".join(CSV_COLUMNS))
    for r in rows:
        lines.append(",".join([
            r.family, r.budget, _fmt(r.rmps), _fmt(r.params),
            _fmt(r.q_db), _fmt(r.q_gain_db), r.latency_ref]))
    with open(path, "w") as f:
        f.write("\n".join(lines) + "\n")
