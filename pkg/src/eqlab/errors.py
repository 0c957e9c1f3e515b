"""Exception types shared across the package."""


class ConfigError(ValueError):
    """Invalid layer stack, shape chain, or configuration value."""


class DatasetError(ValueError):
    """Dataset generation or file-format violation."""


class InfeasibleBudgetError(ValueError):
    """No hyperparameter setting of the family fits the multiplication budget."""

    def __init__(self, family: str, budget: int, min_rmps: int):
        self.family = family
        self.budget = budget
        self.min_rmps = min_rmps
        super().__init__(
            f"{family}: minimal configuration needs {min_rmps} RMpS, "
            f"budget is {budget}"
        )


class TrainingDivergedError(RuntimeError):
    """Loss became non-finite during training."""

    def __init__(self, epoch: int, loss: float):
        self.epoch = epoch
        self.loss = loss
        super().__init__(f"training diverged at epoch {epoch} (loss={loss!r})")


class AllTrialsDivergedError(RuntimeError):
    """Every search trial diverged; carries the per-trial records."""

    def __init__(self, records):
        self.records = records
        detail = "; ".join(
            f"trial {r.index}: {r.error or 'diverged'}" for r in records)
        super().__init__(f"all {len(records)} trials diverged ({detail})")
