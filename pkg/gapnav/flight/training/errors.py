# PEP-8


class TrainingError(Exception):
    pass


class LossError(TrainingError):
    pass


class RolloutDivergedError(TrainingError):
    def __init__(self, iteration: int, step: int, where: str) -> None:
        self.iteration = iteration
        self.step = step
        self.where = where
        super().__init__(f"rollout diverged at iteration {iteration}, step {step}: {where}")


class TrainingHaltedError(TrainingError):
    def __init__(self, iteration: int, skipped: int) -> None:
        self.iteration = iteration
        self.skipped = skipped
        super().__init__(f"training halted at iteration {iteration} after {skipped} consecutive skipped steps")


class FrozenWeightsError(TrainingError):
    def __init__(self, before: str, after: str) -> None:
        self.before = before
        self.after = after
        super().__init__(f"policy weights changed during auxiliary training ({before[:12]} -> {after[:12]})")
