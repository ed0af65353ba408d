# PEP-8


class SimulationError(Exception):
    pass


class InvalidStateError(SimulationError):
    def __init__(self, message: str, field: str | None = None) -> None:
        self.field = field
        super().__init__(message)


class MeshError(SimulationError):
    pass


class GapGenerationError(SimulationError):
    def __init__(self, seed, retries: int) -> None:
        self.seed = seed
        self.retries = retries
        super().__init__(f"no valid gap for seed {seed} after {retries} retries")


class PreprocessError(SimulationError):
    pass
