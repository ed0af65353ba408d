# PEP-8


class HarnessError(Exception):
    pass


class DegenerateDatasetError(HarnessError):
    def __init__(self, n_samples: int, n_positive: int) -> None:
        self.n_samples = n_samples
        self.n_positive = n_positive
        super().__init__(
            f"precision/recall needs both classes, got {n_positive} positives among {n_samples} samples"
        )


class ReportIntegrityError(HarnessError):
    def __init__(self, key: str, stored, recomputed) -> None:
        self.key = key
        self.stored = stored
        self.recomputed = recomputed
        super().__init__(f"report aggregate {key} is {stored!r} but the records give {recomputed!r}")
