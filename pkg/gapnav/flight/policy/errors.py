# PEP-8


class PolicyError(Exception):
    def __init__(self, message: str, layer: str | None = None) -> None:
        self.layer = layer
        super().__init__(message)


class CheckpointError(Exception):
    pass


class CheckpointFormatError(CheckpointError):
    pass


class CheckpointVersionError(CheckpointError):
    def __init__(self, found: int, supported: int) -> None:
        self.found = found
        self.supported = supported
        super().__init__(f"checkpoint format version {found} is not supported (expected {supported})")


class ArchitectureMismatchError(CheckpointError):
    def __init__(self, differences: dict) -> None:
        self.differences = differences
        listed = ", ".join(f"{k}: {a!r} != {b!r}" for k, (a, b) in sorted(differences.items()))
        super().__init__(f"checkpoint architecture does not match config ({listed})")
