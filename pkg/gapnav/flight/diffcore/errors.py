# PEP-8


class DiffcoreError(Exception):
    pass


class ShapeError(DiffcoreError):
    def __init__(self, op: str, *shapes: tuple[int, ...]) -> None:
        self.op = op
        self.shapes = shapes
        listed = ", ".join(str(tuple(s)) for s in shapes)
        super().__init__(f"{op}: incompatible shapes {listed}")


class NonFiniteError(DiffcoreError):
    def __init__(self, where: str) -> None:
        self.where = where
        super().__init__(f"non-finite value produced by {where}")


class TapeError(DiffcoreError):
    pass
