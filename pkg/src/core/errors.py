"""
Error hierarchy shared by every module.

Each error carries a one-line ``detail`` and the CLI ``exit_code`` it maps to
(2 for input/validation problems, 3 for numerical failures).
"""
from typing import Optional, Tuple


class LatentLabelError(Exception):
    exit_code = 1

    def __init__(self, detail: str):
        super().__init__(detail)
        self.detail = detail


# ============================
# INPUT / VALIDATION (exit 2)
# ============================
class InputError(LatentLabelError):
    exit_code = 2


class DataModelError(InputError):
    """Invariant violation naming the offending matrix and (optionally) index."""

    def __init__(self, matrix: str, index: Optional[Tuple[int, ...]] = None, detail: str = ""):
        self.matrix = matrix
        self.index = index
        where = f"{matrix}" if index is None else f"{matrix}{list(index)}"
        super().__init__(f"{where}: {detail}" if detail else where)


class DimensionMismatch(DataModelError):
    pass


class NonBinaryLabel(DataModelError):
    pass


class NonFiniteValue(DataModelError):
    pass


class MalformedCell(InputError):
    def __init__(self, path: str, row: int, column: str, value: str):
        self.path = path
        self.row = row
        self.column = column
        super().__init__(f"{path}: row {row}, column '{column}': cannot parse {value!r} as a number")


class NegativeFeature(InputError):
    pass


class EmptyInput(InputError):
    pass


class InvalidK(InputError):
    pass


class InvalidFoldCount(InputError):
    pass


class InvalidConfig(InputError):
    pass


class NoEvaluableSamples(InputError):
    pass


# ============================
# NUMERICAL (exit 3)
# ============================
class NumericalError(LatentLabelError):
    exit_code = 3


class LineSearchFailed(NumericalError):
    pass


class SingularSystem(NumericalError):
    pass
