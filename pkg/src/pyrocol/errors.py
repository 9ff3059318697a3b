"""Exception types shared across the package.

Every error raised by library code derives from PyrocolError so callers
(CLI, HTTP service) can convert failures into structured reports.
"""


class PyrocolError(Exception):
    """Base class for all package errors."""


# --- data loading / validation ---------------------------------------------


class MissingHeaderError(PyrocolError):
    pass


class BadNumericError(PyrocolError):
    def __init__(self, row: int, col: str, message: str = ""):
        self.row = row
        self.col = col
        super().__init__(f"row {row}, column {col!r}: {message or 'bad numeric value'}")


class UnknownEnumError(PyrocolError):
    def __init__(self, row: int, col: str, value: str):
        self.row = row
        self.col = col
        self.value = value
        super().__init__(f"row {row}, column {col!r}: unknown value {value!r}")


class DuplicateIdError(PyrocolError):
    pass


class InsufficientDataError(PyrocolError):
    pass


class MissingTargetError(PyrocolError):
    pass


class MissingFeatureError(PyrocolError):
    pass


class ValidationFailedError(PyrocolError):
    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("; ".join(str(v) for v in self.violations))


# --- augmentation -----------------------------------------------------------


class DimensionMismatchError(PyrocolError):
    pass


class UOutOfRangeError(PyrocolError):
    pass


class MissingLabelError(PyrocolError):
    pass


class WrongProvenanceError(PyrocolError):
    pass


# --- models -----------------------------------------------------------------


class EmptyDataError(PyrocolError):
    pass


class UnfittedModelError(PyrocolError):
    pass


class ShapeMismatchError(PyrocolError):
    pass


class MissingSplitError(PyrocolError):
    pass


# --- metrics ----------------------------------------------------------------


class LengthMismatchError(PyrocolError):
    pass


class EmptyInputError(PyrocolError):
    pass


class SingleClassError(PyrocolError):
    pass


class ZeroVarianceError(PyrocolError):
    def __init__(self, column: str = ""):
        self.column = column
        super().__init__(f"zero variance{' in column ' + column if column else ''}")


# --- explainability ---------------------------------------------------------


class TooManyFeaturesError(PyrocolError):
    pass


class EmptyBackgroundError(PyrocolError):
    pass


# --- codal formulas ---------------------------------------------------------


class OutOfValidityRangeError(PyrocolError):
    pass


class NonPositiveInputError(PyrocolError):
    pass


class NegativeInputError(PyrocolError):
    pass


class MappingFailureError(PyrocolError):
    def __init__(self, record_id: str, message: str):
        self.record_id = record_id
        super().__init__(f"record {record_id!r}: {message}")


# --- persistence ------------------------------------------------------------


class VersionMismatchError(PyrocolError):
    pass


class SchemaFingerprintMismatchError(PyrocolError):
    pass


class CorruptFileError(PyrocolError):
    pass


class InfeasibleSpecError(PyrocolError):
    pass
