"""Exception taxonomy.

Every error raised by the library derives from :class:`CombocovError`, so the
CLI can catch one type and report a categorized message.
"""


class CombocovError(Exception):
    """Base class for all combocov errors."""


class SchemaError(CombocovError):
    """Invalid factor schema: bad names, domains, or constraint references."""


class ValidationError(CombocovError):
    """Data does not satisfy a declared contract (record/schema mismatch,
    unknown labels or factors, dimension mismatch, out-of-range coordinates)."""


class StrengthError(CombocovError):
    """Combination strength t outside 1..k."""


class DegenerateSchemaError(CombocovError):
    """Schema admits no valid combinations at the requested strength."""


class UndefinedRatioError(CombocovError):
    """A coverage ratio with a zero denominator (e.g. SDCC of an empty target)."""


class IngestionError(CombocovError):
    """Unparseable or inadmissible input data (missing values, bad rows,
    non-finite numbers)."""


class FitError(CombocovError):
    """A derivation artifact could not be fitted from the reference data."""


class DegenerateProjectionError(FitError):
    """Covariance has rank < 2 or tied leading eigenvalues; the 2D projection
    is not uniquely determined."""


class SelectionError(CombocovError):
    """A labeling batch cannot be drawn as requested."""
