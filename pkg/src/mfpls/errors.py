"""Exception taxonomy.

Every error carries a stable ``code`` string; the CLI reports it verbatim in its
error JSON.
"""


class MfplsError(Exception):
    """Base class for all library errors."""

    code = "mfpls_error"


class ValidationError(MfplsError, ValueError):
    code = "validation_error"


class NonSpdGram(MfplsError):
    """The Gram matrix of a basis has a clearly negative eigenvalue."""

    code = "non_spd_gram"


class RankDeficient(MfplsError):
    code = "rank_deficient"


class BasisMismatch(MfplsError, ValueError):
    code = "basis_mismatch"


class DimensionMismatch(MfplsError, ValueError):
    code = "dimension_mismatch"


class ZeroCovariance(MfplsError):
    """No predictor column covaries with the response any more."""

    code = "zero_covariance"


class DegenerateComponent(MfplsError):
    code = "degenerate_component"


class SingularSystem(MfplsError):
    code = "singular_system"


class InsufficientData(MfplsError, ValueError):
    code = "insufficient_data"


class SingleClass(MfplsError, ValueError):
    code = "single_class"


class EmptyNode(MfplsError, ValueError):
    code = "empty_node"


class SingularCovariance(MfplsError):
    code = "singular_covariance"
