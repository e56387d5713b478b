"""Exception types shared across the package."""


class ProjrobError(Exception):
    """Base class for all package-specific errors."""


class DimensionError(ProjrobError):
    """Operator dimensions are inconsistent with the requested operation."""


class DomainError(ProjrobError):
    """Input is outside the mathematical domain of the operation."""


class ConfigError(ProjrobError):
    """Malformed configuration, unknown factory or theory name."""


class SolverError(ProjrobError):
    """The conic solver failed in a way the caller cannot recover from."""


class DualDegenerateError(SolverError):
    """Extracted dual variables fail the complementary-slackness re-check."""


class CertificateError(ProjrobError):
    """A constructed object fails its feasibility/freeness certificate."""


class NoGoError(ProjrobError):
    """A requested transformation is provably impossible.

    Carries the monotone values that witness the impossibility.
    """

    def __init__(self, message, witness=None):
        super().__init__(message)
        self.witness = witness


class NotGoldenError(ProjrobError):
    """A target state fails the maximal-resourcefulness identities.

    Carries the two computed values whose mismatch triggered the failure.
    """

    def __init__(self, message, values=None):
        super().__init__(message)
        self.values = values


class TheoremViolationError(ProjrobError):
    """A numerically verified identity failed outside tolerance.

    This always indicates a bug (solver, dual extraction, or construction),
    never an acceptable numerical outcome.
    """
