"""Exception hierarchy shared by every module."""


class LiouvilleError(Exception):
    """Base class for all library errors."""


class MonotonicityError(LiouvilleError):
    """A base or denominator sequence failed to increase where it must."""


class PrefixExhausted(LiouvilleError):
    """A finite prefix or scan budget ran out before the request was met."""


class GrowthError(LiouvilleError):
    """A growth attestation (d_{m+1} >= 2 d_m, q_{n+1} > q_n^{u_n}) failed."""


class HypothesisViolation(LiouvilleError):
    """Inputs do not satisfy the hypotheses of the requested construction."""


class CriterionNotMet(LiouvilleError):
    """No index satisfied the growth criterion within the scan budget."""


class PrecisionExhausted(LiouvilleError):
    """Refinement hit the precision budget before a comparison separated."""


class RationalHit(LiouvilleError):
    """An approximation collapsed onto its target (b * xi == a)."""


class SpecError(LiouvilleError):
    """A sequence, number or exponent spec string could not be parsed."""


class CertificateError(LiouvilleError):
    """A certificate is malformed or does not re-verify."""
