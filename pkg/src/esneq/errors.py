"""Exception hierarchy for esneq.

Every numerical failure mode raised by this package derives from
:class:`EsneqError`, so callers (notably the CLI) can map any of them to a
single "numerical failure" exit path.
"""


class EsneqError(Exception):
    """Base class for all esneq errors."""


class NonSymmetric(EsneqError):
    """Input matrix failed the symmetry check of the eigensolver."""


class NoConvergence(EsneqError):
    """An iterative routine hit its iteration cap.

    The best iterate found so far is attached as ``best`` (may be None).
    """

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best


class SingularSystem(EsneqError):
    """Unregularized least-squares system was too ill-conditioned."""


class SpectralNull(EsneqError):
    """Channel frequency response vanishes at a sample point.

    ``index`` holds the offending frequency bin.
    """

    def __init__(self, message, index=None):
        super().__init__(message)
        self.index = index


class BadProfile(EsneqError):
    """Tapped-delay-line profile is malformed."""


class LengthMismatch(EsneqError):
    """Sample vectors of inconsistent length."""


class OrderError(EsneqError):
    """Rational approximation orders violate the proper constraint K' < K."""


class RepeatedPoles(EsneqError):
    """Denominator roots remain clustered after the perturbation pass."""


class NearPoleOnCircle(EsneqError):
    """Evaluation point sits (numerically) on a pole of the transfer function."""


class UnstablePole(EsneqError):
    """A pole with magnitude above the stability cap reached ESN assembly."""


class DegenerateReservoir(EsneqError):
    """Sparsified reservoir has (numerically) zero spectral radius."""


class ReadoutMissing(EsneqError):
    """predict() called on a model whose readout was never trained."""


class ShapeMismatch(EsneqError):
    """Grids of different shapes compared."""


class IndexOutOfRange(EsneqError):
    """Symbol index exceeds the constellation size."""


class SchemaError(EsneqError):
    """CSV input does not match the expected schema."""


class ConfigError(EsneqError):
    """Experiment configuration is invalid."""
