"""Exception types raised by the simulator."""

from __future__ import annotations


class BlobError(Exception):
    """Base class for all simulator errors."""


class QuadratureFailure(BlobError):
    """Adaptive quadrature ran out of subdivisions before reaching tolerance."""


class ZeroMass(BlobError):
    """The initial density vanishes at every lattice midpoint."""


class EmptyOmegaMass(BlobError):
    """The kernel density estimate has (numerically) no mass on the domain."""


class DegenerateFit(BlobError):
    """A convergence-order fit was requested on a single distinct N."""


class ConfigError(BlobError):
    """Invalid or incomplete run configuration."""


class IntegrationError(BlobError):
    """Time integration aborted; ``partial`` holds the samples computed so far."""

    def __init__(self, message: str, partial=None):
        super().__init__(message)
        self.partial = partial


class StepSizeUnderflow(IntegrationError):
    pass


class NonConvergence(IntegrationError):
    pass
