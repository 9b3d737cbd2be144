"""Green's-function machinery, fixed-point solver and existence checks for impulsive BVPs on [0, inf)."""

from .kernel import GreenKernel, SLCoefficients
from .piecewise import Mesh, PiecewiseC1Function
from .problem import ImpulseSet, ProblemSpec, validate
from .quadrature import IntegralEstimate, QuadratureConfig

__version__ = "0.1.0"

__all__ = [
    "GreenKernel",
    "SLCoefficients",
    "Mesh",
    "PiecewiseC1Function",
    "ImpulseSet",
    "ProblemSpec",
    "validate",
    "IntegralEstimate",
    "QuadratureConfig",
    "__version__",
]
