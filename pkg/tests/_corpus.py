"""Problem instances shared by the test modules."""

import math

import numpy as np

from ibvp.kernel import GreenKernel, SLCoefficients
from ibvp.problem import ImpulseSet, ProblemSpec

EXAMPLE = (1.0, 0.0, 1.0, 1.0)
COEFFICIENT_SETS = {
    "example": (1.0, 0.0, 1.0, 1.0, np.exp),
    "symmetric": (1.0, 1.0, 1.0, 1.0, np.exp),
    "algebraic": (2.0, 1.0, 3.0, 1.0, lambda t: (1.0 + t) ** 2),
}


def kernel(name="example", quad=None):
    a1, a2, b1, b2, p = COEFFICIENT_SETS[name]
    return GreenKernel(SLCoefficients(a1, a2, b1, b2, p), quad)


def const(c):
    return lambda *args: np.full(np.broadcast(*args).shape, float(c)) if args else float(c)


def example_spec(coeffs=None):
    co = coeffs or kernel().coefficients

    def k(t):
        with np.errstate(over="ignore"):
            return np.exp(-t) / (np.exp(t) - 2)

    return ProblemSpec(
        co,
        f=lambda t, x, y: k(t) + 0 * x + 0 * y,
        k=k,
        h=const(1.0),
        g1=lambda x: x**2 / (40 * math.pi),
        g2=lambda x: x**4 / (8000 * math.pi),
        psi=lambda t: 1 / (1 + t * t),
        impulses=ImpulseSet.from_lists([0.5], [lambda x: x / 100], [lambda x: 1 / x / (2 - math.exp(-0.5))]),
    )


def contraction_spec(coeffs=None):
    co = coeffs or kernel().coefficients
    return ProblemSpec(
        co,
        f=lambda t, x, y: 0.25 * np.exp(-2 * t) * (1 + np.sin(x) ** 2) + 0 * y,
        k=lambda t: np.exp(-2 * t),
        h=lambda x, y: 0.25 * (1 + np.sin(x) ** 2) + 0 * y,
        g1=lambda x: 0.01 * np.arctan(x),
        g2=lambda x: 0.01 * np.arctan(x),
        psi=lambda t: np.exp(-t),
        impulses=ImpulseSet.from_lists([0.5], [lambda x: x / 100], [lambda x: x / (100 * (1 + x))]),
    )


def constant_map_spec(coeffs=None, t1=0.5, I=0.1, Ibar=0.2):
    """f independent of (x, x'), constant g's and impulses: T maps everything to one function."""
    co = coeffs or kernel().coefficients
    return ProblemSpec(
        co,
        f=lambda t, x, y: np.exp(-2 * t) + 0 * x,
        k=lambda t: np.exp(-2 * t),
        h=const(1.0),
        g1=const(0.05),
        g2=const(0.02),
        psi=lambda t: np.exp(-t),
        impulses=ImpulseSet.from_lists([t1], [const(I)], [const(Ibar)]),
    )


def zero_spec(coeffs=None, points=()):
    co = coeffs or kernel().coefficients
    n = len(points)
    return ProblemSpec(co, impulses=ImpulseSet.from_lists(points, [const(0)] * n, [const(0)] * n))
