"""Green's function of (p x')' = 0 on [0, inf) with Robin-type boundary data.

The homogeneous solutions are

    theta(t) = b1 + a1 * B(0, t)      (left data)
    phi(t)   = b2 + a2 * B(t, inf)    (right data)

with B(t, s) the integral of 1/p over [t, s], and the kernel is
G(t, s) = theta(min(t, s)) * phi(max(t, s)) / D.  One-sided derivatives are
closed-form branch formulas; at t == s the caller must say which side.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.optimize import minimize_scalar

from .errors import DegenerateKernelError, NonIntegrableWeightError, ZeroDenominatorError
from .quadrature import KRONROD_WEIGHTS, NODES, QuadratureConfig, integrate_cells, integrate_tail

LEFT, RIGHT = "left", "right"


@dataclass(frozen=True)
class SLCoefficients:
    """Boundary coefficients and the weight p (a numpy-vectorised callable)."""

    a1: float
    a2: float
    b1: float
    b2: float
    p: Callable

    def __post_init__(self):
        for name in ("a1", "a2", "b1", "b2"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v >= 0):
                raise ValueError(f"{name} must be a nonnegative finite number, got {v!r}")


def _cache_edges() -> np.ndarray:
    near = np.linspace(0.0, 5.0, 101)
    mid = np.linspace(5.0, 50.0, 181)[1:]
    far = np.geomspace(50.0, 1e15, 110)[1:]
    return np.concatenate([near, mid, far])


def _as_out(value: np.ndarray, scalar: bool):
    return float(value) if scalar else value


def _check_side(side):
    if side not in (LEFT, RIGHT):
        raise ValueError(f"side must be 'left' or 'right' when t == s, got {side!r}")


class GreenKernel:
    """Evaluate theta, phi, G, its one-sided derivatives and derived constants.

    Construction integrates 1/p once on a fixed monotone grid; every later
    evaluation of B(0, t) adds one 15-point panel from the nearest grid node,
    so evaluations are pure functions of the cached state.
    """

    def __init__(self, coefficients: SLCoefficients, quad: QuadratureConfig | None = None):
        self.coefficients = coefficients
        self.quad = quad or QuadratureConfig()
        self._edges = _cache_edges()
        cells = integrate_cells(self.inverse_weight, self._edges, self.quad)
        if not cells.all_converged:
            raise NonIntegrableWeightError("1/p is not integrable on a finite cell", cells.first_failure())
        tail = integrate_tail(self.inverse_weight, float(self._edges[-1]), self.quad)
        if not tail.all_converged:
            raise NonIntegrableWeightError("the integral of 1/p over [0, inf) diverges", tail.first_failure())
        self._cum = np.concatenate([[0.0], np.cumsum(cells.values[0])])
        self.B0inf = float(self._cum[-1] + tail.values[0, 0])

        c = coefficients
        self.D = c.a2 * c.b1 + c.a1 * c.b2 + c.a1 * c.a2 * self.B0inf
        if not self.D > 1e-12 * max(1.0, c.b1 + c.b2):
            raise DegenerateKernelError(self.D)

    # -- weight and B ------------------------------------------------------

    def p(self, t):
        with np.errstate(over="ignore"):
            return np.asarray(self.coefficients.p(np.asarray(t, dtype=float)), dtype=float) * np.ones(np.shape(t))

    def inverse_weight(self, s):
        pv = self.p(s)
        if np.any(~(pv > 0)):
            bad = np.broadcast_to(np.asarray(s), pv.shape)[~(pv > 0)].ravel()[0]
            raise NonIntegrableWeightError(f"p is not positive at t={bad!r}", float(bad))
        return 1.0 / pv

    def _b0(self, t: np.ndarray) -> np.ndarray:
        shape = np.shape(t)
        t = np.atleast_1d(np.asarray(t, dtype=float)).ravel()
        if np.any(t < 0) or np.any(np.isnan(t)):
            raise ValueError("B(0, t) needs t >= 0")
        out = np.empty(t.shape)
        inf = np.isposinf(t)
        out[inf] = self.B0inf
        top = self._edges[-1]
        near = ~inf & (t <= top)
        if np.any(near):
            tn = t[near]
            j = np.clip(np.searchsorted(self._edges, tn, side="right") - 1, 0, self._edges.size - 2)
            lo = self._edges[j]
            half = 0.5 * (tn - lo)
            nodes = (lo + half)[:, None] + half[:, None] * NODES[None, :]
            piece = (self.inverse_weight(nodes) @ KRONROD_WEIGHTS) * half
            out[near] = self._cum[j] + piece
        far = ~inf & (t > top)
        for idx in np.flatnonzero(far):
            res = integrate_tail(self.inverse_weight, float(t[idx]), self.quad)
            out[idx] = self.B0inf - res.values[0, 0]
        return out.reshape(shape)

    def b_integral(self, t, s):
        """B(t, s) = integral of 1/p over [t, s]; ``s`` may be ``inf``."""
        scalar = np.ndim(t) == 0 and np.ndim(s) == 0
        t, s = np.broadcast_arrays(np.asarray(t, dtype=float), np.asarray(s, dtype=float))
        if np.any(t > s):
            raise ValueError("b_integral needs t <= s")
        out = np.where(t == s, 0.0, self._b0(s) - self._b0(t))
        return _as_out(out, scalar)

    # -- homogeneous solutions ---------------------------------------------

    def theta(self, t):
        c = self.coefficients
        return _as_out(c.b1 + c.a1 * self._b0(t), np.ndim(t) == 0)

    def phi(self, t):
        c = self.coefficients
        return _as_out(c.b2 + c.a2 * (self.B0inf - self._b0(t)), np.ndim(t) == 0)

    def theta_prime(self, t):
        return _as_out(self.coefficients.a1 / self.p(t), np.ndim(t) == 0)

    def phi_prime(self, t):
        return _as_out(-self.coefficients.a2 / self.p(t), np.ndim(t) == 0)

    @property
    def theta_inf(self) -> float:
        return self.coefficients.b1 + self.coefficients.a1 * self.B0inf

    @property
    def phi_inf(self) -> float:
        return self.coefficients.b2

    def coupling_D(self) -> float:
        return self.D

    # -- kernel ------------------------------------------------------------

    def green(self, t, s):
        scalar = np.ndim(t) == 0 and np.ndim(s) == 0
        t, s = np.broadcast_arrays(np.asarray(t, dtype=float), np.asarray(s, dtype=float))
        lo, hi = np.minimum(t, s), np.maximum(t, s)
        return _as_out(np.asarray(self.theta(lo)) * np.asarray(self.phi(hi)) / self.D, scalar)

    def _branch(self, t, s, side):
        """Boolean mask of points on the t < s branch (t -> s from the left at t == s)."""
        t, s = np.broadcast_arrays(np.asarray(t, dtype=float), np.asarray(s, dtype=float))
        tie = t == s
        if np.any(tie):
            _check_side(side)
        below = (t < s) | (tie & (side == LEFT))
        return t, s, below

    def green_dt(self, t, s, side: str | None = None):
        """dG/dt; the t < s branch is a1*phi(s)/(D p(t)), the t > s branch -a2*theta(s)/(D p(t))."""
        scalar = np.ndim(t) == 0 and np.ndim(s) == 0
        t, s, below = self._branch(t, s, side)
        c = self.coefficients
        num = np.where(below, c.a1 * np.asarray(self.phi(s)), -c.a2 * np.asarray(self.theta(s)))
        return _as_out(num / (self.D * self.p(t)), scalar)

    def green_ds(self, t, s, side: str | None = None):
        """dG/ds.  ``side`` says how t approaches s when they coincide."""
        scalar = np.ndim(t) == 0 and np.ndim(s) == 0
        t, s, below = self._branch(t, s, side)
        c = self.coefficients
        # t < s means s is on the phi side of the kernel.
        num = np.where(below, -c.a2 * np.asarray(self.theta(t)), c.a1 * np.asarray(self.phi(t)))
        return _as_out(num / (self.D * self.p(s)), scalar)

    def green_bar(self, s):
        """Limit of G(t, s) as t -> inf."""
        return _as_out(self.coefficients.b2 * np.asarray(self.theta(s)) / self.D, np.ndim(s) == 0)

    def green_bar_prime(self, s):
        return _as_out(self.coefficients.b2 * self.coefficients.a1 / (self.D * self.p(s)), np.ndim(s) == 0)

    def gs_diagonal(self, t, variant: str = "max"):
        """One-sided magnitudes of p(t) G_s(t', t) at t' = t, combined by max or min."""
        c = self.coefficients
        right = c.a1 * np.asarray(self.phi(t))
        left = c.a2 * np.asarray(self.theta(t))
        out = np.maximum(right, left) if variant == "max" else np.minimum(right, left)
        return _as_out(out / self.D, np.ndim(t) == 0)

    # -- constants ---------------------------------------------------------

    def constant_c(self) -> float:
        c = self.coefficients
        denom = min(c.b1, c.b2)
        if denom == 0:
            raise ZeroDenominatorError("c = max{a1,a2}/min{b1,b2} needs min{b1,b2} > 0")
        return max(c.a1, c.a2) / denom

    def constant_w(self, a: float, b: float) -> float:
        if not (0 < a < b < math.inf):
            raise ValueError(f"need 0 < a < b < inf, got [{a}, {b}]")
        c = self.coefficients
        left = (c.b1 + c.a1 * self.b_integral(0.0, a)) / (c.b1 + c.a1 * self.B0inf)
        right = (c.b2 + c.a2 * self.b_integral(b, math.inf)) / (c.b2 + c.a2 * self.B0inf)
        w = min(left, right)
        if not 0 < w < 1:
            raise ValueError(f"w={w!r} is outside (0, 1) for [{a}, {b}]")
        return w

    def sup_inverse_weight(self, T: float = 50.0) -> float:
        """sup of 1/p over [0, inf): dense grid on [0, T], refinement near the argmax, far probes."""
        grid = np.concatenate([np.linspace(0.0, T, 2001), np.geomspace(T, 1e12, 200)[1:]])
        vals = self.inverse_weight(grid)
        k = int(np.argmax(vals))
        best = float(vals[k])
        lo, hi = grid[max(k - 1, 0)], grid[min(k + 1, grid.size - 1)]
        if hi > lo:
            res = minimize_scalar(
                lambda t: -float(self.inverse_weight(np.array([t]))[0]),
                bounds=(lo, hi),
                method="bounded",
                options={"xatol": 1e-12},
            )
            best = max(best, -float(res.fun))
        return best
