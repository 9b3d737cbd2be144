"""Piecewise C^1 functions on [0, inf) with jumps at impulse points.

A :class:`Mesh` cuts [0, T] at 0, every impulse point and T, and further
subdivides long pieces; each piece carries Chebyshev-Lobatto nodes.  A
:class:`PiecewiseC1Function` stores values *and* derivatives at those nodes
(two independent barycentric interpolants) plus a finite limit at infinity.
Beyond T the model is

    x(t)  = x_inf + (x(T) - x_inf) * exp(-(t - T))
    x'(t) = x'(T) * exp(-(t - T))

Functions are left-continuous at impulse points: ``x(t_k) = x(t_k^-)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import minimize_scalar

from .errors import TailModelError

LEFT, RIGHT = "left", "right"


def _lobatto(n: int) -> np.ndarray:
    return -np.cos(np.pi * np.arange(n) / (n - 1))


def _bary_weights(n: int) -> np.ndarray:
    w = (-1.0) ** np.arange(n)
    w[0] *= 0.5
    w[-1] *= 0.5
    return w


def _diff_matrix(x: np.ndarray, w: np.ndarray) -> np.ndarray:
    dx = x[:, None] - x[None, :]
    np.fill_diagonal(dx, 1.0)
    Dm = (w[None, :] / w[:, None]) / dx
    np.fill_diagonal(Dm, 0.0)
    np.fill_diagonal(Dm, -Dm.sum(axis=1))
    return Dm


@dataclass(frozen=True, eq=False)
class Mesh:
    """Piece boundaries on [0, T] and the interpolation nodes on each piece."""

    knots: np.ndarray
    jumps: tuple[float, ...]
    order: int = 17
    ref: np.ndarray = field(init=False, repr=False)
    weights: np.ndarray = field(init=False, repr=False)
    dref: np.ndarray = field(init=False, repr=False)
    nodes: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        knots = np.asarray(self.knots, dtype=float)
        if knots[0] != 0.0 or np.any(np.diff(knots) <= 0):
            raise ValueError("knots must start at 0 and increase strictly")
        if self.order < 4:
            raise ValueError("need at least 4 nodes per piece")
        object.__setattr__(self, "knots", knots)
        ref = _lobatto(self.order)
        w = _bary_weights(self.order)
        object.__setattr__(self, "ref", ref)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "dref", _diff_matrix(ref, w))
        lo, hi = knots[:-1, None], knots[1:, None]
        nodes = lo + 0.5 * (hi - lo) * (ref[None, :] + 1.0)
        nodes[:, 0], nodes[:, -1] = knots[:-1], knots[1:]
        object.__setattr__(self, "nodes", nodes)

    @classmethod
    def build(cls, impulse_points: Sequence[float] = (), T: float | None = None, order: int = 17, max_piece: float = 1.0):
        pts = sorted(float(t) for t in impulse_points)
        if pts and (pts[0] <= 0 or any(b <= a for a, b in zip(pts, pts[1:]))):
            raise ValueError("impulse points must be positive and strictly increasing")
        T = float(T) if T is not None else (pts[-1] if pts else 0.0) + 10.0
        if pts and T <= pts[-1]:
            raise ValueError("T must exceed the last impulse point")
        major = [0.0, *pts, T]
        knots = [0.0]
        for a, b in zip(major, major[1:]):
            n = max(1, math.ceil((b - a) / max_piece - 1e-12))
            knots.extend(np.linspace(a, b, n + 1)[1:])
        return cls(np.asarray(knots), tuple(pts), order)

    @property
    def T(self) -> float:
        return float(self.knots[-1])

    @property
    def pieces(self) -> int:
        return self.knots.size - 1

    def same_as(self, other: "Mesh") -> bool:
        return self is other or (
            self.order == other.order and self.jumps == other.jumps and np.array_equal(self.knots, other.knots)
        )

    def locate(self, t: np.ndarray, side: str) -> np.ndarray:
        """Piece index for every t in [0, T]; ``side`` resolves knots."""
        if side == LEFT:
            j = np.searchsorted(self.knots, t, side="left") - 1
        else:
            j = np.searchsorted(self.knots, t, side="right") - 1
        return np.clip(j, 0, self.pieces - 1)

    def interval_of(self, t: np.ndarray) -> np.ndarray:
        """Index of the impulse interval J_k containing each node/point (0 before t_1)."""
        return np.searchsorted(np.asarray(self.jumps), t, side="left")

    def node_sides(self):
        """Per-node side labels: right at a piece start, left at a piece end."""
        sides = np.full(self.nodes.shape, "", dtype=object)
        sides[:, 0] = RIGHT
        sides[:, -1] = LEFT
        return sides

    def interpolate(self, table: np.ndarray, piece: np.ndarray, t: np.ndarray) -> np.ndarray:
        """Barycentric interpolation of per-piece node data ``table`` (P, N)."""
        lo, hi = self.knots[piece], self.knots[piece + 1]
        x = 2.0 * (t - lo) / (hi - lo) - 1.0
        diff = x[:, None] - self.ref[None, :]
        exact = diff == 0
        with np.errstate(divide="ignore", invalid="ignore"):
            c = self.weights[None, :] / diff
            out = (c * table[piece]).sum(axis=1) / c.sum(axis=1)
        hit = exact.any(axis=1)
        if np.any(hit):
            out[hit] = table[piece[hit]][exact[hit]]
        return out

    def differentiate(self, values: np.ndarray) -> np.ndarray:
        scale = 2.0 / np.diff(self.knots)
        return (values @ self.dref.T) * scale[:, None]


class PiecewiseC1Function:
    """A member of BPC^1 on a fixed mesh; immutable after construction."""

    def __init__(self, mesh: Mesh, values, derivs, x_inf: float, flux_inf: float | None = None):
        self.mesh = mesh
        self.values = np.array(values, dtype=float).reshape(mesh.nodes.shape)
        self.derivs = np.array(derivs, dtype=float).reshape(mesh.nodes.shape)
        self.values.setflags(write=False)
        self.derivs.setflags(write=False)
        self.x_inf = float(x_inf)
        self.flux_inf = None if flux_inf is None else float(flux_inf)

    # -- construction --------------------------------------------------------

    @classmethod
    def constant(cls, mesh: Mesh, c: float) -> "PiecewiseC1Function":
        return cls(mesh, np.full(mesh.nodes.shape, float(c)), np.zeros(mesh.nodes.shape), c, 0.0)

    @classmethod
    def from_callable(
        cls,
        mesh: Mesh,
        fun: Callable | Sequence[Callable],
        dfun: Callable | Sequence[Callable] | None = None,
        x_inf: float | None = None,
        flux_inf: float | None = None,
    ) -> "PiecewiseC1Function":
        """Sample ``fun`` (one callable, or one per impulse interval) on the mesh.

        Without ``dfun`` the derivative channel is the spectral derivative of
        the value interpolant.
        """
        funs = _per_interval(fun, len(mesh.jumps))
        which = mesh.interval_of(0.5 * (mesh.knots[:-1] + mesh.knots[1:]))
        values = np.empty(mesh.nodes.shape)
        for j, k in enumerate(which):
            values[j] = funs[k](mesh.nodes[j])
        if dfun is None:
            derivs = mesh.differentiate(values)
        else:
            dfuns = _per_interval(dfun, len(mesh.jumps))
            derivs = np.empty(mesh.nodes.shape)
            for j, k in enumerate(which):
                derivs[j] = dfuns[k](mesh.nodes[j])
        if x_inf is None:
            with np.errstate(all="ignore"):
                guess = float(np.asarray(funs[-1](np.array([np.inf])))[0])
            x_inf = guess if math.isfinite(guess) else float(values[-1, -1])
        return cls(mesh, values, derivs, x_inf, flux_inf)

    # -- evaluation ----------------------------------------------------------

    def eval(self, t, side: str = LEFT):
        """Return ``(x(t), x'(t))``; at knots ``side`` picks the one-sided limit."""
        if side not in (LEFT, RIGHT):
            raise ValueError(f"side must be 'left' or 'right', got {side!r}")
        scalar = np.ndim(t) == 0
        t = np.atleast_1d(np.asarray(t, dtype=float))
        if np.any(np.isnan(t)) or np.any(t < 0):
            raise TailModelError("evaluation point outside [0, inf]")
        val = np.empty(t.shape)
        der = np.empty(t.shape)
        T = self.mesh.T
        inside = t <= T
        if side == RIGHT:
            inside &= t < T
        if np.any(inside):
            ti = t[inside]
            piece = self.mesh.locate(ti, side)
            val[inside] = self.mesh.interpolate(self.values, piece, ti)
            der[inside] = self.mesh.interpolate(self.derivs, piece, ti)
        tail = ~inside
        if np.any(tail):
            xT, dT = self.values[-1, -1], self.derivs[-1, -1]
            with np.errstate(over="ignore"):
                decay = np.exp(-(t[tail] - T))
            val[tail] = self.x_inf + (xT - self.x_inf) * decay
            der[tail] = dT * decay
        if scalar:
            return float(val[0]), float(der[0])
        return val, der

    def __call__(self, t, side: str = LEFT):
        return self.eval(t, side)[0]

    def derivative(self, t, side: str = LEFT):
        return self.eval(t, side)[1]

    def one_sided(self, t_k: float):
        """``(x(t_k-), x(t_k+), x'(t_k-), x'(t_k+))``."""
        vl, dl = self.eval(t_k, LEFT)
        vr, dr = self.eval(t_k, RIGHT)
        return vl, vr, dl, dr

    def jumps(self) -> list[tuple[float, float]]:
        """``(Delta x, Delta x')`` at every impulse point."""
        out = []
        for t_k in self.mesh.jumps:
            vl, vr, dl, dr = self.one_sided(t_k)
            out.append((vr - vl, dr - dl))
        return out

    # -- algebra -------------------------------------------------------------

    def _check(self, other: "PiecewiseC1Function"):
        if not self.mesh.same_as(other.mesh):
            raise ValueError("functions live on different meshes")

    def combine(self, alpha: float, other: "PiecewiseC1Function", beta: float) -> "PiecewiseC1Function":
        """``alpha * self + beta * other``."""
        self._check(other)
        flux = None
        if self.flux_inf is not None and other.flux_inf is not None:
            flux = alpha * self.flux_inf + beta * other.flux_inf
        return PiecewiseC1Function(
            self.mesh,
            alpha * self.values + beta * other.values,
            alpha * self.derivs + beta * other.derivs,
            alpha * self.x_inf + beta * other.x_inf,
            flux,
        )

    def __add__(self, other):
        return self.combine(1.0, other, 1.0)

    def __sub__(self, other):
        return self.combine(1.0, other, -1.0)

    def __mul__(self, alpha: float):
        flux = None if self.flux_inf is None else alpha * self.flux_inf
        return PiecewiseC1Function(self.mesh, alpha * self.values, alpha * self.derivs, alpha * self.x_inf, flux)

    __rmul__ = __mul__

    def node_distance(self, other: "PiecewiseC1Function") -> float:
        """sup(|x - y| + |x' - y'|) over all mesh nodes (both sides of knots) and at infinity."""
        self._check(other)
        d = np.abs(self.values - other.values) + np.abs(self.derivs - other.derivs)
        return float(max(d.max(), abs(self.x_inf - other.x_inf)))

    def node_sup(self) -> float:
        """sup(|x| + |x'|) over the nodes and |x(inf)|."""
        return float(max((np.abs(self.values) + np.abs(self.derivs)).max(), abs(self.x_inf)))

    def node_min(self) -> float:
        return float(min(self.values.min(), self.x_inf))

    # -- norm ----------------------------------------------------------------

    def bpc1_norm(self, samples_per_piece: int = 64) -> float:
        """sup over [0, inf) of |x| + |x'|, by dense sampling plus one refinement."""
        mesh = self.mesh
        best, where = -1.0, None
        for j in range(mesh.pieces):
            lo, hi = mesh.knots[j], mesh.knots[j + 1]
            ts = np.linspace(lo, hi, samples_per_piece)
            piece = np.full(ts.size, j)
            v = np.abs(mesh.interpolate(self.values, piece, ts)) + np.abs(mesh.interpolate(self.derivs, piece, ts))
            k = int(np.argmax(v))
            if v[k] > best:
                best = float(v[k])
                where = (j, ts[max(k - 1, 0)], ts[min(k + 1, ts.size - 1)])
        j, lo, hi = where
        if hi > lo:

            def neg(t):
                tt, pc = np.array([t]), np.array([j])
                return -(abs(mesh.interpolate(self.values, pc, tt)[0]) + abs(mesh.interpolate(self.derivs, pc, tt)[0]))

            res = minimize_scalar(neg, bounds=(lo, hi), method="bounded", options={"xatol": 1e-10})
            best = max(best, -float(res.fun))
        # |a + b z| + |c| z is convex in z = exp(-(t - T)), so the tail peaks at an end.
        tail = max(abs(self.x_inf), abs(self.values[-1, -1]) + abs(self.derivs[-1, -1]))
        return max(best, tail)


def _per_interval(fun, n_jumps: int) -> list[Callable]:
    if callable(fun):
        return [fun] * (n_jumps + 1)
    funs = list(fun)
    if len(funs) != n_jumps + 1:
        raise ValueError(f"need {n_jumps + 1} callables (one per impulse interval), got {len(funs)}")
    return funs
