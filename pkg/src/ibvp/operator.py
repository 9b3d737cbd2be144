"""The fixed-point operator T and the residuals of the boundary value problem.

For a candidate x,

    (Tx)(t) = int G(t,s) p(s) F(s) ds + phi(t)/D int g1(x)psi + theta(t)/D int g2(x)psi
              + sum_k w_k G(t,t_k) Ibar_k + sum_k p(t_k) G_s(t,t_k) I_k

with F(s) = f(s, x(s), x'(s)) and x(t_k) = x(t_k^-).  With ``w_k = p(t_k)``
(the default) every fixed point has Delta x' = -Ibar_k at t_k; ``literal=True``
uses ``w_k = 1``, which gives Delta x' = -Ibar_k / p(t_k) instead.

The kernel integral splits through G into theta/phi products:

    int G(t,s) p F ds = [phi(t) A(t) + theta(t) B(t)] / D,
    A(t) = int_0^t theta p F,   B(t) = int_t^inf phi p F,

so one pass of cell integrals between consecutive mesh nodes gives the value
and the derivative of every term at every node.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import IBVPError, OperatorEvaluationError, ProbePlacementError, QuadratureEvaluationError
from .kernel import LEFT, RIGHT, GreenKernel
from .piecewise import Mesh, PiecewiseC1Function
from .problem import ProblemSpec, weighted
from .quadrature import QuadratureConfig, integrate_cells, integrate_half_line, integrate_tail

TERMS = ("kernel", "g1", "g2", "ibar", "i")


@dataclass
class OperatorResult:
    """Tx on the mesh of x, plus the five summands at every node (value channel)."""

    Tx: PiecewiseC1Function
    terms: dict[str, np.ndarray]
    dterms: dict[str, np.ndarray]
    integrals: dict[str, float]
    diagnostics: dict = field(default_factory=dict)


def _impulse_weights(kernel: GreenKernel, points: Sequence[float], literal: bool) -> np.ndarray:
    if literal:
        return np.ones(len(points))
    return np.asarray(kernel.p(np.asarray(points, dtype=float)), dtype=float).reshape(-1)


def impulse_amplitudes(spec: ProblemSpec, x: PiecewiseC1Function) -> tuple[np.ndarray, np.ndarray]:
    """(I_k(x(t_k)), Ibar_k(x(t_k))) for every impulse, with x(t_k) = x(t_k^-)."""
    I, Ib = [], []
    for imp in spec.impulses:
        xk = x(imp.t, LEFT)
        try:
            I.append(float(imp.I(xk)))
            Ib.append(float(imp.Ibar(xk)))
        except IBVPError as exc:
            raise OperatorEvaluationError("impulse", imp.t, str(exc)) from exc
        if not (math.isfinite(I[-1]) and math.isfinite(Ib[-1])):
            raise OperatorEvaluationError("impulse", imp.t, "non-finite impulse value")
    return np.asarray(I), np.asarray(Ib)


def _integrands(spec: ProblemSpec, kernel: GreenKernel, x: PiecewiseC1Function):
    def g(s):
        s = np.asarray(s, dtype=float)
        xv, dv = x.eval(s)
        ps = kernel.p(s)
        try:
            F = spec.values("f", s, xv, dv)
            g1 = spec.values("g1", xv)
            g2 = spec.values("g2", xv)
            psi = spec.values("psi", s)
        except IBVPError as exc:
            raise OperatorEvaluationError("integrand", None, str(exc)) from exc
        pF = weighted(ps, F)
        th = np.asarray(kernel.theta(s))
        ph = np.asarray(kernel.phi(s))
        return np.stack([th * pF, ph * pF, g1 * psi, g2 * psi])

    return g


def apply_T(
    spec: ProblemSpec,
    kernel: GreenKernel,
    x: PiecewiseC1Function,
    quad: QuadratureConfig | None = None,
    literal: bool = False,
) -> OperatorResult:
    """Evaluate Tx at every node of x's mesh (both sides of every knot)."""
    quad = quad or QuadratureConfig()
    mesh = x.mesh
    if tuple(spec.impulses.points) != mesh.jumps:
        raise ValueError("the mesh must break exactly at the impulse points")
    c = kernel.coefficients
    D = kernel.D
    nodes = mesh.nodes
    P, N = nodes.shape

    g = _integrands(spec, kernel, x)
    edges = np.concatenate([nodes[:, :-1].ravel(), [mesh.T]])
    try:
        cells = integrate_cells(g, edges, quad, ncomp=4)
        tail = integrate_tail(g, mesh.T, quad, ncomp=4)
    except QuadratureEvaluationError as exc:
        raise OperatorEvaluationError("integrand", exc.abscissa, str(exc)) from exc
    if not cells.all_converged:
        raise OperatorEvaluationError("integral", cells.first_failure(), "quadrature did not converge")
    if not tail.all_converged:
        raise OperatorEvaluationError("integral", tail.first_failure(), "tail quadrature did not converge")

    cum = np.concatenate([np.zeros((4, 1)), np.cumsum(cells.values, axis=1)], axis=1)
    totals = cum[:, -1] + tail.values[:, 0]
    # Node (j, i) sits at edge index j*(N-1) + i.
    idx = np.arange(P)[:, None] * (N - 1) + np.arange(N)[None, :]
    A = cum[0][idx]
    Bt = totals[1] - cum[1][idx]
    int_g1, int_g2 = float(totals[2]), float(totals[3])
    A_inf = float(totals[0])

    th = np.asarray(kernel.theta(nodes))
    ph = np.asarray(kernel.phi(nodes))
    dth = np.asarray(kernel.theta_prime(nodes))
    dph = np.asarray(kernel.phi_prime(nodes))

    terms = {
        "kernel": (ph * A + th * Bt) / D,
        "g1": ph * int_g1 / D,
        "g2": th * int_g2 / D,
        "ibar": np.zeros_like(nodes),
        "i": np.zeros_like(nodes),
    }
    dterms = {
        "kernel": (dph * A + dth * Bt) / D,
        "g1": dph * int_g1 / D,
        "g2": dth * int_g2 / D,
        "ibar": np.zeros_like(nodes),
        "i": np.zeros_like(nodes),
    }

    pts = np.asarray(spec.impulses.points, dtype=float)
    I, Ib = impulse_amplitudes(spec, x)
    wk = _impulse_weights(kernel, pts, literal)
    # Piece-start nodes see t_k from the right, piece-end nodes from the left.
    for k, t_k in enumerate(pts):
        after = np.zeros(nodes.shape, dtype=bool)
        piece_lo = mesh.knots[:-1, None] * np.ones((1, N))
        after[:] = (nodes > t_k) | ((nodes == t_k) & (piece_lo == t_k))
        th_k = kernel.theta(t_k)
        ph_k = kernel.phi(t_k)
        # G(t, t_k) and its t-derivative, branch by side.
        G = np.where(after, th_k * ph, th * ph_k) / D
        Gt = np.where(after, th_k * dph, dth * ph_k) / D
        terms["ibar"] += wk[k] * Ib[k] * G
        dterms["ibar"] += wk[k] * Ib[k] * Gt
        # p(t_k) G_s(t, t_k): a1 phi(t)/D after t_k, -a2 theta(t)/D before.
        Hs = np.where(after, c.a1 * ph, -c.a2 * th) / D
        dHs = np.where(after, c.a1 * dph, -c.a2 * dth) / D
        terms["i"] += I[k] * Hs
        dterms["i"] += I[k] * dHs

    value = sum(terms[n] for n in TERMS)
    deriv = sum(dterms[n] for n in TERMS)

    # Limits at infinity from the closed forms of G-bar and its derivative.
    gb = np.asarray(kernel.green_bar(pts)) if pts.size else np.zeros(0)
    th_pts = np.asarray(kernel.theta(pts)) if pts.size else np.zeros(0)
    x_inf = (
        c.b2 * A_inf / D
        + c.b2 * int_g1 / D
        + kernel.theta_inf * int_g2 / D
        + float(np.sum(gb * wk * Ib))
        + float(np.sum(c.a1 * c.b2 / D * I))
    )
    flux_inf = (
        -c.a2 * A_inf - c.a2 * int_g1 + c.a1 * int_g2 - float(np.sum(c.a2 * th_pts * wk * Ib)) - c.a1 * c.a2 * float(np.sum(I))
    ) / D

    Tx = PiecewiseC1Function(mesh, value, deriv, x_inf, flux_inf)
    diagnostics = {
        "cells": int(cells.values.shape[1]),
        "panels": int(cells.panels.sum() + tail.panels.sum()),
        "error_estimate": float(cells.errors.sum() + tail.errors.sum()),
    }
    integrals = {"A_inf": A_inf, "g1_psi": int_g1, "g2_psi": int_g2}
    return OperatorResult(Tx, terms, dterms, integrals, diagnostics)


def apply_T_at(
    spec: ProblemSpec,
    kernel: GreenKernel,
    x: PiecewiseC1Function,
    t: float,
    side: str = LEFT,
    quad: QuadratureConfig | None = None,
    literal: bool = False,
) -> dict[str, float]:
    """Reference evaluation of the five summands of Tx at one point.

    Every integral is an independent half-line quadrature with breakpoints at
    t and every t_k; slower than :func:`apply_T` but structurally separate.
    """
    quad = quad or QuadratureConfig()
    pts = list(spec.impulses.points)
    c = kernel.coefficients

    def F(s):
        xv, dv = x.eval(s)
        return spec.values("f", s, xv, dv)

    def run(term, fn, bps):
        try:
            est = integrate_half_line(fn, bps, quad)
        except QuadratureEvaluationError as exc:
            raise OperatorEvaluationError(term, exc.abscissa, str(exc)) from exc
        if not est.converged:
            raise OperatorEvaluationError(term, est.divergence_hint, "quadrature did not converge")
        return est.value

    kern = run("kernel", lambda s: kernel.green(t, s) * weighted(kernel.p(s), F(s)), sorted({*pts, t}))
    i1 = run("g1", lambda s: spec.values("g1", x(s)) * spec.values("psi", s), pts)
    i2 = run("g2", lambda s: spec.values("g2", x(s)) * spec.values("psi", s), pts)
    I, Ib = impulse_amplitudes(spec, x)
    wk = _impulse_weights(kernel, pts, literal)
    ibar = 0.0
    iterm = 0.0
    for k, t_k in enumerate(pts):
        ibar += wk[k] * Ib[k] * kernel.green(t, t_k)
        pk = float(kernel.p(t_k))
        iterm += pk * kernel.green_ds(t, t_k, side if t == t_k else None) * I[k]
    return {
        "kernel": kern,
        "g1": kernel.phi(t) * i1 / kernel.D,
        "g2": kernel.theta(t) * i2 / kernel.D,
        "ibar": ibar,
        "i": iterm,
    }


# -- residuals -----------------------------------------------------------------


def residual_norm(
    spec: ProblemSpec,
    kernel: GreenKernel,
    x: PiecewiseC1Function,
    quad: QuadratureConfig | None = None,
    literal: bool = False,
) -> float:
    """sup(|x - Tx| + |x' - (Tx)'|) over the shared nodes and at infinity."""
    return x.node_distance(apply_T(spec, kernel, x, quad, literal).Tx)


def ode_residual(
    spec: ProblemSpec,
    kernel: GreenKernel,
    x: PiecewiseC1Function,
    probe_times: Sequence[float],
    step: float = 1e-4,
) -> np.ndarray:
    """Central-difference estimate of (1/p)(p x')' + f(t, x, x') at each probe."""
    probes = np.asarray(probe_times, dtype=float)
    pts = np.asarray(spec.impulses.points, dtype=float)
    for t in probes:
        if t - 2 * step < 0:
            raise ProbePlacementError(f"probe t={t} is closer than two steps to t=0")
        if pts.size and np.min(np.abs(pts - t)) < 2 * step:
            raise ProbePlacementError(f"probe t={t} is closer than two steps to an impulse point")
    hi, lo = probes + step, probes - step
    flux_hi = kernel.p(hi) * x.derivative(hi)
    flux_lo = kernel.p(lo) * x.derivative(lo)
    xv, dv = x.eval(probes)
    return (flux_hi - flux_lo) / (2 * step * kernel.p(probes)) + spec.values("f", probes, xv, dv)


def _boundary_integrals(spec: ProblemSpec, x: PiecewiseC1Function, quad: QuadratureConfig | None):
    out = []
    for name in ("g1", "g2"):
        est = integrate_half_line(
            lambda s, n=name: spec.values(n, x(s)) * spec.values("psi", s), spec.impulses.points, quad
        )
        if not est.converged:
            raise OperatorEvaluationError(name, est.divergence_hint, "quadrature did not converge")
        out.append(est.value)
    return out


def boundary_residuals(
    spec: ProblemSpec, kernel: GreenKernel, x: PiecewiseC1Function, quad: QuadratureConfig | None = None
) -> tuple[float, float]:
    """Defects of both integral boundary conditions.

    lim p x' at infinity is the stored ``flux_inf`` of x; without one the
    value p(T) x'(T) at the end of the mesh stands in.
    """
    c = kernel.coefficients
    int1, int2 = _boundary_integrals(spec, x, quad)
    x0, d0 = x.eval(0.0, RIGHT)
    flux0 = float(kernel.p(0.0)) * d0
    if x.flux_inf is not None:
        flux_inf = x.flux_inf
    else:
        T = x.mesh.T
        flux_inf = float(kernel.p(T)) * x.derivative(T)
    r_left = c.a1 * x0 - c.b1 * flux0 - int1
    r_right = c.a2 * x.x_inf + c.b2 * flux_inf - int2
    return float(r_left), float(r_right)


def jump_residuals(spec: ProblemSpec, x: PiecewiseC1Function) -> list[tuple[float, float]]:
    """Per impulse: (|Delta x - I_k(x(t_k))|, |Delta x' + Ibar_k(x(t_k))|)."""
    out = []
    for imp, (dx, ddx) in zip(spec.impulses, x.jumps()):
        xk = x(imp.t, LEFT)
        out.append((abs(dx - float(imp.I(xk))), abs(ddx + float(imp.Ibar(xk)))))
    return out
