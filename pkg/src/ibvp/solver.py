"""Damped Picard iteration for fixed points of T and the two-solution search."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .errors import OperatorEvaluationError
from .kernel import GreenKernel
from .operator import apply_T
from .piecewise import Mesh, PiecewiseC1Function
from .problem import ProblemSpec
from .quadrature import QuadratureConfig

DIVERGENCE_GUARD = 1e8


@dataclass(frozen=True)
class SolveConfig:
    beta: float = 0.5
    tol: float = 1e-8
    max_iter: int = 500
    initial_levels: tuple[float, ...] = (0.1, 1.0, 10.0, 100.0)
    order: int = 17
    max_piece: float = 1.0
    T: float | None = None
    literal: bool = False

    def __post_init__(self):
        if not 0 < self.beta <= 1:
            raise ValueError("beta must lie in (0, 1]")
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be at least 1")
        if not self.initial_levels or any(not a > 0 for a in self.initial_levels):
            raise ValueError("need at least one positive initial level")

    def mesh(self, spec: ProblemSpec) -> Mesh:
        return Mesh.build(spec.impulses.points, self.T, self.order, self.max_piece)


@dataclass
class SolveResult:
    solution: PiecewiseC1Function
    residual: float
    iterations: int
    converged: bool
    norm: float
    positivity_certified: bool
    history: list[float] = field(default_factory=list)
    error: str | None = None
    start: float | None = None


def picard_solve(
    spec: ProblemSpec,
    kernel: GreenKernel,
    x0: PiecewiseC1Function,
    cfg: SolveConfig | None = None,
    quad: QuadratureConfig | None = None,
) -> SolveResult:
    """Iterate x <- (1 - beta) x + beta Tx until the nodal residual drops below tol."""
    cfg = cfg or SolveConfig()
    x = x0
    best, best_res = x0, math.inf
    history: list[float] = []
    error = None
    converged = False
    it = 0
    for it in range(1, cfg.max_iter + 1):
        try:
            Tx = apply_T(spec, kernel, x, quad, cfg.literal).Tx
        except OperatorEvaluationError as exc:
            error = str(exc)
            break
        res = x.node_distance(Tx)
        history.append(res)
        if res < best_res:
            best, best_res = x, res
        if res <= cfg.tol:
            converged = True
            # The undamped image is one more Picard step; keep it if it is no worse.
            try:
                image_res = Tx.node_distance(apply_T(spec, kernel, Tx, quad, cfg.literal).Tx)
            except OperatorEvaluationError:
                image_res = math.inf
            if image_res <= res:
                best, best_res = Tx, image_res
            break
        x = x.combine(1.0 - cfg.beta, Tx, cfg.beta)
        if not math.isfinite(res) or x.node_sup() > DIVERGENCE_GUARD:
            error = "iterates left the divergence guard"
            break
    norm = best.bpc1_norm()
    return SolveResult(
        solution=best,
        residual=best_res,
        iterations=it,
        converged=converged,
        norm=norm,
        positivity_certified=best.node_min() > 0,
        history=history,
        error=error,
    )


@dataclass
class TwoSolutions:
    below: SolveResult | None
    above: SolveResult | None
    runs: list[SolveResult]
    distinct: list[SolveResult]


def find_two_solutions(
    spec: ProblemSpec,
    kernel: GreenKernel,
    q: float,
    cfg: SolveConfig | None = None,
    quad: QuadratureConfig | None = None,
) -> TwoSolutions:
    """Multi-start Picard from constant levels; split converged fixed points by norm against q."""
    if not q > 0:
        raise ValueError("q must be positive")
    cfg = cfg or SolveConfig()
    mesh = cfg.mesh(spec)
    runs = []
    for level in cfg.initial_levels:
        res = picard_solve(spec, kernel, PiecewiseC1Function.constant(mesh, level), cfg, quad)
        res.start = level
        runs.append(res)

    distinct: list[SolveResult] = []
    for res in sorted((r for r in runs if r.converged), key=lambda r: (r.residual, r.start)):
        if all(res.solution.node_distance(d.solution) > 10 * cfg.tol for d in distinct):
            distinct.append(res)
    below = [r for r in distinct if r.norm < q]
    above = [r for r in distinct if r.norm > q]
    return TwoSolutions(below[0] if below else None, above[0] if above else None, runs, distinct)
