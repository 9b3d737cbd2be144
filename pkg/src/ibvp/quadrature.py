"""Adaptive Gauss-Kronrod quadrature on finite panels and on [0, inf).

Every panel is integrated with the 15-point Kronrod rule and its embedded
7-point Gauss rule; their discrepancy (scaled as in QUADPACK) is the panel
error estimate.  Panels that miss their share of the tolerance are bisected.
A panel still failing at ``max_depth`` is taken as evidence of a
non-integrable singularity: the estimate comes back with
``converged=False`` and a ``divergence_hint`` at that panel's midpoint,
and no principal value is ever guessed.

All routines are vectorised over panels, so the integrand receives 1-D
arrays of abscissae and must return an array of the same length (or a
``(ncomp, n)`` array for the batched vector routines).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import QuadratureEvaluationError

_EPS = np.finfo(float).eps
_UFLOW = np.finfo(float).tiny

# QUADPACK qk15 abscissae (positive half) and weights.
_XGK = np.array([
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
])
_WGK = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
])
_WG = np.array([
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
])

# Full 15-point layout: -x1..-x7, 0, x7..x1 ordered ascending.
NODES = np.concatenate([-_XGK[:7], [0.0], _XGK[:7][::-1]])
KRONROD_WEIGHTS = np.concatenate([_WGK[:7], [_WGK[7]], _WGK[:7][::-1]])
GAUSS_WEIGHTS = np.zeros(15)
# Gauss nodes are the odd-indexed Kronrod abscissae x2, x4, x6 and 0.
for _j, _w in zip((1, 3, 5), _WG[:3]):
    GAUSS_WEIGHTS[_j] = _w
    GAUSS_WEIGHTS[14 - _j] = _w
GAUSS_WEIGHTS[7] = _WG[3]


@dataclass(frozen=True)
class QuadratureConfig:
    """Tolerances and limits for the adaptive integrator.

    ``tail_split`` is the point T where the half-line is cut into a finite
    part and a mapped tail; ``None`` means "largest breakpoint + 10".
    """

    atol: float = 1e-10
    rtol: float = 1e-8
    max_depth: int = 40
    tail_split: float | None = None
    nodes_per_panel: int = 15
    max_panels: int = 20000

    def __post_init__(self):
        if not (self.atol > 0 and self.rtol > 0):
            raise ValueError("atol and rtol must be positive")
        if self.max_depth < 1:
            raise ValueError("max_depth must be at least 1")
        if self.nodes_per_panel != 15:
            raise ValueError("only the 15-point Kronrod rule is available")
        if self.tail_split is not None and not self.tail_split > 0:
            raise ValueError("tail_split must be positive")

    def tail_point(self, breakpoints: Sequence[float] = ()) -> float:
        top = max(breakpoints, default=0.0)
        if self.tail_split is None:
            return float(top) + 10.0
        if self.tail_split <= top:
            raise ValueError(f"tail_split={self.tail_split} must exceed the largest breakpoint {top}")
        return float(self.tail_split)


@dataclass(frozen=True)
class IntegralEstimate:
    value: float
    error_estimate: float
    converged: bool
    panels_used: int
    divergence_hint: float | None = None

    def __add__(self, other: "IntegralEstimate") -> "IntegralEstimate":
        hint = self.divergence_hint if self.divergence_hint is not None else other.divergence_hint
        return IntegralEstimate(
            self.value + other.value,
            self.error_estimate + other.error_estimate,
            self.converged and other.converged,
            self.panels_used + other.panels_used,
            hint,
        )


@dataclass
class BatchResult:
    """Per-interval results of a batched integration (vector integrands)."""

    values: np.ndarray  # (ncomp, m)
    errors: np.ndarray  # (m,)
    converged: np.ndarray  # (m,) bool
    panels: np.ndarray  # (m,) int
    hints: list  # (m,) float | None

    @property
    def all_converged(self) -> bool:
        return bool(np.all(self.converged))

    def first_failure(self) -> float | None:
        for ok, h in zip(self.converged, self.hints):
            if not ok:
                return h
        return None


def _gk_panels(g: Callable, a: np.ndarray, b: np.ndarray):
    """Apply the 15-point rule to every panel [a_i, b_i] in one call of ``g``."""
    half = 0.5 * (b - a)
    centre = 0.5 * (a + b)
    s = centre[:, None] + half[:, None] * NODES[None, :]
    fv = np.asarray(g(s.ravel()), dtype=float)
    fv = fv.reshape(-1, a.size, 15)
    if not np.all(np.isfinite(fv)):
        bad = np.argwhere(~np.isfinite(fv))[0]
        raise QuadratureEvaluationError(float(s[bad[1], bad[2]]), float(fv[tuple(bad)]))
    resk = fv @ KRONROD_WEIGHTS
    resg = fv @ GAUSS_WEIGHTS
    reskh = 0.5 * resk
    resabs = np.abs(fv) @ KRONROD_WEIGHTS
    resasc = np.abs(fv - reskh[..., None]) @ KRONROD_WEIGHTS
    ah = np.abs(half)
    value = resk * half
    err = np.abs((resk - resg) * half)
    resasc = resasc * ah
    resabs = resabs * ah
    with np.errstate(divide="ignore", invalid="ignore"):
        scaled = resasc * np.minimum(1.0, (200.0 * err / resasc) ** 1.5)
    err = np.where((resasc != 0) & (err != 0), scaled, err)
    err = np.where(resabs > _UFLOW / (50 * _EPS), np.maximum(50 * _EPS * resabs, err), err)
    return value, err.max(axis=0)


def _integrate_batch(
    g: Callable, lo: np.ndarray, hi: np.ndarray, cfg: QuadratureConfig, ncomp: int = 1
) -> BatchResult:
    """Integrate ``g`` over each [lo_i, hi_i] independently, batching all panels.

    Each round bisects, per unfinished interval, the panels that exceed their
    length-proportional share of the tolerance and carry at least a quarter
    of that interval's largest such error.  Only new panels are evaluated.
    """
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    m = lo.size
    length = hi - lo

    result = np.zeros((ncomp, m))
    errors = np.zeros(m)
    panels = np.zeros(m, dtype=int)
    converged = length <= 0
    hints: list = [None] * m

    keep = ~converged
    pa, pb = lo[keep], hi[keep]
    owner = np.flatnonzero(keep)
    depth = np.zeros(pa.size, dtype=int)
    pval = np.zeros((ncomp, 0))
    perr = np.zeros(0)
    fresh = np.ones(pa.size, dtype=bool)

    while pa.size:
        val, err = _gk_panels(g, pa[fresh], pb[fresh])
        if val.shape[0] != pval.shape[0]:
            if pval.size:
                raise ValueError("integrand changed its number of components")
            ncomp = val.shape[0]
            pval = np.zeros((ncomp, 0))
            result = np.zeros((ncomp, m))
        full_val = np.empty((ncomp, pa.size))
        full_err = np.empty(pa.size)
        full_val[:, fresh] = val
        full_err[fresh] = err
        full_val[:, ~fresh] = pval
        full_err[~fresh] = perr
        pval, perr = full_val, full_err
        np.add.at(panels, owner[fresh], 1)

        cur_val = np.zeros((ncomp, m))
        np.add.at(cur_val.T, owner, pval.T)
        cur_err = np.zeros(m)
        np.add.at(cur_err, owner, perr)
        tol = np.maximum(cfg.atol, cfg.rtol * np.abs(cur_val).max(axis=0))

        live = np.zeros(m, dtype=bool)
        live[owner] = True
        finished = live & (cur_err <= tol)
        failed = np.zeros(m, dtype=bool)

        share = tol[owner] * (pb - pa) / length[owner]
        over = ~finished[owner] & (perr > share)
        worst = np.zeros(m)
        np.maximum.at(worst, owner[over], perr[over])
        chosen = over & (perr >= 0.25 * worst[owner])
        stuck = chosen & (depth >= cfg.max_depth)
        for idx in np.unique(owner[stuck]):
            sel = np.flatnonzero(stuck & (owner == idx))
            deepest = sel[np.lexsort((-perr[sel], -depth[sel]))[0]]
            hints[idx] = float(0.5 * (pa[deepest] + pb[deepest]))
            failed[idx] = True
        for idx in np.flatnonzero(live & ~finished & ~failed & (panels > cfg.max_panels)):
            sel = np.flatnonzero(owner == idx)
            w = sel[np.argmax(perr[sel])]
            hints[idx] = float(0.5 * (pa[w] + pb[w]))
            failed[idx] = True

        stop = finished | failed
        converged |= finished
        retire = stop[owner]
        if np.any(retire):
            order = np.lexsort((pa[retire], owner[retire]))
            r_owner = owner[retire][order]
            np.add.at(result.T, r_owner, pval[:, retire][:, order].T)
            np.add.at(errors, r_owner, perr[retire][order])

        split = chosen & ~retire
        stay = ~retire & ~split
        mid = 0.5 * (pa[split] + pb[split])
        pa = np.concatenate([pa[stay], pa[split], mid])
        pb = np.concatenate([pb[stay], mid, pb[split]])
        owner = np.concatenate([owner[stay], owner[split], owner[split]])
        depth = np.concatenate([depth[stay], depth[split] + 1, depth[split] + 1])
        pval = pval[:, stay]
        perr = perr[stay]
        fresh = np.concatenate([np.zeros(stay.sum(), dtype=bool), np.ones(2 * split.sum(), dtype=bool)])
        order = np.lexsort((pa, owner))
        # Stored values stay aligned with the first block of ``order``.
        pa, pb, owner, depth, fresh = pa[order], pb[order], owner[order], depth[order], fresh[order]
        keep_order = order[order < stay.sum()]
        pval, perr = pval[:, keep_order], perr[keep_order]

    return BatchResult(result, errors, converged, panels, hints)


def _tail_map(f: Callable, T: float) -> Callable:
    # s = T + u/(1-u) maps (0, 1) onto (T, inf); ds = du/(1-u)^2.
    def g(u):
        w = 1.0 - u
        return np.asarray(f(T + u / w), dtype=float) / (w * w)

    return g


def _tail_location(T: float, u: float | None) -> float | None:
    if u is None:
        return None
    return T + u / (1.0 - u)


def _scalar(res: BatchResult, i: int = 0) -> IntegralEstimate:
    return IntegralEstimate(
        value=float(res.values[0, i]),
        error_estimate=float(res.errors[i]),
        converged=bool(res.converged[i]),
        panels_used=int(res.panels[i]),
        divergence_hint=None if res.converged[i] else res.hints[i],
    )


def integrate_interval(f: Callable, a: float, b: float, cfg: QuadratureConfig | None = None) -> IntegralEstimate:
    """Integrate ``f`` over the finite interval [a, b]."""
    cfg = cfg or QuadratureConfig()
    if not (0 <= a <= b < math.inf):
        raise ValueError(f"need 0 <= a <= b < inf, got a={a}, b={b}")
    if a == b:
        return IntegralEstimate(0.0, 0.0, True, 0)
    res = _integrate_batch(lambda s: np.reshape(f(s), (1, -1)), np.array([a]), np.array([b]), cfg)
    return _scalar(res)


def integrate_tail(f: Callable, T: float, cfg: QuadratureConfig | None = None, ncomp: int = 1) -> BatchResult:
    """Vector-valued integral of ``f`` over [T, inf) through the rational map."""
    cfg = cfg or QuadratureConfig()
    g = _tail_map(lambda s: np.reshape(f(s), (-1, np.size(s))), T)
    res = _integrate_batch(g, np.array([0.0]), np.array([1.0]), cfg, ncomp)
    res.hints = [_tail_location(T, h) for h in res.hints]
    return res


def integrate_cells(
    f: Callable, edges: np.ndarray, cfg: QuadratureConfig | None = None, ncomp: int = 1
) -> BatchResult:
    """Integrate a vector integrand over every cell [edges[i], edges[i+1]] separately."""
    cfg = cfg or QuadratureConfig()
    edges = np.asarray(edges, dtype=float)
    return _integrate_batch(lambda s: np.reshape(f(s), (-1, np.size(s))), edges[:-1], edges[1:], cfg, ncomp)


def integrate_half_line(
    f: Callable, breakpoints: Sequence[float] = (), cfg: QuadratureConfig | None = None
) -> IntegralEstimate:
    """Integrate ``f`` over [0, inf).

    The finite part [0, T] is cut at every breakpoint; the tail [T, inf) is
    mapped onto (0, 1) with s = T + u/(1-u).  Values and error estimates are
    summed in panel order; the result is converged only if every piece is.
    """
    cfg = cfg or QuadratureConfig()
    bps = sorted(float(b) for b in breakpoints)
    if bps and bps[0] < 0:
        raise ValueError("breakpoints must be nonnegative")
    T = cfg.tail_point(bps)
    edges = np.unique(np.array([0.0, *bps, T]))
    finite = integrate_cells(f, edges, cfg)
    tail = integrate_tail(f, T, cfg)
    total = IntegralEstimate(0.0, 0.0, True, 0)
    for i in range(edges.size - 1):
        total = total + _scalar(finite, i)
    return total + _scalar(tail)
