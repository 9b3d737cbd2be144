"""Problem instances and numeric evidence for the standing hypotheses H1-H7.

All nonlinearities are plain numpy-vectorised callables:

    f(t, x, y), k(t), h(x, y), g1(x), g2(x), psi(t), I_k(x), Ibar_k(x)

H1 is checked exactly through the coupling constant, H5-H7 rely on
quadrature and the remaining hypotheses on dense sampling, which is evidence
rather than proof.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import DegenerateKernelError, IBVPError, NonIntegrableWeightError, QuadratureEvaluationError
from .kernel import GreenKernel, SLCoefficients
from .quadrature import QuadratureConfig, integrate_half_line

VERIFIED_EXACT = "verified-exact"
VERIFIED_SAMPLED = "verified-sampled"
VIOLATED = "violated"
DIVERGENT = "divergent"


@dataclass(frozen=True)
class Impulse:
    t: float
    I: Callable
    Ibar: Callable


@dataclass(frozen=True)
class ImpulseSet:
    """Impulse points t_1 < ... < t_n with jump maps I_k (of x) and Ibar_k (minus the jump of x')."""

    impulses: tuple[Impulse, ...] = ()

    def __post_init__(self):
        pts = self.points
        if any(t <= 0 or not math.isfinite(t) for t in pts):
            raise ValueError("impulse points must be positive and finite")
        if any(b <= a for a, b in zip(pts, pts[1:])):
            raise ValueError("impulse points must be strictly increasing")

    @classmethod
    def from_lists(cls, points: Sequence[float], I: Sequence[Callable], Ibar: Sequence[Callable]) -> "ImpulseSet":
        if not len(points) == len(I) == len(Ibar):
            raise ValueError("points, I and Ibar must have equal length")
        return cls(tuple(Impulse(float(t), a, b) for t, a, b in zip(points, I, Ibar)))

    @property
    def points(self) -> tuple[float, ...]:
        return tuple(imp.t for imp in self.impulses)

    def __len__(self) -> int:
        return len(self.impulses)

    def __iter__(self):
        return iter(self.impulses)


def weighted(p, v):
    """p * v with 0 wherever v vanishes, so an overflowing weight times 0 stays 0."""
    v = np.asarray(v, dtype=float)
    with np.errstate(invalid="ignore", over="ignore"):
        return np.where(v == 0, 0.0, p * v)


def _zero1(a):
    return np.zeros(np.shape(a))


def _zero2(a, b):
    return np.zeros(np.broadcast(a, b).shape)


def _zero3(a, b, c):
    return np.zeros(np.broadcast(a, b, c).shape)


@dataclass(frozen=True)
class ProblemSpec:
    coefficients: SLCoefficients
    f: Callable = _zero3
    k: Callable = _zero1
    h: Callable = _zero2
    g1: Callable = _zero1
    g2: Callable = _zero1
    psi: Callable = _zero1
    impulses: ImpulseSet = field(default_factory=ImpulseSet)

    def values(self, name: str, *args) -> np.ndarray:
        """Evaluate a named nonlinearity and broadcast the result to the argument shape."""
        fn = getattr(self, name)
        shape = np.broadcast(*args).shape
        return np.broadcast_to(np.asarray(fn(*args), dtype=float), shape)


# -- reporting -----------------------------------------------------------------


@dataclass(frozen=True)
class HypothesisStatus:
    name: str
    status: str
    detail: str
    witness: dict | None = None

    def __post_init__(self):
        if self.status == VIOLATED and not self.witness:
            raise ValueError("a violated hypothesis needs a witness")

    @property
    def ok(self) -> bool:
        return self.status in (VERIFIED_EXACT, VERIFIED_SAMPLED)


@dataclass(frozen=True)
class HypothesisReport:
    entries: tuple[HypothesisStatus, ...]

    def __getitem__(self, name: str) -> HypothesisStatus:
        for e in self.entries:
            if e.name == name:
                return e
        raise KeyError(name)

    @property
    def all_verified(self) -> bool:
        return all(e.ok for e in self.entries)

    def blocking(self) -> list[HypothesisStatus]:
        """Failures that make the operator meaningless (H1, H6, H7)."""
        return [e for e in self.entries if e.name in ("H1", "H6", "H7") and not e.ok]


@dataclass(frozen=True)
class SamplingConfig:
    """Grids used as evidence for the pointwise hypotheses."""

    t_min: float = 1e-3
    t_max: float | None = None
    t_points: int = 40
    x_min: float = 1e-3
    x_max: float = 1e3
    x_points: int = 20
    random_points: int = 200
    seed: int = 0

    def t_grid(self, impulse_points: Sequence[float] = ()) -> np.ndarray:
        top = self.t_max if self.t_max is not None else max(impulse_points, default=0.0) + 10.0
        probes = [2 * top, 10 * top, 100 * top]
        return np.unique(np.concatenate([np.geomspace(self.t_min, top, self.t_points), probes, impulse_points]))

    def x_grid(self) -> np.ndarray:
        return np.geomspace(self.x_min, self.x_max, self.x_points)

    def y_grid(self) -> np.ndarray:
        pos = self.x_grid()
        return np.concatenate([-pos[::-1], [0.0], pos])


def _first(mask: np.ndarray, *grids) -> dict:
    idx = np.unravel_index(int(np.argmax(mask)), mask.shape)
    return {name: float(g[idx]) for name, g in grids}


def _safe(fn: Callable, *args):
    """Evaluate, turning evaluation errors into (None, message)."""
    try:
        with np.errstate(all="ignore"):
            out = np.asarray(fn(*args), dtype=float)
        return np.broadcast_to(out, np.broadcast(*args).shape), None
    except (IBVPError, ArithmeticError, ValueError) as exc:
        return None, str(exc)


def _eval_failure(name: str, label: str, msg: str, where: dict) -> HypothesisStatus:
    return HypothesisStatus(name, VIOLATED, f"{label} could not be evaluated: {msg}", where)


def _check_nonneg(name: str, label: str, values, msg, grids) -> HypothesisStatus | None:
    if values is None:
        return _eval_failure(name, label, msg, {k: float(np.ravel(g)[0]) for k, g in grids})
    bad = ~(values >= 0)
    if np.any(bad):
        w = _first(bad, *grids)
        w["value"] = float(values[np.unravel_index(int(np.argmax(bad)), bad.shape)])
        return HypothesisStatus(name, VIOLATED, f"{label} is negative or undefined", w)
    return None


def _check_h2(spec: ProblemSpec, ts, xs, ys, rng_pts) -> HypothesisStatus:
    kv, msg = _safe(spec.k, ts)
    fail = _check_nonneg("H2", "k", kv, msg, [("t", ts)])
    if fail:
        return fail
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    hv, msg = _safe(spec.h, X, Y)
    fail = _check_nonneg("H2", "h", hv, msg, [("x", X), ("y", Y)])
    if fail:
        return fail
    Tg, Xg, Yg = np.meshgrid(ts, xs, ys, indexing="ij")
    Tg = np.concatenate([Tg.ravel(), rng_pts[0]])
    Xg = np.concatenate([Xg.ravel(), rng_pts[1]])
    Yg = np.concatenate([Yg.ravel(), rng_pts[2]])
    fv, msg = _safe(spec.f, Tg, Xg, Yg)
    grids = [("t", Tg), ("x", Xg), ("y", Yg)]
    fail = _check_nonneg("H2", "f", fv, msg, grids)
    if fail:
        return fail
    env = np.asarray(spec.k(Tg), dtype=float) * np.asarray(spec.h(Xg, Yg), dtype=float)
    over = fv > env * (1 + 1e-12) + 1e-300
    if np.any(over):
        w = _first(over, *grids)
        i = int(np.argmax(over))
        w.update(f=float(fv[i]), bound=float(np.broadcast_to(env, fv.shape)[i]))
        return HypothesisStatus("H2", VIOLATED, "f exceeds k*h", w)
    return HypothesisStatus("H2", VERIFIED_SAMPLED, f"f, k, h >= 0 and f <= k*h on {fv.size} samples")


def _check_h3(spec: ProblemSpec, xs) -> HypothesisStatus:
    for label in ("g1", "g2"):
        gv, msg = _safe(getattr(spec, label), xs)
        fail = _check_nonneg("H3", label, gv, msg, [("x", xs)])
        if fail:
            return fail
        drop = np.diff(gv) < -1e-12 * np.maximum(1.0, np.abs(gv[:-1]))
        if np.any(drop):
            i = int(np.argmax(drop))
            return HypothesisStatus(
                "H3", VIOLATED, f"{label} decreases", {"x": float(xs[i]), "x_next": float(xs[i + 1])}
            )
    return HypothesisStatus("H3", VERIFIED_SAMPLED, f"g1, g2 nonnegative and nondecreasing on {xs.size} points")


def _check_h4(spec: ProblemSpec, kernel: GreenKernel | None, xs) -> HypothesisStatus:
    c = spec.coefficients
    for k, imp in enumerate(spec.impulses, start=1):
        for label, fn in ((f"I_{k}", imp.I), (f"Ibar_{k}", imp.Ibar)):
            v, msg = _safe(fn, xs)
            fail = _check_nonneg("H4", label, v, msg, [("x", xs)])
            if fail:
                fail.witness["k"] = k
                return fail
        if kernel is None:
            continue
        lhs = (c.b2 + c.a2 * kernel.b_integral(imp.t, math.inf)) * np.asarray(imp.Ibar(xs), dtype=float)
        lhs = lhs - c.a2 / kernel.p(imp.t) * np.asarray(imp.I(xs), dtype=float)
        bad = ~(np.broadcast_to(lhs, xs.shape) > 0)
        if np.any(bad):
            i = int(np.argmax(bad))
            return HypothesisStatus(
                "H4", VIOLATED, "impulse balance is not positive", {"k": k, "x": float(xs[i]), "value": float(lhs[i])}
            )
    n = len(spec.impulses)
    return HypothesisStatus("H4", VERIFIED_SAMPLED, f"{n} impulse pair(s) checked on {xs.size} points")


def _integral_status(name: str, label: str, fn: Callable, breakpoints, quad) -> tuple[HypothesisStatus | None, float]:
    try:
        est = integrate_half_line(fn, breakpoints, quad)
    except QuadratureEvaluationError as exc:
        return HypothesisStatus(name, DIVERGENT, f"{label} is not finite at s={exc.abscissa:.6g}", {"s": exc.abscissa}), math.nan
    except IBVPError as exc:
        return HypothesisStatus(name, VIOLATED, f"{label} could not be evaluated: {exc}", {"s": math.nan}), math.nan
    if not est.converged:
        loc = est.divergence_hint
        return HypothesisStatus(name, DIVERGENT, f"{label} does not converge near s={loc:.6g}", {"s": loc}), math.nan
    return None, est.value


def validate(
    spec: ProblemSpec,
    sampling: SamplingConfig | None = None,
    quad: QuadratureConfig | None = None,
    kernel: GreenKernel | None = None,
) -> HypothesisReport:
    """Collect evidence for H1-H7.  Never raises for mathematical failures."""
    sampling = sampling or SamplingConfig()
    quad = quad or QuadratureConfig()
    pts = spec.impulses.points
    entries: dict[str, HypothesisStatus] = {}

    if kernel is None:
        try:
            kernel = GreenKernel(spec.coefficients, quad)
        except NonIntegrableWeightError as exc:
            where = {"s": exc.location}
            entries["H1"] = HypothesisStatus("H1", DIVERGENT, "D needs B(0,inf), which diverges", where)
            entries["H6"] = HypothesisStatus("H6", DIVERGENT, str(exc), where)
        except DegenerateKernelError as exc:
            entries["H1"] = HypothesisStatus("H1", VIOLATED, f"D={exc.D:.17g} is not positive", {"D": exc.D})
    if "H1" not in entries:
        entries["H1"] = HypothesisStatus("H1", VERIFIED_EXACT, f"D={kernel.D:.17g}")

    ts = sampling.t_grid(pts)
    xs = sampling.x_grid()
    ys = sampling.y_grid()
    rng = np.random.default_rng(sampling.seed)
    n = sampling.random_points
    rng_pts = (
        rng.uniform(sampling.t_min, ts[-4], n),
        np.exp(rng.uniform(math.log(sampling.x_min), math.log(sampling.x_max), n)),
        rng.uniform(-sampling.x_max, sampling.x_max, n),
    )
    entries["H2"] = _check_h2(spec, ts, xs, ys, rng_pts)
    entries["H3"] = _check_h3(spec, xs)
    entries["H4"] = _check_h4(spec, kernel, xs)

    pv, msg = _safe(spec.psi, ts)
    h5 = _check_nonneg("H5", "psi", pv, msg, [("t", ts)])
    if h5 is None:
        h5, val = _integral_status("H5", "the integral of psi", spec.psi, pts, quad)
        h5 = h5 or HypothesisStatus("H5", VERIFIED_SAMPLED, f"psi >= 0 sampled; integral {val:.17g}")
    entries["H5"] = h5

    if "H6" not in entries:
        pv, msg = _safe(spec.coefficients.p, ts)
        bad = None if pv is not None else msg
        if pv is not None and np.any(~(pv > 0)):
            i = int(np.argmax(~(pv > 0)))
            entries["H6"] = HypothesisStatus("H6", VIOLATED, "p is not positive", {"t": float(ts[i])})
        elif bad:
            entries["H6"] = _eval_failure("H6", "p", bad, {"t": float(ts[0])})
        elif kernel is not None:
            entries["H6"] = HypothesisStatus("H6", VERIFIED_SAMPLED, f"p > 0 sampled; B(0,inf)={kernel.B0inf:.17g}")
        else:
            entries["H6"] = HypothesisStatus("H6", VERIFIED_SAMPLED, "p > 0 sampled")

    if kernel is None:
        entries["H7"] = HypothesisStatus("H7", DIVERGENT, "kernel unavailable", {"s": math.nan})
    else:

        def h7_integrand(s):
            return kernel.green(s, s) * weighted(kernel.p(s), spec.k(s))

        h7, val = _integral_status("H7", "the integral of G(s,s)p(s)k(s)", h7_integrand, pts, quad)
        if h7 is None:
            if val > 0:
                h7 = HypothesisStatus("H7", VERIFIED_SAMPLED, f"integral {val:.17g}")
            else:
                h7 = HypothesisStatus("H7", VIOLATED, "integral is not positive", {"value": val})
        entries["H7"] = h7

    order = ("H1", "H2", "H3", "H4", "H5", "H6", "H7")
    return HypothesisReport(tuple(entries[k] for k in order))


def h7_integral(spec: ProblemSpec, kernel: GreenKernel, quad: QuadratureConfig | None = None):
    """The integral of G(s,s)p(s)k(s) over [0, inf) as an IntegralEstimate."""
    return integrate_half_line(
        lambda s: kernel.green(s, s) * weighted(kernel.p(s), spec.k(s)),
        spec.impulses.points,
        quad,
    )
