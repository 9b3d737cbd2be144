"""Asymptotic ratio constants and the two-solution conditions A1-A4.

Constant keys follow one convention: a subscript marks a liminf and a
superscript a limsup, each taken toward 0, inf or the level q.

    f_0, f_inf, f_q           liminf of min_{t in [a,b]} f(t,x,y)/(|x|+|y|)
    h^0, h^inf, h^q           limsup of h(x,y)/(|x|+|y|)
    g1_0, g1^q, ...           g_i(x)/x
    I_0(1), Ibar^q(1), ...    I_k(x)/x, Ibar_k(x)/x for impulse k (1-based)

Extended reals are plain floats: inf + finite = inf and inf * 0 = nan, and a
nan left-hand side is reported as indeterminate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Mapping

import numpy as np

from .errors import IBVPError, QuadratureEvaluationError, ZeroDenominatorError
from .kernel import GreenKernel
from .problem import ProblemSpec, h7_integral
from .quadrature import QuadratureConfig, integrate_half_line, integrate_interval

INF_THRESHOLD = 1e9
ZERO_THRESHOLD = 1e-9
FLAG_SPREAD = 0.05

PASS, FAIL, INDETERMINATE = "pass", "fail", "indeterminate"


@dataclass(frozen=True)
class EstimatorConfig:
    steps: int = 12
    q_steps: int = 8
    directions: int = 11
    t_points: int = 11


@dataclass
class ConstantEstimate:
    value: float
    provenance: str
    approach: str
    sequence: list[float] = field(default_factory=list)
    unreliable: bool = False
    reference: float | None = None
    discrepancy: bool = False


@dataclass
class AsymptoticConstants:
    entries: dict[str, ConstantEstimate]
    window: tuple[float, float]
    q: float

    def __getitem__(self, key: str) -> float:
        return self.entries[key].value

    def get(self, key: str, default: float = 0.0) -> float:
        e = self.entries.get(key)
        return default if e is None else e.value


def _ratio_2d(fn: Callable, r: float, cfg: EstimatorConfig, ts: np.ndarray | None, reduce):
    """reduce over directions (x, y) = (r lam, +-r(1-lam)) and, for f, over t."""
    lam = np.linspace(1.0, 0.0, cfg.directions, endpoint=False)
    x = np.concatenate([r * lam, r * lam])
    y = np.concatenate([r * (1 - lam), -r * (1 - lam)])
    with np.errstate(all="ignore"):
        if ts is None:
            v = np.asarray(fn(x, y), dtype=float) * np.ones_like(x)
        else:
            T, X = np.meshgrid(ts, x, indexing="ij")
            _, Y = np.meshgrid(ts, y, indexing="ij")
            v = np.asarray(fn(T, X, Y), dtype=float) * np.ones_like(T)
    return float(reduce(v)) / r


def _ratio_1d(fn: Callable, x: float) -> float:
    with np.errstate(all="ignore"):
        return float(np.asarray(fn(np.array([x])), dtype=float).reshape(-1)[0]) / x


def _sequence(ratio: Callable[[float], float], radii) -> tuple[list[float], bool]:
    out = []
    for r in radii:
        try:
            v = ratio(r)
        except (IBVPError, ArithmeticError, ValueError):
            return out, True
        if not math.isfinite(v):
            return out, True
        out.append(v)
    return out, False


def _limit(seq: list[float], broke: bool, snap: bool) -> tuple[float, bool]:
    if not seq:
        return math.nan, True
    last = seq[-1]
    if snap and abs(last) > INF_THRESHOLD:
        return math.copysign(math.inf, last), False
    if snap and abs(last) < ZERO_THRESHOLD:
        return 0.0, False
    unreliable = broke
    if len(seq) >= 2:
        prev = seq[-2]
        scale = max(abs(last), abs(prev))
        unreliable |= scale > 0 and abs(last - prev) > FLAG_SPREAD * scale
    return last, unreliable


def _estimate(ratio, approach: str, q: float, cfg: EstimatorConfig, reduce) -> ConstantEstimate:
    if approach == "0":
        seq, broke = _sequence(ratio, [10.0 ** -j for j in range(1, cfg.steps + 1)])
        value, flag = _limit(seq, broke, snap=True)
    elif approach == "inf":
        seq, broke = _sequence(ratio, [10.0 ** j for j in range(1, cfg.steps + 1)])
        value, flag = _limit(seq, broke, snap=True)
    else:
        seq = []
        broke = False
        for j in range(1, cfg.q_steps + 1):
            d = 10.0 ** -j
            pair, b = _sequence(ratio, [q * (1 - d), q * (1 + d)])
            broke |= b
            if len(pair) == 2:
                seq.append(float(reduce(np.array(pair))))
        value, flag = _limit(seq, broke, snap=False)
    return ConstantEstimate(value, "sampled", approach, seq, flag)


def estimate_asymptotics(
    spec: ProblemSpec,
    window: tuple[float, float] = (1.0, 2.0),
    q: float = 10.0,
    cfg: EstimatorConfig | None = None,
    user: Mapping[str, float] | None = None,
    reference: Mapping[str, float] | None = None,
) -> AsymptoticConstants:
    """Estimate every ratio constant; ``user`` values override, ``reference`` values are compared."""
    a, b = window
    if not 0 < a < b < math.inf:
        raise ValueError("need 0 < a < b < inf")
    if not q > 0:
        raise ValueError("q must be positive")
    cfg = cfg or EstimatorConfig()
    ts = np.linspace(a, b, cfg.t_points)
    out: dict[str, ConstantEstimate] = {}

    for approach in ("0", "inf", "q"):
        out[f"f_{approach}"] = _estimate(
            lambda r: _ratio_2d(spec.f, r, cfg, ts, np.min), approach, q, cfg, np.min
        )
        out[f"h^{approach}"] = _estimate(
            lambda r: _ratio_2d(spec.h, r, cfg, None, np.max), approach, q, cfg, np.max
        )
    one_d = [("g1", spec.g1), ("g2", spec.g2)]
    for k, imp in enumerate(spec.impulses, start=1):
        one_d += [(f"I@({k})", imp.I), (f"Ibar@({k})", imp.Ibar)]
    for name, fn in one_d:
        for approach in ("0", "inf", "q"):
            ratio = lambda x, fn=fn: _ratio_1d(fn, x)
            low = _estimate(ratio, approach, q, cfg, np.min)
            high = _estimate(ratio, approach, q, cfg, np.max)
            if "@" in name:
                out[name.replace("@", "_" + approach)] = low
                out[name.replace("@", "^" + approach)] = high
            else:
                out[f"{name}_{approach}"] = low
                out[f"{name}^{approach}"] = high

    for key, val in (user or {}).items():
        out[key] = ConstantEstimate(float(val), "user-supplied", "user")
    for key, ref in (reference or {}).items():
        if key not in out:
            continue
        e = out[key]
        e.reference = float(ref)
        same_inf = math.isinf(e.value) and e.value == ref
        e.discrepancy = not same_inf and not (abs(e.value - ref) <= FLAG_SPREAD * abs(ref))
    return AsymptoticConstants(out, (a, b), q)


# -- conditions ------------------------------------------------------------------


@dataclass
class Term:
    name: str
    coefficient: float
    constant_key: str | None
    constant: float
    value: float


@dataclass
class ConditionEntry:
    name: str
    direction: str
    lhs: float
    status: str
    prefactor: float
    terms: list[Term]
    reason: str = ""
    lhs_min_variant: float | None = None


@dataclass
class Ingredients:
    """Kernel-side integrals and constants shared by all conditions."""

    w: float
    c: float | None
    sup_inv_p: float
    int_ab_Gp: float
    int_ab_psi: float
    int_Gpk: float
    int_psi: float
    G_diag: list[float]
    gs_max: list[float]
    gs_min: list[float]
    min_bc: float
    max_bc: float
    reasons: dict[str, str] = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {
            "w": self.w,
            "c": self.c,
            "sup_inv_p": self.sup_inv_p,
            "int_ab_G_p": self.int_ab_Gp,
            "int_ab_psi": self.int_ab_psi,
            "int_G_p_k": self.int_Gpk,
            "int_psi": self.int_psi,
            "G_diag": self.G_diag,
            "Gs_diag_max": self.gs_max,
            "Gs_diag_min": self.gs_min,
            "min_phi_inf_theta_0_over_D": self.min_bc,
            "max_phi_0_theta_inf_over_D": self.max_bc,
            "reasons": dict(self.reasons),
        }


def _converged_value(est, label: str, reasons: dict) -> float:
    if est.converged:
        return est.value
    reasons[label] = f"{label} does not converge near s={est.divergence_hint:.6g}"
    return math.nan


def ingredients(
    spec: ProblemSpec,
    kernel: GreenKernel,
    window: tuple[float, float],
    quad: QuadratureConfig | None = None,
) -> Ingredients:
    quad = quad or QuadratureConfig()
    a, b = window
    reasons: dict[str, str] = {}
    pts = spec.impulses.points

    def safe(label, thunk):
        try:
            return _converged_value(thunk(), label, reasons)
        except QuadratureEvaluationError as exc:
            reasons[label] = f"{label} is not finite at s={exc.abscissa:.6g}"
            return math.nan

    int_ab_Gp = safe("int_ab_G_p", lambda: integrate_interval(lambda s: kernel.green(s, s) * kernel.p(s), a, b, quad))
    int_ab_psi = safe("int_ab_psi", lambda: integrate_interval(lambda s: spec.values("psi", s), a, b, quad))
    int_Gpk = safe("int_G_p_k", lambda: h7_integral(spec, kernel, quad))
    int_psi = safe("int_psi", lambda: integrate_half_line(lambda s: spec.values("psi", s), pts, quad))
    try:
        c = kernel.constant_c()
    except ZeroDenominatorError as exc:
        c = None
        reasons["c"] = str(exc)
    co = kernel.coefficients
    return Ingredients(
        w=kernel.constant_w(a, b),
        c=c,
        sup_inv_p=kernel.sup_inverse_weight(),
        int_ab_Gp=int_ab_Gp,
        int_ab_psi=int_ab_psi,
        int_Gpk=int_Gpk,
        int_psi=int_psi,
        G_diag=[float(kernel.green(t, t)) for t in pts],
        gs_max=[float(kernel.gs_diagonal(t, "max")) for t in pts],
        gs_min=[float(kernel.gs_diagonal(t, "min")) for t in pts],
        min_bc=min(kernel.phi_inf, float(kernel.theta(0.0))) / kernel.D,
        max_bc=max(float(kernel.phi(0.0)), kernel.theta_inf) / kernel.D,
        reasons=reasons,
    )


def _mul(a: float, b: float) -> float:
    # inf * 0 gives nan, which marks the product as indeterminate.
    return a * b


def _condition(
    name: str,
    direction: str,
    prefactor: float,
    parts: list[tuple[str, float, str | None, float]],
    gs_min_parts: list[tuple[float, float]] | None,
    reasons: list[str],
) -> ConditionEntry:
    terms = [Term(n, coef, key, const, _mul(coef, const)) for n, coef, key, const in parts]
    total = sum(t.value for t in terms)
    lhs = _mul(prefactor, total)
    lhs_min = None
    if gs_min_parts is not None:
        alt = sum(t.value for t in terms if not t.name.startswith("Gs_diag"))
        alt += sum(_mul(cf, cst) for cf, cst in gs_min_parts)
        lhs_min = _mul(prefactor, alt)
    if math.isnan(lhs):
        status = INDETERMINATE
        why = list(reasons)
        bad = [t.name for t in terms if math.isnan(t.value)]
        if bad:
            why.append("undefined product (inf * 0 or divergent ingredient) in " + ", ".join(bad))
        if math.isnan(prefactor):
            why.append("prefactor is undefined")
        reason = "; ".join(dict.fromkeys(why))
    else:
        ok = lhs > 1 if direction == ">1" else lhs < 1
        status = PASS if ok else FAIL
        reason = ""
    return ConditionEntry(name, direction, lhs, status, prefactor, terms, reason, lhs_min)


def _parts(ing: Ingredients, consts: AsymptoticConstants, kind: str, fkey: str, gkeys, ikey: str, ibkey: str, n: int):
    """Summands of one condition; ``kind`` is 'lower' (A1/A4) or 'upper' (A2/A3)."""
    if kind == "lower":
        main = ("f_term", ing.int_ab_Gp, fkey, consts.get(fkey))
        bc, psi = ing.min_bc, ing.int_ab_psi
    else:
        main = ("h_term", ing.int_Gpk, fkey, consts.get(fkey))
        bc, psi = ing.max_bc, ing.int_psi
    parts = [
        main,
        ("g1_term", bc * psi, gkeys[0], consts.get(gkeys[0])),
        ("g2_term", bc * psi, gkeys[1], consts.get(gkeys[1])),
    ]
    mins = []
    for k in range(1, n + 1):
        parts.append((f"G_diag({k})", ing.G_diag[k - 1], ibkey.format(k=k), consts.get(ibkey.format(k=k))))
        parts.append((f"Gs_diag({k})", ing.gs_max[k - 1], ikey.format(k=k), consts.get(ikey.format(k=k))))
        mins.append((ing.gs_min[k - 1], consts.get(ikey.format(k=k))))
    return parts, mins


def _reasons_for(ing: Ingredients, labels) -> list[str]:
    return [ing.reasons[l] for l in labels if l in ing.reasons]


def check_A1(ing: Ingredients, consts: AsymptoticConstants, n_impulses: int) -> list[ConditionEntry]:
    out = []
    for tag, sub in (("small", "0"), ("large", "inf")):
        parts, mins = _parts(
            ing, consts, "lower", f"f_{sub}", (f"g1_{sub}", f"g2_{sub}"), f"I_{sub}({{k}})", f"Ibar_{sub}({{k}})", n_impulses
        )
        reasons = _reasons_for(ing, ("int_ab_G_p", "int_ab_psi"))
        out.append(_condition(f"A1-{tag}", ">1", ing.w, parts, mins, reasons))
    return out


def _upper_prefactor(ing: Ingredients) -> float:
    if ing.c is None:
        return math.nan
    return 1.0 + ing.c * ing.sup_inv_p


def check_A2(ing: Ingredients, consts: AsymptoticConstants, n_impulses: int) -> ConditionEntry:
    parts, _ = _parts(ing, consts, "upper", "h^q", ("g1^q", "g2^q"), "I^q({k})", "Ibar^q({k})", n_impulses)
    reasons = _reasons_for(ing, ("int_G_p_k", "int_psi", "c"))
    return _condition("A2", "<1", _upper_prefactor(ing), parts, None, reasons)


def check_A3_A4(ing: Ingredients, consts: AsymptoticConstants, n_impulses: int) -> list[ConditionEntry]:
    out = []
    for tag, sup in (("small", "0"), ("large", "inf")):
        parts, _ = _parts(
            ing, consts, "upper", f"h^{sup}", (f"g1^{sup}", f"g2^{sup}"), f"I^{sup}({{k}})", f"Ibar^{sup}({{k}})", n_impulses
        )
        reasons = _reasons_for(ing, ("int_G_p_k", "int_psi", "c"))
        out.append(_condition(f"A3-{tag}", "<1", _upper_prefactor(ing), parts, None, reasons))
    parts, mins = _parts(ing, consts, "lower", "f_q", ("g1_q", "g2_q"), "I_q({k})", "Ibar_q({k})", n_impulses)
    reasons = _reasons_for(ing, ("int_ab_G_p", "int_ab_psi"))
    out.append(_condition("A4", ">1", ing.w, parts, mins, reasons))
    return out


@dataclass
class ConditionReport:
    window: tuple[float, float]
    q: float
    ingredients: Ingredients
    constants: AsymptoticConstants
    entries: list[ConditionEntry]

    def __getitem__(self, name: str) -> ConditionEntry:
        for e in self.entries:
            if e.name == name:
                return e
        raise KeyError(name)


def certify(
    spec: ProblemSpec,
    kernel: GreenKernel,
    window: tuple[float, float] = (1.0, 2.0),
    q: float = 10.0,
    quad: QuadratureConfig | None = None,
    user: Mapping[str, float] | None = None,
    reference: Mapping[str, float] | None = None,
    estimator: EstimatorConfig | None = None,
) -> ConditionReport:
    consts = estimate_asymptotics(spec, window, q, estimator, user, reference)
    ing = ingredients(spec, kernel, window, quad)
    n = len(spec.impulses)
    entries = [*check_A1(ing, consts, n), check_A2(ing, consts, n), *check_A3_A4(ing, consts, n)]
    return ConditionReport(tuple(window), q, ing, consts, entries)
