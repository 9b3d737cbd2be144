"""JSON run configurations: problem expressions, numerics and certification inputs."""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any, Callable

import numpy as np

from .errors import ConfigError
from .exprlang import ExprError, parse
from .kernel import SLCoefficients
from .problem import ImpulseSet, ProblemSpec, SamplingConfig
from .quadrature import QuadratureConfig
from .solver import SolveConfig

BUNDLED = ("example_sec4", "contraction_corpus", "empty_problem")

_TIME = ("t", "s")
_SLOTS = {
    "p": _TIME,
    "k": _TIME,
    "psi": _TIME,
    "f": ("t", "x", "y"),
    "h": ("x", "y"),
    "g1": ("x",),
    "g2": ("x",),
}
_SECTIONS = {"problem", "numerics", "certify", "metadata"}
_PROBLEM_KEYS = {"coefficients", "impulses", *_SLOTS}
_NUMERICS_KEYS = {"quadrature", "solver", "mesh", "sampling", "operator_form"}
_CERTIFY_KEYS = {"window", "q", "constants", "reference_values"}


@dataclass(frozen=True)
class RunConfig:
    name: str
    sha256: str
    raw: dict
    spec: ProblemSpec
    quad: QuadratureConfig
    solve: SolveConfig
    sampling: SamplingConfig
    window: tuple[float, float] = (1.0, 2.0)
    q: float = 10.0
    constants: dict[str, float] = field(default_factory=dict)
    reference_values: dict[str, float] = field(default_factory=dict)


def compile_expression(source: str, slot: str, where: str) -> Callable:
    """Parse ``source`` for a function slot and return a numpy-vectorised callable."""
    try:
        expr = parse(str(source))
    except ExprError as exc:
        raise ConfigError(f"{where}: {exc}") from exc
    allowed = _SLOTS.get(slot, ("x",))
    extra = expr.free_variables - set(allowed)
    if extra:
        raise ConfigError(f"{where}: variable(s) {sorted(extra)} not allowed here; use {list(allowed)}")
    names = allowed if allowed != _TIME else ("t",)

    def fn(*args):
        shape = np.broadcast(*args).shape if args else ()
        env = dict(zip(names, args))
        if allowed == _TIME:
            env["s"] = env["t"]
        out = expr(**env)
        if shape == ():
            return float(out)
        return np.broadcast_to(np.asarray(out, dtype=float), shape)

    fn.__doc__ = f"{slot}: {source}"
    fn.source = str(source)
    return fn


def _number(v: Any, where: str) -> float:
    if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
        raise ConfigError(f"{where}: expected a finite number, got {v!r}")
    return float(v)


def _section(raw: dict, key: str, allowed: set[str], where: str) -> dict:
    sec = raw.get(key, {})
    if not isinstance(sec, dict):
        raise ConfigError(f"{where}.{key}: expected an object")
    unknown = set(sec) - allowed
    if unknown:
        raise ConfigError(f"{where}.{key}: unknown field(s) {sorted(unknown)}")
    return sec


def _build(name: str, text: str) -> RunConfig:
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{name}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc
    if not isinstance(raw, dict):
        raise ConfigError(f"{name}: top level must be an object")
    unknown = set(raw) - _SECTIONS
    if unknown:
        raise ConfigError(f"{name}: unknown section(s) {sorted(unknown)}")

    prob = _section(raw, "problem", _PROBLEM_KEYS, name)
    coeffs = prob.get("coefficients", {})
    try:
        co = SLCoefficients(
            *(_number(coeffs.get(k, 0.0), f"{name}: problem.coefficients.{k}") for k in ("a1", "a2", "b1", "b2")),
            p=compile_expression(prob.get("p", "exp(t)"), "p", f"{name}: problem.p"),
        )
    except ValueError as exc:
        raise ConfigError(f"{name}: problem.coefficients: {exc}") from exc
    funcs = {
        slot: compile_expression(prob.get(slot, "0"), slot, f"{name}: problem.{slot}")
        for slot in ("f", "k", "h", "g1", "g2", "psi")
    }
    pts, I, Ib = [], [], []
    for i, imp in enumerate(prob.get("impulses", [])):
        where = f"{name}: problem.impulses[{i}]"
        if not isinstance(imp, dict) or set(imp) - {"t", "I", "Ibar"}:
            raise ConfigError(f"{where}: expected an object with t, I, Ibar")
        pts.append(_number(imp.get("t"), f"{where}.t"))
        I.append(compile_expression(imp.get("I", "0"), "I", f"{where}.I"))
        Ib.append(compile_expression(imp.get("Ibar", "0"), "Ibar", f"{where}.Ibar"))
    try:
        impulses = ImpulseSet.from_lists(pts, I, Ib)
    except ValueError as exc:
        raise ConfigError(f"{name}: problem.impulses: {exc}") from exc
    spec = ProblemSpec(co, impulses=impulses, **funcs)

    num = _section(raw, "numerics", _NUMERICS_KEYS, name)
    form = num.get("operator_form", "corrected")
    if form not in ("corrected", "literal"):
        raise ConfigError(f"{name}: numerics.operator_form must be 'corrected' or 'literal'")
    try:
        quad = QuadratureConfig(**num.get("quadrature", {}))
        solver = dict(num.get("solver", {}))
        if "initial_levels" in solver:
            solver["initial_levels"] = tuple(solver["initial_levels"])
        solve = SolveConfig(**solver, **num.get("mesh", {}), literal=form == "literal")
        sampling = SamplingConfig(**num.get("sampling", {}))
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{name}: numerics: {exc}") from exc

    cert = _section(raw, "certify", _CERTIFY_KEYS, name)
    window = cert.get("window", [1.0, 2.0])
    if not (isinstance(window, list) and len(window) == 2):
        raise ConfigError(f"{name}: certify.window must be [a, b]")
    window = (_number(window[0], f"{name}: certify.window"), _number(window[1], f"{name}: certify.window"))
    q = _number(cert.get("q", 10.0), f"{name}: certify.q")

    def numbers(key):
        out = {}
        for k, v in cert.get(key, {}).items():
            out[k] = _number_or_inf(v, f"{name}: certify.{key}.{k}")
        return out

    return RunConfig(
        name=name,
        sha256=hashlib.sha256(text.encode()).hexdigest(),
        raw=raw,
        spec=spec,
        quad=quad,
        solve=solve,
        sampling=sampling,
        window=window,
        q=q,
        constants=numbers("constants"),
        reference_values=numbers("reference_values"),
    )


def _number_or_inf(v: Any, where: str) -> float:
    if v in ("inf", "+inf", "Infinity"):
        return math.inf
    return _number(v, where)


def load_config(ref: str | Path) -> RunConfig:
    """Load a config from a file path or by bundled name."""
    path = Path(ref)
    if path.is_file():
        return _build(str(ref), path.read_text())
    if str(ref) in BUNDLED:
        text = resources.files("ibvp").joinpath("configs", f"{ref}.json").read_text()
        return _build(str(ref), text)
    raise ConfigError(f"{ref}: no such file or bundled config (bundled: {', '.join(BUNDLED)})")
