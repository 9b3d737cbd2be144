"""Command-line entry point: validate, green, solve and certify a JSON-configured problem."""

from __future__ import annotations

import argparse
import dataclasses
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .certify import certify
from .config import RunConfig, load_config
from .errors import ConfigError, IBVPError, QuadratureEvaluationError
from .kernel import LEFT, RIGHT, GreenKernel
from .operator import apply_T
from .problem import DIVERGENT, HypothesisReport, h7_integral, validate
from .quadrature import integrate_half_line
from .report import (
    conditions_section,
    constants_section,
    dumps,
    hypothesis_section,
    ingredients_section,
    solve_run_section,
    to_csv,
)
from .solver import find_two_solutions

SOLVE_COLUMNS = ("t", "side", "x", "dx", "Tx", "dTx", "residual")
GREEN_COLUMNS = ("t", "s", "G", "Gt_left", "Gt_right")


def _envelope(cfg: RunConfig, command: str, seed: int, result: dict) -> dict:
    return {
        "tool": "ibvp",
        "version": __version__,
        "command": command,
        "config": cfg.name,
        "config_sha256": cfg.sha256,
        "seed": seed,
        "result": result,
    }


def _with_seed(cfg: RunConfig, seed: int | None) -> RunConfig:
    if seed is None:
        return cfg
    return dataclasses.replace(cfg, sampling=dataclasses.replace(cfg.sampling, seed=seed))


def _kernel(cfg: RunConfig) -> GreenKernel | None:
    try:
        return GreenKernel(cfg.spec.coefficients, cfg.quad)
    except IBVPError:
        return None


def _reference_checks(refs: dict, computed: dict[str, tuple[float, str]]) -> list[dict]:
    out = []
    for key, ref in refs.items():
        if key not in computed:
            continue
        val, why = computed[key]
        if math.isnan(val):
            status = "not reproduced"
        elif math.isinf(ref) or math.isinf(val):
            status = "reproduced" if val == ref else "not reproduced"
        else:
            status = "reproduced" if abs(val - ref) <= 1e-6 * max(1.0, abs(ref)) else "not reproduced"
        out.append({"quantity": key, "reference": ref, "computed": val, "status": status, "reason": why})
    return out


def _integral_or_reason(thunk) -> tuple[float, str]:
    try:
        est = thunk()
    except QuadratureEvaluationError as exc:
        return math.nan, f"integrand is not finite at s={exc.abscissa:.6g}"
    if not est.converged:
        return math.nan, f"integral does not converge near s={est.divergence_hint:.6g}"
    return est.value, ""


def run_validate(cfg: RunConfig) -> tuple[dict, HypothesisReport]:
    kernel = _kernel(cfg)
    rep = validate(cfg.spec, cfg.sampling, cfg.quad, kernel)
    computed = {
        "int_psi": _integral_or_reason(
            lambda: integrate_half_line(lambda s: cfg.spec.values("psi", s), cfg.spec.impulses.points, cfg.quad)
        )
    }
    if kernel is not None:
        computed["int_G_p_k"] = _integral_or_reason(lambda: h7_integral(cfg.spec, kernel, cfg.quad))
    result = {
        "hypotheses": hypothesis_section(rep),
        "all_verified": rep.all_verified,
        "reference_checks": _reference_checks(cfg.reference_values, computed),
    }
    return result, rep


def _parse_grid(text: str) -> np.ndarray:
    try:
        start, stop, num = text.split(":")
        grid = np.linspace(float(start), float(stop), int(num))
    except ValueError as exc:
        raise ConfigError(f"--grid expects start:stop:num, got {text!r}") from exc
    if grid.size == 0 or np.any(grid < 0):
        raise ConfigError("--grid must describe a nonempty set of nonnegative times")
    return grid


def run_green(cfg: RunConfig, grid: np.ndarray) -> list[tuple]:
    kernel = GreenKernel(cfg.spec.coefficients, cfg.quad)
    rows = []
    for t in grid:
        for s in grid:
            t, s = float(t), float(s)
            G = kernel.green(t, s)
            if t == s:
                left, right = kernel.green_dt(t, s, LEFT), kernel.green_dt(t, s, RIGHT)
            else:
                left = right = kernel.green_dt(t, s)
            rows.append((t, s, G, left, right))
    return rows


def _solution_rows(cfg: RunConfig, kernel: GreenKernel, x, points: int = 101) -> list[tuple]:
    Tx = apply_T(cfg.spec, kernel, x, cfg.quad, cfg.solve.literal).Tx
    jumps = set(x.mesh.jumps)
    ts = sorted(set(np.linspace(0.0, x.mesh.T, points).tolist()) | jumps)
    rows = []
    for t in ts:
        sides = (LEFT, RIGHT) if t in jumps else (None,)
        for side in sides:
            v, d = x.eval(t, side or LEFT)
            tv, td = Tx.eval(t, side or LEFT)
            rows.append((t, side or "-", v, d, tv, td, abs(v - tv) + abs(d - td)))
    return rows


def run_solve(cfg: RunConfig) -> tuple[dict, list[tuple]]:
    _, rep = run_validate(cfg)
    blocking = [e for e in rep.blocking() if e.name in ("H1", "H6") or e.status == DIVERGENT]
    result: dict = {"q": cfg.q, "hypotheses": hypothesis_section(rep)}
    if blocking:
        result["skipped"] = True
        result["reason"] = "; ".join(f"{e.name} {e.status}: {e.detail}" for e in blocking)
        return result, []
    kernel = GreenKernel(cfg.spec.coefficients, cfg.quad)
    two = find_two_solutions(cfg.spec, kernel, cfg.q, cfg.solve, cfg.quad)
    result["skipped"] = False
    result["solver"] = {
        "beta": cfg.solve.beta,
        "tol": cfg.solve.tol,
        "max_iter": cfg.solve.max_iter,
        "operator_form": "literal" if cfg.solve.literal else "corrected",
    }
    result["runs"] = [solve_run_section(r) for r in two.runs]
    result["distinct_solutions"] = len(two.distinct)
    result["below"] = None if two.below is None else solve_run_section(two.below)
    result["above"] = None if two.above is None else solve_run_section(two.above)
    chosen = two.below or two.above or min(two.runs, key=lambda r: r.residual)
    rows = _solution_rows(cfg, kernel, chosen.solution)
    result["samples"] = {"columns": list(SOLVE_COLUMNS), "rows": [list(r) for r in rows]}
    return result, rows


def run_certify(cfg: RunConfig) -> dict:
    hyp, _ = run_validate(cfg)
    kernel = GreenKernel(cfg.spec.coefficients, cfg.quad)
    rep = certify(
        cfg.spec, kernel, cfg.window, cfg.q, cfg.quad, user=cfg.constants, reference=cfg.reference_values
    )
    ing = rep.ingredients
    computed = {
        "int_G_p_k": (ing.int_Gpk, ing.reasons.get("int_G_p_k", "")),
        "int_psi": (ing.int_psi, ing.reasons.get("int_psi", "")),
    }
    return {
        "window": list(rep.window),
        "q": rep.q,
        "hypotheses": hyp["hypotheses"],
        "ingredients": ingredients_section(ing),
        "constants": constants_section(rep.constants),
        "conditions": conditions_section(rep),
        "reference_checks": _reference_checks(cfg.reference_values, computed),
    }


def _emit(text: str, out: str | None):
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ibvp", description=__doc__)
    parser.add_argument("--version", action="version", version=f"ibvp {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("validate", "check the standing hypotheses"),
        ("green", "tabulate the Green's function"),
        ("solve", "search for fixed points of T"),
        ("certify", "evaluate the existence conditions"),
    ):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=True, help="config path or bundled name")
        p.add_argument("--out", help="output file (default stdout)")
        p.add_argument("--format", choices=("json", "csv"), default="json")
        p.add_argument("--tol", type=float, help="solver tolerance override")
        p.add_argument("--seed", type=int, help="sampling seed")
        if name == "green":
            p.add_argument("--grid", default="0.5:5:10", help="start:stop:num for both t and s")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = _with_seed(load_config(args.config), args.seed)
        if args.tol is not None:
            cfg = dataclasses.replace(cfg, solve=dataclasses.replace(cfg.solve, tol=args.tol))
        seed = cfg.sampling.seed
        if args.command == "validate":
            result, _ = run_validate(cfg)
            text = dumps(_envelope(cfg, "validate", seed, result))
            if args.format == "csv":
                text = to_csv(
                    ("name", "status", "detail"), [(h["name"], h["status"], h["detail"]) for h in result["hypotheses"]]
                )
        elif args.command == "green":
            rows = run_green(cfg, _parse_grid(args.grid))
            if args.format == "csv":
                text = to_csv(GREEN_COLUMNS, rows)
            else:
                text = dumps(_envelope(cfg, "green", seed, {"columns": list(GREEN_COLUMNS), "rows": [list(r) for r in rows]}))
        elif args.command == "solve":
            result, rows = run_solve(cfg)
            if args.format == "csv":
                text = to_csv(SOLVE_COLUMNS, rows)
                if result["skipped"]:
                    print(f"solve skipped: {result['reason']}", file=sys.stderr)
            else:
                text = dumps(_envelope(cfg, "solve", seed, result))
        else:
            result = run_certify(cfg)
            if args.format == "csv":
                text = to_csv(
                    ("name", "direction", "lhs", "status", "reason"),
                    [(c["name"], c["direction"], c["lhs"], c["status"], c["reason"]) for c in result["conditions"]],
                )
            else:
                text = dumps(_envelope(cfg, "certify", seed, result))
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except IBVPError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    _emit(text, args.out)
    return 0


if __name__ == "__main__":
    sys.exit(main())
