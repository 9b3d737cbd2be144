import numpy as np
import pytest

import _corpus
from ibvp.operator import apply_T
from ibvp.piecewise import PiecewiseC1Function
from ibvp.problem import ProblemSpec
from ibvp.solver import SolveConfig, find_two_solutions, picard_solve


def test_constant_map_converges_in_two_steps(example_kernel):
    spec = _corpus.constant_map_spec()
    cfg = SolveConfig(beta=1.0)
    res = picard_solve(spec, example_kernel, PiecewiseC1Function.constant(cfg.mesh(spec), 1.0), cfg)
    assert res.converged and res.iterations == 2
    assert res.residual < 1e-14


@pytest.mark.parametrize("beta", [0.3, 0.5, 1.0])
def test_contraction_converges_with_monotone_history(example_kernel, beta):
    spec = _corpus.contraction_spec()
    cfg = SolveConfig(beta=beta, tol=1e-8)
    res = picard_solve(spec, example_kernel, PiecewiseC1Function.constant(cfg.mesh(spec), 1.0), cfg)
    assert res.converged and res.error is None
    assert res.residual <= 1e-8 and res.iterations <= 200
    assert all(b <= a * (1 + 1e-9) for a, b in zip(res.history, res.history[1:]))
    assert res.positivity_certified
    assert res.norm > 0


def test_zero_problem_gives_exact_zero(example_kernel):
    spec = _corpus.zero_spec()
    cfg = SolveConfig(beta=0.5)
    res = picard_solve(spec, example_kernel, PiecewiseC1Function.constant(cfg.mesh(spec), 1.0), cfg)
    assert res.converged
    assert res.norm == 0.0 and res.residual == 0.0
    assert not res.positivity_certified


def test_divergence_guard(example_kernel):
    co = example_kernel.coefficients
    spec = ProblemSpec(co, g1=lambda x: 10 * np.asarray(x, dtype=float), psi=lambda t: np.exp(-t))
    cfg = SolveConfig(beta=1.0, max_iter=200)
    res = picard_solve(spec, example_kernel, PiecewiseC1Function.constant(cfg.mesh(spec), 1.0), cfg)
    assert not res.converged
    assert res.error == "iterates left the divergence guard"


def test_operator_failure_is_reported(example_kernel):
    spec = _corpus.example_spec()
    cfg = SolveConfig()
    res = picard_solve(spec, example_kernel, PiecewiseC1Function.constant(cfg.mesh(spec), 1.0), cfg)
    assert not res.converged and "integral" in res.error


def test_max_iter_respected(example_kernel):
    spec = _corpus.contraction_spec()
    cfg = SolveConfig(beta=0.3, max_iter=3)
    res = picard_solve(spec, example_kernel, PiecewiseC1Function.constant(cfg.mesh(spec), 1.0), cfg)
    assert not res.converged and res.iterations == 3 and len(res.history) == 3


def test_multistart_deduplicates(example_kernel):
    spec = _corpus.contraction_spec()
    cfg = SolveConfig(beta=1.0, initial_levels=(0.1, 10.0))
    two = find_two_solutions(spec, example_kernel, q=1.0, cfg=cfg)
    assert len(two.runs) == 2 and [r.start for r in two.runs] == [0.1, 10.0]
    assert len(two.distinct) == 1
    assert two.below is two.distinct[0] and two.above is None
    x = two.below.solution
    assert x.node_distance(apply_T(spec, example_kernel, x).Tx) <= 1e-8


@pytest.mark.parametrize(
    "kwargs", [{"beta": 0.0}, {"beta": 1.5}, {"tol": 0.0}, {"max_iter": 0}, {"initial_levels": ()}, {"initial_levels": (-1.0,)}]
)
def test_config_validation(kwargs):
    with pytest.raises(ValueError):
        SolveConfig(**kwargs)


def test_q_must_be_positive(example_kernel):
    with pytest.raises(ValueError):
        find_two_solutions(_corpus.zero_spec(), example_kernel, q=0.0)
