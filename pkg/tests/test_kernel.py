import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import _corpus
from ibvp.errors import DegenerateKernelError, NonIntegrableWeightError, ZeroDenominatorError
from ibvp.kernel import LEFT, RIGHT, GreenKernel, SLCoefficients

NAMES = sorted(_corpus.COEFFICIENT_SETS)
times = st.floats(min_value=0.0, max_value=20.0, allow_nan=False)


@pytest.mark.parametrize("name", NAMES)
@settings(max_examples=60, deadline=None)
@given(t=times, s=times)
def test_symmetry_and_diagonal_bound(kernels, name, t, s):
    k = kernels[name]
    assert abs(k.green(t, s) - k.green(s, t)) <= 1e-12
    assert k.green(t, s) <= k.green(s, s) + 1e-12
    assert k.green(t, s) > 0


@pytest.mark.parametrize("name", NAMES)
@settings(max_examples=60, deadline=None)
@given(t=times, s=times)
def test_derivative_bound(kernels, name, t, s):
    k = kernels[name]
    c = k.constant_c()
    for side in (LEFT, RIGHT):
        assert abs(k.green_dt(t, s, side)) <= c / k.p(t) * k.green(s, s) + 1e-10


@pytest.mark.parametrize("name", NAMES)
@settings(max_examples=60, deadline=None)
@given(t=st.floats(1.0, 2.0), s=times)
def test_lower_bound_on_window(kernels, name, t, s):
    k = kernels[name]
    assert k.green(t, s) >= k.constant_w(1.0, 2.0) * k.green(s, s) - 1e-12


@pytest.mark.parametrize("name", NAMES)
@settings(max_examples=60, deadline=None)
@given(s=st.floats(1e-3, 20.0))
def test_unit_jump_of_derivative(kernels, name, s):
    k = kernels[name]
    jump = k.green_dt(s, s, RIGHT) - k.green_dt(s, s, LEFT)
    assert k.p(s) * jump == pytest.approx(-1.0, abs=1e-10)


@pytest.mark.parametrize("name", NAMES)
@settings(max_examples=40, deadline=None)
@given(t=st.floats(1e-2, 20.0), s=st.floats(1e-2, 20.0))
def test_derivatives_match_finite_differences(kernels, name, t, s):
    k = kernels[name]
    if abs(t - s) < 1e-3:
        return
    h = 1e-6
    fd_t = (k.green(t + h, s) - k.green(t - h, s)) / (2 * h)
    fd_s = (k.green(t, s + h) - k.green(t, s - h)) / (2 * h)
    assert k.green_dt(t, s) == pytest.approx(fd_t, abs=1e-6)
    assert k.green_ds(t, s) == pytest.approx(fd_s, abs=1e-6)


@pytest.mark.parametrize("name", NAMES)
def test_homogeneous_solutions_satisfy_boundary_data(kernels, name):
    k = kernels[name]
    c = k.coefficients
    assert k.theta(0.0) == c.b1
    assert k.phi(1e300) == pytest.approx(c.b2, abs=1e-12)
    assert k.theta_inf == pytest.approx(c.b1 + c.a1 * k.B0inf)
    # p theta' and p phi' are constant.
    t = np.linspace(0, 10, 11)
    assert np.allclose(k.p(t) * k.theta_prime(t), c.a1)
    assert np.allclose(k.p(t) * k.phi_prime(t), -c.a2)
    # Wronskian identity gives D.
    W = k.p(t) * (k.theta(t) * k.phi_prime(t) - k.theta_prime(t) * k.phi(t))
    assert np.allclose(W, -k.D, atol=1e-12)


def test_example_closed_forms(example_kernel):
    k = example_kernel
    t = np.linspace(0, 20, 50)
    assert np.max(np.abs(k.theta(t) - (2 - np.exp(-t)))) <= 1e-10
    assert np.all(k.phi(t) == 1.0)
    assert abs(k.D - 1.0) <= 1e-10
    assert abs(k.green(1.0, 2.0) - (2 - math.exp(-1))) <= 1e-10
    assert k.constant_c() == 1.0
    assert abs(k.constant_w(1.0, 2.0) - 0.8160602794142788) <= 1e-9
    assert k.B0inf == pytest.approx(1.0, abs=1e-12)
    assert k.green_bar(1.0) == pytest.approx(2 - math.exp(-1), abs=1e-12)
    assert k.sup_inverse_weight() == pytest.approx(1.0, abs=1e-12)


def test_algebraic_weight_b_integral(kernels):
    k = kernels["algebraic"]
    # B(t, s) = 1/(1+t) - 1/(1+s) for p = (1+t)^2.
    assert k.b_integral(1.0, 3.0) == pytest.approx(0.5 - 0.25, abs=1e-13)
    assert k.b_integral(2.0, math.inf) == pytest.approx(1 / 3, abs=1e-12)
    # Far out B is a difference of cached totals, so only absolute accuracy holds.
    assert k.b_integral(1e16, 1e17) == pytest.approx(9e-17, abs=1e-15)
    assert k.D == pytest.approx(1 * 3 + 2 * 1 + 2 * 1 * 1.0, abs=1e-12)


def test_gs_diagonal_variants(example_kernel):
    k = example_kernel
    t = 0.7
    # a2 = 0 leaves one nonzero side.
    assert k.gs_diagonal(t, "max") == pytest.approx(1.0)
    assert k.gs_diagonal(t, "min") == 0.0


def test_green_ds_branches(kernels):
    k = kernels["symmetric"]
    s = 2.0
    jump = k.p(s) * (k.green_ds(s, s, LEFT) - k.green_ds(s, s, RIGHT))
    assert jump == pytest.approx(-1.0, abs=1e-12)


def test_vectorised_evaluation(kernels):
    k = kernels["symmetric"]
    t = np.linspace(0.1, 5, 7)
    s = np.linspace(5, 0.1, 7)
    G = k.green(t, s)
    assert G.shape == (7,)
    assert all(G[i] == k.green(float(t[i]), float(s[i])) for i in range(7))


def test_tie_requires_side(example_kernel):
    with pytest.raises(ValueError):
        example_kernel.green_dt(1.0, 1.0)


def test_non_integrable_weight():
    with pytest.raises(NonIntegrableWeightError):
        GreenKernel(SLCoefficients(1, 0, 1, 1, lambda t: 1.0 + 0 * t))


def test_weight_must_be_positive():
    with pytest.raises(NonIntegrableWeightError) as info:
        GreenKernel(SLCoefficients(1, 0, 1, 1, lambda t: np.exp(t) - 2))
    assert info.value.location is not None


def test_degenerate_coupling():
    with pytest.raises(DegenerateKernelError):
        GreenKernel(SLCoefficients(0, 0, 1, 1, np.exp))


def test_zero_denominator_for_c():
    k = GreenKernel(SLCoefficients(1, 1, 0, 1, np.exp))
    with pytest.raises(ZeroDenominatorError):
        k.constant_c()


def test_negative_coefficient_rejected():
    with pytest.raises(ValueError):
        SLCoefficients(-1, 0, 1, 1, np.exp)


def test_w_window_validation(example_kernel):
    with pytest.raises(ValueError):
        example_kernel.constant_w(2.0, 1.0)
