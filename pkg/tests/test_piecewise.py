import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ibvp.errors import TailModelError
from ibvp.piecewise import LEFT, RIGHT, Mesh, PiecewiseC1Function


def test_mesh_build_places_jumps_and_caps_pieces():
    m = Mesh.build([0.5, 2.25], max_piece=1.0)
    assert m.T == 12.25
    assert {0.5, 2.25} <= set(m.knots.tolist())
    assert np.max(np.diff(m.knots)) <= 1.0 + 1e-12
    assert m.nodes.shape == (m.pieces, 17)
    assert m.nodes[0, 0] == 0.0 and m.nodes[-1, -1] == m.T


@pytest.mark.parametrize("pts", [[0.0], [1.0, 1.0], [-1.0]])
def test_mesh_rejects_bad_points(pts):
    with pytest.raises(ValueError):
        Mesh.build(pts)


def test_mesh_sorts_points():
    assert Mesh.build([2.0, 1.0]).jumps == (1.0, 2.0)


def test_mesh_rejects_short_horizon():
    with pytest.raises(ValueError):
        Mesh.build([3.0], T=2.0)


def test_locate_respects_side():
    m = Mesh.build([0.5], max_piece=1.0)
    j = int(np.flatnonzero(m.knots == 0.5)[0])
    assert m.locate(np.array([0.5]), LEFT)[0] == j - 1
    assert m.locate(np.array([0.5]), RIGHT)[0] == j


def test_interpolation_is_spectrally_accurate():
    m = Mesh.build([], T=6.0)
    x = PiecewiseC1Function.from_callable(m, np.sin, np.cos, x_inf=0.0)
    t = np.linspace(0, 6, 301)
    assert np.max(np.abs(x(t) - np.sin(t))) < 1e-13
    assert np.max(np.abs(x.derivative(t) - np.cos(t))) < 1e-13


def test_spectral_derivative_without_dfun():
    m = Mesh.build([], T=6.0)
    x = PiecewiseC1Function.from_callable(m, lambda t: np.exp(-t))
    t = np.linspace(0, 6, 97)
    assert np.max(np.abs(x.derivative(t) + np.exp(-t))) < 1e-11
    assert x.x_inf == 0.0


def test_per_interval_functions_and_jumps():
    m = Mesh.build([1.0, 2.0])
    x = PiecewiseC1Function.from_callable(m, [lambda t: t, lambda t: t + 1, lambda t: 3 * t], x_inf=5.0)
    (d1, dd1), (d2, dd2) = x.jumps()
    assert d1 == pytest.approx(1.0) and dd1 == pytest.approx(0.0, abs=1e-10)
    assert d2 == pytest.approx(3.0) and dd2 == pytest.approx(2.0, abs=1e-10)
    vl, vr, _, _ = x.one_sided(1.0)
    assert x(1.0) == vl  # left-continuous
    assert vr == pytest.approx(2.0)


def test_wrong_number_of_pieces():
    with pytest.raises(ValueError):
        PiecewiseC1Function.from_callable(Mesh.build([1.0]), [np.sin])


def test_tail_model():
    m = Mesh.build([], T=5.0)
    x = PiecewiseC1Function(m, np.full(m.nodes.shape, 2.0), np.zeros(m.nodes.shape), x_inf=1.0)
    v, d = x.eval(5.0 + math.log(2))
    assert v == pytest.approx(1.5)
    assert d == 0.0
    assert x(math.inf) == 1.0


@pytest.mark.parametrize("t", [-1.0, math.nan])
def test_evaluation_outside_domain(t):
    x = PiecewiseC1Function.constant(Mesh.build([]), 1.0)
    with pytest.raises(TailModelError):
        x(t)


def test_bad_side():
    x = PiecewiseC1Function.constant(Mesh.build([]), 1.0)
    with pytest.raises(ValueError):
        x.eval(1.0, "middle")


def test_arrays_are_read_only():
    x = PiecewiseC1Function.constant(Mesh.build([]), 1.0)
    with pytest.raises(ValueError):
        x.values[0, 0] = 2.0


def test_algebra_and_distances():
    m = Mesh.build([1.0])
    a = PiecewiseC1Function.constant(m, 1.0)
    b = PiecewiseC1Function.from_callable(m, np.sin, np.cos, x_inf=0.0)
    c = 2 * a - b
    assert c(0.3) == pytest.approx(2 - math.sin(0.3))
    assert a.node_distance(a + b - b) == pytest.approx(0.0, abs=1e-15)
    assert a.node_sup() == 1.0 and a.node_min() == 1.0
    with pytest.raises(ValueError):
        a.node_distance(PiecewiseC1Function.constant(Mesh.build([2.0]), 1.0))


def test_bpc1_norm_of_sine():
    # sup |sin t| + |cos t| = sqrt(2) at t = pi/4.
    m = Mesh.build([], T=6.0)
    x = PiecewiseC1Function.from_callable(m, np.sin, np.cos, x_inf=0.0)
    assert x.bpc1_norm() == pytest.approx(math.sqrt(2), abs=1e-9)


def test_bpc1_norm_sees_limit_at_infinity():
    m = Mesh.build([], T=3.0)
    x = PiecewiseC1Function(m, np.zeros(m.nodes.shape), np.zeros(m.nodes.shape), x_inf=4.0)
    assert x.bpc1_norm() == 4.0


@settings(max_examples=50, deadline=None)
@given(st.floats(-10, 10), st.floats(-10, 10), st.floats(0, 10))
def test_norm_is_homogeneous_and_dominates_samples(a, b, t):
    m = Mesh.build([1.0], T=8.0)
    x = PiecewiseC1Function.from_callable(m, lambda s: a * np.exp(-s) + b, lambda s: -a * np.exp(-s), x_inf=b)
    n = x.bpc1_norm()
    v, d = x.eval(t)
    assert abs(v) + abs(d) <= n + 1e-9
    assert (2 * x).bpc1_norm() == pytest.approx(2 * n, rel=1e-9, abs=1e-12)
