import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from polymkv.core import FiniteSet, Interval
from polymkv.ctrlsearch import (
    Method,
    SearchSpec,
    default_search,
    maximize,
    maximize_batch,
    quadratic_argmax,
)

centers = st.floats(-3, 3)
curv = st.floats(0.1, 10)


@given(st.lists(centers, min_size=1, max_size=10), curv)
def test_golden_finds_concave_maximum(c, k):
    c = np.array(c)
    space = Interval(-2.0, 2.0)
    a, v = maximize_batch(lambda a: -k * (a - c) ** 2, c.size, space, SearchSpec(Method.GOLDEN, tol=1e-8))
    np.testing.assert_allclose(a, np.clip(c, -2, 2), atol=1e-6)


@given(st.lists(centers, min_size=1, max_size=10), curv)
def test_parabolic_finds_concave_maximum(c, k):
    c = np.array(c)
    space = Interval(-2.0, 2.0)
    a, _ = maximize_batch(lambda a: -k * (a - c) ** 2 + 0.1 * a**3 / 10, c.size, space,
                          SearchSpec(Method.PARABOLIC, tol=1e-8))
    ref, _ = maximize_batch(lambda a: -k * (a - c) ** 2 + 0.1 * a**3 / 10, c.size, space,
                            SearchSpec(Method.GOLDEN, tol=1e-10, max_evals=500))
    np.testing.assert_allclose(a, ref, atol=1e-5)


@given(st.floats(-5, 5), st.floats(-5, 5), st.floats(-5, 5))
def test_quadratic_argmax_beats_grid(c1, c2, shift):
    space = Interval(-1.0, 2.0)
    a = quadratic_argmax(0.0, c1, c2, space)
    grid = np.linspace(space.lo, space.hi, 2001)
    best = np.max(c1 * grid + c2 * grid**2)
    assert c1 * a + c2 * a * a >= best - 1e-9
    assert space.lo <= a <= space.hi


def test_quadratic_argmax_ties_to_lower_endpoint():
    assert quadratic_argmax(0.0, 0.0, 1.0, Interval(-1.0, 1.0)) == -1.0
    assert quadratic_argmax(0.0, 0.0, 0.0, Interval(-1.0, 1.0)) == -1.0


@given(st.lists(centers, min_size=1, max_size=10), curv)
def test_closed_form_recovers_quadratic(c, k):
    c = np.array(c)
    a, _ = maximize_batch(lambda a: 3.0 - k * (a - c) ** 2, c.size, Interval(-2.0, 2.0),
                          SearchSpec(Method.CLOSED_FORM))
    np.testing.assert_allclose(a, np.clip(c, -2, 2), atol=1e-9)


def test_closed_form_with_coefficients():
    a, _ = maximize_batch(lambda a: -(a**2) + a, 2, Interval(-2.0, 2.0), SearchSpec(Method.CLOSED_FORM),
                          quadratic=(0.0, np.ones(2), -np.ones(2)))
    np.testing.assert_allclose(a, 0.5)


def test_exhaustive_ties_to_lowest():
    space = FiniteSet((2.0, -1.0, 0.5))
    a, v = maximize_batch(lambda a: np.zeros_like(a), 3, space, SearchSpec(Method.EXHAUSTIVE))
    np.testing.assert_array_equal(a, -1.0)


@given(st.lists(st.floats(-10, 10), min_size=2, max_size=6, unique=True), st.floats(-10, 10))
def test_exhaustive_is_argmax(values, c):
    space = FiniteSet(tuple(values))
    a, v = maximize_batch(lambda a: -((a - c) ** 2), 1, space, SearchSpec(Method.EXHAUSTIVE))
    assert v[0] == max(-((x - c) ** 2) for x in values)


def test_multistart_escapes_local_maximum():
    # two peaks; the larger one sits in the left part of the interval
    def f(a):
        return np.exp(-50 * (a + 1.5) ** 2) * 2 + np.exp(-(a - 1.0) ** 2)

    single, _ = maximize_batch(f, 1, Interval(-2.0, 2.0), SearchSpec(Method.GOLDEN, tol=1e-8))
    multi, _ = maximize_batch(f, 1, Interval(-2.0, 2.0), SearchSpec(Method.GOLDEN, tol=1e-8).with_multistart(4))
    assert abs(multi[0] + 1.5) < 1e-4
    assert abs(single[0] - 1.0) < 1e-4


def test_boundary_optimum_found():
    a, _ = maximize_batch(lambda a: a, 1, Interval(-1.0, 3.0), SearchSpec(Method.GOLDEN))
    assert a[0] == 3.0


def test_degenerate_interval():
    a, v = maximize_batch(lambda a: -a, 4, Interval(1.0, 1.0), SearchSpec(Method.GOLDEN))
    np.testing.assert_array_equal(a, 1.0)


def test_method_space_mismatch():
    with pytest.raises(ValueError):
        maximize_batch(lambda a: a, 1, Interval(0.0, 1.0), SearchSpec(Method.EXHAUSTIVE))
    with pytest.raises(ValueError):
        maximize_batch(lambda a: a, 1, FiniteSet((0.0, 1.0)), SearchSpec(Method.GOLDEN))


def test_search_spec_validation():
    with pytest.raises(ValueError):
        SearchSpec(tol=0.0)
    with pytest.raises(ValueError):
        SearchSpec(multistart=0)
    with pytest.raises(ValueError):
        SearchSpec(max_evals=2)
    assert default_search(FiniteSet((1.0,))).method is Method.EXHAUSTIVE
    assert default_search(Interval(0.0, 1.0)).method is Method.GOLDEN


def test_scalar_maximize_unpacks():
    a, v = maximize(lambda a: -(a - 0.25) ** 2, Interval(0.0, 1.0))
    assert a == pytest.approx(0.25, abs=1e-6)
    res = maximize(lambda a: -(a - 0.25) ** 2, Interval(0.0, 1.0), SearchSpec(max_evals=5))
    assert res.budget_exhausted
