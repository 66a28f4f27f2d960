import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from renewalctl.optimizer import (CERT_GRID, CERT_VERTEX, OptimizerError, is_multiaffine,
                                  maximize, maximize_bangbang, maximize_box)
from renewalctl.polyfit import ProfitPolynomial

coef = st.floats(-50, 50, allow_nan=False)


def bilinear(c):
    return ProfitPolynomial(("eta1", "eta2"),
                            {(0, 0): c[0], (1, 0): c[1], (0, 1): c[2], (1, 1): c[3]}, (1, 1))


def test_bangbang_simple():
    opt = maximize_bangbang(bilinear([-20.0, 23.0, 28.2, -28.2]))
    assert opt.argmax == (0.0, 1.0) and opt.value == pytest.approx(8.2)
    assert opt.is_vertex and opt.certificate == CERT_VERTEX


def test_bangbang_tie_break_is_lexicographic():
    opt = maximize_bangbang(bilinear([1.0, 0.0, 0.0, 0.0]))
    assert opt.argmax == (0.0, 0.0)


def test_bangbang_callable_and_cap():
    opt = maximize_bangbang(lambda x: -abs(x[0] - 1) - abs(x[2]), n=3)
    assert opt.argmax == (1.0, 0.0, 0.0)
    with pytest.raises(OptimizerError):
        maximize_bangbang(lambda x: 0.0, n=30)
    with pytest.raises(OptimizerError):
        maximize_bangbang(lambda x: 0.0)


@settings(max_examples=40, deadline=None)
@given(c=st.lists(coef, min_size=4, max_size=4))
def test_bangbang_beats_interior_for_multiaffine(c):
    poly = bilinear(c)
    opt = maximize_bangbang(poly)
    grid = np.array(list(itertools.product(np.linspace(0, 1, 21), repeat=2)))
    assert opt.value >= poly.evaluate_many(grid).max() - 1e-9


@settings(max_examples=20, deadline=None)
@given(c=st.lists(coef, min_size=4, max_size=4), shift=coef)
def test_bangbang_invariant_under_shift_and_swap(c, shift):
    poly = bilinear(c)
    opt = maximize_bangbang(poly)
    shifted = bilinear([c[0] + shift, c[1], c[2], c[3]])
    assert maximize_bangbang(shifted).value == pytest.approx(opt.value + shift, abs=1e-9)
    assert maximize_bangbang(poly.permuted([1, 0])).value == pytest.approx(opt.value)


def test_box_interior_maximum():
    # -(x - 0.3)^2 - (y - 0.8)^2 expanded
    poly = ProfitPolynomial(("x", "y"), {(0, 0): -(0.09 + 0.64), (1, 0): 0.6, (0, 1): 1.6,
                                         (2, 0): -1.0, (0, 2): -1.0}, (2, 2), 2)
    opt = maximize_box(poly)
    np.testing.assert_allclose(opt.argmax, (0.3, 0.8), atol=1e-8)
    assert opt.value == pytest.approx(0.0, abs=1e-14)
    assert not opt.is_vertex and opt.certificate == CERT_GRID


def test_box_boundary_maximum():
    poly = ProfitPolynomial(("x",), {(1,): 1.0, (2,): -0.25}, (2,))
    opt = maximize_box(poly)
    assert opt.argmax == (1.0,) and opt.is_vertex


@settings(max_examples=15, deadline=None)
@given(c=st.lists(coef, min_size=6, max_size=6))
def test_box_not_worse_than_grid(c):
    basis = [(0, 0), (1, 0), (0, 1), (1, 1), (2, 0), (0, 2)]
    poly = ProfitPolynomial(("x", "y"), dict(zip(basis, c)), (2, 2), 2)
    opt = maximize_box(poly, grid_density=21)
    grid = np.array(list(itertools.product(np.linspace(0, 1, 41), repeat=2)))
    assert opt.value >= poly.evaluate_many(grid).max() - 1e-9


def test_finer_grid_never_worse():
    poly = ProfitPolynomial(("x", "y"), {(1, 0): 3.0, (2, 0): -4.1, (1, 1): 1.3, (0, 2): -0.7,
                                         (0, 1): 0.2}, (2, 2), 2)
    coarse = maximize_box(poly, grid_density=5)
    fine = maximize_box(poly, grid_density=201)
    assert fine.value >= coarse.value - 1e-12


def test_dispatch_and_detection():
    poly = bilinear([0.0, 1.0, 1.0, -3.0])
    assert is_multiaffine(poly)
    assert maximize(poly, multiaffine=True).certificate == CERT_VERTEX
    quad = ProfitPolynomial(("x",), {(2,): -1.0}, (2,))
    assert not is_multiaffine(quad)
    assert maximize(quad, multiaffine=False).argmax == (0.0,)


def test_box_rejects_bad_input():
    with pytest.raises(OptimizerError):
        maximize_box(lambda x: 0.0)
    with pytest.raises(OptimizerError):
        maximize_box(ProfitPolynomial(("x",), {(1,): 1.0}, (1,)), grid_density=1)
