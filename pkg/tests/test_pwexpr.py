import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from gen import grid_direction, random_expr, richardson_slope
from odpcalc.errors import DomainError, UnsupportedExpressionError
from odpcalc.oracle import sample_subdiff
from odpcalc.polytope import PolyUnion
from odpcalc.pwexpr import (Abs, Max, Spline, Sqrt, VectorFunc, dir_derivative,
                            dir_limiting_subdiff, evaluate, from_json, gradient, is_piecewise_affine,
                            limiting_subdiff, linear_pieces, nonsmooth_at, scalarization_subdiff,
                            smax, smin, var)

x1, x2 = var(0), var(1)
seeds = st.integers(0, 2 ** 32 - 1)


def test_evaluate_and_gradient():
    e = x1 ** 2 * x2 + 3 * x2
    assert evaluate(e, [2.0, 1.0]) == pytest.approx(7.0)
    assert gradient(e, [2.0, 1.0]) == pytest.approx([4.0, 7.0])


def test_abs_subdiff_is_interval():
    S = limiting_subdiff(Abs(x1), [0.0])
    assert S.approx_equal(PolyUnion([[[-1.0], [1.0]]]))


def test_negative_abs_subdiff_is_two_points():
    S = limiting_subdiff(Abs(x1), [0.0], sign=-1)
    assert S.approx_equal(PolyUnion([[[-1.0]], [[1.0]]]))


def test_directional_subdiff_picks_active_branch():
    S = dir_limiting_subdiff(Abs(x1), [0.0], [1.0])
    assert S.approx_equal(PolyUnion.point([1.0]))


def test_max_subdiff_at_tie():
    # max(x1^2, x1) - x2 at 0: hull of the branch gradients
    e = smax(x1 ** 2, x1) - x2
    S = limiting_subdiff(e, [0.0, 0.0])
    assert S.approx_equal(PolyUnion([[[0.0, -1.0], [1.0, -1.0]]]))


def test_min_scalarization_flag():
    F = VectorFunc([smax(x1 ** 2, x1) - x2, smin(x1 ** 2, -x1) + x2], 2)
    _, exact = scalarization_subdiff(F, [1.0, 0.0], [0.0, 0.0])
    assert exact
    _, exact = scalarization_subdiff(F, [1.0, 1.0], [0.0, 0.0])
    assert not exact


def test_directional_generators_along_diagonal():
    F = VectorFunc([smax(x1 ** 2, x1) - x2, smin(x1 ** 2, -x1) + x2], 2)
    d = np.ones(2) / math.sqrt(2)
    S1 = dir_limiting_subdiff(F[0], [0.0, 0.0], d)
    S2 = dir_limiting_subdiff(F[1], [0.0, 0.0], d)
    assert S1.approx_equal(PolyUnion.point([1.0, -1.0]), 1e-9)
    assert S2.approx_equal(PolyUnion.point([-1.0, 1.0]), 1e-9)


def test_nested_kink_rejected():
    with pytest.raises(UnsupportedExpressionError):
        Abs(smax(x1, x2))
    with pytest.raises(UnsupportedExpressionError):
        from_json({"op": "abs", "arg": {"op": "max", "args": [{"op": "var", "index": 0}, 0]}})


def test_unknown_op_rejected():
    with pytest.raises(UnsupportedExpressionError, match="unknown op"):
        from_json({"op": "exp", "arg": 1})


def test_sqrt_domain():
    with pytest.raises(DomainError):
        evaluate(Sqrt(x1), [-1.0])
    e = Sqrt(x1, tau0=0.25, extend=True)
    assert evaluate(e, [0.0]) == pytest.approx(0.5 - 0.25)
    assert gradient(e, [0.0]) == pytest.approx([1.0])


def test_spline_must_be_c1():
    with pytest.raises(UnsupportedExpressionError):
        Spline(x1, (0.0,), ((0.0, 1.0), (0.0, 2.0)))


def test_piecewise_affine_degree():
    assert is_piecewise_affine(Abs(x1) - x2)
    assert not is_piecewise_affine(smax(x1 ** 2, x1))


def test_linear_pieces_cover_abs():
    pieces = linear_pieces(Abs(x1 - x2), np.zeros(2))
    grads = sorted(tuple(g) for _, g in pieces)
    assert grads == [(-1.0, 1.0), (1.0, -1.0)]


@given(seeds)
def test_json_round_trip(seed):
    rng = np.random.default_rng(seed)
    e = random_expr(rng, 3)
    back = from_json(json.loads(json.dumps(e.to_json())))
    x = rng.standard_normal(3)
    assert evaluate(back, x) == pytest.approx(evaluate(e, x), rel=1e-12, abs=1e-12)


@given(seeds)
def test_dir_derivative_matches_difference_quotient(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 4))
    e = random_expr(rng, n)
    x = np.zeros(n) if rng.random() < 0.7 else 0.3 * rng.integers(-2, 3, size=n).astype(float)
    d = grid_direction(rng, n)
    dd = dir_derivative(e, x, d)
    fd = richardson_slope(lambda z: evaluate(e, z), x, d)
    assert abs(dd - fd) <= 1e-5 * max(1.0, abs(dd))


@given(seeds)
def test_sampled_gradients_lie_in_subdiff(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 4))
    e = random_expr(rng, n)
    x = np.zeros(n)
    _, clusters = sample_subdiff(e, x, grid=60, radii=(1e-6,), seed=seed)
    assert clusters.directed_hausdorff(limiting_subdiff(e, x)) <= 1e-3


@given(seeds)
def test_sampled_directional_gradients_lie_in_dir_subdiff(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 4))
    e = random_expr(rng, n)
    x = np.zeros(n)
    d = grid_direction(rng, n)
    _, clusters = sample_subdiff(e, x, grid=60, radii=(1e-6,), seed=seed, d=d)
    assert clusters.directed_hausdorff(dir_limiting_subdiff(e, x, d)) <= 1e-3


@given(seeds)
def test_dir_subdiff_inside_subdiff(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 4))
    e = random_expr(rng, n)
    d = grid_direction(rng, n)
    for s in (1, -1):
        D = dir_limiting_subdiff(e, np.zeros(n), d, s)
        assert D.is_subset(limiting_subdiff(e, np.zeros(n), s), 1e-9)


@given(seeds)
def test_smooth_point_has_singleton_subdiff(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 4))
    e = random_expr(rng, n)
    x = rng.standard_normal(n)
    if nonsmooth_at(e, x):
        return
    S = limiting_subdiff(e, x)
    assert S.approx_equal(PolyUnion.point(gradient(e, x)), 1e-9)


def test_vector_func_rejects_out_of_range_variable():
    with pytest.raises(UnsupportedExpressionError):
        VectorFunc([var(2)], 2)


def test_max_single_argument_is_smooth_there():
    assert not nonsmooth_at(Max((x1,)), [0.0])
