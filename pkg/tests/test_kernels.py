import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.optimize import linprog

from gen import INTERVALS
from odpcalc import _kernels_py, kernels
from odpcalc.linprog import find_nonneg, solve_lp
from odpcalc.polytope import PolyUnion, halfspaces, hull_distance, intersect_polytopes

compiled = pytest.importorskip("odpcalc._kernels") if kernels.BACKEND == "compiled" else None
seeds = st.integers(0, 2 ** 32 - 1)


def _boxes(rng, t, ell):
    lo = np.empty((t, ell))
    hi = np.empty((t, ell))
    for j in range(t):
        for i in range(ell):
            lo[j, i], hi[j, i] = INTERVALS[int(rng.integers(0, len(INTERVALS)))]
    return lo, hi


@given(seeds)
def test_box_distances_backends_agree(seed):
    rng = np.random.default_rng(seed)
    lo, hi = _boxes(rng, 3, 4)
    Y = rng.standard_normal((30, 4))
    ref = np.linalg.norm(Y[:, None, :] - np.clip(Y[:, None, :], lo, hi), axis=2)
    assert np.allclose(_kernels_py.box_distances(Y, lo, hi), ref)
    if compiled is not None:
        assert np.allclose(compiled.box_distances(Y, lo, hi), ref)


@given(seeds)
def test_normal_codes_backends_agree(seed):
    if compiled is None:
        pytest.skip("no compiled backend")
    rng = np.random.default_rng(seed)
    lo, hi = _boxes(rng, 2, 3)
    Y = rng.integers(-1, 2, size=(20, 3)).astype(float)
    assert np.array_equal(compiled.normal_codes(Y, lo, hi, 1e-9), _kernels_py.normal_codes(Y, lo, hi, 1e-9))


@given(seeds)
def test_min_norm_point_optimality(seed):
    rng = np.random.default_rng(seed)
    m, n = int(rng.integers(1, 7)), int(rng.integers(1, 4))
    V = rng.standard_normal((m, n)) + rng.standard_normal(n)
    for impl in filter(None, (_kernels_py, compiled)):
        x, w = impl.min_norm_point(V)
        assert w.sum() == pytest.approx(1.0) and np.all(w >= -1e-12)
        assert np.allclose(w @ V, x, atol=1e-10)
        # x is the nearest hull point to 0 iff every vertex satisfies v.x >= |x|^2
        assert np.all(V @ x >= x @ x - 1e-9)


@given(seeds)
def test_solve_lp_matches_scipy(seed):
    rng = np.random.default_rng(seed)
    m, n = int(rng.integers(1, 4)), int(rng.integers(2, 6))
    A = rng.integers(-3, 4, size=(m, n)).astype(float)
    b = rng.integers(-3, 4, size=m).astype(float)
    c = rng.integers(0, 4, size=n).astype(float)
    ref = linprog(c, A_eq=A, b_eq=b, bounds=[(0, None)] * n, method="highs")
    for exact in (True, False):
        res = solve_lp(A, b, c, exact=exact)
        if ref.status == 2:
            assert res.status == "infeasible"
        else:
            assert res.status == "optimal"
            assert res.value == pytest.approx(ref.fun, abs=1e-7)
            assert np.allclose(A @ res.x, b, atol=1e-7) and np.all(res.x >= -1e-9)


def test_exact_lp_detects_rational_infeasibility():
    assert find_nonneg([[1.0, 1.0]], [-1.0]) is None
    assert find_nonneg([[1.0, -1.0]], [0.5]) is not None
    assert solve_lp([[1.0, -1.0]], [0.0], [-1.0, 0.0]).status == "unbounded"


def test_hull_distance_and_halfspaces():
    square = np.array([[0, 0], [1, 0], [0, 1], [1, 1]], dtype=float)
    assert hull_distance([2.0, 0.5], square) == pytest.approx(1.0)
    E, e, G, h = halfspaces(square)
    assert len(E) == 0 and np.all(G @ np.array([0.5, 0.5]) <= h + 1e-12)


def test_intersect_polytopes():
    a = np.array([[0, 0], [2, 0], [0, 2]], dtype=float)
    b = np.array([[1, 0], [3, 0], [1, 2]], dtype=float)
    V = intersect_polytopes([a, b])
    assert PolyUnion([V]).approx_equal(PolyUnion([[[1, 0], [2, 0], [1, 1]]]))
    assert intersect_polytopes([a, a + 10]) is None


def test_polyunion_canonical_drops_contained():
    U = PolyUnion([[[0.0], [2.0]], [[1.0]]]).canonical()
    assert len(U) == 1 and U.contains([1.5])


def test_minkowski_sum():
    S = PolyUnion([[[-1.0], [1.0]]]).minkowski_sum(PolyUnion([[[2.0]], [[5.0]]]))
    assert S.approx_equal(PolyUnion([[[1.0], [3.0]], [[4.0], [6.0]]]))
