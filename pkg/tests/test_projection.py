import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from odpcalc.orthogeom import OrthoSet
from odpcalc.problem import ProblemSpec
from odpcalc.projection import distance_to_feasible, nearest_feasible
from odpcalc.pwexpr import Const, VectorFunc, var

x1, x2 = var(0), var(1)
CIRCLE = ProblemSpec(2, Const(0.0), VectorFunc([x1 * x1 + x2 * x2 - 1.0], 2),
                     OrthoSet.from_intervals([[(0, 0)]]))


@given(st.floats(0.05, 3.0), st.floats(0.0, 6.28))
def test_circle_distance(r, t):
    x = r * np.array([np.cos(t), np.sin(t)])
    assert distance_to_feasible(CIRCLE, x) == pytest.approx(abs(r - 1.0), abs=1e-12)


@pytest.mark.parametrize("k", [2, 3, 29, 50, 100])
def test_complementarity_ladder_distance(corpus, k):
    # nearest point of {x >= 0, x1 x2 = 0} to (1/k^2, 1/k) is (0, 1/k)
    dist, z = nearest_feasible(corpus("ggcq_without_mscq"), [1.0 / k ** 2, 1.0 / k], anchor=np.zeros(2))
    assert dist == pytest.approx(1.0 / k ** 2, rel=1e-12)
    assert np.allclose(z, [0.0, 1.0 / k], atol=1e-15)


@pytest.mark.parametrize("tau", [1e-1, 1e-2, 1e-3, 1e-4])
def test_cubic_distance_along_diagonal(corpus, tau):
    p = corpus("odp_cubic")
    xbar = np.array([-2.0, 1.0])
    x = xbar + tau
    assert distance_to_feasible(p, x, anchor=xbar) == pytest.approx(tau, rel=1e-9)
    assert p.violation(x) == pytest.approx(tau ** 3 + 3 * tau ** 2, rel=1e-6)


def test_feasible_point_has_zero_distance():
    assert nearest_feasible(CIRCLE, [1.0, 0.0])[0] == 0.0


def test_non_box_set_rejected(corpus):
    with pytest.raises(TypeError):
        nearest_feasible(corpus("soc_example"), [1.0, 0.0])
