import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from gen import grid_direction
from odpcalc.corpus import corpus_manifest
from odpcalc.errors import InfeasiblePointError, InvalidDirectionError, NotOrthodisjunctiveError
from odpcalc.orthogeom import (CellUnion, OrthoSet, cell_contains, dir_limiting_normal_cone,
                               limiting_normal_cone)
from odpcalc.problem import ProblemSpec
from odpcalc.pwexpr import Const, VectorFunc, var
from odpcalc.stationarity import (check_dir_m_stationarity, check_m_stationarity,
                                  critical_cone_membership, replay, strict_local_min_by_trivial_cone)

BOX_PROBLEMS = [e["name"] for e in corpus_manifest() if not e["oracle_only"]]
R2 = 1 / math.sqrt(2)
x1, x2 = var(0), var(1)


def _xbar(p):
    return np.array(p.meta["xbar"], dtype=float)


def _assert_certificate(p, x, verdict, d=None):
    cert = verdict.certificate
    target = -p.grad_f(x)
    comb = cert.combination()
    comb = np.zeros(p.n) if comb is None else comb
    assert np.max(np.abs(comb - target)) <= 1e-9
    assert cert.residual <= 1e-9
    assert cell_contains(cert.cell, cert.lam, 1e-12)
    y = p.gamma.snap(p.F.eval(x))
    cone = limiting_normal_cone(p.gamma, y) if d is None else dir_limiting_normal_cone(
        p.gamma, y, p.F.dir_derivative(x, d))
    assert CellUnion([cert.cell], p.ell).is_subset(cone)
    for (verts, weights), li in zip(cert.witnesses, cert.lam):
        assert float(np.sum(weights)) == pytest.approx(abs(li), abs=1e-12)


def test_how_to_apply_multiplier_is_minus_one(corpus):
    p = corpus("how_to_apply")
    v = check_m_stationarity(p, [0.0])
    assert v.holds and v.certificate.lam.tolist() == [-1.0]


def test_sum_of_squares_fails(corpus):
    v = check_m_stationarity(corpus("akkt_example"), [0.0, 0.0])
    assert v.fails


def test_ggcq_example_directional_multiplier(corpus):
    v = check_dir_m_stationarity(corpus("ggcq_without_mscq"), [0.0, 0.0], [0.0, 1.0])
    assert v.holds and np.allclose(v.certificate.lam, [1.0, 0.0, 0.0])


def test_normal_but_not_dir(corpus):
    p = corpus("normal_but_not_dir")
    assert check_m_stationarity(p, [1.0, 0, 0]).holds
    d = np.array([-2.0, -1.0, 0.0]) / math.sqrt(5)
    assert check_dir_m_stationarity(p, [1.0, 0, 0], d).fails


def test_direction_outside_linearization_cone_fails(corpus):
    v = check_dir_m_stationarity(corpus("how_to_apply"), [0.0], [1.0])
    assert v.fails and v.reason == "d not in linearization cone"
    # F'(0; d) = 0 for the sum of squares, so every d is linearized-feasible
    v = check_dir_m_stationarity(corpus("akkt_example"), [0.0, 0.0], [R2, R2])
    assert v.fails and v.reason != "d not in linearization cone"


def test_zero_gradient_gives_zero_multiplier():
    p = ProblemSpec(1, Const(0.0), VectorFunc([x1], 1), OrthoSet.from_intervals([[(0, 0)]]))
    v = check_m_stationarity(p, [0.0])
    assert v.holds and v.certificate.lam.tolist() == [0.0]


def test_input_errors(corpus):
    p = corpus("akkt_example")
    with pytest.raises(InfeasiblePointError):
        check_m_stationarity(p, [1.0, 0.0])
    with pytest.raises(InvalidDirectionError):
        check_dir_m_stationarity(p, [0.0, 0.0], [1.0, 1.0])
    with pytest.raises(InvalidDirectionError):
        check_dir_m_stationarity(p, [0.0, 0.0], [0.0, 0.0])
    with pytest.raises(NotOrthodisjunctiveError):
        check_m_stationarity(corpus("soc_example"), [0.0, 0.0])


def test_critical_cone_membership(corpus):
    res = critical_cone_membership(corpus("akkt_example"), [0.0, 0.0], [-1.0, 0.0])
    assert res["in_explicit"] and res["in_implicit"] == "Fails"
    res = critical_cone_membership(corpus("ggcq_without_mscq"), [0.0, 0.0], [0.0, 1.0])
    assert res["in_explicit"]
    res = critical_cone_membership(corpus("ggcq_without_mscq"), [0.0, 0.0], [1.0, 0.0])
    assert not res["in_explicit"]


def test_strict_local_min(corpus):
    assert strict_local_min_by_trivial_cone(corpus("how_to_apply"), [0.0]).holds
    assert strict_local_min_by_trivial_cone(corpus("akkt_example"), [0.0, 0.0]).fails
    free = ProblemSpec(1, x1, VectorFunc([Const(0.0)], 1), OrthoSet.from_intervals([[(0, 0)]]))
    assert strict_local_min_by_trivial_cone(free, [0.0]).fails


@pytest.mark.parametrize("name", BOX_PROBLEMS)
def test_certificates_replay(corpus, name):
    p = corpus(name)
    x = _xbar(p)
    v = check_m_stationarity(p, x)
    if v.holds:
        _assert_certificate(p, x, v)
        assert replay(p.F, v.certificate.lam, x, -p.grad_f(x)) <= 1e-9


@pytest.mark.parametrize("name", BOX_PROBLEMS)
def test_scaled_objective_scales_multiplier(corpus, name):
    p = corpus(name)
    x = _xbar(p)
    v = check_m_stationarity(p, x)
    if not v.holds:
        return
    q = ProblemSpec(p.n, 2.0 * p.f, p.F, p.gamma)
    lam2 = 2.0 * v.certificate.lam
    assert replay(q.F, lam2, x, -q.grad_f(x)) <= 1e-9
    assert check_m_stationarity(q, x).holds


@pytest.mark.parametrize("name", BOX_PROBLEMS)
@given(seed=st.integers(0, 2 ** 32 - 1))
def test_directional_holds_implies_plain_holds(corpus, name, seed):
    p = corpus(name)
    x = _xbar(p)
    d = grid_direction(np.random.default_rng(seed), p.n)
    v = check_dir_m_stationarity(p, x, d)
    if not v.holds:
        return
    _assert_certificate(p, x, v, d)
    lam = v.certificate.lam
    y = p.gamma.snap(p.F.eval(x))
    assert limiting_normal_cone(p.gamma, y).contains(lam, 1e-12)
    assert replay(p.F, lam, x, -p.grad_f(x)) <= 1e-9
    assert check_m_stationarity(p, x).holds
