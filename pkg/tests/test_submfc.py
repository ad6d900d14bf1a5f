import math

import numpy as np
import pytest

from odpcalc.amseq import AMRecord, AMSequence
from odpcalc.errors import BoundednessViolationError, DirectionNotCriticalError
from odpcalc.submfc import (check_odp_submfc, check_odp_submfc_dir, cluster_multiplier,
                            submfc_consequence)

R2 = 1 / math.sqrt(2)


def test_normal_but_not_dir_holds_on_first_two(corpus):
    p = corpus("normal_but_not_dir")
    v = check_odp_submfc(p, None, corpus.sequence("normal_not_dir"), I=(0, 1))
    assert v.holds and v.details["I"] == [0, 1]


def test_dir_but_not_normal_witness(corpus):
    p = corpus("dir_but_not_normal")
    v = check_odp_submfc(p, None, corpus.sequence("dir_not_normal_plus"))
    assert v.fails
    assert np.allclose(v.witness, [1.0, 1.0])


@pytest.mark.parametrize("sign, seq", [(1, "dir_not_normal_plus"), (-1, "dir_not_normal_minus")])
def test_dir_but_not_normal_directional(corpus, sign, seq):
    p = corpus("dir_but_not_normal")
    d = sign * np.array([R2, R2])
    s = corpus.sequence(seq)
    assert check_odp_submfc_dir(p, None, d, s).holds
    v = submfc_consequence(p, None, s, d=d)
    assert v.holds and not v.details["search"]
    assert np.array_equal(v.details["cluster"], [0.0, 0.0])


def test_cubic_holds_with_empty_index_set(corpus):
    p = corpus("odp_cubic")
    s = corpus.sequence("odp_cubic_dir")
    assert check_odp_submfc(p, None, s, I=()).holds
    assert check_odp_submfc_dir(p, None, [R2, R2], s, I=()).holds


def test_noncritical_direction_rejected(corpus):
    p = corpus("odp_cubic")
    with pytest.raises(DirectionNotCriticalError):
        check_odp_submfc_dir(p, None, [-R2, -R2], corpus.sequence("odp_cubic_dir"))


def test_index_out_of_range(corpus):
    p = corpus("normal_but_not_dir")
    with pytest.raises(ValueError):
        check_odp_submfc(p, None, corpus.sequence("normal_not_dir"), I=(5,))


def test_cluster_multiplier_rejects_growth():
    recs = [AMRecord(k, np.zeros(1), np.array([float(k * k)]), np.zeros(1), np.zeros(1))
            for k in range(1, 30)]
    with pytest.raises(BoundednessViolationError):
        cluster_multiplier(AMSequence(recs))


def test_cluster_multiplier_zeroes_vanishing_components():
    recs = [AMRecord(k, np.zeros(1), np.array([1.0 / k, 2.0]), np.zeros(2), np.zeros(1))
            for k in range(1, 51)]
    assert cluster_multiplier(AMSequence(recs)).tolist() == [0.0, 2.0]


@pytest.mark.parametrize("problem, seq, d", [
    ("normal_but_not_dir", "normal_not_dir", None),
    ("odp_cubic", "odp_cubic_dir", None),
    ("dir_but_not_normal", "dir_not_normal_plus", (R2, R2)),
])
def test_submfc_implies_stationarity_replay(corpus, problem, seq, d):
    p = corpus(problem)
    s = corpus.sequence(seq)
    v = check_odp_submfc(p, None, s) if d is None else check_odp_submfc_dir(p, None, d, s)
    assert v.holds
    assert submfc_consequence(p, None, s, d=d).holds
