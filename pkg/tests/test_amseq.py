import json
import math

import numpy as np
import pytest

from odpcalc import asymptotics as asy
from odpcalc.amseq import (AMRecord, AMSequence, generate_am_sequence, load_sequence,
                           refine_nonzero_multipliers, sequence_from_lines, verify_am_sequence,
                           verify_dir_am_sequence)
from odpcalc.errors import BasePointCollisionError, MalformedSequenceError, SchemaError

R2 = 1 / math.sqrt(2)
DIR_KEYS = ("secant_to_d", "delta_over_dist", "alignment", "growth_bounded")


def _line(**kw):
    rec = {"k": 1, "x": [0.0, 0.0], "lambda": [1.0], "delta": [0.0], "eps": [0.0, 0.0]}
    rec.update(kw)
    return json.dumps({k: v for k, v in rec.items() if v is not None})


def test_bundled_akkt_sequence_is_directional(corpus):
    p = corpus("akkt_example")
    seq = corpus.sequence("akkt_dir")
    assert len(seq) == 50
    rep = verify_dir_am_sequence(p, seq, [-R2, -R2], tol=1e-4)
    assert rep.verdict.holds
    assert all(rep.trends[k]["ok"] for k in DIR_KEYS)


def test_bundled_sequence_fails_in_wrong_direction(corpus):
    p = corpus("akkt_example")
    rep = verify_dir_am_sequence(p, corpus.sequence("akkt_dir"), [R2, R2], tol=1e-4)
    assert rep.verdict.fails and not rep.trends["secant_to_d"]["ok"]


def test_mscq_not_enough_sequence(corpus):
    rep = verify_dir_am_sequence(corpus("mscq_not_enough"), corpus.sequence("mscq_not_enough_dir"),
                                 [0.0, -1.0])
    assert rep.verdict.holds


def test_generated_sequence_verifies_with_exact_alignment(corpus):
    p = corpus("akkt_example")
    d = np.array([-R2, -R2])
    seq = generate_am_sequence(p, [0.0, 0.0], K=20, d=d)
    assert verify_am_sequence(p, seq).verdict.holds
    assert verify_dir_am_sequence(p, seq, d).verdict.holds
    assert all(asy.alignment_residual(r.lam, r.delta) == 0.0 for r in seq)


def test_generated_sequence_round_trips(corpus, tmp_path):
    p = corpus("akkt_example")
    seq = generate_am_sequence(p, [0.0, 0.0], K=5)
    path = tmp_path / "s.jsonl"
    seq.save(path)
    back = load_sequence(path)
    assert np.array_equal(back.column("x"), seq.column("x"))
    assert np.array_equal(back.xbar, seq.xbar)


def test_refinement_gives_nonzero_endpoint_multipliers(corpus):
    p = corpus("normal_but_not_dir")
    seq = corpus.sequence("normal_not_dir")
    out = refine_nonzero_multipliers(p, seq)
    assert verify_am_sequence(p, out).verdict.holds
    from odpcalc.amseq import index_sets
    for r in out:
        _, I = index_sets(p, r.x, r.delta)
        assert all(r.lam[i] != 0.0 for i in I)


def test_refinement_rejects_unverified_input(corpus):
    p = corpus("akkt_example")
    seq = corpus.sequence("akkt_dir")
    bad = AMSequence([AMRecord(r.k, r.x, r.lam, r.delta, r.eps + 1.0) for r in seq], seq.xbar, None)
    with pytest.raises(MalformedSequenceError):
        refine_nonzero_multipliers(p, bad)


def test_base_point_collision(corpus):
    p = corpus("how_to_apply")
    recs = [AMRecord(k, np.zeros(1), np.array([-1.0]), np.zeros(1), np.zeros(1)) for k in (1, 2, 3)]
    with pytest.raises(BasePointCollisionError):
        verify_dir_am_sequence(p, AMSequence(recs, np.zeros(1)), [-1.0])


def test_dimension_mismatch(corpus):
    with pytest.raises(MalformedSequenceError, match="problem needs"):
        verify_am_sequence(corpus("how_to_apply"), corpus.sequence("akkt_dir"))


@pytest.mark.parametrize("line, msg", [
    ("not json", "invalid JSON"),
    ("[1, 2]", "must be an object"),
    (_line(k=0), "positive integer"),
    (_line(x=None), "missing field 'x'"),
    (_line(x=[0.0, "a"]), "list of numbers"),
    (_line(delta=[0.0, 0.0]), "expected 1"),
    (_line(eps=None), "needs 'eps' or 'xi'"),
])
def test_malformed_lines(line, msg):
    with pytest.raises(MalformedSequenceError, match=msg):
        sequence_from_lines([line])


def test_indices_must_increase():
    with pytest.raises(MalformedSequenceError, match="increase"):
        sequence_from_lines([_line(k=2), _line(k=2)])


def test_empty_and_missing_files(tmp_path):
    with pytest.raises(MalformedSequenceError, match="no records"):
        sequence_from_lines(["", json.dumps({"meta": {"xbar": [0, 0]}})])
    with pytest.raises(SchemaError):
        load_sequence(tmp_path / "missing.jsonl")
