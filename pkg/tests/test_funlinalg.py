import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from ctrllie.exprcore import Domain, parse
from ctrllie.fields import VectorField
from ctrllie.funlinalg import (generic_rank, in_module_span, is_involutive, pointwise_rank,
                               rank_drop_loci, ranks_of)

CH = ("t", "q1", "q2", "q3")
D = Domain.from_dict({n: (-1, 1) for n in CH})


def vf(label="", **comps):
    return VectorField(tuple(parse(comps.get(n, "0")) for n in CH), CH, label)


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 5), st.integers(1, 5), st.integers(0, 5), st.integers(0, 2**31 - 1))
def test_ranks_of_matches_planted_rank(rows, cols, r, seed):
    rng = np.random.default_rng(seed)
    r = min(r, rows, cols)
    M = rng.integers(-3, 4, (rows, r)) @ rng.integers(-3, 4, (r, cols)) if r else np.zeros((rows, cols))
    M = np.asarray(M, dtype=float)
    assert ranks_of(M[None])[0] == np.linalg.matrix_rank(M)


def test_ranks_of_empty_family():
    assert list(ranks_of(np.zeros((3, 4, 0)))) == [0, 0, 0]


def test_generic_rank_and_drop():
    fields = [vf(q1="1"), vf(q2="q1")]
    prof = generic_rank(fields, D)
    assert prof.generic == 2 and prof.minimum == 1
    assert any(dr.get("locus") == "q1 = 0" for dr in prof.drops)
    gen, loci = rank_drop_loci(fields, D, minimal=True)
    assert gen == 2 and [L.pins for L in loci] == [("q1",)]
    assert pointwise_rank(fields, {"t": 0, "q1": 0, "q2": 0.5, "q3": 0}) == 1


def test_generic_rank_no_drop():
    prof = generic_rank([vf(q1="1"), vf(q2="1", q3="q1")], D)
    assert prof.generic == prof.minimum == 2 and prof.drops == []


def test_span_membership():
    assert in_module_span(vf(q2="q1"), [vf(q2="1")], D)
    assert in_module_span(vf(q1="q2^2", q2="sin(q3)"), [vf(q1="1"), vf(q2="1")], D)
    # pointwise membership fails on {q1 = 0}, which uniform samples alone never hit
    res = in_module_span(vf(q2="1"), [vf(q2="q1")], D)
    assert not res and res.witness["q1"] == 0.0
    assert not in_module_span(vf(q3="1"), [vf(q1="1"), vf(q2="1")], D)


def test_span_of_empty_family():
    assert in_module_span(vf(), [], D)
    assert not in_module_span(vf(q1="q2"), [], D)


def test_involutivity():
    assert is_involutive([vf("a", q1="1"), vf("b", q2="1")], D)
    contact = is_involutive([vf("a", q1="1"), vf("b", q2="1", q3="q1")], D)
    assert not contact and contact.pair == ("a", "b")
    # rank-one families are always involutive
    assert is_involutive([vf("a", q1="q2"), vf("b", q1="q3")], D)


def test_params_are_used():
    fields = [vf(q1="1"), VectorField(tuple(parse(s, ["A"]) for s in ("0", "0", "A*q1", "0")), CH)]
    assert generic_rank(fields, D, params={"A": 1.0}).generic == 2
    assert generic_rank(fields, D, params={"A": 0.0}).generic == 1
