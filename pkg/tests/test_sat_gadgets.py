from fractions import Fraction as F
from itertools import product

import pytest
from hypothesis import given, settings, strategies as st

from nnverify.network import evaluate
from nnverify.reductions import CNF3, parse_dimacs, sat3_network, sat3_to_glr, sat3_to_gsr, sat3_to_lr, satisfiable
from nnverify.verifier import decide, violates

H = F(1, 2)
ONE_CLAUSE = CNF3(3, ((1, 2, 3),))
CONTRADICTION = CNF3(1, ((1, 1, 1), (-1, -1, -1)))


def test_single_clause_values():
    for clause in ("sum", "max"):
        net = sat3_network(ONE_CLAUSE, clause)
        assert evaluate(net, [1, 1, 1]) == (1,)
        assert evaluate(net, [H, H, H]) == (0,)
    inst = sat3_to_gsr(ONE_CLAUSE)
    v = decide(inst)
    assert not v.holds and violates(inst, v.witness)


def test_contradiction():
    assert not satisfiable(CONTRADICTION)
    assert decide(sat3_to_gsr(CONTRADICTION)).holds
    assert decide(sat3_to_lr(CONTRADICTION)).holds
    assert decide(sat3_to_glr(CONTRADICTION)).holds


def test_summed_clauses_are_too_steep_for_lr():
    # the contradiction is unsatisfiable, yet the summed-clause network
    # is steeper than the bound 3 next to the center
    inst = sat3_to_lr(CONTRADICTION, legacy=True)
    v = decide(inst)
    assert not v.holds and violates(inst, v.witness)


def test_satisfiable_lr_fails():
    for cnf in (ONE_CLAUSE, CNF3(2, ((1, 2, 2), (-1, 2, 2)))):
        for make in (sat3_to_lr, sat3_to_glr):
            inst = make(cnf)
            v = decide(inst)
            assert not v.holds and violates(inst, v.witness)


@st.composite
def formulas(draw):
    v = draw(st.integers(1, 3))
    lit = st.integers(1, v).flatmap(lambda x: st.sampled_from((x, -x)))
    clauses = draw(st.lists(st.tuples(lit, lit, lit), min_size=1, max_size=3))
    return CNF3(v, tuple(clauses))


@settings(max_examples=40, deadline=None)
@given(formulas(), st.booleans())
def test_network_range(cnf, pure_relu):
    c = len(cnf.clauses)
    for clause in ("sum", "max"):
        net = sat3_network(cnf, clause, pure_relu)
        assert evaluate(net, [H] * cnf.num_vars) == (0,)
        for bits in product((0, 1), repeat=cnf.num_vars):
            y = evaluate(net, list(bits))[0]
            assert 0 <= y <= c
            assert (y == c) == cnf.value([b == 1 for b in bits])
        for k in range(5):
            x = [F((k * 7 + 3 * i) % 9 - 2, 4) for i in range(cnf.num_vars)]
            assert 0 <= evaluate(net, x)[0] <= c


@settings(max_examples=25, deadline=None)
@given(formulas())
def test_gadget_verdicts(cnf):
    unsat = not satisfiable(cnf)
    assert decide(sat3_to_gsr(cnf)).holds == unsat
    assert decide(sat3_to_lr(cnf)).holds == unsat


def test_dimacs():
    cnf = parse_dimacs("c comment\np cnf 3 2\n1 -2 3 0\n-1 2 2 0\n")
    assert cnf == CNF3(3, ((1, -2, 3), (-1, 2, 2)))
    assert parse_dimacs("1 2 3 0 -1 -2 -3 0\n%\n0\n").clauses == ((1, 2, 3), (-1, -2, -3))
    for bad in ("p cnf 2 1\n1 2 0\n", "p cnf 3 2\n1 2 3 0\n", "1 x 3 0\n", "", "p cnf 2 1\n1 2 5 0\n"):
        with pytest.raises(ValueError):
            parse_dimacs(bad)
