from fractions import Fraction as F

import pytest
from gmpy2 import mpq
from hypothesis import given, settings, strategies as st

from nnverify.linspec import LinRow, LinSpec, Rel, eq, le, lt, satisfied_by
from nnverify.lp import feasible, fm_feasible, max_slack, simplex_max

from instances import BEALE, degenerate_systems, random_system, rng_for


def spec(*rows, dim=1):
    return LinSpec(dim, tuple(rows))


def test_feasible_examples():
    s = spec(le((F(1),), 1), le((F(-1),), -1), lt((F(1),), 2))
    assert feasible(s) == (F(1),)
    assert feasible(spec(lt((F(1),), 0), lt((F(-1),), 0))) is None
    assert feasible(LinSpec(3)) == (F(0),) * 3


def test_fm_examples():
    s = LinSpec(2, (le((F(1), F(1)), 1), le((F(-1), F(0)), -2), le((F(0), F(-1)), 0)))
    assert not fm_feasible(s)
    assert fm_feasible(spec(lt((F(1),), 1)))
    with pytest.raises(ValueError):
        fm_feasible(LinSpec(7))


def test_max_slack_examples():
    assert max_slack(spec(lt((F(1),), 1), lt((F(-1),), 0))) > 0
    assert max_slack(spec(lt((F(1),), 0), lt((F(-1),), 0))) <= 0


def test_equality_and_strict_boundary():
    # x = 1 together with x < 1 has no solution
    assert feasible(spec(eq((F(1),), 1), lt((F(1),), 1))) is None
    assert feasible(spec(eq((F(1),), 1), le((F(1),), 1))) == (F(1),)


def test_beale_terminates_with_optimum():
    A, b, c, opt = BEALE
    value, v = simplex_max([[mpq(x) for x in r] for r in A], [mpq(x) for x in b], [mpq(x) for x in c])
    assert value == opt
    assert all(sum(a * x for a, x in zip(r, v)) <= rhs for r, rhs in zip(A, b))


def test_degenerate_corpus_terminates():
    for s in degenerate_systems(rng_for("lp-degenerate"), 60):
        w = feasible(s)
        assert (w is not None) == fm_feasible(s)
        if w is not None:
            assert satisfied_by(s, w)


@settings(max_examples=150, deadline=None)
@given(st.integers(0, 10 ** 6))
def test_feasible_agrees_with_fm(seed):
    rng = rng_for("lp-random", seed)
    s = random_system(rng, rng.randint(1, 4), rng.randint(1, 6))
    w = feasible(s)
    assert (w is not None) == fm_feasible(s)
    if w is not None:
        assert satisfied_by(s, w)


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 10 ** 6))
def test_planted_interior_point_gives_positive_slack(seed):
    rng = rng_for("lp-planted", seed)
    dim = rng.randint(1, 4)
    p = [F(rng.randint(-5, 5), rng.randint(1, 3)) for _ in range(dim)]
    rows = []
    for _ in range(rng.randint(1, 6)):
        a = tuple(F(rng.randint(-3, 3)) for _ in range(dim))
        rhs = sum((x * y for x, y in zip(a, p)), F(0)) + F(rng.randint(1, 4), 2)
        rows.append(LinRow(a, rng.choice((Rel.LE, Rel.LT)), rhs))
    s = LinSpec(dim, tuple(rows))
    assert max_slack(s) > 0
    assert feasible(s) is not None
