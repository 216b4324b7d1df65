"""Small 3-CNF formulas, one per class under variable renaming, polarity
flips and clause reordering (all of which keep the gadget verdicts)."""

import itertools


def _clauses(v, distinct_vars):
    lits = sorted(s * x for x in range(1, v + 1) for s in (1, -1))
    out = []
    for c in itertools.combinations_with_replacement(lits, 3):
        if distinct_vars and len({abs(l) for l in c}) < 3:
            continue
        out.append(c)
    return out


def _symmetries(v):
    for perm in itertools.permutations(range(1, v + 1)):
        for signs in itertools.product((1, -1), repeat=v):
            yield {s * x: s * sign * perm[x - 1] for x in range(1, v + 1) for s in (1, -1)
                   for sign in (signs[x - 1],)}


def _image(f, sym):
    return tuple(sorted(tuple(sorted(sym[l] for l in c)) for c in f))


def formula_classes(v, k, distinct_vars):
    """Smallest representative of every class of formulas that use exactly
    ``v`` variables in ``k`` clauses (clauses may repeat)."""
    syms = list(_symmetries(v))
    seen = set()
    reps = []
    for f in itertools.combinations_with_replacement(_clauses(v, distinct_vars), k):
        if f in seen or len({abs(l) for c in f for l in c}) != v:
            continue
        orbit = {_image(f, s) for s in syms}
        seen |= orbit
        reps.append(min(orbit))
    return sorted(reps)
