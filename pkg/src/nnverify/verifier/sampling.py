"""Randomised falsification by direct exact evaluation.

Independent of the pattern search: points are drawn in the region the
problem quantifies over and the property is checked at each of them.
"""

from __future__ import annotations

import random
from fractions import Fraction
from itertools import product

from ..exact import INF, Metric
from ..lp import feasible
from ..network import evaluate
from ..linspec import Rel
from .decide import _beaten, _in_ball, reaches, violates

__all__ = ["sample_falsify"]

DENOM = 64
SCALES = (Fraction(1, 8), Fraction(1), Fraction(8))


def _rat(rng: random.Random, lo: Fraction, hi: Fraction) -> Fraction:
    return lo + (hi - lo) * Fraction(rng.randint(0, DENOM), DENOM)


def _box_point(rng, n, radius):
    return tuple(_rat(rng, -radius, radius) for _ in range(n))


def _ball_point(rng, metric, center, eps):
    """A point of the closed ball; one draw in four lands on the boundary."""
    n = len(center)
    if eps is INF:
        return tuple(c + v for c, v in zip(center, _box_point(rng, n, rng.choice(SCALES))))
    if n == 0:
        return ()
    on_boundary = rng.random() < 0.25
    if metric is Metric.LINF:
        x = [c + _rat(rng, -eps, eps) for c in center]
        if on_boundary:
            i = rng.randrange(n)
            x[i] = center[i] + rng.choice((-eps, eps))
        return tuple(x)
    weights = [Fraction(rng.randint(0, DENOM)) for _ in range(n)]
    total = sum(weights) or Fraction(1)
    radius = eps if on_boundary else _rat(rng, Fraction(0), eps)
    return tuple(c + rng.choice((-1, 1)) * radius * w / total for c, w in zip(center, weights))


def _ball_vertices(metric, center, eps):
    n = len(center)
    if eps is INF or n == 0:
        return [tuple(center)]
    out = [tuple(center)]
    if metric is Metric.LINF and n <= 4:
        out += [tuple(c + s * eps for c, s in zip(center, signs)) for signs in product((-1, 1), repeat=n)]
    for i in range(n):
        for s in (-1, 1):
            x = list(center)
            x[i] += s * eps
            out.append(tuple(x))
    return out


def _spec_points(rng, spec, trials):
    """Points of a linear spec: random walks along lines from an LP point.

    The line step is clipped exactly to the closed rows, so endpoints lie
    on the boundary; strict rows are then enforced by rejection.
    """
    p = feasible(spec)
    if p is None:
        return
    yield tuple(p[:spec.real_dim])
    p = list(p)
    for _ in range(trials):
        d = [Fraction(rng.randint(-DENOM, DENOM), DENOM) for _ in range(spec.dim)]
        t_max = None
        blocked = False
        for row in spec.rows:
            ad = sum((a * v for a, v in zip(row.coeffs, d)), Fraction(0))
            if row.rel is Rel.EQ:
                if ad:
                    blocked = True
                continue
            if ad > 0:
                t = (row.rhs - row.lhs(p)) / ad
                t_max = t if t_max is None else min(t_max, t)
        if blocked:
            t_max = Fraction(0)
        if t_max is None:
            t_max = rng.choice(SCALES)
        t = t_max if rng.random() < 0.25 else _rat(rng, Fraction(0), t_max)
        q = [a + t * b for a, b in zip(p, d)]
        if all(row.holds(q) for row in spec.rows):
            yield tuple(q[:spec.real_dim])
            if rng.random() < 0.5:
                p = q


def _candidates(inst, rng, trials):
    kind, net = inst.kind, inst.net
    if kind in ("vip", "nnr"):
        yield from _spec_points(rng, inst.inspec, trials)
    elif kind == "ne":
        yield (Fraction(0),) * net.n
        for _ in range(trials):
            yield _box_point(rng, net.n, rng.choice(SCALES))
    elif kind in ("sr", "cr", "lr"):
        yield from _ball_vertices(inst.metric, inst.center, inst.eps)
        for _ in range(trials):
            yield _ball_point(rng, inst.metric, inst.center, inst.eps)
    elif kind in ("gsr", "glr"):
        n = net.n
        for _ in range(trials):
            x = _box_point(rng, n, rng.choice(SCALES))
            eps = inst.eps if inst.eps is not INF else rng.choice(SCALES)
            if rng.random() < 0.5:
                xb = tuple(c + rng.choice((-eps, eps)) for c in x)
            else:
                xb = _ball_point(rng, Metric.LINF, x, eps)
            yield x + xb
    else:
        raise ValueError(f"no sampler for {kind}")


def _acr(inst, trials, rng):
    """One beaten point per label, concatenated, or None."""
    found = []
    for j in range(inst.net.m):
        pts = list(_ball_vertices(inst.metric, inst.center, inst.eps))
        pts += [_ball_point(rng, inst.metric, inst.center, inst.eps) for _ in range(trials)]
        hit = next((x for x in pts if _in_ball(inst.metric, x, inst.center, inst.eps)
                    and _beaten(evaluate(inst.net, x), j, inst.strict)), None)
        if hit is None:
            return None
        found.extend(hit)
    return tuple(found)


def sample_falsify(inst, trials: int = 1000, seed: int = 0):
    """Search ``trials`` random points for evidence against the instance.

    For universally quantified problems this is a counterexample (a point
    where :func:`violates` is true). For reachability it is a reaching
    input, which refutes an "unreachable" verdict. Returns ``None`` when
    nothing is found.
    """
    if trials < 1:
        raise ValueError("trials must be at least 1")
    rng = random.Random(seed)
    if getattr(inst, "delta", None) is INF:
        return None
    if inst.kind == "acr":
        return _acr(inst, trials, rng)
    test = reaches if inst.kind == "nnr" else violates
    for x in _candidates(inst, rng, trials):
        if test(inst, x):
            return x
    return None
