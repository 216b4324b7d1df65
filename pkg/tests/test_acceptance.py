"""Acceptance checks, one test per criterion.

Every test prints a single PASS or FAIL line with the numbers behind it,
then asserts. Run with ``pytest -v -s tests/test_acceptance.py`` or
directly with ``python3 tests/test_acceptance.py``.
"""

import contextlib
import functools
import os
import sys
import time
from itertools import product
from dataclasses import replace
from fractions import Fraction as F

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

import pytest

from nnverify.exact import INF, Metric
from nnverify.linspec import LinSpec, box_spec, le, lt
from nnverify.lp import feasible, fm_feasible, simplex_max
from nnverify.minimize import decide_anece, decide_nece
from nnverify.network import Act, Network, NodeRef, delete_nodes, evaluate, id_to_relu, ident, pattern_of
from nnverify.reductions import (CNF3, acr_to_cr, cr_to_acr, cr_to_sr, cr_to_vip, gsr_to_ne, ne_to_cr,
                                 satisfiable, sat3_to_gsr, sat3_to_lr, sr_to_cr, sr_to_vip)
from nnverify.verifier import (CR, LR, NE, SR, VIP, Certificate, check_certificate, decide, sample_falsify,
                               violates)
from nnverify.verifier.decide import reaches

from cnf_corpus import formula_classes
from instances import (BEALE, NET_K, NET_M, NET_N, NET_Q, degenerate_systems, random_instance, random_net,
                       random_system, rat, rng_for)

KINDS = ("nnr", "vip", "ne", "sr", "cr", "acr", "lr", "gsr", "glr")
PER_KIND = 200
SOLVER_LIMIT = 600          # seconds, criterion 1
GADGET_LIMIT = 900          # seconds, criterion 4
IDENTITY_LIMIT = 1          # seconds per problem, criterion 8
SAMPLE_TRIALS = 1000


def _out(capsys):
    return capsys.disabled() if capsys is not None else contextlib.nullcontext()


def report(capsys, criterion, ok, detail):
    with _out(capsys):
        print(f"{'PASS' if ok else 'FAIL'} criterion {criterion}: {detail}", flush=True)
    assert ok, detail


# -- 1, 2: the random corpus ------------------------------------------------

@functools.cache
def corpus():
    """200 instances per problem (at most 12 ReLUs, dims at most 3) with
    their depth-first verdicts and the time that took."""
    out = []
    t = time.perf_counter()
    for kind in KINDS:
        rng = rng_for("acceptance-1", kind)
        for _ in range(PER_KIND):
            inst = random_instance(kind, rng, cap=12)
            out.append((inst, decide(inst)))
    return out, time.perf_counter() - t


def test_solver_matches_enumeration(capsys):
    start = time.perf_counter()
    items, _ = corpus()
    mismatches = []
    for inst, v in items:
        if decide(inst, engine="enum").holds != v.holds:
            mismatches.append(inst.kind)
    elapsed = time.perf_counter() - start
    holds = sum(v.holds for _, v in items)
    report(capsys, 1, not mismatches and elapsed < SOLVER_LIMIT,
           f"{len(items)} instances ({holds} hold), {len(mismatches)} dfs/enum mismatches {mismatches[:5]}, "
           f"{elapsed:.0f}s (limit {SOLVER_LIMIT}s)")


def test_witnesses_and_sampling(capsys):
    items, _ = corpus()
    bad_witness = 0
    checked = 0
    refuted = []
    sampled = 0
    for i, (inst, v) in enumerate(items):
        if inst.kind == "nnr":
            # reachability carries its witness on success; sampling hunts
            # for a reaching input against an "unreachable" verdict
            if v.holds:
                checked += 1
                bad_witness += v.witness is None or not reaches(inst, v.witness)
            else:
                sampled += 1
                if sample_falsify(inst, SAMPLE_TRIALS, seed=i) is not None:
                    refuted.append(i)
            continue
        if not v.holds:
            checked += 1
            bad_witness += v.witness is None or not violates(inst, v.witness)
        else:
            sampled += 1
            if sample_falsify(inst, SAMPLE_TRIALS, seed=i) is not None:
                refuted.append(i)
    report(capsys, 2, bad_witness == 0 and not refuted,
           f"{checked} witnesses checked, {bad_witness} unsound; {sampled} proved verdicts sampled "
           f"{SAMPLE_TRIALS}x, {len(refuted)} refuted {refuted[:5]}")


# -- 3: reductions ----------------------------------------------------------

def _linf(inst, rng):
    return replace(inst, metric=Metric.LINF)


def _positive_eps(inst, rng):
    return inst if inst.eps is INF or inst.eps > 0 else replace(inst, eps=F(rng.randint(1, 8), 4))


def _same(inst, rng):
    return inst


def _any_label(inst):
    return any(decide(cr).holds for cr in acr_to_cr(inst))


REDUCTIONS = {
    "sr2vip": ("sr", _linf, lambda i: decide(sr_to_vip(i)).holds),
    "cr2vip": ("cr", _linf, lambda i: decide(cr_to_vip(i)).holds),
    "sr2cr": ("sr", _same, lambda i: decide(sr_to_cr(i)).holds),
    "cr2sr": ("cr", _same, lambda i: decide(cr_to_sr(i)).holds),
    "cr2acr": ("cr", _positive_eps, lambda i: decide(cr_to_acr(i)).holds),
    "acr2cr": ("acr", _same, _any_label),
    "ne2cr": ("ne", _same, lambda i: decide(ne_to_cr(i, Metric.LINF)).holds),
    "gsr2ne": ("gsr", _same, lambda i: decide(gsr_to_ne(i)).holds),
}


def test_reductions_preserve_verdicts(capsys):
    bad = []
    for name, (kind, adapt, reduced) in REDUCTIONS.items():
        rng = rng_for("acceptance-3", name)
        for k in range(100):
            inst = adapt(random_instance(kind, rng, cap=10), rng)
            if reduced(inst) != decide(inst).holds:
                bad.append((name, k))
    report(capsys, 3, not bad,
           f"{len(REDUCTIONS)} reductions x 100 instances (at most 10 ReLUs), {len(bad)} verdict changes {bad[:5]}")


# -- 4, 5: 3-CNF gadgets ----------------------------------------------------

def gadget_corpus():
    """Every formula over at most 4 variables with at most 4 clauses, one
    per class under renaming, polarity flips and clause order. Formulas on
    3 or 4 variables use distinct variables in each clause; 1 or 2
    variables force repeated literals."""
    out = []
    for v in (1, 2):
        for k in range(1, 5):
            out += [CNF3(v, [list(c) for c in f]) for f in formula_classes(v, k, False)]
    for v in (3, 4):
        for k in range(1, 5):
            out += [CNF3(v, [list(c) for c in f]) for f in formula_classes(v, k, True)]
    return out


@pytest.mark.slow
def test_sat_gadgets(capsys):
    start = time.perf_counter()
    formulas = gadget_corpus()
    bad = []
    unsat = 0
    for cnf in formulas:
        sat = satisfiable(cnf)
        unsat += not sat
        if decide(sat3_to_gsr(cnf)).holds == sat:
            bad.append(("gsr", cnf.clauses))
        if decide(sat3_to_lr(cnf)).holds == sat:
            bad.append(("lr", cnf.clauses))
    elapsed = time.perf_counter() - start
    report(capsys, 4, not bad and elapsed < GADGET_LIMIT,
           f"{len(formulas)} formula classes ({unsat} unsatisfiable), {len(bad)} wrong verdicts {bad[:3]}, "
           f"{elapsed:.0f}s (limit {GADGET_LIMIT}s)")


def chain_verdict(cnf):
    """3-CNF -> GSR -> NE -> CR -> SR -> VIP, decided at the end."""
    return decide(sr_to_vip(cr_to_sr(ne_to_cr(gsr_to_ne(sat3_to_gsr(cnf)))))).holds


def chain_corpus():
    """Three-variable formulas for the composed chain: every class with
    distinct variables per clause and at most 4 clauses, plus the
    unsatisfiable classes with 3 clauses."""
    out = []
    for k in range(1, 5):
        out += [CNF3(3, [list(c) for c in f]) for f in formula_classes(3, k, True)]
    for f in formula_classes(3, 3, False):
        cnf = CNF3(3, [list(c) for c in f])
        if not satisfiable(cnf):
            out.append(cnf)
    return out


@pytest.mark.slow
def test_reduction_chain(capsys):
    start = time.perf_counter()
    formulas = chain_corpus()
    bad = []
    for cnf in formulas:
        if chain_verdict(cnf) == satisfiable(cnf):
            bad.append(cnf.clauses)
    unsat = sum(not satisfiable(c) for c in formulas)
    report(capsys, 5, not bad,
           f"{len(formulas)} three-variable formulas ({unsat} unsatisfiable), {len(bad)} wrong verdicts "
           f"{bad[:3]}, {time.perf_counter() - start:.0f}s")


# -- 6: certificates --------------------------------------------------------

def _strict_box(rng, net, radius):
    """A point whose ReLU pre-activations are all nonzero, and a box around
    it on which every pre-activation keeps its sign."""
    for _ in range(200):
        x = [rat(rng) + F(rng.randint(1, 7), 16) for _ in range(net.n)]
        pattern = pattern_of(net, x)
        lo = [a - radius for a in x]
        hi = [a + radius for a in x]
        if _signs_fixed(net, pattern, lo, hi):
            return x, box_spec(lo, hi)
    return None


def _signs_fixed(net, pattern, lo, hi):
    """Under ``pattern`` every ReLU pre-activation is an affine function of
    the input; require its sign to agree with ``pattern`` strictly at every
    box corner (hence on the whole box)."""
    k = 0
    vals = [list(c) for c in product(*zip(lo, hi))]
    for layer in net.layers[:-1]:
        nxt = [[] for _ in vals]
        for node in layer:
            for c, v in enumerate(vals):
                pre = node.pre(v)
                if node.act is Act.RELU:
                    if (pre > 0) != pattern[k] or pre == 0:
                        return False
                    nxt[c].append(pre if pattern[k] else F(0))
                else:
                    nxt[c].append(pre)
            k += node.act is Act.RELU
        vals = nxt
    return True


def test_certificates(capsys):
    rng = rng_for("acceptance-6")
    failing = accepted = 0
    for _ in range(100):
        inst = random_instance("vip", rng, cap=12)
        v = decide(inst)
        if v.holds:
            continue
        failing += 1
        accepted += check_certificate(inst, v.certificate)
    flipped = rejected = 0
    while flipped < 50:
        net = random_net(rng, rng.randint(1, 3), rng.randint(1, 2), rng.randint(1, 8))
        found = _strict_box(rng, net, F(1, 64))
        if found is None:
            continue
        x, box = found
        y = evaluate(net, x)
        # the output spec fails at x, so the VIP run fails inside the box
        inst = VIP(net, box, LinSpec(net.m, (lt((1,) + (0,) * (net.m - 1), y[0]),)))
        v = decide(inst)
        assert not v.holds and check_certificate(inst, v.certificate)
        i = rng.randrange(len(v.certificate.pattern))
        pattern = list(v.certificate.pattern)
        pattern[i] = not pattern[i]
        flipped += 1
        rejected += not check_certificate(inst, Certificate(tuple(pattern), v.certificate.branch))
    report(capsys, 6, failing > 0 and accepted == failing and rejected == flipped,
           f"{accepted}/{failing} failing VIP certificates accepted, {rejected}/{flipped} flipped-phase "
           f"certificates rejected")


# -- 7: LP ------------------------------------------------------------------

def test_lp_against_fourier_motzkin(capsys):
    rng = rng_for("acceptance-7")
    disagree = feasible_count = 0
    for _ in range(500):
        s = random_system(rng, rng.randint(1, 4), rng.randint(1, 6))
        w = feasible(s)
        feasible_count += w is not None
        disagree += (w is not None) != fm_feasible(s)
    degenerate = degenerate_systems(rng_for("acceptance-7-degenerate"), 100)
    bland_bad = sum((feasible(s) is not None) != fm_feasible(s) for s in degenerate)
    A, b, c, opt = BEALE
    value, _ = simplex_max(A, b, c)
    report(capsys, 7, disagree == 0 and bland_bad == 0 and value == opt,
           f"500 systems ({feasible_count} feasible), {disagree} disagreements with elimination; "
           f"{len(degenerate)} degenerate systems terminated, {bland_bad} wrong; cycling example optimum {value}")


# -- 8: identity networks ---------------------------------------------------

def identity_net():
    """100 identity nodes: 11 hidden layers of 9 plus the output."""
    rng = rng_for("acceptance-8")
    width, layers = 3, []
    for _ in range(11):
        layers.append(tuple(ident(F(rng.randint(-2, 2)), tuple(F(rng.randint(-1, 1), 2) for _ in range(width)))
                            for _ in range(9)))
        width = 9
    layers.append((ident(0, tuple(F(rng.randint(-1, 1)) for _ in range(9))),))
    return Network(3, tuple(layers))


def test_identity_networks(capsys):
    net = identity_net()
    nodes = sum(len(l) for l in net.layers)
    c = (0, 0, 0)
    instances = [VIP(net, box_spec([0] * 3, [1] * 3), LinSpec(1, (le((1,), 100),))),
                 NE(net, net), SR(net, Metric.LINF, 1, c, 1), CR(net, Metric.L1, 1, c, 1),
                 LR(net, Metric.LINF, 1, c, 2)]
    rows = []
    ok = nodes == 100
    for inst in instances:
        t = time.perf_counter()
        v = decide(inst)
        dt = time.perf_counter() - t
        ok &= v.stats.patterns == 1 and dt < IDENTITY_LIMIT
        rows.append(f"{inst.kind} {v.stats.patterns} pattern {dt * 1000:.0f}ms")
    report(capsys, 8, ok, f"{nodes} identity nodes: " + ", ".join(rows))


# -- 9: worked examples -----------------------------------------------------

def test_worked_examples(capsys):
    checks = {}
    checks["NE(N, M)"] = decide(NE(NET_N, NET_M)).holds
    v = decide_nece(NET_N, [NodeRef(1, 0)])
    smaller = delete_nodes(NET_N, [NodeRef(1, 0)])
    x = v.witness
    checks["NECE(N, y11) with negative-part witness"] = (
        v.holds and x is not None and evaluate(smaller, x) == (min(F(0), x[0]),)
        and evaluate(smaller, x) != evaluate(NET_N, x))
    checks["NECE(K, both) fails"] = not decide_nece(NET_K, [NodeRef(1, 0), NodeRef(1, 1)]).holds
    checks["K without both is Q"] = decide(NE(delete_nodes(NET_K, ["1:0", "1:1"]), NET_Q)).holds
    checks["ANECE(N)"] = decide_anece(NET_N).holds
    checks["ANECE(K) fails"] = not decide_anece(NET_K).holds
    failed = [k for k, good in checks.items() if not good]
    report(capsys, 9, not failed, f"{len(checks) - len(failed)}/{len(checks)} outcomes reproduced {failed}")


# -- 10: identity elimination -----------------------------------------------

def test_identity_elimination(capsys):
    rng = rng_for("acceptance-10")
    nets = points = bad = 0
    for _ in range(50):
        net = random_net(rng, rng.randint(1, 4), rng.randint(1, 3), rng.randint(1, 6), id_prob=0.8)
        pure = id_to_relu(net)
        nets += 1
        for _ in range(100):
            x = [rat(rng, 5) for _ in range(net.n)]
            points += 1
            bad += evaluate(net, x) != evaluate(pure, x)
    report(capsys, 10, bad == 0, f"{nets} networks x 100 points, {bad} mismatches")


if __name__ == "__main__":
    failures = 0
    for name, fn in list(globals().items()):
        if name.startswith("test_") and callable(fn):
            try:
                fn(None)
            except AssertionError:
                failures += 1
    sys.exit(1 if failures else 0)
