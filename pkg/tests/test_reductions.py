import random
from dataclasses import replace
from fractions import Fraction as F

import pytest
from hypothesis import given, settings, strategies as st

from nnverify.exact import INF, Metric, dist
from nnverify.network import Act, Network, evaluate, ident, identity_network
from nnverify.reductions import (acr_to_cr, cr_to_acr, cr_to_sr, cr_to_vip, gsr_to_ne, metric_retraction, ne_to_cr,
                                 retraction_network, sr_to_cr, sr_to_vip)
from nnverify.verifier import ACR, CR, GSR, NE, SR, decide

from instances import NET_M, NET_N, random_instance, plateau_net, rng_for

ID = identity_network(1)
CONST = Network(1, ((ident(3), ident(1)),))
seeds = st.integers(0, 10 ** 6)
H = F(1, 2)


def pure(net):
    return all(node.act is Act.RELU for layer in net.layers[:-1] for node in layer)


def linf(inst):
    return replace(inst, metric=Metric.LINF)


def positive_eps(inst, rng):
    return inst if inst.eps is INF or inst.eps > 0 else replace(inst, eps=F(rng.randint(1, 8), 4))


# source kind, instance adapter, reduction returning something decide() accepts
def _acr_any(inst):
    return any(decide(cr).holds for cr in acr_to_cr(inst))


REDUCTIONS = {
    "sr2vip": ("sr", lambda i, r: linf(i), sr_to_vip),
    "cr2vip": ("cr", lambda i, r: linf(i), cr_to_vip),
    "sr2cr": ("sr", lambda i, r: i, sr_to_cr),
    "cr2sr": ("cr", lambda i, r: i, cr_to_sr),
    "cr2acr": ("cr", positive_eps, cr_to_acr),
    "ne2cr": ("ne", lambda i, r: i, ne_to_cr),
    "gsr2ne": ("gsr", lambda i, r: i, gsr_to_ne),
}


def test_sr_to_vip_examples():
    assert not decide(sr_to_vip(SR(ID, Metric.LINF, 1, (0,), H))).holds
    assert decide(sr_to_vip(SR(ID, Metric.LINF, 1, (0,), 1))).holds
    with pytest.raises(ValueError):
        sr_to_vip(SR(ID, Metric.L1, 1, (0,), 1))


def test_cr_to_vip_examples():
    assert decide(cr_to_vip(CR(plateau_net(), Metric.LINF, 1, (-2,), 2))).holds
    assert not decide(cr_to_vip(CR(plateau_net(), Metric.LINF, 3, (-2,), 2))).holds
    assert decide(cr_to_vip(CR(CONST, Metric.LINF, 5, (0,), 1))).holds
    assert not decide(cr_to_vip(CR(CONST, Metric.LINF, 5, (0,), 2))).holds


def test_sr_cr_examples():
    assert not decide(sr_to_cr(SR(ID, Metric.LINF, 1, (0,), H))).holds
    cr = sr_to_cr(SR(ID, Metric.LINF, 1, (0,), 1))
    assert decide(cr).holds and cr.label == 3
    rng = random.Random(5)
    assert all(evaluate(cr.net, [F(rng.randint(-40, 40), 8)])[2] == 1 for _ in range(10))
    inst = CR(plateau_net(), Metric.LINF, 1, (-2,), 2)
    assert decide(cr_to_sr(inst)).holds
    assert not decide(cr_to_sr(replace(inst, eps=3))).holds
    assert decide(cr_to_sr(CR(CONST, Metric.L1, INF, (0,), 1))).holds


def test_acr_cr_examples():
    for eps in (1, INF):
        assert decide(cr_to_acr(CR(CONST, Metric.LINF, eps, (0,), 1))).holds
        assert not decide(cr_to_acr(CR(CONST, Metric.LINF, eps, (0,), 2))).holds
        assert [decide(c).holds for c in acr_to_cr(ACR(CONST, Metric.LINF, eps, (0,)))] == [True, False]
    assert decide(cr_to_acr(CR(plateau_net(), Metric.L1, 1, (-2,), 2))).holds
    assert not decide(cr_to_acr(CR(plateau_net(), Metric.L1, 1, (-2,), 1))).holds
    with pytest.raises(ValueError):
        cr_to_acr(CR(CONST, Metric.LINF, 0, (0,), 1))


def test_ne_to_cr_examples():
    from nnverify.network import delete_nodes
    assert decide(ne_to_cr(NE(NET_N, NET_M))).holds
    assert not decide(ne_to_cr(NE(NET_N, delete_nodes(NET_N, ["1:0"])))).holds


def test_gsr_to_ne_examples():
    assert decide(gsr_to_ne(GSR(CONST, Metric.LINF, 1, 0))).holds
    assert not decide(gsr_to_ne(GSR(ID, Metric.LINF, 1, H))).holds
    assert decide(gsr_to_ne(GSR(ID, Metric.LINF, 1, 1))).holds
    assert not decide(gsr_to_ne(GSR(ID, Metric.LINF, INF, 100))).holds


@pytest.mark.parametrize("name", sorted(REDUCTIONS))
@settings(max_examples=12, deadline=None)
@given(seed=seeds, pure_relu=st.booleans())
def test_reduction_preserves_verdict(name, seed, pure_relu):
    kind, adapt, reduce = REDUCTIONS[name]
    rng = rng_for("reduce", name, seed)
    inst = adapt(random_instance(kind, rng, cap=6), rng)
    target = reduce(inst, pure_relu=pure_relu)
    assert decide(target).holds == decide(inst).holds
    if pure_relu:
        nets = (target.net, target.net2) if target.kind == "ne" else (target.net,)
        assert all(pure(n) for n in nets)


@settings(max_examples=15, deadline=None)
@given(seeds)
def test_acr_to_cr_preserves_verdict(seed):
    inst = random_instance("acr", rng_for("reduce-acr", seed), cap=6)
    assert _acr_any(inst) == decide(inst).holds


# -- retraction ---------------------------------------------------------------

def test_retraction_examples():
    t = retraction_network(1, Metric.L1, (0,), 1)
    assert evaluate(t, [H]) == (H,)
    assert evaluate(t, [F(5)]) == (1,)
    assert evaluate(t, [F(-5)]) == (-1,)
    assert evaluate(retraction_network(1, Metric.L1, (0,), 1, legacy=True), [F(-5)]) == (-9,)
    with pytest.raises(ValueError):
        retraction_network(1, Metric.L1, (0,), INF)


@pytest.mark.parametrize("metric", [Metric.L1, Metric.LINF])
def test_retraction_maps_into_ball_and_fixes_it(metric):
    rng = rng_for("retract", metric.value)
    for _ in range(20):
        n = rng.randint(1, 3)
        c = tuple(F(rng.randint(-8, 8), 4) for _ in range(n))
        eps = F(rng.randint(0, 8), 4)
        t = retraction_network(n, metric, c, eps)
        for _ in range(50):
            x = tuple(F(rng.randint(-80, 80), 8) for _ in range(n))
            y = evaluate(t, x)
            assert dist(metric, y, c) <= eps
            if dist(metric, x, c) <= eps:
                assert y == x


@settings(max_examples=20, deadline=None)
@given(seeds)
def test_retracted_instances_agree(seed):
    rng = rng_for("retract-verdict", seed)
    inst = random_instance(rng.choice(("sr", "cr", "acr")), rng, cap=6)
    if inst.eps is INF:
        return
    net = metric_retraction(inst.net, inst.metric, inst.center, inst.eps, pure_relu=rng.random() < 0.3)
    assert decide(replace(inst, net=net, eps=INF)).holds == decide(inst).holds
