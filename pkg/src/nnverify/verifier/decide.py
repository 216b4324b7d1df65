"""Decision procedures, verdicts, certificates and witness checks."""

from __future__ import annotations

from concurrent.futures import FIRST_COMPLETED, ProcessPoolExecutor, wait
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from ..exact import INF, Metric, dist, format_rational, vector
from ..linspec import satisfied_by
from ..network import evaluate
from .encode import Encoding, encode, trivially_true
from .search import SearchResult, Stats, dfs_from, dfs_search, enumerate_search, frontier, leaf_feasible

__all__ = [
    "Certificate", "Verdict", "check_certificate", "decide", "decide_acr", "decide_cr", "decide_glr",
    "decide_gsr", "decide_lr", "decide_ne", "decide_nnr", "decide_sr", "decide_vip", "violates",
]


@dataclass(frozen=True)
class Certificate:
    """One activation pattern of the searched network plus the violated branch."""

    pattern: tuple[bool, ...]
    branch: tuple

    def to_dict(self) -> dict:
        return {"pattern": ["active" if p else "inactive" for p in self.pattern],
                "branch": list(self.branch)}

    @classmethod
    def from_dict(cls, data: dict) -> "Certificate":
        phases = []
        for p in data["pattern"]:
            if p in ("active", True, 1):
                phases.append(True)
            elif p in ("inactive", False, 0):
                phases.append(False)
            else:
                raise ValueError(f"bad phase {p!r}")
        return cls(tuple(phases), tuple(data["branch"]))


@dataclass
class Verdict:
    holds: bool
    witness: tuple[Fraction, ...] | None = None
    certificate: Certificate | None = None
    stats: Stats = field(default_factory=Stats)

    def to_dict(self) -> dict:
        return {"holds": self.holds,
                "witness": None if self.witness is None else [format_rational(v) for v in self.witness],
                "certificate": None if self.certificate is None else self.certificate.to_dict(),
                "stats": self.stats.as_dict()}


# -- search drivers ---------------------------------------------------------

def _parallel_search(enc: Encoding, workers: int) -> SearchResult:
    depth = max(1, workers.bit_length() + 1)
    states, stats = frontier(enc, depth)
    result = SearchResult(False)
    with ProcessPoolExecutor(max_workers=workers) as pool:
        pending = {pool.submit(dfs_from, enc, *s) for s in states}
        while pending:
            done, pending = wait(pending, return_when=FIRST_COMPLETED)
            for fut in done:
                res = fut.result()
                stats.add(res.stats)
                if res.found and not result.found:
                    result = res
            if result.found:
                for fut in pending:
                    fut.cancel()
                break
    result.stats = stats
    return result


def run_search(enc: Encoding, engine: str = "dfs", parallel: int | None = None) -> SearchResult:
    if engine == "enum":
        return enumerate_search(enc)
    if engine != "dfs":
        raise ValueError(f"unknown engine {engine!r}")
    if parallel and parallel > 1 and enc.net.relu_count > 2:
        return _parallel_search(enc, parallel)
    return dfs_search(enc)


def _inputs(inst, point):
    """Project a base point to the witness the problem reports."""
    if inst.kind in ("gsr", "glr"):
        return tuple(point[:2 * inst.net.n])
    return tuple(point[:inst.net.n])


def _universal(inst, engine, parallel) -> Verdict:
    if trivially_true(inst):
        return Verdict(True)
    enc = encode(inst)
    res = run_search(enc, engine, parallel)
    if not res.found:
        return Verdict(True, stats=res.stats)
    witness = _inputs(inst, res.point)
    if not violates(inst, witness):
        raise AssertionError(f"internal error: {inst.kind} witness {witness} does not violate the property")
    return Verdict(False, witness, Certificate(res.pattern, res.label), res.stats)


def decide_nnr(inst, engine="dfs", parallel=None) -> Verdict:
    """Reachable: ``holds`` comes with a witness input."""
    enc = encode(inst)
    res = run_search(enc, engine, parallel)
    if not res.found:
        return Verdict(False, stats=res.stats)
    witness = _inputs(inst, res.point)
    if not reaches(inst, witness):
        raise AssertionError(f"internal error: nnr witness {witness} does not reach the output spec")
    return Verdict(True, witness, Certificate(res.pattern, res.label), res.stats)


def decide_vip(inst, engine="dfs", parallel=None) -> Verdict:
    return _universal(inst, engine, parallel)


def decide_ne(inst, engine="dfs", parallel=None) -> Verdict:
    return _universal(inst, engine, parallel)


def decide_sr(inst, engine="dfs", parallel=None) -> Verdict:
    return _universal(inst, engine, parallel)


def decide_cr(inst, engine="dfs", parallel=None) -> Verdict:
    return _universal(inst, engine, parallel)


def decide_lr(inst, engine="dfs", parallel=None) -> Verdict:
    return _universal(inst, engine, parallel)


def decide_gsr(inst, engine="dfs", parallel=None) -> Verdict:
    return _universal(inst, engine, parallel)


def decide_glr(inst, engine="dfs", parallel=None) -> Verdict:
    return _universal(inst, engine, parallel)


def decide_acr(inst, engine="dfs", parallel=None) -> Verdict:
    """Some label is robust. On failure the witness concatenates one
    counterexample input per label, in label order."""
    from .problems import CR
    stats = Stats()
    witness = []
    for j in range(1, inst.net.m + 1):
        v = decide_cr(CR(inst.net, inst.metric, inst.eps, inst.center, j, inst.strict), engine, parallel)
        stats.add(v.stats)
        if v.holds:
            return Verdict(True, stats=stats)
        witness.extend(v.witness)
    return Verdict(False, tuple(witness), None, stats)


_DECIDERS = {
    "nnr": decide_nnr, "vip": decide_vip, "ne": decide_ne, "sr": decide_sr, "cr": decide_cr,
    "acr": decide_acr, "lr": decide_lr, "gsr": decide_gsr, "glr": decide_glr,
}


def decide(inst, engine="dfs", parallel=None) -> Verdict:
    return _DECIDERS[inst.kind](inst, engine, parallel)


# -- direct property checks -------------------------------------------------

def reaches(inst, x: Sequence) -> bool:
    """``x`` satisfies the input spec and ``net(x)`` the output spec."""
    x = vector(x)
    return _in_input(inst.inspec, x) and satisfied_by(inst.outspec, evaluate(inst.net, x))


def _aux_feasible(spec, x) -> bool:
    from ..linspec import LinSpec, LinRow
    from ..lp import feasible
    n = spec.real_dim
    rows = []
    for r in spec.rows:
        rhs = r.rhs - sum((a * v for a, v in zip(r.coeffs[:n], x)), Fraction(0))
        rows.append(LinRow(r.coeffs[n:], r.rel, rhs))
    return feasible(LinSpec(spec.aux, tuple(rows))) is not None


def _in_input(spec, x) -> bool:
    if spec.aux and spec.ball is None:
        return _aux_feasible(spec, x)
    return satisfied_by(spec, x)


def violates(inst, witness: Sequence) -> bool:
    """Exact check that ``witness`` is a counterexample to ``inst``."""
    w = vector(witness)
    kind = inst.kind
    net = inst.net
    if kind == "vip":
        return _in_input(inst.inspec, w) and not satisfied_by(inst.outspec, evaluate(net, w))
    if kind == "nnr":
        return not reaches(inst, w)
    if kind == "ne":
        return evaluate(net, w) != evaluate(inst.net2, w)
    if kind in ("sr", "cr", "lr"):
        if not _in_ball(inst.metric, w, inst.center, inst.eps):
            return False
        y, y0 = evaluate(net, w), evaluate(net, inst.center)
        if kind == "sr":
            return dist(inst.metric, y, y0) > inst.delta
        if kind == "cr":
            return _beaten(y, inst.label - 1, inst.strict)
        return dist(inst.metric, y, y0) > inst.lip * dist(inst.metric, w, inst.center)
    if kind == "acr":
        n = net.n
        if len(w) != n * net.m:
            return False
        return all(_in_ball(inst.metric, w[j * n:(j + 1) * n], inst.center, inst.eps)
                   and _beaten(evaluate(net, w[j * n:(j + 1) * n]), j, inst.strict)
                   for j in range(net.m))
    if kind in ("gsr", "glr"):
        n = net.n
        x, xb = w[:n], w[n:]
        if len(xb) != n or not _in_ball(inst.metric, x, xb, inst.eps):
            return False
        d = dist(inst.metric, evaluate(net, x), evaluate(net, xb))
        if kind == "gsr":
            return d > inst.delta
        return d > inst.lip * dist(inst.metric, x, xb)
    raise ValueError(f"unknown problem {kind}")


def _in_ball(metric, x, center, eps) -> bool:
    return eps is INF or dist(metric, x, center) <= eps


def _beaten(y, j, strict) -> bool:
    return any((y[i] >= y[j]) if strict else (y[i] > y[j]) for i in range(len(y)) if i != j)


# -- certificates -----------------------------------------------------------

def check_certificate(inst, cert: Certificate) -> bool:
    """Rebuild the single LP named by ``cert`` and test it."""
    if inst.kind == "acr":
        raise ValueError("acr failures carry one counterexample per label, not a certificate")
    enc = encode(inst)
    if len(cert.pattern) != enc.net.relu_count:
        raise ValueError(f"certificate has {len(cert.pattern)} phases, "
                         f"the searched network has {enc.net.relu_count} ReLUs")
    labels = [lab for lab, _ in enc.branches]
    if tuple(cert.branch) not in labels:
        raise ValueError(f"unknown branch {list(cert.branch)}")
    return leaf_feasible(enc, cert.pattern, cert.branch) is not None
