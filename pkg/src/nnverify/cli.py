"""Command line: decide instances, emit reductions and SAT gadgets.

Verdicts and other results go to standard output as one line of JSON, a
short human summary goes to standard error. Exit status is 0 when the
command ran (whatever the verdict), 2 for bad usage or bad input files
and 3 for internal errors.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace

from .exact import INF, Metric, parse_ext, parse_rational
from .linspec import LinSpec
from .minimize import decide_anece, decide_nece, ne_to_anece, ne_to_nece
from .network import Network, NodeRef
from . import reductions as red
from .verifier import PROBLEMS, Certificate, check_certificate, decide, instance_from_dict, instance_to_dict
from .verifier.problems import ACR, CR, GLR, GSR, LR, NE, NNR, SR, VIP

EXIT_OK, EXIT_USAGE, EXIT_INTERNAL = 0, 2, 3

REDUCTIONS = ("sr2vip", "cr2vip", "sr2cr", "cr2sr", "acr2cr", "cr2acr", "ne2cr", "gsr2ne",
              "ne2nece", "ne2anece", "retract")


class UsageError(Exception):
    pass


def _read_json(path: str):
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise UsageError(f"{path} is not valid JSON: {exc}") from None


def _write(path: str | None, payload) -> None:
    text = json.dumps(payload)
    if path is None or path == "-":
        print(text)
        return
    try:
        with open(path, "w") as fh:
            fh.write(text + "\n")
    except OSError as exc:
        raise UsageError(f"cannot write {path}: {exc.strerror}") from None


def _need(args, name):
    value = getattr(args, name)
    if value is None:
        raise UsageError(f"--{name.replace('_', '-')} is required for {args.problem}")
    return value


def _center(text: str):
    text = text.strip()
    if not text:
        return ()
    return tuple(parse_rational(t) for t in text.split(","))


def _instance_from_flags(args):
    kind = args.problem
    net = Network.from_dict(_read_json(_need(args, "net")))
    if kind in ("nnr", "vip"):
        inspec = LinSpec.from_dict(_read_json(_need(args, "inspec")))
        outspec = LinSpec.from_dict(_read_json(_need(args, "outspec")))
        return (NNR if kind == "nnr" else VIP)(net, inspec, outspec)
    if kind == "ne":
        return NE(net, Network.from_dict(_read_json(_need(args, "net2"))))
    metric = Metric.parse(args.metric)
    eps = parse_ext(_need(args, "eps"))
    if kind in ("gsr", "glr"):
        if kind == "gsr":
            return GSR(net, metric, eps, parse_ext(_need(args, "delta")))
        return GLR(net, metric, eps, parse_rational(_need(args, "lip")))
    center = _center(_need(args, "center"))
    if kind == "sr":
        return SR(net, metric, eps, center, parse_ext(_need(args, "delta")))
    if kind == "cr":
        return CR(net, metric, eps, center, args.label or 1, args.strict)
    if kind == "acr":
        return ACR(net, metric, eps, center, args.strict)
    return LR(net, metric, eps, center, parse_rational(_need(args, "lip")))


def _load(path: str):
    data = _read_json(path)
    if not isinstance(data, dict):
        raise UsageError(f"{path} does not hold an instance object")
    return data


def _summary(label: str, holds: bool, stats) -> str:
    return f"{label}: {'holds' if holds else 'fails'} ({stats.lps} LPs, {stats.patterns} patterns)"


def cmd_check(args) -> int:
    kind = args.problem
    if kind in ("nece", "anece"):
        data = _load(args.instance) if args.instance else {"net": _read_json(_need(args, "net"))}
        net = Network.from_dict(data["net"])
        if kind == "nece":
            nodes = data.get("nodes") or (args.nodes.split(",") if args.nodes else None)
            if not nodes:
                raise UsageError("nece needs --nodes layer:index,... or a nodes list in the instance")
            v = decide_nece(net, [NodeRef.parse(s) for s in nodes], args.engine, args.parallel)
        else:
            v = decide_anece(net, args.cap, args.engine, args.parallel)
        _write(None, v.to_dict())
        print(_summary(kind, v.holds, v.stats), file=sys.stderr)
        return EXIT_OK
    if args.instance:
        inst = instance_from_dict(_load(args.instance))
        if inst.kind != kind:
            raise UsageError(f"instance file holds a {inst.kind} problem, not {kind}")
    else:
        inst = _instance_from_flags(args)
    v = decide(inst, args.engine, args.parallel)
    _write(None, v.to_dict())
    print(_summary(kind, v.holds, v.stats), file=sys.stderr)
    return EXIT_OK


def cmd_certify(args) -> int:
    inst = instance_from_dict(_load(args.instance))
    data = _read_json(args.certificate)
    if isinstance(data, dict) and "certificate" in data:
        data = data["certificate"]
    if not isinstance(data, dict):
        raise UsageError("no certificate found")
    ok = check_certificate(inst, Certificate.from_dict(data))
    _write(None, {"accepted": ok})
    print(f"certificate {'accepted' if ok else 'rejected'}", file=sys.stderr)
    return EXIT_OK


def _expect(inst, *kinds):
    if inst.kind not in kinds:
        raise UsageError(f"this reduction takes {'/'.join(kinds)}, got {inst.kind}")


def cmd_reduce(args) -> int:
    name = args.name
    data = _load(args.instance)
    pure = args.pure_relu
    meta = {"reduction": name}
    if name in ("ne2nece", "ne2anece"):
        inst = instance_from_dict(data)
        _expect(inst, "ne")
        if name == "ne2nece":
            net, nodes = ne_to_nece(inst.net, inst.net2)
            out = {"problem": "nece", "net": net.to_dict(), "nodes": [str(r) for r in nodes]}
        else:
            out = {"problem": "anece", "net": ne_to_anece(inst.net, inst.net2).to_dict()}
        meta.update(source="ne", target=out["problem"])
    else:
        inst = instance_from_dict(data)
        if name == "sr2vip":
            _expect(inst, "sr")
            target = red.sr_to_vip(inst, pure)
        elif name == "cr2vip":
            _expect(inst, "cr")
            target = red.cr_to_vip(inst, pure)
        elif name == "sr2cr":
            _expect(inst, "sr")
            target = red.sr_to_cr(inst, pure)
        elif name == "cr2sr":
            _expect(inst, "cr")
            target = red.cr_to_sr(inst, pure)
        elif name == "acr2cr":
            _expect(inst, "acr")
            target = red.acr_to_cr(inst)
        elif name == "cr2acr":
            _expect(inst, "cr")
            target = red.cr_to_acr(inst, pure)
        elif name == "ne2cr":
            _expect(inst, "ne")
            target = red.ne_to_cr(inst, args.metric or Metric.LINF, pure)
        elif name == "gsr2ne":
            _expect(inst, "gsr")
            target = red.gsr_to_ne(inst, pure)
        else:
            _expect(inst, "sr", "cr", "acr")
            net = red.metric_retraction(inst.net, inst.metric, inst.center, inst.eps,
                                        legacy=args.legacy, pure_relu=pure)
            target = replace(inst, net=net, eps=INF)
        if isinstance(target, list):
            out = [instance_to_dict(t) for t in target]
            meta.update(source=inst.kind, target=[t.kind for t in target])
        else:
            out = instance_to_dict(target)
            meta.update(source=inst.kind, target=target.kind)
    if args.out is None:
        _write(None, out)
        print(json.dumps(meta), file=sys.stderr)
    else:
        _write(args.out, out)
        meta["out"] = args.out
        _write(None, meta)
    return EXIT_OK


def cmd_gadget(args) -> int:
    try:
        with open(args.cnf) as fh:
            text = fh.read()
    except OSError as exc:
        raise UsageError(f"cannot read {args.cnf}: {exc.strerror}") from None
    cnf = red.parse_dimacs(text)
    if args.target == "gsr":
        inst = red.sat3_to_gsr(cnf, args.pure_relu)
    elif args.target == "lr":
        inst = red.sat3_to_lr(cnf, args.pure_relu, args.legacy)
    else:
        inst = red.sat3_to_glr(cnf, args.pure_relu, args.legacy)
    if args.net_out:
        _write(args.net_out, inst.net.to_dict())
    meta = {"target": args.target, "variables": cnf.num_vars, "clauses": len(cnf.clauses),
            "relu_nodes": inst.net.relu_count}
    if args.out is None:
        _write(None, instance_to_dict(inst))
        print(json.dumps(meta), file=sys.stderr)
    else:
        _write(args.out, instance_to_dict(inst))
        meta["out"] = args.out
        _write(None, meta)
    return EXIT_OK


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="nnverify", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    c = sub.add_parser("check", help="decide an instance")
    c.add_argument("problem", choices=sorted(PROBLEMS) + ["nece", "anece"])
    c.add_argument("--instance", help="instance JSON file (instead of the flags below)")
    c.add_argument("--net")
    c.add_argument("--net2")
    c.add_argument("--inspec")
    c.add_argument("--outspec")
    c.add_argument("--metric", default="linf")
    c.add_argument("--eps")
    c.add_argument("--delta")
    c.add_argument("--lip")
    c.add_argument("--center", help="comma separated rationals, e.g. 0,1/2")
    c.add_argument("--label", type=int)
    c.add_argument("--strict", action="store_true", help="cr/acr: the label must be the unique maximum")
    c.add_argument("--nodes", help="nece: comma separated layer:index node references")
    c.add_argument("--cap", type=int, default=16, help="anece: refuse networks with more hidden nodes")
    c.add_argument("--engine", choices=("dfs", "enum"), default="dfs")
    c.add_argument("--parallel", type=int, metavar="N", help="search with N worker processes")
    c.set_defaults(func=cmd_check)

    v = sub.add_parser("certify", help="check a failure certificate with one LP")
    v.add_argument("--instance", required=True)
    v.add_argument("--certificate", required=True, help="certificate or verdict JSON")
    v.set_defaults(func=cmd_certify)

    r = sub.add_parser("reduce", help="emit the reduced instance")
    r.add_argument("name", choices=REDUCTIONS)
    r.add_argument("--instance", required=True)
    r.add_argument("--out")
    r.add_argument("--pure-relu", action="store_true", help="replace identity nodes by ReLU pairs")
    r.add_argument("--metric", help="ne2cr: metric of the emitted instance")
    r.add_argument("--legacy", action="store_true", help="retract: use the unrepaired l1 clamp")
    r.set_defaults(func=cmd_reduce)

    g = sub.add_parser("gadget", help="network for a 3-CNF formula")
    g.add_argument("--cnf", required=True, help="DIMACS file")
    g.add_argument("--target", choices=("gsr", "lr", "glr"), required=True)
    g.add_argument("--out")
    g.add_argument("--net-out")
    g.add_argument("--pure-relu", action="store_true")
    g.add_argument("--legacy", action="store_true", help="lr/glr: the summed-clause network")
    g.set_defaults(func=cmd_gadget)
    return p


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        if getattr(args, "parallel", None) is not None and args.parallel < 1:
            raise UsageError("--parallel needs a positive worker count")
        return args.func(args)
    except (UsageError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except Exception as exc:  # noqa: BLE001
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
