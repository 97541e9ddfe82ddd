"""Command-line front end: ``r1w1 {run,verify,transform,fault,sweep}``.

Exit status 0 means the verdict passed (converged and legitimate, all checks
green); 1 means a verdict failed; 2 is a usage error. Option precedence is
flags, then a ``--config`` JSON file, then built-in defaults. When ``--out``
is not given and ``R1W1_OUTDIR`` is set, results go to
``$R1W1_OUTDIR/<subcommand>.<ext>``; otherwise to stdout.
"""
from __future__ import annotations

import argparse
import json
import os
import re
import sys
from dataclasses import replace
from pathlib import Path

from . import algorithms as algs
from . import engine, topology, transformer, verifier

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


def _dump(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


def _emit(args, text: str, ext: str) -> None:
    out = args.out
    if out is None and os.environ.get("R1W1_OUTDIR"):
        out = Path(os.environ["R1W1_OUTDIR"]) / f"{args.command}.{ext}"
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).parent.mkdir(parents=True, exist_ok=True)
        Path(out).write_text(text)


def _init_config(alg, g, text: str):
    if text.endswith(".json") or Path(text).is_file():
        return algs.config_from_json(alg, g, json.loads(Path(text).read_text()))
    return algs.preset(alg, g, text)


def _int_range(text: str) -> list[int]:
    """``7``, ``5..40`` or ``5..40:5`` (inclusive)."""
    m = re.fullmatch(r"(\d+)(?:\.\.(\d+)(?::(\d+))?)?", text)
    if not m:
        raise argparse.ArgumentTypeError(f"bad range {text!r}")
    lo = int(m[1])
    hi = int(m[2]) if m[2] else lo
    return list(range(lo, hi + 1, int(m[3] or 1)))


def _graphs(specs) -> list:
    out = []
    for s in specs:
        m = re.fullmatch(r"all-connected:n<=(\d+)", s)
        if m:
            for n in range(1, int(m[1]) + 1):
                out.extend(topology.all_connected_graphs(n))
        else:
            out.append(topology.load_graph(s))
    return out


# -- subcommands -------------------------------------------------------------

def cmd_run(args) -> int:
    alg = algs.parse_algorithm(args.alg)
    g = topology.load_graph(args.graph)
    cfg = _init_config(alg, g, args.init)
    trace = engine.execute(alg, g, cfg, engine.parse_daemon(args.daemon),
                           max_moves=args.max_moves)
    legit = alg.legitimate(g, trace.final)
    summary = {
        "algorithm": alg.selector(),
        "graph": g.to_dict(),
        "moves": len(trace),
        "silent": trace.silent,
        "budget_exhausted": trace.budget_exhausted,
        "status": "budget exhausted" if trace.budget_exhausted else "silent",
        "legitimate": legit,
        "rule_counts": {f"{p}:{r}": c for (p, r), c in sorted(trace.counts.items())},
        "final": algs.config_to_json(alg, trace.final),
        "bound": verifier.analytic_bound(alg, g.n),
    }
    if alg.name == "mmat11":
        summary["potentials"] = [list(algs.mmat_potentials(g, c))
                                 for c in trace.configurations(alg, g)]
        summary["matching"] = sorted(list(e) for e in alg.output(g, trace.final))
    else:
        summary["set"] = sorted(alg.output(g, trace.final))
    if args.trace:
        Path(args.trace).write_text(trace.to_jsonl())
    _emit(args, _dump(summary), "json")
    return EXIT_OK if trace.silent and legit else EXIT_FAIL


def cmd_verify(args) -> int:
    alg = algs.parse_algorithm(args.alg)
    graphs = _graphs(args.graph or args.graphs or [])
    if not graphs:
        raise SystemExit("verify: give at least one --graph")
    reports = []
    try:
        for g in graphs:
            reports.append(verifier.verify(alg, g, args.bound, args.cap))
    except verifier.StateSpaceTooLarge as exc:
        sys.stderr.write(f"refused: {exc}\n")
        return EXIT_FAIL
    ok = all(r.passed for r in reports)
    _emit(args, _dump({"passed": ok, "reports": [r.to_dict() for r in reports]}), "json")
    return EXIT_OK if ok else EXIT_FAIL


def _params(args) -> transformer.TrParams:
    return transformer.TrParams(K=args.K, n_prime=args.n_prime, seed=args.seed,
                                start_phase=args.start_phase,
                                max_cycles=args.max_cycles)


def cmd_transform(args) -> int:
    alg = algs.parse_algorithm(args.alg)
    g = topology.load_graph(args.graph)
    cfg = _init_config(alg, g, args.init)
    trace, metrics = transformer.run_transformed(alg, g, cfg, _params(args))
    excl = transformer.check_exclusion(g, metrics)
    out = transformer.metrics_json(trace, metrics, alg)
    out["exclusion_violations"] = sum(
        len(transformer.exclusion_violations(g, c.executed))
        for c in metrics.per_cycle if not c.warmup)
    _emit(args, _dump(out), "json")
    return EXIT_OK if metrics.converged and excl else EXIT_FAIL


_PLAN = re.compile(r"(?P<kind>drop_all|drop_random|corrupt)(?P<opts>(:[^:]+)*)")


def _bound_expr(text: str, post: int | None) -> int:
    text = text.strip()
    if text.startswith("post"):
        if post is None:
            raise ValueError("post")
        return post + int(text[4:] or 0)
    return int(text)


def cmd_fault(args) -> int:
    alg = algs.parse_algorithm(args.alg)
    g = topology.load_graph(args.graph)
    cfg = _init_config(alg, g, args.init)
    m = _PLAN.fullmatch(args.plan)
    if not m:
        raise SystemExit(f"fault: bad plan {args.plan!r}")
    opts = dict(t.split("=", 1) for t in m["opts"].split(":") if "=" in t)
    params = _params(args)
    bound = verifier.analytic_bound(alg, g.n)
    result = {"plan": args.plan, "algorithm": alg.selector(), "bound": bound}

    if m["kind"] == "corrupt":
        ids = [int(t) for t in opts.get("ids", "0").split(",")]
        net, post, info = transformer.fault_after_convergence(
            alg, g, cfg, params, "corrupt", ids=ids)
        result.update(info, converged_round=post)
        ok = bool(info.get("reconverged")) and info["moves_after"] <= bound
    else:
        lo_s, _, hi_s = opts.get("rounds", "post+1..post+10").partition("..")
        p = opts.get("p")
        net = transformer.TransformerNetwork(
            alg, g, cfg, replace(params, record_rounds=True))
        relative = "post" in lo_s or "post" in hi_s
        post = None
        if relative:
            if not net.run():
                result["converged_first"] = False
                _emit(args, _dump(result), "json")
                return EXIT_FAIL
            post = net.round - 1
        lo, hi = _bound_expr(lo_s, post), _bound_expr(hi_s, post)
        fault = (transformer.DropAll(lo, hi) if m["kind"] == "drop_all"
                 else transformer.DropRandom(float(p or 0.3), lo, hi))
        transformer.inject_fault(net, fault)
        mark = len(net.trace.rounds_legit)
        converged = net.run()
        window = [legit for rnd, _, legit in net.trace.rounds_legit[mark:]
                  if lo <= rnd <= hi]
        result.update(converged_round=post, window=[lo, hi],
                      legit_throughout=all(window) if relative else None,
                      converged=converged and net.metrics.converged)
        ok = result["converged"] and (all(window) if relative else True)
    result["exclusion_ok"] = transformer.check_exclusion(g, net.metrics)
    result["metrics"] = {k: v for k, v in net.metrics.to_dict().items() if k != "per_cycle"}
    result["passed"] = bool(ok and result["exclusion_ok"])
    _emit(args, _dump(result), "json")
    return EXIT_OK if result["passed"] else EXIT_FAIL


def cmd_sweep(args) -> int:
    alg = algs.parse_algorithm(args.alg)
    template = args.graph or "gnp:{n}:0.2:seed={seed}:connected"
    ns = [args.n] if isinstance(args.n, int) else args.n
    seeds = [args.seeds] if isinstance(args.seeds, int) else args.seeds
    if len(seeds) == 1:
        seeds = list(range(seeds[0]))

    def graph_for(n, seed):
        return topology.load_graph(template.format(n=n, seed=seed))

    def init_for(g, seed):
        if args.init.startswith("random"):
            return transformer.random_init(alg, g, seed)
        return _init_config(alg, g, args.init)

    rows = transformer.sweep(alg, graph_for, init_for, ns, seeds, _params(args))
    _emit(args, transformer.rows_to_csv(rows), "csv")
    ok = all(r["converged"] and r["moves"] <= verifier.analytic_bound(alg, r["n"])
             for r in rows)
    return EXIT_OK if ok else EXIT_FAIL


# -- parser ------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="r1w1", description=__doc__.splitlines()[0])
    p.add_argument("--config", help="JSON file with option defaults")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--alg", default="mmat11",
                        help="mmat11 | mkdom11:k=K | mkdep11:k=K | broken-fixture")
        sp.add_argument("--out", help="output file (default: stdout or $R1W1_OUTDIR)")
        return sp

    def tr_opts(sp):
        sp.add_argument("--graph", default="path:3")
        sp.add_argument("--init", default="random:0")
        sp.add_argument("--K", type=int, default=2)
        sp.add_argument("--n-prime", type=int, default=None)
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--start-phase", type=int, default=1, choices=range(1, 6))
        sp.add_argument("--max-cycles", type=int, default=10_000)

    sp = common(sub.add_parser("run", help="serial execution under a daemon"))
    sp.add_argument("--graph", default="path:3")
    sp.add_argument("--init", default="all-bottom",
                    help="preset name, random:SEED or a JSON configuration file")
    sp.add_argument("--daemon", default="random:0",
                    help="random:SEED | roundrobin | greedy | scripted:i,j,..")
    sp.add_argument("--max-moves", type=int, default=None)
    sp.add_argument("--trace", help="write the move trace as JSON lines")
    sp.set_defaults(func=cmd_run)

    sp = common(sub.add_parser("verify", help="exhaustive closure/convergence check"))
    sp.add_argument("--graph", action="append",
                    help="graph descriptor/file or all-connected:n<=N (repeatable)")
    sp.add_argument("--graphs", action="append", help=argparse.SUPPRESS)
    sp.add_argument("--bound", type=int, default=None)
    sp.add_argument("--cap", type=int, default=verifier.DEFAULT_CAP)
    sp.set_defaults(func=cmd_verify)

    sp = common(sub.add_parser("transform", help="one message-passing simulation"))
    tr_opts(sp)
    sp.set_defaults(func=cmd_transform)

    sp = common(sub.add_parser("fault", help="simulation with a fault plan"))
    tr_opts(sp)
    sp.add_argument("--plan", default="drop_all:rounds=post+1..post+10",
                    help="drop_all:rounds=A..B | drop_random:p=P:rounds=A..B | "
                         "corrupt:ids=i,j (A, B may be post+k)")
    sp.set_defaults(func=cmd_fault)

    sp = common(sub.add_parser("sweep", help="seeds x sizes, CSV out"))
    tr_opts(sp)
    sp.set_defaults(graph=None, init="random")
    sp.add_argument("--n", type=_int_range, default=[10])
    sp.add_argument("--seeds", type=_int_range, default=[10],
                    help="a count N (seeds 0..N-1) or an inclusive range a..b")
    sp.set_defaults(func=cmd_sweep)
    return p


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    pre_cfg = argparse.ArgumentParser(add_help=False)
    pre_cfg.add_argument("--config")
    known, _ = pre_cfg.parse_known_args(argv)
    if known.config:
        defaults = {k.replace("-", "_"): v
                    for k, v in json.loads(Path(known.config).read_text()).items()}
        for action in parser._subparsers._group_actions:
            for sp in action.choices.values():
                sp.set_defaults(**defaults)
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, topology.GraphError) as exc:
        parser.error(str(exc))


if __name__ == "__main__":
    sys.exit(main())
