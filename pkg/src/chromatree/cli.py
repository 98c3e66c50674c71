"""Command-line front end.

Subcommands:

* ``run``       - sequential or threaded workload campaign with metrics
* ``simulate``  - one deterministic run (seeded random or scripted)
* ``enumerate`` - exhaustive interleaving exploration at desk scale
* ``verify``    - structural checks on a tree dump
* ``report``    - regression summary from a metrics CSV

All randomness flows from ``--seed`` (fallback: the CHROMATIC_SEED
environment variable).  Exit codes: 0 success, 1 checker or bound
violation, 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import threading

from . import metrics as metrics_mod
from . import scheduler as sched_mod
from . import verifier as verifier_mod
from .runtime import SequentialMemory, ThreadedMemory
from .tree import ChromaticTree, census, dump
from .workload import (WorkloadSpec, contended_key_campaign,
                       generate, prefill_keys)

__all__ = ["main"]


def _seed(args):
    if args.seed is not None:
        return args.seed
    env = os.environ.get("CHROMATIC_SEED")
    return int(env) if env else 0


def _parse_mix(text):
    parts = text.split("/")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError("mix must be ins/del/find")
    return tuple(int(p) for p in parts)


def _write(path, text):
    with open(path, "w") as fh:
        fh.write(text)


def _run_hot_key(args):
    """The same-key contention benchmark: report steps/op for the chosen
    search-restart policy so the two policies can be contrasted."""
    if args.threads < 2:
        print("error: hot-key campaign needs at least 2 threads",
              file=sys.stderr)
        return 2
    summary = contended_key_campaign(args.legacy_restart,
                                     rounds=max(1, args.ops // 2),
                                     threads=args.threads)
    text = json.dumps(summary, indent=2, sort_keys=True)
    if args.out:
        _write(args.out, text)
    else:
        print(text)
    return 0


def cmd_run(args):
    seed = _seed(args)
    if args.distribution == "adversarial-same-key" and args.mode == "threads":
        return _run_hot_key(args)
    spec = WorkloadSpec(key_universe=args.universe, mix=args.mix,
                        op_count=args.ops, processes=args.threads,
                        distribution=args.distribution, seed=seed)
    try:
        spec.validate()
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    threaded = args.mode == "threads" and args.threads > 1
    memory = ThreadedMemory() if threaded else SequentialMemory()
    tree = ChromaticTree(memory, legacy_restart=args.legacy_restart)
    boot = tree.make_ctx("prefill")
    for k in prefill_keys(args.n, args.universe, seed):
        tree.insert(boot, k)
    hub = metrics_mod.MetricsHub(size=tree.size())
    workloads = generate(spec)
    recorders = [metrics_mod.Recorder(hub) for _ in workloads]

    def worker(pid):
        ctx = tree.make_ctx(pid, recorders[pid])
        for kind, key in workloads[pid]:
            getattr(tree, kind)(ctx, key)

    if threaded:
        threads = [threading.Thread(target=worker, args=(pid,))
                   for pid in range(args.threads)]
        for t in threads:
            t.start()
        for t in threads:
            t.join()
    else:
        for pid in range(len(workloads)):
            worker(pid)

    rows = [r for rec in recorders for r in rec.rows]
    rebal = {}
    for rec in recorders:
        for tag, cnt in rec.rebal_total.items():
            rebal[tag] = rebal.get(tag, 0) + cnt
    i = sum(1 for r in rows if r.op == "insert" and r.result is True)
    d = sum(1 for r in rows if r.op == "delete" and r.result is True)
    struct = verifier_mod.check_structure(tree)
    ok = struct.passed
    try:
        bounds = verifier_mod.check_bounds(
            {"i": i, "d": d, "rebal_total": sum(rebal.values())})
    except verifier_mod.BoundViolation as exc:
        print(f"bound violation: {exc}", file=sys.stderr)
        return 1
    mean_steps = (sum(r.steps for r in rows) / len(rows)) if rows else 0.0
    report = {
        "mode": args.mode, "threads": args.threads, "n": args.n,
        "ops": args.ops, "seed": seed, "i": i, "d": d,
        "rebalancing": rebal, "mean_steps": mean_steps,
        "c_dot_max": max((r.c_dot_op for r in rows), default=0),
        "structure_passed": struct.passed,
        "census_size": struct.census_size,
        "height": struct.height, "final_n": struct.n,
        "bound": json.loads(bounds.as_json()),
    }
    if args.out:
        _write(args.out, json.dumps(report, indent=2, sort_keys=True))
    else:
        print(json.dumps(report, indent=2, sort_keys=True))
    if args.metrics_csv:
        _write(args.metrics_csv, metrics_mod.rows_to_csv(rows))
    if args.dump:
        _write(args.dump, dump(tree))
    if not ok:
        print("structural check failed", file=sys.stderr)
        return 1
    return 0


def _sim_workloads(args, seed):
    spec = WorkloadSpec(key_universe=args.universe, mix=args.mix,
                        op_count=args.ops, processes=args.procs,
                        distribution=args.distribution, seed=seed)
    spec.validate()
    return generate(spec)


def _checkers(which):
    if which == "none":
        return []
    return [sched_mod.census_bound_checker,
            sched_mod.descriptor_state_checker()]


def cmd_simulate(args):
    seed = _seed(args)
    workloads = _sim_workloads(args, seed)
    prefill = prefill_keys(args.n, args.universe, seed) if args.n else ()
    sim = sched_mod.Simulation(workloads, prefill=prefill,
                               checkers=_checkers(args.check),
                               legacy_restart=args.legacy_restart)
    if args.script:
        with open(args.script) as fh:
            schedule = sched_mod.parse_script(fh.read())
    else:
        schedule = sched_mod.RandomSchedule(seed)
    try:
        trace = sim.run(schedule)
    except sched_mod.CheckerViolation as exc:
        print(f"checker violation: {exc}", file=sys.stderr)
        if args.trace:
            _write(args.trace, sched_mod.format_trace(exc.trace))
        return 1
    history = sim.history()
    lin = (verifier_mod.check_linearizable(history, sim.initial_keys)
           if len(history) <= verifier_mod.MAX_HISTORY else None)
    out = {
        "steps": len(trace), "procs": args.procs, "seed": seed,
        "results": {p.pid: p.results for p in sim.procs.values()},
        "census": len(census(sim.tree)),
        "linearizable": lin,
    }
    print(json.dumps(out, indent=2, sort_keys=True))
    if args.trace:
        _write(args.trace, sched_mod.format_trace(trace))
    if lin is False:
        return 1
    return 0


def cmd_enumerate(args):
    seed = _seed(args)
    workloads = _sim_workloads(args, seed)
    prefill = prefill_keys(args.n, args.universe, seed) if args.n else ()
    verdicts = {"nonlinearizable": 0, "terminals": 0}

    def on_terminal(sim):
        verdicts["terminals"] += 1
        h = sim.history()
        if len(h) <= verifier_mod.MAX_HISTORY:
            if not verifier_mod.check_linearizable(h, sim.initial_keys):
                verdicts["nonlinearizable"] += 1

    def factory(perms):
        return sched_mod.Simulation(workloads, prefill=prefill,
                                    checkers=_checkers(args.check),
                                    perms=perms)

    try:
        stats = sched_mod.enumerate_interleavings(
            factory, depth_bound=args.depth_bound,
            on_terminal=on_terminal)
    except (sched_mod.CheckerViolation,
            sched_mod.DepthBoundExceeded) as exc:
        print(f"enumeration failed: {exc}", file=sys.stderr)
        return 1
    stats.update(verdicts)
    print(json.dumps(stats, indent=2, sort_keys=True))
    return 1 if verdicts["nonlinearizable"] else 0


def cmd_verify(args):
    with open(args.dump) as fh:
        text = fh.read()
    report = verifier_mod.check_structure(text)
    print(json.dumps({
        "passed": report.passed, "n": report.n, "height": report.height,
        "census_size": report.census_size,
        "weighted_levels": list(report.weighted_levels),
        "problems": list(report.problems)}, indent=2, sort_keys=True))
    return 0 if report.passed else 1


def cmd_report(args):
    with open(args.metrics_csv) as fh:
        rows = metrics_mod.rows_from_csv(fh.read())
    if not rows:
        print(json.dumps({"runs": 0}))
        return 0
    bad = [r for r in rows if not metrics_mod.steps_invariant_ok(r)]
    mean_steps = sum(r.steps for r in rows) / len(rows)
    out = {
        "ops": len(rows),
        "mean_steps": mean_steps,
        "k_violations": len(bad),
        "c_dot_max": max(r.c_dot_op for r in rows),
    }
    print(json.dumps(out, indent=2, sort_keys=True))
    return 1 if bad else 0


def build_parser():
    ap = argparse.ArgumentParser(prog="chromatree", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, procs=False):
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--universe", type=int, default=1 << 16)
        p.add_argument("--mix", type=_parse_mix, default=(40, 40, 20))
        p.add_argument("--distribution", default="uniform",
                       choices=["uniform", "zipf", "adversarial-same-key"])
        p.add_argument("--n", type=int, default=0,
                       help="prefill size")
        p.add_argument("--legacy-restart", action="store_true")

    p = sub.add_parser("run", help="threaded or sequential campaign")
    common(p)
    p.add_argument("--mode", choices=["threads", "seq"], default="seq")
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--ops", type=int, default=1000)
    p.add_argument("--out")
    p.add_argument("--metrics-csv")
    p.add_argument("--dump")
    p.set_defaults(fn=cmd_run)

    p = sub.add_parser("simulate", help="one deterministic run")
    common(p)
    p.add_argument("--procs", type=int, default=2)
    p.add_argument("--ops", type=int, default=3)
    p.add_argument("--script", help="schedule file, one pid per line")
    p.add_argument("--check", choices=["all", "none"], default="all")
    p.add_argument("--trace", help="write the trace here")
    p.set_defaults(fn=cmd_simulate)

    p = sub.add_parser("enumerate", help="exhaustive interleavings")
    common(p)
    p.add_argument("--procs", type=int, default=2)
    p.add_argument("--ops", type=int, default=2)
    p.add_argument("--depth-bound", type=int, default=600)
    p.add_argument("--check", choices=["all", "none"], default="all")
    p.set_defaults(fn=cmd_enumerate)

    p = sub.add_parser("verify", help="check a quiescent dump")
    p.add_argument("--dump", required=True)
    p.set_defaults(fn=cmd_verify)

    p = sub.add_parser("report", help="summarize a metrics CSV")
    p.add_argument("--metrics-csv", required=True)
    p.set_defaults(fn=cmd_report)
    return ap


def main(argv=None):
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code not in (0, None) else 0
    try:
        return args.fn(args)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
