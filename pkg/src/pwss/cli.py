"""QoS-aware service selection: generate instances, solve them, check against brute force and benchmark."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import io
from .ga import ALGORITHMS, MaxEvaluations, Stagnation, config_for, run
from .model import TP, InvalidInstanceError, require_valid
from .oracle import DEFAULT_LIMIT, SearchSpaceTooLarge, exhaustive_best
from .workbench import generator, qws, suites

EXIT_ERROR = 1
EXIT_REFUSED = 3

EPILOG = """\
environment:
  PWSS_QWS_PATH   default QWS data file for `gen` and `bench` (synthetic QoS when unset)
  PWSS_NUMBA      set to 0 to use the pure-numpy evaluation kernels
"""


def _tc_list(text: str) -> frozenset:
    if not text:
        return frozenset()
    try:
        return frozenset(TP(t.strip()) for t in text.split(",") if t.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"transactional constraints must be among p,c,r,cr: {text!r}")


def _write(text: str, out) -> None:
    if out in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


def cmd_gen(args) -> int:
    spec = generator.GeneratorSpec(
        n_tasks=args.tasks, m_per_task=args.candidates, num_qc=args.qc, num_ic=args.ic,
        tc=args.tc, qws_path=args.qws or generator.default_qws_path(), seed=args.seed)
    instance = generator.generate_instance(spec)
    _write(io.dumps_instance(instance) + "\n", args.output)
    return 0


def cmd_solve(args) -> int:
    instance = io.load_instance(args.instance)
    require_valid(instance)
    term = MaxEvaluations(args.budget) if args.budget else Stagnation(args.stagnation)
    cfg = config_for(args.algo, termination=term, seed=args.seed, population_size=args.pop,
                     crossover_rate=args.pc, mutation_rate=args.pm)
    result = run(instance, cfg)
    doc = io.solution_to_dict(instance, result)
    doc["algorithm"] = args.algo
    _write(json.dumps(doc, indent=2) + "\n", args.output)
    return 0


def cmd_oracle(args) -> int:
    instance = io.load_instance(args.instance)
    try:
        res = exhaustive_best(instance, limit=args.limit, workers=args.workers)
    except SearchSpaceTooLarge as exc:
        print(f"pwss oracle: refused: {exc}", file=sys.stderr)
        return EXIT_REFUSED

    def ind(x):
        if x is None:
            return None
        return {"genes": list(x.genes), "fitness": x.fitness, "utility": x.utility,
                "feasible": x.feasible,
                "violations": {"C": x.qc_violations, "V": x.ic_violations, "T": x.tc_violated}}

    doc = {"search_space": res.search_space, "best_fitness": res.best_fitness,
           "best": ind(res.best), "best_feasible": ind(res.best_feasible)}
    _write(json.dumps(doc, indent=2) + "\n", args.output)
    return 0


def cmd_bench(args) -> int:
    names = list(suites.FULL_SUITES) if args.suite == "all" else [args.suite]
    qws_path = args.qws or generator.default_qws_path()
    collected = []

    def progress(res):
        a, b = res.mean("gap2wss"), res.mean("pga")
        print(f"[{res.suite}] {res.param_name}={res.param_value} budget={res.budget} "
              f"gap2wss={a:.4f} pga={b:.4f}", file=sys.stderr)

    for name in names:
        results = suites.run_suite(name, runs=args.runs, scale=args.scale, n_tasks=args.tasks,
                                   m_per_task=args.candidates, qws_path=qws_path, seed=args.seed,
                                   workers=args.workers, progress=progress)
        collected.extend(results)
        ref = suites.REFERENCE[name]
        print(f"[{name}] mean improvement {suites.improvement(results):+.2f}% "
              f"(reference {ref[2]:+.2f}%: {ref[0]:.4f} vs {ref[1]:.4f})", file=sys.stderr)
    if len(names) > 1:
        ref = suites.REFERENCE["all"]
        print(f"[all] mean improvement {suites.improvement(collected):+.2f}% "
              f"(reference {ref[2]:+.2f}%)", file=sys.stderr)

    if args.output in (None, "-"):
        suites.write_csv(collected, sys.stdout)
    else:
        with open(args.output, "w", newline="") as fh:
            suites.write_csv(collected, fh)
    return 0


def cmd_ingest(args) -> int:
    data = qws.ingest_qws(args.csv)
    if data.skipped:
        print(f"pwss ingest-qws: skipped {data.skipped} malformed rows", file=sys.stderr)
    _write(json.dumps(qws.pool_document(data), indent=1) + "\n", args.output)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="pwss", description=__doc__, epilog=EPILOG,
                                formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="generate a problem instance")
    g.add_argument("--tasks", type=int, default=10, help="number of tasks (multiple of 10)")
    g.add_argument("--candidates", type=int, default=100, help="candidates per task")
    g.add_argument("--qc", type=int, default=0, help="number of global QoS constraints")
    g.add_argument("--ic", type=int, default=0, help="number of interservice constraints")
    g.add_argument("--tc", type=_tc_list, default=frozenset(), help="comma list from p,c,r,cr")
    g.add_argument("--qws", help="QWS data file (default: $PWSS_QWS_PATH, else synthetic)")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("-o", "--output")
    g.set_defaults(func=cmd_gen)

    s = sub.add_parser("solve", help="solve an instance with the GA")
    s.add_argument("instance")
    s.add_argument("--algo", choices=sorted(ALGORITHMS), default="gap2wss")
    s.add_argument("--seed", type=int, default=0)
    stop = s.add_mutually_exclusive_group()
    stop.add_argument("--budget", type=int, help="maximum fitness evaluations")
    stop.add_argument("--stagnation", type=int, default=15,
                      help="stop after this many iterations without improvement (default 15)")
    s.add_argument("--pop", type=int, default=100)
    s.add_argument("--pc", type=float, default=0.90)
    s.add_argument("--pm", type=float, default=0.15)
    s.add_argument("-o", "--output")
    s.set_defaults(func=cmd_solve)

    o = sub.add_parser("oracle", help="exhaustively find the best assignment")
    o.add_argument("instance")
    o.add_argument("--limit", type=int, default=DEFAULT_LIMIT)
    o.add_argument("--workers", type=int, default=1)
    o.add_argument("-o", "--output")
    o.set_defaults(func=cmd_oracle)

    b = sub.add_parser("bench", help="run an experiment suite and emit CSV")
    b.add_argument("--suite", choices=[*suites.FULL_SUITES, "all"], default="tasks")
    b.add_argument("--runs", type=int, help="runs per algorithm and problem (default by scale)")
    b.add_argument("--scale", choices=sorted(suites.SCALES), default="desk")
    b.add_argument("--tasks", type=int, help="override the fixed number of tasks")
    b.add_argument("--candidates", type=int, help="override the fixed candidates per task")
    b.add_argument("--qws")
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("--workers", type=int, default=1)
    b.add_argument("-o", "--output")
    b.set_defaults(func=cmd_bench)

    q = sub.add_parser("ingest-qws", help="normalise a QWS file into a pool document")
    q.add_argument("csv")
    q.add_argument("-o", "--output")
    q.set_defaults(func=cmd_ingest)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except InvalidInstanceError as exc:
        print(f"pwss {args.command}: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except (OSError, ValueError) as exc:
        print(f"pwss {args.command}: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
