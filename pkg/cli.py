"""Command-line front end.

    python cli.py gen --model ER --nodes 20 --links 51 --monitors 10 --seed 3 --out g.txt
    python cli.py analyze g.txt [--monitor-file m.txt] [--paths p.txt] [--out nodes.csv] [--oracle-out exact.csv]
    python cli.py sweep --model ER --nodes 20 --links 51 --mu-list 2,4,6,10 --instances 200 --out s.csv
    python cli.py tightness --config tightness.json --out t.csv
    python cli.py oracle-check --instances 200 --seed 1
"""
import argparse
import logging
import sys
from typing import List, Optional, Sequence

from errors import EXIT_CHECK_FAILED, EXIT_OK, ConfigError, FlocError, exit_code_for
from experiments import (
    UP_MODE_CHOICES, ExperimentConfig, cmd_analyze, cmd_oracle_check, cmd_sweep, cmd_tightness,
)
from generators import GenSpec, Model, generate, place_monitors, resolve
from loaders import write_topology
from oracle import DEFAULT_ORACLE_BUDGET
from reporting import results_csv, summarize, write_metadata, write_results

logger = logging.getLogger("floc")

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def _int_list(text: str) -> List[int]:
    try:
        return [int(x) for x in text.replace(" ", "").split(",") if x]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma separated integers, got {text!r}") from None


def _name_list(text: str) -> List[str]:
    return [x.strip().upper() for x in text.split(",") if x.strip()]


def _add_model_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--model", action="append", help="ER, RG, BA, RPL or FILE (repeatable)")
    p.add_argument("--nodes", type=int, help="node count n")
    p.add_argument("--links", type=float, help="target expected link count (calibrated)")
    p.add_argument("--param", type=float, help="model parameter (p, d_c, n_min or alpha)")
    p.add_argument("--edges", help="edge-list file for --model FILE")
    p.add_argument("--monitor-file", help="monitor file for --model FILE")
    p.add_argument("--paths", help="measurement path file for --model FILE")


def _add_run_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON experiment config")
    _add_model_flags(p)
    p.add_argument("--mu-list", type=_int_list, help="monitor counts, e.g. 2,4,6,10")
    p.add_argument("--instances", type=int)
    p.add_argument("--kmax", type=int)
    p.add_argument("--mechanisms", type=_name_list, help="subset of CAP,CSP,UP")
    p.add_argument("--up-mode", choices=UP_MODE_CHOICES)
    p.add_argument("--seed", type=int)
    p.add_argument("--out", help="output CSV (default: stdout)")
    p.add_argument("--parallel", type=int, help="worker processes (default $FLOC_PARALLEL or 1)")
    p.add_argument("--oracle-budget", type=int, help="largest |V| for exact enumeration")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="floc", description="Failure localization identifiability analysis")
    parser.add_argument("-v", "--verbose", action="store_true")
    parser.add_argument("-q", "--quiet", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("gen", help="generate one random topology")
    _add_model_flags(p)
    p.add_argument("--monitors", type=int, help="number of monitors to place")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="edge-list output (default: stdout)")

    p = sub.add_parser("analyze", help="per-node bounds for one topology")
    p.add_argument("edge_file")
    p.add_argument("--monitor-file")
    p.add_argument("--paths")
    p.add_argument("--out", help="per-node CSV (default: stdout)")
    p.add_argument("--oracle-out", help="exact values CSV; exact sets go to <oracle-out>.sets.json")
    p.add_argument("--oracle-budget", type=int, default=DEFAULT_ORACLE_BUDGET,
                   help="largest |V| for exact enumeration")

    for name in ("sweep", "tightness"):
        _add_run_flags(sub.add_parser(name, help=f"run the {name} experiment"))

    p = sub.add_parser("oracle-check", help="cross-check bounds against the exhaustive oracle")
    _add_run_flags(p)
    p.add_argument("--n-range", type=_int_list, help="smallest,largest node count")
    p.add_argument("--inject-fault", dest="fault", help=argparse.SUPPRESS)
    return parser


def _model_specs(args) -> Optional[tuple]:
    if not args.model:
        return None
    specs = []
    for name in args.model:
        try:
            model = Model(name.upper())
        except ValueError:
            raise ConfigError(f"unknown model {name!r}") from None
        if model is Model.FILE:
            specs.append(GenSpec(model, edges_file=args.edges, monitors_file=args.monitor_file,
                                 paths_file=args.paths))
        else:
            specs.append(GenSpec(model, n=args.nodes or 20, param=args.param, target_links=args.links))
    return tuple(specs)


def _config(args) -> ExperimentConfig:
    overrides = dict(
        models=_model_specs(args),
        mu_list=tuple(args.mu_list) if args.mu_list else None,
        instances=args.instances,
        k_max=args.kmax,
        mechanisms=tuple(args.mechanisms) if args.mechanisms else None,
        up_mode=args.up_mode,
        seed=args.seed,
        out=args.out,
        parallel=args.parallel,
        oracle_budget=args.oracle_budget,
        n_range=tuple(args.n_range) if getattr(args, "n_range", None) else None,
        fault=getattr(args, "fault", None),
    )
    experiment = args.command
    if args.config:
        config = ExperimentConfig.from_json(args.config)
        if config.experiment != experiment:
            raise ConfigError(f"config is for {config.experiment!r}, not {experiment!r}")
        return config.with_overrides(**overrides)
    return ExperimentConfig(experiment, **{k: v for k, v in overrides.items() if v is not None})


def _run_gen(args) -> int:
    if not args.model or len(args.model) != 1:
        raise ConfigError("gen needs exactly one --model")
    (spec,) = _model_specs(args)
    if spec.model is Model.FILE:
        raise ConfigError("gen cannot generate FILE topologies")
    spec = resolve(spec.with_seed(args.seed))
    G = generate(spec)
    if args.monitors:
        G = place_monitors(G, args.monitors, args.seed)
    write_topology(G, args.out or sys.stdout)
    logger.info("generated %s: |V|=%d |L|=%d mu=%d", spec.label, len(G.nodes), G.num_links, G.mu)
    return EXIT_OK


def _run_analyze(args) -> int:
    frame, summary = cmd_analyze(args.edge_file, args.monitor_file, args.paths,
                                 oracle_out=args.oracle_out, oracle_budget=args.oracle_budget)
    print(" ".join(f"{k}={v}" for k, v in summary.items()), file=sys.stderr)
    if args.out:
        frame.to_csv(args.out, index=False, lineterminator="\n")
    else:
        sys.stdout.write(frame.to_csv(index=False, lineterminator="\n"))
    return EXIT_OK


def _run_experiment(args) -> int:
    config = _config(args)
    run = cmd_sweep(config) if config.experiment == "sweep" else cmd_tightness(config)
    if config.out:
        write_results(run.frame, config.out)
        write_metadata(config.out, run.meta)
        print(summarize(run.frame).to_string(index=False))
    else:
        sys.stdout.write(results_csv(run.frame))
    return EXIT_OK


def _run_oracle(args) -> int:
    report = cmd_oracle_check(_config(args))
    print(report.render())
    return EXIT_OK if report.ok else EXIT_CHECK_FAILED


COMMANDS = {
    "gen": _run_gen,
    "analyze": _run_analyze,
    "sweep": _run_experiment,
    "tightness": _run_experiment,
    "oracle-check": _run_oracle,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except ConfigError as e:
        print(f"error: {e}", file=sys.stderr)
        return exit_code_for(e)
    level = logging.DEBUG if args.verbose else logging.WARNING if args.quiet else logging.INFO
    logging.basicConfig(level=level, format=LOG_FORMAT)
    try:
        return COMMANDS[args.command](args)
    except (FlocError, OSError) as e:
        logger.error("%s", e)
        return exit_code_for(e)


if __name__ == "__main__":
    sys.exit(main())
