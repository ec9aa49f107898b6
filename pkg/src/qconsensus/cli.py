"""Command line entry point: ``qconsensus {simulate,schedule,spectral,replay}``."""
import argparse
import json
import logging
import sys

from qconsensus import network
from qconsensus.bench import CODECS, WEIGHTS, ExperimentConfig, build_weights, config_dict, run_experiment, write_table
from qconsensus.engine import expansion_check, load_archive, replay_mismatch
from qconsensus.errors import InfeasibleBits, NonPositiveLogArgument, ParameterOutOfRange
from qconsensus.schedule import (
    DEFAULT_CLAMP,
    ScheduleInputs,
    exponential_params,
    exponential_ranges,
    min_bits,
    recursive_ranges,
    stability_condition,
)

EXIT_DATA = 1
EXIT_USAGE = 2
REPLAY_TOL = 1e-8


def _positive_int(text):
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}")
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be at least 1, got {v}")
    return v


def _int_list(text):
    try:
        vals = [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")
    if not vals or any(v < 1 for v in vals):
        raise argparse.ArgumentTypeError(f"every bit budget must be at least 1, got {text!r}")
    return vals


def _choice_list(choices):
    def parse(text):
        vals = [x.strip() for x in text.split(",") if x.strip()]
        bad = [v for v in vals if v not in choices]
        if not vals or bad:
            raise argparse.ArgumentTypeError(f"invalid choice(s) {bad or text!r}; choose from {sorted(choices)}")
        return vals
    return parse


def _graph_args(p):
    p.add_argument("--nodes", type=_positive_int, default=40)
    p.add_argument("--topology", choices=["rgg", "path", "complete"], default="rgg")
    p.add_argument("--radius", type=float, default=None)
    p.add_argument("--graph", help="graph JSON file (overrides --topology)")
    p.add_argument("--weights", choices=WEIGHTS, default="metropolis")
    p.add_argument("--laplacian-a", type=float, default=None)
    p.add_argument("--seed", type=int, default=0)


def build_parser():
    parser = argparse.ArgumentParser(prog="qconsensus", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run a Monte Carlo experiment and write a table")
    sim.add_argument("--config", help="JSON config file; flags given explicitly override it")
    sim.add_argument("--nodes", type=_positive_int)
    sim.add_argument("--bits", type=_int_list)
    sim.add_argument("--trials", type=_positive_int)
    sim.add_argument("--horizon", type=_positive_int)
    sim.add_argument("--codec", type=_choice_list(CODECS))
    sim.add_argument("--weights", type=_choice_list(WEIGHTS))
    sim.add_argument("--seed", type=int)
    sim.add_argument("--radius", type=float)
    sim.add_argument("--laplacian-a", type=float)
    sim.add_argument("--clamp-delta", type=float)
    sim.add_argument("--workers", type=_positive_int)
    sim.add_argument("--out", default="-", help="output path, '-' for stdout")
    sim.add_argument("--format", choices=["csv", "json"], default="csv")

    sch = sub.add_parser("schedule", help="range schedule and bit requirements for one topology")
    _graph_args(sch)
    sch.add_argument("--bits", type=_positive_int, default=2)
    sch.add_argument("--horizon", type=_positive_int, default=20)
    sch.add_argument("--z0-inf", type=float, default=1.0)
    sch.add_argument("--s0", type=float, default=1.0)
    sch.add_argument("--source", choices=["recursive", "exponential"], default="recursive")
    sch.add_argument("--clamp-delta", type=float, default=DEFAULT_CLAMP)
    sch.add_argument("--out", help="write the S_t / beta_t table as CSV")

    spe = sub.add_parser("spectral", help="lambda2 and lambda_min of a generated or loaded graph")
    _graph_args(spe)

    rep = sub.add_parser("replay", help="re-verify a trace archive")
    rep.add_argument("archive")
    rep.add_argument("--tol", type=float, default=REPLAY_TOL)
    return parser


def _load_graph(args):
    if args.graph:
        with open(args.graph) as fh:
            return network.Graph.from_json(fh.read())
    if args.topology == "path":
        return network.path_graph(args.nodes)
    if args.topology == "complete":
        return network.complete_graph(args.nodes)
    radius = network.default_radius(args.nodes) if args.radius is None else args.radius
    g, rejected = network.connected_rgg(args.nodes, radius, args.seed)
    if rejected:
        logging.info("redrew %d disconnected graphs", rejected)
    return g


FLAG_TO_FIELD = {
    "nodes": "m", "bits": "bits", "trials": "trials", "horizon": "horizon", "codec": "codecs",
    "weights": "weights", "seed": "seed", "radius": "radius", "laplacian_a": "laplacian_a",
    "clamp_delta": "clamp_delta", "workers": "workers",
}


def _simulate(args):
    settings = {}
    if args.config:
        with open(args.config) as fh:
            settings.update(json.load(fh))
    for flag, name in FLAG_TO_FIELD.items():
        val = getattr(args, flag)
        if val is not None:
            settings[name] = val
    cfg = ExperimentConfig.from_dict(settings)
    tbl = run_experiment(cfg)
    for rec in tbl.excluded:
        print(f"excluded trial {rec['trial']} ({rec['weights']}, n={rec['n']}): "
              f"min_bits={rec['min_bits']}", file=sys.stderr)
    empty = [key for key, s in tbl.series.items() if s["count"] == 0]
    if empty:
        raise InfeasibleBits(f"no feasible trial for {empty}; raise --bits", n=empty[0][1])
    path = "/dev/stdout" if args.out == "-" else args.out
    write_table(tbl, path, args.format)
    if args.out != "-":
        print(f"wrote {len(tbl.series) * (cfg.horizon + 1)} rows to {args.out}", file=sys.stderr)
        logging.info("config: %s", json.dumps(config_dict(cfg)))
    return 0


def _schedule(args):
    g = _load_graph(args)
    w = build_weights(g, args.weights, args.laplacian_a)
    print(f"lambda2     {w.lambda2:.9f}")
    print(f"lambda_min  {w.lambda_min:.9f}")
    print(f"min_bits    {min_bits(w.lambda2, w.lambda_min)}")
    print(f"stable      {stability_condition(w.lambda2, w.lambda_min, args.bits)}")
    try:
        alpha, gamma = exponential_params(w.lambda2, w.lambda_min, args.bits, args.z0_inf)
    except NonPositiveLogArgument as exc:
        if args.source == "exponential":
            raise InfeasibleBits(str(exc), n=args.bits, min_bits=exc.min_bits) from exc
        print(f"alpha       n/a ({exc})")
        alpha = gamma = None
    else:
        print(f"alpha       {alpha:.6f}")
        print(f"gamma       {gamma:.6f}")
    if args.source == "recursive":
        inp = ScheduleInputs.from_weights(w, args.bits, args.z0_inf, args.s0, args.horizon, args.clamp_delta)
        sched = recursive_ranges(inp, args.horizon)
    else:
        sched = exponential_ranges(alpha, gamma, args.horizon, args.clamp_delta, s0=args.s0)
    print(f"{'t':>4}  {'S_t':>14}  {'beta_t':>14}")
    for t, (s, b) in enumerate(zip(sched.sizes, sched.betas)):
        print(f"{t:>4}  {s:>14.6e}  {b:>14.6f}")
    if args.out:
        sched.to_csv(args.out)
    return 0


def _spectral(args):
    g = _load_graph(args)
    w = build_weights(g, args.weights, args.laplacian_a)
    print(f"m           {g.m}")
    print(f"edges       {len(g.edges)}")
    print(f"lambda2     {w.lambda2:.12g}")
    print(f"lambda_min  {w.lambda_min:.12g}")
    return 0


def _replay(args):
    trace, w = load_archive(args.archive)
    dev = expansion_check(trace, w)
    mismatch = replay_mismatch(trace)
    print(f"expansion deviation  {dev:.3e}")
    if mismatch is not None:
        print(f"index replay error   {mismatch:.3e}")
    ok = dev < args.tol and (mismatch is None or mismatch == 0.0)
    print("OK" if ok else "MISMATCH")
    return 0 if ok else EXIT_DATA


COMMANDS = {"simulate": _simulate, "schedule": _schedule, "spectral": _spectral, "replay": _replay}


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)  # exits with 2 on bad flags
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        return COMMANDS[args.command](args)
    except ParameterOutOfRange as exc:
        print(f"qconsensus: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (InfeasibleBits, NonPositiveLogArgument) as exc:
        print(f"qconsensus: infeasible: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (OSError, ValueError, KeyError, json.JSONDecodeError) as exc:
        print(f"qconsensus: error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
