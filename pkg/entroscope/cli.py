"""
entroscope command line

Every command prints one RunReport as JSON on stdout. Exit status is 0 when
everything passed, 1 when a verification failed and 2 on bad input (with a
one-line JSON error object instead of a report). Logging goes to stderr.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from collections.abc import Sequence
from typing import Any

import numpy as np
from pydantic import BaseModel, ValidationError

from entroscope import (
    __version__,
    closed_forms,
    constants,
    decay,
    permanent,
    probes,
    reduction,
)
from entroscope.config import settings
from entroscope.errors import EntroscopeError
from entroscope.functionals import DensityFunction
from entroscope.optimize import OptimizerOptions
from entroscope.state_spaces import (
    MeanFieldWeights,
    SpaceKind,
    StateSpace,
    build_space,
)
from entroscope.utils.io import (
    dumps,
    load_graph,
    load_hypergraph,
    load_matrix,
    load_mean_field,
)
from entroscope.utils.typing import RunReport

logger = logging.getLogger(__name__)

VERIFY_NAMES = [
    "gap-kn",
    "gap-mf-perm",
    "kappa-bl",
    "kappa-kn",
    "kappa-mf-perm",
    "kappa-mf-single",
    "lsi-kn",
]


class InputError(Exception):
    """Bad command-line usage."""


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> Any:  # type: ignore[override]
        raise InputError(message)


# =============================================================================
# Argument helpers
# =============================================================================


def parse_space(text: str | None, n: int) -> StateSpace | None:
    """single | product:N | perm | slice:R."""
    if text is None:
        return None
    kind, _, value = text.partition(":")
    if kind == "single":
        return build_space(SpaceKind.SINGLE, n)
    if kind == "perm":
        return build_space(SpaceKind.PERMUTATIONS, n)
    if kind in ("product", "slice") and value.isdigit():
        if kind == "product":
            return build_space(SpaceKind.PRODUCT, n, particles=int(value))
        return build_space(SpaceKind.SLICE, n, r=int(value))
    raise InputError(f"unknown space {text!r}; use single, product:N, perm or slice:R")


def parse_floats(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError as e:
        raise InputError(f"expected a comma list of numbers, got {text!r}") from e


def parse_ints(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError as e:
        raise InputError(f"expected a comma list of integers, got {text!r}") from e


def options_from(args: argparse.Namespace) -> OptimizerOptions:
    return OptimizerOptions(
        tol=args.tol if args.tol is not None else settings.tol,
        restarts=args.restarts if args.restarts is not None else settings.restarts,
        seed=args.seed if args.seed is not None else settings.seed,
        threads=args.threads,
    )


def weights_from(args: argparse.Namespace) -> constants.Weights:
    if getattr(args, "graph", None):
        return load_graph(args.graph)
    if getattr(args, "hypergraph", None):
        return load_hypergraph(args.hypergraph)
    if getattr(args, "mean_field", None):
        if args.n is None:
            raise InputError("--mean-field needs --n")
        return MeanFieldWeights.parse(args.n, args.mean_field)
    if getattr(args, "mean_field_file", None):
        return load_mean_field(args.mean_field_file)
    raise InputError(
        "give one of --graph, --hypergraph, --mean-field or --mean-field-file"
    )


def _add_optimizer_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--tol", type=float, default=None, help="Dinkelbach tolerance")
    parser.add_argument("--restarts", type=int, default=None, help="Multistart count")
    parser.add_argument("--seed", type=int, default=None, help="Random seed")
    parser.add_argument("--threads", type=int, default=None, help="Worker cap")


def _add_weight_flags(parser: argparse.ArgumentParser) -> None:
    source = parser.add_mutually_exclusive_group()
    source.add_argument("--graph", help="Graph JSON file")
    source.add_argument("--hypergraph", help="Hypergraph JSON file")
    source.add_argument("--mean-field", help='Mean-field weights, e.g. "2:1.0,3:0.5"')
    source.add_argument("--mean-field-file", help="Mean-field JSON file")
    parser.add_argument("--n", type=int, default=None, help="Vertices (mean-field)")


# =============================================================================
# Commands
# =============================================================================


def cmd_constant(args: argparse.Namespace) -> list[BaseModel]:
    weights = weights_from(args)
    space = parse_space(args.space, weights.n)
    return [constants.compute_constant(args.command, weights, space, options_from(args))]


def cmd_verify(args: argparse.Namespace) -> list[BaseModel]:
    w = MeanFieldWeights.parse(args.n, args.w) if args.w else None
    return [
        constants.verify(
            args.name, args.n, ell=args.ell, r=args.r, w=w, options=options_from(args)
        )
    ]


def cmd_tensorize(args: argparse.Namespace) -> list[BaseModel]:
    h = load_hypergraph(args.hypergraph)
    return [
        constants.verify_tensorization(
            h, args.max_n, options_from(args), with_kappa=not args.no_kappa
        )
    ]


def cmd_conjecture(args: argparse.Namespace) -> list[BaseModel]:
    options = options_from(args)
    if args.probe == "gap":
        weights = weights_from(args)
        return [constants.conjecture_probe_gap(constants.as_hypergraph(weights))]
    if args.probe == "octopus":
        if args.node is None:
            raise InputError("octopus needs --node")
        if not args.graph:
            raise InputError("octopus needs --graph")
        g = load_graph(args.graph)
        restarts = args.restarts
        if restarts is None:
            restarts = reduction.OCTOPUS_RESTARTS
        options = OptimizerOptions(
            tol=options.tol, restarts=restarts, seed=options.seed, threads=args.threads
        )
        return [
            reduction.octopus_probe(
                g, args.node, args.mode, samples=args.samples, options=options
            )
        ]
    if args.probe == "cycle-path":
        return [constants.family_probe(sizes=parse_ints(args.sizes), options=options)]
    if args.probe == "multislice":
        if args.colors is None:
            raise InputError("multislice needs --colors")
        colors = parse_ints(args.colors)
        return [constants.multislice_probe(sum(colors), colors)]
    if args.probe == "strict-gap":
        return [constants.strict_gap_check(args.n_max)]
    raise InputError(f"unknown probe {args.probe!r}")


def cmd_reduce(args: argparse.Namespace) -> list[BaseModel]:
    g = load_graph(args.graph)
    if args.report:
        return [reduction.monotonicity_report(g, args.node, options_from(args))]
    return [reduction.reduce(g, args.node).to_report()]


def cmd_permanent(args: argparse.Namespace) -> list[BaseModel]:
    results: list[BaseModel] = []
    n = args.n
    if args.matrix:
        matrix = load_matrix(args.matrix)
        n = matrix.shape[0]
        if args.p == "critical":
            p = closed_forms.p_critical(n)
        else:
            values = parse_floats(args.p)
            if len(values) != 1:
                raise InputError(f"--p takes one number or 'critical', got {args.p!r}")
            p = values[0]
        results.append(permanent.bound_check(matrix, p))
    if args.fuzz:
        if n is None:
            raise InputError("--fuzz needs --matrix or --n")
        seed = args.seed if args.seed is not None else settings.seed
        results.append(permanent.fuzz(n, args.fuzz, seed=seed, threads=args.threads))
    if not results:
        raise InputError("give --matrix and/or --fuzz")
    return results


def cmd_decay(args: argparse.Namespace) -> list[BaseModel]:
    weights = weights_from(args)
    space = parse_space(args.space, weights.n)
    generator = constants.generator_for(weights, space)
    options = options_from(args)
    if args.kappa == "auto":
        kappa = constants.compute_constant("kappa", weights, space, options).value
    else:
        kappa = float(args.kappa)
    size = generator.space.size
    if args.start == "dirac":
        f0 = DensityFunction.dirac(generator.space, 0).normalized()
    else:
        rng = np.random.default_rng(options.seed)
        f0 = DensityFunction(space=generator.space, values=rng.exponential(size=size))
        f0 = f0.normalized()
    times = decay.time_grid(generator, steps=args.steps, t0=args.t0)
    curve = decay.evolve(generator, f0, times, rate_bound=kappa, threads=args.threads)
    results: list[BaseModel] = [decay.check_envelope(curve, kappa)]
    if args.mixing:
        kind = "perm" if generator.space.kind is SpaceKind.PERMUTATIONS else "synchronous"
        results.append(
            decay.pinsker_mixing_bound(
                kappa,
                kind,
                weights.n,
                particles=generator.space.particles,
                constant=args.constant,
                generator=generator,
            )
        )
    return results


def cmd_report(args: argparse.Namespace) -> list[BaseModel]:
    return [constants.regression_sweep(args.n_max, options_from(args))]


def cmd_probes(args: argparse.Namespace) -> list[BaseModel]:
    seed = args.seed if args.seed is not None else settings.seed
    return list(probes.run_all(samples=args.samples, seed=seed, n_max=args.n_max))


def _passed(result: BaseModel) -> bool:
    for field in ("passed", "holds"):
        value = getattr(result, field, None)
        if isinstance(value, bool):
            return value
    return True


# =============================================================================
# Parser
# =============================================================================


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="entroscope", description=__doc__)
    parser.add_argument("--log-level", default=None, help="DEBUG, INFO, WARNING, ...")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    for quantity in ("gap", "kappa", "lsi", "mlsi"):
        p = sub.add_parser(quantity, help=f"Compute {quantity}")
        _add_weight_flags(p)
        p.add_argument("--space", default=None, help="single|product:N|perm|slice:R")
        _add_optimizer_flags(p)
        p.set_defaults(func=cmd_constant)

    p = sub.add_parser("verify", help="Check a closed form")
    p.add_argument("name", choices=VERIFY_NAMES)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--ell", type=int, default=None)
    p.add_argument("--r", type=int, default=None)
    p.add_argument("--w", default=None, help='Mean-field weights, e.g. "2:1.0"')
    _add_optimizer_flags(p)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("tensorize", help="N synchronous particles against one")
    p.add_argument("--hypergraph", required=True)
    p.add_argument("--max-N", dest="max_n", type=int, required=True)
    p.add_argument("--no-kappa", action="store_true", help="Gaps only")
    _add_optimizer_flags(p)
    p.set_defaults(func=cmd_tensorize)

    p = sub.add_parser("conjecture", help="Probes for the open statements")
    p.add_argument(
        "probe", choices=["gap", "octopus", "cycle-path", "multislice", "strict-gap"]
    )
    _add_weight_flags(p)
    p.add_argument("--node", type=int, default=None)
    p.add_argument("--mode", choices=["variance", "entropy"], default="variance")
    p.add_argument("--samples", type=int, default=1000)
    p.add_argument("--sizes", default="4,5,6")
    p.add_argument("--colors", default=None, help="Color counts, e.g. 2,1,1")
    p.add_argument("--n-max", type=int, default=5)
    _add_optimizer_flags(p)
    p.set_defaults(func=cmd_conjecture)

    p = sub.add_parser("reduce", help="Electric network reduction at a node")
    p.add_argument("--graph", required=True)
    p.add_argument("--node", type=int, required=True)
    p.add_argument("--report", action="store_true", help="Constants before and after")
    _add_optimizer_flags(p)
    p.set_defaults(func=cmd_reduce)

    p = sub.add_parser("permanent", help="Permanent against the row-norm bound")
    p.add_argument("--matrix", default=None, help="CSV or JSON matrix")
    p.add_argument("--p", default="critical", help="Exponent or 'critical'")
    p.add_argument("--fuzz", type=int, default=0, help="Random matrices to check")
    p.add_argument("--n", type=int, default=None, help="Fuzz size without --matrix")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--threads", type=int, default=None)
    p.set_defaults(func=cmd_permanent)

    p = sub.add_parser("decay", help="Entropy decay along the semigroup")
    _add_weight_flags(p)
    p.add_argument("--space", default="perm")
    p.add_argument("--kappa", default="auto", help="Rate or 'auto'")
    p.add_argument("--t0", type=float, default=None)
    p.add_argument("--steps", type=int, default=decay.DEFAULT_STEPS)
    p.add_argument("--start", choices=["dirac", "random"], default="dirac")
    p.add_argument("--mixing", action="store_true", help="Add the mixing-time bound")
    p.add_argument("--constant", type=float, default=1.0, help="Mixing bound constant C")
    _add_optimizer_flags(p)
    p.set_defaults(func=cmd_decay)

    p = sub.add_parser("report", help="Regression sweeps")
    p.add_argument("which", choices=["all", "probes"])
    p.add_argument("--n-max", type=int, default=6)
    p.add_argument("--samples", type=int, default=10_000)
    _add_optimizer_flags(p)
    p.set_defaults(func=cmd_report)

    sub.add_parser("schema", help="Print the JSON schema of the run report")
    return parser


# =============================================================================
# Entry point
# =============================================================================


def _inputs(args: argparse.Namespace) -> dict[str, Any]:
    return {
        k: v
        for k, v in sorted(vars(args).items())
        if not callable(v) and k not in ("log_level", "threads")
    }


def _error(kind: str, message: str) -> int:
    print(json.dumps({"error": kind, "message": " ".join(message.split())}))
    return 2


def main(argv: Sequence[str] | None = None) -> int:
    # Step 1: Parse arguments
    try:
        args = build_parser().parse_args(argv)
    except InputError as e:
        return _error("usage", str(e))

    # Step 2: Configure logging on stderr
    logging.basicConfig(
        level=(args.log_level or settings.log_level).upper(),
        stream=sys.stderr,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )

    if args.command == "schema":
        print(json.dumps(RunReport.model_json_schema(), indent=2, sort_keys=True))
        return 0
    if args.command == "report" and args.which == "probes":
        args.func = cmd_probes

    # Step 3: Run the command
    start = time.perf_counter()
    try:
        results = args.func(args)
    except InputError as e:
        return _error("usage", str(e))
    except ValidationError as e:
        return _error("validation", str(e))
    except EntroscopeError as e:
        return _error(type(e).__name__, str(e))
    except OSError as e:
        return _error("io", str(e))

    # Step 4: Emit the report
    passed = all(_passed(result) for result in results)
    report = RunReport(
        command=args.command,
        inputs=_inputs(args),
        results=results,  # type: ignore[arg-type]
        passed=passed,
        wall_time_ms=(time.perf_counter() - start) * 1000.0,
        tool_version=__version__,
        seed=args.seed if getattr(args, "seed", None) is not None else settings.seed,
    )
    print(dumps(report))
    if not passed:
        logger.warning(f"{args.command}: verification failed")
    return 0 if passed else 1


if __name__ == "__main__":
    sys.exit(main())
