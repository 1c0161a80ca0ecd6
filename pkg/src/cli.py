"""Command-line surface: a registry of sub-commands over the certification library.

Exit codes: 0 when every requested certificate passes, 1 when one fails,
2 for schema violations, 3 when a resource cap is hit.
"""

import argparse
import dataclasses
import logging
import sys
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

from .config import get_config, set_config
from .embeddings import (
    distortion,
    dyadic_l1_tree,
    random_delta_tree,
    stegall_diamond_embedding,
    tree_to_diamond_partial_embedding,
    verify_delta_tree,
    verify_tail_separation,
)
from .errors import CertificationError, ResourceLimitError, SchemaError
from .families import DiamondFamily, LaaksoFamily
from .generators import active_pairs, diamond, laakso2
from .geodesics import (
    b_equivalence_ratio,
    c_geodesic,
    diamond_thick_witness,
    enumerate_geodesics,
    laakso_thick_witness,
    partition_of,
    refine_partition,
    thick_to_iso,
    verify_iso_witness,
    verify_thick_witness,
)
from .martingale import extract_martingale
from .oracles import create_oracle
from .reflexivity import forward_embedding_check, prefix_vector_witness
from .reports import from_distortion, from_forward_check, from_trace, from_tree, from_witness, log_summary, timed
from .selftest import CLAIMS, run_selftest
from .serialization import (
    DeltaTreeModel,
    EmbeddingModel,
    GeodesicModel,
    GraphModel,
    ReflexivityWitnessModel,
    ThickWitnessModel,
    dumps,
    embedding_to_model,
    graph_to_model,
    load_document,
    model_active_pairs,
    model_to_embedding,
    model_to_graph,
    model_to_sequence,
    model_to_thick_witness,
    model_to_tree,
    model_to_witness,
    report_document,
    sequence_to_model,
    thick_witness_document,
    trace_csv,
)
from .types import (
    ActivePairSet,
    CertificateReport,
    ExtractionMode,
    MartingaleTrace,
    MetricSpace,
    NormSpec,
    NormTag,
    PairScope,
    Partition,
    SpaceFamily,
    ThickWitness,
)

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CERTIFICATE_FAILED = 1
EXIT_SCHEMA = 2
EXIT_RESOURCE = 3


@dataclass
class CommandResult:
    """What a handler produced: the output document and the certificates behind it."""

    document: Any
    reports: List[CertificateReport] = field(default_factory=list)
    trace: Optional[MartingaleTrace] = None


Handler = Callable[[argparse.Namespace], CommandResult]
Configure = Callable[[argparse.ArgumentParser], None]


class CommandRegistry:
    """Sub-commands keyed by their (possibly two-word) name."""

    def __init__(self, prog: str):
        self.prog = prog
        self.commands: List[Dict[str, Any]] = []
        self.command_handlers: Dict[str, Handler] = {}

    def add_command(self, name: str, description: str, configure: Configure, handler: Handler) -> None:
        """Add a command to the registry."""
        self.commands.append({"name": name, "description": description, "configure": configure})
        self.command_handlers[name] = handler

    def build_parser(self) -> argparse.ArgumentParser:
        parser = argparse.ArgumentParser(
            prog=self.prog, description="Exact certificates for metric thickness and martingale extraction"
        )
        _add_global_flags(parser)
        top = parser.add_subparsers(dest="command", metavar="command")
        top.required = True
        groups: Dict[str, Any] = {}
        for command in self.commands:
            head, _, tail = command["name"].partition(" ")
            if not tail:
                sub = top.add_parser(head, help=command["description"], description=command["description"])
            else:
                if head not in groups:
                    group = top.add_parser(head, help=f"{head} sub-commands")
                    groups[head] = group.add_subparsers(dest="action", metavar="action")
                    groups[head].required = True
                sub = groups[head].add_parser(tail, help=command["description"], description=command["description"])
            command["configure"](sub)
            sub.set_defaults(command_name=command["name"])
        return parser

    def dispatch(self, args: argparse.Namespace) -> CommandResult:
        name = getattr(args, "command_name", None)
        if name not in self.command_handlers:
            raise ValueError(f"Unknown command: {name}")
        logger.info(f"Running {name}")
        return self.command_handlers[name](args)


def _add_global_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--out", help="write the output document here instead of stdout")
    parser.add_argument("--seed", type=int, help="random seed (default: RNP_SEED)")
    parser.add_argument("--cap", type=int, help="vertex cap for generated graphs")
    parser.add_argument("--tolerance", type=float, help="float comparison tolerance")
    parser.add_argument("--format", choices=("json", "csv"), default="json", dest="output_format")
    parser.add_argument("--log-level", choices=("DEBUG", "INFO", "WARNING", "ERROR"))
    parser.add_argument("--timings", action="store_true", help="record runtimes in reports")


def _fraction(text: str) -> Fraction:
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"not a rational number: {text!r}") from None


def _add_space_flags(parser: argparse.ArgumentParser, required: bool = False) -> None:
    source = parser.add_mutually_exclusive_group(required=required)
    source.add_argument("--graph", help="graph JSON document")
    source.add_argument("--family", choices=[family.value for family in SpaceFamily])
    parser.add_argument("--level", type=int, help="family level (host level for witnesses)")


def _load_space(args: argparse.Namespace) -> Tuple[MetricSpace, Optional[ActivePairSet]]:
    """Host space and its active pairs, from a graph file or a family level."""
    if args.graph:
        model = load_document(args.graph, GraphModel)
        return model_to_graph(model), model_active_pairs(model) if model.active_pairs else None
    if args.family is None:
        raise SchemaError("either --graph or --family is required", "arguments")
    if SpaceFamily(args.family) == SpaceFamily.DIAMOND:
        family = DiamondFamily(max_level=args.level)
        pairs = active_pairs(family.level(args.level)) if args.level is not None else None
        return family, pairs
    return LaaksoFamily(max_level=args.level), None


def _generated_graph(args: argparse.Namespace) -> Any:
    if args.graph:
        return model_to_graph(load_document(args.graph, GraphModel))
    if args.level is None:
        raise SchemaError("--level is required with --family", "level")
    if SpaceFamily(args.family) == SpaceFamily.DIAMOND:
        return diamond(args.level)
    return laakso2(args.level)


# generate


def _configure_generate(kind: str) -> Configure:
    def configure(parser: argparse.ArgumentParser) -> None:
        parser.add_argument("--level", type=int, required=True)
        if kind == SpaceFamily.DIAMOND.value:
            parser.add_argument(
                "--no-root-pair", action="store_true", help="leave the level-0 pair out of the active set"
            )

    return configure


def _generate(kind: str) -> Handler:
    def handler(args: argparse.Namespace) -> CommandResult:
        if kind == SpaceFamily.DIAMOND.value:
            d = diamond(args.level)
            model = graph_to_model(d)
            if args.no_root_pair:
                model.active_pairs = list(active_pairs(d, include_root=False))
        else:
            model = graph_to_model(laakso2(args.level))
        return CommandResult(model)

    return handler


# geodesics and partitions


def _configure_geodesics(parser: argparse.ArgumentParser) -> None:
    _add_space_flags(parser, required=True)
    parser.add_argument("--from", dest="source", default="u")
    parser.add_argument("--to", dest="target", default="v")
    parser.add_argument("--limit", type=int, help="maximal number of geodesics")


def _geodesics(args: argparse.Namespace) -> CommandResult:
    graph = _generated_graph(args)
    found = enumerate_geodesics(graph, args.source, args.target, args.limit)
    return CommandResult(
        {"count": len(found), "geodesics": [sequence_to_model(sequence) for sequence in found]}
    )


def _configure_partition(parser: argparse.ArgumentParser) -> None:
    _add_space_flags(parser, required=True)
    parser.add_argument("--geodesic", required=True, help="geodesic JSON document")
    parser.add_argument(
        "--extension", action="append", default=[], help="extension JSON documents, in refinement order"
    )
    parser.add_argument("--max-ratio", type=_fraction, help="largest acceptable B-equivalence ratio")


def _breakpoints(partition: Partition) -> List[Fraction]:
    return list(partition.breakpoints)


def _partition(args: argparse.Namespace) -> CommandResult:
    space, _ = _load_space(args)
    first = c_geodesic(model_to_sequence(load_document(args.geodesic, GeodesicModel), space))
    partition = partition_of(first)
    document: Dict[str, Any] = {"constant": first.constant, "partition": _breakpoints(partition)}
    if not args.extension:
        return CommandResult(document)

    previous, iterated = first, partition
    for path in args.extension:
        current = c_geodesic(model_to_sequence(load_document(path, GeodesicModel), space))
        iterated = refine_partition(iterated, previous, current)
        previous = current
    direct = partition_of(previous)
    ratio = b_equivalence_ratio(iterated, direct)
    document.update(
        {
            "iterated": _breakpoints(iterated),
            "direct": _breakpoints(direct),
            "final_constant": previous.constant,
            "b_ratio": ratio,
        }
    )
    passed = args.max_ratio is None or ratio <= args.max_ratio
    report = CertificateReport(
        "partition",
        "iterated refinement against direct partitions",
        passed,
        {"b_ratio": ratio, "max_ratio": args.max_ratio},
    )
    return CommandResult(document, [report])


# certify


def _configure_certify(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--family", choices=[family.value for family in SpaceFamily], required=True)
    parser.add_argument("--level", type=int, help="host level (default: smallest that works)")
    parser.add_argument("--u0", default="u")
    parser.add_argument("--v0", default="v")
    parser.add_argument("--witness", help="thick witness JSON document to verify instead of building one")
    parser.add_argument("--c", type=_fraction, help="width constant to certify")
    parser.add_argument("--threshold", type=_fraction, help="Laakso span threshold")


def _thick_witness(args: argparse.Namespace) -> Tuple[MetricSpace, ThickWitness, Fraction]:
    if SpaceFamily(args.family) == SpaceFamily.DIAMOND:
        family = DiamondFamily(max_level=args.level)
        if args.witness:
            witness = model_to_thick_witness(load_document(args.witness, ThickWitnessModel))
        else:
            host = args.level
            if host is None:
                host = max(family.level_of(args.u0), family.level_of(args.v0)) + 1
            witness = diamond_thick_witness(family.level(host), args.u0, args.v0)
        witness.base = (family.top, family.bottom)
        return family, witness, args.c if args.c is not None else Fraction(1)

    laakso = LaaksoFamily(max_level=args.level)
    threshold = args.threshold if args.threshold is not None else get_config().construction.laakso_threshold
    if args.witness:
        witness = model_to_thick_witness(load_document(args.witness, ThickWitnessModel))
    else:
        witness = laakso_thick_witness(laakso, args.u0, args.v0, threshold)
    witness.base = (laakso.u, laakso.v)
    return laakso, witness, args.c if args.c is not None else threshold


def _certify_thick(args: argparse.Namespace) -> CommandResult:
    space, witness, c = _thick_witness(args)
    report = verify_thick_witness(space, witness, c)
    return CommandResult(
        {"witness": thick_witness_document(witness), "c": c},
        [from_witness("thick_witness", report, pair=(witness.u0, witness.v0), c=c)],
    )


def _certify_iso(args: argparse.Namespace) -> CommandResult:
    space, witness, c = _thick_witness(args)
    iso = thick_to_iso(witness)
    report = verify_iso_witness(space, iso, c)
    return CommandResult(
        {"witness": iso, "c": c},
        [from_witness("iso_witness", report, pair=(witness.u0, witness.v0), c=c)],
    )


# embed


def _configure_stegall(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--depth", type=int, required=True)
    parser.add_argument("--system", help="separated tree system JSON (default: dyadic l1 system)")


def _embed_stegall(args: argparse.Namespace) -> CommandResult:
    if args.system:
        system = model_to_tree(load_document(args.system, DeltaTreeModel))
    else:
        system = dyadic_l1_tree(args.depth)
    separation = verify_tail_separation(system)
    embedding = stegall_diamond_embedding(system, args.depth)
    return CommandResult(
        embedding_to_model(embedding, space=f"{SpaceFamily.DIAMOND.value}:{args.depth}"),
        [from_witness("tail_separation", separation, epsilon=system.epsilon)],
    )


def _configure_from_tree(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--depth", type=int, required=True)
    source = parser.add_mutually_exclusive_group()
    source.add_argument("--tree", help="delta-tree JSON document")
    source.add_argument("--random-dimension", type=int, help="seeded random integer tree of this dimension")
    parser.add_argument("--norm", choices=[tag.value for tag in NormTag], default=NormTag.L1.value)


def _embed_from_tree(args: argparse.Namespace) -> CommandResult:
    if args.tree:
        tree = model_to_tree(load_document(args.tree, DeltaTreeModel)).tree
    elif args.random_dimension:
        tree = random_delta_tree(
            args.depth, args.random_dimension, NormSpec(NormTag(args.norm)), get_config().run.seed
        )
    else:
        tree = dyadic_l1_tree(args.depth).tree
    tree_report = from_tree("delta_tree", verify_delta_tree(tree.vectors, tree.norm))
    embedding, pairs = tree_to_diamond_partial_embedding(tree, args.depth, cap=get_config().limits.vertex_cap)
    document = embedding_to_model(embedding, space=f"{SpaceFamily.DIAMOND.value}:{args.depth}")
    return CommandResult(
        {"embedding": document, "active_pairs": list(pairs)},
        [tree_report],
    )


# distortion


def _configure_distortion(parser: argparse.ArgumentParser) -> None:
    _add_space_flags(parser, required=True)
    parser.add_argument("--embedding", required=True, help="embedding JSON document")
    parser.add_argument("--pairs", choices=[scope.value for scope in PairScope], default=PairScope.ALL.value)


def _distortion(args: argparse.Namespace) -> CommandResult:
    space, pairs = _load_space(args)
    embedding = model_to_embedding(load_document(args.embedding, EmbeddingModel))
    scope = PairScope(args.pairs)
    if scope == PairScope.ACTIVE and pairs is None:
        raise SchemaError("no active pairs known for this space; pass --family diamond --level n", "pairs")
    measured = distortion(embedding, space, pairs if scope == PairScope.ACTIVE else scope)
    certified = embedding.certified
    report = from_distortion(
        "distortion",
        measured,
        lower_at_least=certified.lower if certified is not None else None,
        upper_at_most=certified.upper if certified is not None else None,
    )
    return CommandResult(report.values, [report])


# martingale


def _configure_martingale(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--embedding", required=True, help="embedding JSON document")
    parser.add_argument("--space", help="graph JSON document of the embedded space")
    parser.add_argument("--oracle", choices=[family.value for family in SpaceFamily], required=True)
    parser.add_argument("--steps", type=int, required=True)
    parser.add_argument(
        "--mode", choices=[mode.value for mode in ExtractionMode], default=ExtractionMode.GEODESIC.value
    )
    parser.add_argument("--max-level", type=int, help="deepest family level the oracle may use")
    parser.add_argument("--threshold", type=_fraction, help="Laakso span threshold")


def _martingale(args: argparse.Namespace) -> CommandResult:
    document = load_document(args.embedding, EmbeddingModel)
    embedding = model_to_embedding(document)
    if document.space is not None and document.space.split(":")[0] != args.oracle:
        raise SchemaError(f"embedding of {document.space} does not live on the {args.oracle} family", "space")
    max_level = args.max_level
    if args.space:
        space = load_document(args.space, GraphModel)
        if space.family is None or space.family.value != args.oracle:
            raise SchemaError(f"space is not a {args.oracle} graph", "family")
        outside = sorted(set(embedding.points) - set(space.vertices))
        if outside:
            raise SchemaError(f"embedding has points outside the space: {outside[:5]}", "points")
        if max_level is None:
            max_level = space.level
    oracle = create_oracle(args.oracle, max_level, args.threshold, get_config().limits.vertex_cap)
    trace = extract_martingale(embedding, oracle, args.steps, ExtractionMode(args.mode))
    report = from_trace("martingale_extraction", trace)
    summary = {
        "mode": trace.mode,
        "steps": [
            {
                "index": step.index,
                "points": len(step.sequence),
                "l1_from_previous": step.l1_from_previous,
                "bound": step.bound,
            }
            for step in trace.steps
        ],
        "flags": trace.flags,
    }
    return CommandResult(summary, [report], trace)


# reflexivity


def _configure_reflexivity(parser: argparse.ArgumentParser) -> None:
    source = parser.add_mutually_exclusive_group(required=True)
    source.add_argument("--witness", help="reflexivity witness JSON document")
    source.add_argument("--prefix", type=int, help="prefix-vector witness of this dimension")
    parser.add_argument("--delta", type=_fraction, help="active-pair constant")
    parser.add_argument("--samples", type=int, help="number of sampled active pairs")
    parser.add_argument("--basic-constant", type=_fraction, help="override the estimated basic constant")


def _reflexivity(args: argparse.Namespace) -> CommandResult:
    if args.witness:
        witness = model_to_witness(load_document(args.witness, ReflexivityWitnessModel))
    else:
        witness = prefix_vector_witness(args.prefix)
    if args.basic_constant is not None:
        witness = dataclasses.replace(witness, basic_constant=args.basic_constant)
    report = from_forward_check(
        "forward_embedding", forward_embedding_check(witness, args.delta, samples=args.samples)
    )
    return CommandResult(report.values, [report])


# selftest


def _configure_selftest(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--quick", action="store_true", help="small scale for fast reruns")
    parser.add_argument(
        "--claim",
        action="append",
        choices=list(CLAIMS) + ["determinism"],
        dest="claims",
        help="run only these claims (repeatable)",
    )


def _selftest(args: argparse.Namespace) -> CommandResult:
    reports = run_selftest(quick=args.quick, claims=args.claims)
    return CommandResult({"quick": args.quick}, reports)


def build_registry() -> CommandRegistry:
    registry = CommandRegistry("rnp-certify")
    for kind in SpaceFamily:
        registry.add_command(
            f"generate {kind.value}",
            f"Generate the {kind.value} graph of a given level",
            _configure_generate(kind.value),
            _generate(kind.value),
        )
    registry.add_command("geodesics", "Enumerate vertex geodesics", _configure_geodesics, _geodesics)
    registry.add_command(
        "partition", "Partition of a C-geodesic and its iterated refinements", _configure_partition, _partition
    )
    registry.add_command("certify thick", "Build or verify a thick witness", _configure_certify, _certify_thick)
    registry.add_command("certify iso", "Verify the iso form of a thick witness", _configure_certify, _certify_iso)
    registry.add_command(
        "embed stegall", "Embed a diamond through a separated tree system", _configure_stegall, _embed_stegall
    )
    registry.add_command(
        "embed from-tree", "Partially bilipschitz diamond embedding from a delta-tree", _configure_from_tree, _embed_from_tree
    )
    registry.add_command("distortion", "Bilipschitz constants of an embedding", _configure_distortion, _distortion)
    registry.add_command(
        "martingale extract", "Extract a step martingale from an embedding", _configure_martingale, _martingale
    )
    registry.add_command(
        "reflexivity check", "Check the partially bilipschitz image of l1", _configure_reflexivity, _reflexivity
    )
    registry.add_command("selftest", "Run the acceptance claims", _configure_selftest, _selftest)
    return registry


def _apply_overrides(args: argparse.Namespace) -> None:
    settings = get_config()
    numeric = dataclasses.replace(
        settings.numeric, tolerance=settings.numeric.tolerance if args.tolerance is None else args.tolerance
    )
    limits = dataclasses.replace(
        settings.limits, vertex_cap=settings.limits.vertex_cap if args.cap is None else args.cap
    )
    run_settings = dataclasses.replace(
        settings.run,
        seed=settings.run.seed if args.seed is None else args.seed,
        log_level=args.log_level or settings.run.log_level,
        include_timings=settings.run.include_timings or args.timings,
    )
    set_config(dataclasses.replace(settings, numeric=numeric, limits=limits, run=run_settings))
    logging.getLogger().setLevel(run_settings.log_level)


def _emit(text: str, out: Optional[str]) -> None:
    if out:
        Path(out).write_text(text, encoding="utf-8")
        logger.info(f"Wrote {out}")
    else:
        sys.stdout.write(text)


def _write(result: CommandResult, args: argparse.Namespace) -> None:
    settings = get_config()
    if args.output_format == "csv":
        if result.trace is None:
            raise SchemaError("CSV output is only available for martingale traces", "format")
        _emit(trace_csv(result.trace), args.out)
        return
    document: Dict[str, Any] = {"command": args.command_name, "seed": settings.run.seed, "result": result.document}
    if result.reports:
        document["certificates"] = report_document(result.reports, settings.run.include_timings)
    _emit(dumps(document), args.out)


def run(argv: Optional[Sequence[str]] = None) -> int:
    """Parse arguments, run one command and map the outcome onto an exit code."""
    registry = build_registry()
    parser = registry.build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as error:
        return int(error.code or 0)

    previous = get_config()
    try:
        _apply_overrides(args)
        reports: List[CertificateReport] = []
        with timed(reports):
            result = registry.dispatch(args)
            reports.extend(result.reports)
        _write(result, args)
    except SchemaError as error:
        logger.error(f"Schema violation: {error}")
        return EXIT_SCHEMA
    except ResourceLimitError as error:
        logger.error(f"Resource limit: {error}")
        return EXIT_RESOURCE
    except CertificationError as error:
        logger.error(f"Error running {getattr(args, 'command_name', 'command')}: {error}")
        return EXIT_CERTIFICATE_FAILED
    except ValueError as error:
        logger.error(f"Invalid input: {error}")
        return EXIT_SCHEMA
    finally:
        set_config(previous)

    if reports:
        log_summary(reports)
    return EXIT_OK if all(report.passed for report in reports) else EXIT_CERTIFICATE_FAILED
