"""JSON schemas and codecs for graphs, geodesics, embeddings, trees, witnesses and reports.

Rationals travel as ``{"num": N, "den": D}``; readers also accept ``"N/D"``
strings and integers. Floats are only accepted where float embeddings are
allowed. Every parse failure surfaces as a :class:`SchemaError`.
"""

import csv
import dataclasses
import io
import json
import logging
from enum import Enum
from fractions import Fraction
from pathlib import Path
from typing import IO, Any, Dict, List, Optional, Tuple, Type, TypeVar, Union

import numpy as np
from pydantic import BaseModel, BeforeValidator, ConfigDict, Field, PlainSerializer, ValidationError
from typing_extensions import Annotated

from .core import MetricGraph
from .errors import InvalidPointError, SchemaError
from .generators import DiamondGraph, GeneratedGraph, LaaksoGraph, active_pairs
from .types import (
    ActivePairSet,
    CertificateReport,
    Certification,
    DeltaTree,
    Edge,
    Embedding,
    GraphPoint,
    MartingaleTrace,
    NormSpec,
    NormTag,
    PairScope,
    Pasting,
    Point,
    PointSequence,
    Quadrilateral,
    ReflexivityWitness,
    SeparatedTreeSystem,
    SpaceFamily,
    ThickWitness,
)

logger = logging.getLogger(__name__)

ModelT = TypeVar("ModelT", bound=BaseModel)


def _to_fraction(value: Any) -> Fraction:
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise ValueError("booleans are not rationals")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        try:
            return Fraction(value.strip())
        except (ValueError, ZeroDivisionError):
            raise ValueError(f"not a rational: {value!r}") from None
    if isinstance(value, dict) and set(value) <= {"num", "den"} and "num" in value:
        num, den = value["num"], value.get("den", 1)
        if not isinstance(num, int) or not isinstance(den, int) or isinstance(num, bool):
            raise ValueError("num and den must be integers")
        if den == 0:
            raise ValueError("den must be nonzero")
        return Fraction(num, den)
    raise ValueError(f"expected a rational, got {type(value).__name__}")


def _to_number(value: Any) -> Union[Fraction, float]:
    if isinstance(value, float):
        return value
    return _to_fraction(value)


def dump_rational(value: Fraction) -> Dict[str, int]:
    return {"num": value.numerator, "den": value.denominator}


def _dump_number(value: Union[Fraction, float]) -> Any:
    return dump_rational(value) if isinstance(value, Fraction) else value


Rational = Annotated[Fraction, BeforeValidator(_to_fraction), PlainSerializer(dump_rational)]
Number = Annotated[
    Union[Fraction, float], BeforeValidator(_to_number), PlainSerializer(_dump_number)
]


class _Model(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True, extra="forbid", populate_by_name=True)


class GraphPointModel(_Model):
    edge: int = Field(ge=0)
    offset: Rational


PointRef = Union[str, GraphPointModel]


class EdgeModel(_Model):
    u: str
    v: str
    length: Rational = Field(alias="len")
    name: str = ""


class QuadrilateralModel(_Model):
    top: str
    a: str
    bottom: str
    b: str
    level: int
    address: str


class PastingModel(_Model):
    level: int
    identified: List[str]
    copy_bits: Dict[str, int] = {}


class GraphModel(_Model):
    family: Optional[SpaceFamily] = None
    level: Optional[int] = None
    vertices: List[str]
    edges: List[EdgeModel]
    quadrilaterals: List[QuadrilateralModel] = []
    pastings: List[PastingModel] = []
    active_pairs: List[Tuple[str, str]] = []


class GeodesicModel(_Model):
    points: List[PointRef] = Field(min_length=2)
    constant: Rational = Fraction(1)
    route: Optional[List[int]] = None


class CertifiedModel(_Model):
    lower: Number
    upper: Number
    pairs: PairScope = PairScope.ALL


class EmbeddingModel(_Model):
    space: Optional[str] = None
    norm: NormTag
    weights: Optional[List[Rational]] = None
    points: Dict[str, List[Number]]
    certified: Optional[CertifiedModel] = None
    metadata: Dict[str, Any] = {}


class DeltaTreeModel(_Model):
    norm: NormTag
    weights: Optional[List[Rational]] = None
    vectors: List[List[Rational]] = Field(min_length=1)
    delta: Optional[Rational] = None
    functionals: Dict[int, List[Rational]] = {}
    odd_functionals: Dict[int, List[Rational]] = {}
    epsilon: Rational = Fraction(0)


class ThickWitnessModel(_Model):
    u0: str
    v0: str
    w: List[str] = Field(min_length=2)
    z: List[str]
    z_tilde: List[str]
    level: Optional[int] = None
    width_constant: Optional[Rational] = None


class ReflexivityWitnessModel(_Model):
    vectors: List[List[Rational]] = Field(min_length=1)
    functional: List[Rational]
    theta: Rational
    norm: NormTag
    weights: Optional[List[Rational]] = None
    basic_constant: Optional[Rational] = None


def to_jsonable(value: Any) -> Any:
    """Plain JSON structure with rationals as num/den objects."""
    if isinstance(value, Fraction):
        return dump_rational(value)
    if isinstance(value, bool) or value is None or isinstance(value, (str, int)):
        return value
    if isinstance(value, float):
        return value
    if isinstance(value, Enum):
        return value.value
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return float(value)
    if isinstance(value, GraphPoint):
        return {"edge": value.edge, "offset": dump_rational(value.offset)}
    if isinstance(value, BaseModel):
        return value.model_dump(mode="json", by_alias=True)
    if dataclasses.is_dataclass(value) and not isinstance(value, type):
        return {
            field.name: to_jsonable(getattr(value, field.name))
            for field in dataclasses.fields(value)
            if field.name != "space"
        }
    if isinstance(value, dict):
        return {str(key): to_jsonable(item) for key, item in value.items()}
    if isinstance(value, (list, tuple, set, frozenset)):
        items = [to_jsonable(item) for item in value]
        return sorted(items, key=json.dumps) if isinstance(value, (set, frozenset)) else items
    raise TypeError(f"Cannot serialize {type(value).__name__}")


def _point(ref: PointRef) -> Point:
    if isinstance(ref, GraphPointModel):
        return GraphPoint(ref.edge, ref.offset)
    return ref


def _norm_spec(tag: NormTag, weights: Optional[List[Fraction]]) -> NormSpec:
    return NormSpec(tag, tuple(weights) if weights is not None else None)


def graph_to_model(graph: Union[GeneratedGraph, MetricGraph]) -> GraphModel:
    metric = graph if isinstance(graph, MetricGraph) else graph.graph
    edges = [EdgeModel(u=e.u, v=e.v, length=e.length, name=e.name) for e in metric.edges]
    model = GraphModel(vertices=list(metric.vertices), edges=edges)
    if isinstance(graph, DiamondGraph):
        model.family = SpaceFamily.DIAMOND
        model.level = graph.level
        model.quadrilaterals = [QuadrilateralModel(**dataclasses.asdict(q)) for q in graph.quadrilaterals]
        model.active_pairs = list(active_pairs(graph))
    elif isinstance(graph, LaaksoGraph):
        model.family = SpaceFamily.LAAKSO2
        model.level = graph.level
        model.pastings = [
            PastingModel(level=p.level, identified=sorted(p.identified), copy_bits=p.copy_bits)
            for p in graph.pastings
        ]
    return model


def model_to_graph(model: GraphModel) -> Union[GeneratedGraph, MetricGraph]:
    try:
        metric = MetricGraph(
            model.vertices, [Edge(e.u, e.v, e.length, e.name) for e in model.edges]
        )
    except InvalidPointError as error:
        raise SchemaError(str(error), "edges") from error
    if model.family == SpaceFamily.DIAMOND and model.level is not None:
        quads = tuple(Quadrilateral(**q.model_dump()) for q in model.quadrilaterals)
        return DiamondGraph(model.level, metric, quads)
    if model.family == SpaceFamily.LAAKSO2 and model.level is not None:
        pastings = tuple(
            Pasting(p.level, frozenset(p.identified), dict(p.copy_bits)) for p in model.pastings
        )
        return LaaksoGraph(model.level, metric, pastings)
    return metric


def model_active_pairs(model: GraphModel) -> ActivePairSet:
    return ActivePairSet(frozenset(ActivePairSet.key(x, y) for x, y in model.active_pairs))


def sequence_to_model(sequence: PointSequence, constant: Fraction = Fraction(1)) -> GeodesicModel:
    points = [
        p if isinstance(p, str) else GraphPointModel(edge=p.edge, offset=p.offset)
        for p in sequence.points
    ]
    route = list(sequence.route) if sequence.route is not None else None
    return GeodesicModel(points=points, constant=constant, route=route)


def model_to_sequence(model: GeodesicModel, space: Any = None) -> PointSequence:
    try:
        return PointSequence(
            tuple(_point(ref) for ref in model.points),
            space,
            tuple(model.route) if model.route is not None else None,
        )
    except ValueError as error:
        raise SchemaError(str(error), "points") from error


def embedding_to_model(embedding: Embedding, space: Optional[str] = None) -> EmbeddingModel:
    certified = None
    if embedding.certified is not None:
        certified = CertifiedModel(
            lower=embedding.certified.lower,
            upper=embedding.certified.upper,
            pairs=embedding.certified.pairs,
        )
    return EmbeddingModel(
        space=space,
        norm=embedding.norm.tag,
        weights=list(embedding.norm.weights) if embedding.norm.weights is not None else None,
        points={str(key): list(vector) for key, vector in embedding.points.items()},
        certified=certified,
        metadata=to_jsonable(embedding.metadata),
    )


def model_to_embedding(model: EmbeddingModel) -> Embedding:
    dimensions = {len(vector) for vector in model.points.values()}
    if len(dimensions) > 1:
        raise SchemaError(f"embedding vectors have mixed dimensions {sorted(dimensions)}", "points")
    certified = None
    if model.certified is not None:
        if model.certified.lower > model.certified.upper:
            raise SchemaError("certified lower constant exceeds the upper one", "certified")
        certified = Certification(model.certified.lower, model.certified.upper, model.certified.pairs)
    return Embedding(
        {key: tuple(vector) for key, vector in model.points.items()},
        _norm_spec(model.norm, model.weights),
        certified,
        dict(model.metadata),
    )


def tree_to_model(system: Union[DeltaTree, SeparatedTreeSystem]) -> DeltaTreeModel:
    tree = system.tree if isinstance(system, SeparatedTreeSystem) else system
    model = DeltaTreeModel(
        norm=tree.norm.tag,
        weights=list(tree.norm.weights) if tree.norm.weights is not None else None,
        vectors=[list(vector) for vector in tree.vectors],
        delta=tree.delta if isinstance(tree.delta, Fraction) else None,
    )
    if isinstance(system, SeparatedTreeSystem):
        model.functionals = {j: list(f) for j, f in system.functionals.items()}
        model.odd_functionals = {j: list(f) for j, f in system.odd_functionals.items()}
        model.epsilon = system.epsilon
    return model


def model_to_tree(model: DeltaTreeModel) -> SeparatedTreeSystem:
    count = len(model.vectors)
    depth = (count + 1).bit_length() - 2
    if 2 ** (depth + 1) - 1 != count:
        raise SchemaError(f"a complete tree has 2^(n+1) - 1 vectors, got {count}", "vectors")
    tree = DeltaTree(
        tuple(tuple(vector) for vector in model.vectors),
        _norm_spec(model.norm, model.weights),
        model.delta if model.delta is not None else Fraction(0),
        depth,
    )
    return SeparatedTreeSystem(
        tree,
        {j: tuple(f) for j, f in model.functionals.items()},
        model.epsilon,
        {j: tuple(f) for j, f in model.odd_functionals.items()},
    )


def model_to_witness(model: ReflexivityWitnessModel) -> ReflexivityWitness:
    return ReflexivityWitness(
        tuple(tuple(vector) for vector in model.vectors),
        tuple(model.functional),
        model.theta,
        _norm_spec(model.norm, model.weights),
        model.basic_constant,
    )


def witness_to_model(witness: ReflexivityWitness) -> ReflexivityWitnessModel:
    return ReflexivityWitnessModel(
        vectors=[list(vector) for vector in witness.vectors],
        functional=list(witness.functional),
        theta=witness.theta,
        norm=witness.norm.tag,
        weights=list(witness.norm.weights) if witness.norm.weights is not None else None,
        basic_constant=witness.basic_constant,
    )


def thick_witness_document(witness: ThickWitness) -> Dict[str, Any]:
    return to_jsonable(witness)


def model_to_thick_witness(model: ThickWitnessModel) -> ThickWitness:
    if not len(model.z) == len(model.z_tilde) == len(model.w) - 1:
        raise SchemaError(
            f"a witness with {len(model.w)} w-points needs {len(model.w) - 1} z and z~ points", "z"
        )
    return ThickWitness(
        u0=model.u0,
        v0=model.v0,
        w=tuple(model.w),
        z=tuple(model.z),
        z_tilde=tuple(model.z_tilde),
        level=model.level,
        width_constant=model.width_constant,
    )


def parse_document(text: str, model: Type[ModelT], location: str = "") -> ModelT:
    """Validate JSON text against a model, mapping every failure to SchemaError."""
    if not text.strip():
        raise SchemaError("input is empty", location)
    try:
        data = json.loads(text)
    except json.JSONDecodeError as error:
        raise SchemaError(f"invalid JSON: {error.msg}", f"{location}:{error.lineno}:{error.colno}") from error
    try:
        return model.model_validate(data)
    except ValidationError as error:
        first = error.errors()[0]
        path = ".".join(str(part) for part in first["loc"])
        where = f"{location}:{path}" if location else path
        raise SchemaError(first["msg"], where) from error


def load_document(path: Union[str, Path], model: Type[ModelT]) -> ModelT:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as error:
        logger.error(f"Error reading {path}: {error}")
        raise SchemaError(f"cannot read file: {error.strerror}", str(path)) from error
    return parse_document(text, model, str(path))


def dumps(data: Any) -> str:
    """Deterministic JSON text: sorted keys, two-space indent, trailing newline."""
    return json.dumps(to_jsonable(data), sort_keys=True, indent=2) + "\n"


def write_json(data: Any, path: Optional[Union[str, Path]] = None, stream: Optional[IO[str]] = None) -> None:
    text = dumps(data)
    if path is not None:
        Path(path).write_text(text, encoding="utf-8")
    elif stream is not None:
        stream.write(text)


def trace_rows(trace: MartingaleTrace) -> List[List[Any]]:
    """One CSV row per interval of every step."""
    dimension = len(trace.steps[0].function.values[0])
    rows: List[List[Any]] = [
        ["step", "interval_start_num", "interval_start_den", "interval_end_num", "interval_end_den"]
        + [f"value_{i}" for i in range(dimension)]
    ]
    for step in trace.steps:
        breakpoints = step.function.partition.breakpoints
        for k, value in enumerate(step.function.values):
            start, end = breakpoints[k], breakpoints[k + 1]
            rows.append(
                [step.index, start.numerator, start.denominator, end.numerator, end.denominator]
                + [str(c) for c in value]
            )
    return rows


def trace_csv(trace: MartingaleTrace) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerows(trace_rows(trace))
    return buffer.getvalue()


def report_document(reports: List[CertificateReport], include_timings: bool = False) -> Dict[str, Any]:
    entries = []
    for report in reports:
        entry = to_jsonable(report)
        if not include_timings:
            entry.pop("runtime", None)
        entries.append(entry)
    return {"passed": all(report.passed for report in reports), "reports": entries}
