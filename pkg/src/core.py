"""Exact arithmetic, metric graphs with interior points, and the norm zoo."""

import logging
import math
from collections import OrderedDict
from fractions import Fraction
from functools import cached_property, reduce
from itertools import accumulate
from typing import Any, Callable, Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

import networkx as nx
import numpy as np

from .config import get_config
from .errors import DisconnectedGraphError, InvalidPointError, InvalidVectorError
from .types import (
    Coordinates,
    Edge,
    GraphPoint,
    MetricViolation,
    NormedVector,
    NormSpec,
    NormTag,
    Point,
    Scalar,
)

logger = logging.getLogger(__name__)

_INT64_SAFE = 2**62


def to_fraction(value: Any) -> Fraction:
    """Convert ints, Fractions and "n/d" strings; floats are refused."""
    if isinstance(value, bool):
        raise TypeError("Booleans are not rationals")
    if isinstance(value, (int, Fraction)):
        return Fraction(value)
    if isinstance(value, str):
        return Fraction(value.strip())
    raise TypeError(f"Expected an exact rational, got {type(value).__name__}")


def is_exact(value: Any) -> bool:
    return isinstance(value, (int, Fraction)) and not isinstance(value, bool)


def approx_le(a: Scalar, b: Scalar, tolerance: Optional[float] = None) -> bool:
    """a <= b, exactly for rationals and up to the tolerance otherwise."""
    if is_exact(a) and is_exact(b):
        return a <= b
    if tolerance is None:
        tolerance = get_config().numeric.tolerance
    return float(a) <= float(b) + tolerance


def approx_eq(a: Scalar, b: Scalar, tolerance: Optional[float] = None) -> bool:
    if is_exact(a) and is_exact(b):
        return a == b
    if tolerance is None:
        tolerance = get_config().numeric.tolerance
    return abs(float(a) - float(b)) <= tolerance


def common_denominator(values: Iterable[Scalar]) -> int:
    """Least common denominator of a collection of rationals."""
    return reduce(
        lambda acc, value: acc * value.denominator // math.gcd(acc, value.denominator),
        (Fraction(value) for value in values),
        1,
    )


def scale_to_integers(rows: Sequence[Sequence[Scalar]]) -> Tuple[np.ndarray, int]:
    """Integer matrix M and scale s with rows == M / s exactly.

    Falls back to an object array when the entries do not fit in int64.
    """
    flat = [value for row in rows for value in row]
    scale = common_denominator(flat)
    scaled = [[int(Fraction(value) * scale) for value in row] for row in rows]
    largest = max((abs(value) for row in scaled for value in row), default=0)
    dtype = np.int64 if largest < _INT64_SAFE // max(1, len(scaled)) else object
    return np.array(scaled, dtype=dtype), scale


class MetricGraph:
    """Weighted graph whose edges are isometric to segments."""

    def __init__(
        self,
        vertices: Sequence[str],
        edges: Sequence[Edge],
        distance_cache_size: int = 512,
    ):
        self._vertices = tuple(vertices)
        self._edges = tuple(edges)
        self._vertex_set = frozenset(self._vertices)
        if len(self._vertex_set) != len(self._vertices):
            raise InvalidPointError("Duplicate vertex ids in metric graph")
        for index, edge in enumerate(self._edges):
            if edge.u not in self._vertex_set or edge.v not in self._vertex_set:
                raise InvalidPointError(f"Edge {index} ({edge.u}, {edge.v}) has an unknown endpoint")
            if edge.u == edge.v:
                raise InvalidPointError(f"Edge {index} is a self-loop at {edge.u}")
            if not edge.length > 0:
                raise InvalidPointError(f"Edge {index} has non-positive length {edge.length}")
        self._edge_by_name = {edge.name: index for index, edge in enumerate(self._edges) if edge.name}
        self._distance_cache: "OrderedDict[str, Dict[str, Fraction]]" = OrderedDict()
        self._distance_cache_size = distance_cache_size

    @property
    def vertices(self) -> Tuple[str, ...]:
        return self._vertices

    @property
    def edges(self) -> Tuple[Edge, ...]:
        return self._edges

    def has_vertex(self, vertex: str) -> bool:
        return vertex in self._vertex_set

    def edge_index(self, name: str) -> int:
        try:
            return self._edge_by_name[name]
        except KeyError:
            raise InvalidPointError(f"Unknown edge {name!r}") from None

    @cached_property
    def nx_graph(self) -> nx.MultiGraph:
        graph = nx.MultiGraph()
        graph.add_nodes_from(self._vertices)
        for index, edge in enumerate(self._edges):
            graph.add_edge(edge.u, edge.v, key=index, weight=edge.length)
        return graph

    @cached_property
    def uniform_length(self) -> Optional[Fraction]:
        lengths = {edge.length for edge in self._edges}
        return lengths.pop() if len(lengths) == 1 else None

    def canonical(self, point: Point) -> Point:
        """Vertex id for endpoint offsets, validated GraphPoint otherwise."""
        if isinstance(point, str):
            if point not in self._vertex_set:
                raise InvalidPointError(f"Unknown vertex {point!r}")
            return point
        if not 0 <= point.edge < len(self._edges):
            raise InvalidPointError(f"Unknown edge index {point.edge}")
        edge = self._edges[point.edge]
        if point.offset < 0 or point.offset > edge.length:
            raise InvalidPointError(
                f"Offset {point.offset} outside edge {point.edge} of length {edge.length}"
            )
        if point.offset == 0:
            return edge.u
        if point.offset == edge.length:
            return edge.v
        return point

    def single_source(self, vertex: str) -> Dict[str, Fraction]:
        """Exact distances from a vertex, uncached."""
        if vertex not in self._vertex_set:
            raise InvalidPointError(f"Unknown vertex {vertex!r}")
        step = self.uniform_length
        if step is not None:
            hops = nx.single_source_shortest_path_length(self.nx_graph, vertex)
            return {target: step * count for target, count in hops.items()}
        lengths = nx.single_source_dijkstra_path_length(self.nx_graph, vertex, weight="weight")
        return {target: Fraction(value) for target, value in lengths.items()}

    def distances_from(self, vertex: str) -> Dict[str, Fraction]:
        """Exact distances from a vertex, kept in a bounded cache."""
        cached = self._distance_cache.get(vertex)
        if cached is not None:
            self._distance_cache.move_to_end(vertex)
            return cached
        distances = self.single_source(vertex)
        self._distance_cache[vertex] = distances
        if len(self._distance_cache) > self._distance_cache_size:
            self._distance_cache.popitem(last=False)
        return distances

    def vertex_distance(self, x: str, y: str) -> Fraction:
        distances = self.distances_from(x)
        if y not in distances:
            if y not in self._vertex_set:
                raise InvalidPointError(f"Unknown vertex {y!r}")
            raise DisconnectedGraphError(f"Vertex {y} is not reachable from {x}", vertex=y)
        return distances[y]

    def distance(self, p: Point, q: Point) -> Fraction:
        return graph_point_distance(self, p, q)


class FiniteMetricSpace:
    """Finite metric space given by an exact distance table."""

    def __init__(self, points: Sequence[str], table: Mapping[str, Mapping[str, Fraction]]):
        self._points = tuple(points)
        self._table = table

    @classmethod
    def from_function(
        cls, points: Sequence[str], metric: Callable[[str, str], Fraction]
    ) -> "FiniteMetricSpace":
        table: Dict[str, Dict[str, Fraction]] = {p: {} for p in points}
        for i, p in enumerate(points):
            table[p][p] = Fraction(0)
            for q in points[i + 1:]:
                value = Fraction(metric(p, q))
                table[p][q] = value
                table[q][p] = value
        return cls(points, table)

    @property
    def points(self) -> Tuple[str, ...]:
        return self._points

    def __len__(self) -> int:
        return len(self._points)

    def __contains__(self, point: object) -> bool:
        return point in self._table

    def distance(self, p: str, q: str) -> Fraction:
        if p == q:
            if p not in self._table:
                raise InvalidPointError(f"Unknown point {p!r}")
            return Fraction(0)
        try:
            return self._table[p][q]
        except KeyError:
            raise InvalidPointError(f"No distance recorded for ({p!r}, {q!r})") from None

    def row(self, p: str) -> Mapping[str, Fraction]:
        return self._table[p]

    def integer_matrix(self) -> Tuple[np.ndarray, int]:
        rows = [[self.distance(p, q) for q in self._points] for p in self._points]
        return scale_to_integers(rows)


def shortest_path_metric(graph: MetricGraph) -> FiniteMetricSpace:
    """Exact all-pairs shortest path metric on the vertices of a graph."""
    if not graph.vertices:
        return FiniteMetricSpace((), {})
    nx_graph = graph.nx_graph
    if not nx.is_connected(nx_graph):
        first = graph.vertices[0]
        reachable = nx.node_connected_component(nx_graph, first)
        stranded = next(vertex for vertex in graph.vertices if vertex not in reachable)
        raise DisconnectedGraphError(
            f"Graph is disconnected: vertex {stranded} is unreachable from {first}",
            vertex=stranded,
        )

    step = graph.uniform_length
    if step is not None:
        table = {
            source: {target: step * hops for target, hops in lengths.items()}
            for source, lengths in nx.all_pairs_shortest_path_length(nx_graph)
        }
    else:
        table = {
            source: {target: Fraction(value) for target, value in lengths.items()}
            for source, lengths in nx.all_pairs_dijkstra_path_length(nx_graph, weight="weight")
        }
    logger.debug(f"Computed all-pairs metric on {len(graph.vertices)} vertices")
    return FiniteMetricSpace(graph.vertices, table)


def graph_point_distance(graph: MetricGraph, p: Point, q: Point) -> Fraction:
    """Exact distance between two points of the graph thickening."""
    p = graph.canonical(p)
    q = graph.canonical(q)
    if p == q:
        return Fraction(0)
    if isinstance(p, str) and isinstance(q, str):
        return graph.vertex_distance(p, q)
    if isinstance(q, str):
        p, q = q, p
    if isinstance(p, str):
        assert isinstance(q, GraphPoint)
        edge = graph.edges[q.edge]
        return min(
            graph.vertex_distance(p, edge.u) + q.offset,
            graph.vertex_distance(p, edge.v) + edge.length - q.offset,
        )

    assert isinstance(p, GraphPoint) and isinstance(q, GraphPoint)
    edge_p = graph.edges[p.edge]
    edge_q = graph.edges[q.edge]
    candidates: List[Fraction] = []
    if p.edge == q.edge:
        candidates.append(abs(p.offset - q.offset))
    legs_q = ((edge_q.u, q.offset), (edge_q.v, edge_q.length - q.offset))
    for x, to_x in ((edge_p.u, p.offset), (edge_p.v, edge_p.length - p.offset)):
        for y, to_y in legs_q:
            candidates.append(to_x + graph.vertex_distance(x, y) + to_y)
    return min(candidates)


def validate_metric(space: FiniteMetricSpace, limit: int = 20) -> List[MetricViolation]:
    """Exact check of the metric axioms; at most ``limit`` violations are listed."""
    points = space.points
    matrix, _ = space.integer_matrix()
    violations: List[MetricViolation] = []

    for i, j in np.argwhere(matrix != matrix.T)[:limit]:
        violations.append(MetricViolation("symmetry", (points[i], points[j]), "d(x,y) != d(y,x)"))
    for i in np.flatnonzero(np.diag(matrix) != 0)[:limit]:
        violations.append(MetricViolation("identity", (points[i],), "d(x,x) != 0"))
    off_diagonal = ~np.eye(len(points), dtype=bool)
    for i, j in np.argwhere((matrix <= 0) & off_diagonal)[:limit]:
        violations.append(MetricViolation("positivity", (points[i], points[j]), "d(x,y) <= 0"))

    for k in range(len(points)):
        if len(violations) >= limit:
            break
        detour = matrix[:, [k]] + matrix[[k], :]
        for i, j in np.argwhere(matrix > detour)[: limit - len(violations)]:
            violations.append(
                MetricViolation(
                    "triangle",
                    (points[i], points[k], points[j]),
                    "d(x,z) > d(x,y) + d(y,z)",
                )
            )
    return violations


def subtract(x: Sequence[Scalar], y: Sequence[Scalar]) -> Coordinates:
    if len(x) != len(y):
        raise InvalidVectorError(f"Dimension mismatch: {len(x)} vs {len(y)}")
    return tuple(a - b for a, b in zip(x, y))


def add(x: Sequence[Scalar], y: Sequence[Scalar]) -> Coordinates:
    if len(x) != len(y):
        raise InvalidVectorError(f"Dimension mismatch: {len(x)} vs {len(y)}")
    return tuple(a + b for a, b in zip(x, y))


def scale(x: Sequence[Scalar], factor: Scalar) -> Coordinates:
    return tuple(a * factor for a in x)


def pad(x: Sequence[Scalar], length: int) -> Coordinates:
    return tuple(x) + (Fraction(0),) * (length - len(x))


def norm_of(coordinates: Sequence[Scalar], spec: NormSpec) -> Scalar:
    """Norm of raw coordinates; exact except for l2."""
    tag = spec.tag
    zero = Fraction(0)
    if tag == NormTag.L1:
        return sum((abs(c) for c in coordinates), zero)
    if tag == NormTag.WEIGHTED_L1:
        weights = spec.weights
        if weights is None or len(weights) != len(coordinates):
            raise InvalidVectorError(
                f"Weighted l1 needs {len(coordinates)} weights, got "
                f"{0 if weights is None else len(weights)}"
            )
        return sum((w * abs(c) for w, c in zip(weights, coordinates)), zero)
    if tag == NormTag.LINF:
        return max((abs(c) for c in coordinates), default=zero)
    if tag == NormTag.SUMMING:
        return max((abs(s) for s in accumulate(coordinates)), default=zero)
    if tag == NormTag.L2:
        return float(np.linalg.norm(np.asarray([float(c) for c in coordinates], dtype=float)))
    raise InvalidVectorError(f"Unknown norm {tag}")


def norm(vector: NormedVector) -> Scalar:
    """Norm of a normed vector."""
    return norm_of(vector.coordinates, vector.norm)


def distance_in_norm(x: Sequence[Scalar], y: Sequence[Scalar], spec: NormSpec) -> Scalar:
    return norm_of(subtract(x, y), spec)


def pair(functional: Sequence[Scalar], vector: Sequence[Scalar], spec: NormSpec) -> Scalar:
    """Duality pairing; weighted l1 pairs against the same weights."""
    if len(functional) != len(vector):
        raise InvalidVectorError(f"Dimension mismatch: {len(functional)} vs {len(vector)}")
    if spec.tag == NormTag.WEIGHTED_L1:
        if spec.weights is None or len(spec.weights) != len(vector):
            raise InvalidVectorError("Weighted pairing needs one weight per coordinate")
        return sum((w * f * x for w, f, x in zip(spec.weights, functional, vector)), Fraction(0))
    return sum((f * x for f, x in zip(functional, vector)), Fraction(0))


def dual_norm(functional: Sequence[Scalar], spec: NormSpec) -> Scalar:
    """Norm of a functional in the dual of the given space."""
    if spec.tag in (NormTag.L1, NormTag.WEIGHTED_L1):
        return norm_of(functional, NormSpec(NormTag.LINF))
    if spec.tag == NormTag.LINF:
        return norm_of(functional, NormSpec(NormTag.L1))
    if spec.tag == NormTag.L2:
        return norm_of(functional, spec)
    raise InvalidVectorError(f"Dual norm of {spec.tag.value} is not supported")


def row_norms(rows: np.ndarray, spec: NormSpec, weights: Optional[np.ndarray] = None) -> np.ndarray:
    """Norm of every row of a matrix; integer rows stay integer except for l2.

    ``weights`` overrides ``spec.weights`` for weighted l1, e.g. integer-scaled.
    """
    tag = spec.tag
    if tag == NormTag.L1:
        return np.abs(rows).sum(axis=1)
    if tag == NormTag.WEIGHTED_L1:
        if weights is None:
            if spec.weights is None:
                raise InvalidVectorError("Weighted l1 needs weights")
            weights = np.array([float(w) for w in spec.weights], dtype=float)
        return (np.abs(rows) * weights).sum(axis=1)
    if tag == NormTag.LINF:
        return np.abs(rows).max(axis=1)
    if tag == NormTag.SUMMING:
        return np.abs(np.cumsum(rows, axis=1)).max(axis=1)
    return np.sqrt((rows.astype(float) ** 2).sum(axis=1))
