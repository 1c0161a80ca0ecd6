"""Diamond graphs D_n and second Laakso graphs X_i.

Vertex ids are hierarchical so every inclusion of a lower level into a higher
one is the identity on ids:

* diamonds: the top and bottom are ``u`` and ``v``; an edge is addressed by
  the digits of its replacement path (``""`` at level 0, then ``0`` = top-a,
  ``1`` = a-bottom, ``2`` = top-b, ``3`` = b-bottom); the quadrilateral
  replacing edge ``E`` introduces ``aE`` and ``bE``.
* Laakso graphs: the level-0 edge is ``e``; trisecting ``E`` yields vertices
  ``E:1``, ``E:2`` and sub-edges ``E.0``, ``E.1``, ``E.2``; the copy-1 twin of
  a vertex or edge created while building level ``i`` gets the suffix ``+i``.
"""

import logging
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Dict, List, Optional, Tuple, Union

from .config import get_config
from .core import MetricGraph, shortest_path_metric
from .errors import CertificationError, InvalidPointError, ResourceLimitError
from .types import (
    ActivePairSet,
    Edge,
    InclusionReport,
    Pasting,
    Point,
    Quadrilateral,
    SideClass,
    SubdiamondId,
)

logger = logging.getLogger(__name__)

TOP = "u"
BOTTOM = "v"
ROOT_ADDRESS = ""
LAAKSO_ROOT_EDGE = "e"
_DIGITS = "0123"


@dataclass
class DiamondGraph:
    """Diamond graph D_n with its quadrilateral records."""
    level: int
    graph: MetricGraph
    quadrilaterals: Tuple[Quadrilateral, ...]
    top: str = TOP
    bottom: str = BOTTOM

    @property
    def vertices(self) -> Tuple[str, ...]:
        return self.graph.vertices

    @property
    def edge_length(self) -> Fraction:
        return Fraction(1, 2**self.level)

    def quadrilateral(self, address: str) -> Quadrilateral:
        for quad in self.quadrilaterals:
            if quad.address == address:
                return quad
        raise InvalidPointError(f"No quadrilateral replaces edge {address!r} in D_{self.level}")

    def distance(self, p: Point, q: Point) -> Fraction:
        return self.graph.distance(p, q)


@dataclass
class LaaksoGraph:
    """Second Laakso graph X_i with its pasting records."""
    level: int
    graph: MetricGraph
    pastings: Tuple[Pasting, ...]
    u: str = TOP
    v: str = BOTTOM

    @property
    def vertices(self) -> Tuple[str, ...]:
        return self.graph.vertices

    @property
    def edge_length(self) -> Fraction:
        return Fraction(1, 3**self.level)

    def distance(self, p: Point, q: Point) -> Fraction:
        return self.graph.distance(p, q)


def diamond_vertex_count(n: int) -> int:
    return 2 + 2 * (4**n - 1) // 3


def laakso_vertex_count(i: int) -> int:
    vertices, edges = 2, 1
    for _ in range(i):
        vertices, edges = 2 * vertices + 2 * edges, 6 * edges
    return vertices


def _check_cap(family: str, level: int, count: int, cap: Optional[int]) -> None:
    if level < 0:
        raise CertificationError(f"{family} level must be non-negative, got {level}")
    limit = get_config().limits.vertex_cap if cap is None else cap
    if count > limit:
        raise ResourceLimitError(
            f"{family} level {level} has {count} vertices, above the cap of {limit}",
            requested=count,
            cap=limit,
        )


def creating_address(vertex: str) -> Optional[str]:
    """Address of the edge whose quadrilateral introduced the vertex."""
    if vertex in (TOP, BOTTOM):
        return None
    if len(vertex) >= 1 and vertex[0] in "ab" and all(ch in _DIGITS for ch in vertex[1:]):
        return vertex[1:]
    raise InvalidPointError(f"Not a diamond vertex id: {vertex!r}")


def vertex_level(vertex: str) -> int:
    """First diamond level containing the vertex."""
    address = creating_address(vertex)
    return 0 if address is None else len(address) + 1


def edge_endpoints(address: str) -> Tuple[str, str]:
    """(top, bottom) of the edge with the given address."""
    top, bottom = TOP, BOTTOM
    for depth, digit in enumerate(address):
        prefix = address[:depth]
        a, b = f"a{prefix}", f"b{prefix}"
        if digit == "0":
            bottom = a
        elif digit == "1":
            top = a
        elif digit == "2":
            bottom = b
        elif digit == "3":
            top = b
        else:
            raise InvalidPointError(f"Not an edge address: {address!r}")
    return top, bottom


def tree_index(address: str) -> int:
    """Index j of the tree vector y_j attached to the edge.

    Top-a and b-bottom edges take the even child, a-bottom and top-b the odd one.
    """
    j = 1
    for digit in address:
        if digit in "03":
            j = 2 * j
        elif digit in "12":
            j = 2 * j + 1
        else:
            raise InvalidPointError(f"Not an edge address: {address!r}")
    return j


def in_subdiamond(vertex: str, address: str) -> bool:
    """Whether the vertex belongs to the subdiamond generated by the edge."""
    if vertex in edge_endpoints(address):
        return True
    created = creating_address(vertex)
    return created is not None and created.startswith(address)


@lru_cache(maxsize=8)
def _build_diamond(n: int) -> DiamondGraph:
    vertices: List[str] = [TOP, BOTTOM]
    edges: List[Edge] = [Edge(TOP, BOTTOM, Fraction(1), ROOT_ADDRESS)]
    quadrilaterals: List[Quadrilateral] = []

    for level in range(1, n + 1):
        length = Fraction(1, 2**level)
        next_edges: List[Edge] = []
        for edge in edges:
            address = edge.name
            a, b = f"a{address}", f"b{address}"
            vertices.extend((a, b))
            quadrilaterals.append(Quadrilateral(edge.u, a, edge.v, b, level, address))
            next_edges.extend(
                (
                    Edge(edge.u, a, length, address + "0"),
                    Edge(a, edge.v, length, address + "1"),
                    Edge(edge.u, b, length, address + "2"),
                    Edge(b, edge.v, length, address + "3"),
                )
            )
        edges = next_edges

    return DiamondGraph(n, MetricGraph(vertices, edges), tuple(quadrilaterals))


def diamond(n: int, cap: Optional[int] = None) -> DiamondGraph:
    """Build the diamond graph D_n."""
    _check_cap("Diamond", n, diamond_vertex_count(n), cap)
    graph = _build_diamond(n)
    logger.info(f"Generated D_{n}: {len(graph.vertices)} vertices, {len(graph.graph.edges)} edges")
    return graph


def active_pairs(d: DiamondGraph, include_root: Optional[bool] = None) -> ActivePairSet:
    """All vertex pairs of recorded quadrilaterals, plus the D_0 edge pair if enabled."""
    if include_root is None:
        include_root = get_config().construction.include_root_pair
    pairs = set()
    if include_root:
        pairs.add(ActivePairSet.key(d.top, d.bottom))
    for quad in d.quadrilaterals:
        corners = (quad.top, quad.a, quad.bottom, quad.b)
        for i, x in enumerate(corners):
            for y in corners[i + 1:]:
                pairs.add(ActivePairSet.key(x, y))
    return ActivePairSet(frozenset(pairs))


def smallest_subdiamond(d: DiamondGraph, w: str, z: str) -> Tuple[SubdiamondId, SideClass]:
    """Minimal subdiamond containing both vertices, with the side case of the pair."""
    if w == z:
        raise InvalidPointError("smallest_subdiamond needs two distinct vertices")
    for vertex in (w, z):
        if not d.graph.has_vertex(vertex):
            raise InvalidPointError(f"{vertex!r} is not a vertex of D_{d.level}")

    candidates = sorted(d.quadrilaterals, key=lambda quad: len(quad.address), reverse=True)
    quad = next(
        (q for q in candidates if in_subdiamond(w, q.address) and in_subdiamond(z, q.address)),
        None,
    )
    if quad is None:
        raise InvalidPointError(f"D_{d.level} has no quadrilateral containing {w} and {z}")
    address = quad.address
    subdiamond = SubdiamondId(quad.top, quad.bottom, len(address), address)

    def a_side(x: str) -> bool:
        return in_subdiamond(x, address + "0") or in_subdiamond(x, address + "1")

    def b_side(x: str) -> bool:
        return in_subdiamond(x, address + "2") or in_subdiamond(x, address + "3")

    if (a_side(w) and a_side(z)) or (b_side(w) and b_side(z)):
        return subdiamond, SideClass.SAME_SIDE

    w_up, w_down = d.distance(w, quad.top), d.distance(w, quad.bottom)
    z_up, z_down = d.distance(z, quad.top), d.distance(z, quad.bottom)
    if (w_up <= w_down and z_up <= z_down) or (w_up >= w_down and z_up >= z_down):
        return subdiamond, SideClass.DIFFERENT_SIDES_A
    return subdiamond, SideClass.DIFFERENT_SIDES_B


def laakso_edge_level(name: str) -> int:
    return name.count(".")


def laakso_vertex_level(vertex: str) -> int:
    """First Laakso level containing the vertex."""
    if vertex in (TOP, BOTTOM):
        return 0
    head, sep, tail = vertex.rpartition("+")
    if sep and tail.isdigit():
        return int(tail)
    head, sep, tail = vertex.rpartition(":")
    if sep and tail in ("1", "2"):
        return laakso_edge_level(head) + 1
    raise InvalidPointError(f"Not a Laakso vertex id: {vertex!r}")


@lru_cache(maxsize=8)
def _build_laakso(i: int) -> LaaksoGraph:
    vertices: List[str] = [TOP, BOTTOM]
    edges: List[Edge] = [Edge(TOP, BOTTOM, Fraction(1), LAAKSO_ROOT_EDGE)]
    pastings: List[Pasting] = []

    for level in range(1, i + 1):
        length = Fraction(1, 3**level)
        suffix = f"+{level}"

        # Step 1: trisect every edge
        identified: List[str] = []
        trisected: List[Edge] = []
        for edge in edges:
            first, second = f"{edge.name}:1", f"{edge.name}:2"
            identified.extend((first, second))
            trisected.extend(
                (
                    Edge(edge.u, first, length, f"{edge.name}.0"),
                    Edge(first, second, length, f"{edge.name}.1"),
                    Edge(second, edge.v, length, f"{edge.name}.2"),
                )
            )

        # Step 2: two copies pasted along the trisection vertices
        pasted = frozenset(identified)

        def twin(vertex: str) -> str:
            return vertex if vertex in pasted else vertex + suffix

        copy_bits: Dict[str, int] = {vertex: 0 for vertex in vertices}
        copy_bits.update({twin(vertex): 1 for vertex in vertices})
        twin_edges = [Edge(twin(e.u), twin(e.v), length, e.name + suffix) for e in trisected]
        vertices = vertices + identified + [twin(vertex) for vertex in vertices]
        edges = trisected + twin_edges
        pastings.append(Pasting(level, pasted, copy_bits))

    return LaaksoGraph(i, MetricGraph(vertices, edges), tuple(pastings))


def laakso2(i: int, cap: Optional[int] = None) -> LaaksoGraph:
    """Build the second Laakso graph X_i."""
    _check_cap("Laakso", i, laakso_vertex_count(i), cap)
    graph = _build_laakso(i)
    logger.info(f"Generated X_{i}: {len(graph.vertices)} vertices, {len(graph.graph.edges)} edges")
    return graph


GeneratedGraph = Union[DiamondGraph, LaaksoGraph]


def inclusion_isometry_check(lower: GeneratedGraph, higher: GeneratedGraph) -> InclusionReport:
    """Compare distances between the lower level's vertices inside both levels."""
    if type(lower) is not type(higher):
        raise CertificationError("Inclusion check needs two levels of the same family")
    if higher.level - lower.level not in (0, 1):
        raise CertificationError(
            f"Inclusion check needs consecutive levels, got {lower.level} and {higher.level}"
        )

    lower_metric = shortest_path_metric(lower.graph)
    points = lower_metric.points
    mismatches = []
    checked = 0
    for index, x in enumerate(points):
        if not higher.graph.has_vertex(x):
            raise CertificationError(f"Vertex {x} of level {lower.level} missing at level {higher.level}")
        upstairs = higher.graph.single_source(x)
        for y in points[index + 1:]:
            checked += 1
            below, above = lower_metric.distance(x, y), upstairs[y]
            if below != above:
                mismatches.append((x, y, below, above))

    report = InclusionReport(not mismatches, checked, mismatches)
    logger.info(
        f"Inclusion level {lower.level} -> {higher.level}: {checked} pairs, "
        f"{len(mismatches)} mismatches"
    )
    return report
