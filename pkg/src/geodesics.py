"""Geodesics, C-geodesics, partitions of [0,1] and thick-family witnesses."""

import logging
from fractions import Fraction
from typing import Any, Dict, Iterator, List, Optional, Sequence, Tuple

from .config import get_config
from .core import MetricGraph
from .errors import GeodesicError, InvalidPointError
from .families import LaaksoFamily
from .generators import DiamondGraph, diamond
from .types import (
    CGeodesic,
    CGeodesicCheck,
    ClauseResult,
    IsoWitness,
    MetricSpace,
    Partition,
    Point,
    PointSequence,
    ThickWitness,
    WitnessReport,
)

logger = logging.getLogger(__name__)

THICK_ANCHOR = "thick family condition"
ISO_ANCHOR = "iso thick family condition"


def _as_metric_graph(graph: Any) -> MetricGraph:
    if isinstance(graph, MetricGraph):
        return graph
    inner = getattr(graph, "graph", None)
    if isinstance(inner, MetricGraph):
        return inner
    raise TypeError(f"Expected a metric graph, got {type(graph).__name__}")


def interleave(w: Sequence[Point], z: Sequence[Point]) -> Tuple[Point, ...]:
    """w_0, z_1, w_1, ..., z_n, w_n."""
    if len(w) != len(z) + 1:
        raise GeodesicError(f"Cannot interleave {len(w)} w-points with {len(z)} z-points")
    merged: List[Point] = [w[0]]
    for z_i, w_i in zip(z, w[1:]):
        merged.extend((z_i, w_i))
    return tuple(merged)


def _incidence(graph: MetricGraph) -> Dict[str, List[Tuple[str, int, str]]]:
    incidence: Dict[str, List[Tuple[str, int, str]]] = {vertex: [] for vertex in graph.vertices}
    for index, edge in enumerate(graph.edges):
        incidence[edge.u].append((edge.name, index, edge.v))
        incidence[edge.v].append((edge.name, index, edge.u))
    for entries in incidence.values():
        entries.sort()
    return incidence


def iter_geodesics(graph: Any, u: str, v: str) -> Iterator[PointSequence]:
    """Lazily yield the vertex geodesics from u to v in edge-name order."""
    metric_graph = _as_metric_graph(graph)
    if u == v:
        raise GeodesicError("Geodesic enumeration needs two distinct endpoints")
    from_u = metric_graph.distances_from(u)
    from_v = metric_graph.distances_from(v)
    if v not in from_u:
        return
    total = from_u[v]
    incidence = _incidence(metric_graph)
    edges = metric_graph.edges

    def on_geodesic(x: str, index: int, y: str) -> bool:
        return from_u[x] + edges[index].length == from_u[y] and from_u[y] + from_v[y] == total

    points: List[str] = [u]
    route: List[int] = []
    stack = [iter([entry for entry in incidence[u] if on_geodesic(u, entry[1], entry[2])])]
    while stack:
        step = next(stack[-1], None)
        if step is None:
            stack.pop()
            if route:
                route.pop()
                points.pop()
            continue
        _, index, y = step
        points.append(y)
        route.append(index)
        if y == v:
            yield PointSequence(tuple(points), metric_graph, tuple(route))
            points.pop()
            route.pop()
            continue
        stack.append(iter([entry for entry in incidence[y] if on_geodesic(y, entry[1], entry[2])]))


def enumerate_geodesics(
    graph: Any, u: str, v: str, limit: Optional[int] = None
) -> List[PointSequence]:
    """Vertex geodesics from u to v, at most ``limit`` of them, deterministic order."""
    if limit is None:
        limit = get_config().limits.enumeration_limit
    if u == v:
        raise GeodesicError("Geodesic enumeration needs two distinct endpoints")
    found: List[PointSequence] = []
    if limit <= 0:
        return found
    for sequence in iter_geodesics(graph, u, v):
        found.append(sequence)
        if len(found) >= limit:
            break
    logger.debug(f"Enumerated {len(found)} geodesics from {u} to {v}")
    return found


def segment_lengths(sequence: PointSequence, space: Optional[MetricSpace] = None) -> List[Fraction]:
    host = space if space is not None else sequence.space
    if host is None:
        raise GeodesicError("Point sequence has no host space")
    points = sequence.points
    return [host.distance(p, q) for p, q in zip(points, points[1:])]


def is_c_geodesic(
    sequence: PointSequence, constant: Fraction, space: Optional[MetricSpace] = None
) -> CGeodesicCheck:
    """Whether the total length is at most ``constant`` times the end-to-end distance."""
    if len(sequence) < 2:
        raise GeodesicError("A C-geodesic needs at least two points")
    host = space if space is not None else sequence.space
    total = sum(segment_lengths(sequence, host), Fraction(0))
    direct = host.distance(sequence.points[0], sequence.points[-1])
    ratio = total / direct if direct > 0 else None
    return CGeodesicCheck(total <= constant * direct, ratio, total, direct)


def c_geodesic(sequence: PointSequence, space: Optional[MetricSpace] = None) -> CGeodesic:
    """Wrap a sequence with the smallest constant C >= 1 it satisfies."""
    check = is_c_geodesic(sequence, Fraction(1), space)
    if check.ratio is None:
        raise GeodesicError("Sequence starts and ends at the same point")
    return CGeodesic(sequence, max(Fraction(1), check.ratio))


def partition_of(geodesic: CGeodesic) -> Partition:
    """Cumulative segment lengths divided by the total length."""
    lengths = segment_lengths(geodesic.sequence)
    total = sum(lengths, Fraction(0))
    if total == 0:
        raise GeodesicError("Cannot partition a sequence of total length zero")
    breakpoints = [Fraction(0)]
    running = Fraction(0)
    for length in lengths:
        running += length
        breakpoints.append(running / total)
    return Partition(tuple(breakpoints))


def _subsequence_positions(parent: Sequence[Point], child: Sequence[Point]) -> List[int]:
    positions: List[int] = []
    j = 0
    for point in parent:
        while j < len(child) and child[j] != point:
            j += 1
        if j == len(child):
            raise GeodesicError(f"{point} of the parent sequence is missing from the extension")
        positions.append(j)
        j += 1
    if positions[0] != 0 or positions[-1] != len(child) - 1:
        raise GeodesicError("Extension must start and end at the parent's endpoints")
    return positions


def refine_partition(parent: Partition, parent_geodesic: CGeodesic, extension: CGeodesic) -> Partition:
    """Split every parent interval proportionally to the extension's segments."""
    parent_points = parent_geodesic.sequence.points
    if len(parent) != len(parent_points):
        raise GeodesicError(
            f"Partition has {len(parent)} breakpoints but the geodesic has {len(parent_points)} points"
        )
    positions = _subsequence_positions(parent_points, extension.sequence.points)
    lengths = segment_lengths(extension.sequence)

    breakpoints = [Fraction(0)]
    for i, (start, end) in enumerate(zip(positions, positions[1:])):
        left, right = parent.breakpoints[i], parent.breakpoints[i + 1]
        piece = lengths[start:end]
        piece_total = sum(piece, Fraction(0))
        if piece_total == 0:
            raise GeodesicError(f"Zero-length segment between {parent_points[i]} and {parent_points[i + 1]}")
        running = Fraction(0)
        for length in piece:
            running += length
            breakpoints.append(left + (right - left) * running / piece_total)
    return Partition(tuple(breakpoints))


def b_equivalence_ratio(iterated: Partition, direct: Partition) -> Fraction:
    """Largest ratio between corresponding interval lengths, in either direction."""
    if len(iterated) != len(direct):
        raise GeodesicError(
            f"Partitions have different sizes: {len(iterated)} vs {len(direct)} breakpoints"
        )
    return max(
        max(a / b, b / a) for a, b in zip(iterated.lengths(), direct.lengths())
    )


def _order_clause(
    name: str, space: MetricSpace, sequence: Tuple[Point, ...], base: Optional[Tuple[Point, Point]]
) -> ClauseResult:
    total = sum((space.distance(p, q) for p, q in zip(sequence, sequence[1:])), Fraction(0))
    direct = space.distance(sequence[0], sequence[-1])
    values: Dict[str, Any] = {"total": total, "direct": direct}
    passed = total == direct
    if base is not None:
        u, v = base
        through = space.distance(u, sequence[0]) + direct + space.distance(sequence[-1], v)
        backwards = space.distance(u, sequence[-1]) + direct + space.distance(sequence[0], v)
        base_distance = space.distance(u, v)
        values["base_distance"] = base_distance
        passed = passed and base_distance in (through, backwards)
    return ClauseResult(
        name,
        f"{THICK_ANCHOR}: interleaving lies on a geodesic in order",
        passed,
        values,
        "" if passed else "interleaved points are not in geodesic order",
    )


def verify_thick_witness(space: MetricSpace, witness: ThickWitness, c: Fraction) -> WitnessReport:
    """Check every clause of a thick witness exactly."""
    report = WitnessReport()
    n = len(witness.z)
    shape_ok = (
        n >= 1
        and len(witness.z_tilde) == n
        and len(witness.w) == n + 1
        and witness.w[0] == witness.u0
        and witness.w[-1] == witness.v0
    )
    report.clauses.append(
        ClauseResult(
            "shape",
            f"{THICK_ANCHOR}: sequence lengths",
            shape_ok,
            {"n": n, "w": len(witness.w), "z_tilde": len(witness.z_tilde)},
        )
    )
    if not shape_ok:
        return report

    w, z, z_tilde = witness.w, witness.z, witness.z_tilde
    report.clauses.append(_order_clause("order", space, interleave(w, z), witness.base))
    report.clauses.append(_order_clause("order_tilde", space, interleave(w, z_tilde), witness.base))

    coinciding = [i + 1 for i in range(n) if z[i] == z_tilde[i]]
    report.clauses.append(
        ClauseResult(
            "different_geodesics",
            f"{THICK_ANCHOR}: the two geodesics differ",
            len(coinciding) < n,
            {"coinciding_indices": coinciding},
        )
    )

    unequal = [
        i + 1
        for i in range(n)
        if space.distance(w[i + 1], z[i]) != space.distance(w[i + 1], z_tilde[i])
        or space.distance(w[i], z[i]) != space.distance(w[i], z_tilde[i])
    ]
    report.clauses.append(
        ClauseResult(
            "equal_distances",
            f"{THICK_ANCHOR}: equal distances to neighbouring w-points",
            not unequal,
            {"failing_indices": unequal},
        )
    )

    width = sum((space.distance(a, b) for a, b in zip(z, z_tilde)), Fraction(0))
    required = c * space.distance(witness.u0, witness.v0)
    report.clauses.append(
        ClauseResult(
            "width",
            f"{THICK_ANCHOR}: width inequality",
            width >= required,
            {"sum": width, "bound": required, "c": c},
        )
    )
    return report


def _common_path(space: MetricSpace, u0: str, v0: str, graph: MetricGraph, base: Tuple[str, str]) -> None:
    top, bottom = base
    from_top = graph.distances_from(top)
    from_bottom = graph.distances_from(bottom)
    direct = space.distance(u0, v0)
    total = from_top[bottom]
    if from_top[u0] + direct + from_bottom[v0] != total and from_top[v0] + direct + from_bottom[u0] != total:
        raise GeodesicError(f"{u0} and {v0} do not lie on a common {top}-{bottom} geodesic")


def laakso_thick_witness(
    family: LaaksoFamily, u0: str, v0: str, threshold: Optional[Fraction] = None
) -> ThickWitness:
    """Trisect a geodesic between u0 and v0 until its interior span is large enough.

    The w-points are the trisection vertices along the refined geodesic, each
    z is the midpoint of the segment between consecutive w-points on one
    sheet and z~ its copy on the sheet pasted in at the next level.
    """
    if threshold is None:
        threshold = get_config().construction.laakso_threshold
    if u0 == v0:
        raise GeodesicError("Thick witness needs two distinct points")
    u0, _ = family.vertex_key(u0)
    v0, _ = family.vertex_key(v0)
    start = max(family.level_of(u0), family.level_of(v0))
    graph = family.level(start).graph
    _common_path(family, u0, v0, graph, (family.u, family.v))

    path = enumerate_geodesics(graph, u0, v0, limit=1)[0]
    assert path.route is not None
    segments: List[Tuple[str, bool]] = [
        (graph.edges[index].name, graph.edges[index].u == path.points[k])
        for k, index in enumerate(path.route)
    ]
    direct = family.distance(u0, v0)

    level = start
    trisections = 0
    while True:
        trisections += 1
        step = Fraction(1, 3 ** (level + 1))
        if direct - 2 * step >= threshold * direct:
            break
        segments = [
            (f"{name}.{digit}", forward)
            for name, forward in segments
            for digit in ((0, 1, 2) if forward else (2, 1, 0))
        ]
        level += 1
    host = level + 1
    family.level(host)

    anchors: List[Tuple[str, int]] = []
    for k, (name, forward) in enumerate(segments):
        first, second = f"{name}:1", f"{name}:2"
        if not forward:
            first, second = second, first
        anchors.extend(((first, k), (second, k)))

    coarse = family.level(level).graph
    z: List[str] = []
    z_tilde: List[str] = []
    half = step / 2
    for (_, k_prev), (_, k_next) in zip(anchors, anchors[1:]):
        if k_prev == k_next:
            middle = f"{segments[k_prev][0]}.1"
            z.append(family.key_for(middle, half, host))
            z_tilde.append(f"{middle}+{host}@{half}")
        else:
            name, forward = segments[k_prev]
            edge = coarse.edges[coarse.edge_index(name)]
            shared = edge.v if forward else edge.u
            z.append(shared)
            z_tilde.append(f"{shared}+{host}")

    w = [u0] + [vertex for vertex, _ in anchors[1:-1]] + [v0]
    logger.info(
        f"Built Laakso witness for ({u0}, {v0}): {trisections} trisections, n = {len(z)}, host level {host}"
    )
    return ThickWitness(
        u0=u0,
        v0=v0,
        w=tuple(w),
        z=tuple(z),
        z_tilde=tuple(z_tilde),
        geodesic=interleave(w, z),
        geodesic_tilde=interleave(w, z_tilde),
        base=(family.u, family.v),
        level=host,
        width_constant=threshold,
        trisections=trisections,
    )


def diamond_thick_witness(
    d: DiamondGraph, u0: str, v0: str, base_level: Optional[int] = None
) -> ThickWitness:
    """Fork every edge of a level-n geodesic through its quadrilateral."""
    n = d.level - 1 if base_level is None else base_level
    if not 0 <= n < d.level:
        raise GeodesicError(f"Base level {n} must lie below the host level {d.level}")
    if u0 == v0:
        raise GeodesicError("Thick witness needs two distinct points")
    lower = diamond(n)
    for point in (u0, v0):
        if not lower.graph.has_vertex(point):
            raise InvalidPointError(f"{point} is not a vertex of D_{n}")
    _common_path(d, u0, v0, lower.graph, (lower.top, lower.bottom))

    path = enumerate_geodesics(lower.graph, u0, v0, limit=1)[0]
    assert path.route is not None
    addresses = [lower.graph.edges[index].name for index in path.route]
    w = path.points
    z = tuple(f"a{address}" for address in addresses)
    z_tilde = tuple(f"b{address}" for address in addresses)
    logger.debug(f"Built diamond witness for ({u0}, {v0}) over {len(addresses)} edges of D_{n}")
    return ThickWitness(
        u0=u0,
        v0=v0,
        w=w,
        z=z,
        z_tilde=z_tilde,
        geodesic=interleave(w, z),
        geodesic_tilde=interleave(w, z_tilde),
        base=(d.top, d.bottom),
        level=d.level,
        width_constant=Fraction(1),
    )


def thick_to_iso(witness: ThickWitness) -> IsoWitness:
    """Recast a thick witness as an iso witness with C = 1."""
    z = interleave(witness.w, witness.z)
    z_tilde = interleave(witness.w, witness.z_tilde)
    return IsoWitness(
        base=tuple(witness.w),
        z=z,
        z_tilde=z_tilde,
        common=tuple(range(0, len(z), 2)),
        distinct=tuple(range(1, len(z), 2)),
        constant=Fraction(1),
    )


def _path_length(space: MetricSpace, points: Sequence[Point]) -> Fraction:
    return sum((space.distance(p, q) for p, q in zip(points, points[1:])), Fraction(0))


def verify_iso_witness(space: MetricSpace, witness: IsoWitness, c: Fraction) -> WitnessReport:
    """Check every clause of an iso witness exactly."""
    report = WitnessReport()
    m = len(witness.z)
    common, distinct = set(witness.common), set(witness.distinct)
    shape_ok = (
        m >= 2
        and len(witness.z_tilde) == m
        and not common & distinct
        and common | distinct == set(range(m))
        and 0 in common
        and m - 1 in common
    )
    report.clauses.append(
        ClauseResult("shape", f"{ISO_ANCHOR}: index sets", shape_ok, {"m": m})
    )
    if not shape_ok:
        return report

    z, z_tilde, constant = witness.z, witness.z_tilde, witness.constant
    u, v = witness.base[0], witness.base[-1]
    direct = space.distance(u, v)

    try:
        _subsequence_positions(witness.base, z)
        _subsequence_positions(witness.base, z_tilde)
        extends, detail = True, ""
    except GeodesicError as error:
        extends, detail = False, str(error)
    report.clauses.append(
        ClauseResult("extension", f"{ISO_ANCHOR}: both sequences extend the base", extends, {}, detail)
    )

    mismatched = sorted(i for i in common if z[i] != z_tilde[i])
    collapsed = sorted(i for i in distinct if z[i] == z_tilde[i])
    report.clauses.append(
        ClauseResult(
            "common_points",
            f"{ISO_ANCHOR}: common points identical, distinct points differ",
            not mismatched and not collapsed,
            {"mismatched": mismatched, "collapsed": collapsed},
        )
    )

    isolated = all(i - 1 in common and i + 1 in common for i in distinct)
    report.clauses.append(
        ClauseResult(
            "between_common",
            f"{ISO_ANCHOR}: each distinct index lies between common indices",
            isolated,
        )
    )

    common_points = [z[i] for i in sorted(common)]
    common_total = _path_length(space, common_points)
    report.clauses.append(
        ClauseResult(
            "common_geodesic",
            f"{ISO_ANCHOR}: common points form a C-geodesic",
            common_total <= constant * direct,
            {"total": common_total, "bound": constant * direct},
        )
    )

    if isolated:
        mixture = Fraction(0)
        for i in range(m - 1):
            if i in common and i + 1 in common:
                mixture += space.distance(z[i], z[i + 1])
        for i in sorted(distinct):
            mixture += max(
                space.distance(z[i - 1], z[i]) + space.distance(z[i], z[i + 1]),
                space.distance(z[i - 1], z_tilde[i]) + space.distance(z_tilde[i], z[i + 1]),
            )
    else:
        mixture = max(_path_length(space, z), _path_length(space, z_tilde))
    report.clauses.append(
        ClauseResult(
            "extensions_c_geodesic",
            f"{ISO_ANCHOR}: every mixture of the extensions is a C-geodesic",
            mixture <= constant * direct,
            {"worst_total": mixture, "bound": constant * direct},
        )
    )

    disproportionate = []
    if isolated:
        for i in sorted(distinct):
            lhs = space.distance(z[i], z[i - 1]) * space.distance(z_tilde[i], z[i + 1])
            rhs = space.distance(z_tilde[i], z[i - 1]) * space.distance(z[i], z[i + 1])
            if lhs != rhs:
                disproportionate.append(i)
    report.clauses.append(
        ClauseResult(
            "proportion",
            f"{ISO_ANCHOR}: distinct points split their neighbours in equal proportion",
            isolated and not disproportionate,
            {"failing_indices": disproportionate},
        )
    )

    width = sum((space.distance(z[i], z_tilde[i]) for i in distinct), Fraction(0))
    report.clauses.append(
        ClauseResult(
            "width",
            f"{ISO_ANCHOR}: width inequality",
            width >= c * direct,
            {"sum": width, "bound": c * direct, "c": c},
        )
    )
    return report
