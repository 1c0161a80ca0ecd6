"""Explicit embeddings of diamond graphs and their distortion.

Both constructions share one scheme: the top and bottom of D_0 go to 0 and a
root vector, and the quadrilateral replacing an edge whose image is y_j/2^k
puts its a-corner at f(top) + y_{2j}/2^(k+1) and its b-corner at
f(top) + y_{2j+1}/2^(k+1). The averaging identity of a delta-tree makes the
parallelogram close up at the bottom corner.
"""

import logging
from fractions import Fraction
from itertools import accumulate
from typing import Callable, Dict, Iterable, List, Mapping, Optional, Sequence, Set, Tuple, Union

import numpy as np

from .core import (
    FiniteMetricSpace,
    add,
    approx_eq,
    is_exact,
    dual_norm,
    norm_of,
    pair,
    row_norms,
    scale,
    scale_to_integers,
    subtract,
)
from .errors import CertificationError, InvalidVectorError, PreconditionViolation, TreeError
from .generators import (
    DiamondGraph,
    active_pairs,
    diamond,
    edge_endpoints,
    in_subdiamond,
    smallest_subdiamond,
    tree_index,
)
from .geodesics import enumerate_geodesics
from .types import (
    ActivePairSet,
    Certification,
    ClauseResult,
    Coordinates,
    DeltaTree,
    DeltaTreeReport,
    DistortionReport,
    Embedding,
    MetricSpace,
    NormSpec,
    NormTag,
    PairScope,
    Point,
    Scalar,
    SeparatedTreeSystem,
    WitnessReport,
)

logger = logging.getLogger(__name__)

VectorFunction = Callable[[int], Coordinates]

_EXACT_NORMS = (NormTag.L1, NormTag.WEIGHTED_L1, NormTag.LINF, NormTag.SUMMING)
SEPARATION_ANCHOR = "tree tail separation"


def tail_indices(j: int, max_index: int) -> List[int]:
    """Indices of y_j and all its descendants up to ``max_index``."""
    if not 1 <= j <= max_index:
        raise TreeError(f"Tree index {j} outside 1..{max_index}")
    tail: List[int] = []
    layer = [j]
    while layer:
        tail.extend(layer)
        layer = [child for index in layer for child in (2 * index, 2 * index + 1) if child <= max_index]
    return sorted(tail)


def _tree_depth(count: int) -> int:
    depth = (count + 1).bit_length() - 2
    if count < 1 or 2 ** (depth + 1) - 1 != count:
        raise TreeError(f"A complete tree has 2^(n+1) - 1 vectors, got {count}")
    return depth


def verify_delta_tree(
    vectors: Union[Sequence[Coordinates], Mapping[int, Coordinates]], norm_spec: NormSpec
) -> DeltaTreeReport:
    """Check the averaging identity and equal child distances; report the best delta."""
    if isinstance(vectors, Mapping):
        count = len(vectors)
        if set(vectors) != set(range(1, count + 1)):
            raise TreeError(f"Tree indices must be exactly 1..{count}")
        ordered = [vectors[j] for j in range(1, count + 1)]
    else:
        ordered = list(vectors)
    depth = _tree_depth(len(ordered))
    dimensions = {len(vector) for vector in ordered}
    if len(dimensions) != 1:
        raise TreeError(f"Tree vectors have mixed dimensions {sorted(dimensions)}")

    def y(j: int) -> Coordinates:
        return ordered[j - 1]

    violations: List[str] = []
    separations: List[Scalar] = []
    for j in range(1, 2**depth):
        left, right = y(2 * j), y(2 * j + 1)
        if not all(approx_eq(2 * a, b + c) for a, b, c in zip(y(j), left, right)):
            violations.append(f"averaging identity fails at j={j}")
            continue
        to_left = norm_of(subtract(left, y(j)), norm_spec)
        to_right = norm_of(subtract(right, y(j)), norm_spec)
        if not approx_eq(to_left, to_right):
            violations.append(f"unequal child distances at j={j}: {to_left} vs {to_right}")
            continue
        separations.append(to_left)

    delta = min(separations) if separations and not violations else None
    degenerate = delta is not None and delta == 0
    if degenerate:
        logger.warning("Delta-tree is degenerate: some children coincide with their parent")
    return DeltaTreeReport(delta, depth, violations, degenerate)


def dyadic_l1_tree(depth: int) -> SeparatedTreeSystem:
    """Dyadic interval system in weighted l1 of dimension 2^depth, separated with epsilon 0."""
    if depth < 1:
        raise TreeError(f"Dyadic tree needs depth at least 1, got {depth}")
    dimension = 2**depth
    weights = tuple(Fraction(1, dimension) for _ in range(dimension))

    def indicator(j: int, height: int) -> Coordinates:
        level = j.bit_length() - 1
        width = 2 ** (depth - level)
        start = (j - 2**level) * width
        return tuple(
            Fraction(height) if start <= i < start + width else Fraction(0) for i in range(dimension)
        )

    vectors = tuple(indicator(j, 2 ** (j.bit_length() - 1)) for j in range(1, 2 ** (depth + 1)))
    functionals = {j: indicator(2 * j, 1) for j in range(1, 2**depth)}
    odd_functionals = {j: indicator(2 * j + 1, 1) for j in range(1, 2**depth)}
    tree = DeltaTree(vectors, NormSpec(NormTag.WEIGHTED_L1, weights), Fraction(1), depth)
    return SeparatedTreeSystem(tree, functionals, Fraction(0), odd_functionals)


def verify_tail_separation(system: SeparatedTreeSystem) -> WitnessReport:
    """Functional norms and both tail inequalities of a separated system."""
    tree = system.tree
    eps = system.epsilon
    top = tree.max_index
    report = WitnessReport()

    heavy = [
        j
        for functional_set in (system.functionals, system.odd_functionals)
        for j, functional in functional_set.items()
        if dual_norm(functional, tree.norm) > 1
    ]
    report.clauses.append(
        ClauseResult(
            "functional_norms",
            f"{SEPARATION_ANCHOR}: functionals have norm at most 1",
            not heavy,
            {"failing_nodes": heavy},
        )
    )

    for name, functionals, near, far in (
        ("even_tail", system.functionals, 0, 1),
        ("odd_tail", system.odd_functionals, 1, 0),
    ):
        failures = []
        for j, functional in sorted(functionals.items()):
            for m in tail_indices(2 * j + near, top):
                if not abs(pair(functional, tree.vector(m), tree.norm)) >= 1 - eps:
                    failures.append((j, m))
            for m in tail_indices(2 * j + far, top):
                if not abs(pair(functional, tree.vector(m), tree.norm)) <= eps:
                    failures.append((j, m))
        report.clauses.append(
            ClauseResult(
                name,
                f"{SEPARATION_ANCHOR}: functional separates the two child tails",
                not failures,
                {"failures": failures[:20], "epsilon": eps, "nodes": len(functionals)},
            )
        )
    return report


def _parallelogram_embedding(
    d: DiamondGraph, vector: VectorFunction, origin: Coordinates
) -> Dict[Point, Coordinates]:
    points: Dict[Point, Coordinates] = {d.top: origin, d.bottom: add(origin, vector(1))}
    for quad in d.quadrilaterals:
        j = tree_index(quad.address)
        factor = Fraction(1, 2 ** (len(quad.address) + 1))
        points[quad.a] = add(points[quad.top], scale(vector(2 * j), factor))
        points[quad.b] = add(points[quad.top], scale(vector(2 * j + 1), factor))
    return points


def stegall_diamond_embedding(system: SeparatedTreeSystem, depth: int) -> Embedding:
    """Embed D_depth through the tree vectors of a separated system."""
    if depth > system.depth:
        raise TreeError(f"Depth {depth} exceeds the system depth {system.depth}")
    eps = system.epsilon
    lower = (1 - 3 * eps) / (2 * (1 + eps))
    if lower <= 0:
        raise PreconditionViolation(
            f"Separation epsilon {eps} leaves lower bound (1 - 3e)/(2(1 + e)) = {lower} <= 0"
        )
    tree = system.tree
    unnormalized = [
        j for j in range(1, 2 ** (depth + 1)) if not approx_eq(norm_of(tree.vector(j), tree.norm), 1)
    ]
    if unnormalized:
        raise PreconditionViolation(
            f"Lower bound (1 - 3e)/(2(1 + e)) needs unit tree vectors; y_j has norm != 1 for j in {unnormalized[:10]}"
        )
    d = diamond(depth)
    points = _parallelogram_embedding(d, tree.vector, tuple(Fraction(0) for _ in tree.vector(1)))
    upper = max(norm_of(tree.vector(j), tree.norm) for j in range(2**depth, 2 ** (depth + 1)))
    logger.info(f"Built separated-tree embedding of D_{depth} with lower bound {lower}")
    return Embedding(
        points,
        tree.norm,
        Certification(lower, upper, PairScope.ALL),
        {"construction": "stegall", "depth": depth, "epsilon": eps},
    )


def edge_correspondence(d: DiamondGraph, embedding: Embedding, vector: VectorFunction) -> List[str]:
    """Edges whose endpoint images do not differ by y_j / 2^k."""
    mismatches = []
    for edge in d.graph.edges:
        expected = scale(vector(tree_index(edge.name)), Fraction(1, 2 ** len(edge.name)))
        actual = subtract(embedding.vector(edge.v), embedding.vector(edge.u))
        if not all(approx_eq(a, b) for a, b in zip(actual, expected)):
            mismatches.append(edge.name)
    return mismatches


def tail_decomposition(
    d: DiamondGraph, address: str, x: str, towards_bottom: bool = False
) -> Dict[int, Fraction]:
    """Coefficients of f(x) - f(top) (or f(bottom) - f(x)) over the tree vectors.

    ``address`` names an edge whose subdiamond contains x; the path runs
    downward inside that subdiamond, so every coefficient is an edge length.
    """
    top, bottom = edge_endpoints(address)
    start, end = (x, bottom) if towards_bottom else (top, x)
    coefficients: Dict[int, Fraction] = {}
    if start == end:
        return coefficients
    path = enumerate_geodesics(d.graph, start, end, limit=1)[0]
    assert path.route is not None
    for k, index in enumerate(path.route):
        edge = d.graph.edges[index]
        if edge.u != path.points[k]:
            raise CertificationError(f"Edge {edge.name} traversed upward between {start} and {end}")
        j = tree_index(edge.name)
        coefficients[j] = coefficients.get(j, Fraction(0)) + edge.length
    return coefficients


def verify_tail_statements(
    d: DiamondGraph,
    embedding: Embedding,
    vector: VectorFunction,
    pairs: Iterable[Tuple[str, str]],
) -> WitnessReport:
    """Expand f-differences inside each side subdiamond as tail combinations."""
    max_index = 2 ** (d.level + 1) - 1
    failures: Dict[str, List[str]] = {"top_form": [], "bottom_form": []}
    checked = 0
    for w, z in pairs:
        subdiamond, _ = smallest_subdiamond(d, w, z)
        for x in (w, z):
            for digit in "0123":
                quarter = subdiamond.address + digit
                if len(quarter) > d.level or not in_subdiamond(x, quarter):
                    continue
                top, bottom = edge_endpoints(quarter)
                allowed = set(tail_indices(tree_index(quarter), max_index))
                for form, towards_bottom, start, end in (
                    ("top_form", False, top, x),
                    ("bottom_form", True, x, bottom),
                ):
                    checked += 1
                    coefficients = tail_decomposition(d, quarter, x, towards_bottom)
                    combination = tuple(Fraction(0) for _ in embedding.vector(x))
                    for j, coefficient in coefficients.items():
                        combination = add(combination, scale(vector(j), coefficient))
                    difference = subtract(embedding.vector(end), embedding.vector(start))
                    ok = (
                        set(coefficients) <= allowed
                        and sum(coefficients.values(), Fraction(0)) == d.distance(start, end)
                        and all(approx_eq(a, b) for a, b in zip(combination, difference))
                    )
                    if not ok:
                        failures[form].append(f"{x} in {quarter}")
    return WitnessReport(
        [
            ClauseResult(
                form,
                f"{SEPARATION_ANCHOR}: side differences are tail combinations",
                not failed,
                {"checked": checked, "failures": failed[:20]},
            )
            for form, failed in failures.items()
        ]
    )


def _unit_direction(dimension: int, norm_spec: NormSpec) -> Coordinates:
    basis = tuple(Fraction(1) if i == 0 else Fraction(0) for i in range(dimension))
    return scale(basis, 1 / norm_of(basis, norm_spec))


LinePieces = Tuple[Scalar, Scalar, Scalar]


def _line_pieces(difference: Coordinates, norm_spec: NormSpec) -> Optional[LinePieces]:
    """(alpha, beta, gamma) with |d + r u| = max(alpha + r, beta - r, gamma) for u the unit e_1.

    None for l2, whose restriction to a line is not piecewise linear.
    """
    zero = Fraction(0)
    head, rest = difference[0], difference[1:]
    tag = norm_spec.tag
    if tag == NormTag.L1:
        tail = norm_of(rest, norm_spec)
        return head + tail, tail - head, zero
    if tag == NormTag.WEIGHTED_L1:
        weights = norm_spec.weights or ()
        if len(weights) != len(difference):
            raise InvalidVectorError(f"Weighted l1 needs {len(difference)} weights, got {len(weights)}")
        tail = sum((w * abs(c) for w, c in zip(weights[1:], rest)), zero)
        return weights[0] * head + tail, tail - weights[0] * head, zero
    if tag == NormTag.LINF:
        return head, -head, max((abs(c) for c in rest), default=zero)
    if tag == NormTag.SUMMING:
        prefixes = list(accumulate(difference))
        return max(prefixes), -min(prefixes), zero
    return None


def _minimal_shift(pieces: Sequence[LinePieces]) -> Optional[Scalar]:
    """Smallest r >= 0 with 4 min_j f_j(r) >= max_j f_j(r), f_j = max(alpha + r, beta - r, gamma)."""
    cuts: Set[Scalar] = set()
    for alpha, beta, gamma in pieces:
        cuts.update(((beta - alpha) / 2, gamma - alpha, beta - gamma))
    starts = [Fraction(0)] + sorted(cut for cut in cuts if cut > 0)
    for i, start in enumerate(starts):
        end = starts[i + 1] if i + 1 < len(starts) else None
        middle = start + 1 if end is None else (start + end) / 2
        # every f_j is linear on [start, end]: keep the extreme intercepts per slope
        low: Dict[int, Scalar] = {}
        high: Dict[int, Scalar] = {}
        for alpha, beta, gamma in pieces:
            intercept, slope = max(
                ((alpha, 1), (beta, -1), (gamma, 0)), key=lambda line: line[0] + line[1] * middle
            )
            low[slope] = min(low.get(slope, intercept), intercept)
            high[slope] = max(high.get(slope, intercept), intercept)
        lower, upper, feasible = start, end, True
        for q, least in low.items():
            for p, most in high.items():
                a, b = 4 * q - p, most - 4 * least
                if a > 0:
                    lower = max(lower, Fraction(b) / a)
                elif a < 0:
                    bound = Fraction(b) / a
                    upper = bound if upper is None else min(upper, bound)
                elif b > 0:
                    feasible = False
        if feasible and (upper is None or lower <= upper):
            return lower
    return None


def _shift_tree(tree: DeltaTree) -> Tuple[Tuple[Coordinates, ...], Optional[Dict[str, Scalar]]]:
    """Translate by -x_1 + r e_1 with the smallest r giving min |x_j| >= max |x_j| / 4."""
    norms = [norm_of(vector, tree.norm) for vector in tree.vectors]
    if min(norms) > 0 and 4 * min(norms) >= max(norms):
        return tree.vectors, None
    root = tree.vector(1)
    differences = [subtract(vector, root) for vector in tree.vectors]
    pieces = [_line_pieces(difference, tree.norm) for difference in differences]
    r: Optional[Scalar] = None
    if all(piece is not None for piece in pieces):
        r = _minimal_shift([piece for piece in pieces if piece is not None])
    if r is None:
        # 4 (r - R) >= r + R holds from r = 5R/3 on
        radius = max(norm_of(difference, tree.norm) for difference in differences)
        r = 5 * radius / 3
    direction = _unit_direction(len(root), tree.norm)
    shifted = tuple(add(difference, scale(direction, r)) for difference in differences)
    logger.warning(f"Shifted delta-tree by -x_1 + {r} * e_1 to bound its norms from below")
    return shifted, {"r": r, "direction": 0}


def tree_to_diamond_partial_embedding(
    tree: DeltaTree, depth: int, cap: Optional[int] = None
) -> Tuple[Embedding, ActivePairSet]:
    """Run the diamond construction backwards from a delta-tree, certified on active pairs."""
    report = verify_delta_tree(tree.vectors, tree.norm)
    if report.violations:
        raise TreeError(f"Not a delta-tree: {'; '.join(report.violations[:5])}")
    if report.delta is None or report.delta == 0:
        raise TreeError("Delta-tree separation must be positive")
    if depth > report.depth:
        raise TreeError(f"Depth {depth} exceeds the tree depth {report.depth}")

    vectors, shift = _shift_tree(tree)

    def vector(j: int) -> Coordinates:
        return vectors[j - 1]

    d = diamond(depth, cap=cap)
    zero = tuple(Fraction(0) for _ in vector(1))
    points = _parallelogram_embedding(d, vector, zero)
    pairs = active_pairs(d)
    embedding = Embedding(points, tree.norm)
    constants = distortion(embedding, d, pairs)
    if not constants.lower > 0:
        raise TreeError(f"Active pair {constants.lower_pair} collapses under the construction")
    embedding.certified = Certification(constants.lower, constants.upper, PairScope.ACTIVE)
    embedding.metadata = {
        "construction": "from-tree",
        "depth": depth,
        "delta": report.delta,
        "shift": shift,
        "lambda": constants.lower,
        "distortion": constants.distortion,
    }
    logger.info(
        f"Built partial embedding of D_{depth}: lambda = {constants.lower}, C = {constants.distortion}"
    )
    return embedding, pairs


def _scan_all_pairs(
    f: Embedding, space: MetricSpace, points: Sequence[Point]
) -> Tuple[Scalar, Tuple[Point, Point], Scalar, Tuple[Point, Point], int]:
    vectors = [f.vector(p) for p in points]
    tag = f.norm.tag
    exact = tag in _EXACT_NORMS and all(is_exact(c) for vector in vectors for c in vector)
    weights: Optional[np.ndarray] = None
    if exact:
        matrix, denominator = scale_to_integers(vectors)
        if tag == NormTag.WEIGHTED_L1:
            if f.norm.weights is None:
                raise CertificationError("Weighted l1 embedding without weights")
            weight_row, weight_scale = scale_to_integers([f.norm.weights])
            weights = weight_row[0]
            denominator *= weight_scale
    else:
        matrix = np.array([[float(c) for c in vector] for vector in vectors], dtype=float)
        denominator = 1
        if tag == NormTag.WEIGHTED_L1:
            weights = np.array([float(w) for w in f.norm.weights or ()], dtype=float)

    lowest: Optional[Tuple[Scalar, Tuple[Point, Point]]] = None
    highest: Optional[Tuple[Scalar, Tuple[Point, Point]]] = None
    for i in range(len(points) - 1):
        distances = [space.distance(points[i], q) for q in points[i + 1:]]
        if any(distance == 0 for distance in distances):
            raise CertificationError(f"Point {points[i]} has a duplicate at distance zero")
        norms = row_norms(matrix[i + 1:] - matrix[i], f.norm, weights)
        ratios = norms.astype(float) / denominator / np.array([float(x) for x in distances])
        for pick, better in ((np.argmin, lambda a, b: a < b), (np.argmax, lambda a, b: a > b)):
            target = ratios[pick(ratios)]
            close = np.flatnonzero(np.isclose(ratios, target, rtol=1e-9, atol=0))
            for k in close:
                if exact:
                    value: Scalar = Fraction(int(norms[k]), denominator) / distances[k]
                else:
                    value = float(ratios[k])
                candidate = (value, (points[i], points[i + 1 + int(k)]))
                if pick is np.argmin:
                    if lowest is None or better(value, lowest[0]):
                        lowest = candidate
                elif highest is None or better(value, highest[0]):
                    highest = candidate
    assert lowest is not None and highest is not None
    count = len(points) * (len(points) - 1) // 2
    return lowest[0], lowest[1], highest[0], highest[1], count


def distortion(
    f: Embedding,
    space: MetricSpace,
    pairs: Union[PairScope, str, ActivePairSet] = PairScope.ALL,
) -> DistortionReport:
    """Extreme ratios |f(x) - f(y)| / d(x, y) over all points of f or a given pair set."""
    if isinstance(pairs, ActivePairSet):
        if not len(pairs):
            raise CertificationError("Distortion needs a nonempty pair set")
        lowest = highest = None
        for x, y in pairs:
            ratio = norm_of(subtract(f.vector(x), f.vector(y)), f.norm) / space.distance(x, y)
            if lowest is None or ratio < lowest[0]:
                lowest = (ratio, (x, y))
            if highest is None or ratio > highest[0]:
                highest = (ratio, (x, y))
        assert lowest is not None and highest is not None
        lower, lower_pair, upper, upper_pair = lowest[0], lowest[1], highest[0], highest[1]
        count = len(pairs)
    else:
        if PairScope(pairs) == PairScope.ACTIVE:
            raise CertificationError("Active distortion needs an explicit ActivePairSet")
        if isinstance(space, FiniteMetricSpace):
            points: Sequence[Point] = space.points
        else:
            points = sorted(f.points, key=str)
        if len(points) < 2:
            raise CertificationError("Distortion needs at least two points")
        lower, lower_pair, upper, upper_pair, count = _scan_all_pairs(f, space, points)

    logger.debug(f"Distortion over {count} pairs: lower {lower}, upper {upper}")
    return DistortionReport(
        lower,
        upper,
        upper / lower if lower > 0 else None,
        lower_pair,
        upper_pair,
        count,
    )


def frechet_embedding(
    space: MetricSpace, points: Sequence[Point], basepoint: Optional[Point] = None
) -> Embedding:
    """Distance-coordinate embedding into l-infinity, isometric on ``points``."""
    if not points:
        raise CertificationError("Frechet embedding needs at least one point")
    base = points[0] if basepoint is None else basepoint
    offsets = [space.distance(base, y) for y in points]
    coordinates = {
        x: tuple(space.distance(x, y) - offset for y, offset in zip(points, offsets)) for x in points
    }
    return Embedding(
        coordinates,
        NormSpec(NormTag.LINF),
        Certification(Fraction(1), Fraction(1), PairScope.ALL),
        {"construction": "frechet", "basepoint": base},
    )


def random_delta_tree(
    depth: int, dimension: int, norm_spec: NormSpec, seed: int, spread: int = 3
) -> DeltaTree:
    """Seeded rational delta-tree: children are x_j +- h_j with random integer h_j != 0."""
    if depth < 0 or dimension < 1:
        raise TreeError(f"Invalid tree shape: depth {depth}, dimension {dimension}")
    rng = np.random.default_rng(seed)

    def draw() -> Coordinates:
        return tuple(Fraction(int(value)) for value in rng.integers(-spread, spread + 1, size=dimension))

    vectors: List[Coordinates] = [draw()]
    for j in range(1, 2**depth):
        step = draw()
        while all(value == 0 for value in step):
            step = draw()
        parent = vectors[j - 1]
        vectors.extend((add(parent, step), subtract(parent, step)))
    report = verify_delta_tree(vectors, norm_spec)
    return DeltaTree(tuple(vectors), norm_spec, report.delta or Fraction(0), depth)
