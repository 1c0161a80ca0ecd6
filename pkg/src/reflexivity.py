"""The test space X_Delta: summing norm, active pairs and the forward embedding."""

import logging
import math
from fractions import Fraction
from itertools import product
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.optimize import linprog, minimize

from .config import get_config
from .core import (
    approx_eq,
    approx_le,
    dual_norm,
    is_exact,
    norm_of,
    pad,
    pair,
    row_norms,
    scale_to_integers,
    subtract,
)
from .errors import InvalidVectorError, WitnessInvariantError
from .types import (
    ActivePairPredicate,
    BasicConstantEstimate,
    ClauseResult,
    Coordinates,
    ForwardCheckReport,
    NormSpec,
    NormTag,
    ReflexivityWitness,
    Scalar,
)

logger = logging.getLogger(__name__)

L1 = NormSpec(NormTag.L1)
SUMMING = NormSpec(NormTag.SUMMING)
LINF = NormSpec(NormTag.LINF)

IntPair = Tuple[Tuple[int, ...], Tuple[int, ...]]

_SIGN_SEARCH_LIMIT = 10


def summing_norm(x: Sequence[Scalar]) -> Scalar:
    """Largest absolute prefix sum."""
    return norm_of(x, SUMMING)


def is_active(
    x: Sequence[Scalar], y: Sequence[Scalar], delta: Union[Scalar, ActivePairPredicate]
) -> bool:
    """|x - y|_1 <= delta * |x - y|_s, exactly on rational input."""
    if isinstance(delta, ActivePairPredicate):
        delta = delta.delta
    length = max(len(x), len(y))
    z = subtract(pad(x, length), pad(y, length))
    return approx_le(norm_of(z, L1), delta * summing_norm(z))


def positive_decomposition(z: Sequence[Scalar]) -> Tuple[Coordinates, Coordinates]:
    """Positive and negative parts: z = x1 - x2 with both parts nonnegative."""
    zero = Fraction(0)
    positive = tuple(value if value > 0 else zero for value in z)
    negative = tuple(-value if value < 0 else zero for value in z)
    return positive, negative


def _column_matrix(vectors: Sequence[Coordinates]) -> np.ndarray:
    dimensions = {len(vector) for vector in vectors}
    if len(dimensions) != 1:
        raise InvalidVectorError(f"Vectors have mixed dimensions {sorted(dimensions)}")
    return np.array([[float(c) for c in vector] for vector in vectors], dtype=float).T


def _prefix_lp(matrix: np.ndarray, objective_rows: np.ndarray) -> Tuple[float, int]:
    """max over k, rows r of r . (prefix of a) subject to |matrix a|_inf <= 1."""
    dimension, count = matrix.shape
    bounds = [(None, None)] * count
    a_ub = np.vstack((matrix, -matrix))
    b_ub = np.ones(2 * dimension)
    best, programs = 0.0, 0
    for k in range(1, count):
        for row in objective_rows:
            c = np.zeros(count)
            c[:k] = -row[:k]
            result = linprog(c, A_ub=a_ub, b_ub=b_ub, bounds=bounds, method="highs")
            programs += 1
            if result.status != 0:
                raise InvalidVectorError(f"Basic constant program failed: {result.message}")
            best = max(best, -result.fun)
    return best, programs


def basic_constant(
    vectors: Sequence[Coordinates],
    norm_spec: NormSpec,
    resolution: Optional[int] = None,
) -> BasicConstantEstimate:
    """Upper estimate of sup_k |sum_{i<=k} a_i y_i| / |sum_i a_i y_i|.

    Small l1 dimensions are solved exactly by sign-vector programs; above
    that the l1 operator norms of the prefix projections bound it from above.
    """
    if resolution is None:
        resolution = get_config().run.samples
    matrix = _column_matrix(vectors)
    dimension, count = matrix.shape
    if np.linalg.matrix_rank(matrix) < count:
        raise InvalidVectorError("Basic constant needs linearly independent vectors")
    if count == 1:
        return BasicConstantEstimate(1.0, "trivial", 0)

    tag = norm_spec.tag
    if tag in (NormTag.LINF, NormTag.SUMMING):
        if tag == NormTag.SUMMING:
            matrix = np.tril(np.ones((dimension, dimension))) @ matrix
        # |Pa|_inf is the max over coordinates of a linear form; the feasible set is symmetric
        value, programs = _prefix_lp(matrix, matrix)
        method = "linear-programming"
    elif tag == NormTag.L2:
        pseudo = np.linalg.pinv(matrix)
        value = max(
            float(np.linalg.norm(matrix[:, :k] @ pseudo[:k, :], 2)) for k in range(1, count)
        )
        method, programs = "spectral", 0
    else:
        weights = np.ones(dimension)
        if tag == NormTag.WEIGHTED_L1:
            weights = np.array([float(w) for w in norm_spec.weights or ()], dtype=float)
        if dimension <= _SIGN_SEARCH_LIMIT:
            value, programs = _l1_prefix_lp(matrix, weights)
            method = "sign-vector linear programming"
        else:
            value = _l1_projection_bound(matrix, weights)
            method, programs = "projection-norm", 0

    logger.info(f"Basic constant estimate {value:.6f} via {method}")
    return BasicConstantEstimate(max(1.0, value), method, resolution, programs)


def _l1_prefix_lp(matrix: np.ndarray, weights: np.ndarray) -> Tuple[float, int]:
    dimension, count = matrix.shape
    # variables (a, t): -t <= matrix a <= t, sum w t <= 1
    identity = np.eye(dimension)
    a_ub = np.vstack(
        (
            np.hstack((matrix, -identity)),
            np.hstack((-matrix, -identity)),
            np.hstack((np.zeros((1, count)), weights[None, :])),
        )
    )
    b_ub = np.concatenate((np.zeros(2 * dimension), [1.0]))
    bounds = [(None, None)] * count + [(0, None)] * dimension
    best, programs = 0.0, 0
    for signs in product((1.0, -1.0), repeat=dimension - 1):
        sigma = np.array((1.0,) + signs) * weights
        for k in range(1, count):
            c = np.zeros(count + dimension)
            c[:k] = -(sigma @ matrix[:, :k])
            result = linprog(c, A_ub=a_ub, b_ub=b_ub, bounds=bounds, method="highs")
            programs += 1
            if result.status != 0:
                raise InvalidVectorError(f"Basic constant program failed: {result.message}")
            best = max(best, -result.fun)
    return best, programs


def _l1_projection_bound(matrix: np.ndarray, weights: np.ndarray) -> float:
    """max_k of the weighted l1 operator norm of a -> prefix_k(a), read on the span."""
    pseudo = np.linalg.pinv(matrix)
    count = matrix.shape[1]
    best = 0.0
    for k in range(1, count):
        projection = matrix[:, :k] @ pseudo[:k, :]
        # |Px|_w <= |W P W^-1|_(1->1) |x|_w, the largest column sum
        scaled = weights[:, None] * np.abs(projection) / weights[None, :]
        best = max(best, float(np.max(scaled.sum(axis=0))))
    return best


def prefix_vector_witness(n: int) -> ReflexivityWitness:
    """Prefix vectors (1, .., 1, 0, .., 0) of l-infinity^n with the first-coordinate functional."""
    if n < 1:
        raise InvalidVectorError(f"Witness dimension must be positive, got {n}")
    vectors = tuple(
        tuple(Fraction(1) if c <= i else Fraction(0) for c in range(n)) for i in range(n)
    )
    functional = tuple(Fraction(1) if c == 0 else Fraction(0) for c in range(n))
    return ReflexivityWitness(vectors, functional, Fraction(1), LINF)


def validate_witness(witness: ReflexivityWitness) -> None:
    """Raise if some |y_i| != 1, |f| != 1 or f(y_i) != theta."""
    problems: List[str] = []
    if not 0 < witness.theta <= 1:
        problems.append(f"theta = {witness.theta} is outside (0, 1]")
    if not approx_eq(dual_norm(witness.functional, witness.norm), 1):
        problems.append("functional does not have norm 1")
    for i, vector in enumerate(witness.vectors, start=1):
        if len(vector) != len(witness.functional):
            problems.append(f"y_{i} has dimension {len(vector)}")
            continue
        if not approx_eq(norm_of(vector, witness.norm), 1):
            problems.append(f"y_{i} does not have norm 1")
        if not approx_eq(pair(witness.functional, vector, witness.norm), witness.theta):
            problems.append(f"f(y_{i}) != theta")
    if problems:
        logger.error(f"Error validating reflexivity witness: {'; '.join(problems)}")
        raise WitnessInvariantError("; ".join(problems))


def sample_active_pairs(
    n: int, delta: Scalar, count: int, seed: int, max_rejections: int = 200
) -> List[IntPair]:
    """Seeded integer pairs (u, v) whose difference is active.

    Differences are drawn from [-3, 3]^n and kept when active, so totals near
    zero show up. When none of ``max_rejections`` draws is active the pair is
    built as p - q with p, q >= 0 and |q|_1 small against |p|_1 instead.
    """
    rng = np.random.default_rng(seed)
    delta = Fraction(delta)
    pairs: List[IntPair] = []
    fallbacks = 0
    for _ in range(count):
        block = rng.integers(-3, 4, size=(max_rejections, n))
        lengths = np.abs(block).sum(axis=1)
        summing = np.abs(np.cumsum(block, axis=1)).max(axis=1)
        hits = np.flatnonzero(
            (lengths > 0) & (lengths * delta.denominator <= summing * delta.numerator)
        )
        if hits.size:
            z = block[hits[0]]
        else:
            z = _certified_difference(rng, n, delta)
            fallbacks += 1
        u = rng.integers(-3, 4, size=n)
        v = u - z
        pairs.append((tuple(int(c) for c in u), tuple(int(c) for c in v)))
    if fallbacks:
        logger.debug(f"{fallbacks} of {count} active pairs came from the nonnegative construction")
    return pairs


def _certified_difference(rng: np.random.Generator, n: int, delta: Fraction) -> np.ndarray:
    p = rng.integers(0, 4, size=n)
    if not p.any():
        p[int(rng.integers(0, n))] = 1
    q = rng.integers(0, 3, size=n)
    while int(q.sum()) * (delta + 1) > int(p.sum()) * (delta - 1):
        q[int(np.argmax(q))] = 0
    z = p - q
    return -z if rng.random() < 0.5 else z


def _rational_ceiling(value: float, digits: int = 6) -> Fraction:
    return Fraction(math.ceil(value * 10**digits), 10**digits)


def forward_embedding_check(
    witness: ReflexivityWitness,
    delta: Optional[Scalar] = None,
    sample_pairs: Optional[Sequence[Tuple[Sequence[int], Sequence[int]]]] = None,
    samples: Optional[int] = None,
    seed: Optional[int] = None,
) -> ForwardCheckReport:
    """Check theta/(B delta) |u - v|_1 <= |Tu - Tv| <= |u - v|_1 on active pairs."""
    validate_witness(witness)
    settings = get_config()
    delta = Fraction(settings.construction.delta if delta is None else delta)
    if samples is None:
        samples = settings.run.samples
    if seed is None:
        seed = settings.run.seed

    basic = witness.basic_constant
    if basic is None:
        estimate = basic_constant(witness.vectors, witness.norm)
        basic = _rational_ceiling(estimate.value + settings.numeric.lp_tolerance)
    lower_factor = Fraction(witness.theta) / (basic * delta)

    n = len(witness.vectors)
    pairs = list(sample_pairs) if sample_pairs is not None else sample_active_pairs(n, delta, samples, seed)
    differences = []
    skipped = 0
    for u, v in pairs:
        if not is_active(u, v, delta):
            skipped += 1
            continue
        differences.append(subtract(pad(u, n), pad(v, n)))
    if skipped:
        logger.warning(f"Skipped {skipped} inactive pairs")

    violations = []
    min_ratio: Optional[Fraction] = None
    max_ratio: Optional[Fraction] = None
    exact = witness.norm.tag != NormTag.L2 and all(
        is_exact(c) for vector in witness.vectors for c in vector
    )
    if differences:
        if exact:
            images, denominator = scale_to_integers(witness.vectors)
            weights = None
            if witness.norm.tag == NormTag.WEIGHTED_L1:
                weight_row, weight_scale = scale_to_integers([witness.norm.weights or ()])
                weights = weight_row[0]
                denominator *= weight_scale
            steps = np.array([[int(c) for c in z] for z in differences], dtype=object)
            mapped = row_norms(steps.dot(images), witness.norm, weights)
        else:
            images = np.array([[float(c) for c in vector] for vector in witness.vectors])
            denominator = 1
            mapped = row_norms(
                np.array([[float(c) for c in z] for z in differences]) @ images, witness.norm
            )

        for z, image_norm in zip(differences, mapped):
            length = norm_of(z, L1)
            image: Scalar = Fraction(int(image_norm), denominator) if exact else float(image_norm)
            lower_ok = approx_le(lower_factor * length, image)
            upper_ok = approx_le(image, length)
            if length > 0:
                ratio = Fraction(image) / length if exact else Fraction(float(image)) / length
                min_ratio = ratio if min_ratio is None else min(min_ratio, ratio)
                max_ratio = ratio if max_ratio is None else max(max_ratio, ratio)
            if not (lower_ok and upper_ok) and len(violations) < 20:
                violations.append(
                    {"difference": list(z), "l1": length, "image": image, "lower_ok": lower_ok}
                )

    passed = not violations
    logger.info(
        f"Forward embedding check on {len(differences)} active pairs: {'pass' if passed else 'FAIL'}"
    )
    return ForwardCheckReport(passed, lower_factor, len(differences), min_ratio, max_ratio, violations)


def decomposition_lipschitz_bound(
    vectors: Sequence[Coordinates],
    constant: Scalar,
    y: Sequence[Scalar],
    z: Sequence[Scalar],
    norm_spec: NormSpec,
    delta: Optional[Scalar] = None,
) -> ClauseResult:
    """|T(y+z) - T(y)| <= C |z|_1 routed through the positive and negative parts of z."""
    if delta is None:
        delta = get_config().construction.delta
    n = len(vectors)
    y, z = pad(y, n), pad(z, n)
    positive, negative = positive_decomposition(z)

    def image(x: Sequence[Scalar]) -> Coordinates:
        total: Coordinates = tuple(Fraction(0) for _ in vectors[0])
        for coefficient, vector in zip(x, vectors):
            total = tuple(t + coefficient * c for t, c in zip(total, vector))
        return total

    shifted = tuple(a + b for a, b in zip(y, positive))
    moved = tuple(a + b for a, b in zip(y, z))
    legs_active = is_active(moved, shifted, delta) and is_active(shifted, y, delta)
    first = norm_of(subtract(image(moved), image(shifted)), norm_spec)
    second = norm_of(subtract(image(shifted), image(y)), norm_spec)
    total = norm_of(subtract(image(moved), image(y)), norm_spec)
    bound = constant * norm_of(z, L1)
    passed = legs_active and approx_le(total, first + second) and approx_le(first + second, bound)
    return ClauseResult(
        "decomposition_lipschitz",
        "active-pair Lipschitz bound extends to all of l1",
        passed,
        {"total": total, "first_leg": first, "second_leg": second, "bound": bound},
        "" if legs_active else "a decomposition leg is not active",
    )


def convex_hull_separation(
    points: Sequence[Sequence[Scalar]], split: int, norm_spec: NormSpec = L1
) -> float:
    """Distance between conv(u_1..u_k) and conv(u_{k+1}..u_m)."""
    m = len(points)
    if not 1 <= split < m:
        raise InvalidVectorError(f"Split {split} must satisfy 1 <= k < {m}")
    matrix = _column_matrix([tuple(point) for point in points])
    dimension = matrix.shape[0]
    left, right = matrix[:, :split], -matrix[:, split:]
    difference = np.hstack((left, right))
    simplex = np.zeros((2, m))
    simplex[0, :split] = 1
    simplex[1, split:] = 1

    if norm_spec.tag == NormTag.L2:
        start = np.concatenate((np.full(split, 1 / split), np.full(m - split, 1 / (m - split))))
        result = minimize(
            lambda x: float(np.sum((difference @ x) ** 2)),
            start,
            method="SLSQP",
            bounds=[(0, 1)] * m,
            constraints=[{"type": "eq", "fun": lambda x: simplex @ x - 1}],
        )
        return float(np.sqrt(max(result.fun, 0.0)))

    if norm_spec.tag == NormTag.SUMMING:
        difference = np.tril(np.ones((dimension, dimension))) @ difference
    if norm_spec.tag in (NormTag.LINF, NormTag.SUMMING):
        slack_count, slack_weights = 1, np.ones(1)
        slack_block = -np.ones((dimension, 1))
    else:
        slack_count = dimension
        slack_weights = np.ones(dimension)
        if norm_spec.tag == NormTag.WEIGHTED_L1:
            slack_weights = np.array([float(w) for w in norm_spec.weights or ()], dtype=float)
        slack_block = -np.eye(dimension)
    c = np.concatenate((np.zeros(m), slack_weights))
    a_ub = np.vstack(
        (np.hstack((difference, slack_block)), np.hstack((-difference, slack_block)))
    )
    b_ub = np.zeros(2 * dimension)
    a_eq = np.hstack((simplex, np.zeros((2, slack_count))))
    result = linprog(
        c,
        A_ub=a_ub,
        b_ub=b_ub,
        A_eq=a_eq,
        b_eq=np.ones(2),
        bounds=[(0, None)] * (m + slack_count),
        method="highs",
    )
    if result.status != 0:
        raise InvalidVectorError(f"Convex hull program failed: {result.message}")
    return float(result.fun)
