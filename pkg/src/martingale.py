"""Vector-valued step martingales extracted from embeddings of thick families.

Functions are piecewise constant on left-open intervals (a_i, a_{i+1}] of
(0, 1]. The extractor walks the oracle's marked geodesics: odd steps insert
the witness w-points, even steps fork through z or z~, picking the side whose
normalized difference is larger. Every bound the trace claims is re-checked
by :func:`check_trace`.
"""

import logging
from bisect import bisect_right
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

from .core import approx_eq, approx_le, norm_of, scale, subtract
from .embeddings import distortion
from .errors import CertificationError, GeodesicError, OracleError, PreconditionViolation
from .geodesics import b_equivalence_ratio, c_geodesic, partition_of, refine_partition
from .oracles import WitnessOracle
from .types import (
    Branch,
    BranchChoice,
    Certification,
    ClauseResult,
    Coordinates,
    Embedding,
    ExtractionMode,
    MartingaleStep,
    MartingaleTrace,
    MetricSpace,
    NormSpec,
    Partition,
    Point,
    PointSequence,
    Scalar,
    StepFunction,
    ThickWitness,
    CGeodesic,
)

logger = logging.getLogger(__name__)

MARTINGALE_ANCHOR = "martingale extraction"


def _values_over(
    f: Embedding, points: Sequence[Point], partition: Partition
) -> Tuple[Coordinates, ...]:
    values = []
    lengths = partition.lengths()
    for k, (p, q) in enumerate(zip(points, points[1:])):
        values.append(scale(subtract(f.vector(q), f.vector(p)), 1 / lengths[k]))
    return tuple(values)


def _geodesic_partition(space: MetricSpace, points: Sequence[Point], u: Point, v: Point) -> Partition:
    total = space.distance(u, v)
    if total == 0:
        raise GeodesicError("Endpoints of the geodesic coincide")
    positions = [space.distance(u, p) for p in points]
    for k, (p, q) in enumerate(zip(points, points[1:])):
        if positions[k + 1] < positions[k]:
            raise GeodesicError(f"d(u, .) decreases between {p} and {q}")
        if positions[k + 1] == positions[k]:
            raise GeodesicError(f"Zero-length segment between {p} and {q}")
        if space.distance(p, q) != positions[k + 1] - positions[k]:
            raise GeodesicError(f"Segment ({p}, {q}) does not lie on a geodesic from {u}")
    if positions[0] != 0 or positions[-1] != total:
        raise GeodesicError(f"Sequence does not run from {u} to {v}")
    return Partition(tuple(position / total for position in positions))


def step_from_geodesic(
    f: Embedding, sequence: PointSequence, u: Point, v: Point, space: Optional[MetricSpace] = None
) -> StepFunction:
    """Slopes of f along a geodesic, with d(u, v) rescaled to 1."""
    host = space if space is not None else sequence.space
    partition = _geodesic_partition(host, sequence.points, u, v)
    return StepFunction(partition, _values_over(f, sequence.points, partition), f.norm)


def step_from_cgeodesic(f: Embedding, geodesic: CGeodesic, partition: Partition) -> StepFunction:
    """Slopes of f along a C-geodesic against an attached partition."""
    points = geodesic.sequence.points
    if len(points) != len(partition):
        raise GeodesicError(
            f"Partition has {len(partition)} breakpoints for {len(points)} geodesic points"
        )
    return StepFunction(partition, _values_over(f, points, partition), f.norm)


def conditional_expectation(fine: StepFunction, coarse: Partition) -> StepFunction:
    """Length-weighted averages of ``fine`` over the coarse intervals."""
    fine_points = fine.partition.breakpoints
    index = {point: i for i, point in enumerate(fine_points)}
    missing = [point for point in coarse.breakpoints if point not in index]
    if missing:
        raise GeodesicError(f"Coarse breakpoints {missing} are not breakpoints of the fine partition")

    lengths = fine.partition.lengths()
    dimension = len(fine.values[0])
    averaged = []
    for left, right in zip(coarse.breakpoints, coarse.breakpoints[1:]):
        total = [Fraction(0)] * dimension
        for i in range(index[left], index[right]):
            total = [acc + lengths[i] * value for acc, value in zip(total, fine.values[i])]
        averaged.append(tuple(acc / (right - left) for acc in total))
    return StepFunction(coarse, tuple(averaged), fine.norm)


def _value_at(f: StepFunction, left: Fraction) -> Coordinates:
    return f.values[bisect_right(f.partition.breakpoints, left) - 1]


def l1_distance(f: StepFunction, g: StepFunction) -> Scalar:
    """Integral over (0, 1] of the norm of f - g."""
    merged = sorted(set(f.partition.breakpoints) | set(g.partition.breakpoints))
    total: Scalar = Fraction(0)
    for left, right in zip(merged, merged[1:]):
        total += norm_of(subtract(_value_at(f, left), _value_at(g, left)), f.norm) * (right - left)
    return total


def sup_norm(f: StepFunction) -> Scalar:
    return max(norm_of(value, f.norm) for value in f.values)


def choose_branch(
    f: Embedding,
    w_prev: Point,
    z: Point,
    z_tilde: Point,
    w_next: Point,
    weights: Tuple[Scalar, Scalar],
    separation: Scalar,
    lower: Optional[Scalar] = None,
) -> BranchChoice:
    """Pick the fork point whose slope change is larger; ties go to z.

    ``weights`` are the lengths (A, B) before and after the fork point and
    ``separation`` is d(z, z~).
    """
    left, right = weights
    if left <= 0 or right <= 0:
        raise PreconditionViolation(f"Fork weights must be positive, got ({left}, {right})", (z, z_tilde))
    if lower is None:
        if f.certified is None:
            raise PreconditionViolation("Branch rule needs a certified lower Lipschitz constant")
        lower = f.certified.lower

    gap = norm_of(subtract(f.vector(z), f.vector(z_tilde)), f.norm)
    if not approx_le(lower * separation, gap):
        raise PreconditionViolation(
            f"|f({z}) - f({z_tilde})| = {gap} is below {lower} * d = {lower * separation}",
            (z, z_tilde),
        )

    def side(point: Point) -> Scalar:
        after = scale(subtract(f.vector(w_next), f.vector(point)), 1 / right)
        before = scale(subtract(f.vector(point), f.vector(w_prev)), 1 / left)
        return norm_of(subtract(after, before), f.norm)

    value_z, value_z_tilde = side(z), side(z_tilde)
    bound = lower / 2 * separation * (1 / left + 1 / right)
    choice = Branch.Z if value_z >= value_z_tilde else Branch.Z_TILDE
    return BranchChoice(
        choice, value_z, value_z_tilde, bound, approx_le(bound, max(value_z, value_z_tilde))
    )


def interval_lower_bound(
    a: Scalar, b: Scalar, x: Coordinates, y: Coordinates, z: Coordinates, norm_spec: NormSpec
) -> Tuple[Scalar, Scalar, bool]:
    """A|x - z| + B|y - z| against |x - y| min(A, B) / 2."""
    if a <= 0 or b <= 0:
        raise PreconditionViolation(f"Interval weights must be positive, got ({a}, {b})")
    lhs = a * norm_of(subtract(x, z), norm_spec) + b * norm_of(subtract(y, z), norm_spec)
    rhs = norm_of(subtract(x, y), norm_spec) * min(a, b) / 2
    return lhs, rhs, approx_le(rhs, lhs)


def _normalized(f: Embedding, factor: Scalar, lower: Scalar) -> Embedding:
    return Embedding(
        {point: scale(vector, factor) for point, vector in f.points.items()},
        f.norm,
        Certification(lower, Fraction(1) if isinstance(factor, Fraction) else 1.0),
    )


def _witnesses(oracle: WitnessOracle, sequence: Sequence[Point]) -> List[ThickWitness]:
    witnesses = []
    for x, y in zip(sequence, sequence[1:]):
        try:
            witness = oracle(x, y)
        except CertificationError as error:
            logger.error(f"Error building witness for segment ({x}, {y}): {error}")
            raise OracleError(f"Oracle failed on segment ({x}, {y}): {error}", segment=(x, y)) from error
        if witness.w[0] != x or witness.w[-1] != y:
            raise OracleError(f"Witness for ({x}, {y}) does not start and end at the segment", (x, y))
        witnesses.append(witness)
    return witnesses


def _fork_sequence(witnesses: Sequence[ThickWitness], picks: Sequence[Sequence[Point]]) -> List[Point]:
    merged: List[Point] = [witnesses[0].w[0]]
    for witness, chosen in zip(witnesses, picks):
        for z_i, w_i in zip(chosen, witness.w[1:]):
            merged.extend((z_i, w_i))
    return merged


def extract_martingale(
    f: Embedding,
    oracle: WitnessOracle,
    steps: int,
    mode: ExtractionMode = ExtractionMode.GEODESIC,
    space: Optional[MetricSpace] = None,
    u: Optional[Point] = None,
    v: Optional[Point] = None,
) -> MartingaleTrace:
    """Run the fork construction for ``steps`` steps and certify the trace."""
    mode = ExtractionMode(mode)
    if steps < 0:
        raise ValueError(f"Step count must be nonnegative, got {steps}")
    host = space if space is not None else oracle.space
    if u is None or v is None:
        u, v = oracle.base
    total = host.distance(u, v)
    if total == 0:
        raise PreconditionViolation("Base points coincide", (u, v))

    if f.certified is not None:
        lower, upper = f.certified.lower, f.certified.upper
        lower_pair: Optional[Tuple[Point, Point]] = None
    else:
        report = distortion(f, host)
        lower, upper, lower_pair = report.lower, report.upper, report.lower_pair
    if not lower > 0 or not upper > 0:
        raise PreconditionViolation(
            f"Embedding is not bilipschitz: lower constant {lower}, upper constant {upper}",
            lower_pair,
        )
    lower_hat = lower / upper
    normalized = _normalized(f, 1 / (upper * total), lower_hat)
    c = oracle.width_constant

    def attach(points: Sequence[Point], previous: Sequence[Point], partition: Partition) -> Partition:
        if mode == ExtractionMode.GEODESIC:
            return _geodesic_partition(host, points, u, v)
        parent = c_geodesic(PointSequence(tuple(previous), host))
        return refine_partition(partition, parent, c_geodesic(PointSequence(tuple(points), host)))

    try:
        normalized.vector(u)
        normalized.vector(v)
        sequence: List[Point] = [u, v]
        partition = Partition((Fraction(0), Fraction(1)))
        function = StepFunction(partition, _values_over(normalized, sequence, partition), f.norm)
        trace_steps = [MartingaleStep(0, tuple(sequence), function)]
        witnesses: List[ThickWitness] = []

        for k in range(1, steps + 1):
            choices: List[BranchChoice] = []
            if k % 2 == 1:
                witnesses = _witnesses(oracle, sequence)
                fresh = [sequence[0]]
                for witness in witnesses:
                    fresh.extend(witness.w[1:])
            else:
                z_points = _fork_sequence(witnesses, [wit.z for wit in witnesses])
                z_partition = attach(z_points, sequence, partition)
                if mode == ExtractionMode.ISO:
                    tilde_points = _fork_sequence(witnesses, [wit.z_tilde for wit in witnesses])
                    if attach(tilde_points, sequence, partition) != z_partition:
                        raise OracleError("Fork sequences induce different partitions")
                breakpoints = z_partition.breakpoints
                picks = []
                position = 1
                for witness in witnesses:
                    chosen = []
                    for i, (z_i, z_tilde_i) in enumerate(zip(witness.z, witness.z_tilde)):
                        weights = (
                            breakpoints[position] - breakpoints[position - 1],
                            breakpoints[position + 1] - breakpoints[position],
                        )
                        choice = choose_branch(
                            normalized,
                            witness.w[i],
                            z_i,
                            z_tilde_i,
                            witness.w[i + 1],
                            weights,
                            host.distance(z_i, z_tilde_i) / total,
                        )
                        choices.append(choice)
                        chosen.append(z_i if choice.choice == Branch.Z else z_tilde_i)
                        position += 2
                    picks.append(chosen)
                fresh = _fork_sequence(witnesses, picks)

            new_partition = attach(fresh, sequence, partition)
            new_function = StepFunction(
                new_partition, _values_over(normalized, fresh, new_partition), f.norm
            )
            bound = c * lower_hat / 4 if k % 2 == 0 else None
            trace_steps.append(
                MartingaleStep(
                    k,
                    tuple(fresh),
                    new_function,
                    choices,
                    l1_distance(new_function, function),
                    bound,
                )
            )
            logger.debug(f"Martingale step {k}: {len(fresh)} points")
            sequence, partition, function = fresh, new_partition, new_function
    except KeyError as error:
        raise PreconditionViolation(str(error.args[0] if error.args else error)) from error

    sup_bound: Scalar = Fraction(1)
    if mode == ExtractionMode.ISO:
        final = c_geodesic(PointSequence(tuple(sequence), host))
        sup_bound = b_equivalence_ratio(partition, partition_of(final)) * final.constant

    trace = MartingaleTrace(mode, trace_steps, lower, upper, c, total, sup_bound)
    check_trace(trace)
    logger.info(
        f"Extracted {steps}-step martingale in {mode.value} mode: "
        f"{'pass' if trace.passed else 'FAIL'}"
    )
    return trace


def _functions_equal(f: StepFunction, g: StepFunction) -> bool:
    if f.partition != g.partition:
        return False
    return all(
        approx_eq(a, b) for left, right in zip(f.values, g.values) for a, b in zip(left, right)
    )


def check_trace(trace: MartingaleTrace) -> List[ClauseResult]:
    """Re-verify every trace invariant and store the clause results on the trace."""
    steps = trace.steps
    functions = trace.functions
    clauses: List[ClauseResult] = []

    unnested = [
        step.index
        for previous, step in zip(steps, steps[1:])
        if not set(previous.function.partition.breakpoints)
        <= set(step.function.partition.breakpoints)
    ]
    clauses.append(
        ClauseResult(
            "nested",
            f"{MARTINGALE_ANCHOR}: partitions refine each other",
            not unnested,
            {"failing_steps": unnested},
        )
    )

    broken = [
        step.index
        for previous, step in zip(steps, steps[1:])
        if step.index not in unnested
        and not _functions_equal(
            conditional_expectation(step.function, previous.function.partition), previous.function
        )
    ]
    clauses.append(
        ClauseResult(
            "martingale_property",
            f"{MARTINGALE_ANCHOR}: conditional expectation recovers the previous step",
            not broken and not unnested,
            {"failing_steps": broken},
        )
    )

    sup_norms = [sup_norm(function) for function in functions]
    largest = max(sup_norms)
    bounded = approx_le(largest, trace.sup_bound)
    if not bounded and trace.mode == ExtractionMode.ISO:
        flag = f"sup norm {largest} exceeds B*C = {trace.sup_bound}"
        if flag not in trace.flags:
            trace.flags.append(flag)
        logger.warning(f"Iso-mode trace flagged: {flag}")
    clauses.append(
        ClauseResult(
            "bounded",
            f"{MARTINGALE_ANCHOR}: step functions are uniformly bounded",
            bounded or trace.mode == ExtractionMode.ISO,
            {"sup_norms": sup_norms, "bound": trace.sup_bound},
            "" if bounded else "bound exceeded; flagged",
        )
    )

    lower_hat = trace.lower / trace.upper
    required = trace.width_constant * lower_hat / 4
    differences: Dict[int, Scalar] = {}
    short = []
    for step in steps:
        if step.index > 0 and step.index % 2 == 0:
            differences[step.index] = step.l1_from_previous
            if not approx_le(required, step.l1_from_previous):
                short.append(step.index)
    clauses.append(
        ClauseResult(
            "even_step_divergence",
            f"{MARTINGALE_ANCHOR}: even differences stay above c * l / 4",
            not short,
            {"differences": differences, "bound": required, "failing_steps": short},
        )
    )

    contraction_failures = []
    for n in range(1, (len(steps) - 2) // 2 + 1):
        odd_gap = l1_distance(functions[2 * n + 1], functions[2 * n - 1])
        even_gap = l1_distance(functions[2 * n], functions[2 * n - 1])
        if not approx_le(even_gap, odd_gap):
            contraction_failures.append(2 * n + 1)
    clauses.append(
        ClauseResult(
            "contraction",
            f"{MARTINGALE_ANCHOR}: conditional expectation is a contraction",
            not contraction_failures,
            {"failing_steps": contraction_failures},
        )
    )

    failed_forks = [step.index for step in steps for choice in step.choices if not choice.holds]
    clauses.append(
        ClauseResult(
            "branch_dichotomy",
            f"{MARTINGALE_ANCHOR}: one fork side always clears its bound",
            not failed_forks,
            {"failing_steps": sorted(set(failed_forks))},
            "" if not failed_forks else "certified lower constant is wrong",
        )
    )

    trace.clauses = clauses
    return clauses
