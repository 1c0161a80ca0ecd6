"""Acceptance suite: every headline property as a named certificate claim.

Each claim returns a :class:`CertificateReport` carrying the exact values that
justify its verdict. ``quick`` shrinks every scale so the whole suite reruns
in seconds; the full scale matches the published acceptance targets.
"""

import logging
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from .config import get_config
from .core import FiniteMetricSpace, norm_of, shortest_path_metric, subtract
from .embeddings import (
    SEPARATION_ANCHOR,
    distortion,
    dyadic_l1_tree,
    edge_correspondence,
    stegall_diamond_embedding,
    tree_to_diamond_partial_embedding,
    verify_delta_tree,
    verify_tail_separation,
    verify_tail_statements,
)
from .families import DiamondFamily, LaaksoFamily
from .generators import (
    BOTTOM,
    TOP,
    active_pairs,
    diamond,
    diamond_vertex_count,
    inclusion_isometry_check,
    laakso2,
    laakso_vertex_count,
)
from .geodesics import (
    THICK_ANCHOR,
    b_equivalence_ratio,
    c_geodesic,
    enumerate_geodesics,
    laakso_thick_witness,
    partition_of,
    refine_partition,
    verify_thick_witness,
)
from .martingale import MARTINGALE_ANCHOR, choose_branch, extract_martingale, interval_lower_bound
from .oracles import DiamondOracle
from .reflexivity import (
    L1,
    basic_constant,
    convex_hull_separation,
    decomposition_lipschitz_bound,
    forward_embedding_check,
    positive_decomposition,
    prefix_vector_witness,
    summing_norm,
)
from .reports import (
    combine,
    from_distortion,
    from_forward_check,
    from_trace,
    from_tree,
    from_witness,
    log_summary,
    timed,
)
from .serialization import dumps, report_document
from .types import (
    CertificateReport,
    Certification,
    Embedding,
    NormSpec,
    NormTag,
    Partition,
    PointSequence,
)

logger = logging.getLogger(__name__)

_TAIL_STATEMENT_DEPTH = 3
_LIPSCHITZ_SAMPLES = 200


@dataclass(frozen=True)
class Scale:
    """Sizes used by the acceptance claims."""

    diamond_levels: int
    laakso_levels: int
    diamond_inclusion: int
    laakso_inclusion: int
    thick_pairs: int
    thick_level: int
    stegall_depth: int
    martingale_depth: int
    martingale_steps: int
    random_instances: int
    chains: int
    chain_depth: int
    tree_depth: int
    partial_depth: int
    witness_dimension: int
    forward_samples: int


FULL = Scale(
    diamond_levels=6,
    laakso_levels=4,
    diamond_inclusion=4,
    laakso_inclusion=3,
    thick_pairs=100,
    thick_level=3,
    stegall_depth=5,
    martingale_depth=5,
    martingale_steps=6,
    random_instances=10_000,
    chains=1000,
    chain_depth=5,
    tree_depth=6,
    partial_depth=4,
    witness_dimension=16,
    forward_samples=10_000,
)

QUICK = Scale(
    diamond_levels=4,
    laakso_levels=3,
    diamond_inclusion=3,
    laakso_inclusion=2,
    thick_pairs=20,
    thick_level=1,
    stegall_depth=3,
    martingale_depth=3,
    martingale_steps=6,
    random_instances=500,
    chains=100,
    chain_depth=4,
    tree_depth=4,
    partial_depth=3,
    witness_dimension=8,
    forward_samples=1000,
)


def _random_fraction(rng: np.random.Generator, low: int = -9, high: int = 10) -> Fraction:
    return Fraction(int(rng.integers(low, high)), int(rng.integers(1, 7)))


def _random_vector(rng: np.random.Generator, dimension: int) -> Tuple[Fraction, ...]:
    return tuple(_random_fraction(rng) for _ in range(dimension))


def claim_generators(scale: Scale, seed: int) -> CertificateReport:
    diamonds = {}
    for n in range(scale.diamond_levels + 1):
        d = diamond(n)
        diamonds[n] = {
            "vertices": len(d.vertices),
            "edges": len(d.graph.edges),
            "expected_vertices": diamond_vertex_count(n),
            "expected_edges": 4**n,
            "diameter": d.distance(TOP, BOTTOM),
        }
    laakso = {}
    for i in range(scale.laakso_levels + 1):
        x = laakso2(i)
        laakso[i] = {
            "vertices": len(x.vertices),
            "edges": len(x.graph.edges),
            "expected_vertices": laakso_vertex_count(i),
            "expected_edges": 6**i,
            "diameter": x.distance(TOP, BOTTOM),
        }
    counts_ok = all(
        row["vertices"] == row["expected_vertices"]
        and row["edges"] == row["expected_edges"]
        and row["diameter"] == 1
        for row in list(diamonds.values()) + list(laakso.values())
    )

    inclusions = {}
    for n in range(scale.diamond_inclusion):
        report = inclusion_isometry_check(diamond(n), diamond(n + 1))
        inclusions[f"diamond {n}->{n + 1}"] = {"pairs": report.pairs_checked, "passed": report.passed}
    for i in range(scale.laakso_inclusion):
        report = inclusion_isometry_check(laakso2(i), laakso2(i + 1))
        inclusions[f"laakso2 {i}->{i + 1}"] = {"pairs": report.pairs_checked, "passed": report.passed}
    passed = counts_ok and all(entry["passed"] for entry in inclusions.values())
    return CertificateReport(
        "generators",
        "vertex and edge recurrences, isometric inclusions",
        passed,
        {"diamond": diamonds, "laakso2": laakso, "inclusions": inclusions},
    )


def claim_thickness(scale: Scale, seed: int) -> CertificateReport:
    half = Fraction(1, 2)
    family = LaaksoFamily(max_level=scale.thick_level + 2)
    traced = laakso_thick_witness(family, TOP, BOTTOM, half)
    traced_report = verify_thick_witness(family, traced, half)
    width = sum((family.distance(z, zt) for z, zt in zip(traced.z, traced.z_tilde)), Fraction(0))
    hand_trace = {
        "trisections": traced.trisections,
        "n": len(traced.z),
        "w_offsets": [family.distance(TOP, w) for w in traced.w],
        "width": width,
        "clauses_passed": traced_report.passed,
    }
    hand_ok = (
        traced_report.passed
        and traced.trisections == 2
        and len(traced.z) == 5
        and width == Fraction(7, 9)
    )

    rng = np.random.default_rng(seed)
    failures: List[Dict[str, object]] = []
    for _ in range(scale.thick_pairs):
        level = int(rng.integers(0, scale.thick_level + 1))
        paths = enumerate_geodesics(family.level(level).graph, TOP, BOTTOM, limit=64)
        points = paths[int(rng.integers(0, len(paths)))].points
        i, j = sorted(int(k) for k in rng.choice(len(points), size=2, replace=False))
        witness = laakso_thick_witness(family, points[i], points[j], half)
        report = verify_thick_witness(family, witness, half)
        if not report.passed:
            failed = [clause.clause for clause in report.clauses if not clause.passed]
            failures.append({"pair": (points[i], points[j]), "clauses": failed})
    return CertificateReport(
        "thickness",
        THICK_ANCHOR,
        hand_ok and not failures,
        {
            "hand_trace": hand_trace,
            "random_pairs": scale.thick_pairs,
            "failures": failures,
            "width_constant": half,
        },
    )


def claim_stegall(scale: Scale, seed: int) -> CertificateReport:
    parts = []
    for m in range(1, scale.stegall_depth + 1):
        system = dyadic_l1_tree(m)
        embedding = stegall_diamond_embedding(system, m)
        assert embedding.certified is not None
        d = diamond(m)
        measured = distortion(embedding, d)
        parts.append(
            from_distortion(
                f"D_{m}",
                measured,
                lower_at_least=max(Fraction(1, 2), Fraction(embedding.certified.lower)),
                upper_at_most=Fraction(1),
            )
        )
        mismatched = edge_correspondence(d, embedding, system.tree.vector)
        parts.append(
            CertificateReport(
                f"D_{m} edges", SEPARATION_ANCHOR, not mismatched, {"mismatched_edges": mismatched}
            )
        )
        parts.append(from_witness(f"D_{m} tail separation", verify_tail_separation(system)))
        if m <= _TAIL_STATEMENT_DEPTH:
            statements = verify_tail_statements(d, embedding, system.tree.vector, active_pairs(d))
            parts.append(from_witness(f"D_{m} tail statements", statements))
    return combine("stegall_embedding", "separated-tree embedding of diamonds", parts)


def claim_martingale(scale: Scale, seed: int) -> CertificateReport:
    embedding = stegall_diamond_embedding(dyadic_l1_tree(scale.martingale_depth), scale.martingale_depth)
    oracle = DiamondOracle(DiamondFamily(max_level=scale.martingale_depth))
    trace = extract_martingale(embedding, oracle, scale.martingale_steps)
    report = from_trace("martingale_extraction", trace)
    required = Fraction(1, 8)
    even = report.values["even_step_l1"]
    report.values["required_even_step_l1"] = required
    report.passed = report.passed and all(value >= required for value in even.values())
    return report


def claim_branch_rules(scale: Scale, seed: int) -> CertificateReport:
    rng = np.random.default_rng(seed)
    norm_spec = NormSpec(NormTag.L1)
    interval_failures = 0
    branch_failures = 0
    for _ in range(scale.random_instances):
        a, b = Fraction(int(rng.integers(1, 10)), int(rng.integers(1, 7))), Fraction(
            int(rng.integers(1, 10)), int(rng.integers(1, 7))
        )
        x, y, z = (_random_vector(rng, 3) for _ in range(3))
        if not interval_lower_bound(a, b, x, y, z, norm_spec)[2]:
            interval_failures += 1

        points = {name: _random_vector(rng, 3) for name in ("w0", "z", "zt", "w1")}
        gap = norm_of(subtract(points["z"], points["zt"]), norm_spec)
        if gap == 0:
            continue
        separation = Fraction(int(rng.integers(1, 10)), int(rng.integers(1, 7)))
        lower = gap / separation * Fraction(int(rng.integers(1, 5)), 4)
        f = Embedding(points, norm_spec, Certification(lower, lower))
        if not choose_branch(f, "w0", "z", "zt", "w1", (a, b), separation).holds:
            branch_failures += 1
    return CertificateReport(
        "branch_rules",
        f"{MARTINGALE_ANCHOR}: interval estimate and fork dichotomy",
        interval_failures == 0 and branch_failures == 0,
        {
            "instances": scale.random_instances,
            "interval_failures": interval_failures,
            "branch_failures": branch_failures,
        },
    )


def _extension_chain(rng: np.random.Generator, depth: int, detour: bool) -> List[List[str]]:
    """Nested vertex sequences of D_depth, each inserting quadrilateral corners."""
    chain = [[TOP, BOTTOM]]
    addresses = [""]
    length = int(rng.integers(1, depth + 1))
    for step in range(length):
        current = chain[-1]
        refine = rng.random(len(addresses)) < 0.5
        refine[int(rng.integers(0, len(addresses)))] = True
        bend = int(rng.integers(0, len(addresses))) if detour and step == length - 1 else -1
        points, next_addresses = [current[0]], []
        for k, address in enumerate(addresses):
            if k == bend:
                points.extend((f"a{address}", f"b{address}"))
            elif refine[k]:
                side = "a" if rng.random() < 0.5 else "b"
                points.append(f"{side}{address}")
                next_addresses.extend(
                    (address + "0", address + "1") if side == "a" else (address + "2", address + "3")
                )
            else:
                next_addresses.append(address)
            points.append(current[k + 1])
        chain.append(points)
        addresses = next_addresses
    return chain


def claim_partitions(scale: Scale, seed: int) -> CertificateReport:
    rng = np.random.default_rng(seed)
    space: FiniteMetricSpace = shortest_path_metric(diamond(scale.chain_depth).graph)
    mismatches = 0
    detour_ratios: List[Fraction] = []
    for trial in range(2 * scale.chains):
        detour = trial >= scale.chains
        chain = _extension_chain(rng, scale.chain_depth, detour)
        partition = Partition((Fraction(0), Fraction(1)))
        previous = c_geodesic(PointSequence(tuple(chain[0]), space))
        for points in chain[1:]:
            current = c_geodesic(PointSequence(tuple(points), space))
            partition = refine_partition(partition, previous, current)
            previous = current
        ratio = b_equivalence_ratio(partition, partition_of(previous))
        if detour:
            detour_ratios.append(ratio)
        elif ratio != 1 or partition != partition_of(previous):
            mismatches += 1
    worst = max(detour_ratios) if detour_ratios else None
    return CertificateReport(
        "partitions",
        "iterated refinement against direct partitions",
        mismatches == 0 and worst is not None,
        {
            "geodesic_chains": scale.chains,
            "mismatches": mismatches,
            "detour_chains": len(detour_ratios),
            "worst_detour_ratio": worst,
        },
    )


def claim_delta_trees(scale: Scale, seed: int) -> CertificateReport:
    parts = []
    for depth in range(1, scale.tree_depth + 1):
        tree = dyadic_l1_tree(depth).tree
        report = verify_delta_tree(tree.vectors, tree.norm)
        parts.append(from_tree(f"dyadic depth {depth}", report, delta_at_least=Fraction(1)))
        parts[-1].passed = parts[-1].passed and report.delta == 1
    for depth in range(1, scale.partial_depth + 1):
        embedding, pairs = tree_to_diamond_partial_embedding(dyadic_l1_tree(depth).tree, depth)
        measured = distortion(embedding, diamond(depth), pairs)
        parts.append(from_distortion(f"from-tree depth {depth}", measured, lower_at_least=Fraction(1, 2)))
    return combine("delta_trees", "delta-tree conditions and the backwards construction", parts)


def claim_reflexivity(scale: Scale, seed: int) -> CertificateReport:
    n = scale.witness_dimension
    witness = prefix_vector_witness(n)
    estimate = basic_constant(witness.vectors, witness.norm)
    forward = from_forward_check(
        "forward_check",
        forward_embedding_check(witness, delta=2, samples=scale.forward_samples, seed=seed),
    )
    bound_ok = estimate.value <= 2 + get_config().numeric.lp_tolerance

    rng = np.random.default_rng(seed)
    broken = 0
    for _ in range(scale.forward_samples):
        z = tuple(Fraction(int(c)) for c in rng.integers(-5, 6, size=n))
        positive, negative = positive_decomposition(z)
        identities = (
            subtract(positive, negative) == z
            and norm_of(positive, L1) == summing_norm(positive)
            and norm_of(negative, L1) == summing_norm(negative)
            and norm_of(z, L1) == norm_of(positive, L1) + norm_of(negative, L1)
        )
        broken += not identities

    loose = 0
    for _ in range(min(scale.forward_samples, _LIPSCHITZ_SAMPLES)):
        y = tuple(Fraction(int(c)) for c in rng.integers(-5, 6, size=n))
        z = tuple(Fraction(int(c)) for c in rng.integers(-5, 6, size=n))
        clause = decomposition_lipschitz_bound(witness.vectors, 1, y, z, witness.norm, delta=2)
        loose += not clause.passed

    m = 6
    basis = [tuple(Fraction(1) if i == k else Fraction(0) for i in range(m)) for k in range(m)]
    separation = convex_hull_separation(basis, m // 2, L1)
    hull_ok = abs(separation - 2) <= get_config().numeric.lp_tolerance
    return CertificateReport(
        "reflexivity",
        "partially bilipschitz image of l1",
        forward.passed and bound_ok and broken == 0 and loose == 0 and hull_ok,
        {
            "dimension": n,
            "basic_constant": {"value": estimate.value, "method": estimate.method},
            "forward_check": forward.values,
            "forward_passed": forward.passed,
            "decompositions": scale.forward_samples,
            "decomposition_failures": broken,
            "lipschitz_failures": loose,
            "hull_separation": separation,
        },
    )


CLAIMS: Dict[str, Callable[[Scale, int], CertificateReport]] = {
    "generators": claim_generators,
    "thickness": claim_thickness,
    "stegall_embedding": claim_stegall,
    "martingale_extraction": claim_martingale,
    "branch_rules": claim_branch_rules,
    "partitions": claim_partitions,
    "delta_trees": claim_delta_trees,
    "reflexivity": claim_reflexivity,
}


def _run_claims(scale: Scale, seed: int, names: Sequence[str]) -> List[CertificateReport]:
    reports: List[CertificateReport] = []
    for name in names:
        logger.info(f"Running claim {name}")
        with timed(reports):
            reports.append(CLAIMS[name](scale, seed))
    return reports


def claim_determinism(scale: Scale, seed: int, names: Sequence[str]) -> CertificateReport:
    first = dumps(report_document(_run_claims(scale, seed, names)))
    second = dumps(report_document(_run_claims(scale, seed, names)))
    return CertificateReport(
        "determinism",
        "identical reports for identical seeds",
        first == second,
        {"claims": list(names), "seed": seed, "bytes": len(first)},
    )


def run_selftest(
    quick: bool = False, seed: Optional[int] = None, claims: Optional[Sequence[str]] = None
) -> List[CertificateReport]:
    """Run the named claims (all by default) followed by the determinism check."""
    if seed is None:
        seed = get_config().run.seed
    scale = QUICK if quick else FULL
    names = list(CLAIMS) if not claims else list(claims)
    unknown = [name for name in names if name not in CLAIMS and name != "determinism"]
    if unknown:
        raise ValueError(f"Unknown selftest claims: {', '.join(unknown)}")
    selected = [name for name in names if name != "determinism"]

    reports = _run_claims(scale, seed, selected)
    if not claims or "determinism" in names:
        # reruns at the quick scale
        with timed(reports):
            reports.append(claim_determinism(QUICK, seed, selected or list(CLAIMS)))
    log_summary(reports)
    return reports
