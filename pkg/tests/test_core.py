"""Tests for exact arithmetic, metric graphs and norms."""

import pytest
from fractions import Fraction

import numpy as np
from hypothesis import given, settings, strategies as st

from src.core import (
    FiniteMetricSpace,
    MetricGraph,
    approx_eq,
    approx_le,
    common_denominator,
    dual_norm,
    graph_point_distance,
    norm,
    norm_of,
    pair,
    row_norms,
    scale_to_integers,
    shortest_path_metric,
    to_fraction,
    validate_metric,
)
from src.errors import DisconnectedGraphError, InvalidPointError, InvalidVectorError
from src.generators import diamond, laakso2
from src.types import Edge, GraphPoint, NormedVector, NormSpec, NormTag

HALF = Fraction(1, 2)
L1 = NormSpec(NormTag.L1)
SUMMING = NormSpec(NormTag.SUMMING)

small_fractions = st.fractions(min_value=-10, max_value=10, max_denominator=12)


def square_graph():
    """D_1 written out by hand."""
    return MetricGraph(
        ["u", "a", "v", "b"],
        [
            Edge("u", "a", HALF, "0"),
            Edge("a", "v", HALF, "1"),
            Edge("u", "b", HALF, "2"),
            Edge("b", "v", HALF, "3"),
        ],
    )


class TestRationalHelpers:
    """Test exact arithmetic helpers."""

    def test_to_fraction_accepts_strings(self):
        """Test "n/d" strings become Fractions."""
        assert to_fraction("3/4") == Fraction(3, 4)
        assert to_fraction(2) == Fraction(2)

    def test_to_fraction_rejects_floats(self):
        """Test floats are refused."""
        with pytest.raises(TypeError, match="Expected an exact rational"):
            to_fraction(1.5)

    def test_to_fraction_rejects_booleans(self):
        """Test booleans are not treated as integers."""
        with pytest.raises(TypeError, match="Booleans are not rationals"):
            to_fraction(True)

    def test_exact_comparisons_ignore_tolerance(self):
        """Test rational comparisons are exact."""
        assert approx_le(Fraction(1, 3), Fraction(1, 3))
        assert not approx_le(Fraction(1, 3) + Fraction(1, 10**30), Fraction(1, 3))
        assert not approx_eq(Fraction(1, 3), Fraction(1, 3) + Fraction(1, 10**30))

    def test_float_comparisons_use_tolerance(self):
        """Test float comparisons allow the configured slack."""
        assert approx_le(1.0 + 1e-12, 1.0)
        assert approx_eq(0.1 + 0.2, 0.3)
        assert not approx_le(1.1, 1.0)

    def test_common_denominator(self):
        """Test the least common denominator."""
        assert common_denominator([HALF, Fraction(1, 3), Fraction(5, 6)]) == 6
        assert common_denominator([]) == 1

    def test_scale_to_integers(self):
        """Test rows are scaled to an exact integer matrix."""
        matrix, scale = scale_to_integers([[HALF, Fraction(1, 3)], [Fraction(1), Fraction(0)]])
        assert scale == 6
        assert matrix.tolist() == [[3, 2], [6, 0]]


class TestMetricGraph:
    """Test metric graph construction and distances."""

    def test_duplicate_vertices_rejected(self):
        """Test duplicate vertex ids raise."""
        with pytest.raises(InvalidPointError, match="Duplicate vertex ids"):
            MetricGraph(["x", "x"], [])

    def test_self_loop_rejected(self):
        """Test self-loops raise."""
        with pytest.raises(InvalidPointError, match="self-loop"):
            MetricGraph(["x", "y"], [Edge("x", "x", Fraction(1))])

    def test_non_positive_length_rejected(self):
        """Test zero-length edges raise."""
        with pytest.raises(InvalidPointError, match="non-positive length"):
            MetricGraph(["x", "y"], [Edge("x", "y", Fraction(0))])

    def test_unknown_endpoint_rejected(self):
        """Test edges must join known vertices."""
        with pytest.raises(InvalidPointError, match="unknown endpoint"):
            MetricGraph(["x"], [Edge("x", "y", Fraction(1))])

    def test_square_diagonal(self):
        """Test d(a, b) = 1 through the top in D_1."""
        metric = shortest_path_metric(square_graph())
        assert metric.distance("a", "b") == 1
        assert metric.distance("u", "v") == 1
        assert metric.distance("u", "a") == HALF

    def test_identity_distance(self):
        """Test every point is at distance zero from itself."""
        metric = shortest_path_metric(square_graph())
        assert all(metric.distance(x, x) == 0 for x in metric.points)

    def test_laakso_level_one_diameter(self):
        """Test the endpoints of X_1 stay at distance 1."""
        metric = shortest_path_metric(laakso2(1).graph)
        assert metric.distance("u", "v") == 1

    def test_disconnected_graph_names_vertex(self):
        """Test disconnected graphs raise with a stranded vertex."""
        graph = MetricGraph(["x", "y", "z"], [Edge("x", "y", Fraction(1))])
        with pytest.raises(DisconnectedGraphError, match="z is unreachable") as info:
            shortest_path_metric(graph)
        assert info.value.vertex == "z"

    def test_weighted_graph_uses_dijkstra(self):
        """Test non-uniform lengths are summed exactly."""
        graph = MetricGraph(
            ["x", "y", "z"],
            [
                Edge("x", "y", Fraction(1, 3)),
                Edge("y", "z", Fraction(1, 6)),
                Edge("x", "z", Fraction(1)),
            ],
        )
        assert shortest_path_metric(graph).distance("x", "z") == HALF


class TestGraphPointDistance:
    """Test distances between interior points."""

    def test_same_point(self):
        """Test p = q gives zero."""
        graph = square_graph()
        point = GraphPoint(0, Fraction(1, 4))
        assert graph_point_distance(graph, point, point) == 0

    def test_offset_out_of_range(self):
        """Test offsets beyond the edge raise."""
        with pytest.raises(InvalidPointError, match="outside edge"):
            graph_point_distance(square_graph(), GraphPoint(0, Fraction(1)), "u")

    def test_endpoint_offsets_are_vertices(self):
        """Test offset 0 and full length canonicalize to the endpoints."""
        graph = square_graph()
        assert graph.canonical(GraphPoint(0, Fraction(0))) == "u"
        assert graph.canonical(GraphPoint(0, HALF)) == "a"

    def test_midpoints_of_pasted_copies(self):
        """Test midpoints of an edge and its twin are one edge length apart."""
        graph = laakso2(1).graph
        middle = GraphPoint(graph.edge_index("e.1"), Fraction(1, 6))
        twin = GraphPoint(graph.edge_index("e.1+1"), Fraction(1, 6))
        assert graph_point_distance(graph, middle, twin) == Fraction(1, 3)

    def test_vertex_to_interior(self):
        """Test a vertex to an interior point goes through the nearer endpoint."""
        graph = square_graph()
        assert graph_point_distance(graph, "v", GraphPoint(0, Fraction(1, 8))) == Fraction(7, 8)

    def test_vertices_agree_with_table(self):
        """Test vertex distances match the all-pairs table on X_2."""
        graph = laakso2(2).graph
        metric = shortest_path_metric(graph)
        for x in graph.vertices:
            for y in graph.vertices:
                assert graph_point_distance(graph, x, y) == metric.distance(x, y)


class TestValidateMetric:
    """Test exact metric validation."""

    def test_generated_space_is_metric(self):
        """Test D_2 passes every axiom."""
        assert validate_metric(shortest_path_metric(diamond(2).graph)) == []

    def test_triangle_violation_reported(self):
        """Test a broken triangle inequality is found."""
        table = {("x", "y"): 1, ("y", "z"): 1, ("x", "z"): 3}
        space = FiniteMetricSpace.from_function(
            ["x", "y", "z"], lambda p, q: table.get((p, q), table.get((q, p)))
        )
        kinds = {violation.kind for violation in validate_metric(space)}
        assert kinds == {"triangle"}

    def test_positivity_violation_reported(self):
        """Test distinct points at distance zero are found."""
        space = FiniteMetricSpace.from_function(["x", "y"], lambda p, q: 0)
        assert [violation.kind for violation in validate_metric(space)] == ["positivity", "positivity"]


class TestNorms:
    """Test the norm zoo."""

    def test_summing_norm_example(self):
        """Test prefix sums 1, 0, 1 give summing norm 1."""
        assert norm_of((1, -1, 1), SUMMING) == 1

    def test_zero_vector(self):
        """Test every exact norm of zero is zero."""
        for tag in (NormTag.L1, NormTag.LINF, NormTag.SUMMING):
            assert norm_of((Fraction(0), Fraction(0)), NormSpec(tag)) == 0

    def test_weighted_l1_example(self):
        """Test weighted l1 of (2, 0) with weights (1/2, 1/2)."""
        spec = NormSpec(NormTag.WEIGHTED_L1, (HALF, HALF))
        assert norm(NormedVector((Fraction(2), Fraction(0)), spec)) == 1

    def test_weighted_l1_weight_mismatch(self):
        """Test weight count mismatches raise."""
        spec = NormSpec(NormTag.WEIGHTED_L1, (HALF,))
        with pytest.raises(InvalidVectorError, match="Weighted l1 needs 2 weights, got 1"):
            norm_of((1, 2), spec)

    def test_l2_is_float(self):
        """Test l2 norms are floats."""
        value = norm_of((3, 4), NormSpec(NormTag.L2))
        assert isinstance(value, float)
        assert value == pytest.approx(5.0)

    def test_weighted_pairing_and_dual(self):
        """Test weighted l1 pairs against its weights and has the l-infinity dual."""
        spec = NormSpec(NormTag.WEIGHTED_L1, (HALF, HALF))
        assert pair((1, 0), (2, 4), spec) == 1
        assert dual_norm((Fraction(-3), Fraction(1)), spec) == 3
        assert dual_norm((Fraction(-3), Fraction(1)), NormSpec(NormTag.LINF)) == 4

    def test_summing_dual_unsupported(self):
        """Test the summing dual is refused."""
        with pytest.raises(InvalidVectorError, match="not supported"):
            dual_norm((1,), SUMMING)

    def test_row_norms(self):
        """Test vectorised row norms."""
        rows = np.array([[1, -2], [3, 4]])
        assert row_norms(rows, L1).tolist() == [3, 7]
        assert row_norms(rows, NormSpec(NormTag.LINF)).tolist() == [2, 4]
        assert row_norms(np.array([[1, -1, 1]]), SUMMING).tolist() == [1]
        assert row_norms(rows, NormSpec(NormTag.WEIGHTED_L1), np.array([2, 1])).tolist() == [4, 10]

    @settings(max_examples=200, deadline=None)
    @given(st.lists(small_fractions, min_size=1, max_size=8))
    def test_summing_below_l1(self, vector):
        """Test |v|_s <= |v|_1 for every vector."""
        assert norm_of(vector, SUMMING) <= norm_of(vector, L1)

    @settings(max_examples=200, deadline=None)
    @given(st.lists(st.fractions(min_value=0, max_value=10, max_denominator=12), min_size=1, max_size=8))
    def test_summing_equals_l1_when_nonnegative(self, vector):
        """Test |v|_s = |v|_1 for nonnegative vectors."""
        assert norm_of(vector, SUMMING) == norm_of(vector, L1)
