"""Tests for the diamond and Laakso graph generators."""

import pytest
from fractions import Fraction

from src.errors import CertificationError, InvalidPointError, ResourceLimitError
from src.generators import (
    active_pairs,
    creating_address,
    diamond,
    diamond_vertex_count,
    edge_endpoints,
    in_subdiamond,
    inclusion_isometry_check,
    laakso2,
    laakso_vertex_count,
    laakso_vertex_level,
    smallest_subdiamond,
    tree_index,
    vertex_level,
)
from src.types import SideClass


class TestDiamond:
    """Test diamond graph construction."""

    @pytest.mark.parametrize("n, vertices, edges", [(0, 2, 1), (1, 4, 4), (2, 12, 16), (3, 44, 64)])
    def test_counts(self, n, vertices, edges):
        """Test |V(D_n)| = 2 + 2(4^n - 1)/3 and |E(D_n)| = 4^n."""
        d = diamond(n)
        assert len(d.vertices) == vertices == diamond_vertex_count(n)
        assert len(d.graph.edges) == edges

    def test_uniform_edge_length(self):
        """Test every edge of D_n has length 2^-n."""
        d = diamond(3)
        assert {edge.length for edge in d.graph.edges} == {Fraction(1, 8)}
        assert d.edge_length == Fraction(1, 8)

    def test_diameter_is_one(self):
        """Test d(top, bottom) = 1 at every level."""
        for n in range(4):
            assert diamond(n).distance("u", "v") == 1

    def test_quadrilateral_records(self):
        """Test one quadrilateral per replaced edge."""
        d = diamond(2)
        assert len(d.quadrilaterals) == 5
        quad = d.quadrilateral("0")
        assert (quad.top, quad.a, quad.bottom, quad.b) == ("u", "a0", "a", "b0")
        assert quad.level == 2

    def test_missing_quadrilateral(self):
        """Test unknown addresses raise."""
        with pytest.raises(InvalidPointError, match="No quadrilateral replaces edge"):
            diamond(1).quadrilateral("0")

    def test_cap_exceeded(self):
        """Test the vertex cap is enforced before building."""
        with pytest.raises(ResourceLimitError, match="above the cap of 10") as info:
            diamond(3, cap=10)
        assert info.value.requested == 44
        assert info.value.cap == 10

    def test_negative_level(self):
        """Test negative levels are rejected."""
        with pytest.raises(CertificationError, match="must be non-negative"):
            diamond(-1)


class TestActivePairs:
    """Test active pair enumeration."""

    def test_level_two(self):
        """Test D_2 has 26 active pairs with the root pair."""
        assert len(active_pairs(diamond(2), include_root=True)) == 26

    def test_level_one(self):
        """Test D_1 has the six pairs of its quadrilateral."""
        pairs = active_pairs(diamond(1), include_root=True)
        assert len(pairs) == 6
        assert ("b", "a") in pairs

    def test_level_zero_root_pair(self):
        """Test D_0 has only the optional root pair."""
        assert len(active_pairs(diamond(0), include_root=True)) == 1
        assert len(active_pairs(diamond(0), include_root=False)) == 0

    def test_membership_is_unordered(self):
        """Test pair lookup ignores order and rejects non-pairs."""
        pairs = active_pairs(diamond(2), include_root=True)
        assert ("a0", "u") in pairs and ("u", "a0") in pairs
        assert ("a0", "a3") not in pairs
        assert "u" not in pairs


class TestDiamondAddresses:
    """Test hierarchical vertex and edge addresses."""

    def test_creating_address(self):
        """Test vertex ids decode to the edge that created them."""
        assert creating_address("u") is None
        assert creating_address("b21") == "21"
        with pytest.raises(InvalidPointError, match="Not a diamond vertex id"):
            creating_address("c0")

    def test_vertex_level(self):
        """Test the first level containing a vertex."""
        assert vertex_level("v") == 0
        assert vertex_level("a") == 1
        assert vertex_level("a01") == 3

    def test_edge_endpoints(self):
        """Test addresses decode to (top, bottom) pairs."""
        assert edge_endpoints("") == ("u", "v")
        assert edge_endpoints("0") == ("u", "a")
        assert edge_endpoints("01") == ("a0", "a")
        assert edge_endpoints("3") == ("b", "v")

    def test_every_edge_matches_its_address(self):
        """Test generated edges agree with decoded endpoints."""
        for edge in diamond(3).graph.edges:
            assert (edge.u, edge.v) == edge_endpoints(edge.name)

    @pytest.mark.parametrize("address, index", [("", 1), ("0", 2), ("1", 3), ("03", 4), ("12", 7)])
    def test_tree_index(self, address, index):
        """Test edges map to the dyadic tree indices."""
        assert tree_index(address) == index

    def test_in_subdiamond(self):
        """Test subdiamond membership."""
        assert in_subdiamond("a0", "0")
        assert in_subdiamond("u", "0")
        assert not in_subdiamond("b", "0")


class TestSmallestSubdiamond:
    """Test smallest subdiamond and side classification."""

    def test_same_side(self):
        """Test two vertices on the a-side of the 0 subdiamond."""
        subdiamond, side = smallest_subdiamond(diamond(2), "a0", "a")
        assert subdiamond.address == "0"
        assert (subdiamond.top, subdiamond.bottom) == ("u", "a")
        assert side == SideClass.SAME_SIDE

    def test_different_sides_same_height(self):
        """Test both vertices near the top on opposite sides."""
        subdiamond, side = smallest_subdiamond(diamond(2), "a0", "a2")
        assert subdiamond.address == ""
        assert side == SideClass.DIFFERENT_SIDES_A

    def test_different_sides_crossing(self):
        """Test one vertex near the top and the other near the bottom."""
        _, side = smallest_subdiamond(diamond(2), "a0", "a3")
        assert side == SideClass.DIFFERENT_SIDES_B

    def test_equal_vertices_rejected(self):
        """Test a pair must be distinct."""
        with pytest.raises(InvalidPointError, match="two distinct vertices"):
            smallest_subdiamond(diamond(2), "a", "a")

    def test_unknown_vertex_rejected(self):
        """Test vertices outside the level are rejected."""
        with pytest.raises(InvalidPointError, match="is not a vertex of D_1"):
            smallest_subdiamond(diamond(1), "a", "a0")


class TestLaakso:
    """Test second Laakso graph construction."""

    @pytest.mark.parametrize("i, vertices, edges", [(0, 2, 1), (1, 6, 6), (2, 24, 36), (3, 120, 216)])
    def test_counts(self, i, vertices, edges):
        """Test V_(i+1) = 2V + 2E and E_(i+1) = 6E."""
        x = laakso2(i)
        assert len(x.vertices) == vertices == laakso_vertex_count(i)
        assert len(x.graph.edges) == edges

    def test_level_one_vertices(self):
        """Test X_1 pastes two trisected copies at their inner vertices."""
        x = laakso2(1)
        assert set(x.vertices) == {"u", "v", "e:1", "e:2", "u+1", "v+1"}
        pasting = x.pastings[0]
        assert pasting.identified == frozenset({"e:1", "e:2"})
        assert pasting.copy_bits["u"] == 0
        assert pasting.copy_bits["u+1"] == 1

    def test_pasting_twin(self):
        """Test identified vertices are their own twins."""
        pasting = laakso2(1).pastings[0]
        assert pasting.twin("e:1") == "e:1"
        assert pasting.twin("v") == "v+1"

    def test_edge_length(self):
        """Test edges of X_i have length 3^-i."""
        x = laakso2(2)
        assert {edge.length for edge in x.graph.edges} == {Fraction(1, 9)}

    def test_diameter_is_one(self):
        """Test d(u, v) = 1 at every level."""
        for i in range(3):
            assert laakso2(i).distance("u", "v") == 1

    def test_twin_copies_are_far(self):
        """Test u and its twin are at distance 2/3 in X_1."""
        assert laakso2(1).distance("u", "u+1") == Fraction(2, 3)

    @pytest.mark.parametrize("vertex, level", [("u", 0), ("e:2", 1), ("u+1", 1), ("e.1+1:1", 2), ("e:1+2", 2)])
    def test_vertex_level(self, vertex, level):
        """Test the first Laakso level containing a vertex."""
        assert laakso_vertex_level(vertex) == level

    def test_bad_vertex_id(self):
        """Test malformed Laakso ids raise."""
        with pytest.raises(InvalidPointError, match="Not a Laakso vertex id"):
            laakso_vertex_level("e:3")

    def test_cap_exceeded(self):
        """Test the vertex cap applies to Laakso graphs."""
        with pytest.raises(ResourceLimitError):
            laakso2(3, cap=100)


class TestInclusionIsometry:
    """Test that consecutive levels include isometrically."""

    def test_diamond_levels(self):
        """Test D_1 sits isometrically in D_2."""
        report = inclusion_isometry_check(diamond(1), diamond(2))
        assert report.passed
        assert report.pairs_checked == 6
        assert report.mismatches == []

    def test_laakso_levels(self):
        """Test X_1 sits isometrically in X_2."""
        report = inclusion_isometry_check(laakso2(1), laakso2(2))
        assert report.passed
        assert report.pairs_checked == 15

    def test_mixed_families_rejected(self):
        """Test the check refuses graphs from different families."""
        with pytest.raises(CertificationError, match="same family"):
            inclusion_isometry_check(diamond(1), laakso2(1))

    def test_non_consecutive_levels_rejected(self):
        """Test the check refuses level jumps."""
        with pytest.raises(CertificationError, match="consecutive levels"):
            inclusion_isometry_check(diamond(1), diamond(3))
