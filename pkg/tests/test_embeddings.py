"""Tests for delta-trees, diamond embeddings and distortion."""

import pytest
from fractions import Fraction

from src.core import add, norm_of, scale, shortest_path_metric
from src.embeddings import (
    _shift_tree,
    distortion,
    dyadic_l1_tree,
    edge_correspondence,
    frechet_embedding,
    random_delta_tree,
    stegall_diamond_embedding,
    tail_decomposition,
    tail_indices,
    tree_to_diamond_partial_embedding,
    verify_delta_tree,
    verify_tail_separation,
    verify_tail_statements,
)
from src.errors import CertificationError, PreconditionViolation, TreeError
from src.generators import active_pairs, diamond
from src.types import DeltaTree, Embedding, NormSpec, NormTag, PairScope

L1 = NormSpec(NormTag.L1)


def vectors(*rows):
    return tuple(tuple(Fraction(c) for c in row) for row in rows)


class TestTailIndices:
    """Test descendant index sets."""

    def test_tails(self):
        """Test a node and all its descendants."""
        assert tail_indices(1, 3) == [1, 2, 3]
        assert tail_indices(2, 7) == [2, 4, 5]
        assert tail_indices(7, 7) == [7]

    def test_out_of_range(self):
        """Test indices outside the tree raise."""
        with pytest.raises(TreeError, match="outside 1..7"):
            tail_indices(8, 7)


class TestDeltaTree:
    """Test delta-tree verification."""

    def test_dyadic_tree(self):
        """Test the dyadic system is a delta-tree with delta 1."""
        tree = dyadic_l1_tree(2).tree
        assert tree.vector(1) == vectors((1, 1, 1, 1))[0]
        assert tree.vector(2) == vectors((2, 2, 0, 0))[0]
        assert tree.vector(7) == vectors((0, 0, 0, 4))[0]
        report = verify_delta_tree(tree.vectors, tree.norm)
        assert report.violations == []
        assert report.delta == 1
        assert report.depth == 2
        assert not report.degenerate

    def test_averaging_failure(self):
        """Test a broken averaging identity is reported."""
        report = verify_delta_tree(vectors((0,), (1,), (2,)), L1)
        assert report.violations == ["averaging identity fails at j=1"]
        assert report.delta is None

    def test_separation_depends_on_norm(self):
        """Test delta is the child distance in the given norm."""
        report = verify_delta_tree(vectors((0, 0), (1, 1), (-1, -1)), NormSpec(NormTag.LINF))
        assert report.delta == 1
        report = verify_delta_tree(vectors((0, 0), (2, 0), (-2, 0)), L1)
        assert report.delta == 2

    def test_degenerate(self):
        """Test children equal to their parent give delta 0."""
        report = verify_delta_tree(vectors((1,), (1,), (1,)), L1)
        assert report.degenerate
        assert report.delta == 0

    def test_incomplete_tree(self):
        """Test vector counts must fill a complete tree."""
        with pytest.raises(TreeError, match="got 4"):
            verify_delta_tree(vectors((0,), (1,), (-1,), (2,)), L1)

    def test_mapping_indices(self):
        """Test mapping input needs indices 1..N."""
        with pytest.raises(TreeError, match="exactly 1..3"):
            verify_delta_tree({0: (Fraction(0),), 1: (Fraction(1),), 2: (Fraction(-1),)}, L1)

    def test_mixed_dimensions(self):
        """Test vectors must share a dimension."""
        with pytest.raises(TreeError, match="mixed dimensions"):
            verify_delta_tree(vectors((0,), (1, 0), (-1, 0)), L1)

    def test_random_tree(self):
        """Test seeded random trees are delta-trees and reproducible."""
        first = random_delta_tree(3, 4, L1, seed=7)
        second = random_delta_tree(3, 4, L1, seed=7)
        assert first.vectors == second.vectors
        report = verify_delta_tree(first.vectors, L1)
        assert report.violations == []
        assert report.delta > 0


class TestSeparatedSystem:
    """Test the separated tree system and its embedding of D_m."""

    def test_tail_separation(self):
        """Test the dyadic functionals separate child tails exactly."""
        report = verify_tail_separation(dyadic_l1_tree(3))
        assert report.passed
        assert [clause.clause for clause in report.clauses] == ["functional_norms", "even_tail", "odd_tail"]

    def test_embedding_constants(self):
        """Test D_2 embeds with lower constant 1/2 and upper constant 1."""
        system = dyadic_l1_tree(2)
        embedding = stegall_diamond_embedding(system, 2)
        assert embedding.certified.lower == Fraction(1, 2)
        assert embedding.certified.upper == 1
        report = distortion(embedding, diamond(2))
        assert report.lower >= Fraction(1, 2)
        assert report.upper <= 1
        assert report.pairs_checked == 66

    def test_edges_follow_tree_vectors(self):
        """Test every edge image is y_j / 2^k."""
        system = dyadic_l1_tree(3)
        d = diamond(3)
        embedding = stegall_diamond_embedding(system, 3)
        assert edge_correspondence(d, embedding, system.tree.vector) == []

    def test_tail_statements(self):
        """Test side differences expand over the right tails."""
        system = dyadic_l1_tree(2)
        d = diamond(2)
        embedding = stegall_diamond_embedding(system, 2)
        report = verify_tail_statements(d, embedding, system.tree.vector, active_pairs(d))
        assert report.passed

    def test_tail_decomposition(self):
        """Test coefficients along a downward path are edge lengths."""
        d = diamond(2)
        assert tail_decomposition(d, "", "a1") == {4: Fraction(1, 4), 5: Fraction(1, 4), 6: Fraction(1, 4)}
        assert tail_decomposition(d, "", "a1", towards_bottom=True) == {7: Fraction(1, 4)}
        assert tail_decomposition(d, "0", "u") == {}

    def test_depth_beyond_system(self):
        """Test embeddings cannot be deeper than the system."""
        with pytest.raises(TreeError, match="exceeds the system depth"):
            stegall_diamond_embedding(dyadic_l1_tree(2), 3)

    def test_large_epsilon(self):
        """Test epsilon >= 1/3 leaves no lower bound."""
        system = dyadic_l1_tree(1)
        system.epsilon = Fraction(1, 3)
        with pytest.raises(PreconditionViolation, match="leaves lower bound"):
            stegall_diamond_embedding(system, 1)

    def test_unnormalized_system(self):
        """Test tree vectors off the unit sphere void the certified lower bound."""
        system = dyadic_l1_tree(1)
        system.tree.vectors = tuple(scale(vector, 2) for vector in system.tree.vectors)
        with pytest.raises(PreconditionViolation, match="needs unit tree vectors"):
            stegall_diamond_embedding(system, 1)


class TestPartialEmbedding:
    """Test the backwards construction from a delta-tree."""

    def test_dyadic_tree(self):
        """Test the dyadic tree gives a partial embedding on active pairs."""
        embedding, pairs = tree_to_diamond_partial_embedding(dyadic_l1_tree(2).tree, 2)
        assert len(pairs) == 26
        assert embedding.certified.pairs == PairScope.ACTIVE
        assert embedding.certified.lower >= Fraction(1, 2)
        assert embedding.metadata["shift"] is None
        assert embedding.metadata["delta"] == 1

    def test_random_tree_is_shifted_when_needed(self):
        """Test random trees still give a positive lower constant."""
        tree = random_delta_tree(2, 3, L1, seed=11)
        embedding, pairs = tree_to_diamond_partial_embedding(tree, 2)
        assert embedding.certified.lower > 0
        report = distortion(embedding, diamond(2), pairs)
        assert report.lower == embedding.certified.lower

    def test_not_a_tree(self):
        """Test non-trees are refused."""
        tree = dyadic_l1_tree(1).tree
        tree.vectors = vectors((0,), (1,), (2,))
        tree.norm = L1
        with pytest.raises(TreeError, match="Not a delta-tree"):
            tree_to_diamond_partial_embedding(tree, 1)

    def test_depth_beyond_tree(self):
        """Test the depth is limited by the tree."""
        with pytest.raises(TreeError, match="exceeds the tree depth"):
            tree_to_diamond_partial_embedding(dyadic_l1_tree(1).tree, 2)

    def test_smallest_shift(self):
        """Test the shift is the smallest r with min |x_j| >= max |x_j| / 4."""
        tree = DeltaTree(vectors((0, 0), (1, 0), (-1, 0), (0, 4), (2, -4), (0, 0), (-2, 0)), L1, Fraction(1), 2)
        shifted, shift = _shift_tree(tree)
        assert shift == {"r": Fraction(14, 3), "direction": 0}
        assert shifted[0] == vectors((Fraction(14, 3), 0))[0]
        norms = [norm_of(vector, L1) for vector in shifted]
        assert 4 * min(norms) == max(norms)

    def test_smaller_shift_fails(self):
        """Test no smaller translation bounds the norms of a random tree."""
        tree = random_delta_tree(2, 3, L1, seed=11)
        shifted, shift = _shift_tree(tree)
        if shift is None:
            pytest.skip("tree needs no shift")
        assert shift["r"] >= Fraction(1, 4)
        norms = [norm_of(vector, L1) for vector in shifted]
        assert min(norms) > 0 and 4 * min(norms) >= max(norms)
        smaller = [norm_of(add(vector, (-Fraction(1, 1000), 0, 0)), L1) for vector in shifted]
        assert 4 * min(smaller) < max(smaller)


class TestDistortion:
    """Test distortion measurement."""

    def test_frechet_is_isometric(self):
        """Test the distance-coordinate embedding has distortion 1."""
        metric = shortest_path_metric(diamond(2).graph)
        embedding = frechet_embedding(metric, metric.points)
        report = distortion(embedding, metric)
        assert report.lower == report.upper == report.distortion == 1

    def test_extreme_pairs(self):
        """Test the unit square in l1 stretches every pair of D_1 by 2."""
        metric = shortest_path_metric(diamond(1).graph)
        embedding = Embedding(
            {"u": vectors((0, 0))[0], "a": vectors((1, 0))[0], "b": vectors((0, 1))[0], "v": vectors((1, 1))[0]},
            L1,
        )
        report = distortion(embedding, metric)
        assert report.upper == 2
        assert set(report.upper_pair) <= set(metric.points)
        assert report.lower == 2
        assert report.distortion == 1

    def test_collapsed_pair(self):
        """Test collapsed points give an undefined distortion."""
        metric = shortest_path_metric(diamond(1).graph)
        zero = (Fraction(0),)
        embedding = Embedding({p: zero for p in metric.points}, L1)
        report = distortion(embedding, metric)
        assert report.lower == 0
        assert report.distortion is None

    def test_active_needs_pair_set(self):
        """Test active scope needs explicit pairs."""
        metric = shortest_path_metric(diamond(1).graph)
        embedding = frechet_embedding(metric, metric.points)
        with pytest.raises(CertificationError, match="explicit ActivePairSet"):
            distortion(embedding, metric, "active")

    def test_active_pairs(self):
        """Test distortion restricted to active pairs."""
        d = diamond(1)
        metric = shortest_path_metric(d.graph)
        embedding = frechet_embedding(metric, metric.points)
        report = distortion(embedding, d, active_pairs(d))
        assert report.pairs_checked == 6
        assert norm_of(embedding.vector("u"), embedding.norm) == 0
