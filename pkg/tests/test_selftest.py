"""Tests for the acceptance suite."""

from dataclasses import replace

import pytest

from src.selftest import CLAIMS, QUICK, claim_branch_rules, claim_delta_trees, run_selftest


class TestSelftest:
    """Test running named claims."""

    def test_single_claim(self):
        """Test a named claim runs without the determinism rerun."""
        reports = run_selftest(quick=True, claims=["generators"])
        assert [report.claim_id for report in reports] == ["generators"]
        assert reports[0].passed
        assert reports[0].values["diamond"][2]["vertices"] == 12

    def test_determinism(self):
        """Test reruns with the same seed give identical reports."""
        reports = run_selftest(quick=True, claims=["generators", "determinism"])
        assert reports[-1].claim_id == "determinism"
        assert reports[-1].passed
        assert reports[-1].values["claims"] == ["generators"]

    def test_unknown_claim(self):
        """Test unknown claim names are rejected."""
        with pytest.raises(ValueError, match="Unknown selftest claims: nope"):
            run_selftest(quick=True, claims=["nope"])

    def test_branch_rules(self):
        """Test random forks satisfy the interval estimate and the dichotomy."""
        report = claim_branch_rules(replace(QUICK, random_instances=50), seed=3)
        assert report.passed
        assert report.values["interval_failures"] == 0

    def test_delta_trees(self):
        """Test dyadic trees and their partial embeddings."""
        report = claim_delta_trees(replace(QUICK, tree_depth=2, partial_depth=2), seed=0)
        assert report.passed
        assert report.values["dyadic depth 2"]["values"]["delta"] == 1

    @pytest.mark.slow
    def test_quick_suite(self):
        """Test every claim passes at the quick scale."""
        reports = run_selftest(quick=True)
        assert len(reports) == len(CLAIMS) + 1
        failed = [report.claim_id for report in reports if not report.passed]
        assert failed == []
