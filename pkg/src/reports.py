"""Certificate reports: named claims with the exact values behind each verdict."""

import logging
import time
from contextlib import contextmanager
from typing import Any, Dict, Iterator, List, Optional, Sequence

from .config import get_config
from .types import (
    CertificateReport,
    ClauseResult,
    DeltaTreeReport,
    DistortionReport,
    ForwardCheckReport,
    MartingaleTrace,
    Scalar,
    WitnessReport,
)

logger = logging.getLogger(__name__)

DISTORTION_ANCHOR = "bilipschitz constants"
TREE_ANCHOR = "delta-tree conditions"
FORWARD_ANCHOR = "partially bilipschitz image of l1"


def clause_values(clauses: Sequence[ClauseResult]) -> Dict[str, Any]:
    return {
        clause.clause: {
            "anchor": clause.anchor,
            "passed": clause.passed,
            "values": clause.values,
            "detail": clause.detail,
        }
        for clause in clauses
    }


def from_clauses(claim_id: str, anchor: str, clauses: Sequence[ClauseResult], **extra: Any) -> CertificateReport:
    values = clause_values(clauses)
    values.update(extra)
    return CertificateReport(claim_id, anchor, all(c.passed for c in clauses), values)


def from_witness(claim_id: str, report: WitnessReport, **extra: Any) -> CertificateReport:
    anchor = report.clauses[0].anchor if report.clauses else ""
    return from_clauses(claim_id, anchor, report.clauses, **extra)


def from_trace(claim_id: str, trace: MartingaleTrace) -> CertificateReport:
    anchor = trace.clauses[0].anchor if trace.clauses else ""
    even_steps = {
        step.index: step.l1_from_previous for step in trace.steps if step.index % 2 == 0 and step.index > 0
    }
    return from_clauses(
        claim_id,
        anchor,
        trace.clauses,
        mode=trace.mode,
        steps=len(trace.steps) - 1,
        lower=trace.lower,
        upper=trace.upper,
        width_constant=trace.width_constant,
        sup_bound=trace.sup_bound,
        even_step_l1=even_steps,
        flags=list(trace.flags),
    )


def from_distortion(
    claim_id: str,
    report: DistortionReport,
    lower_at_least: Optional[Scalar] = None,
    upper_at_most: Optional[Scalar] = None,
) -> CertificateReport:
    """Pass when the measured constants respect the requested bounds."""
    passed = report.distortion is not None
    if lower_at_least is not None:
        passed = passed and report.lower >= lower_at_least
    if upper_at_most is not None:
        passed = passed and report.upper <= upper_at_most
    values = {
        "lower": report.lower,
        "upper": report.upper,
        "distortion": report.distortion,
        "lower_pair": report.lower_pair,
        "upper_pair": report.upper_pair,
        "pairs_checked": report.pairs_checked,
        "required_lower": lower_at_least,
        "required_upper": upper_at_most,
    }
    return CertificateReport(claim_id, DISTORTION_ANCHOR, passed, values)


def from_tree(claim_id: str, report: DeltaTreeReport, delta_at_least: Optional[Scalar] = None) -> CertificateReport:
    passed = not report.violations and not report.degenerate
    if delta_at_least is not None:
        passed = passed and report.delta is not None and report.delta >= delta_at_least
    values = {
        "delta": report.delta,
        "depth": report.depth,
        "violations": report.violations,
        "degenerate": report.degenerate,
        "required_delta": delta_at_least,
    }
    return CertificateReport(claim_id, TREE_ANCHOR, passed, values)


def from_forward_check(claim_id: str, report: ForwardCheckReport) -> CertificateReport:
    values = {
        "lower_factor": report.lower_factor,
        "pairs_checked": report.pairs_checked,
        "min_ratio": report.min_ratio,
        "max_ratio": report.max_ratio,
        "violations": report.violations,
    }
    return CertificateReport(claim_id, FORWARD_ANCHOR, report.passed, values)


def combine(claim_id: str, anchor: str, parts: Sequence[CertificateReport]) -> CertificateReport:
    """One claim made of several sub-reports; passes only if all of them do."""
    values = {part.claim_id: {"passed": part.passed, "values": part.values} for part in parts}
    return CertificateReport(claim_id, anchor, all(part.passed for part in parts), values)


@contextmanager
def timed(reports: List[CertificateReport]) -> Iterator[None]:
    """Stamp runtimes on the reports appended inside the block, if timings are enabled."""
    start = time.perf_counter()
    first = len(reports)
    yield
    if get_config().run.include_timings:
        elapsed = time.perf_counter() - start
        for report in reports[first:]:
            report.runtime = elapsed


def log_summary(reports: Sequence[CertificateReport]) -> None:
    failed = [report.claim_id for report in reports if not report.passed]
    if failed:
        logger.warning(f"{len(failed)} of {len(reports)} certificates failed: {', '.join(failed)}")
    else:
        logger.info(f"All {len(reports)} certificates passed")
