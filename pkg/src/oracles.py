"""Witness oracles: thick witnesses on demand for consecutive geodesic points."""

import logging
from abc import ABC, abstractmethod
from fractions import Fraction
from typing import Optional, Tuple

from .config import get_config
from .errors import OracleError
from .families import DiamondFamily, LaaksoFamily
from .generators import vertex_level
from .geodesics import diamond_thick_witness, laakso_thick_witness
from .types import MetricSpace, SpaceFamily, ThickWitness

logger = logging.getLogger(__name__)


class WitnessOracle(ABC):
    """Base class for witness oracles."""

    width_constant: Fraction

    @property
    @abstractmethod
    def space(self) -> MetricSpace:
        """Host space the witnesses live in."""

    @property
    @abstractmethod
    def base(self) -> Tuple[str, str]:
        """Endpoints (u, v) of the marked geodesics."""

    @abstractmethod
    def __call__(self, u0: str, v0: str) -> ThickWitness:
        """Witness for the pair (u0, v0)."""


class DiamondOracle(WitnessOracle):
    """Quadrilateral forks on the truncated diamond family."""

    def __init__(self, family: DiamondFamily):
        if family.max_level < 1:
            raise ValueError("Diamond oracle needs a family of level at least 1")
        self.family = family
        self.width_constant = Fraction(1)

    @property
    def space(self) -> DiamondFamily:
        return self.family

    @property
    def base(self) -> Tuple[str, str]:
        return self.family.top, self.family.bottom

    def __call__(self, u0: str, v0: str) -> ThickWitness:
        n = max(vertex_level(u0), vertex_level(v0))
        if n + 1 > self.family.max_level:
            raise OracleError(
                f"Segment ({u0}, {v0}) needs D_{n + 1}, beyond level {self.family.max_level}",
                segment=(u0, v0),
            )
        return diamond_thick_witness(self.family.level(n + 1), u0, v0, base_level=n)


class LaaksoOracle(WitnessOracle):
    """Trisection forks on the truncated Laakso family."""

    def __init__(self, family: LaaksoFamily, threshold: Optional[Fraction] = None):
        if threshold is None:
            threshold = get_config().construction.laakso_threshold
        if not 0 < threshold < 1:
            raise ValueError(f"Laakso threshold must lie in (0, 1), got {threshold}")
        self.family = family
        self.width_constant = Fraction(threshold)

    @property
    def space(self) -> LaaksoFamily:
        return self.family

    @property
    def base(self) -> Tuple[str, str]:
        return self.family.u, self.family.v

    def __call__(self, u0: str, v0: str) -> ThickWitness:
        return laakso_thick_witness(self.family, u0, v0, self.width_constant)


def create_oracle(
    kind: str,
    max_level: Optional[int] = None,
    threshold: Optional[Fraction] = None,
    cap: Optional[int] = None,
) -> WitnessOracle:
    """Factory function to create the oracle for a graph family."""
    family = SpaceFamily(kind)
    if family == SpaceFamily.DIAMOND:
        return DiamondOracle(DiamondFamily(max_level, cap=cap))
    elif family == SpaceFamily.LAAKSO2:
        return LaaksoOracle(LaaksoFamily(max_level, cap=cap), threshold)
    else:
        raise ValueError(f"Unknown oracle kind: {kind}")
