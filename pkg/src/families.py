"""Level-stable views of D_omega and X_omega truncated at a maximal level.

Diamond points are vertex ids, which never change between levels. Laakso
points are either vertex ids or keys ``"<edge>@<offset>"`` naming an interior
point on the coarsest edge that carries it, so one point keeps one key at
every level. Distances are measured at the coarsest level containing both
points; the inclusions between levels are isometric.
"""

import logging
from fractions import Fraction
from typing import Optional, Tuple, Union

from .config import get_config
from .errors import InvalidPointError, ResourceLimitError
from .generators import (
    BOTTOM,
    TOP,
    DiamondGraph,
    LaaksoGraph,
    diamond,
    diamond_vertex_count,
    laakso2,
    laakso_edge_level,
    laakso_vertex_count,
    laakso_vertex_level,
    vertex_level,
)
from .types import GraphPoint, Point

logger = logging.getLogger(__name__)

_TRISECTION_DIGITS = ("0", "1", "2")


def _largest_level(count, cap: int) -> int:
    level = 0
    while count(level + 1) <= cap:
        level += 1
    return level


class DiamondFamily:
    """Diamond graphs D_0 .. D_max_level sharing vertex ids."""

    def __init__(self, max_level: Optional[int] = None, cap: Optional[int] = None):
        self.cap = get_config().limits.vertex_cap if cap is None else cap
        if max_level is None:
            max_level = _largest_level(diamond_vertex_count, self.cap)
        self.max_level = max_level
        self.top = TOP
        self.bottom = BOTTOM

    def level(self, n: int) -> DiamondGraph:
        if n > self.max_level:
            raise ResourceLimitError(
                f"Diamond level {n} exceeds the family's maximal level {self.max_level}",
                requested=n,
                cap=self.max_level,
            )
        return diamond(n, cap=self.cap)

    def level_of(self, point: Point) -> int:
        if not isinstance(point, str):
            raise InvalidPointError(f"Diamond family points are vertex ids, got {point!r}")
        return vertex_level(point)

    def distance(self, p: Point, q: Point) -> Fraction:
        n = max(self.level_of(p), self.level_of(q))
        return self.level(n).distance(p, q)


class LaaksoFamily:
    """Laakso graphs X_0 .. X_max_level with level-stable point keys."""

    def __init__(self, max_level: Optional[int] = None, cap: Optional[int] = None):
        self.cap = get_config().limits.vertex_cap if cap is None else cap
        if max_level is None:
            max_level = _largest_level(laakso_vertex_count, self.cap)
        self.max_level = max_level
        self.u = TOP
        self.v = BOTTOM

    def level(self, i: int) -> LaaksoGraph:
        if i > self.max_level:
            raise ResourceLimitError(
                f"Laakso level {i} exceeds the family's maximal level {self.max_level}",
                requested=i,
                cap=self.max_level,
            )
        return laakso2(i, cap=self.cap)

    @staticmethod
    def parse(key: str) -> Union[str, Tuple[str, Fraction]]:
        """Vertex id, or (edge name, offset) for an interior key."""
        edge, sep, offset = key.rpartition("@")
        if not sep:
            return key
        try:
            return edge, Fraction(offset)
        except (ValueError, ZeroDivisionError):
            raise InvalidPointError(f"Malformed point key {key!r}") from None

    def level_of(self, key: str) -> int:
        parsed = self.parse(key)
        if isinstance(parsed, str):
            return laakso_vertex_level(parsed)
        return laakso_edge_level(parsed[0])

    def key_for(self, edge: str, offset: Fraction, level: int) -> str:
        """Coarsest key of the point at ``offset`` on ``edge`` of X_level."""
        name, t, current = edge, Fraction(offset), level
        while True:
            head, sep, tail = name.rpartition(".")
            if not sep or tail not in _TRISECTION_DIGITS:
                break
            t += int(tail) * Fraction(1, 3**current)
            name, current = head, current - 1
        return f"{name}@{t}"

    def canonical(self, point: Point, level: int) -> str:
        """Key of a point given relative to X_level."""
        graph = self.level(level).graph
        resolved = graph.canonical(point)
        if isinstance(resolved, str):
            return resolved
        return self.key_for(graph.edges[resolved.edge].name, resolved.offset, level)

    def locate(self, key: str, level: int) -> Point:
        """Vertex id or GraphPoint of X_level carrying the key."""
        parsed = self.parse(key)
        if self.level_of(key) > level:
            raise InvalidPointError(f"{key} does not exist at Laakso level {level}")
        if isinstance(parsed, str):
            return parsed
        name, t = parsed
        current = laakso_edge_level(name)
        home = self.level(current).graph
        endpoint = home.canonical(GraphPoint(home.edge_index(name), t))
        if isinstance(endpoint, str):
            return endpoint
        while current < level:
            sub = Fraction(1, 3 ** (current + 1))
            digit = int(t // sub)
            remainder = t - digit * sub
            if remainder == 0:
                return f"{name}:{digit}"
            name, t, current = f"{name}.{digit}", remainder, current + 1
        graph = self.level(level).graph
        return graph.canonical(GraphPoint(graph.edge_index(name), t))

    def vertex_key(self, key: str) -> Tuple[str, int]:
        """Vertex id and first level at which the point is a vertex."""
        level = self.level_of(key)
        while level <= self.max_level:
            located = self.locate(key, level)
            if isinstance(located, str):
                return located, max(level, laakso_vertex_level(located))
            level += 1
        raise InvalidPointError(f"{key} is not a vertex at any level up to {self.max_level}")

    def twin(self, key: str, level: int) -> str:
        """Copy-1 partner of a point of X_(level-1) under the pasting building X_level."""
        if not 1 <= level <= self.max_level:
            raise InvalidPointError(f"No pasting at Laakso level {level}")
        if self.level_of(key) >= level:
            raise InvalidPointError(f"{key} is not a point of Laakso level {level - 1}")
        graph = self.level(level)
        located = self.locate(key, level)
        if isinstance(located, str):
            return graph.pastings[level - 1].twin(located)
        name = graph.graph.edges[located.edge].name
        return f"{name}+{level}@{located.offset}"

    def distance(self, p: str, q: str) -> Fraction:
        level = max(self.level_of(p), self.level_of(q))
        graph = self.level(level).graph
        return graph.distance(self.locate(p, level), self.locate(q, level))
