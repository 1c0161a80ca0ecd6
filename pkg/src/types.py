"""Type definitions for the metric certification toolkit."""

from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Any, Dict, FrozenSet, Iterator, List, Optional, Tuple, Union

from typing_extensions import Protocol

Scalar = Union[Fraction, float]
Coordinates = Tuple[Scalar, ...]


class NormTag(str, Enum):
    """Norms understood by the toolkit."""
    L1 = "l1"
    L2 = "l2"
    LINF = "linf"
    WEIGHTED_L1 = "weighted_l1"
    SUMMING = "summing"


class SideClass(str, Enum):
    """Position of two vertices relative to their smallest subdiamond."""
    SAME_SIDE = "same-side"
    DIFFERENT_SIDES_A = "different-sides-A"
    DIFFERENT_SIDES_B = "different-sides-B"


class ExtractionMode(str, Enum):
    """Martingale extraction flavours."""
    GEODESIC = "geodesic"
    ISO = "iso"


class PairScope(str, Enum):
    """Pair set over which Lipschitz constants were certified."""
    ALL = "all"
    ACTIVE = "active"


class Branch(str, Enum):
    """Fork point picked by the branch rule."""
    Z = "z"
    Z_TILDE = "z_tilde"


class SpaceFamily(str, Enum):
    """Generated graph families."""
    DIAMOND = "diamond"
    LAAKSO2 = "laakso2"


@dataclass(frozen=True)
class Edge:
    """Edge of a metric graph, isometric to a segment of the given length."""
    u: str
    v: str
    length: Fraction
    name: str = ""


@dataclass(frozen=True)
class GraphPoint:
    """Point of an edge, measured from the edge's first endpoint."""
    edge: int
    offset: Fraction


Point = Union[str, GraphPoint]


class MetricSpace(Protocol):
    """Anything that can measure the distance between two of its points."""

    def distance(self, p: Any, q: Any) -> Fraction:
        ...


@dataclass(frozen=True)
class NormSpec:
    """Norm tag plus weights for the weighted l1 norm."""
    tag: NormTag
    weights: Optional[Tuple[Fraction, ...]] = None


@dataclass(frozen=True)
class NormedVector:
    """Coordinates together with the norm they are measured in."""
    coordinates: Coordinates
    norm: NormSpec


@dataclass(frozen=True)
class MetricViolation:
    """A failed metric axiom."""
    kind: str
    points: Tuple[str, ...]
    detail: str


@dataclass(frozen=True)
class Quadrilateral:
    """Quadrilateral top-a-bottom-b replacing the edge with the given address."""
    top: str
    a: str
    bottom: str
    b: str
    level: int
    address: str


@dataclass(frozen=True)
class SubdiamondId:
    """Subdiamond generated by the edge with the given address."""
    top: str
    bottom: str
    level: int
    address: str


@dataclass
class Pasting:
    """Bookkeeping for one Laakso level: identified vertices and copy bits."""
    level: int
    identified: FrozenSet[str]
    copy_bits: Dict[str, int] = field(default_factory=dict)

    def twin(self, vertex: str) -> str:
        """Copy-1 partner of a vertex created at this level."""
        if vertex in self.identified:
            return vertex
        return f"{vertex}+{self.level}"


@dataclass
class ActivePairSet:
    """Unordered vertex pairs on which partial bilipschitz bounds are required."""
    pairs: FrozenSet[Tuple[str, str]]

    @staticmethod
    def key(x: str, y: str) -> Tuple[str, str]:
        return (x, y) if x <= y else (y, x)

    def __contains__(self, pair: object) -> bool:
        if not isinstance(pair, tuple) or len(pair) != 2:
            return False
        return self.key(pair[0], pair[1]) in self.pairs

    def __len__(self) -> int:
        return len(self.pairs)

    def __iter__(self) -> Iterator[Tuple[str, str]]:
        return iter(sorted(self.pairs))


@dataclass
class InclusionReport:
    """Outcome of an isometric inclusion check."""
    passed: bool
    pairs_checked: int
    mismatches: List[Tuple[str, str, Fraction, Fraction]] = field(default_factory=list)


@dataclass(frozen=True)
class Partition:
    """Breakpoints 0 = a_0 < a_1 < ... < a_n = 1."""
    breakpoints: Tuple[Fraction, ...]

    def __post_init__(self) -> None:
        points = self.breakpoints
        if len(points) < 2:
            raise ValueError("A partition needs at least two breakpoints")
        if points[0] != 0 or points[-1] != 1:
            raise ValueError(f"Partition must run from 0 to 1, got {points[0]} .. {points[-1]}")
        for left, right in zip(points, points[1:]):
            if not left < right:
                raise ValueError(f"Partition breakpoints not strictly increasing at {left}, {right}")

    def __len__(self) -> int:
        return len(self.breakpoints)

    def lengths(self) -> Tuple[Fraction, ...]:
        return tuple(b - a for a, b in zip(self.breakpoints, self.breakpoints[1:]))


@dataclass(frozen=True)
class PointSequence:
    """Ordered points of a host space; ``route`` pins parallel edges when known."""
    points: Tuple[Point, ...]
    space: Any = field(compare=False, repr=False, default=None)
    route: Optional[Tuple[int, ...]] = None

    def __post_init__(self) -> None:
        for left, right in zip(self.points, self.points[1:]):
            if left == right:
                raise ValueError(f"Consecutive points of a sequence must differ: {left}")

    def __len__(self) -> int:
        return len(self.points)


@dataclass(frozen=True)
class CGeodesic:
    """Point sequence whose length is at most C times the end-to-end distance."""
    sequence: PointSequence
    constant: Fraction


@dataclass
class CGeodesicCheck:
    """Result of a C-geodesic test."""
    holds: bool
    ratio: Optional[Fraction]
    total: Fraction
    direct: Fraction


@dataclass
class ThickWitness:
    """Fork data (w, z, z~) for one geodesic pair."""
    u0: Point
    v0: Point
    w: Tuple[Point, ...]
    z: Tuple[Point, ...]
    z_tilde: Tuple[Point, ...]
    geodesic: Tuple[Point, ...] = ()
    geodesic_tilde: Tuple[Point, ...] = ()
    base: Optional[Tuple[Point, Point]] = None
    level: Optional[int] = None
    width_constant: Optional[Fraction] = None
    trisections: Optional[int] = None


@dataclass
class IsoWitness:
    """Two extensions of a base C-geodesic sharing their common points."""
    base: Tuple[Point, ...]
    z: Tuple[Point, ...]
    z_tilde: Tuple[Point, ...]
    common: Tuple[int, ...]
    distinct: Tuple[int, ...]
    constant: Fraction = Fraction(1)


@dataclass
class ClauseResult:
    """Verdict for one checked clause, with the numbers behind it."""
    clause: str
    anchor: str
    passed: bool
    values: Dict[str, Any] = field(default_factory=dict)
    detail: str = ""


@dataclass
class WitnessReport:
    """Clause-by-clause verdict."""
    clauses: List[ClauseResult] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(clause.passed for clause in self.clauses)

    def clause(self, name: str) -> ClauseResult:
        for clause in self.clauses:
            if clause.clause == name:
                return clause
        raise KeyError(name)


@dataclass(frozen=True)
class StepFunction:
    """Piecewise constant map on (0,1], one value per left-open interval."""
    partition: Partition
    values: Tuple[Coordinates, ...]
    norm: NormSpec

    def __post_init__(self) -> None:
        if len(self.values) != len(self.partition) - 1:
            raise ValueError(
                f"Step function has {len(self.values)} values for "
                f"{len(self.partition) - 1} intervals"
            )


@dataclass
class BranchChoice:
    """Outcome of the fork rule for one (w_prev, z, z~, w_next) quadruple."""
    choice: Branch
    value_z: Scalar
    value_z_tilde: Scalar
    bound: Scalar
    holds: bool

    @property
    def margin(self) -> Scalar:
        return max(self.value_z, self.value_z_tilde) - self.bound


@dataclass
class MartingaleStep:
    """One step of an extracted martingale."""
    index: int
    sequence: Tuple[Point, ...]
    function: StepFunction
    choices: List[BranchChoice] = field(default_factory=list)
    l1_from_previous: Optional[Scalar] = None
    bound: Optional[Scalar] = None


@dataclass
class MartingaleTrace:
    """Extracted martingale plus the constants its certificates depend on."""
    mode: ExtractionMode
    steps: List[MartingaleStep]
    lower: Scalar
    upper: Scalar
    width_constant: Fraction
    base_distance: Fraction
    sup_bound: Scalar = Fraction(1)
    flags: List[str] = field(default_factory=list)
    clauses: List[ClauseResult] = field(default_factory=list)

    @property
    def functions(self) -> List[StepFunction]:
        return [step.function for step in self.steps]

    @property
    def passed(self) -> bool:
        return all(clause.passed for clause in self.clauses)


@dataclass(frozen=True)
class Certification:
    """Lipschitz constants and the pair set they were certified on."""
    lower: Scalar
    upper: Scalar
    pairs: PairScope = PairScope.ALL


@dataclass
class Embedding:
    """Map from space points to vectors of a normed space."""
    points: Dict[Point, Coordinates]
    norm: NormSpec
    certified: Optional[Certification] = None
    metadata: Dict[str, Any] = field(default_factory=dict)

    def vector(self, point: Point) -> Coordinates:
        try:
            return self.points[point]
        except KeyError:
            raise KeyError(f"Embedding is not defined at {point}") from None


@dataclass
class DistortionReport:
    """Extreme ratios |f(x)-f(y)| / d(x,y) over a pair set."""
    lower: Scalar
    upper: Scalar
    distortion: Optional[Scalar]
    lower_pair: Tuple[Point, Point]
    upper_pair: Tuple[Point, Point]
    pairs_checked: int


@dataclass
class DeltaTree:
    """Vectors y_1 .. y_{2^(n+1)-1}; ``vectors[j - 1]`` is y_j."""
    vectors: Tuple[Coordinates, ...]
    norm: NormSpec
    delta: Scalar
    depth: int

    def vector(self, j: int) -> Coordinates:
        return self.vectors[j - 1]

    @property
    def max_index(self) -> int:
        return len(self.vectors)


@dataclass
class DeltaTreeReport:
    """Delta-tree verdict."""
    delta: Optional[Scalar]
    depth: int
    violations: List[str] = field(default_factory=list)
    degenerate: bool = False


@dataclass
class SeparatedTreeSystem:
    """Delta-tree plus functionals separating the two tails below each node."""
    tree: DeltaTree
    functionals: Dict[int, Coordinates]
    epsilon: Fraction = Fraction(0)
    odd_functionals: Dict[int, Coordinates] = field(default_factory=dict)

    @property
    def depth(self) -> int:
        return self.tree.depth


@dataclass(frozen=True)
class ActivePairPredicate:
    """Pairs with |x - y|_1 <= delta * |x - y|_s are active."""
    delta: Fraction


@dataclass
class ReflexivityWitness:
    """Normalized basic sequence with a functional taking the constant value theta."""
    vectors: Tuple[Coordinates, ...]
    functional: Coordinates
    theta: Fraction
    norm: NormSpec
    basic_constant: Optional[Fraction] = None


@dataclass
class BasicConstantEstimate:
    """Numerical upper estimate of a basic constant."""
    value: float
    method: str
    resolution: int
    programs: int = 0


@dataclass
class ForwardCheckReport:
    """Sampled two-sided bounds for the forward embedding."""
    passed: bool
    lower_factor: Fraction
    pairs_checked: int
    min_ratio: Optional[Fraction] = None
    max_ratio: Optional[Fraction] = None
    violations: List[Dict[str, Any]] = field(default_factory=list)


@dataclass
class CertificateReport:
    """One certified claim with its anchor and the values that justify it."""
    claim_id: str
    anchor: str
    passed: bool
    values: Dict[str, Any] = field(default_factory=dict)
    runtime: Optional[float] = None


@dataclass
class RunConfig:
    """Resolved settings for one CLI run."""
    command: str
    seed: int
    cap: int
    tolerance: float
    output: Optional[str] = None
    output_format: str = "json"
    include_timings: bool = False
    options: Dict[str, Any] = field(default_factory=dict)


@dataclass
class Config:
    """Application configuration."""

    @dataclass
    class Numeric:
        tolerance: float = 1e-9
        lp_tolerance: float = 1e-6

    @dataclass
    class Limits:
        vertex_cap: int = 10_000_000
        enumeration_limit: int = 1000

    @dataclass
    class Construction:
        include_root_pair: bool = True
        laakso_threshold: Fraction = Fraction(1, 2)
        delta: Fraction = Fraction(2)

    @dataclass
    class Run:
        seed: int = 0
        samples: int = 10_000
        log_level: str = "INFO"
        include_timings: bool = False

    numeric: Numeric
    limits: Limits
    construction: Construction
    run: Run
