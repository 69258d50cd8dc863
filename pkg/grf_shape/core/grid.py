"""
Core data model: grid domains, neighbourhood structures, Gibbs potentials,
labellings, energies and sufficient statistics.

Conventions:
    - a labelling is an integer numpy array of shape (H, W), indexed [y, x]
    - x grows rightwards, y grows downwards
    - an offset a = (dx, dy) connects t = (x, y) with t' = (x + dx, y + dy)
    - edges are truncated at the domain boundary, there is no wraparound
"""
from dataclasses import dataclass, field
from typing import NamedTuple, Iterable

import numpy as np

from grf_shape.errors import DuplicateOffset, OppositeOffsetPresent, DimensionMismatch, UnknownOffset, IncompatibleStatistics


class Offset(NamedTuple):
    dx: int
    dy: int

    def __neg__(self):
        return Offset(-self.dx, -self.dy)

    def is_zero(self) -> bool:
        return self.dx == 0 and self.dy == 0

    def canonical(self) -> "Offset":
        """
        Representative of the pair {a, -a}: dy > 0, or dy == 0 and dx > 0
        """
        if self.dy > 0 or (self.dy == 0 and self.dx >= 0):
            return self
        return -self

    def sort_key(self):
        return (self.dy, self.dx)

    def __str__(self):
        return f"({self.dx},{self.dy})"


ZERO = Offset(0, 0)


def as_offset(a) -> Offset:
    if isinstance(a, Offset):
        return a
    dx, dy = a
    return Offset(int(dx), int(dy))


@dataclass(frozen=True)
class NeighborhoodStructure:
    """
    Ordered set of offsets A. Always contains the zero offset (unary terms) at position 0.
    For a nonzero a in A, -a is not in A.
    """
    offsets: tuple[Offset, ...]

    def __post_init__(self):
        offsets = [as_offset(a) for a in self.offsets]
        if ZERO not in offsets:
            offsets.insert(0, ZERO)
        elif offsets[0] != ZERO:
            offsets.remove(ZERO)
            offsets.insert(0, ZERO)
        seen = set()
        for a in offsets:
            if a in seen:
                raise DuplicateOffset(f"Offset {a} appears more than once")
            seen.add(a)
        for a in offsets[1:]:
            if -a in seen:
                raise OppositeOffsetPresent(f"Offsets {a} and {-a} are both present")
        object.__setattr__(self, "offsets", tuple(offsets))

    @classmethod
    def from_offsets(cls, offsets: Iterable) -> "NeighborhoodStructure":
        return cls(tuple(as_offset(a) for a in offsets))

    @property
    def nonzero(self) -> tuple[Offset, ...]:
        """A' = A without 0"""
        return self.offsets[1:]

    def with_offset(self, a) -> "NeighborhoodStructure":
        return NeighborhoodStructure(self.offsets + (as_offset(a),))

    def without_offset(self, a) -> "NeighborhoodStructure":
        a = as_offset(a)
        if a.is_zero():
            raise ValueError("without_offset: the zero offset can not be removed")
        return NeighborhoodStructure(tuple(b for b in self.offsets if b != a))

    def max_range(self) -> tuple[int, int]:
        """(max |dx|, max |dy|) over all offsets"""
        return max(abs(a.dx) for a in self.offsets), max(abs(a.dy) for a in self.offsets)

    def __contains__(self, a):
        return as_offset(a) in self.offsets

    def __iter__(self):
        return iter(self.offsets)

    def __len__(self):
        return len(self.offsets)


@dataclass(frozen=True)
class LabelSet:
    count: int
    names: tuple[str, ...] | None = None

    def __post_init__(self):
        if self.count < 1:
            raise DimensionMismatch(f"A label set needs at least one label, got count={self.count}")
        if self.names is not None:
            object.__setattr__(self, "names", tuple(self.names))
            if len(self.names) != self.count:
                raise DimensionMismatch(f"{len(self.names)} label names for {self.count} labels")

    def name(self, k: int) -> str:
        if self.names is None:
            return str(k)
        return self.names[k]

    def __len__(self):
        return self.count


@dataclass(frozen=True)
class GridDomain:
    width: int
    height: int

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise DimensionMismatch(f"Invalid domain size {self.width}x{self.height}")

    @property
    def shape(self) -> tuple[int, int]:
        """numpy shape (H, W)"""
        return (self.height, self.width)

    @property
    def size(self) -> int:
        return self.width * self.height

    def contains(self, x: int, y: int) -> bool:
        return 0 <= x < self.width and 0 <= y < self.height

    def __str__(self):
        return f"{self.width}x{self.height}"


def _readonly(array: np.ndarray) -> np.ndarray:
    array = np.array(array, dtype=float)
    array.flags.writeable = False
    return array


@dataclass(frozen=True, eq=False)
class PotentialTable:
    """
    Gibbs potentials: unary table u_0 of size |K| and one |K|x|K| table u_a per nonzero offset.
    """
    unary: np.ndarray
    pairwise: dict[Offset, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "unary", _readonly(self.unary))
        object.__setattr__(self, "pairwise", {as_offset(a): _readonly(u) for a, u in self.pairwise.items()})

    @property
    def n_labels(self) -> int:
        return self.unary.shape[0]

    @property
    def offsets(self) -> tuple[Offset, ...]:
        return (ZERO,) + tuple(self.pairwise.keys())

    def table(self, a) -> np.ndarray:
        a = as_offset(a)
        if a.is_zero():
            return self.unary
        if a not in self.pairwise:
            raise UnknownOffset(f"No potentials for offset {a}")
        return self.pairwise[a]

    def replace(self, tables: dict) -> "PotentialTable":
        """Return a copy where the given offsets get new tables (new offsets are added)"""
        unary = self.unary
        pairwise = dict(self.pairwise)
        for a, u in tables.items():
            a = as_offset(a)
            if a.is_zero():
                unary = u
            else:
                pairwise[a] = u
        return PotentialTable(unary, pairwise)

    def restricted(self, structure: NeighborhoodStructure) -> "PotentialTable":
        """
        Potentials for exactly the offsets of structure, missing offsets get zero tables
        """
        K = self.n_labels
        return PotentialTable(self.unary, {a: self.pairwise.get(a, np.zeros((K, K))) for a in structure.nonzero})


@dataclass(frozen=True, eq=False)
class SufficientStatistics:
    """
    Label (pair) co-occurrence tables per offset.
    kind is one of:
        "counts"        - counts n_a of a single labelling
        "expectations"  - expected counts (or averages of counts)
        "frequencies"   - every table divided by its total, i.e. normalized per edge
    Gradients are stored with kind "expectations" and may be negative.
    """
    unary: np.ndarray
    pairwise: dict[Offset, np.ndarray] = field(default_factory=dict)
    kind: str = "counts"

    def __post_init__(self):
        if self.kind not in ("counts", "expectations", "frequencies"):
            raise ValueError(f"Invalid statistics kind '{self.kind}'")
        object.__setattr__(self, "unary", _readonly(self.unary))
        object.__setattr__(self, "pairwise", {as_offset(a): _readonly(n) for a, n in self.pairwise.items()})

    @property
    def n_labels(self) -> int:
        return self.unary.shape[0]

    @property
    def offsets(self) -> tuple[Offset, ...]:
        return (ZERO,) + tuple(self.pairwise.keys())

    def table(self, a) -> np.ndarray:
        a = as_offset(a)
        if a.is_zero():
            return self.unary
        if a not in self.pairwise:
            raise UnknownOffset(f"No statistics for offset {a}")
        return self.pairwise[a]

    def _map(self, func, kind=None) -> "SufficientStatistics":
        return SufficientStatistics(func(self.unary), {a: func(n) for a, n in self.pairwise.items()}, kind or self.kind)

    def _check_compatible(self, other: "SufficientStatistics"):
        if set(self.offsets) != set(other.offsets) or self.n_labels != other.n_labels:
            raise IncompatibleStatistics("Statistics are indexed by different offsets or label sets")

    def __add__(self, other: "SufficientStatistics") -> "SufficientStatistics":
        self._check_compatible(other)
        return SufficientStatistics(self.unary + other.unary, {a: n + other.pairwise[a] for a, n in self.pairwise.items()}, "expectations" if self.kind != other.kind else self.kind)

    def __sub__(self, other: "SufficientStatistics") -> "SufficientStatistics":
        self._check_compatible(other)
        return SufficientStatistics(self.unary - other.unary, {a: n - other.pairwise[a] for a, n in self.pairwise.items()}, "expectations" if self.kind != "frequencies" else "frequencies")

    def scaled(self, factor: float) -> "SufficientStatistics":
        return self._map(lambda n: n * factor, "expectations" if self.kind == "counts" else None)

    def frequencies(self) -> "SufficientStatistics":
        """Every table divided by its total. Empty tables (offsets without edges) stay zero."""
        def normalize(n):
            total = n.sum()
            return n / total if total > 0 else np.zeros_like(n)
        return self._map(normalize, "frequencies")

    def to_expectations(self, domain: GridDomain) -> "SufficientStatistics":
        """Scale per edge frequencies to expected counts on the given domain"""
        freq = self.frequencies() if self.kind != "frequencies" else self
        return SufficientStatistics(freq.unary * domain.size, {a: n * edge_count(domain, a) for a, n in freq.pairwise.items()}, "expectations")

    def restricted(self, offsets: Iterable) -> "SufficientStatistics":
        return SufficientStatistics(self.unary, {as_offset(a): self.table(a) for a in offsets if not as_offset(a).is_zero()}, self.kind)

    def max_abs(self) -> float:
        return max([np.abs(self.unary).max()] + [np.abs(n).max() for n in self.pairwise.values() if n.size])

    def as_vector(self) -> np.ndarray:
        return np.concatenate([self.unary.ravel()] + [self.pairwise[a].ravel() for a in self.pairwise])


@dataclass(frozen=True, eq=False)
class GrfModel:
    domain: GridDomain
    labels: LabelSet
    structure: NeighborhoodStructure
    potentials: PotentialTable

    def with_potentials(self, potentials: PotentialTable) -> "GrfModel":
        return build_model(self.domain, self.labels, self.structure, potentials)

    def with_structure(self, structure: NeighborhoodStructure) -> "GrfModel":
        """Change the structure, new offsets get zero potentials, removed ones are dropped"""
        return build_model(self.domain, self.labels, structure, self.potentials.restricted(structure))

    def with_domain(self, domain: GridDomain) -> "GrfModel":
        return build_model(domain, self.labels, self.structure, self.potentials)


def build_model(domain: GridDomain, labels: LabelSet, structure: NeighborhoodStructure, potentials: PotentialTable) -> GrfModel:
    """
    Validate and assemble a model. Potentials are stored exactly as given.
    """
    K = labels.count
    if potentials.unary.shape != (K,):
        raise DimensionMismatch(f"Unary table has shape {potentials.unary.shape}, expected ({K},)")
    for a in potentials.pairwise:
        if a not in structure.nonzero:
            raise UnknownOffset(f"Potentials given for offset {a}, which is not part of the structure")
    for a in structure.nonzero:
        if a not in potentials.pairwise:
            raise DimensionMismatch(f"No potentials given for offset {a}")
        if potentials.pairwise[a].shape != (K, K):
            raise DimensionMismatch(f"Pairwise table for {a} has shape {potentials.pairwise[a].shape}, expected ({K}, {K})")
    return GrfModel(domain, labels, structure, potentials)


def zero_potentials(structure: NeighborhoodStructure, labels: LabelSet) -> PotentialTable:
    K = labels.count
    return PotentialTable(np.zeros(K), {a: np.zeros((K, K)) for a in structure.nonzero})


def random_potentials(structure: NeighborhoodStructure, labels: LabelSet, scale: float = 1.0, seed: int = 0) -> PotentialTable:
    """
    Canonical potentials with entries drawn uniformly from [-scale, scale] before normalization
    """
    rng = np.random.default_rng(seed)
    K = labels.count
    unary = rng.uniform(-scale, scale, K)
    pairwise = {a: rng.uniform(-scale, scale, (K, K)) for a in structure.nonzero}
    return normalize_potentials(PotentialTable(unary, pairwise))


def validate_labelling(domain: GridDomain, labels: LabelSet, y) -> np.ndarray:
    y = np.asarray(y)
    if y.shape != domain.shape:
        raise DimensionMismatch(f"Labelling has shape {y.shape}, domain {domain} needs {domain.shape}")
    if not np.issubdtype(y.dtype, np.integer):
        if not np.all(np.equal(np.mod(y, 1), 0)):
            raise DimensionMismatch("Labelling contains non-integer values")
        y = y.astype(np.int64)
    if y.size and (y.min() < 0 or y.max() >= labels.count):
        raise DimensionMismatch(f"Labelling contains labels outside of 0..{labels.count - 1}")
    return y


def edge_count(domain: GridDomain, a) -> int:
    """|E_a|"""
    a = as_offset(a)
    return max(0, domain.width - abs(a.dx)) * max(0, domain.height - abs(a.dy))


def edge_slices(domain: GridDomain, a):
    """
    Index expressions selecting the start nodes t and the end nodes t + a of all edges in E_a.
    Returns None if E_a is empty.
    @returns ((ys, xs), (ys', xs')) : slices for the last two axes of a labelling
    """
    a = as_offset(a)
    if edge_count(domain, a) == 0:
        return None
    W, H = domain.width, domain.height
    src_x = slice(max(0, -a.dx), W - max(0, a.dx))
    dst_x = slice(max(0, a.dx), W - max(0, -a.dx))
    src_y = slice(max(0, -a.dy), H - max(0, a.dy))
    dst_y = slice(max(0, a.dy), H - max(0, -a.dy))
    return (src_y, src_x), (dst_y, dst_x)


def count_pairs(domain: GridDomain, a, n_labels: int, y: np.ndarray) -> np.ndarray:
    """
    Label pair co-occurrences n_a(k, k') of y along E_a.
    y may carry leading batch dimensions (..., H, W), the counts are summed over them.
    """
    K = n_labels
    slices = edge_slices(domain, a)
    if slices is None:
        return np.zeros((K, K))
    (sy, sx), (dy, dx) = slices
    src = y[..., sy, sx]
    dst = y[..., dy, dx]
    return np.bincount((src * K + dst).ravel(), minlength=K * K).reshape(K, K).astype(float)


def count_labels(n_labels: int, y: np.ndarray) -> np.ndarray:
    """n_0(k), summed over leading batch dimensions"""
    return np.bincount(np.asarray(y).ravel(), minlength=n_labels).astype(float)


def count_statistics(domain: GridDomain, structure: NeighborhoodStructure, labels: LabelSet, y) -> SufficientStatistics:
    y = validate_labelling(domain, labels, y)
    return SufficientStatistics(count_labels(labels.count, y),
                                {a: count_pairs(domain, a, labels.count, y) for a in structure.nonzero},
                                "counts")


def energy(model: GrfModel, y) -> float:
    """
    sum_t u_0(y_t) + sum_a sum_{(t,t') in E_a} u_a(y_t, y_t'), so that p(y) ~ exp(energy)
    """
    y = validate_labelling(model.domain, model.labels, y)
    pot = model.potentials
    e = pot.unary[y].sum()
    for a in model.structure.nonzero:
        slices = edge_slices(model.domain, a)
        if slices is None:
            continue
        (sy, sx), (dy, dx) = slices
        e += pot.pairwise[a][y[sy, sx], y[dy, dx]].sum()
    return float(e)


def inner(potentials: PotentialTable, stats: SufficientStatistics) -> float:
    """<u, n>, equals energy(y) if stats are the counts of y"""
    total = float(np.sum(potentials.unary * stats.unary))
    for a, u in potentials.pairwise.items():
        total += float(np.sum(u * stats.table(a)))
    return total


def normalize_potentials(potentials: PotentialTable) -> PotentialTable:
    """
    Canonical gauge: subtract the mean of every table so that it sums to zero
    """
    return PotentialTable(potentials.unary - potentials.unary.mean(),
                          {a: u - u.mean() for a, u in potentials.pairwise.items()})


def add_gauge_constants(potentials: PotentialTable, constants: dict) -> PotentialTable:
    """
    Add a constant c_a to every entry of u_a. Offsets missing in constants get c_a = 0.
    """
    constants = {as_offset(a): c for a, c in constants.items()}
    for a in constants:
        if a not in potentials.offsets:
            raise UnknownOffset(f"Gauge constant given for offset {a}, which has no potentials")
    return PotentialTable(potentials.unary + constants.get(ZERO, 0.0),
                          {a: u + constants.get(a, 0.0) for a, u in potentials.pairwise.items()})


def potential_norms(potentials: PotentialTable) -> dict[Offset, float]:
    """Frobenius norm of every pairwise table after canonical normalization"""
    canonical = normalize_potentials(potentials)
    return {a: float(np.linalg.norm(u)) for a, u in canonical.pairwise.items()}
