"""
Exact inference by brute force enumeration of all labellings on tiny domains.

Used to verify the sampler and the learning algorithms. All sums are accumulated
in the log domain. Clamped nodes are not enumerated.
"""
import logging
from fractions import Fraction
from itertools import product

import numpy as np
from scipy.special import logsumexp

from grf_shape.core.grid import GrfModel, GridDomain, NeighborhoodStructure, SufficientStatistics, edge_slices
from grf_shape.core.evidence import Evidence, FREE
from grf_shape.core.appearance import AppearanceModel, likelihood_field
from grf_shape.errors import DomainTooLarge, MissingAppearance, IncompatibleModels, DimensionMismatch
from grf_shape.settings import settings

log = logging.getLogger(__name__)

CHUNK_SIZE = 2**16


class _Enumeration:
    """
    All labellings consistent with the evidence, generated in chunks of flat (n, H*W) label arrays,
    together with their unnormalized log weights.
    """
    def __init__(self, model: GrfModel, evidence: Evidence | None = None, appearance: AppearanceModel | None = None, cap: int | None = None, use_evidence=True):
        self.model = model
        domain, K = model.domain, model.labels.count
        N = domain.size
        cap = cap or settings["enumeration_cap"]
        self.fixed = np.full(N, FREE, dtype=np.int64)
        self.field = None
        if evidence is not None and use_evidence:
            evidence.validate(domain, model.labels)
            if evidence.clamps is not None:
                self.fixed = evidence.clamps.ravel().copy()
            if evidence.image is not None:
                if appearance is None:
                    raise MissingAppearance("An image is given but no appearance model")
                self.field = likelihood_field(appearance, evidence.image).reshape(N, K)
        self.free = np.flatnonzero(self.fixed == FREE)
        self.n_configs = K ** len(self.free)
        if self.n_configs > cap:
            raise DomainTooLarge(f"{K}^{len(self.free)} labellings exceed the enumeration cap of {cap}")
        # flat index pairs per offset
        index = np.arange(N).reshape(domain.shape)
        self.edges = []
        for a in model.structure.nonzero:
            slices = edge_slices(domain, a)
            if slices is None:
                continue
            (sy, sx), (dy, dx) = slices
            self.edges.append((model.potentials.pairwise[a], index[sy, sx].ravel(), index[dy, dx].ravel()))

    def chunks(self):
        K = self.model.labels.count
        n_free = len(self.free)
        powers = K ** np.arange(n_free, dtype=np.int64)
        for start in range(0, self.n_configs, CHUNK_SIZE):
            codes = np.arange(start, min(start + CHUNK_SIZE, self.n_configs), dtype=np.int64)
            y = np.tile(self.fixed, (codes.shape[0], 1))
            if n_free:
                y[:, self.free] = (codes[:, np.newaxis] // powers) % K
            yield y, self.log_weights(y)

    def log_weights(self, y: np.ndarray) -> np.ndarray:
        pot = self.model.potentials
        w = pot.unary[y].sum(axis=1)
        for u, src, dst in self.edges:
            w += u[y[:, src], y[:, dst]].sum(axis=1)
        if self.field is not None:
            w += self.field[np.arange(y.shape[1]), y].sum(axis=1)
        return w

    def log_normalizer(self) -> float:
        return float(logsumexp([logsumexp(w) for _, w in self.chunks()]))


def partition_function(model: GrfModel, cap: int | None = None) -> float:
    """
    @returns log Z
    """
    return _Enumeration(model, cap=cap).log_normalizer()


def log_probabilities(model: GrfModel, cap: int | None = None) -> np.ndarray:
    """log p(y) for all labellings, in enumeration order (first node varies fastest)"""
    enum = _Enumeration(model, cap=cap)
    log_z = enum.log_normalizer()
    return np.concatenate([w - log_z for _, w in enum.chunks()])


def _accumulate(model: GrfModel, evidence, appearance, cap, statistics: bool):
    """Exact marginals (H, W, K) and expected statistics under prior (evidence None) or posterior"""
    enum = _Enumeration(model, evidence, appearance, cap)
    log_z = enum.log_normalizer()
    domain, K = model.domain, model.labels.count
    N = domain.size
    marginals = np.zeros((N, K))
    pairwise = {a: np.zeros((K, K)) for a in model.structure.nonzero}
    index = np.arange(N).reshape(domain.shape)
    edge_index = {}
    for a in model.structure.nonzero:
        slices = edge_slices(domain, a)
        if slices is not None:
            (sy, sx), (dy, dx) = slices
            edge_index[a] = (index[sy, sx].ravel(), index[dy, dx].ravel())
    for y, w in enum.chunks():
        p = np.exp(w - log_z)
        for k in range(K):
            marginals[:, k] += p @ (y == k)
        if statistics:
            for a, (src, dst) in edge_index.items():
                codes = y[:, src] * K + y[:, dst]
                pairwise[a] += np.bincount(codes.ravel(), weights=np.repeat(p, codes.shape[1]), minlength=K * K).reshape(K, K)
    unary = marginals.sum(axis=0)
    stats = SufficientStatistics(unary, pairwise, "expectations")
    return marginals.reshape(domain.height, domain.width, K), stats


def exact_marginals(model: GrfModel, evidence: Evidence | None = None, appearance: AppearanceModel | None = None, cap: int | None = None) -> np.ndarray:
    """
    Exact per node marginals p(y_t = k | evidence) as array (H, W, K)
    """
    marginals, _ = _accumulate(model, evidence, appearance, cap, statistics=False)
    return marginals


def exact_statistics_expectation(model: GrfModel, evidence: Evidence | None = None, appearance: AppearanceModel | None = None, cap: int | None = None) -> SufficientStatistics:
    """
    E[Phi] under the prior (no evidence) or the posterior given the evidence
    """
    _, stats = _accumulate(model, evidence, appearance, cap, statistics=True)
    return stats


def exact_loglik_gradient(model: GrfModel, evidence: Evidence, appearance: AppearanceModel | None = None, cap: int | None = None) -> SufficientStatistics:
    """
    dL/du_a(k,k') = E_posterior[n_a(k,k')] - E_prior[n_a(k,k')]
    """
    posterior = exact_statistics_expectation(model, evidence, appearance, cap)
    prior = exact_statistics_expectation(model, None, None, cap)
    return posterior - prior


def distributions_equal(m1: GrfModel, m2: GrfModel, tol: float = 1e-12, cap: int | None = None) -> bool:
    """
    True iff max_y |p1(y) - p2(y)| <= tol
    """
    if m1.domain != m2.domain or m1.labels.count != m2.labels.count:
        raise IncompatibleModels(f"Models on {m1.domain}/{m1.labels.count} labels and {m2.domain}/{m2.labels.count} labels")
    p1 = np.exp(log_probabilities(m1, cap))
    p2 = np.exp(log_probabilities(m2, cap))
    deviation = float(np.max(np.abs(p1 - p2)))
    log.debug(f"distributions_equal: max deviation {deviation}")
    return deviation <= tol


def modularity_defect(v) -> float:
    """
    max over k1, k2, k1', k2' of |v(k1,k1') + v(k2,k2') - v(k1,k2') - v(k2,k1')|.
    Zero iff v(k, k') = f(k) + g(k').
    """
    v = np.asarray(v, dtype=float)
    if v.ndim != 2 or v.shape[0] != v.shape[1]:
        raise DimensionMismatch(f"modularity_defect needs a square table, got shape {v.shape}")
    # d[k1, k2, k1', k2']
    d = v[:, np.newaxis, :, np.newaxis] + v[np.newaxis, :, np.newaxis, :] - v[:, np.newaxis, np.newaxis, :] - v[np.newaxis, :, :, np.newaxis]
    return float(np.abs(d).max())


def _z_vector(domain: GridDomain, structure: NeighborhoodStructure, x: int, y: int) -> tuple:
    z = [1]
    z += [int(domain.contains(x + a.dx, y + a.dy)) for a in structure.nonzero]
    z += [int(domain.contains(x - a.dx, y - a.dy)) for a in structure.nonzero]
    return tuple(z)


def _rank(vectors: list) -> int:
    """Exact rank by Gaussian elimination over the rationals"""
    rows = [[Fraction(v) for v in vec] for vec in vectors]
    rank = 0
    n_cols = len(rows[0]) if rows else 0
    for col in range(n_cols):
        pivot = next((r for r in range(rank, len(rows)) if rows[r][col] != 0), None)
        if pivot is None:
            continue
        rows[rank], rows[pivot] = rows[pivot], rows[rank]
        for r in range(len(rows)):
            if r != rank and rows[r][col] != 0:
                factor = rows[r][col] / rows[rank][col]
                rows[r] = [a - factor * b for a, b in zip(rows[r], rows[rank])]
        rank += 1
    return rank


def gauge_rank(domain: GridDomain, structure: NeighborhoodStructure) -> tuple[int, bool]:
    """
    Rank of the boundary class vectors z(t) and whether they span the space of dimension 2|A| - 1.
    If they do, equivalent potentials differ only by additive constants.
    """
    classes = {_z_vector(domain, structure, x, y) for y in range(domain.height) for x in range(domain.width)}
    rank = _rank(sorted(classes))
    return rank, rank == 2 * len(structure) - 1


def enumerate_labellings(domain: GridDomain, n_labels: int):
    """Iterate over all labellings of a tiny domain (for tests)"""
    for values in product(range(n_labels), repeat=domain.size):
        # first node varies fastest, like the enumeration above
        yield np.array(values[::-1]).reshape(domain.shape)
