"""
Single site Gibbs sampling from the prior p(y) and from posteriors p(y | x, y_V).

A SamplerChain may hold several independent replicas of the chain (config.n_chains).
They share one random stream and are updated in lockstep, which vectorizes the
per site updates. Every estimate pools all replicas.

Random numbers come from numpy's PCG64, seeded with SeedSequence((seed, chain_index)),
so that (seed, config, model, evidence) determine every sample on every platform.
"""
import logging
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from grf_shape.core.grid import GrfModel, SufficientStatistics, as_offset, count_labels, count_pairs
from grf_shape.core.evidence import Evidence, FREE, check_consistent
from grf_shape.core.appearance import AppearanceModel, likelihood_field
from grf_shape.errors import OutOfDomain, MissingAppearance

log = logging.getLogger(__name__)

SCAN_MODES = ("raster", "random", "block")


@dataclass(frozen=True)
class SamplerConfig:
    """
    @param burn_in: sweeps before the first retained sample
    @param n_samples: number of retained samples (per replica)
    @param thinning: sweeps between retained samples
    @param seed: seed of the random stream
    @param scan: 'raster' (default), 'random' (random permutation each sweep) or
        'block' (sites that share no edge are updated together)
    @param n_chains: number of independent replicas
    """
    burn_in: int = 1000
    n_samples: int = 100
    thinning: int = 1
    seed: int = 0
    scan: str = "raster"
    n_chains: int = 1

    def __post_init__(self):
        if self.burn_in < 0:
            raise ValueError(f"SamplerConfig: burn_in must be >= 0, got {self.burn_in}")
        if self.n_samples < 1:
            raise ValueError(f"SamplerConfig: n_samples must be >= 1, got {self.n_samples}")
        if self.thinning < 1:
            raise ValueError(f"SamplerConfig: thinning must be >= 1, got {self.thinning}")
        if self.scan not in SCAN_MODES:
            raise ValueError(f"SamplerConfig: scan must be one of {SCAN_MODES}, got '{self.scan}'")
        if self.n_chains < 1:
            raise ValueError(f"SamplerConfig: n_chains must be >= 1, got {self.n_chains}")


def make_rng(seed: int, chain_index: int = 0) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence((int(seed) & (2**64 - 1), int(chain_index)))))


def _normalize_log(logits: np.ndarray) -> np.ndarray:
    return np.exp(logits - logsumexp(logits, axis=-1, keepdims=True))


def site_conditional(model: GrfModel, y, t, evidence: Evidence | None = None, appearance: AppearanceModel | None = None) -> np.ndarray:
    """
    Full conditional p(y_t = k | y_rest, x_t) of node t = (x, y).
    @returns probabilities of shape (K,)
    """
    x0, y0 = t
    domain = model.domain
    if not domain.contains(x0, y0):
        raise OutOfDomain(f"Node {t} is not in the domain {domain}")
    y = np.asarray(y)
    pot = model.potentials
    logits = pot.unary.copy()
    for a in model.structure.nonzero:
        u = pot.pairwise[a]
        if domain.contains(x0 + a.dx, y0 + a.dy):
            logits += u[:, y[y0 + a.dy, x0 + a.dx]]
        if domain.contains(x0 - a.dx, y0 - a.dy):
            logits += u[y[y0 - a.dy, x0 - a.dx], :]
    if evidence is not None and evidence.image is not None:
        if appearance is None:
            raise MissingAppearance("An image is given but no appearance model")
        logits += likelihood_field(appearance, evidence.image[y0:y0 + 1, x0:x0 + 1])[0, 0]
    return _normalize_log(logits)


class SamplerChain:
    """
    Stateful Gibbs chain, owned by one worker at a time.
    Clamped nodes never change.
    """
    def __init__(self, model: GrfModel, evidence: Evidence | None, appearance: AppearanceModel | None, labels: np.ndarray, rng: np.random.Generator, scan: str = "raster"):
        self.model = model
        self.evidence = evidence
        self.appearance = appearance
        self.rng = rng
        self.scan = scan
        self.sweeps = 0
        R = labels.shape[0]
        N = model.domain.size
        # the last column is a dummy neighbour for padded neighbour lists
        self._flat = np.zeros((R, N + 1), dtype=np.int64)
        self._flat[:, :N] = labels.reshape(R, N)
        mask = np.zeros(N, dtype=bool) if evidence is None else evidence.clamp_mask(model.domain.shape).ravel()
        self._free = np.flatnonzero(~mask)
        self._build_neighbours()
        self._build_tables()
        self._build_field()

    @property
    def labels(self) -> np.ndarray:
        """Current labellings of all replicas, shape (R, H, W)"""
        R = self._flat.shape[0]
        return self._flat[:, :-1].reshape((R,) + self.model.domain.shape)

    @property
    def labelling(self) -> np.ndarray:
        """Current labelling of the first replica"""
        return self.labels[0].copy()

    @property
    def n_chains(self) -> int:
        return self._flat.shape[0]

    def _build_neighbours(self):
        domain = self.model.domain
        offsets = self.model.structure.nonzero
        W, H, N = domain.width, domain.height, domain.size
        F = max(1, 2 * len(offsets))
        self._pad_table = 2 * len(offsets)
        tab = np.full((N, F), self._pad_table, dtype=np.int64)
        nbr = np.full((N, F), N, dtype=np.int64)
        ys, xs = np.divmod(np.arange(N), W)
        for i, a in enumerate(offsets):
            fwd = (xs + a.dx >= 0) & (xs + a.dx < W) & (ys + a.dy >= 0) & (ys + a.dy < H)
            tab[fwd, 2 * i] = 2 * i
            nbr[fwd, 2 * i] = ((ys + a.dy) * W + xs + a.dx)[fwd]
            bwd = (xs - a.dx >= 0) & (xs - a.dx < W) & (ys - a.dy >= 0) & (ys - a.dy < H)
            tab[bwd, 2 * i + 1] = 2 * i + 1
            nbr[bwd, 2 * i + 1] = ((ys - a.dy) * W + xs - a.dx)[bwd]
        self._tab = tab
        self._nbr = nbr
        self._structure = self.model.structure

    def _build_tables(self):
        K = self.model.labels.count
        pot = self.model.potentials
        tables = np.zeros((2 * len(self.model.structure.nonzero) + 1, K, K))
        for i, a in enumerate(self.model.structure.nonzero):
            # forward neighbour t + a with label l adds u_a(k, l), backward neighbour t - a adds u_a(l, k)
            tables[2 * i] = pot.pairwise[a].T
            tables[2 * i + 1] = pot.pairwise[a]
        self._tables = tables
        self._unary = pot.unary

    def _build_field(self):
        N, K = self.model.domain.size, self.model.labels.count
        self._field = np.zeros((N, K))
        if self.evidence is not None and self.evidence.image is not None:
            if self.appearance is None:
                raise MissingAppearance("An image is given but no appearance model")
            self._field = likelihood_field(self.appearance, self.evidence.image).reshape(N, K)

    def set_model(self, model: GrfModel):
        """Continue the chain with new potentials (and possibly a new structure)"""
        self.model = model
        if model.structure != self._structure:
            self._build_neighbours()
        self._build_tables()

    def set_appearance(self, appearance: AppearanceModel):
        self.appearance = appearance
        self._build_field()

    def conditionals(self, sites: np.ndarray) -> np.ndarray:
        """
        Full conditionals of the given flat site indices for all replicas, shape (R, M, K)
        """
        sites = np.asarray(sites)
        pair_terms = self._tables[self._tab[sites][np.newaxis], self._flat[:, self._nbr[sites]], :].sum(axis=2)
        logits = self._unary + self._field[sites] + pair_terms
        return _normalize_log(logits)

    def _site_groups(self):
        if self.scan == "raster":
            return [self._free[i:i + 1] for i in range(self._free.shape[0])]
        if self.scan == "random":
            order = self.rng.permutation(self._free)
            return [order[i:i + 1] for i in range(order.shape[0])]
        # block: residue classes (x mod p, y mod q) contain no edges
        p, q = self.model.structure.max_range()
        p, q = p + 1, q + 1
        W = self.model.domain.width
        ys, xs = np.divmod(self._free, W)
        classes = (ys % q) * p + (xs % p)
        return [self._free[classes == c] for c in range(p * q) if np.any(classes == c)]

    def sweep(self) -> "SamplerChain":
        """Resample every free node once"""
        K = self.model.labels.count
        R = self._flat.shape[0]
        for sites in self._site_groups():
            cdf = np.cumsum(self.conditionals(sites), axis=-1)
            u = self.rng.random((R, sites.shape[0], 1)) * cdf[..., -1:]
            self._flat[:, sites] = np.minimum((cdf < u).sum(axis=-1), K - 1)
        self.sweeps += 1
        return self

    def statistics(self, offsets=None) -> SufficientStatistics:
        """Count statistics of the current labellings, averaged over the replicas"""
        domain, K = self.model.domain, self.model.labels.count
        offsets = self.model.structure.nonzero if offsets is None else [as_offset(a) for a in offsets if not as_offset(a).is_zero()]
        labels = self.labels
        R = labels.shape[0]
        return SufficientStatistics(count_labels(K, labels) / R,
                                    {a: count_pairs(domain, a, K, labels) / R for a in offsets},
                                    "counts" if R == 1 else "expectations")


def init_chain(model: GrfModel, evidence: Evidence | None = None, appearance: AppearanceModel | None = None, config: SamplerConfig | None = None, init=None, chain_index: int = 0) -> SamplerChain:
    """
    Create a chain. Its labelling is init (for every replica), or the clamps with free nodes drawn uniformly.
    """
    config = config or SamplerConfig()
    domain, K = model.domain, model.labels.count
    if evidence is not None:
        evidence.validate(domain, model.labels)
        if evidence.image is not None and appearance is None:
            raise MissingAppearance("An image is given but no appearance model")
    rng = make_rng(config.seed, chain_index)
    R = config.n_chains
    if init is not None:
        init = check_consistent(evidence, domain, model.labels, init)
        labels = np.tile(init[np.newaxis], (R, 1, 1))
    else:
        labels = rng.integers(0, K, size=(R,) + domain.shape)
        if evidence is not None and evidence.clamps is not None:
            mask = evidence.clamps != FREE
            labels[:, mask] = evidence.clamps[mask]
    return SamplerChain(model, evidence, appearance, labels, rng, config.scan)


def sweep(chain: SamplerChain) -> SamplerChain:
    return chain.sweep()


def iter_samples(chain: SamplerChain, config: SamplerConfig):
    """
    Run burn_in sweeps, then yield n_samples batches (R, H, W) spaced by thinning sweeps
    """
    for _ in range(config.burn_in):
        chain.sweep()
    for _ in range(config.n_samples):
        for _ in range(config.thinning):
            chain.sweep()
        yield chain.labels.copy()


def sample(chain: SamplerChain, config: SamplerConfig) -> list:
    """
    @returns list of labellings, n_samples per replica, replicas of one retained sweep adjacent
    """
    samples = []
    for batch in iter_samples(chain, config):
        samples.extend(batch)
    return samples


def estimate_marginals(model: GrfModel, evidence: Evidence | None = None, appearance: AppearanceModel | None = None, config: SamplerConfig | None = None, init=None, chain_index: int = 0) -> np.ndarray:
    """
    Per node label frequencies over the retained samples, array (H, W, K)
    """
    config = config or SamplerConfig()
    K = model.labels.count
    chain = init_chain(model, evidence, appearance, config, init, chain_index)
    counts = np.zeros(model.domain.shape + (K,))
    total = 0
    for batch in iter_samples(chain, config):
        counts += (batch[..., np.newaxis] == np.arange(K)).sum(axis=0)
        total += batch.shape[0]
    return counts / total


def estimate_statistics(model: GrfModel, evidence: Evidence | None = None, appearance: AppearanceModel | None = None, config: SamplerConfig | None = None, init=None, offsets=None, chain_index: int = 0) -> SufficientStatistics:
    """
    Average count statistics over the retained samples. offsets defaults to the model structure,
    other offsets may be given to collect statistics of candidate edges.
    """
    config = config or SamplerConfig()
    domain, K = model.domain, model.labels.count
    offsets = model.structure.nonzero if offsets is None else [as_offset(a) for a in offsets if not as_offset(a).is_zero()]
    chain = init_chain(model, evidence, appearance, config, init, chain_index)
    unary = np.zeros(K)
    pairwise = {a: np.zeros((K, K)) for a in offsets}
    total = 0
    for batch in iter_samples(chain, config):
        unary += count_labels(K, batch)
        for a in offsets:
            pairwise[a] += count_pairs(domain, a, K, batch)
        total += batch.shape[0]
    return SufficientStatistics(unary / total, {a: n / total for a, n in pairwise.items()}, "expectations")
