"""Synthetic interdependent systems.

All generators are pure functions of their spec and an integer seed.  Scale
free layers use the exponent convention ``p_k ~ k**-gamma`` with a positive
``gamma`` (a caption exponent of -2.3 is ``gamma=2.3`` here).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import LayerGraph, MultilayerSystem, make_pairing, normalize_edges

PAIRINGS = ("identity", "random_permutation", "random_subset")
MAX_SWAPS = 1_000_000


@dataclass(frozen=True)
class GenSpec:
    kind: str
    n: int
    mean_degree: float = 4.0
    gamma: float = 2.5
    k_min: int = 2
    k_max: int | None = None
    seed: int = 0

    def __post_init__(self):
        if self.kind not in ("er", "scale_free"):
            raise ValueError(f"unknown network kind {self.kind!r}")
        if self.n < 2:
            raise ValueError("n must be at least 2")
        if self.kind == "er":
            if not 0 < self.mean_degree <= self.n - 1:
                raise ValueError("mean_degree must lie in (0, n-1]")
        else:
            if not self.gamma > 1:
                raise ValueError("gamma must exceed 1")
            if self.k_min < 1:
                raise ValueError("k_min must be at least 1")
            if not self.k_min <= self.cutoff <= self.n - 1:
                raise ValueError("need k_min <= k_max <= n-1")

    @property
    def cutoff(self) -> int:
        """Degree cutoff; defaults to the structural cutoff ``floor(sqrt(n))``."""
        return self.k_max if self.k_max is not None else math.isqrt(self.n)

    def with_seed(self, seed: int) -> "GenSpec":
        return GenSpec(self.kind, self.n, self.mean_degree, self.gamma, self.k_min, self.k_max, seed)


@dataclass(frozen=True)
class OverlapSpec:
    omega: float
    base: GenSpec

    def __post_init__(self):
        if not 0.0 <= self.omega <= 1.0:
            raise ValueError("omega must lie in [0, 1]")


def _rng(seed) -> np.random.Generator:
    return np.random.default_rng(seed)


def _er_edges(n: int, q: float, rng: np.random.Generator) -> np.ndarray:
    """G(n, q) edge list: a binomial edge count, then that many distinct uniform pairs."""
    total = n * (n - 1) // 2
    m = int(rng.binomial(total, q)) if q < 1 else total
    if m == 0:
        return np.empty((0, 2), dtype=np.int64)
    if m > total // 2:
        # dense regime: enumerate all pairs
        iu = np.triu_indices(n, 1)
        keep = rng.random(total) < q
        return np.column_stack([iu[0][keep], iu[1][keep]]).astype(np.int64)
    codes = np.empty(0, dtype=np.int64)
    while codes.size < m:
        need = m - codes.size
        u = rng.integers(0, n, size=int(need * 1.1) + 16)
        v = rng.integers(0, n, size=u.size)
        ok = u != v
        a, b = np.minimum(u[ok], v[ok]), np.maximum(u[ok], v[ok])
        new = a * n + b
        # keep first occurrences in draw order so the result depends only on the seed
        merged = np.concatenate([codes, new])
        _, first = np.unique(merged, return_index=True)
        codes = merged[np.sort(first)]
    codes = codes[:m]
    return np.column_stack([codes // n, codes % n])


def gen_er(spec: GenSpec) -> LayerGraph:
    if spec.kind != "er":
        raise ValueError("gen_er needs an 'er' spec")
    q = spec.mean_degree / (spec.n - 1)
    edges = _er_edges(spec.n, q, _rng(spec.seed))
    return LayerGraph(spec.n, normalize_edges(edges, spec.n))


def sample_powerlaw_degrees(n, gamma, k_min, k_max, rng) -> np.ndarray:
    k = np.arange(k_min, k_max + 1)
    w = k.astype(float) ** -gamma
    deg = rng.choice(k, size=n, p=w / w.sum())
    if deg.sum() % 2:
        # resample one node until the stub count is even
        i = int(rng.integers(n))
        while True:
            d = rng.choice(k, p=w / w.sum())
            if (deg.sum() - deg[i] + d) % 2 == 0:
                deg[i] = d
                break
    return deg.astype(np.int64)


def _make_simple(edges: np.ndarray, rng: np.random.Generator, max_swaps: int = MAX_SWAPS) -> np.ndarray:
    """Remove self-loops and multi-edges by degree-preserving double-edge swaps."""
    edges = edges.copy()
    m = edges.shape[0]
    keys: dict[tuple[int, int], int] = {}
    for u, v in map(tuple, np.sort(edges, axis=1).tolist()):
        keys[(u, v)] = keys.get((u, v), 0) + 1

    def bad_indices():
        s = np.sort(edges, axis=1)
        codes = s[:, 0] * (s.max() + 1) + s[:, 1]
        _, inv, cnt = np.unique(codes, return_inverse=True, return_counts=True)
        dup = cnt[inv] > 1
        # keep one copy of each multi-edge
        first = np.zeros(m, dtype=bool)
        _, first_idx = np.unique(codes, return_index=True)
        first[first_idx] = True
        return np.flatnonzero((s[:, 0] == s[:, 1]) | (dup & ~first))

    def dec(key):
        c = keys[key] - 1
        if c:
            keys[key] = c
        else:
            del keys[key]

    swaps = 0
    bad = bad_indices()
    while bad.size:
        for i in bad.tolist():
            while True:
                a, b = int(edges[i, 0]), int(edges[i, 1])
                ka = (min(a, b), max(a, b))
                if a != b and keys.get(ka, 0) <= 1:
                    break
                if swaps >= max_swaps:
                    raise RuntimeError("could not make the degree sequence simple within the swap budget")
                swaps += 1
                j = int(rng.integers(m))
                if j == i:
                    continue
                c, d = int(edges[j, 0]), int(edges[j, 1])
                if rng.random() < 0.5:
                    c, d = d, c
                # (a,b),(c,d) -> (a,d),(c,b)
                if a == d or c == b:
                    continue
                n1, n2 = (min(a, d), max(a, d)), (min(c, b), max(c, b))
                if n1 in keys or n2 in keys or n1 == n2:
                    continue
                dec(ka)
                dec((min(c, d), max(c, d)))
                keys[n1] = 1
                keys[n2] = 1
                edges[i] = (a, d)
                edges[j] = (c, b)
        bad = bad_indices()
    return edges


def configuration_model(degrees, rng: np.random.Generator) -> np.ndarray:
    degrees = np.asarray(degrees, dtype=np.int64)
    if degrees.sum() % 2:
        raise ValueError("degree sum must be even")
    stubs = np.repeat(np.arange(degrees.size), degrees)
    rng.shuffle(stubs)
    edges = stubs.reshape(-1, 2)
    return _make_simple(edges, rng)


def gen_scale_free(spec: GenSpec) -> LayerGraph:
    if spec.kind != "scale_free":
        raise ValueError("gen_scale_free needs a 'scale_free' spec")
    rng = _rng(spec.seed)
    deg = sample_powerlaw_degrees(spec.n, spec.gamma, spec.k_min, spec.cutoff, rng)
    edges = configuration_model(deg, rng)
    return LayerGraph(spec.n, normalize_edges(edges, spec.n))


def gen_layer(spec: GenSpec) -> LayerGraph:
    return gen_er(spec) if spec.kind == "er" else gen_scale_free(spec)


def pair_layers(a: LayerGraph, b: LayerGraph, theta: float, pairing: str = "identity", seed=0) -> MultilayerSystem:
    """Couple two layers one-to-one.

    ``random_subset`` pairs ``min(n_a, n_b)`` randomly chosen nodes of the
    larger layer with every node of the smaller one; the rest stay
    dependence-free.
    """
    if pairing not in PAIRINGS:
        raise ValueError(f"unknown pairing {pairing!r}")
    rng = _rng(seed)
    if pairing in ("identity", "random_permutation") and a.n != b.n:
        raise ValueError(f"{pairing} pairing needs equal layer sizes, got {a.n} and {b.n}")
    if pairing == "identity":
        nx = ny = np.arange(a.n)
    elif pairing == "random_permutation":
        nx, ny = np.arange(a.n), rng.permutation(b.n)
    else:
        m = min(a.n, b.n)
        nx = np.sort(rng.choice(a.n, size=m, replace=False)) if a.n > m else np.arange(m)
        ny = rng.permutation(b.n)[:m] if b.n >= m else np.arange(m)
    layers = [a, b]
    return MultilayerSystem(layers, [make_pairing(layers, 0, 1, nx, ny, theta)], float(theta))


def overlap_layers(spec: OverlapSpec, seed=None) -> list[LayerGraph]:
    """Layer A from ``spec.base``; layer B shares a fraction ``omega`` of A's links.

    B copies each link of A with probability ``omega`` and adds an
    independent G(n, q) fill with ``q = (1 - omega) <k> / (n - 1)``.
    """
    base = spec.base
    if base.kind != "er":
        raise ValueError("overlap systems are built from ER layers")
    seed = base.seed if seed is None else seed
    sa, sb = _spawn(seed, 2)
    a = gen_er(base.with_seed(sa))
    rng = _rng(sb)
    if spec.omega >= 1.0:
        copied = a.edges
        fill = np.empty((0, 2), dtype=np.int64)
    else:
        copied = a.edges[rng.random(a.m) < spec.omega]
        fill = _er_edges(base.n, (1.0 - spec.omega) * base.mean_degree / (base.n - 1), rng)
    b = LayerGraph(base.n, normalize_edges(np.concatenate([copied, fill]), base.n))
    return [a, b]


def gen_overlap_system(spec: OverlapSpec, theta: float, seed=None) -> MultilayerSystem:
    a, b = overlap_layers(spec, seed)
    return pair_layers(a, b, theta, "identity")


def overlap_fraction(system: MultilayerSystem) -> float:
    """Share of B links whose identity-paired counterpart exists in A."""
    a, b = system.layers[0], system.layers[1]
    if b.m == 0:
        return 0.0
    n = max(a.n, b.n)
    ca = set((a.edges[:, 0] * n + a.edges[:, 1]).tolist())
    cb = (b.edges[:, 0] * n + b.edges[:, 1]).tolist()
    return sum(c in ca for c in cb) / len(cb)


def build_chain(specs: Sequence[GenSpec], theta: float, seed=0, layers: Sequence[LayerGraph] | None = None) -> MultilayerSystem:
    """Dependency chain L0 - L1 - ... with identity pairings between neighbours only.

    Each pairing is mutual; a middle layer node carries one coupling strength
    per neighbouring layer.
    """
    if layers is None:
        if len(specs) < 3:
            raise ValueError("a chain needs at least three layers")
        layers = [gen_layer(s.with_seed(ss)) for s, ss in zip(specs, _spawn(seed, len(specs)))]
    layers = list(layers)
    if len(layers) < 3:
        raise ValueError("a chain needs at least three layers")
    if len({g.n for g in layers}) != 1:
        raise ValueError("chain layers must have equal sizes")
    ids = np.arange(layers[0].n)
    prs = [make_pairing(layers, i, i + 1, ids, ids, theta) for i in range(len(layers) - 1)]
    return MultilayerSystem(layers, prs, float(theta))


def _spawn(seed, k) -> list[int]:
    """``k`` independent integer seeds derived from ``seed``."""
    ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    return [int(c.generate_state(2, np.uint64)[0]) for c in ss.spawn(k)]


# --- ensemble recipes (see cascade.run_ensemble) ----------------------------

@dataclass(frozen=True)
class TwoLayerRecipe:
    """Two independently generated layers of the same kind."""

    base: GenSpec
    pairing: str = "identity"

    def make_layers(self, seed):
        return [gen_layer(self.base.with_seed(s)) for s in _spawn(seed, 2)]

    def couple(self, layers, theta, seed):
        return pair_layers(layers[0], layers[1], theta, self.pairing, seed)


@dataclass(frozen=True)
class OverlapRecipe:
    spec: OverlapSpec

    def make_layers(self, seed):
        return overlap_layers(self.spec, seed)

    def couple(self, layers, theta, seed):
        return pair_layers(layers[0], layers[1], theta, "identity")


@dataclass(frozen=True)
class ChainRecipe:
    specs: tuple[GenSpec, ...]

    def make_layers(self, seed):
        return [gen_layer(s.with_seed(ss)) for s, ss in zip(self.specs, _spawn(seed, len(self.specs)))]

    def couple(self, layers, theta, seed):
        return build_chain(self.specs, theta, layers=layers)


@dataclass(frozen=True, eq=False)
class FixedLayersRecipe:
    """Given layers (e.g. loaded from files); only the pairing is redrawn per realization."""

    layers: tuple[LayerGraph, LayerGraph]
    pairing: str = "random_subset"

    def make_layers(self, seed):
        return list(self.layers)

    def couple(self, layers, theta, seed):
        return pair_layers(layers[0], layers[1], theta, self.pairing, seed)
