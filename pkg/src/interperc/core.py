"""Graph and interdependence data model.

Layers are stored as undirected edge arrays (``u < v``) so that the cascade
engine can mask links with vectorised operations.  Connected components are
found with a compiled union-find pass over the currently alive links.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numba
import numpy as np
from scipy.special import expit


def coupling_strengths(k_a, k_b, theta):
    """Interdependence strengths of a pair of partner nodes.

    ``alpha_a = k_a**theta / (k_a**theta + k_b**theta)`` and
    ``alpha_b = 1 - alpha_a``.  Works on scalars or broadcastable arrays.

    The ratio ``r = (k_a / k_b)**theta`` is evaluated in log space so that
    large ``|theta|`` saturates at 0 or 1 instead of overflowing.  A single
    zero degree takes the limiting value of the formula (``0**theta`` is 0
    for positive theta and infinite for negative theta); two zero degrees,
    or a zero degree at ``theta == 0``, give 0.5.

    Returns
    -------
    (alpha_a, alpha_b) : floats or arrays
    """
    theta = float(theta)
    if not math.isfinite(theta):
        raise ValueError(f"theta must be finite, got {theta!r}")
    scalar = np.ndim(k_a) == 0 and np.ndim(k_b) == 0
    ka = np.asarray(k_a, dtype=float)
    kb = np.asarray(k_b, dtype=float)
    if np.any(ka < 0) or np.any(kb < 0):
        raise ValueError("degrees must be non-negative")
    ka, kb = np.broadcast_arrays(ka, kb)

    # theta * log(k_a / k_b); +-inf where exactly one degree is zero
    with np.errstate(divide="ignore", invalid="ignore"):
        x = theta * (np.log(np.where(ka > 0, ka, 1.0)) - np.log(np.where(kb > 0, kb, 1.0)))
    if theta != 0.0:
        x = np.where((ka == 0) & (kb > 0), -math.copysign(np.inf, theta), x)
        x = np.where((ka > 0) & (kb == 0), math.copysign(np.inf, theta), x)
    alpha_a = expit(x)
    alpha_b = 1.0 - alpha_a
    if scalar:
        return float(alpha_a), float(alpha_b)
    return alpha_a, alpha_b


@numba.njit(cache=True)
def _find(parent, i):
    while parent[i] != i:
        parent[i] = parent[parent[i]]
        i = parent[i]
    return i


@numba.njit(cache=True)
def _giant_mask(n, eu, ev, link_ok, alive):
    parent = np.arange(n)
    size = np.ones(n, dtype=np.int64)
    for e in range(eu.shape[0]):
        if not link_ok[e]:
            continue
        a = eu[e]
        b = ev[e]
        if not (alive[a] and alive[b]):
            continue
        ra = _find(parent, a)
        rb = _find(parent, b)
        if ra == rb:
            continue
        if size[ra] < size[rb]:
            ra, rb = rb, ra
        parent[rb] = ra
        size[ra] += size[rb]

    best = 0
    best_root = -1
    for i in range(n):
        if alive[i]:
            r = _find(parent, i)
            # strict comparison: the first node seen wins ties
            if size[r] > best:
                best = size[r]
                best_root = r
    out = np.zeros(n, dtype=np.bool_)
    if best_root < 0:
        return out
    for i in range(n):
        if alive[i] and _find(parent, i) == best_root:
            out[i] = True
    return out


def giant_mask(n: int, edges: np.ndarray, link_alive: np.ndarray, alive: np.ndarray) -> np.ndarray:
    """Boolean membership mask of the largest component over alive nodes/links.

    Ties between equal-size components go to the one holding the smallest
    node id.
    """
    return _giant_mask(
        n,
        np.ascontiguousarray(edges[:, 0]),
        np.ascontiguousarray(edges[:, 1]),
        np.ascontiguousarray(link_alive, dtype=np.bool_),
        np.ascontiguousarray(alive, dtype=np.bool_),
    )


def normalize_edges(edges, n: int) -> np.ndarray:
    """Return a sorted, deduplicated ``(m, 2)`` int array with ``u < v`` and no self-loops."""
    e = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
    if e.size and (e.min() < 0 or e.max() >= n):
        raise ValueError("edge endpoint out of range")
    e = np.sort(e, axis=1)
    e = e[e[:, 0] != e[:, 1]]
    if e.shape[0] == 0:
        return np.empty((0, 2), dtype=np.int64)
    return np.unique(e, axis=0)


@dataclass
class LayerGraph:
    """One undirected network layer.

    ``alive`` and ``link_alive`` describe a damage state.  Freshly built
    layers are intact; the cascade engine copies these arrays into run-local
    scratch space and never mutates the layer itself.
    """

    n: int
    edges: np.ndarray
    alive: np.ndarray = None
    link_alive: np.ndarray = None
    _degrees0: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        if self.n < 0:
            raise ValueError("node count must be non-negative")
        self.edges = np.asarray(self.edges, dtype=np.int64).reshape(-1, 2)
        if self.alive is None:
            self.alive = np.ones(self.n, dtype=bool)
        if self.link_alive is None:
            self.link_alive = np.ones(self.edges.shape[0], dtype=bool)
        self._degrees0 = np.bincount(self.edges.ravel(), minlength=self.n).astype(np.int64)

    @classmethod
    def from_edges(cls, n: int, edges) -> "LayerGraph":
        return cls(n, normalize_edges(edges, n))

    @property
    def m(self) -> int:
        return int(self.edges.shape[0])

    def adjacency(self) -> list[list[int]]:
        """Per-node sorted neighbour lists over all construction-time links."""
        adj: list[list[int]] = [[] for _ in range(self.n)]
        for u, v in self.edges.tolist():
            adj[u].append(v)
            adj[v].append(u)
        for nb in adj:
            nb.sort()
        return adj

    def current_degrees(self) -> np.ndarray:
        ok = self.link_alive & self.alive[self.edges[:, 0]] & self.alive[self.edges[:, 1]]
        return np.bincount(self.edges[ok].ravel(), minlength=self.n)

    def copy(self) -> "LayerGraph":
        return LayerGraph(self.n, self.edges.copy(), self.alive.copy(), self.link_alive.copy())


def degree_sequence(layer: LayerGraph) -> np.ndarray:
    """Construction-time degrees; unaffected by later damage."""
    return layer._degrees0.copy()


def giant_component(layer: LayerGraph) -> set[int]:
    mask = giant_mask(layer.n, layer.edges, layer.link_alive, layer.alive)
    return set(np.flatnonzero(mask).tolist())


@dataclass(frozen=True)
class CouplingPair:
    node_a: int
    node_b: int
    alpha_a: float
    alpha_b: float


@dataclass
class Pairing:
    """One-to-one interdependence between two layers.

    ``nodes_x[i]`` in layer ``layer_x`` depends on ``nodes_y[i]`` in layer
    ``layer_y`` and vice versa.  ``alpha_x[i]`` is the probability that each
    link of ``nodes_x[i]`` survives when ``nodes_y[i]`` fails.
    """

    layer_x: int
    layer_y: int
    nodes_x: np.ndarray
    nodes_y: np.ndarray
    alpha_x: np.ndarray
    alpha_y: np.ndarray

    def __len__(self):
        return int(self.nodes_x.shape[0])

    def pairs(self) -> Iterator[CouplingPair]:
        for a, b, xa, xb in zip(self.nodes_x.tolist(), self.nodes_y.tolist(),
                                self.alpha_x.tolist(), self.alpha_y.tolist()):
            yield CouplingPair(a, b, xa, xb)


@dataclass
class MultilayerSystem:
    layers: list[LayerGraph]
    pairings: list[Pairing]
    theta: float

    def __post_init__(self):
        for pr in self.pairings:
            if not (0 <= pr.layer_x < len(self.layers) and 0 <= pr.layer_y < len(self.layers)):
                raise ValueError("pairing references a missing layer")
            if pr.layer_x == pr.layer_y:
                raise ValueError("a layer cannot be paired with itself")
            for nodes, layer in ((pr.nodes_x, pr.layer_x), (pr.nodes_y, pr.layer_y)):
                if len(nodes) and (nodes.min() < 0 or nodes.max() >= self.layers[layer].n):
                    raise ValueError("pairing references an invalid node id")
                if np.unique(nodes).shape[0] != nodes.shape[0]:
                    raise ValueError("a node may take part in at most one pair per pairing")

    @property
    def total_nodes(self) -> int:
        return sum(layer.n for layer in self.layers)

    def with_alpha(self, value: float) -> "MultilayerSystem":
        """Copy with every coupling strength forced to ``value`` (1.0 disables interdependence)."""
        prs = [
            Pairing(p.layer_x, p.layer_y, p.nodes_x, p.nodes_y,
                    np.full(len(p), float(value)), np.full(len(p), float(value)))
            for p in self.pairings
        ]
        return MultilayerSystem(self.layers, prs, self.theta)


def make_pairing(layers: Sequence[LayerGraph], x: int, y: int, nodes_x, nodes_y, theta: float) -> Pairing:
    nodes_x = np.asarray(nodes_x, dtype=np.int64)
    nodes_y = np.asarray(nodes_y, dtype=np.int64)
    kx = degree_sequence(layers[x])[nodes_x]
    ky = degree_sequence(layers[y])[nodes_y]
    ax, ay = coupling_strengths(kx, ky, theta)
    return Pairing(x, y, nodes_x, nodes_y, np.asarray(ax, dtype=float), np.asarray(ay, dtype=float))
