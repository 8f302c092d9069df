"""Cascading failures on interdependent layers.

One run:

1. every node of every layer is removed independently with probability
   ``1 - p``;
2. each removed node whose partner is still alive decimates the partner:
   every alive link of the partner survives with the partner's coupling
   strength, independently;
3. a pass recomputes every layer's giant component, fails all alive nodes
   outside it, then lets each newly failed node decimate its partner (if
   the partner survived the same pass);
4. passes repeat until one of them fails no node.

The pass count, including the final quiet pass, is the number of
iterations (NOI).
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Protocol, Sequence

import numpy as np

from .core import LayerGraph, MultilayerSystem, giant_mask

S_MIN = 0.005
JUMP_THRESHOLD = 0.1


@dataclass(frozen=True)
class CascadeConfig:
    p: float
    seed: int | np.random.SeedSequence = 0
    max_iterations: int | None = None

    def __post_init__(self):
        if not 0.0 <= self.p <= 1.0:
            raise ValueError(f"p must lie in [0, 1], got {self.p}")


@dataclass
class CascadeOutcome:
    s_per_layer: tuple[float, ...]
    noi: int
    seed: object = None
    alive: list[np.ndarray] = field(default=None, repr=False)


class CascadeError(RuntimeError):
    pass


class _Run:
    """Run-local damage state; the system itself is never mutated."""

    def __init__(self, system: MultilayerSystem, rng: np.random.Generator):
        self.sys = system
        self.rng = rng
        self.alive = [layer.alive.copy() for layer in system.layers]
        self.link_alive = [layer.link_alive.copy() for layer in system.layers]

    def decimate(self, newly_dead: Sequence[np.ndarray]) -> None:
        keep: dict[int, np.ndarray] = {}
        for pr in self.sys.pairings:
            for src, dst, nsrc, ndst, a_dst in (
                (pr.layer_x, pr.layer_y, pr.nodes_x, pr.nodes_y, pr.alpha_y),
                (pr.layer_y, pr.layer_x, pr.nodes_y, pr.nodes_x, pr.alpha_x),
            ):
                nd = newly_dead[src]
                if nd is None:
                    continue
                hit = nd[nsrc] & self.alive[dst][ndst]
                if not hit.any():
                    continue
                kp = keep.get(dst)
                if kp is None:
                    kp = keep[dst] = np.ones(self.sys.layers[dst].n)
                # a node dependent through two pairings gets two independent trials
                np.multiply.at(kp, ndst[hit], a_dst[hit])
        for li in sorted(keep):
            kp = keep[li]
            layer = self.sys.layers[li]
            u, v = layer.edges[:, 0], layer.edges[:, 1]
            al = self.alive[li]
            pe = kp[u] * kp[v]
            idx = np.flatnonzero((pe < 1.0) & self.link_alive[li] & al[u] & al[v])
            if idx.size == 0:
                continue
            lost = self.rng.random(idx.size) >= pe[idx]
            self.link_alive[li][idx[lost]] = False


def run_cascade(system: MultilayerSystem, config: CascadeConfig) -> CascadeOutcome:
    rng = np.random.default_rng(config.seed)
    run = _Run(system, rng)
    p = config.p
    max_it = config.max_iterations or system.total_nodes + 1

    newly = []
    for li, layer in enumerate(system.layers):
        removed = rng.random(layer.n) >= p
        run.alive[li] &= ~removed
        newly.append(removed)
    run.decimate(newly)

    noi = 0
    while True:
        noi += 1
        if noi > max_it:
            raise CascadeError(f"cascade did not settle within {max_it} iterations")
        newly = []
        changed = False
        for li, layer in enumerate(system.layers):
            al = run.alive[li]
            gm = giant_mask(layer.n, layer.edges, run.link_alive[li], al)
            nd = al & ~gm
            if nd.any():
                changed = True
                al &= gm
                newly.append(nd)
            else:
                newly.append(None)
        if not changed:
            break
        run.decimate(newly)

    s = tuple(float(a.sum()) / layer.n if layer.n else 0.0 for a, layer in zip(run.alive, system.layers))
    return CascadeOutcome(s, noi, config.seed, run.alive)


# --- ensembles --------------------------------------------------------------

class SystemSpec(Protocol):
    """Recipe for one realization: topology first, then coupling for a theta."""

    def make_layers(self, seed) -> list[LayerGraph]: ...

    def couple(self, layers: list[LayerGraph], theta: float, seed) -> MultilayerSystem: ...


@dataclass
class EnsemblePoint:
    p: float
    theta: float
    s_mean: np.ndarray
    s_std: np.ndarray
    noi_mean: float
    realizations: int


def _p_key(p: float) -> int:
    return int(round(p * 1e9))


def realization_seeds(master_seed: int, r: int):
    """(topology, coupling) seed sequences for realization ``r``."""
    return (np.random.SeedSequence(master_seed, spawn_key=(0, r)),
            np.random.SeedSequence(master_seed, spawn_key=(1, r)))


def damage_seed(master_seed: int, r: int, p: float) -> np.random.SeedSequence:
    return np.random.SeedSequence(master_seed, spawn_key=(2, r, _p_key(p)))


def _realization_task(args):
    spec, thetas, ps, master_seed, r = args
    topo, coup = realization_seeds(master_seed, r)
    layers = spec.make_layers(topo)
    out = {}
    for th in thetas:
        system = spec.couple(layers, th, coup)
        for p in ps:
            res = run_cascade(system, CascadeConfig(p, damage_seed(master_seed, r, p)))
            out[(th, p)] = (res.s_per_layer, res.noi)
    return out


def run_ensemble(system_spec: SystemSpec, grid: Sequence[tuple[float, float]], realizations: int,
                 master_seed: int = 42, workers: int = 1) -> list[EnsemblePoint]:
    """Average cascades over independent realizations for every ``(p, theta)``.

    Realization ``r`` draws its topology and pairing from seeds derived
    from ``(master_seed, r)`` and its damage from ``(master_seed, r, p)``;
    theta never enters a seed, so curves at different theta share their
    random numbers.  Results do not depend on ``workers``.
    """
    if realizations < 1:
        raise ValueError("realizations must be at least 1")
    grid = [(float(p), float(t)) for p, t in grid]
    thetas = sorted({t for _, t in grid})
    ps_by_theta = {t: sorted({p for p, tt in grid if tt == t}) for t in thetas}
    ps = sorted({p for p, _ in grid})
    tasks = [(system_spec, thetas, ps, master_seed, r) for r in range(realizations)]
    if workers > 1 and realizations > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            results = list(ex.map(_realization_task, tasks))
    else:
        results = [_realization_task(t) for t in tasks]

    points = []
    for p, th in grid:
        if p not in ps_by_theta[th]:
            continue
        s = np.array([res[(th, p)][0] for res in results])
        noi = np.array([res[(th, p)][1] for res in results], dtype=float)
        std = s.std(axis=0, ddof=1) if realizations > 1 else np.zeros(s.shape[1])
        points.append(EnsemblePoint(p, th, s.mean(axis=0), std, float(noi.mean()), realizations))
    return points


def estimate_pc_from_curve(curve: Sequence[tuple[float, float]], jump_threshold: float = JUMP_THRESHOLD,
                           s_min: float = S_MIN) -> tuple[float, str]:
    """Transition point and order from a sampled ``(p, mean S)`` curve.

    First order when the largest increment between neighbouring grid
    points exceeds ``jump_threshold`` (threshold at the midpoint of that
    interval); otherwise second order at the first ``p`` with ``S > s_min``.
    A curve that never exceeds ``s_min`` gives ``(nan, "none")``.
    """
    pts = sorted((float(p), float(s)) for p, s in curve)
    if len(pts) < 2:
        raise ValueError("need at least two curve points")
    ps = np.array([a for a, _ in pts])
    ss = np.array([b for _, b in pts])
    if not np.any(ss > s_min):
        return math.nan, "none"
    ds = np.diff(ss)
    i = int(np.argmax(ds))
    if ds[i] > jump_threshold:
        return float(0.5 * (ps[i] + ps[i + 1])), "first"
    return float(ps[np.argmax(ss > s_min)]), "second"


def layer_transitions(points: Sequence[EnsemblePoint], theta: float, **kw) -> list[tuple[float, str]]:
    """Per-layer ``estimate_pc_from_curve`` on the ensemble curve at ``theta``."""
    pts = sorted((pt for pt in points if pt.theta == theta), key=lambda pt: pt.p)
    if not pts:
        raise ValueError(f"no points at theta={theta}")
    nl = len(pts[0].s_mean)
    return [estimate_pc_from_curve([(pt.p, pt.s_mean[li]) for pt in pts], **kw) for li in range(nl)]
