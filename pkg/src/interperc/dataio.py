"""Edge-list loading, sweep CSV output and run configuration files."""

from __future__ import annotations

import csv
import logging
import math
import os
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .core import LayerGraph, normalize_edges

log = logging.getLogger(__name__)

CSV_HEADER = ("theta", "omega", "p", "layer", "s_mean", "s_std", "noi_mean", "realizations")
NA = "NA"


class DataError(ValueError):
    pass


class ConfigError(ValueError):
    pass


# --- edge lists -------------------------------------------------------------

@dataclass
class EdgeListFile:
    """A loaded undirected edge list and its label table.

    ``labels[i]`` is the external label of internal node ``i``; ids follow
    first appearance in the file.
    """

    path: str
    graph: LayerGraph
    labels: list[str]
    self_loops: int = 0
    duplicates: int = 0
    directed: bool = field(default=False, init=False)

    @property
    def index(self) -> dict[str, int]:
        return {lab: i for i, lab in enumerate(self.labels)}


def load_edgelist(path) -> EdgeListFile:
    """Read a whitespace separated two-column edge list.

    Lines starting with ``#`` or ``%`` and blank lines are skipped.  Any
    other line must hold exactly two tokens.  Self-loops are dropped and
    counted, repeated links (in either direction) collapse to one.
    """
    ids: dict[str, int] = {}
    labels: list[str] = []
    pairs: list[tuple[int, int]] = []
    loops = 0
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            s = line.strip()
            if not s or s[0] in "#%":
                continue
            tok = s.split()
            if len(tok) != 2:
                raise DataError(f"{path}:{lineno}: expected 2 tokens, got {len(tok)}")
            a, b = tok
            for lab in (a, b):
                if lab not in ids:
                    ids[lab] = len(labels)
                    labels.append(lab)
            if a == b:
                loops += 1
                continue
            pairs.append((ids[a], ids[b]))
    if not labels:
        raise DataError(f"{path}: no edges found")
    n = len(labels)
    edges = normalize_edges(np.array(pairs, dtype=np.int64).reshape(-1, 2), n)
    dups = len(pairs) - edges.shape[0]
    if loops:
        log.warning("%s: dropped %d self-loop(s)", path, loops)
    return EdgeListFile(str(path), LayerGraph(n, edges), labels, loops, dups)


def write_edgelist(graph: LayerGraph, path, labels: Sequence[str] | None = None) -> None:
    """Write links one per line; with ``labels`` the external labels are used."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for u, v in graph.edges.tolist():
            if labels is None:
                fh.write(f"{u} {v}\n")
            else:
                fh.write(f"{labels[u]} {labels[v]}\n")


# --- sweep CSV --------------------------------------------------------------

@dataclass
class SweepRecord:
    theta: float
    omega: float | None
    p: float
    layer: str
    s_mean: float
    s_std: float
    noi_mean: float
    realizations: int

    def __post_init__(self):
        if not -1e-12 <= self.s_mean <= 1 + 1e-12:
            raise ValueError(f"s_mean outside [0, 1]: {self.s_mean}")
        if self.realizations < 0:
            raise ValueError("realizations must be non-negative")


def _g6(x: float) -> str:
    if x is None or (isinstance(x, float) and math.isnan(x)):
        return NA
    s = f"{float(x):.6g}"
    return "0" if s == "-0" else s


def _sort_key(r: SweepRecord):
    om = -math.inf if r.omega is None or math.isnan(r.omega) else r.omega
    return (r.theta, om, r.p, r.layer)


def write_sweep_csv(records: Iterable[SweepRecord], path) -> None:
    rows = sorted(records, key=_sort_key)
    try:
        fh = open(path, "w", encoding="utf-8", newline="")
    except OSError as exc:
        raise DataError(f"cannot write {path}: {exc}") from exc
    with fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for r in rows:
            w.writerow([_g6(r.theta), _g6(r.omega), _g6(r.p), r.layer, _g6(r.s_mean),
                        _g6(r.s_std), _g6(r.noi_mean), str(int(r.realizations))])


def read_sweep_csv(path) -> list[SweepRecord]:
    with open(path, encoding="utf-8", newline="") as fh:
        rd = csv.reader(fh)
        header = next(rd, None)
        if tuple(header or ()) != CSV_HEADER:
            raise DataError(f"{path}: unexpected header {header}")
        out = []
        for row in rd:
            th, om, p, layer, sm, ss, noi, real = row
            f = lambda x: math.nan if x == NA else float(x)  # noqa: E731
            out.append(SweepRecord(f(th), None if om == NA else float(om), f(p), layer,
                                   f(sm), f(ss), f(noi), int(real)))
    return out


# --- run configuration ------------------------------------------------------

@dataclass
class RunSpec:
    kind: str = "er"
    n: int = 100_000
    mean_degree: float = 4.0
    gamma: float = 2.3
    k_min: int = 2
    k_max: int | None = None
    thetas: tuple[float, ...] = (0.0,)
    omegas: tuple[float, ...] | None = None
    p_start: float = 0.0
    p_stop: float = 1.0
    p_step: float = 0.005
    realizations: int = 10
    seed: int = 42
    layers: int = 2
    pairing: str = "identity"
    explicit: frozenset = frozenset()

    def p_grid(self) -> np.ndarray:
        k = int(math.floor((self.p_stop - self.p_start) / self.p_step + 1e-9))
        return np.round(self.p_start + self.p_step * np.arange(k + 1), 10)


def _to_int(key, v):
    try:
        f = float(v)
    except ValueError:
        raise ConfigError(f"{key}: cannot parse {v!r} as a number") from None
    if not f.is_integer():
        raise ConfigError(f"{key} must be an integer, got {v!r}")
    return int(f)


def _to_float(key, v):
    try:
        f = float(v)
    except ValueError:
        raise ConfigError(f"{key}: cannot parse {v!r} as a number") from None
    if not math.isfinite(f):
        raise ConfigError(f"{key} must be finite")
    return f


def _to_floats(key, v):
    """Comma list; an item ``start:stop:step`` expands to an inclusive range."""
    parts = [x.strip() for x in v.split(",") if x.strip()]
    if not parts:
        raise ConfigError(f"{key} is empty")
    out = []
    for x in parts:
        if ":" in x:
            bits = x.split(":")
            if len(bits) != 3:
                raise ConfigError(f"{key}: range must be start:stop:step, got {x!r}")
            a, b, st = (_to_float(key, y) for y in bits)
            if not st > 0:
                raise ConfigError(f"{key}: range step must be positive")
            k = int(math.floor((b - a) / st + 1e-9))
            out.extend(round(a + st * i, 10) for i in range(k + 1))
        else:
            out.append(_to_float(key, x))
    return tuple(out)


_KEYS = {
    "network.kind": ("kind", str),
    "network.n": ("n", _to_int),
    "network.mean_degree": ("mean_degree", _to_float),
    "network.gamma": ("gamma", _to_float),
    "network.k_min": ("k_min", _to_int),
    "network.k_max": ("k_max", _to_int),
    "theta": ("thetas", _to_floats),
    "omega": ("omegas", _to_floats),
    "p.start": ("p_start", _to_float),
    "p.stop": ("p_stop", _to_float),
    "p.step": ("p_step", _to_float),
    "realizations": ("realizations", _to_int),
    "seed": ("seed", _to_int),
    "layers": ("layers", _to_int),
    "pairing": ("pairing", str),
}
REQUIRED = ("network.kind", "theta")


def parse_config_text(text: str, source: str = "<config>", overrides: dict[str, str] | None = None,
                      defaults: dict[str, str] | None = None) -> RunSpec:
    """Parse ``key = value`` lines; ``#`` starts a comment.

    ``overrides`` replace (or add) keys after the text has been read;
    ``defaults`` fill keys that are still absent.
    """
    seen: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value'")
        key, val = (s.strip() for s in line.split("=", 1))
        if key not in _KEYS:
            raise ConfigError(f"{source}:{lineno}: unknown key {key!r}")
        if key in seen:
            raise ConfigError(f"{source}:{lineno}: duplicate key {key!r}")
        seen[key] = val
    for key, val in (overrides or {}).items():
        if key not in _KEYS:
            raise ConfigError(f"unknown key {key!r}")
        seen[key] = val
    for key, val in (defaults or {}).items():
        seen.setdefault(key, val)
    for key in REQUIRED:
        if key not in seen:
            raise ConfigError(f"missing required key {key!r}")
    spec = RunSpec()
    for key, val in seen.items():
        attr, conv = _KEYS[key]
        setattr(spec, attr, conv(key, val) if conv is not str else val)
    spec.explicit = frozenset(seen)
    validate(spec)
    return spec


def parse_config(path) -> RunSpec:
    if not os.path.exists(path):
        raise ConfigError(f"config file not found: {path}")
    with open(path, encoding="utf-8") as fh:
        return parse_config_text(fh.read(), str(path))


def validate(s: RunSpec) -> None:
    from .netgen import PAIRINGS

    if s.kind not in ("er", "scale_free"):
        raise ConfigError(f"network.kind must be 'er' or 'scale_free', got {s.kind!r}")
    if s.n < 2:
        raise ConfigError("network.n must be at least 2")
    if s.kind == "er" and not 0 < s.mean_degree <= s.n - 1:
        raise ConfigError("network.mean_degree must lie in (0, n-1]")
    if s.kind == "scale_free":
        if not s.gamma > 1:
            raise ConfigError("network.gamma must exceed 1")
        if s.k_min < 1:
            raise ConfigError("network.k_min must be at least 1")
        if s.k_max is not None and not s.k_min <= s.k_max <= s.n - 1:
            raise ConfigError("network.k_max must lie in [k_min, n-1]")
    if s.omegas is not None and any(not 0 <= w <= 1 for w in s.omegas):
        raise ConfigError("omega values must lie in [0, 1]")
    if not s.p_step > 0:
        raise ConfigError("p.step must be positive")
    if not 0 <= s.p_start <= 1:
        raise ConfigError("p.start must lie in [0, 1]")
    if not 0 <= s.p_stop <= 1:
        raise ConfigError("p.stop must lie in [0, 1]")
    if s.p_start > s.p_stop:
        raise ConfigError("p.start must not exceed p.stop")
    if s.realizations < 1:
        raise ConfigError("realizations must be at least 1")
    if s.layers not in (2, 3):
        raise ConfigError("layers must be 2 or 3")
    if s.pairing not in PAIRINGS:
        raise ConfigError(f"pairing must be one of {', '.join(PAIRINGS)}")
