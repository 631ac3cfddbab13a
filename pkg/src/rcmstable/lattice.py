"""Vertex sets, metrics and measures.

Three state-space kinds are supported:

* the full integer lattice Z^d with the Euclidean metric,
* half/quarter lattices Z_+^{d1} x Z^{d2} (first d1 coordinates nonnegative),
  also with the Euclidean metric,
* finite-level Sierpinski gasket graphs with the graph metric.

Vertices are plain tuples of ints in every kind.  Gasket graphs are
pregenerated to a fixed level; the corner at the origin is the base point
and the graph grows away from it, so balls of moderate radius around the
origin see the same structure as the unbounded gasket.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .seeds import mix, uniform_from_key

Vertex = tuple


@dataclass(frozen=True)
class LatticeSpec:
    kind: str            # "full" | "half" | "gasket"
    d1: int = 0          # half-space: number of nonnegative axes
    d2: int = 0          # remaining free axes (full lattice: d2 = d)
    n_ambient: int = 2   # gasket: corners per cell minus one
    levels: int = 0      # gasket: pregenerated depth, side length 2**levels

    def __post_init__(self):
        if self.kind not in ("full", "half", "gasket"):
            raise ValueError(f"unknown lattice kind {self.kind!r}")
        if self.kind in ("full", "half"):
            if self.d1 < 0 or self.d2 < 0 or self.d1 + self.d2 < 1:
                raise ValueError("lattice needs d1 >= 0, d2 >= 0, d1 + d2 >= 1")
        else:
            if self.n_ambient < 2 or self.levels < 1:
                raise ValueError("gasket needs n_ambient >= 2 and levels >= 1")

    @property
    def coordinate_dim(self) -> int:
        return self.n_ambient if self.kind == "gasket" else self.d1 + self.d2

    @property
    def volume_dimension(self) -> float:
        if self.kind == "gasket":
            return math.log(self.n_ambient + 1) / math.log(2)
        return float(self.d1 + self.d2)

    @property
    def metric(self) -> str:
        return "graph" if self.kind == "gasket" else "euclidean"

    @property
    def origin(self) -> Vertex:
        return (0,) * self.coordinate_dim

    def contains(self, x: Vertex) -> bool:
        if len(x) != self.coordinate_dim:
            return False
        if self.kind == "half" and any(x[i] < 0 for i in range(self.d1)):
            return False
        if self.kind == "gasket":
            return x in gasket_graph(self.n_ambient, self.levels)[0]
        return True


def full_lattice(d: int) -> LatticeSpec:
    return LatticeSpec("full", d1=0, d2=d)


def half_space(d1: int, d2: int) -> LatticeSpec:
    return LatticeSpec("half", d1=d1, d2=d2)


def gasket(n_ambient: int = 2, levels: int = 6) -> LatticeSpec:
    return LatticeSpec("gasket", n_ambient=n_ambient, levels=levels)


@lru_cache(maxsize=8)
def gasket_graph(n_ambient: int, levels: int):
    """Generate the level-`levels` gasket graph scaled to unit smallest edges.

    Cells are words over the corner alphabet {0..N}; the cell for word
    (i_1 .. i_L) sits at sum_k 2^(L-k) e_{i_k} where e_0 is the origin and
    e_j the j-th unit vector.  Each deepest cell contributes its N+1 corners
    with all pairwise unit edges.  Returns (frozenset of vertices, adjacency
    dict vertex -> sorted tuple of neighbours).
    """
    n = n_ambient
    corners = [np.zeros(n, dtype=np.int64)]
    for j in range(n):
        e = np.zeros(n, dtype=np.int64)
        e[j] = 1
        corners.append(e)
    adjacency: dict[Vertex, set] = {}
    for word in itertools.product(range(n + 1), repeat=levels):
        base = np.zeros(n, dtype=np.int64)
        for k, i in enumerate(word):
            base += (2 ** (levels - 1 - k)) * corners[i]
        cell = [tuple((base + c).tolist()) for c in corners]
        for a, b in itertools.combinations(cell, 2):
            adjacency.setdefault(a, set()).add(b)
            adjacency.setdefault(b, set()).add(a)
    vertices = frozenset(adjacency)
    return vertices, {v: tuple(sorted(nb)) for v, nb in adjacency.items()}


def _check_vertex(spec: LatticeSpec, x: Vertex):
    if not spec.contains(tuple(x)):
        raise ValueError(f"vertex {x!r} not valid for {spec.kind} lattice")


@lru_cache(maxsize=200_000)
def _gasket_distance(n_ambient: int, levels: int, a: Vertex, b: Vertex) -> int:
    if a == b:
        return 0
    _, adjacency = gasket_graph(n_ambient, levels)
    seen = {a}
    frontier = [a]
    depth = 0
    while frontier:
        depth += 1
        nxt = []
        for v in frontier:
            for u in adjacency[v]:
                if u == b:
                    return depth
                if u not in seen:
                    seen.add(u)
                    nxt.append(u)
        frontier = nxt
    raise ValueError("vertices not connected in generated gasket")


def distance(spec: LatticeSpec, x: Vertex, y: Vertex) -> float:
    """Metric of the spec: Euclidean for lattices, graph distance on the gasket."""
    x, y = tuple(x), tuple(y)
    _check_vertex(spec, x)
    _check_vertex(spec, y)
    if spec.kind == "gasket":
        # memoized on a canonical pair order
        a, b = (x, y) if x <= y else (y, x)
        return float(_gasket_distance(spec.n_ambient, spec.levels, a, b))
    return math.dist(x, y)


def ball(spec: LatticeSpec, center: Vertex, r: float) -> list:
    """All vertices within distance r of center, sorted lexicographically."""
    center = tuple(center)
    _check_vertex(spec, center)
    if r < 0:
        raise ValueError("radius must be nonnegative")
    if spec.kind == "gasket":
        vertices, adjacency = gasket_graph(spec.n_ambient, spec.levels)
        reach = max(abs(c) for c in center) + r
        if reach > 2 ** spec.levels:
            raise ValueError("ball of radius %g exceeds generated gasket extent" % r)
        radius = int(math.floor(r))
        seen = {center}
        frontier = [center]
        for _ in range(radius):
            nxt = []
            for v in frontier:
                for u in adjacency[v]:
                    if u not in seen:
                        seen.add(u)
                        nxt.append(u)
            frontier = nxt
        return sorted(seen)
    # bounding-box scan; correctness over speed at desk-scale radii
    k = int(math.floor(r))
    dim = spec.coordinate_dim
    axes = []
    for i in range(dim):
        lo = center[i] - k
        if spec.kind == "half" and i < spec.d1:
            lo = max(lo, 0)
        axes.append(np.arange(lo, center[i] + k + 1, dtype=np.int64))
    grids = np.meshgrid(*axes, indexing="ij")
    coords = np.stack([g.ravel() for g in grids], axis=1)
    delta = coords - np.asarray(center, dtype=np.int64)
    keep = (delta * delta).sum(axis=1) <= r * r
    pts = coords[keep]
    return sorted(map(tuple, pts.tolist()))


def ball_array(spec: LatticeSpec, center: Vertex, r: float) -> np.ndarray:
    """ball() as an (m, dim) int64 array in the same deterministic order."""
    pts = ball(spec, center, r)
    return np.asarray(pts, dtype=np.int64).reshape(len(pts), spec.coordinate_dim)


@dataclass(frozen=True)
class VertexMeasure:
    """Vertex weights mu_x confined to [1/c_m, c_m]; counting measure by default."""

    kind: str = "counting"    # "counting" | "weighted"
    c_m: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.kind not in ("counting", "weighted"):
            raise ValueError(f"unknown measure kind {self.kind!r}")
        if self.c_m < 1.0:
            raise ValueError("c_m must be >= 1")

    _TAG = 0x6D75  # channel separator for measure noise

    def mu(self, x: Vertex) -> float:
        if self.kind == "counting":
            return 1.0
        u = (mix(self.seed, self._TAG, *x) >> 11) * 2.0 ** -53
        return self.c_m ** (2.0 * u - 1.0)

    def mu_array(self, coords: np.ndarray) -> np.ndarray:
        m = coords.shape[0]
        if self.kind == "counting":
            return np.ones(m)
        from .seeds import mix_fold_array
        cols = [np.full(m, self._TAG, dtype=np.uint64)]
        cols += [coords[:, j] for j in range(coords.shape[1])]
        keys = mix_fold_array(self.seed, cols)
        return self.c_m ** (2.0 * uniform_from_key(keys) - 1.0)


def measure_of(measure: VertexMeasure, vertices) -> float:
    return float(sum(measure.mu(v) for v in vertices))


def dset_diagnostic(spec: LatticeSpec, centers, radii, measure: VertexMeasure | None = None) -> dict:
    """Volume-regularity probe: extrema of mu(B(x, r)) / r^d over the samples."""
    if not centers or not radii:
        raise ValueError("need at least one center and one radius")
    if any(r < 1 for r in radii):
        raise ValueError("radii must be >= 1")
    measure = measure or VertexMeasure()
    d = spec.volume_dimension
    ratios = []
    for x in centers:
        for r in radii:
            vol = measure_of(measure, ball(spec, x, r))
            ratios.append(vol / r ** d)
    return {"c_lower": min(ratios), "c_upper": max(ratios)}
