"""Grid verification of structural field conditions and rare-event probes.

verify_exi scans observation scales R and intermediate radii r in
[R^theta/2, 2R], measuring on each sampled ball the near-field weighted jump
sums, the density of open neighbors, inverse-conductance volume, and the
two-sided far-field mass.  Each condition reports the worst constant against
the expected power of r; it passes when that constant is finite and within
its configured ceiling.

estimate_tail_probability measures, by Monte Carlo over independent field
replications, the probability that a centered environment functional exceeds
its concentration threshold.  Those frequencies must decay polynomially in r
for the heavy-tail scaling machinery to apply, which is what the moment
exponents p and q buy.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special

from .environment import ConductanceField
from .lattice import LatticeSpec, ball, ball_array, distance, dset_diagnostic, gasket_graph
from .seeds import mix, stream

PROBE_TAG = 0x70726F62

_CONDITIONS_UPPER = ("near_field", "near_field_first_order", "inverse_volume",
                     "far_field_upper")
_CONDITIONS_LOWER = ("open_density", "far_field_lower")


def law_mean(law, ell):
    """Exact per-edge mean conductance at the given distances."""
    values, probs = law.atom_table(np.asarray(ell, dtype=float))
    return (values * probs).sum(axis=-1)


def law_inverse_mean(law, ell):
    """Exact mean of 1/w restricted to open edges."""
    values, probs = law.atom_table(np.asarray(ell, dtype=float))
    open_mask = values > 0
    with np.errstate(divide="ignore"):
        inv = np.where(open_mask, 1.0 / np.where(open_mask, values, 1.0), 0.0)
    return (inv * probs).sum(axis=-1)


def _row(field, x, radius):
    """Coordinates, distances and conductances for the ball around x.

    Includes x itself with distance 0 and conductance 0.
    """
    spec = field.lattice
    if spec.kind == "gasket":
        verts = sorted(ball(spec, x, radius))
        coords = np.asarray(verts, dtype=np.int64).reshape(len(verts), spec.coordinate_dim)
        dist = np.array([distance(spec, x, v) for v in verts], dtype=float)
    else:
        coords = ball_array(spec, x, radius)
        delta = (coords - np.asarray(x, dtype=np.int64)).astype(float)
        dist = np.sqrt((delta ** 2).sum(axis=1))
    w = field.conductance_row(x, coords, dist)
    return coords, dist, w


def _deterministic_tail(d: int, s: float, cutoff: int) -> float:
    """Sum over rho > cutoff of rho^-s per unit shell weight on the full lattice.

    Exact (Hurwitz zeta) for d = 1 where shells are the pairs {-k, +k};
    a bracketing integral midpoint for d >= 2.
    """
    if d == 1:
        return 2.0 * float(special.zeta(s, cutoff + 1))
    shift = math.sqrt(d) / 2.0
    surface = 2.0 * math.pi ** (d / 2.0) / math.gamma(d / 2.0)
    from scipy import integrate

    def shell(u, sgn):
        return (u + sgn * shift) ** (d - 1) * u ** -s

    hi, _ = integrate.quad(lambda u: shell(u, +1.0), cutoff - shift, np.inf)
    lo, _ = integrate.quad(lambda u: shell(u, -1.0), cutoff + shift, np.inf)
    return surface * 0.5 * (hi + lo)


def far_field_sum(field, x, lo: float, alpha: float,
                  truncation: int | None = None) -> tuple:
    """(truncated sum, mean remainder) of w(x,y)/rho^(d+alpha) over rho > lo.

    The truncated part enumerates the annulus exactly.  The remainder treats
    edges beyond the truncation radius at their exact per-distance mean,
    which is the right point estimate (and exact for constant fields); pass
    it separately so lower bounds can drop it.
    """
    spec = field.lattice
    d = spec.volume_dimension
    if spec.kind == "gasket":
        verts, _ = gasket_graph(spec.n_ambient, spec.levels)
        far = [v for v in verts if distance(spec, x, v) > lo]
        if not far:
            return 0.0, 0.0
        coords = np.asarray(sorted(far), dtype=np.int64)
        dist = np.array([distance(spec, x, v) for v in sorted(far)], dtype=float)
        w = field.conductance_row(x, coords, dist)
        return float((w * dist ** -(d + alpha)).sum()), 0.0
    if truncation is None:
        # annulus enumeration cost grows like truncation^d
        truncation = int(max(4096, 16 * lo)) if spec.coordinate_dim == 1 else int(
            max(64, 4 * lo))
    coords, dist, w = _row(field, x, float(truncation))
    m = dist > lo
    truncated = float((w[m] * dist[m] ** -(d + alpha)).sum())
    mean_far = float(law_mean(field.law, np.array([float(truncation)]))[0])
    remainder = mean_far * _deterministic_tail(spec.coordinate_dim, d + alpha, truncation)
    return truncated, remainder


@dataclass(frozen=True)
class ConditionSummary:
    name: str
    constant: float
    ceiling: float
    direction: str   # "upper": pass iff constant <= ceiling; "lower": >=
    passed: bool
    worst_point: tuple

    def to_dict(self) -> dict:
        return {"condition": self.name, "constant": self.constant,
                "ceiling": self.ceiling, "direction": self.direction,
                "pass": self.passed,
                "worst_point": [str(v) for v in self.worst_point]}


@dataclass(frozen=True)
class ExiReport:
    theta: float
    alpha: float
    R_grid: tuple
    c_G: float
    c_star: float
    conditions: dict
    coverage: dict
    lemma_lower_assembled: float

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.conditions.values())

    def to_dict(self) -> dict:
        return {"theta": self.theta, "alpha": self.alpha,
                "R_grid": list(self.R_grid), "c_G": self.c_G,
                "c_star": self.c_star, "pass": self.passed,
                "lemma_lower_assembled": self.lemma_lower_assembled,
                "coverage": self.coverage,
                "conditions": [c.to_dict() for c in self.conditions.values()]}


class _Worst:
    def __init__(self, direction: str):
        self.direction = direction
        self.value = -math.inf if direction == "upper" else math.inf
        self.point = ()

    def update(self, value: float, point: tuple):
        better = value > self.value if self.direction == "upper" else value < self.value
        if better or not self.point:
            self.value, self.point = float(value), point


def default_ceilings(c_G: float, c_star: float, d: int) -> dict:
    return {"near_field": 64.0,
            "near_field_first_order": 64.0,
            "inverse_volume": 8.0 * c_G * c_star ** d,
            "far_field_upper": 64.0,
            "open_density": 0.5,
            "far_field_lower": 1e-6}


def verify_exi(field, alpha: float, theta: float = 0.9,
               R_grid: tuple = (8, 16), r_per_R: int = 3,
               ceilings: dict | None = None, c_G: float | None = None,
               max_enumerate: int = 100_000, sample_size: int = 1000,
               pair_cap: int = 1000, include_first_order: bool | None = None,
               seed: int = 0) -> ExiReport:
    """Measure the structural conditions on a grid of scales.

    For each R in R_grid, radii r span [R^theta/2, 2R] geometrically and
    centers x range over the ball of radius 6R (enumerated when small,
    sampled otherwise).  Open-density ratios additionally pair x with
    reference vertices z from the same ball.
    """
    if not 0.0 < theta < 1.0:
        raise ValueError("theta outside (0,1)")
    if not R_grid:
        raise ValueError("empty R grid")
    spec = field.lattice
    d = spec.volume_dimension
    if include_first_order is None:
        include_first_order = alpha < 1.0
    if c_G is None:
        probe = dset_diagnostic(spec, [spec.origin], [1.0, 2.0, 4.0, 8.0])
        c_G = max(probe["c_upper"], 1.0 / probe["c_lower"])
    c_star = 8.0 * c_G ** (2.0 / d)
    ceil = default_ceilings(c_G, c_star, d)
    if ceilings:
        ceil.update(ceilings)
    rng = stream(seed, PROBE_TAG, 0)

    names = list(_CONDITIONS_UPPER) + list(_CONDITIONS_LOWER)
    if not include_first_order:
        names.remove("near_field_first_order")
    worst = {n: _Worst("upper" if n in _CONDITIONS_UPPER else "lower") for n in names}
    coverage = {}
    mu_of = field.measure.mu

    for R in R_grid:
        r_lo, r_hi = max(1.0, R ** theta / 2.0), 2.0 * R
        r_values = np.unique(np.geomspace(r_lo, r_hi, r_per_R))
        centers = sorted(ball(spec, spec.origin, 6.0 * R))
        if len(centers) > max_enumerate:
            idx = rng.choice(len(centers), size=sample_size, replace=False)
            centers = [centers[i] for i in sorted(idx)]
            coverage[str(R)] = {"centers": len(centers), "sampled": True}
        else:
            coverage[str(R)] = {"centers": len(centers), "sampled": False}

        for x in centers:
            coords, dist, w = _row(field, x, max(r_hi, c_star * r_hi))
            off = dist > 0
            for r in r_values:
                near = off & (dist <= r)
                s = float((w[near] * dist[near] ** -(d + alpha - 2.0)).sum())
                worst["near_field"].update(s / r ** (2.0 - alpha), (R, r, x))
                if include_first_order:
                    s1 = float((w[near] * dist[near] ** -(d + alpha - 1.0)).sum())
                    worst["near_field_first_order"].update(s1 / r ** (1.0 - alpha), (R, r, x))
                inv = off & (dist <= c_star * r) & (w > 0)
                s_inv = float((1.0 / w[inv]).sum())
                worst["inverse_volume"].update(s_inv / r ** d, (R, r, x))
                upper_trunc, upper_rem = far_field_sum(field, x, r, alpha)
                worst["far_field_upper"].update((upper_trunc + upper_rem) * r ** alpha,
                                                (R, r, x))
                lower_trunc, _ = far_field_sum(field, x, 3.0 * r, alpha)
                worst["far_field_lower"].update(lower_trunc * r ** alpha, (R, r, x))

        # open-neighbor density needs (x, z) pairs from the same ball
        pairs = [(x, z) for x in centers for z in centers]
        if len(pairs) > pair_cap:
            idx = rng.choice(len(pairs), size=pair_cap, replace=False)
            pairs = [pairs[i] for i in sorted(idx)]
        for x, z in pairs:
            coords, dist_x, _ = _row(field, x, r_hi)
            if spec.kind == "gasket":
                dist_z = np.array([distance(spec, z, tuple(c)) for c in coords], dtype=float)
            else:
                delta = (coords - np.asarray(z, dtype=np.int64)).astype(float)
                dist_z = np.sqrt((delta ** 2).sum(axis=1))
            w_z = field.conductance_row(z, coords, dist_z)
            mu_u = np.array([mu_of(tuple(c)) for c in coords])
            for r in r_values:
                in_ball = dist_x <= r
                denom = float(mu_u[in_ball].sum())
                num = float(mu_u[in_ball & (w_z > 0)].sum())
                worst["open_density"].update(num / denom, (R, r, x, z))

    conditions = {}
    for n in names:
        direction = worst[n].direction
        value = worst[n].value
        ok = math.isfinite(value) and (value <= ceil[n] if direction == "upper"
                                       else value > ceil[n])
        conditions[n] = ConditionSummary(n, value, ceil[n], direction, ok, worst[n].point)

    c0 = conditions["open_density"].constant
    c_inv = conditions["inverse_volume"].constant
    c1 = c0 / c_G * c_star ** d - c_G * 4.0 ** d
    assembled = 0.0
    if c1 > 0 and c_inv > 0:
        assembled = c1 ** 2 / c_inv * c_star ** -(d + alpha)
    return ExiReport(theta=theta, alpha=alpha, R_grid=tuple(R_grid), c_G=c_G,
                     c_star=c_star, conditions=conditions, coverage=coverage,
                     lemma_lower_assembled=assembled)


@dataclass(frozen=True)
class TailProbeSpec:
    """Parameters of one concentration event.

    which selects the functional: p1 (double-ball centered sum), p2 (single
    ball), p3 / p3s (near-field weighted, second / first order), p4 (inverse
    conductances within c0_star r), p5 (test-function weighted far field at
    scale n), p6 (open-neighbor density falling below its floor).
    """

    which: str
    r: float
    x: tuple = (0,)
    z: tuple | None = None
    R: float = 8.0
    eps: float = 0.1
    c0_star: float = 2.0
    c0: float = 0.75
    n: int = 1
    C3: float = 1.0
    C4: float = 1.0
    profile: object = None   # Lipschitz profile for p5; None uses the default bump
    replications: int = 200

    def __post_init__(self):
        if self.which not in ("p1", "p2", "p3", "p3s", "p4", "p5", "p6"):
            raise ValueError("unknown probe %r" % (self.which,))
        if self.eps <= 0:
            raise ValueError("eps must be positive")
        if self.replications < 100:
            raise ValueError("need at least 100 replications")
        if self.r < 1:
            raise ValueError("degenerate radius")
        if self.which == "p6" and self.z is None:
            raise ValueError("p6 needs a reference vertex z")


def default_bump(points: np.ndarray) -> np.ndarray:
    """Lipschitz(1) compactly supported profile max(0, 1 - |u|)."""
    return np.maximum(0.0, 1.0 - np.sqrt((points ** 2).sum(axis=-1)))


def _probe_event(probe: TailProbeSpec, field, alpha: float) -> bool:
    spec = field.lattice
    d = spec.volume_dimension
    law = field.law
    x = tuple(probe.x)
    if probe.which == "p1":
        total = 0.0
        for xx in ball(spec, spec.origin, probe.R):
            _, dist, w = _row(field, xx, probe.r)
            off = dist > 0
            total += float((w[off] - law_mean(law, dist[off])).sum())
        return abs(total) > probe.eps * probe.r ** d * probe.R ** d
    if probe.which == "p2":
        _, dist, w = _row(field, x, probe.r)
        off = dist > 0
        s = float((w[off] - law_mean(law, dist[off])).sum())
        return abs(s) > probe.eps * probe.r ** d
    if probe.which in ("p3", "p3s"):
        order = 2.0 if probe.which == "p3" else 1.0
        _, dist, w = _row(field, x, probe.r)
        off = dist > 0
        centered = w[off] - law_mean(law, dist[off])
        s = float((centered * dist[off] ** -(d + alpha - order)).sum())
        return abs(s) > probe.eps * probe.r ** (order - alpha)
    if probe.which == "p4":
        _, dist, w = _row(field, x, probe.c0_star * probe.r)
        off = dist > 0
        with np.errstate(divide="ignore"):
            inv = np.where(w[off] > 0, 1.0 / np.where(w[off] > 0, w[off], 1.0), 0.0)
        s = float((inv - law_inverse_mean(law, dist[off])).sum())
        return abs(s) > probe.eps * probe.r ** d
    if probe.which == "p5":
        n = probe.n
        prof = probe.profile if probe.profile is not None else default_bump
        coords = ball_array(spec, spec.origin, n * probe.R)
        delta = (coords - np.asarray(x, dtype=np.int64)).astype(float)
        dist = np.sqrt((delta ** 2).sum(axis=1))
        far = dist >= n * probe.r
        if not np.any(far):
            return False
        w = field.conductance_row(x, coords[far], dist[far])
        h = prof(coords[far].astype(float) / n) - float(
            prof(np.asarray(x, dtype=float)[None, :] / n)[0])
        centered = w - law_mean(law, dist[far])
        s = float((h * centered * dist[far] ** -(d + alpha)).sum())
        return s ** 2 > probe.eps * (n * probe.r) ** (-2.0 * alpha)
    # p6: open-neighbor density below its floor
    z = tuple(probe.z)
    coords, dist_x, _ = _row(field, x, probe.r)
    delta = (coords - np.asarray(z, dtype=np.int64)).astype(float)
    dist_z = np.sqrt((delta ** 2).sum(axis=1))
    w_z = field.conductance_row(z, coords, dist_z)
    mu_u = np.array([field.measure.mu(tuple(c)) for c in coords])
    ratio = float(mu_u[w_z > 0].sum()) / float(mu_u.sum())
    return ratio <= probe.C4 * probe.c0 / probe.C3


def estimate_tail_probability(probe: TailProbeSpec, law, lattice: LatticeSpec,
                              alpha: float, measure=None, seed: int = 0) -> dict:
    """Monte Carlo frequency of the probe event over field replications.

    Replications use derived seeds and accumulate in index order, so the
    result does not depend on scheduling.
    """
    from .lattice import VertexMeasure
    if measure is None:
        measure = VertexMeasure()
    hits = 0
    for i in range(probe.replications):
        rep = ConductanceField(seed=mix(seed, PROBE_TAG, i), law=law,
                               lattice=lattice, measure=measure)
        hits += bool(_probe_event(probe, rep, alpha))
    est = hits / probe.replications
    stderr = math.sqrt(max(est * (1.0 - est), 1.0 / probe.replications)
                       / probe.replications)
    return {"estimate": est, "stderr": stderr, "replications": probe.replications}
