"""Deterministic seeded conductance fields.

An environment assigns every unordered vertex pair {x, y} a conductance
w_{x,y} >= 0 with w_{x,x} = 0.  Values are never stored: the per-edge
randomness is the hash mix(seed, EDGE_TAG, min(x,y), max(x,y)) with min/max
taken lexicographically on coordinates, so access is O(1), symmetric and
reproducible on the infinite lattice.

Every law carries a power envelope wbar(r) = amp * r^pow dominating all
realizable values at distance r.  Exact jump sampling and all tail bounds
rest on that domination, so amp/pow are computed conservatively at law
construction and checked in tests.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field as dc_field

import numpy as np
from scipy import integrate

from .lattice import LatticeSpec, VertexMeasure, ball_array, gasket_graph
from .seeds import mix, mix_fold_array, uniform_from_key

log = logging.getLogger(__name__)

EDGE_TAG = 0x77656467   # channel separator for edge noise
ZERO_PROB_CEILING = 2.0 ** -4   # warn above this degeneracy level

# the fixed probability of a closed edge in the four-atom benchmark law
FOUR_ATOM_ZERO_PROB = 2.0 ** -5


class ConstantLaw:
    """All conductances equal to one."""

    name = "constant"
    envelope_amp = 1.0
    envelope_pow = 0.0

    def atom_table(self, ell):
        ell = np.asarray(ell, dtype=float)
        values = np.ones(ell.shape + (1,))
        probs = np.ones(ell.shape + (1,))
        return values, probs

    def sample_value(self, ell: float, u: float) -> float:
        return 1.0

    def zero_probability(self, ell) -> float:
        return 0.0

    def describe(self) -> dict:
        return {"variant": self.name}


class FourAtomLaw:
    """Four-atom conductance law with polynomially rare extremes.

    At distance ell >= 1 the conductance takes the value ell^eps with
    probability (3 ell^(2 p eps))^-1, the value ell^-delta with probability
    (3 ell^(2 q delta))^-1, the value 0 with probability 2^-5, and otherwise
    a balance value g(ell) chosen so the mean is exactly 1.
    """

    name = "four_atom"

    def __init__(self, eps: float, delta: float, p: float, q: float):
        if eps <= 0 or delta <= 0:
            raise ValueError("eps and delta must be positive")
        if p < 1 or q < 1:
            raise ValueError("p and q must be >= 1")
        self.eps, self.delta, self.p, self.q = float(eps), float(delta), float(p), float(q)
        self.envelope_pow = self.eps
        self.envelope_amp = self._envelope_amplitude()

    def _raw_probs(self, ell):
        p1 = ell ** (-2.0 * self.p * self.eps) / 3.0
        p2 = ell ** (-2.0 * self.q * self.delta) / 3.0
        p0 = np.full_like(np.asarray(ell, dtype=float), FOUR_ATOM_ZERO_PROB)
        pg = 1.0 - p1 - p2 - p0
        return p1, p2, p0, pg

    def balance_value(self, ell):
        """g(ell): the unique deterministic fourth atom giving mean one."""
        ell = np.asarray(ell, dtype=float)
        p1, p2, _, pg = self._raw_probs(ell)
        return (1.0 - p1 * ell ** self.eps - p2 * ell ** (-self.delta)) / pg

    def balance_bounds(self) -> tuple:
        """Range of g over realizable distances; reports the two-sided bound c."""
        ell = np.arange(1, 4097, dtype=float)
        g = self.balance_value(ell)
        limit = 1.0 / (1.0 - FOUR_ATOM_ZERO_PROB)
        lo = min(float(g.min()), limit)
        hi = max(float(g.max()), limit)
        return lo, hi

    def _envelope_amplitude(self) -> float:
        # dominate all four atoms: the growth atom needs amp >= 1, the balance
        # atom needs amp >= g(ell)/ell^eps; beyond the scanned range g/ell^eps
        # is below its value at the range edge because g is bounded
        ell = np.arange(1, 4097, dtype=float)
        g = self.balance_value(ell)
        amp = max(1.0, float(np.max(g / ell ** self.eps)))
        g_far = 1.0 / (1.0 - FOUR_ATOM_ZERO_PROB - (2.0 / 3.0) * 4096.0 ** -min(
            2.0 * self.p * self.eps, 2.0 * self.q * self.delta))
        amp = max(amp, g_far / 4096.0 ** self.eps)
        return amp

    def atom_table(self, ell):
        ell = np.asarray(ell, dtype=float)
        p1, p2, p0, pg = self._raw_probs(ell)
        values = np.stack([ell ** self.eps, ell ** -self.delta,
                           np.zeros_like(ell), self.balance_value(ell)], axis=-1)
        probs = np.stack([p1, p2, p0, pg], axis=-1)
        return values, probs

    def sample_value(self, ell: float, u: float) -> float:
        # scalar twin of atom_table + cumulative inversion; the strict
        # comparisons reproduce searchsorted(..., side="right") exactly
        p1 = ell ** (-2.0 * self.p * self.eps) / 3.0
        if u < p1:
            return ell ** self.eps
        p2 = ell ** (-2.0 * self.q * self.delta) / 3.0
        if u < p1 + p2:
            return ell ** -self.delta
        if u < p1 + p2 + FOUR_ATOM_ZERO_PROB:
            return 0.0
        vg = 1.0 - p1 * ell ** self.eps - p2 * ell ** -self.delta
        return vg / (1.0 - p1 - p2 - FOUR_ATOM_ZERO_PROB)

    def zero_probability(self, ell) -> float:
        return FOUR_ATOM_ZERO_PROB

    def describe(self) -> dict:
        lo, hi = self.balance_bounds()
        return {"variant": self.name, "eps": self.eps, "delta": self.delta,
                "p": self.p, "q": self.q,
                "balance_two_sided_bound": max(hi, 1.0 / lo)}


class FiniteMixtureLaw:
    """Finite atom mixture; values and probabilities may depend on distance.

    Atoms are (value, prob) pairs where each entry is a float or a callable
    of the distance.  Values must stay bounded; pass envelope_bound when any
    entry is a callable.
    """

    name = "mixture"

    def __init__(self, atoms, envelope_bound: float | None = None):
        if not atoms:
            raise ValueError("mixture needs at least one atom")
        self.atoms = list(atoms)
        has_callable = any(callable(v) or callable(pr) for v, pr in self.atoms)
        if has_callable and envelope_bound is None:
            raise ValueError("envelope_bound required with distance-dependent atoms")
        if envelope_bound is None:
            envelope_bound = max(float(v) for v, _ in self.atoms)
        self.envelope_amp = float(envelope_bound)
        self.envelope_pow = 0.0
        probs = self._eval(np.array([1.0, 2.0, 5.0, 17.0]))[1]
        if np.any(np.abs(probs.sum(axis=-1) - 1.0) > 1e-12):
            raise ValueError("mixture probabilities must sum to 1")
        p0 = self.zero_probability(1.0)
        if p0 >= ZERO_PROB_CEILING:
            log.warning("closed-edge probability %.4f is at or above 1/16; "
                        "degeneracy may dominate", p0)

    def _eval(self, ell):
        ell = np.asarray(ell, dtype=float)
        values = np.stack(
            [np.broadcast_to(v(ell) if callable(v) else v, ell.shape).astype(float)
             for v, _ in self.atoms], axis=-1)
        probs = np.stack(
            [np.broadcast_to(pr(ell) if callable(pr) else pr, ell.shape).astype(float)
             for _, pr in self.atoms], axis=-1)
        if np.max(values) > self.envelope_amp + 1e-12:
            raise ValueError("mixture value exceeds declared envelope bound")
        return values, probs

    def atom_table(self, ell):
        return self._eval(ell)

    def sample_value(self, ell: float, u: float) -> float:
        acc = 0.0
        value = 0.0
        for v, pr in self.atoms:
            value = float(v(ell) if callable(v) else v)
            acc += float(pr(ell) if callable(pr) else pr)
            if u < acc:
                return value
        return value

    def zero_probability(self, ell) -> float:
        values, probs = self._eval(np.asarray(ell, dtype=float))
        return float(probs[..., values[0] == 0.0].sum()) if values.ndim == 2 else float(
            probs[values == 0.0].sum())

    def describe(self) -> dict:
        return {"variant": self.name, "n_atoms": len(self.atoms),
                "envelope_bound": self.envelope_amp}


@dataclass(frozen=True)
class ConductanceField:
    """Deterministic symmetric random conductance field on a lattice."""

    seed: int
    law: object
    lattice: LatticeSpec
    measure: VertexMeasure = dc_field(default_factory=VertexMeasure)

    def edge_uniform(self, x, y) -> float:
        a, b = (tuple(x), tuple(y)) if tuple(x) <= tuple(y) else (tuple(y), tuple(x))
        return (mix(self.seed, EDGE_TAG, *a, *b) >> 11) * 2.0 ** -53

    def conductance(self, x, y) -> float:
        x, y = tuple(x), tuple(y)
        if x == y:
            return 0.0
        from .lattice import distance
        ell = distance(self.lattice, x, y)
        return self.law.sample_value(float(ell), self.edge_uniform(x, y))

    def edge_uniform_rows(self, x, coords: np.ndarray) -> np.ndarray:
        """Vectorized edge uniforms for pairs (x, coords[i])."""
        m, dim = coords.shape
        xs = np.broadcast_to(np.asarray(x, dtype=np.int64), (m, dim))
        less = np.zeros(m, dtype=bool)
        decided = np.zeros(m, dtype=bool)
        for j in range(dim):
            lt = xs[:, j] < coords[:, j]
            gt = xs[:, j] > coords[:, j]
            less |= ~decided & lt
            decided |= lt | gt
        a = np.where(less[:, None], xs, coords)
        b = np.where(less[:, None], coords, xs)
        cols = [np.full(m, EDGE_TAG, dtype=np.int64)]
        cols += [a[:, j] for j in range(dim)]
        cols += [b[:, j] for j in range(dim)]
        return uniform_from_key(mix_fold_array(self.seed, cols))

    def conductance_row(self, x, coords: np.ndarray, dist: np.ndarray | None = None) -> np.ndarray:
        """Conductances w(x, coords[i]); the diagonal convention gives 0 at x itself."""
        if dist is None:
            delta = coords - np.asarray(x, dtype=np.int64)
            dist = np.sqrt((delta.astype(float) ** 2).sum(axis=1))
        w = np.zeros(len(coords))
        off = dist > 0
        if not np.any(off):
            return w
        values, probs = self.law.atom_table(dist[off])
        u = self.edge_uniform_rows(x, coords[off])
        cum = np.cumsum(probs, axis=-1)
        idx = (u[:, None] >= cum).sum(axis=-1)
        idx = np.minimum(idx, values.shape[-1] - 1)
        w[off] = np.take_along_axis(values, idx[:, None], axis=-1)[:, 0]
        return w


class LocalizedField:
    """Hat-averaged field: base conductances for pairs touching B(x0, R), 1 outside.

    Shares the base field's lattice, measure and envelope (the envelope
    dominates the constant 1 at every distance because amp >= 1).
    """

    def __init__(self, base: ConductanceField, x0, R: float):
        if base.law.envelope_amp < 1.0:
            raise ValueError("localized field needs an envelope dominating 1")
        self.base = base
        self.x0 = tuple(x0)
        self.R = float(R)
        self.seed = base.seed
        self.law = base.law
        self.lattice = base.lattice
        self.measure = base.measure

    def _touches(self, x, y) -> bool:
        from .lattice import distance
        return (distance(self.lattice, x, self.x0) <= self.R
                or distance(self.lattice, y, self.x0) <= self.R)

    def conductance(self, x, y) -> float:
        x, y = tuple(x), tuple(y)
        if x == y:
            return 0.0
        if self._touches(x, y):
            return self.base.conductance(x, y)
        return 1.0

    def conductance_row(self, x, coords: np.ndarray, dist: np.ndarray | None = None) -> np.ndarray:
        w = self.base.conductance_row(x, coords, dist)
        delta0 = coords - np.asarray(self.x0, dtype=np.int64)
        y_far = np.sqrt((delta0.astype(float) ** 2).sum(axis=1)) > self.R
        from .lattice import distance
        if distance(self.lattice, x, self.x0) > self.R:
            if dist is None:
                d = coords - np.asarray(x, dtype=np.int64)
                dist = np.sqrt((d.astype(float) ** 2).sum(axis=1))
            w = np.where(y_far & (dist > 0), 1.0, w)
        return w


@dataclass(frozen=True)
class MomentGate:
    admissible: bool
    p_threshold: float
    q_threshold: float
    dimension_threshold: float
    dimension_ok: bool
    low_alpha_rule: bool


def validate_moment_exponents(d: int, alpha: float, p: float, q: float,
                              low_alpha_rule: bool = False) -> MomentGate:
    """Admissibility gate for the four-atom law's moment exponents.

    Checks p, q strictly against the scaling-limit thresholds
    p > max{(d+2)/d, (d+1)/(2(2-alpha))} and q > (d+2)/d, together with the
    dimension gate d > 4 - 2 alpha.  With low_alpha_rule (valid only for
    alpha < 1) the p threshold uses (d+1)/(2(1-alpha)) and the dimension
    gate relaxes to d > 2 - 2 alpha.
    """
    if not 0.0 < alpha < 2.0:
        raise ValueError("alpha outside (0, 2)")
    if d < 1:
        raise ValueError("dimension must be >= 1")
    if low_alpha_rule and alpha >= 1.0:
        raise ValueError("the relaxed rule applies only for alpha < 1")
    base = (d + 2) / d
    if low_alpha_rule:
        p_thr = max(base, (d + 1) / (2.0 * (1.0 - alpha)))
        dim_thr = 2.0 - 2.0 * alpha
    else:
        p_thr = max(base, (d + 1) / (2.0 * (2.0 - alpha)))
        dim_thr = 4.0 - 2.0 * alpha
    q_thr = base
    dim_ok = d > dim_thr
    return MomentGate(admissible=bool(p > p_thr and q > q_thr and dim_ok),
                      p_threshold=p_thr, q_threshold=q_thr,
                      dimension_threshold=dim_thr, dimension_ok=dim_ok,
                      low_alpha_rule=low_alpha_rule)


def empirical_moment(field: ConductanceField, exponent: float, n_pairs: int,
                     distance: int = 1) -> float:
    """Sample mean of w^exponent over n_pairs distinct edges at a fixed distance.

    Negative exponents follow the positive-part convention: only w > 0
    enters.  Raises if every sampled value is zero in that case.
    """
    if exponent == 0:
        raise ValueError("exponent must be nonzero")
    values = sample_edge_values(field, distance, n_pairs)
    if exponent < 0:
        values = values[values > 0]
        if len(values) == 0:
            raise ValueError("all sampled conductances are zero; "
                             "negative moment undefined")
    return float(np.mean(values ** exponent))


def sample_edge_values(field: ConductanceField, distance: int, n_pairs: int,
                       start: int = 0) -> np.ndarray:
    """Realized conductances on n_pairs distinct edges at the given distance.

    Edges are (x_j, x_j + distance e1) for consecutive x_j along the first
    axis, so each edge has its own independent hash value.
    """
    dim = field.lattice.coordinate_dim
    out = np.empty(n_pairs)
    ell = np.array([float(distance)])
    values, probs = field.law.atom_table(ell)
    values, probs = values[0], probs[0]
    cum = np.cumsum(probs)
    block = 1 << 16
    for lo in range(0, n_pairs, block):
        hi = min(lo + block, n_pairs)
        xs = np.zeros((hi - lo, dim), dtype=np.int64)
        xs[:, 0] = np.arange(start + lo, start + hi, dtype=np.int64)
        ys = xs.copy()
        ys[:, 0] += distance
        cols = [np.full(hi - lo, EDGE_TAG, dtype=np.int64)]
        cols += [xs[:, j] for j in range(dim)]
        cols += [ys[:, j] for j in range(dim)]
        u = uniform_from_key(mix_fold_array(field.seed, cols))
        idx = np.minimum((u[:, None] >= cum[None, :]).sum(axis=1), len(values) - 1)
        out[lo:hi] = values[idx]
    return out


def lattice_shell_sums(spec: LatticeSpec, radius: float, weight) -> float:
    """Sum of weight(rho(0, y)) over 0 < rho(0, y) <= radius (full lattice only)."""
    d = spec.coordinate_dim
    if d == 1:
        k = np.arange(1, int(math.floor(radius)) + 1, dtype=float)
        return float(2.0 * weight(k).sum())
    coords = ball_array(spec, spec.origin, radius)
    dist = np.sqrt((coords.astype(float) ** 2).sum(axis=1))
    dist = dist[dist > 0]
    return float(weight(dist).sum())


def _integral_tail_bound(d: int, amp: float, expo: float, L: float) -> float:
    """Upper bound on sum over |y| > L of amp * |y|^expo via cube covering."""
    if d == 1:
        # shells are exact pairs {+-k}; monotone comparison with the integral
        return 2.0 * amp * L ** (expo + 1) / (-expo - 1)
    shift = math.sqrt(d) / 2.0
    surface = 2.0 * math.pi ** (d / 2.0) / math.gamma(d / 2.0)
    val, _ = integrate.quad(lambda u: u ** expo * (u + shift) ** (d - 1),
                            L - 2 * shift, np.inf)
    return amp * surface * val


def envelope_tail_mass(field, cutoff: float, alpha: float,
                       direct_radius: float | None = None) -> float:
    """Upper bound on the envelope jump-rate tail beyond the cutoff.

    Bounds sum over rho(x, y) > cutoff of wbar(rho) rho^-(d+alpha) mu_y by an
    exact shell sum out to direct_radius plus an integral tail.  Exact per
    shell on the full lattice; an upper bound for half-space vertices (their
    shells are subsets) and for the weighted measure (via its upper bound).
    """
    if cutoff < 1:
        raise ValueError("cutoff must be >= 1")
    spec = field.lattice
    law = field.law
    if law.envelope_pow >= alpha:
        raise ValueError("envelope not summable: growth exponent %.3g >= alpha %.3g"
                         % (law.envelope_pow, alpha))
    mu_sup = 1.0 if field.measure.kind == "counting" else field.measure.c_m
    d = spec.volume_dimension
    expo = law.envelope_pow - d - alpha

    def weight(r):
        return law.envelope_amp * r ** expo

    if spec.kind == "gasket":
        # finite generated graph: the remaining sum is exact, no infinite tail
        verts, _ = gasket_graph(spec.n_ambient, spec.levels)
        from .lattice import distance
        total = 0.0
        for v in verts:
            rho = distance(spec, spec.origin, v)
            if rho > cutoff:
                total += weight(rho)
        return mu_sup * total
    dim = spec.coordinate_dim
    if direct_radius is None:
        direct_radius = max(2.0 * cutoff, 2.0 ** 16 if dim == 1 else 64.0)
    direct_radius = max(direct_radius, cutoff)
    full = spec if spec.kind == "full" else LatticeSpec("full", d1=0, d2=dim)
    inner = lattice_shell_sums(full, direct_radius, weight)
    head = lattice_shell_sums(full, cutoff, weight)
    tail = _integral_tail_bound(dim, law.envelope_amp, expo, direct_radius)
    return mu_sup * (inner - head + tail)
