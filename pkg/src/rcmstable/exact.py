"""Finite-window exact computations for the walk's law.

Everything here is deterministic linear algebra on an explicitly assembled
rate matrix: heat kernel rows by uniformization, killed (Dirichlet)
semigroups and exit laws, displacement/entropy profiles, the two-ball
Poincare quotient, and oscillation decay of parabolic boundary-value
functions across nested space-time cylinders.

Windows are finite but audited: Dirichlet diagonals carry the exact
off-window leak rate, and conservative windows report the probability mass
that reaches the outer shell so truncation error stays quantified.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field

import numpy as np
from scipy import sparse, stats
from scipy.linalg import eigh, null_space
from scipy.sparse.csgraph import connected_components

from .lattice import ball, distance
from .walker import total_rate

_UNIFORMIZATION_BUDGET = 200_000


@dataclass
class GeneratorMatrix:
    """Jump-rate matrix of the walk restricted to a finite vertex window."""

    vertices: list
    coords: np.ndarray
    M: np.ndarray
    mu: np.ndarray
    alpha: float
    d: float
    mode: str
    spec: object
    leak: np.ndarray | None = None
    meta: dict = dc_field(default_factory=dict)

    @property
    def index(self) -> dict:
        if "index" not in self.meta:
            self.meta["index"] = {v: i for i, v in enumerate(self.vertices)}
        return self.meta["index"]

    @property
    def lam(self) -> float:
        return float(-self.M.diagonal().min())

    def locate(self, x) -> int:
        return self.index[tuple(x)]


def _pair_distances(spec, x, coords: np.ndarray) -> np.ndarray:
    if spec.kind == "gasket":
        return np.array([distance(spec, x, tuple(c)) for c in coords], dtype=float)
    delta = (coords - np.asarray(x, dtype=np.int64)).astype(float)
    return np.sqrt((delta ** 2).sum(axis=1))


def build_generator(field, alpha: float, vertices, mode: str = "conservative",
                    delta: float | None = None,
                    rate_radius: int = 4096) -> GeneratorMatrix:
    """Assemble the exact rate matrix over the given window.

    Off-diagonal entries are w(x,y) rho^-(d+alpha) mu_y, optionally
    restricted to rho <= delta.  Conservative mode zeroes row sums (the
    window is the whole state space); dirichlet mode kills at the exact
    rate of jumps leaving the window.
    """
    if mode not in ("conservative", "dirichlet"):
        raise ValueError("unknown mode %r" % (mode,))
    spec = field.lattice
    d = spec.volume_dimension
    verts = sorted(tuple(v) for v in vertices)
    if not verts:
        raise ValueError("empty window")
    m = len(verts)
    coords = np.asarray(verts, dtype=np.int64).reshape(m, spec.coordinate_dim)
    mu = field.measure.mu_array(coords)
    M = np.zeros((m, m))
    for i, x in enumerate(verts):
        rho = _pair_distances(spec, x, coords)
        w = field.conductance_row(x, coords, rho)
        rates = np.zeros(m)
        off = rho > 0
        if delta is not None:
            off &= rho <= delta
        rates[off] = w[off] * rho[off] ** -(d + alpha) * mu[off]
        M[i] = rates
    row = M.sum(axis=1)
    leak = None
    if mode == "conservative":
        n_comp, _ = connected_components(sparse.csr_matrix(M > 0), directed=False)
        if n_comp > 1:
            raise ValueError("window splits into %d components under open edges"
                             % n_comp)
        np.fill_diagonal(M, -row)
    else:
        leak = np.empty(m)
        for i, x in enumerate(verts):
            if delta is None:
                total = total_rate(field, alpha, x, rate_radius)
            else:
                total = _truncated_rate(field, alpha, x, delta)
            leak[i] = max(total - row[i], 0.0)
        np.fill_diagonal(M, -(row + leak))
    return GeneratorMatrix(vertices=verts, coords=coords, M=M, mu=mu,
                           alpha=alpha, d=d, mode=mode, spec=spec, leak=leak,
                           meta={"delta": delta})


def _truncated_rate(field, alpha: float, x, delta: float) -> float:
    spec = field.lattice
    d = spec.volume_dimension
    close = ball(spec, x, delta)
    coords = np.asarray(sorted(close), dtype=np.int64).reshape(len(close),
                                                               spec.coordinate_dim)
    rho = _pair_distances(spec, x, coords)
    w = field.conductance_row(x, coords, rho)
    mu = field.measure.mu_array(coords)
    off = rho > 0
    return float((w[off] * rho[off] ** -(d + alpha) * mu[off]).sum())


def uniformized_action(A: np.ndarray, v0: np.ndarray, t_values,
                       tol: float = 1e-12) -> np.ndarray:
    """Rows exp(t A) v0 for each t, by Poisson-weighted powers of I + A/lam.

    Valid whenever A has nonnegative off-diagonal entries and nonpositive
    row sums do not matter here; only I + A/lam >= 0 entrywise is needed,
    which holds with lam = max(-diag A).
    """
    t_values = np.atleast_1d(np.asarray(t_values, dtype=float))
    if np.any(t_values < 0):
        raise ValueError("negative time")
    m = len(v0)
    lam = float(max(-A.diagonal().min(), 0.0))
    t_max = float(t_values.max(initial=0.0))
    if lam == 0.0 or t_max == 0.0:
        # every row of A is zero (rate matrices with empty diagonals carry
        # no off-diagonal mass either) or no time passes
        return np.tile(v0.astype(float), (len(t_values), 1))
    mu_max = lam * t_max
    K = int(stats.poisson.isf(tol, mu_max)) + 5 if mu_max > 0 else 0
    if K > _UNIFORMIZATION_BUDGET:
        raise ValueError("uniformization needs %d terms; shrink t or the window"
                         % K)
    P = np.eye(m) + A / lam
    weights = stats.poisson.pmf(np.arange(K + 1)[None, :],
                                (lam * t_values)[:, None])
    out = np.zeros((len(t_values), m))
    v = v0.astype(float).copy()
    for k in range(K + 1):
        col = weights[:, k]
        if col.max() > 1e-18:
            out += col[:, None] * v[None, :]
        v = P @ v
    return out


def heat_kernel_grid(G: GeneratorMatrix, t_values, x) -> dict:
    """Kernel rows p(t, x, .) for every t in one propagation sweep."""
    i = G.locate(x)
    e = np.zeros(len(G.vertices))
    e[i] = 1.0
    pi = uniformized_action(G.M.T, e, t_values)
    p = pi / G.mu[None, :]
    return {"t": np.atleast_1d(np.asarray(t_values, dtype=float)),
            "p": p, "row_mass": pi.sum(axis=1)}


def heat_kernel(G: GeneratorMatrix, t: float, x) -> np.ndarray:
    """Single kernel row p(t, x, .) over the window."""
    return heat_kernel_grid(G, [t], x)["p"][0]


def ondiag_decay_fit(G: GeneratorMatrix, x, t_values) -> dict:
    """Least-squares decay exponent of t -> p(t,x,x) on the given grid."""
    t = np.asarray(t_values, dtype=float)
    if np.any(t <= 0):
        raise ValueError("need strictly positive times")
    grid = heat_kernel_grid(G, t, x)
    p_xx = grid["p"][:, G.locate(x)]
    if np.any(p_xx < 1e-300):
        raise ValueError("kernel underflow in the fit window")
    slope, intercept = np.polyfit(np.log(t), np.log(p_xx), 1)
    constant = float(np.max(p_xx * t ** (G.d / G.alpha)))
    return {"slope": float(slope), "intercept": float(intercept),
            "constant": constant, "t": t, "p_xx": p_xx,
            "row_mass": grid["row_mass"]}


@dataclass
class NashProfile:
    """Displacement and entropy of the windowed walk along a time grid."""

    times: np.ndarray
    displacement: np.ndarray   # E rho(X_t, x)
    entropy: np.ndarray        # -sum p log p mu
    K: np.ndarray              # (entropy + c - (d/alpha) log t) / d, t > 0
    boundary_mass: float
    x: tuple

    def entropy_is_monotone(self, tol: float = 1e-10) -> bool:
        return bool(np.all(np.diff(self.entropy) >= -tol))


def nash_profile(G: GeneratorMatrix, x, t_values, c_const: float = 0.0,
                 boundary_tol: float = 1e-6) -> NashProfile:
    """Exact displacement M(t) and entropy Q(t) profiles from vertex x.

    Requires a conservative window; the mass reaching the outer tenth of
    the window at the latest time must stay below boundary_tol, otherwise
    the window is too small for the requested horizon.
    """
    if G.mode != "conservative":
        raise ValueError("profiles need a conservative window")
    t = np.atleast_1d(np.asarray(t_values, dtype=float))
    i = G.locate(x)
    e = np.zeros(len(G.vertices))
    e[i] = 1.0
    pi = uniformized_action(G.M.T, e, t)
    rho = _pair_distances(G.spec, tuple(x), G.coords)
    shell = rho > 0.9 * rho.max()
    bmass = float(pi[int(np.argmax(t)), shell].sum()) if len(t) else 0.0
    if bmass > boundary_tol:
        raise ValueError("window too small: outer-shell mass %.3g exceeds %.3g"
                         % (bmass, boundary_tol))
    disp = pi @ rho
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = pi / G.mu[None, :]
        terms = np.where(pi > 0, -pi * np.log(ratio), 0.0)
    Q = terms.sum(axis=1)
    K = np.full_like(t, np.nan)
    pos = t > 0
    K[pos] = (Q[pos] + c_const - (G.d / G.alpha) * np.log(t[pos])) / G.d
    return NashProfile(times=t, displacement=disp, entropy=Q, K=K,
                       boundary_mass=bmass, x=tuple(x))


def dirichlet_exit_cdf(G: GeneratorMatrix, x, t_values) -> np.ndarray:
    """P(exit by t) for the killed window semigroup started at x."""
    if G.mode != "dirichlet":
        raise ValueError("exit law needs a dirichlet window")
    t = np.atleast_1d(np.asarray(t_values, dtype=float))
    i = G.locate(x)
    e = np.zeros(len(G.vertices))
    e[i] = 1.0
    pi = uniformized_action(G.M.T, e, t)
    cdf = 1.0 - pi.sum(axis=1)
    return np.clip(cdf, 0.0, 1.0)


def poincare_ratio(field, alpha: float, center, r0: float) -> float:
    """Sharp constant of the two-ball averaging inequality at radius r0.

    Returns the largest value of
      sum_{z in B(x,r0)} (f(z) - avg of f over open neighbors of z)^2 mu_z
    divided by
      sum_{z in B(x,r0), y in B(x,2 r0)} (f(z)-f(y))^2 w rho^-(d+alpha) mu mu
    over nonconstant f on B(x, 2 r0), computed as a generalized eigenvalue
    after deflating constants.
    """
    spec = field.lattice
    d = spec.volume_dimension
    center = tuple(center)
    inner = sorted(ball(spec, center, r0))
    outer = sorted(ball(spec, center, 2.0 * r0))
    idx = {v: j for j, v in enumerate(outer)}
    m = len(outer)
    coords = np.asarray(outer, dtype=np.int64).reshape(m, spec.coordinate_dim)
    mu = field.measure.mu_array(coords)

    lhs = np.zeros((m, m))
    rhs = np.zeros((m, m))
    for z in inner:
        j_z = idx[z]
        rho = _pair_distances(spec, z, coords)
        w = field.conductance_row(z, coords, rho)
        # open neighbors of z within r0; all of them lie inside the outer ball
        nb = (rho > 0) & (rho <= r0) & (w > 0)
        mass = float(mu[nb].sum())
        if mass <= 0:
            raise ValueError("vertex %r has no open neighbors within r0" % (z,))
        a = np.zeros(m)
        a[nb] = mu[nb] / mass
        a[j_z] -= 1.0          # f(z) - average
        lhs += mu[j_z] * np.outer(a, a)
        # energy terms pair z with the whole outer ball
        pos = (rho > 0) & (w > 0)
        coef = np.zeros(m)
        coef[pos] = w[pos] * rho[pos] ** -(d + alpha) * mu[pos] * mu[j_z]
        for j in np.nonzero(pos)[0]:
            c = coef[j]
            rhs[j_z, j_z] += c
            rhs[j, j] += c
            rhs[j_z, j] -= c
            rhs[j, j_z] -= c
    U = null_space(np.ones((1, m)))
    lhs_r = U.T @ lhs @ U
    rhs_r = U.T @ rhs @ U
    floor = np.linalg.eigvalsh(rhs_r)[0]
    if floor <= 1e-10 * np.abs(rhs_r).max():
        raise ValueError("energy form degenerate: open-edge graph disconnects "
                         "the window")
    vals = eigh(lhs_r, rhs_r, eigvals_only=True)
    return float(vals[-1])


def parabolic_oscillation(field, alpha: float, center, r: float,
                          boundary_fn, xi: float = 0.25, k_max: int = 3,
                          C0: float = 1.0, n_time: int = 9,
                          cutoff: int = 4096) -> dict:
    """Oscillation of a parabolic boundary-value function on nested cylinders.

    The function q(s, z) follows the walk from (s, z) until it either jumps
    out of B(center, r) or reaches the top of the cylinder
    (base, base + C0 r^alpha) x B(center, r), then collects boundary_fn at
    that point.  The backward-in-time evolution is an affine system solved
    by uniformization of the killed generator augmented with the exterior
    source column.  Cylinders share their base time and shrink by xi per
    level; the report carries their oscillations and the implied per-level
    contraction factor eta.
    """
    if not 0.0 < xi < 1.0:
        raise ValueError("xi outside (0,1)")
    spec = field.lattice
    d = spec.volume_dimension
    dim = spec.coordinate_dim
    center = tuple(center)
    verts = sorted(ball(spec, center, r))
    m = len(verts)
    coords = np.asarray(verts, dtype=np.int64).reshape(m, dim)
    inside = set(verts)
    radii = [r * xi ** k for k in range(k_max + 1)]

    # exterior pool: every vertex a single jump of length <= cutoff can
    # reach from the ball, shared across all rows
    if spec.kind == "gasket":
        from .lattice import gasket_graph
        pool = [v for v in sorted(gasket_graph(spec.n_ambient, spec.levels)[0])
                if v not in inside]
        far_reps = []
    else:
        pool = [v for v in ball(spec, center, r + cutoff) if v not in inside]
        far_reps = []
        for j in range(dim):
            for sgn in (1, -1):
                p = list(center)
                p[j] += sgn * int(r + 2 * cutoff)
                if spec.contains(tuple(p)):
                    far_reps.append(tuple(p))
    pool_coords = (np.asarray(pool, dtype=np.int64).reshape(len(pool), dim)
                   if pool else np.zeros((0, dim), dtype=np.int64))
    pool_mu = field.measure.mu_array(pool_coords) if pool else np.zeros(0)

    h_in = np.array([float(boundary_fn(v)) for v in verts])
    h_pool = np.array([float(boundary_fn(v)) for v in pool])
    h_far = np.array([float(boundary_fn(v)) for v in far_reps])
    h_all = np.concatenate([h_in, h_pool, h_far])
    h_lo, h_hi = float(h_all.min()), float(h_all.max())
    if h_hi - h_lo <= 0:
        return {"radii": radii, "osc": np.zeros(k_max + 1), "eta": 0.0,
                "times": None, "values": None}
    scale = h_hi - h_lo
    h01_in = (h_in - h_lo) / scale
    h01_pool = (h_pool - h_lo) / scale
    h01_far = float(((h_far - h_lo) / scale).mean()) if len(h_far) else 0.0

    from .assumptions import _deterministic_tail, law_mean
    mean_far = float(law_mean(field.law, np.array([float(cutoff)]))[0])
    from .walker import _measure_mean
    tail_rate = (mean_far * _measure_mean(field.measure)
                 * _deterministic_tail(dim, d + alpha, cutoff)
                 if spec.kind != "gasket" else 0.0)

    mu_in = field.measure.mu_array(coords)
    L = np.zeros((m, m))
    b = np.zeros(m)
    for i, z in enumerate(verts):
        rho_in = _pair_distances(spec, z, coords)
        w_in = field.conductance_row(z, coords, rho_in)
        off = rho_in > 0
        L[i, off] = w_in[off] * rho_in[off] ** -(d + alpha) * mu_in[off]
        if pool:
            rho_p = _pair_distances(spec, z, pool_coords)
            keep = rho_p <= cutoff
            w_p = field.conductance_row(z, pool_coords[keep], rho_p[keep])
            rates_p = w_p * rho_p[keep] ** -(d + alpha) * pool_mu[keep]
            b[i] = float(rates_p @ h01_pool[keep]) + tail_rate * h01_far
            exterior_total = float(rates_p.sum()) + tail_rate
        else:
            b[i] = tail_rate * h01_far
            exterior_total = tail_rate
        # diagonal balances interior and exterior exactly so that constant
        # boundary data is a fixed point of the evolution
        L[i, i] = -(float(L[i, off].sum()) + exterior_total)
    A = np.zeros((m + 1, m + 1))
    A[:m, :m] = L
    A[:m, m] = b
    v0 = np.concatenate([h01_in, [1.0]])

    T = C0 * r ** alpha
    u_grid = np.asarray(sorted({
        float(T - C0 * rk ** alpha + frac * C0 * rk ** alpha)
        for rk in radii for frac in np.linspace(0.0, 1.0, n_time)}))
    q = uniformized_action(A, v0, u_grid)[:, :m]

    dist0 = _pair_distances(spec, center, coords)
    osc = np.empty(k_max + 1)
    for k, rk in enumerate(radii):
        t_mask = u_grid >= T - C0 * rk ** alpha - 1e-12
        v_mask = dist0 <= rk
        block = q[np.ix_(t_mask, v_mask)]
        osc[k] = float(block.max() - block.min()) * scale
    eta = float((osc[k_max] / osc[0]) ** (1.0 / k_max)) if osc[0] > 0 else 0.0
    return {"radii": radii, "osc": osc, "eta": eta, "times": u_grid,
            "values": q * scale + h_lo}
