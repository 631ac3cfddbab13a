"""Exact-in-law simulation of the variable speed walk.

The walk waits at x for an exponential time with the total jump rate
C_x = sum_y w_{x,y} / rho(x,y)^(d+alpha) mu_y and moves to y with
probability proportional to that summand.  Sampling never evaluates C_x:
proposals arrive as a Poisson stream under the dominating envelope kernel
wbar(rho) rho^-(d+alpha) mu_sup and are accepted with probability
w_{x,y} mu_y / (wbar mu_sup).  Thinning a Poisson stream is lossless, so
holding times and jump targets follow the exact law.

On the line the proposal distances are table-driven up to 2^16 and handed
beyond that to a discrete power-law sampler (Pareto proposal, near-one
acceptance), so no truncation enters in one dimension.  In higher dimensions
proposals beyond the table radius are counted against an integral bound and
abort the replica as a flagged censoring event with reported probability.
Finite fractal graphs are exhausted directly, no envelope needed.
"""

from __future__ import annotations

import math
from bisect import bisect_right
from dataclasses import dataclass

import numpy as np
from scipy import special

from .environment import LocalizedField
from .lattice import ball_array, distance, gasket_graph
from .seeds import mix, stream

HOLD_TAG = 0x686F6C64
JUMP_TAG = 0x6A756D70
BIG_TAG = 0x626967
CONT_TAG = 0x636F6E74

# table radii keep the proposal table around 10^6 entries or fewer
_TABLE_CAP = {1: 1 << 16, 2: 192, 3: 48, 4: 20}

_CENSOR = object()


class AbsorbingStateError(RuntimeError):
    """Raised when the walk sits on a vertex with no open edges."""


@dataclass
class ProcessSpec:
    """Which process to run: full walk, range-truncated, or hat-localized."""

    alpha: float
    variant: str = "full"
    delta: float | None = None
    x0: tuple | None = None
    R: float | None = None
    localized_truncated: bool = False
    n: int = 1

    def __post_init__(self):
        if not 0.0 < self.alpha < 2.0:
            raise ValueError("alpha outside (0, 2)")
        if self.variant not in ("full", "truncated", "localized"):
            raise ValueError("unknown variant %r" % (self.variant,))
        if self.variant == "truncated" and (self.delta is None or self.delta < 1):
            raise ValueError("truncated variant needs delta >= 1")
        if self.variant == "localized":
            if self.x0 is None or self.R is None or self.R < 1:
                raise ValueError("localized variant needs x0 and R >= 1")
            if self.localized_truncated and (self.delta is None or self.delta < 1):
                raise ValueError("truncated localization needs delta >= 1")
        if self.n < 1 or int(self.n) != self.n:
            raise ValueError("scaling index must be a positive integer")

    @property
    def rho_max(self) -> float | None:
        if self.variant == "truncated":
            return self.delta
        if self.variant == "localized" and self.localized_truncated:
            return self.delta
        return None

    def effective_field(self, field):
        if self.variant == "localized":
            return LocalizedField(field, self.x0, self.R)
        return field


@dataclass
class PathSample:
    """One realized trajectory: jump times with the vertex entered at each."""

    x0: tuple
    times: np.ndarray
    vertices: np.ndarray
    horizon: float
    seed_path: tuple = ()
    censored: bool = False
    proposals: int = 0

    def __post_init__(self):
        if len(self.times) and np.any(np.diff(self.times) <= 0):
            raise ValueError("jump times must increase strictly")

    def __len__(self) -> int:
        return len(self.times)

    def position_at(self, t: float):
        i = int(np.searchsorted(self.times, t, side="right"))
        if i == 0:
            return tuple(self.x0)
        return tuple(self.vertices[i - 1])

    @property
    def final(self):
        return self.position_at(self.horizon)


class _Buf:
    """Sequential uniforms drawn in fixed blocks; order matches scalar draws."""

    __slots__ = ("rng", "vals", "i", "n")

    def __init__(self, rng, block: int = 1024):
        self.rng = rng
        self.n = block
        self.vals = rng.random(block).tolist()
        self.i = 0

    def next(self) -> float:
        if self.i == self.n:
            self.vals = self.rng.random(self.n).tolist()
            self.i = 0
        v = self.vals[self.i]
        self.i += 1
        return v


class JumpSampler:
    """Envelope-kernel proposal sampler with optional distance restriction.

    Proposals are drawn per unit time at the fixed rate .rate; the caller
    accepts with w mu_y / (wbar(rho) mu_sup).  rho_min/rho_max restrict the
    proposal support to rho_min < rho <= rho_max, which is how truncated
    walks and the big-jump channel are realized without changing laws.
    """

    def __init__(self, field, alpha: float, rho_min: float = 0.0,
                 rho_max: float | None = None, cap: int | None = None):
        law = field.law
        spec = field.lattice
        self.alpha = float(alpha)
        self.amp = law.envelope_amp
        self.pow = law.envelope_pow
        self.beta = self.alpha - self.pow
        if self.beta <= 0:
            raise ValueError("envelope grows too fast: exponent %.3g >= alpha %.3g"
                             % (self.pow, self.alpha))
        self.mu_sup = 1.0 if field.measure.kind == "counting" else field.measure.c_m
        self.spec = spec
        self.direct = spec.kind == "gasket"
        if self.direct:
            self._init_gasket(field, rho_min, rho_max)
            return
        dim = spec.coordinate_dim
        d = spec.volume_dimension
        self.dim = dim
        self.half = spec.kind == "half"
        self.d1 = spec.d1
        cap = cap if cap is not None else _TABLE_CAP.get(dim, 8)
        if rho_max is not None and rho_max > cap:
            raise ValueError("restriction radius exceeds the table cap %d" % cap)
        self.cap = cap
        expo = self.pow - d - self.alpha
        if dim == 1:
            k_lo = int(math.floor(rho_min)) + 1
            k_hi = cap if rho_max is None else int(math.floor(rho_max))
            if k_hi < k_lo:
                raise ValueError("empty proposal support")
            ks = np.arange(k_lo, k_hi + 1, dtype=float)
            weights = self.amp * self.mu_sup * ks ** expo
            cum = np.cumsum(weights)
            self.k_lo = k_lo
            self.k_hi = k_hi
            self.table_mass = float(cum[-1])
            self.cum = cum.tolist()
            if rho_max is None:
                self.tail_mass = self.amp * self.mu_sup * float(
                    special.zeta(1.0 + self.beta, cap + 1))
                self._tail_norm = self._tail_ratio(cap + 1)
            else:
                self.tail_mass = 0.0
            self.side_mass = self.table_mass + self.tail_mass
            self.rate = 2.0 * self.side_mass
            self.censor_probability = 0.0
        else:
            full = spec if spec.kind == "full" else type(spec)("full", d1=0, d2=dim)
            offsets = ball_array(full, full.origin, float(cap))
            rho = np.sqrt((offsets.astype(float) ** 2).sum(axis=1))
            keep = (rho > rho_min) & (rho > 0)
            if rho_max is not None:
                keep &= rho <= rho_max
            self.offsets = offsets[keep]
            self.rho = rho[keep]
            weights = self.amp * self.mu_sup * self.rho ** expo
            cum = np.cumsum(weights)
            self.table_mass = float(cum[-1])
            self.cum = cum.tolist()
            if rho_max is None:
                from .environment import _integral_tail_bound
                self.tail_mass = self.mu_sup * _integral_tail_bound(
                    dim, self.amp, expo, float(cap))
            else:
                self.tail_mass = 0.0
            self.rate = self.table_mass + self.tail_mass
            self.censor_probability = self.tail_mass / self.rate

    def _init_gasket(self, field, rho_min, rho_max):
        verts, _ = gasket_graph(self.spec.n_ambient, self.spec.levels)
        self._verts = sorted(verts)
        self._field = field
        self._rho_min = rho_min
        self._rho_max = rho_max
        self._rows = {}
        self.censor_probability = 0.0

    def row(self, x):
        """Exact jump-rate row at x over the generated graph (cached)."""
        x = tuple(x)
        hit = self._rows.get(x)
        if hit is not None:
            return hit
        spec = self.spec
        d = spec.volume_dimension
        targets, rates = [], []
        for v in self._verts:
            if v == x:
                continue
            rho = distance(spec, x, v)
            if rho <= self._rho_min:
                continue
            if self._rho_max is not None and rho > self._rho_max:
                continue
            w = self._field.conductance(x, v)
            if w <= 0:
                continue
            targets.append(v)
            rates.append(w * rho ** -(d + self.alpha) * self._field.measure.mu(v))
        cum = np.cumsum(rates) if rates else np.zeros(0)
        entry = (float(cum[-1]) if len(cum) else 0.0, cum.tolist(), targets)
        self._rows[x] = entry
        return entry

    def envelope_rate(self, rho: float) -> float:
        """Dominating per-target weight wbar(rho) mu_sup used in acceptance."""
        return self.amp * rho ** self.pow * self.mu_sup

    def _tail_ratio(self, m: int) -> float:
        # mass ratio between the target pmf m^-(1+beta) and the floored
        # Pareto proposal, stable for large m
        return 1.0 / (m * -math.expm1(-self.beta * math.log1p(1.0 / m)))

    def _tail_draw(self, buf: _Buf) -> int:
        lo = self.cap + 1
        inv = 1.0 / self.beta
        while True:
            u = 1.0 - buf.next()    # (0, 1]
            x = lo * u ** -inv
            m = int(x)
            if buf.next() * self._tail_norm <= self._tail_ratio(m):
                return m

    def propose(self, buf: _Buf, x):
        """Draw one envelope proposal from x: (target, rho), None, or censor.

        None means the proposal fell outside the vertex set (half-space
        clipping); the caller skips it, which is itself a thinning step.
        """
        if self.dim == 1:
            neg = buf.next() < 0.5
            target = buf.next() * self.side_mass
            if target < self.table_mass:
                k = self.k_lo + bisect_right(self.cum, target)
                k = min(k, self.k_hi)
            else:
                k = self._tail_draw(buf)
            if neg:
                k = -k
            y0 = x[0] + k
            if self.half and self.d1 >= 1 and y0 < 0:
                return None
            if abs(y0) > 1 << 62:
                return _CENSOR
            return (y0,), float(abs(k))
        target = buf.next() * self.rate
        if target >= self.table_mass:
            return _CENSOR
        j = bisect_right(self.cum, target)
        j = min(j, len(self.rho) - 1)
        off = self.offsets[j]
        y = tuple(int(x[i] + off[i]) for i in range(self.dim))
        for i in range(self.d1):
            if y[i] < 0:
                return None
        return y, float(self.rho[j])


def _measure_mean(measure) -> float:
    if measure.kind == "counting" or measure.c_m == 1.0:
        return 1.0
    c = measure.c_m
    return (c - 1.0 / c) / (2.0 * math.log(c))


def weighted_far_sum(field, alpha: float, x, lo: float,
                     direct_radius: int = 4096) -> float:
    """Sum of w(x,y) rho^-(d+alpha) mu_y over rho > lo.

    Direct enumeration to direct_radius; beyond it edges are taken at their
    exact per-distance mean, which keeps constant fields exact to machine
    precision and is the unbiased point value otherwise.
    """
    from .assumptions import _deterministic_tail, law_mean
    spec = field.lattice
    d = spec.volume_dimension
    if spec.kind == "gasket":
        verts, _ = gasket_graph(spec.n_ambient, spec.levels)
        total = 0.0
        for v in verts:
            rho = distance(spec, x, v)
            if rho > lo:
                total += (field.conductance(x, v) * rho ** -(d + alpha)
                          * field.measure.mu(v))
        return total
    if spec.coordinate_dim == 1:
        ks = np.arange(1, direct_radius + 1, dtype=np.int64)
        coords = np.concatenate([x[0] + ks, x[0] - ks])[:, None]
        if spec.kind == "half":
            coords = coords[coords[:, 0] >= 0]
        rho = np.abs(coords[:, 0] - x[0]).astype(float)
        w = field.conductance_row(x, coords, rho)
        mu = field.measure.mu_array(coords)
        m = rho > lo
        direct = float((w[m] * rho[m] ** -(d + alpha) * mu[m]).sum())
    else:
        coords = ball_array(spec, x, float(direct_radius))
        delta = (coords - np.asarray(x, dtype=np.int64)).astype(float)
        rho = np.sqrt((delta ** 2).sum(axis=1))
        m = rho > lo
        w = field.conductance_row(x, coords[m], rho[m])
        mu = field.measure.mu_array(coords[m])
        direct = float((w * rho[m] ** -(d + alpha) * mu).sum())
    mean_w = float(law_mean(field.law, np.array([float(direct_radius)]))[0])
    remainder = (mean_w * _measure_mean(field.measure)
                 * _deterministic_tail(spec.coordinate_dim, d + alpha, direct_radius))
    return direct + remainder


def total_rate(field, alpha: float, x, direct_radius: int = 4096) -> float:
    """Exact holding rate C_x of the walk at x."""
    return weighted_far_sum(field, alpha, x, 0.0, direct_radius)


def big_jump_hazard(field, alpha: float, x, delta: float,
                    direct_radius: int = 4096) -> float:
    """Rate of jumps longer than delta out of x."""
    return weighted_far_sum(field, alpha, x, delta, direct_radius)


def _engine(field, sampler: JumpSampler, x0, T: float, hold: _Buf, jump: _Buf,
            stop_fn=None, max_events: int = 10 ** 7, record: bool = True):
    """Core thinning loop shared by every lattice simulation entry point."""
    x = tuple(int(c) for c in x0)
    t = 0.0
    times, verts = [], []
    censored = False
    proposals = 0
    stopped_at = None
    mu_of = field.measure.mu
    conduct = field.conductance
    if sampler.direct:
        while True:
            rate_x, cum, targets = sampler.row(x)
            if rate_x <= 0.0:
                raise AbsorbingStateError("no open edges at %r" % (x,))
            t += -math.log(1.0 - hold.next()) / rate_x
            if t >= T:
                break
            j = min(bisect_right(cum, jump.next() * rate_x), len(targets) - 1)
            x = targets[j]
            proposals += 1
            if record:
                times.append(t)
                verts.append(x)
            if stop_fn is not None and stop_fn(x):
                stopped_at = t
                break
            if proposals >= max_events:
                censored = True
                break
        return x, times, verts, censored, proposals, stopped_at
    lam = sampler.rate
    accepts = 0
    while True:
        t += -math.log(1.0 - hold.next()) / lam
        if t >= T:
            break
        proposals += 1
        prop = sampler.propose(jump, x)
        if prop is None:
            continue
        if prop is _CENSOR:
            censored = True
            break
        y, rho = prop
        u = jump.next()
        w = conduct(x, y)
        if w <= 0.0:
            continue
        if u * sampler.envelope_rate(rho) > w * mu_of(y):
            continue
        x = y
        accepts += 1
        if record:
            times.append(t)
            verts.append(x)
        if stop_fn is not None and stop_fn(x):
            stopped_at = t
            break
        if accepts >= max_events:
            censored = True
            break
        if proposals > max(10 ** 6, 200 * max(accepts, 1) + 10 ** 5):
            # thinning this inefficient means the current vertex is
            # essentially closed; confirm before giving up
            if total_rate(field, sampler.alpha, x) <= 1e-12:
                raise AbsorbingStateError("no open edges at %r" % (x,))
            censored = True
            break
    return x, times, verts, censored, proposals, stopped_at


def _streams(seed_words: tuple):
    root = mix(*seed_words) if len(seed_words) > 1 else seed_words[0]
    return _Buf(stream(root, HOLD_TAG)), _Buf(stream(root, JUMP_TAG))


def _as_path(field, x0, T, seed_path, result) -> PathSample:
    x, times, verts, censored, proposals, _ = result
    dim = field.lattice.coordinate_dim
    tarr = np.asarray(times, dtype=float)
    varr = (np.asarray(verts, dtype=np.int64).reshape(len(verts), dim)
            if verts else np.zeros((0, dim), dtype=np.int64))
    return PathSample(x0=tuple(x0), times=tarr, vertices=varr, horizon=T,
                      seed_path=seed_path, censored=censored, proposals=proposals)


def step(process: ProcessSpec, field, x, seed_words=(0,)):
    """One exact transition from x: (holding time, next vertex)."""
    eff = process.effective_field(field)
    sampler = JumpSampler(eff, process.alpha, rho_max=process.rho_max)
    hold, jump = (seed_words if isinstance(seed_words[0], _Buf)
                  else _streams(tuple(seed_words)))
    result = _engine(eff, sampler, x, math.inf, hold, jump,
                     stop_fn=lambda _: True)
    x_new, times, _, censored, proposals, _ = result
    if censored or not times:
        raise AbsorbingStateError("no accepted jump after %d proposals" % proposals)
    return times[0], tuple(x_new)


def simulate_path(field, process: ProcessSpec, x0, T: float, seed: int,
                  max_events: int = 10 ** 7) -> PathSample:
    """Full trajectory on [0, T]; identical seeds give identical event lists."""
    if T <= 0:
        raise ValueError("horizon must be positive")
    eff = process.effective_field(field)
    sampler = JumpSampler(eff, process.alpha, rho_max=process.rho_max)
    hold, jump = _streams((seed,))
    result = _engine(eff, sampler, x0, T, hold, jump, max_events=max_events)
    return _as_path(eff, x0, T, (seed,), result)


def simulate_scaled(field, process: ProcessSpec, x0_scaled, t: float,
                    seed: int, max_events: int = 10 ** 7):
    """Path of the rescaled walk: positions / n, time compressed by n^alpha.

    x0_scaled lives on the shrunken grid; it is mapped back to the lattice
    by multiplying by n, which must land on a vertex.
    """
    n = process.n
    x0 = tuple(int(round(c * n)) for c in x0_scaled)
    base = simulate_path(field, process, x0, n ** process.alpha * t, seed,
                         max_events=max_events)
    return PathSample(x0=tuple(c / n for c in x0),
                      times=base.times / n ** process.alpha,
                      vertices=base.vertices.astype(float) / n,
                      horizon=t, seed_path=(seed, n), censored=base.censored,
                      proposals=base.proposals)


def exit_time(field, process: ProcessSpec, x0, r: float, seed: int,
              max_events: int = 10 ** 6):
    """First exit from the ball B(x0, r): (tau, exit vertex, censored)."""
    if r < 1:
        raise ValueError("radius below 1")
    eff = process.effective_field(field)
    sampler = JumpSampler(eff, process.alpha, rho_max=process.rho_max)
    hold, jump = _streams((seed,))
    spec = field.lattice
    x0 = tuple(int(c) for c in x0)

    def outside(y):
        return distance(spec, y, x0) > r

    result = _engine(eff, sampler, x0, math.inf, hold, jump, stop_fn=outside,
                     max_events=max_events)
    x, _, _, censored, _, stopped_at = result
    if censored:
        return math.nan, tuple(x), True
    return stopped_at, tuple(x), False


def sample_exit_times(field, process: ProcessSpec, x0, r: float,
                      n_replicas: int, seed: int,
                      max_events: int = 10 ** 6) -> dict:
    """Replicated exit observations: arrays tau, exit_distance, censored."""
    spec = field.lattice
    taus = np.empty(n_replicas)
    dists = np.empty(n_replicas)
    cens = np.zeros(n_replicas, dtype=bool)
    for i in range(n_replicas):
        tau, y, c = exit_time(field, process, x0, r, mix(seed, i),
                              max_events=max_events)
        taus[i] = tau
        dists[i] = distance(spec, y, x0)
        cens[i] = c
    return {"tau": taus, "exit_distance": dists, "censored": cens}


def sample_marginals(field, process: ProcessSpec, x0_scaled, t: float,
                     n_replicas: int, seed: int,
                     max_events: int = 10 ** 7) -> np.ndarray:
    """Terminal positions of the rescaled walk across replicas, shape (m, dim)."""
    n = process.n
    x0 = tuple(int(round(c * n)) for c in x0_scaled)
    eff = process.effective_field(field)
    sampler = JumpSampler(eff, process.alpha, rho_max=process.rho_max)
    T = n ** process.alpha * t
    dim = field.lattice.coordinate_dim
    out = np.empty((n_replicas, dim))
    for i in range(n_replicas):
        hold, jump = _streams((mix(seed, i),))
        result = _engine(eff, sampler, x0, T, hold, jump,
                         max_events=max_events, record=False)
        x, _, _, censored, _, _ = result
        if censored:
            out[i] = np.nan
        else:
            out[i] = np.asarray(x, dtype=float) / n
    return out


def meyer_coupled_pair(field, alpha: float, delta: float, x0, T: float,
                       seed: int, max_events: int = 10 ** 7):
    """Run the range-truncated walk and the full walk on shared randomness.

    The full walk reuses every truncated jump and adds an independent
    long-jump proposal stream; the two paths agree exactly before the first
    accepted long jump, whose time T_delta has the conditional hazard
    J(X_s, delta) along the truncated trajectory.  Returns
    (truncated path, full path, T_delta or None).
    """
    if delta < 1:
        raise ValueError("delta below 1")
    spec = field.lattice
    if spec.kind == "gasket":
        return _meyer_gasket(field, alpha, delta, x0, T, seed, max_events)
    small = JumpSampler(field, alpha, rho_max=delta)
    big = JumpSampler(field, alpha, rho_min=delta)
    hold, jump = _streams((seed,))
    trunc_res = _engine(field, small, x0, T, hold, jump, max_events=max_events)
    trunc = _as_path(field, x0, T, (seed, "trunc"), trunc_res)

    big_buf = _Buf(stream(seed, BIG_TAG))
    t_big = 0.0
    hit = None
    while True:
        t_big += -math.log(1.0 - big_buf.next()) / big.rate
        if t_big >= min(T, trunc.horizon):
            break
        prop = big.propose(big_buf, trunc.position_at(t_big))
        if prop is None:
            continue
        if prop is _CENSOR:
            break
        y, rho = prop
        u = big_buf.next()
        x_at = trunc.position_at(t_big)
        w = field.conductance(x_at, y)
        if w > 0 and u * big.envelope_rate(rho) <= w * field.measure.mu(y):
            hit = (t_big, y)
            break
    if hit is None:
        full = PathSample(x0=trunc.x0, times=trunc.times.copy(),
                          vertices=trunc.vertices.copy(), horizon=T,
                          seed_path=(seed, "full"), censored=trunc.censored,
                          proposals=trunc.proposals)
        return trunc, full, None
    t_delta, y_big = hit
    keep = trunc.times < t_delta
    cont = simulate_path(field, ProcessSpec(alpha=alpha), y_big,
                         T - t_delta, mix(seed, CONT_TAG),
                         max_events=max_events)
    dim = spec.coordinate_dim
    times = np.concatenate([trunc.times[keep], [t_delta],
                            cont.times + t_delta])
    verts = np.concatenate([trunc.vertices[keep].reshape(-1, dim),
                            np.asarray([y_big], dtype=np.int64),
                            cont.vertices.reshape(-1, dim)])
    full = PathSample(x0=trunc.x0, times=times, vertices=verts, horizon=T,
                      seed_path=(seed, "full"),
                      censored=trunc.censored or cont.censored,
                      proposals=trunc.proposals + cont.proposals)
    return trunc, full, t_delta


def _meyer_gasket(field, alpha, delta, x0, T, seed, max_events):
    small = JumpSampler(field, alpha, rho_max=delta)
    big = JumpSampler(field, alpha, rho_min=delta)
    hold, jump = _streams((seed,))
    trunc_res = _engine(field, small, x0, T, hold, jump, max_events=max_events)
    trunc = _as_path(field, x0, T, (seed, "trunc"), trunc_res)
    # integrate the position-dependent long-jump hazard along the truncated
    # path; the first arrival of a unit Poisson clock in that time change is
    # the coupling time
    rng = stream(seed, BIG_TAG)
    threshold = -math.log(1.0 - rng.random())
    knots = [0.0] + trunc.times.tolist() + [min(T, trunc.horizon)]
    acc = 0.0
    hit = None
    for i in range(len(knots) - 1):
        x_at = trunc.x0 if i == 0 else tuple(trunc.vertices[i - 1])
        rate_x, cum, targets = big.row(x_at)
        seg = knots[i + 1] - knots[i]
        if rate_x > 0 and acc + rate_x * seg >= threshold:
            t_delta = knots[i] + (threshold - acc) / rate_x
            j = min(bisect_right(cum, rng.random() * rate_x), len(targets) - 1)
            hit = (t_delta, targets[j])
            break
        acc += rate_x * seg
    if hit is None:
        full = PathSample(x0=trunc.x0, times=trunc.times.copy(),
                          vertices=trunc.vertices.copy(), horizon=T,
                          seed_path=(seed, "full"), censored=trunc.censored,
                          proposals=trunc.proposals)
        return trunc, full, None
    t_delta, y_big = hit
    keep = trunc.times < t_delta
    cont = simulate_path(field, ProcessSpec(alpha=alpha), y_big, T - t_delta,
                         mix(seed, CONT_TAG), max_events=max_events)
    dim = field.lattice.coordinate_dim
    times = np.concatenate([trunc.times[keep], [t_delta], cont.times + t_delta])
    verts = np.concatenate([trunc.vertices[keep].reshape(-1, dim),
                            np.asarray([y_big], dtype=np.int64),
                            cont.vertices.reshape(-1, dim)])
    full = PathSample(x0=trunc.x0, times=times, vertices=verts, horizon=T,
                      seed_path=(seed, "full"),
                      censored=trunc.censored or cont.censored,
                      proposals=trunc.proposals + cont.proposals)
    return trunc, full, t_delta
