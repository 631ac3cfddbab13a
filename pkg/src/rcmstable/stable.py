"""Reference symmetric stable laws for scaling-limit comparisons.

A law here is the marginal at time one of the rotationally invariant stable
process with characteristic function exp(-c |xi|^alpha).  Samplers are
exact trigonometric constructions, the scale constant c(d, alpha) for the
jump kernel |z|^(-d-alpha) comes from a reduced one-dimensional quadrature,
and one-dimensional CDFs invert the characteristic function with a monotone
interpolation table plus the power tail beyond it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate, interpolate


@dataclass(frozen=True)
class StableLaw:
    """Isotropic stable law with characteristic function exp(-c |xi|^alpha)."""

    alpha: float
    d: int = 1
    c: float = 1.0

    def __post_init__(self):
        if not 0.0 < self.alpha <= 2.0:
            raise ValueError("alpha outside (0, 2]")
        if self.d < 1:
            raise ValueError("dimension must be >= 1")
        if self.c <= 0:
            raise ValueError("scale must be positive")


def sample_1d(law: StableLaw, size: int, rng) -> np.ndarray:
    """Exact draws of the symmetric alpha-stable law in one dimension.

    Uses the trigonometric (polar) construction; alpha = 2 degenerates to a
    centered normal with variance 2c.
    """
    a, c = law.alpha, law.c
    if a == 2.0:
        return rng.normal(0.0, math.sqrt(2.0 * c), size)
    scale = c ** (1.0 / a)
    u = rng.uniform(-math.pi / 2.0, math.pi / 2.0, size)
    if a == 1.0:
        return scale * np.tan(u)
    e = rng.standard_exponential(size)
    x = (np.sin(a * u) / np.cos(u) ** (1.0 / a)
         * (np.cos((1.0 - a) * u) / e) ** ((1.0 - a) / a))
    return scale * x


def sample_one_sided(alpha: float, size: int, rng) -> np.ndarray:
    """Positive stable draws with Laplace transform exp(-lambda^alpha), alpha < 1."""
    if not 0.0 < alpha < 1.0:
        raise ValueError("one-sided index must lie in (0, 1)")
    u = rng.uniform(0.0, math.pi, size)
    e = rng.standard_exponential(size)
    a = alpha
    big_a = (np.sin(a * u) ** a * np.sin((1.0 - a) * u) ** (1.0 - a)
             / np.sin(u)) ** (1.0 / (1.0 - a))
    return (big_a / e) ** ((1.0 - a) / a)


def sample_isotropic(law: StableLaw, size: int, rng) -> np.ndarray:
    """Rotationally invariant stable vectors, shape (size, d).

    Subordinated Gaussian: X = sqrt(2 S) Z with S positive (alpha/2)-stable
    scaled so the characteristic function is exp(-c |xi|^alpha).
    """
    a, d, c = law.alpha, law.d, law.c
    if a == 2.0:
        return rng.normal(0.0, math.sqrt(2.0 * c), (size, d))
    s = c ** (2.0 / a) * sample_one_sided(a / 2.0, size, rng)
    z = rng.normal(0.0, 1.0, (size, d))
    return np.sqrt(2.0 * s)[:, None] * z


def _cos_integral_1d(alpha: float) -> float:
    """integral over (0, inf) of (1 - cos t) t^(-1-alpha) dt by quadrature."""
    head, _ = integrate.quad(lambda t: (1.0 - np.cos(t)) * t ** (-1.0 - alpha),
                             0.0, 1.0)
    plain = 1.0 / alpha   # integral of t^(-1-alpha) over (1, inf)
    osc, _ = integrate.quad(lambda t: t ** (-1.0 - alpha), 1.0, np.inf,
                            weight="cos", wvar=1.0)
    return head + plain - osc


def limit_scale_constant(d: int, alpha: float) -> float:
    """c(d, alpha) with psi(xi) = c |xi|^alpha for the kernel |z|^(-d-alpha).

    The orthogonal directions integrate out in closed form, leaving the
    one-dimensional cosine integral for adaptive quadrature.
    """
    if not 0.0 < alpha < 2.0:
        raise ValueError("alpha outside (0, 2)")
    if d < 1:
        raise ValueError("dimension must be >= 1")
    base = 2.0 * _cos_integral_1d(alpha)
    if d == 1:
        return base
    factor = (math.pi ** ((d - 1) / 2.0) * math.gamma((alpha + 1.0) / 2.0)
              / math.gamma((d + alpha) / 2.0))
    return factor * base


def _gil_pelaez(law: StableLaw, x: float) -> float:
    a, c = law.alpha, law.c

    def integrand(xi):
        return math.sin(x * xi) * math.exp(-c * xi ** a) / xi

    val, _ = integrate.quad(integrand, 0.0, np.inf, limit=400)
    return 0.5 + val / math.pi


class Cdf1d:
    """Monotone CDF of a one-dimensional stable law, table plus power tail.

    Inside [-x_max, x_max] values interpolate a characteristic-function
    inversion table; outside, the one-term tail expansion
    P(X > x) ~ c sin(pi alpha / 2) Gamma(alpha) / pi x^-alpha takes over
    (exact Gaussian tail at alpha = 2).  audit() reports the worst error
    against direct inversion on off-grid points.
    """

    def __init__(self, law: StableLaw, x_max: float | None = None,
                 n: int = 257):
        if law.d != 1:
            raise ValueError("one-dimensional laws only")
        self.law = law
        spread = law.c ** (1.0 / law.alpha)
        if x_max is None:
            x_max = 40.0 * max(spread, 1.0)
        self.x_max = float(x_max)
        grid = np.concatenate([
            np.linspace(0.0, 4.0 * spread, n // 2 + 1),
            np.geomspace(4.0 * spread, self.x_max, n - n // 2)[1:]])
        if law.alpha == 2.0:
            from scipy.stats import norm
            vals = norm.cdf(grid, scale=math.sqrt(2.0 * law.c))
        else:
            vals = np.array([_gil_pelaez(law, float(g)) for g in grid])
        vals = np.clip(np.maximum.accumulate(vals), 0.5, 1.0)
        # stitch the table to the tail law at the edge
        self.tail_amp = (law.c * math.sin(math.pi * law.alpha / 2.0)
                         * math.gamma(law.alpha) / math.pi
                         if law.alpha < 2.0 else 0.0)
        self.grid = grid
        self.vals = vals
        self._interp = interpolate.PchipInterpolator(grid, vals,
                                                     extrapolate=False)

    def _tail(self, x: np.ndarray) -> np.ndarray:
        if self.law.alpha == 2.0:
            from scipy.stats import norm
            return norm.sf(x, scale=math.sqrt(2.0 * self.law.c))
        return self.tail_amp * x ** -self.law.alpha

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        ax = np.abs(x)
        upper = np.where(ax <= self.x_max,
                         self._interp(np.clip(ax, 0.0, self.x_max)),
                         1.0 - self._tail(np.maximum(ax, self.x_max)))
        upper = np.clip(upper, 0.5, 1.0)
        out = np.where(x >= 0, upper, 1.0 - upper)
        return out if out.shape else float(out)

    def audit(self, n_points: int = 7) -> float:
        """Worst absolute distance to direct inversion at off-grid points."""
        if self.law.alpha == 2.0:
            return 0.0
        xs = np.geomspace(self.grid[1] * 1.7, self.x_max * 0.9, n_points)
        errs = [abs(float(self(x)) - _gil_pelaez(self.law, float(x)))
                for x in xs]
        return float(max(errs))


_CDF_CACHE: dict = {}


def cdf_1d(law: StableLaw, x):
    """Table-backed CDF evaluation; tables are cached per law."""
    key = (law.alpha, law.c)
    table = _CDF_CACHE.get(key)
    if table is None:
        table = Cdf1d(law)
        _CDF_CACHE[key] = table
    return table(x)
