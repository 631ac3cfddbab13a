"""Stable reference laws: exact samplers against closed-form distributions,
the jump-kernel scale constant against its Gamma-function form, and the
inversion tables against external CDF values."""

import math

import numpy as np
import pytest
from scipy import stats

from rcmstable import stable
from rcmstable.stable import Cdf1d, StableLaw, cdf_1d

from oracles import stable_scale_closed_form

# spots of the symmetric 3/2-stable CDF (unit scale), independently tabulated
ALPHA_15_CDF = {0.5: 0.6394042265, 1.0: 0.7563420244,
                2.0: 0.8949601703, 5.0: 0.9793309129}


def test_law_validation():
    StableLaw(2.0)
    for bad in (0.0, -1.0, 2.5):
        with pytest.raises(ValueError):
            StableLaw(bad)
    with pytest.raises(ValueError):
        StableLaw(1.0, d=0)
    with pytest.raises(ValueError):
        StableLaw(1.0, c=0.0)


def test_sample_cauchy_matches_closed_form():
    rng = np.random.default_rng(1)
    xs = stable.sample_1d(StableLaw(1.0), 4000, rng)
    assert stats.kstest(xs, stats.cauchy.cdf).pvalue > 0.01


def test_sample_gaussian_endpoint():
    rng = np.random.default_rng(2)
    law = StableLaw(2.0, c=0.7)
    xs = stable.sample_1d(law, 20000, rng)
    assert np.var(xs) == pytest.approx(2.0 * 0.7, rel=0.05)
    assert stats.kstest(xs, stats.norm(scale=math.sqrt(1.4)).cdf).pvalue > 0.01


def test_sample_1d_against_inversion_table():
    rng = np.random.default_rng(3)
    law = StableLaw(1.5)
    xs = stable.sample_1d(law, 3000, rng)
    table = Cdf1d(law)
    assert stats.kstest(xs, table).pvalue > 0.01


def test_one_sided_half_is_levy():
    # Laplace transform exp(-sqrt(lam)) pins the one-sided 1/2-stable law
    # to the Levy distribution with scale 1/2
    rng = np.random.default_rng(4)
    s = stable.sample_one_sided(0.5, 3000, rng)
    assert np.all(s > 0)
    assert stats.kstest(s, stats.levy(scale=0.5).cdf).pvalue > 0.01


def test_one_sided_laplace_transform():
    rng = np.random.default_rng(5)
    a = 0.7
    s = stable.sample_one_sided(a, 40000, rng)
    for lam in (0.5, 1.0, 2.0):
        vals = np.exp(-lam * s)
        err = 4.0 * vals.std() / math.sqrt(len(vals))
        assert abs(vals.mean() - math.exp(-lam ** a)) < err
    for bad in (0.0, 1.0, 1.3):
        with pytest.raises(ValueError):
            stable.sample_one_sided(bad, 10, rng)


def test_isotropic_characteristic_function():
    rng = np.random.default_rng(6)
    law = StableLaw(1.2, d=2, c=0.7)
    x = stable.sample_isotropic(law, 40000, rng)
    assert x.shape == (40000, 2)
    for xi in ((1.0, 0.0), (0.6, 0.8), (1.0, 1.0)):
        proj = x @ np.asarray(xi)
        vals = np.cos(proj)
        want = math.exp(-0.7 * np.hypot(*xi) ** 1.2)
        err = 4.0 * vals.std() / math.sqrt(len(vals))
        assert abs(vals.mean() - want) < err


def test_isotropic_gaussian_endpoint():
    rng = np.random.default_rng(7)
    x = stable.sample_isotropic(StableLaw(2.0, d=3, c=0.5), 20000, rng)
    assert x.shape == (20000, 3)
    assert np.allclose(x.var(axis=0), 1.0, rtol=0.06)


def test_scale_constant_closed_form():
    assert stable.limit_scale_constant(1, 1.0) == pytest.approx(math.pi,
                                                                rel=1e-9)
    for d, a in ((1, 0.8), (2, 0.8), (2, 1.5), (3, 1.2), (4, 0.6)):
        assert stable.limit_scale_constant(d, a) == pytest.approx(
            stable_scale_closed_form(d, a), rel=1e-8)
    for bad in (0.0, 2.0, 2.4):
        with pytest.raises(ValueError):
            stable.limit_scale_constant(1, bad)
    with pytest.raises(ValueError):
        stable.limit_scale_constant(0, 1.0)


def test_cdf_table_shape():
    table = Cdf1d(StableLaw(1.5))
    xs = np.linspace(-30.0, 30.0, 501)
    F = table(xs)
    assert np.all(np.diff(F) >= 0.0)
    assert table(0.0) == pytest.approx(0.5, abs=1e-12)
    assert np.allclose(F + table(-xs), 1.0, atol=1e-12)
    # table-to-tail stitch stays continuous at the edge
    lo = float(table(table.x_max * 0.999))
    hi = float(table(table.x_max * 1.001))
    assert abs(hi - lo) < 1e-4
    assert table.audit() < 1e-4
    with pytest.raises(ValueError):
        Cdf1d(StableLaw(1.0, d=2))


def test_cdf_external_spots():
    table = Cdf1d(StableLaw(1.5))
    for x, want in ALPHA_15_CDF.items():
        assert float(table(x)) == pytest.approx(want, abs=2e-4)
    assert float(cdf_1d(StableLaw(1.0), 1.0)) == pytest.approx(0.75, abs=1e-4)


def test_cdf_gaussian_branch():
    table = Cdf1d(StableLaw(2.0, c=0.5))
    xs = np.array([-2.0, -0.5, 0.0, 1.0, 3.0])
    assert np.allclose(table(xs), stats.norm.cdf(xs), atol=1e-9)
    assert table.audit() == 0.0


def test_cdf_cache_reuses_tables():
    law = StableLaw(1.3)
    a = cdf_1d(law, 1.0)
    key = (1.3, 1.0)
    assert key in stable._CDF_CACHE
    before = stable._CDF_CACHE[key]
    b = cdf_1d(StableLaw(1.3), 1.0)
    assert stable._CDF_CACHE[key] is before
    assert a == b
