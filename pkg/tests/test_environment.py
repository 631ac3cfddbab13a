"""Conductance laws and the hashed field: exact atom tables, symmetry,
scalar/vector agreement, envelope domination."""

import logging
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from rcmstable import environment as env
from rcmstable.lattice import VertexMeasure, full_lattice, gasket

from oracles import (four_atom_moments, four_atom_table, hurwitz_tail_bracket,
                     moment_thresholds)

FOUR = dict(eps=0.1, delta=0.5, p=4.0, q=4.0)


def four_atom():
    return env.FourAtomLaw(**FOUR)


def line_field(seed=0, law=None):
    return env.ConductanceField(seed=seed, law=law or env.ConstantLaw(),
                                lattice=full_lattice(1))


def test_constant_law():
    law = env.ConstantLaw()
    v, p = law.atom_table(np.array([1.0, 5.0]))
    assert np.all(v == 1.0) and np.all(p == 1.0)
    assert law.sample_value(3.0, 0.7) == 1.0
    assert law.zero_probability(2.0) == 0.0
    assert law.envelope_amp == 1.0 and law.envelope_pow == 0.0


def test_four_atom_exact_table_at_unit_distance():
    law = four_atom()
    values, probs = law.atom_table(np.array([1.0]))
    assert values[0].tolist() == [1.0, 1.0, 0.0, 32.0 / 29.0]
    assert probs[0] == pytest.approx(
        [1.0 / 3.0, 1.0 / 3.0, 1.0 / 32.0, 29.0 / 96.0], abs=1e-15)
    assert law.balance_value(1.0) == pytest.approx(32.0 / 29.0, abs=1e-15)
    assert law.zero_probability(7.0) == 2.0 ** -5


@given(st.floats(min_value=1.0, max_value=4096.0))
def test_four_atom_matches_reference_table(ell):
    law = four_atom()
    values, probs = law.atom_table(np.array([ell]))
    ref = four_atom_table(ell, **FOUR)
    assert values[0] == pytest.approx([v for v, _ in ref], rel=1e-12)
    assert probs[0] == pytest.approx([p for _, p in ref], rel=1e-12)
    assert probs[0].sum() == pytest.approx(1.0, abs=1e-14)
    assert float((values[0] * probs[0]).sum()) == pytest.approx(1.0, abs=1e-12)


@given(st.floats(min_value=1.0, max_value=4096.0),
       st.floats(min_value=0.0, max_value=1.0, exclude_max=True))
def test_four_atom_scalar_sampler_matches_table(ell, u):
    law = four_atom()
    values, probs = law.atom_table(np.array([ell]))
    cum = np.cumsum(probs[0])
    idx = min(int(np.searchsorted(cum, u, side="right")), 3)
    # scalar and vector paths may disagree by an ulp in the power evaluation
    assert law.sample_value(ell, u) == pytest.approx(values[0][idx],
                                                     rel=1e-12, abs=1e-12)


@given(st.floats(min_value=1.0, max_value=10000.0))
def test_four_atom_envelope_dominates(ell):
    law = four_atom()
    values, _ = law.atom_table(np.array([ell]))
    assert float(values.max()) <= law.envelope_amp * ell ** law.envelope_pow + 1e-12
    assert law.envelope_pow == FOUR["eps"]


def test_four_atom_validation():
    with pytest.raises(ValueError):
        env.FourAtomLaw(eps=0.0, delta=0.5, p=4, q=4)
    with pytest.raises(ValueError):
        env.FourAtomLaw(eps=0.1, delta=-1.0, p=4, q=4)
    with pytest.raises(ValueError):
        env.FourAtomLaw(eps=0.1, delta=0.5, p=0.5, q=4)


def test_four_atom_balance_bounds():
    lo, hi = four_atom().balance_bounds()
    assert lo <= 1.0 / (1.0 - 2.0 ** -5) <= hi
    assert hi == pytest.approx(32.0 / 29.0)


def test_mixture_law():
    law = env.FiniteMixtureLaw([(0.5, 0.25), (2.0, 0.75)])
    v, p = law.atom_table(np.array([1.0, 9.0]))
    assert np.all(v == [0.5, 2.0]) and np.all(p == [0.25, 0.75])
    assert law.sample_value(3.0, 0.1) == 0.5
    assert law.sample_value(3.0, 0.9) == 2.0
    assert law.zero_probability(1.0) == 0.0
    assert law.envelope_amp == 2.0


def test_mixture_validation():
    with pytest.raises(ValueError):
        env.FiniteMixtureLaw([])
    with pytest.raises(ValueError):
        env.FiniteMixtureLaw([(1.0, 0.6), (2.0, 0.6)])
    with pytest.raises(ValueError):
        # distance-dependent entries need an explicit bound
        env.FiniteMixtureLaw([(lambda ell: 1.0, 1.0)])
    with pytest.raises(ValueError):
        env.FiniteMixtureLaw([(lambda ell: ell, 1.0)], envelope_bound=2.0)


def test_mixture_degeneracy_warning(caplog):
    with caplog.at_level(logging.WARNING):
        env.FiniteMixtureLaw([(0.0, 0.5), (2.0, 0.5)])
    assert any("closed-edge" in r.message for r in caplog.records)


@given(st.tuples(st.integers(-20, 20), st.integers(-20, 20)),
       st.tuples(st.integers(-20, 20), st.integers(-20, 20)))
def test_field_symmetric_deterministic(x, y):
    fld = env.ConductanceField(seed=9, law=four_atom(), lattice=full_lattice(2))
    assert fld.conductance(x, y) == fld.conductance(y, x)
    assert fld.conductance(x, x) == 0.0
    assert fld.conductance(x, y) == fld.conductance(x, y)


def test_field_seed_dependence():
    a = line_field(seed=1, law=four_atom())
    b = line_field(seed=2, law=four_atom())
    va = [a.conductance((0,), (k,)) for k in range(1, 40)]
    vb = [b.conductance((0,), (k,)) for k in range(1, 40)]
    assert va != vb


def test_conductance_row_matches_scalar():
    fld = env.ConductanceField(seed=4, law=four_atom(), lattice=full_lattice(2))
    coords = np.array([[i, j] for i in range(-3, 4) for j in range(-3, 4)],
                      dtype=np.int64)
    row = fld.conductance_row((1, -2), coords)
    for c, w in zip(map(tuple, coords.tolist()), row):
        assert w == fld.conductance((1, -2), c)


def test_edge_uniform_rows_matches_scalar():
    fld = line_field(seed=17)
    coords = np.array([[k] for k in range(-5, 6) if k != 2], dtype=np.int64)
    u = fld.edge_uniform_rows((2,), coords)
    for c, v in zip(coords[:, 0].tolist(), u):
        assert v == fld.edge_uniform((2,), (c,))
        assert 0.0 <= v < 1.0


def test_localized_field_switches_outside():
    base = env.ConductanceField(seed=3, law=four_atom(), lattice=full_lattice(1))
    loc = env.LocalizedField(base, (0,), 4.0)
    # pair fully outside the hat: constant one
    assert loc.conductance((10,), (12,)) == 1.0
    # pair touching the hat keeps the base value
    assert loc.conductance((2,), (30,)) == base.conductance((2,), (30,))
    assert loc.conductance((5,), (5,)) == 0.0
    coords = np.array([[k] for k in range(-40, 41)], dtype=np.int64)
    for x in ((0,), (6,), (25,)):
        row = loc.conductance_row(x, coords)
        for c, w in zip(coords[:, 0].tolist(), row):
            assert w == pytest.approx(loc.conductance(x, (c,)),
                                      rel=1e-12, abs=1e-12)


def test_localized_field_needs_dominating_envelope():
    small = env.FiniteMixtureLaw([(0.5, 1.0)])
    base = env.ConductanceField(seed=0, law=small, lattice=full_lattice(1))
    with pytest.raises(ValueError):
        env.LocalizedField(base, (0,), 4.0)


def test_sample_edge_values_matches_field():
    fld = line_field(seed=21, law=four_atom())
    vals = env.sample_edge_values(fld, 2, 50)
    for j in range(50):
        assert vals[j] == fld.conductance((j,), (j + 2,))
    shifted = env.sample_edge_values(fld, 2, 10, start=40)
    assert np.array_equal(shifted, vals[40:])


def test_sample_edge_values_frequencies():
    fld = line_field(seed=5, law=four_atom())
    vals = env.sample_edge_values(fld, 1, 200_000)
    n = len(vals)
    for value, prob in ((0.0, 1.0 / 32.0), (1.0, 2.0 / 3.0),
                        (32.0 / 29.0, 29.0 / 96.0)):
        freq = float(np.mean(np.isclose(vals, value)))
        band = 4.0 * math.sqrt(prob * (1 - prob) / n)
        assert abs(freq - prob) <= band


def test_empirical_moment():
    fld = line_field(seed=2)
    assert env.empirical_moment(fld, 1.0, 100) == 1.0
    assert env.empirical_moment(fld, -2.0, 100) == 1.0
    with pytest.raises(ValueError):
        env.empirical_moment(fld, 0.0, 100)
    mean, var, _ = four_atom_moments(1.0, **FOUR)
    f4 = line_field(seed=2, law=four_atom())
    m = env.empirical_moment(f4, 1.0, 40_000)
    assert abs(m - mean) <= 4.0 * math.sqrt(var / 40_000)


def test_empirical_moment_all_closed_raises():
    law = env.FiniteMixtureLaw([(0.0, 1.0)])
    fld = line_field(seed=0, law=law)
    with pytest.raises(ValueError):
        env.empirical_moment(fld, -1.0, 50)


def test_validate_moment_exponents_worked_example():
    gate = env.validate_moment_exponents(5, 1.0, p=4.0, q=2.0)
    want_p, want_q, want_dim = moment_thresholds(5, 1.0)
    assert gate.p_threshold == want_p == 3.0
    assert gate.q_threshold == want_q == 1.4
    assert gate.dimension_threshold == want_dim == 2.0
    assert gate.dimension_ok and gate.admissible
    # thresholds are strict
    assert not env.validate_moment_exponents(5, 1.0, p=3.0, q=2.0).admissible
    assert not env.validate_moment_exponents(5, 1.0, p=4.0, q=1.4).admissible


def test_validate_moment_exponents_low_alpha_rule():
    gate = env.validate_moment_exponents(3, 0.8, p=6.0, q=2.0,
                                         low_alpha_rule=True)
    p_thr, q_thr, dim_thr = moment_thresholds(3, 0.8, relaxed=True)
    assert gate.p_threshold == pytest.approx(p_thr)
    assert gate.dimension_threshold == pytest.approx(dim_thr)
    assert gate.low_alpha_rule
    with pytest.raises(ValueError):
        env.validate_moment_exponents(3, 1.2, p=6.0, q=2.0, low_alpha_rule=True)
    with pytest.raises(ValueError):
        env.validate_moment_exponents(3, 2.5, p=6.0, q=2.0)
    with pytest.raises(ValueError):
        env.validate_moment_exponents(0, 1.0, p=6.0, q=2.0)


def test_envelope_tail_mass_line_bracket():
    fld = line_field()
    got = env.envelope_tail_mass(fld, 16.0, 1.0)
    lo, hi = hurwitz_tail_bracket(2.0, 16)
    assert 2.0 * lo <= got <= 2.0 * hi * 1.001 + 1e-9
    with pytest.raises(ValueError):
        env.envelope_tail_mass(fld, 0.5, 1.0)


def test_envelope_tail_mass_rejects_nonsummable():
    law = env.FourAtomLaw(eps=0.5, delta=0.5, p=4, q=4)
    fld = line_field(law=law)
    with pytest.raises(ValueError):
        env.envelope_tail_mass(fld, 8.0, 0.4)


def test_envelope_tail_mass_gasket_exact():
    fld = env.ConductanceField(seed=0, law=env.ConstantLaw(),
                               lattice=gasket(2, 3))
    # finite graph: direct sum over generated vertices beyond the cutoff
    got = env.envelope_tail_mass(fld, 2.0, 1.0)
    assert got > 0.0 and math.isfinite(got)


def test_weighted_measure_tail_uses_upper_bound():
    m = VertexMeasure(kind="weighted", c_m=2.0, seed=0)
    fld = env.ConductanceField(seed=0, law=env.ConstantLaw(),
                               lattice=full_lattice(1), measure=m)
    plain = env.envelope_tail_mass(line_field(), 8.0, 1.0)
    assert env.envelope_tail_mass(fld, 8.0, 1.0) == pytest.approx(2.0 * plain)
