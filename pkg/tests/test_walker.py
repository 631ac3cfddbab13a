"""Simulation engine: proposal laws against closed forms, exact exit
statistics on a hand-solved chain, coupling identities, determinism."""

import math

import numpy as np
import pytest
from scipy import special, stats

from rcmstable import walker
from rcmstable.environment import (ConductanceField, ConstantLaw,
                                   FiniteMixtureLaw, FourAtomLaw)
from rcmstable.lattice import full_lattice, gasket
from rcmstable.seeds import mix, stream

from oracles import exit_chain_delta1, truncated_line_rate

LINE_RATE = 2.0 * math.pi ** 2 / 6.0


def line_field(seed=0, law=None):
    return ConductanceField(seed=seed, law=law or ConstantLaw(),
                            lattice=full_lattice(1))


def _buf(seed, tag):
    return walker._Buf(stream(seed, tag))


def test_process_spec_validation():
    with pytest.raises(ValueError):
        walker.ProcessSpec(alpha=2.0)
    with pytest.raises(ValueError):
        walker.ProcessSpec(alpha=1.0, variant="reflected")
    with pytest.raises(ValueError):
        walker.ProcessSpec(alpha=1.0, variant="truncated")
    with pytest.raises(ValueError):
        walker.ProcessSpec(alpha=1.0, variant="localized", x0=(0,))
    with pytest.raises(ValueError):
        walker.ProcessSpec(alpha=1.0, variant="localized", x0=(0,), R=8.0,
                           localized_truncated=True)
    with pytest.raises(ValueError):
        walker.ProcessSpec(alpha=1.0, n=0)
    spec = walker.ProcessSpec(alpha=1.0, variant="truncated", delta=4.0)
    assert spec.rho_max == 4.0
    assert walker.ProcessSpec(alpha=1.0).rho_max is None


def test_path_sample_accessors():
    p = walker.PathSample(x0=(0,), times=np.array([1.0, 3.0]),
                          vertices=np.array([[2], [-1]]), horizon=5.0)
    assert len(p) == 2
    assert p.position_at(0.5) == (0,)
    assert p.position_at(1.0) == (2,)
    assert p.position_at(2.9) == (2,)
    assert p.position_at(4.0) == (-1,)
    assert p.final == (-1,)
    with pytest.raises(ValueError):
        walker.PathSample(x0=(0,), times=np.array([2.0, 2.0]),
                          vertices=np.array([[1], [2]]), horizon=5.0)


def test_sampler_rate_is_total_envelope_mass():
    s = walker.JumpSampler(line_field(), 1.0)
    assert s.rate == pytest.approx(LINE_RATE, rel=1e-10)
    assert s.censor_probability == 0.0
    s4 = walker.JumpSampler(line_field(), 1.0, rho_max=4.0)
    assert s4.rate == pytest.approx(truncated_line_rate(4), rel=1e-12)
    with pytest.raises(ValueError):
        walker.JumpSampler(line_field(), 1.0, rho_min=4.0, rho_max=2.0)
    with pytest.raises(ValueError):
        walker.JumpSampler(line_field(law=FourAtomLaw(0.5, 0.5, 4, 4)), 0.4)


def test_proposal_distribution_short_range():
    s = walker.JumpSampler(line_field(), 1.0, rho_max=4.0)
    buf = _buf(100, 0)
    n = 100_000
    counts = {}
    for _ in range(n):
        (y,), _rho = s.propose(buf, (0,))
        counts[y] = counts.get(y, 0) + 1
    mass = sum(k ** -2.0 for k in range(1, 5))
    expected = [n * abs(k) ** -2.0 / (2.0 * mass)
                for k in (-4, -3, -2, -1, 1, 2, 3, 4)]
    observed = [counts.get(k, 0) for k in (-4, -3, -2, -1, 1, 2, 3, 4)]
    assert stats.chisquare(observed, expected).pvalue > 1e-4


def test_tail_draw_distribution():
    # force the Pareto tail channel with a tiny table cap
    s = walker.JumpSampler(line_field(), 1.0, cap=16)
    buf = _buf(7, 1)
    n = 50_000
    draws = np.array([s._tail_draw(buf) for _ in range(n)])
    assert draws.min() >= 17
    # cells {17} .. {31}, then [32, 1e9), then everything beyond
    z = float(special.zeta(2.0, 17))
    probs = [k ** -2.0 / z for k in range(17, 32)]
    probs.append((float(special.zeta(2.0, 32))
                  - float(special.zeta(2.0, 10 ** 9))) / z)
    probs.append(float(special.zeta(2.0, 10 ** 9)) / z)
    observed = np.histogram(
        draws, bins=list(range(17, 33)) + [10 ** 9, 10 ** 18])[0]
    assert stats.chisquare(observed, np.array(probs) * n).pvalue > 1e-4


def test_total_rate_and_hazard_closed_forms():
    fld = line_field()
    assert walker.total_rate(fld, 1.0, (0,)) == pytest.approx(LINE_RATE,
                                                              rel=1e-9)
    assert walker.big_jump_hazard(fld, 1.0, (0,), 1.0) == pytest.approx(
        LINE_RATE - 2.0, rel=1e-9)
    assert walker.big_jump_hazard(fld, 1.0, (0,), 8.0) == pytest.approx(
        LINE_RATE - truncated_line_rate(8), rel=1e-8)


def test_measure_mean_formula():
    from rcmstable.lattice import VertexMeasure
    assert walker._measure_mean(VertexMeasure()) == 1.0
    c = 2.0
    want = (c - 1.0 / c) / (2.0 * math.log(c))
    got = walker._measure_mean(VertexMeasure(kind="weighted", c_m=c))
    assert got == pytest.approx(want, rel=1e-12)
    # matches the average of mu over uniformly hashed vertices
    m = VertexMeasure(kind="weighted", c_m=c, seed=1)
    xs = np.arange(200_000, dtype=np.int64)[:, None]
    assert float(m.mu_array(xs).mean()) == pytest.approx(want, rel=5e-3)


def test_step_deterministic():
    spec = walker.ProcessSpec(alpha=1.0)
    fld = line_field(seed=8)
    t1, y1 = walker.step(spec, fld, (0,), seed_words=(42,))
    t2, y2 = walker.step(spec, fld, (0,), seed_words=(42,))
    assert (t1, y1) == (t2, y2)
    assert t1 > 0.0 and y1 != (0,)


def test_simulate_path_deterministic_and_increasing():
    spec = walker.ProcessSpec(alpha=1.0)
    fld = line_field(seed=1)
    a = walker.simulate_path(fld, spec, (0,), 20.0, seed=5)
    b = walker.simulate_path(fld, spec, (0,), 20.0, seed=5)
    assert np.array_equal(a.times, b.times)
    assert np.array_equal(a.vertices, b.vertices)
    assert not a.censored
    assert np.all(np.diff(a.times) > 0)
    assert np.all(a.times < 20.0)
    c = walker.simulate_path(fld, spec, (0,), 20.0, seed=6)
    assert not np.array_equal(a.times, c.times)
    with pytest.raises(ValueError):
        walker.simulate_path(fld, spec, (0,), 0.0, seed=5)


def test_event_counts_follow_total_rate():
    # the constant-law walk accepts every proposal, so event counts over
    # [0, T] are Poisson with mean T * rate
    spec = walker.ProcessSpec(alpha=1.0)
    fld = line_field(seed=2)
    T, n = 10.0, 150
    total = sum(len(walker.simulate_path(fld, spec, (0,), T, seed=s))
                for s in range(n))
    mean = n * T * LINE_RATE
    z = (total - mean) / math.sqrt(mean)
    assert abs(z) < 4.0


def test_interarrival_times_are_exponential():
    spec = walker.ProcessSpec(alpha=1.0)
    path = walker.simulate_path(line_field(seed=3), spec, (0,), 1200.0, seed=9)
    gaps = np.diff(np.concatenate([[0.0], path.times]))
    out = stats.kstest(gaps, "expon", args=(0.0, 1.0 / LINE_RATE))
    assert out.pvalue > 1e-3


def test_truncated_walk_keeps_short_jumps():
    spec = walker.ProcessSpec(alpha=1.0, variant="truncated", delta=3.0)
    path = walker.simulate_path(line_field(seed=4), spec, (0,), 300.0, seed=1)
    steps = np.diff(np.concatenate([[0], path.vertices[:, 0]]))
    assert np.all(np.abs(steps) <= 3)
    assert len(path) > 100


def test_exit_time_hand_solved_chain():
    # unit-range truncated walk on the radius-1 ball: E tau = 2, Var = 3,
    # and the exit always lands at distance 2
    e_tau, var_tau, _ = exit_chain_delta1()
    spec = walker.ProcessSpec(alpha=1.0, variant="truncated", delta=1.0)
    fld = line_field(seed=6)
    n = 4000
    res = walker.sample_exit_times(fld, spec, (0,), 1.0, n, seed=77)
    assert not res["censored"].any()
    assert np.all(res["exit_distance"] == 2.0)
    assert abs(res["tau"].mean() - e_tau) <= 4.0 * math.sqrt(var_tau / n)
    again = walker.sample_exit_times(fld, spec, (0,), 1.0, 10, seed=77)
    assert np.array_equal(again["tau"], res["tau"][:10])


def test_exit_time_validation():
    spec = walker.ProcessSpec(alpha=1.0)
    with pytest.raises(ValueError):
        walker.exit_time(line_field(), spec, (0,), 0.5, seed=0)


def test_exit_time_censoring_flag():
    spec = walker.ProcessSpec(alpha=1.0)
    tau, y, cens = walker.exit_time(line_field(seed=1), spec, (0,), 64.0,
                                    seed=3, max_events=2)
    assert cens and math.isnan(tau)


def test_simulate_scaled_mapping():
    spec = walker.ProcessSpec(alpha=1.0, n=4)
    fld = line_field(seed=5)
    scaled = walker.simulate_scaled(fld, spec, (0.5,), 2.0, seed=11)
    base = walker.simulate_path(fld, walker.ProcessSpec(alpha=1.0, n=4), (2,),
                                8.0, seed=11)
    assert scaled.x0 == (0.5,)
    assert np.array_equal(scaled.times, base.times / 4.0)
    assert np.array_equal(scaled.vertices, base.vertices / 4.0)
    assert scaled.horizon == 2.0


def test_sample_marginals_shape_and_determinism():
    spec = walker.ProcessSpec(alpha=1.0, n=2)
    fld = line_field(seed=9)
    a = walker.sample_marginals(fld, spec, (0.0,), 1.0, 25, seed=13)
    b = walker.sample_marginals(fld, spec, (0.0,), 1.0, 25, seed=13)
    assert a.shape == (25, 1)
    assert np.array_equal(a, b)
    assert not np.isnan(a).any()
    assert (a * 2 == np.round(a * 2)).all()   # positions live on Z / 2


def test_meyer_prefix_identity_line():
    fld = line_field(seed=14)
    seen_hit = seen_none = False
    for i in range(40):
        trunc, full, td = walker.meyer_coupled_pair(fld, 1.0, 1.0, (0,), 6.0,
                                                    seed=mix(3, i))
        if td is None:
            seen_none = True
            assert np.array_equal(trunc.times, full.times)
            assert np.array_equal(trunc.vertices, full.vertices)
        else:
            seen_hit = True
            k = int(np.sum(trunc.times < td))
            assert np.array_equal(full.times[:k], trunc.times[:k])
            assert np.array_equal(full.vertices[:k], trunc.vertices[:k])
            assert full.times[k] == td
            # the coupling jump is genuinely long
            prev = trunc.x0 if k == 0 else tuple(trunc.vertices[k - 1])
            assert abs(int(full.vertices[k][0]) - prev[0]) > 1.0
    assert seen_hit   # rate ~ 1.29: virtually certain over 40 pairs by T=6


def test_meyer_short_horizon_rarely_couples():
    fld = line_field(seed=15)
    hits = sum(walker.meyer_coupled_pair(fld, 1.0, 1.0, (0,), 0.01,
                                         seed=mix(5, i))[2] is not None
               for i in range(30))
    assert hits <= 2


def test_meyer_gasket_smoke():
    fld = ConductanceField(seed=2, law=ConstantLaw(), lattice=gasket(2, 3))
    trunc, full, td = walker.meyer_coupled_pair(fld, 1.0, 1.5, (0, 0), 3.0,
                                                seed=21)
    assert trunc.horizon == full.horizon == 3.0
    if td is not None:
        k = int(np.sum(trunc.times < td))
        assert np.array_equal(full.times[:k], trunc.times[:k])
    with pytest.raises(ValueError):
        walker.meyer_coupled_pair(fld, 1.0, 0.5, (0, 0), 1.0, seed=0)


def test_gasket_walk_and_absorbing_state():
    fld = ConductanceField(seed=1, law=ConstantLaw(), lattice=gasket(2, 3))
    spec = walker.ProcessSpec(alpha=1.0)
    path = walker.simulate_path(fld, spec, (0, 0), 2.0, seed=4)
    assert all(fld.lattice.contains(tuple(v)) for v in path.vertices.tolist())
    closed = ConductanceField(seed=1, law=FiniteMixtureLaw([(0.0, 1.0)]),
                              lattice=gasket(2, 3))
    with pytest.raises(walker.AbsorbingStateError):
        walker.simulate_path(closed, spec, (0, 0), 1.0, seed=4)
