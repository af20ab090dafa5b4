import itertools

import numpy as np
import pytest
from scipy import integrate

from ncrelay import NetworkCode, SnrPoint, Topology
from ncrelay.channel import (
    ChannelRealization,
    avg_link_flip_prob_exact,
    avg_link_flip_prob_high_snr,
    avg_relay_crossover_high_snr,
    crossover_vector,
    end_to_end_crossover,
    link_flip_prob,
    relay_nc_crossover,
    relay_nc_crossover_recursive,
    sample_realization,
)


def odd_flip_probability(p):
    # brute force over every flip pattern of independent BSCs
    total = 0.0
    for f in itertools.product((0, 1), repeat=len(p)):
        pr = 1.0
        for fi, pi in zip(f, p):
            pr *= pi if fi else 1.0 - pi
        if sum(f) % 2:
            total += pr
    return total


def test_snr_point():
    s = SnrPoint.from_db(20)
    assert s.gamma == pytest.approx(100.0)
    assert s.db == pytest.approx(20.0)
    assert s.n0 == pytest.approx(0.01)
    with pytest.raises(ValueError):
        SnrPoint(0.0)


def test_fading_variance(rng):
    top = Topology.iid(1, 1, 1.0)
    x = np.array([abs(sample_realization(top, rng).h_sd[0]) ** 2 for _ in range(20000)])
    assert x.mean() == pytest.approx(1.0, rel=0.05)
    # vectorized check with a large sample
    z = rng.standard_normal((10**6, 2))
    assert np.mean(0.5 * (z ** 2).sum(axis=1)) == pytest.approx(1.0, rel=0.01)


def test_path_loss_variance():
    top = Topology.from_positions([[0, 0]], [[1, 0]], [2, 0], alpha=3)
    assert top.sigma_sq_sd[0] == pytest.approx(0.125, rel=1e-12)
    assert top.sigma_sq_sr[0, 0] == pytest.approx(1.0)
    with pytest.raises(ValueError):
        Topology.from_positions([[0, 0]], [[0, 0]], [2, 0], alpha=3)


def test_ideal_sr_realization_has_no_sr_gains(rng):
    real = sample_realization(Topology.iid(2, 2, ideal_sr=True), rng)
    assert real.h_sr is None and real.ideal_sr


def test_topology_validation():
    with pytest.raises(ValueError):
        Topology(np.ones(2), np.ones((2, 3)), np.ones(2))
    with pytest.raises(ValueError):
        Topology(np.ones(2), np.ones((2, 2)), np.array([1.0, -1.0]))


def test_link_flip_prob_examples():
    assert link_flip_prob(0.0, 5.0) == pytest.approx(0.5)
    assert link_flip_prob(10.0, 1e4) == pytest.approx(0.0, abs=1e-300)
    # Gaussian tail beyond sqrt(2), integrated numerically
    tail, _ = integrate.quad(lambda x: np.exp(-x * x / 2) / np.sqrt(2 * np.pi), np.sqrt(2), np.inf)
    assert link_flip_prob(1.0, 1.0) == pytest.approx(tail, rel=1e-10)
    assert link_flip_prob(1.0, 1.0) == pytest.approx(0.0786496, abs=1e-7)


def test_relay_crossover_examples():
    assert relay_nc_crossover([0.1, 0.2], [1, 1]) == pytest.approx(0.26, abs=1e-15)
    assert relay_nc_crossover([0.1, 0.2], [1, 0]) == pytest.approx(0.1, abs=1e-15)
    assert relay_nc_crossover([0.1, 0.2], [0, 0]) == 0.0
    assert relay_nc_crossover([0.5, 0.3, 0.1], [1, 1, 1]) == pytest.approx(0.5, abs=1e-15)


def test_end_to_end_examples():
    assert end_to_end_crossover(0.1, 0.2) == pytest.approx(0.26)
    assert end_to_end_crossover(0.0, 0.3) == 0.3
    assert end_to_end_crossover(0.5, 0.3) == pytest.approx(0.5)


def test_relay_crossover_three_forms_agree(rng):
    for _ in range(300):
        ns = int(rng.integers(1, 9))
        p = rng.uniform(0, 0.5, ns)
        g = rng.integers(0, 2, ns)
        brute = odd_flip_probability([pi for pi, gi in zip(p, g) if gi])
        assert relay_nc_crossover(p, g) == pytest.approx(brute, abs=1e-12)
        assert relay_nc_crossover_recursive(p, g) == pytest.approx(brute, abs=1e-12)
        assert 0.0 <= relay_nc_crossover(p, g) <= 0.5


def test_relay_crossover_monotone(rng):
    for _ in range(200):
        ns = int(rng.integers(1, 6))
        p = rng.uniform(0, 0.5, ns)
        g = np.ones(ns, dtype=int)
        k = int(rng.integers(ns))
        p2 = p.copy()
        p2[k] = min(0.5, p[k] + rng.uniform(0, 0.1))
        assert relay_nc_crossover(p2, g) >= relay_nc_crossover(p, g) - 1e-15


def test_crossover_vector_fig1_unit_gains():
    code = NetworkCode([[1, 1], [1, 1]])
    real = ChannelRealization(np.ones(2), np.ones((2, 2)), np.ones(2))
    P = crossover_vector(real, code, 1.0)
    p = link_flip_prob(1.0, 1.0)
    assert P[:2] == pytest.approx([p, p])
    # relay position = odd number of flips over two S->R hops and one R->D hop
    assert P[2:] == pytest.approx([odd_flip_probability([p, p, p])] * 2, rel=1e-12)
    assert P[2] == pytest.approx(0.2007803, abs=1e-7)


def test_crossover_vector_ideal_sr_uses_last_hop_only():
    code = NetworkCode([[1, 1]])
    real = ChannelRealization(np.ones(2), None, np.array([0.5]))
    P = crossover_vector(real, code, 2.0)
    assert P[2] == pytest.approx(float(link_flip_prob(0.5, 2.0)))


def test_crossover_vector_without_relays():
    code = NetworkCode(np.zeros((0, 1), dtype=np.uint8))
    real = ChannelRealization(np.array([1.0]), np.zeros((1, 0)), np.zeros(0))
    assert crossover_vector(real, code, 1.0).tolist() == pytest.approx([0.0786496], abs=1e-7)


def test_average_link_probability():
    assert avg_link_flip_prob_exact(1.0, 1.0) == pytest.approx(0.146447, abs=1e-6)
    # numeric average of Q(sqrt(2 gamma x)) over x ~ Exp(1)
    num, _ = integrate.quad(lambda x: np.exp(-x) * float(link_flip_prob(np.sqrt(x), 100.0)), 0, np.inf)
    assert avg_link_flip_prob_exact(1.0, 100.0) == pytest.approx(num, rel=1e-8)
    assert avg_link_flip_prob_exact(1.0, 100.0) == pytest.approx(0.0024814, abs=1e-7)
    # the first-order form is 0.75% high at gamma sigma^2 = 100 and converges as 1/gamma
    assert avg_link_flip_prob_high_snr(1.0, 100.0) / avg_link_flip_prob_exact(1.0, 100.0) == pytest.approx(1.0075, abs=1e-3)
    assert avg_link_flip_prob_high_snr(1.0, 1e4) == pytest.approx(avg_link_flip_prob_exact(1.0, 1e4), rel=1e-4)


def test_average_link_probability_by_sampling(rng):
    x = rng.exponential(1.0, 10**6)
    mc = link_flip_prob(np.sqrt(x), 1.0).mean()
    assert mc == pytest.approx(avg_link_flip_prob_exact(1.0, 1.0), rel=5e-3)


def test_average_relay_crossover_high_snr():
    top = Topology.iid(2, 2)
    assert avg_relay_crossover_high_snr(top, [1, 1], 0, 100.0) == pytest.approx(0.0075)
    # independent hops: the average of an odd-flip probability is the odd-flip
    # probability of the averaged hops, which is exact
    gamma = 1e4
    pbar = float(avg_link_flip_prob_exact(1.0, gamma))
    exact = odd_flip_probability([pbar, pbar, pbar])
    assert avg_relay_crossover_high_snr(top, [1, 1], 0, gamma) == pytest.approx(exact, rel=0.05)
    assert avg_relay_crossover_high_snr(top.with_ideal_sr(), [1, 1], 0, gamma) == pytest.approx(pbar, rel=0.05)
