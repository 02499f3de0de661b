import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from risctl.channel import CascadeChannel, sample_cn01
from risctl.ris import (AngleAttenuation, PhaseConfig, achieved, align_phases, angle_attenuation,
                        build_codebook, exhaustive_phases, nearest_codeword, reflect_gain,
                        scan_phases, select_phases)


def brute_force(direct, cascade, cb):
    best, arg = -1.0, None
    for combo in itertools.product(range(cb.size), repeat=len(cascade)):
        v = abs(direct + np.dot(cascade, np.exp(1j * cb.phases[list(combo)])))
        if v > best + 1e-12:
            best, arg = v, combo
    return best, arg


def test_codebook_sets():
    np.testing.assert_allclose(build_codebook(1).phases, [0, math.pi])
    np.testing.assert_allclose(build_codebook(2).phases, [0, math.pi / 2, math.pi, 3 * math.pi / 2])
    assert build_codebook(3).size == 8
    with pytest.raises(ValueError):
        build_codebook(0)
    with pytest.raises(ValueError):
        build_codebook(9)


def test_nearest_codeword_wraps_and_ties_low():
    cb = build_codebook(2)
    assert nearest_codeword([2 * math.pi - 0.1], cb)[0] == 0
    assert nearest_codeword([math.pi / 4], cb)[0] == 0
    assert nearest_codeword([-math.pi / 2], cb)[0] == 3


def test_select_phases_single_element_example():
    cfg = select_phases(1 + 0j, [-1 + 0j], build_codebook(1))
    assert cfg.thetas[0] == pytest.approx(math.pi)
    assert abs(achieved(1 + 0j, [-1 + 0j], cfg)) ** 2 == pytest.approx(4.0)


@pytest.mark.parametrize("exhaustive", [True, False])
def test_select_phases_zero_cascade(exhaustive):
    cfg = select_phases(0.3 - 0.2j, np.zeros(5, complex), build_codebook(2), exhaustive=exhaustive)
    np.testing.assert_array_equal(cfg.thetas, np.zeros(5))


def test_select_phases_rejects_empty():
    with pytest.raises(ValueError):
        select_phases(1, [], build_codebook(2))


def test_exhaustive_matches_itertools():
    rng = np.random.default_rng(3)
    cb = build_codebook(2)
    for _ in range(30):
        n = int(rng.integers(1, 4))
        d = complex(sample_cn01(rng, 1)[0])
        c = sample_cn01(rng, n)
        best, _ = brute_force(d, c, cb)
        assert abs(achieved(d, c, exhaustive_phases(d, c, cb))) == pytest.approx(best, rel=1e-12)


def test_scan_is_exact_on_small_instances():
    rng = np.random.default_rng(4)
    for bits in (1, 2, 3):
        cb = build_codebook(bits)
        for _ in range(40):
            n = int(rng.integers(1, 5 if bits < 3 else 4))
            d = complex(sample_cn01(rng, 1)[0]) * rng.uniform(0, 2)
            c = sample_cn01(rng, n)
            best = abs(achieved(d, c, exhaustive_phases(d, c, cb)))
            assert abs(achieved(d, c, scan_phases(d, c, cb))) == pytest.approx(best, rel=1e-9)


def test_scan_never_worse_than_plain_alignment():
    rng = np.random.default_rng(5)
    cb = build_codebook(2)
    for _ in range(50):
        d = complex(sample_cn01(rng, 1)[0]) * 0.1
        c = sample_cn01(rng, 64)
        assert abs(achieved(d, c, scan_phases(d, c, cb))) >= abs(achieved(d, c, align_phases(d, c, cb))) - 1e-12


@settings(max_examples=150, deadline=None)
@given(st.integers(1, 3), st.integers(1, 40), st.integers(0, 2**31 - 1))
def test_analytic_sandwich(bits, n, seed):
    rng = np.random.default_rng(seed)
    cb = build_codebook(bits)
    d = complex(sample_cn01(rng, 1)[0])
    c = sample_cn01(rng, n)
    r = abs(achieved(d, c, select_phases(d, c, cb)))
    total = np.abs(c).sum()
    assert abs(d) + math.cos(math.pi / cb.size) * total <= r + 1e-9
    assert r <= abs(d) + total + 1e-9


def test_high_resolution_approaches_continuous_bound():
    rng = np.random.default_rng(6)
    d = complex(sample_cn01(rng, 1)[0])
    c = sample_cn01(rng, 200)
    bound = abs(d) + np.abs(c).sum()
    r = abs(achieved(d, c, select_phases(d, c, build_codebook(8))))
    assert r >= math.cos(math.pi / 256) * bound


def test_reflect_gain_examples():
    chan = CascadeChannel(np.ones(2, complex), np.ones(2, complex))
    assert reflect_gain(PhaseConfig(np.zeros(2)), chan, 1.0) == 2 + 0j
    assert reflect_gain(PhaseConfig(np.zeros(2)), chan, 0.25) == pytest.approx(1 + 0j)


def test_reflect_gain_coherent_600():
    rng = np.random.default_rng(0)
    h = np.exp(1j * rng.uniform(0, 2 * math.pi, 600))
    chan = CascadeChannel(h, np.ones(600, complex))
    cfg = PhaseConfig(-np.angle(h))
    assert abs(reflect_gain(cfg, chan)) == pytest.approx(600.0)


def test_reflect_gain_validation():
    chan = CascadeChannel(np.ones(2, complex), np.ones(2, complex))
    with pytest.raises(ValueError):
        reflect_gain(PhaseConfig(np.zeros(3)), chan)
    with pytest.raises(ValueError):
        reflect_gain(PhaseConfig(np.zeros(2)), chan, 0.0)


def test_angle_attenuation_law():
    m = AngleAttenuation()
    assert angle_attenuation(m, 0.0) == 1.0
    assert angle_attenuation(m, m.lambda0) == 1.0
    assert angle_attenuation(m, 2 * m.lambda0) == pytest.approx(0.5)
    lams = np.linspace(0, math.pi, 50)
    vals = [angle_attenuation(m, x) for x in lams]
    assert all(0 < v <= 1 for v in vals)
    assert all(a >= b for a, b in zip(vals, vals[1:]))
    with pytest.raises(ValueError):
        angle_attenuation(m, -0.1)
    with pytest.raises(ValueError):
        AngleAttenuation(lambda0=0)
