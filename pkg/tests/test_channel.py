import math

import numpy as np
import pytest
from scipy import stats

from risctl.channel import (LINK_DIRECT, LINK_USER_RIS, SPEED_OF_LIGHT, PathLossParams,
                            link_rng, pathloss_direct, pathloss_reflected, sample_cn01,
                            unit_pathloss)

# (c / (4 pi f))^2 with c = 2.998e8, f = 2.4e9, evaluated independently
C_24GHZ = 9.8815e-5


def test_unit_pathloss_cancels():
    assert unit_pathloss(PathLossParams(f=SPEED_OF_LIGHT / (4 * math.pi))) == pytest.approx(1.0)


def test_unit_pathloss_24ghz():
    lam = SPEED_OF_LIGHT / 2.4e9
    oracle = (lam / (4 * math.pi)) ** 2
    assert unit_pathloss(PathLossParams()) == pytest.approx(oracle, rel=1e-12)
    assert unit_pathloss(PathLossParams()) == pytest.approx(C_24GHZ, rel=1e-3)


def test_unit_pathloss_gain_scaling():
    base = unit_pathloss(PathLossParams())
    assert unit_pathloss(PathLossParams(gt=2, gr=3)) == pytest.approx(6 * base)


def test_pathloss_params_validation():
    with pytest.raises(ValueError):
        PathLossParams(f=0)
    with pytest.raises(ValueError):
        PathLossParams(alpha=1.5)


@pytest.mark.parametrize("C, d, a, expected", [(1, 1, 3.3, 1), (1, 10, 2, 0.01), (1e-4, 10, 3, 1e-7)])
def test_pathloss_direct_examples(C, d, a, expected):
    assert pathloss_direct(C, d, a) == pytest.approx(expected, rel=1e-12)


def test_pathloss_direct_domain():
    with pytest.raises(ValueError):
        pathloss_direct(1, 0, 2)
    with pytest.raises(ValueError):
        pathloss_direct(1, np.array([1.0, -1.0]), 2)


def test_pathloss_reflected_examples():
    assert pathloss_reflected(1, 1, 1, 2) == 1
    assert pathloss_reflected(1, 2, 5, 2) == pytest.approx(0.01)
    with pytest.raises(ValueError):
        pathloss_reflected(1, 0, 5, 2)


def test_pathloss_reflected_product_identity():
    rng = np.random.default_rng(1)
    di, dui = rng.uniform(1, 500, 1000), rng.uniform(1, 500, 1000)
    a = rng.uniform(2, 4, 1000)
    for x, y, al in zip(di, dui, a):
        assert pathloss_reflected(1e-4, x, y, al) == pytest.approx(
            pathloss_direct(1e-4, x, al) * pathloss_direct(1, y, al), rel=1e-12)


def test_sample_cn01_deterministic_and_prefix():
    a = sample_cn01(np.random.default_rng(7), 50)
    b = sample_cn01(np.random.default_rng(7), 50)
    np.testing.assert_array_equal(a, b)
    np.testing.assert_array_equal(sample_cn01(np.random.default_rng(7), 20), a[:20])


def test_sample_cn01_statistics():
    z = sample_cn01(np.random.default_rng(0), 100_000)
    assert abs(z.mean()) < 0.01
    assert np.mean(np.abs(z) ** 2) == pytest.approx(1.0, abs=0.01)
    assert np.var(z.real) == pytest.approx(0.5, abs=0.01)
    assert abs(np.mean(z.real * z.imag)) < 0.01
    # |z|^2 ~ Exp(1) for CN(0,1)
    assert stats.kstest(np.abs(z[:5000]) ** 2, "expon").pvalue > 0.01


def test_sample_cn01_rejects_empty():
    with pytest.raises(ValueError):
        sample_cn01(np.random.default_rng(0), 0)


def test_link_rng_independent_streams():
    a = sample_cn01(link_rng(0, 3, LINK_DIRECT, 1), 4)
    np.testing.assert_array_equal(a, sample_cn01(link_rng(0, 3, LINK_DIRECT, 1), 4))
    assert not np.array_equal(a, sample_cn01(link_rng(0, 3, LINK_DIRECT, 2), 4))
    assert not np.array_equal(a, sample_cn01(link_rng(0, 4, LINK_DIRECT, 1), 4))
    assert not np.array_equal(a, sample_cn01(link_rng(0, 3, LINK_USER_RIS, 1), 4))
