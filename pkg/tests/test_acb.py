import numpy as np
import pytest

from hybridra.acb import (
    AcbConfig,
    acb_check,
    barring_delay,
    expected_success,
    optimal_acb,
)


def brute_force_success(k, L, trials, rng):
    """Count channels chosen by exactly one of ``k`` uniform selectors."""
    picks = rng.integers(0, L, size=(trials, k))
    counts = np.zeros((trials, L), dtype=int)
    np.add.at(counts, (np.arange(trials)[:, None], picks), 1)
    return (counts == 1).sum(axis=1).mean()


def test_expected_success_trivial():
    assert expected_success(1, 7) == 1.0
    assert expected_success(1, 1) == 1.0
    assert expected_success(0, 54) == 0.0


def test_expected_success_closed_form():
    assert expected_success(10, 54) == pytest.approx(10 * (53 / 54) ** 9)
    # 8.455 is a loose rounding; the product is 8.4516
    assert expected_success(10, 54) == pytest.approx(8.455, abs=5e-3)


@pytest.mark.parametrize("k,L", [(10, 54), (5, 5), (30, 12)])
def test_expected_success_monte_carlo(k, L):
    mc = brute_force_success(k, L, 100_000, np.random.default_rng(k * 100 + L))
    assert abs(mc - expected_success(k, L)) <= 0.01 * expected_success(k, L)


def test_expected_success_rejects_bad_input():
    with pytest.raises(ValueError):
        expected_success(3, 0)
    with pytest.raises(ValueError):
        expected_success(-1, 3)


@pytest.mark.parametrize("n_bar,p", [(0.5, 1.0), (1.0, 1.0), (2, 0.5), (5, 0.2)])
def test_optimal_acb(n_bar, p):
    assert optimal_acb(n_bar) == pytest.approx(p)


def test_acb_check_extremes(rng):
    assert acb_check(1.0, rng, size=10_000).all()
    assert not acb_check(0.0, rng, size=10_000).any()
    assert acb_check(1.0, rng) is True
    assert acb_check(0.0, rng) is False


def test_acb_check_rate():
    rate = acb_check(0.6, np.random.default_rng(5), size=1_000_000).mean()
    assert 0.599 <= rate <= 0.601


def test_acb_check_range(rng):
    with pytest.raises(ValueError):
        acb_check(1.2, rng)


def test_barring_delay(rng):
    assert barring_delay(0, rng) == 0
    assert set(barring_delay(10, rng, size=10_000)) <= {7, 8}
    mean = barring_delay(100, np.random.default_rng(9), size=100_000).mean()
    assert abs(mean - 75) <= 0.3


def test_config_modes():
    cfg = AcbConfig.parse_mode("fixed:0.6")
    assert cfg.factor(np.array([3, 3])) == 0.6
    assert cfg.mode_string() == "fixed:0.6"
    opt = AcbConfig.parse_mode("optimal")
    assert opt.factor(np.array([2, 4])) == pytest.approx(1 / 3)
    assert opt.factor(np.array([], dtype=int)) == 1.0
    with pytest.raises(ValueError):
        AcbConfig.parse_mode("sometimes")
    with pytest.raises(ValueError):
        AcbConfig.parse_mode("fixed:1.5")
