import math

import mpmath
import numpy as np
import pytest
import scipy.special as sp

from qrkhs.errors import ConfigError, DomainError, PoleError, SingularAtZero, SpecialOverflow
from qrkhs.special import (
    SpecialFnConfig,
    bessel_I,
    bessel_I_scaled,
    bessel_K,
    bessel_K_scaled,
    entire_bessel_series,
    gamma,
    log_gamma,
)


def test_gamma_values():
    assert gamma(1.0) == pytest.approx(1.0, rel=1e-15)
    assert gamma(5.0) == pytest.approx(24.0, rel=1e-14)
    # duplication formula at z = 1/2 gives Gamma(1/2)^2 = pi
    assert gamma(0.5) == pytest.approx(math.sqrt(math.pi), rel=1e-14)


def test_gamma_against_scipy():
    xs = np.concatenate([np.linspace(0.01, 10, 300), np.linspace(10, 170, 300), [-0.5, -2.5, -7.3]])
    for x in xs:
        assert gamma(x) == pytest.approx(sp.gamma(x), rel=1e-13)


def test_gamma_recursion():
    for x in np.linspace(0.1, 160, 500):
        assert gamma(x + 1) == pytest.approx(x * gamma(x), rel=1e-12)


def test_log_gamma_against_scipy():
    for x in np.linspace(0.05, 2000, 400):
        assert log_gamma(x) == pytest.approx(sp.gammaln(x), rel=1e-13, abs=1e-14)


def test_gamma_errors():
    for bad in (0.0, -1.0, -4.0):
        with pytest.raises(PoleError):
            gamma(bad)
    with pytest.raises(SpecialOverflow):
        gamma(172.0)


def test_bessel_I_small():
    assert bessel_I(0, 0) == 1.0
    assert bessel_I(1, 0) == 0.0


def test_bessel_I_against_extended_series():
    with mpmath.workdps(40):
        want = sum(mpmath.mpf(0.5) ** (2 * m) / mpmath.factorial(m) ** 2 for m in range(200))
    assert bessel_I(0, 1.0) == pytest.approx(float(want), rel=1e-15)


@pytest.mark.parametrize("alpha", [-0.5, 0.0, 0.3, 1.0, 2.5, 7.0])
def test_bessel_I_against_mpmath(alpha):
    for x in np.concatenate([np.linspace(0.01, 60, 200), [100.0, 400.0]]):
        want = float(mpmath.besseli(alpha, x) * mpmath.exp(-x))
        assert bessel_I_scaled(alpha, x) == pytest.approx(want, rel=1e-10)
    for x in np.linspace(0.01, 60, 50):
        assert bessel_I(alpha, x) == pytest.approx(float(mpmath.besseli(alpha, x)), rel=1e-10)


def test_bessel_I_errors():
    with pytest.raises(DomainError):
        bessel_I(-1.0, 1.0)
    with pytest.raises(DomainError):
        bessel_I(0.0, -1.0)
    with pytest.raises(SingularAtZero):
        bessel_I(-0.5, 0.0)
    with pytest.raises(SpecialOverflow):
        bessel_I(0.0, 800.0)


def test_entire_series_complex_argument():
    u = np.array([0.3 + 2j, -4.0 + 0.5j, 10j])
    for alpha in (0.0, 0.5, 2.0):
        got = entire_bessel_series(alpha, u)
        want = [complex(mpmath.hyp0f1(alpha + 1, z) / mpmath.gamma(alpha + 1)) for z in u]
        assert np.allclose(got, want, rtol=1e-13)


def test_bessel_K_examples():
    assert bessel_K(0.5, 1.0) == pytest.approx(math.sqrt(math.pi / 2) * math.exp(-1), rel=1e-12)
    assert bessel_K(0.3, 2.0) == pytest.approx(bessel_K(-0.3, 2.0), rel=1e-15)
    asym = math.sqrt(math.pi / 60) * math.exp(-30)
    assert bessel_K(0.0, 30.0) == pytest.approx(asym, rel=1e-2)


@pytest.mark.parametrize("alpha", [0.0, 0.5, 1.0, 2.0, 2.5, 4.0])
def test_bessel_K_against_scipy(alpha):
    x = np.geomspace(1e-3, 60, 200)
    assert np.allclose(bessel_K(alpha, x), sp.kv(alpha, x), rtol=1e-8, atol=0)
    assert np.allclose(bessel_K_scaled(alpha, x), sp.kve(alpha, x), rtol=1e-8, atol=0)


@pytest.mark.parametrize("alpha", [0.0, 0.5, 1.0, 2.5])
def test_wronskian(alpha):
    for x in np.linspace(0.1, 40, 60):
        val = bessel_I_scaled(alpha, x) * bessel_K_scaled(alpha + 1, x)
        val += bessel_I_scaled(alpha + 1, x) * bessel_K_scaled(alpha, x)
        assert val == pytest.approx(1.0 / x, rel=1e-8)


@pytest.mark.parametrize("alpha", [0.5, 1.0, 2.5])
def test_I_recurrence(alpha):
    for x in np.linspace(0.1, 40, 60):
        lhs = bessel_I_scaled(alpha - 1, x) - bessel_I_scaled(alpha + 1, x)
        assert lhs == pytest.approx(2 * alpha / x * bessel_I_scaled(alpha, x), rel=1e-9)


def test_bessel_K_errors():
    with pytest.raises(SingularAtZero):
        bessel_K(0.0, 0.0)
    with pytest.raises(DomainError):
        bessel_K(0.0, -1.0)


def test_config_validation():
    with pytest.raises(ConfigError):
        SpecialFnConfig(series_tol=1e-3)
    with pytest.raises(ConfigError):
        SpecialFnConfig(max_terms=10)
