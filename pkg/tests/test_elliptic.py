import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rmlax import _theta_py, elliptic as ell

TAUS = [1j, 0.8j, 0.3 + 0.9j]


def brute_theta(z, tau, kmax=12):
    total = 0j
    for k in range(-kmax, kmax + 1):
        h = k + 0.5
        total += cmath.exp(1j * math.pi * tau * h * h + 2j * math.pi * (z + 0.5) * h)
    return total


def small_complex(r=0.45):
    return st.complex_numbers(max_magnitude=r, allow_nan=False, allow_infinity=False)


@pytest.mark.parametrize("tau", TAUS)
def test_theta_matches_direct_series(tau):
    for z in (0.25, 0.1 + 0.2j, -0.37 + 0.05j):
        assert abs(ell.theta(z, tau) - brute_theta(z, tau)) < 1e-14


@pytest.mark.parametrize("tau", TAUS)
def test_theta_quasi_periodicity(tau):
    z = 0.21 - 0.13j
    assert abs(ell.theta(z + 1, tau) + ell.theta(z, tau)) < 1e-13
    lhs = ell.theta(z + tau, tau)
    rhs = -cmath.exp(-1j * math.pi * tau - 2j * math.pi * z) * ell.theta(z, tau)
    assert abs(lhs - rhs) < 1e-12 * max(1, abs(rhs))


@settings(max_examples=40, deadline=None)
@given(z=small_complex())
def test_parity(z):
    if abs(z) < 0.05:
        return
    tau = 0.3 + 0.9j
    assert abs(ell.theta(-z, tau) + ell.theta(z, tau)) < 1e-14
    assert abs(ell.eisenstein_E1(-z, tau) + ell.eisenstein_E1(z, tau)) < 1e-10 * abs(ell.eisenstein_E1(z, tau))
    assert abs(ell.wp(-z, tau) - ell.wp(z, tau)) < 1e-10 * abs(ell.wp(z, tau))


@pytest.mark.parametrize("tau", TAUS)
def test_E2_is_minus_derivative_of_E1(tau):
    z, h = 0.23 + 0.11j, 1e-3
    e1 = lambda x: ell.eisenstein_E1(x, tau)
    fd = (-e1(z + 2 * h) + 8 * e1(z + h) - 8 * e1(z - h) + e1(z - 2 * h)) / (12 * h)
    assert abs(-fd - ell.eisenstein_E2(z, tau)) < 1e-8 * abs(ell.eisenstein_E2(z, tau))


@pytest.mark.parametrize("tau", TAUS)
def test_wp_is_E2_plus_constant(tau):
    z = 0.31 - 0.2j
    assert abs(ell.wp(z, tau) - ell.eisenstein_E2(z, tau) - ell.wp_constant(tau)) < 1e-12


@settings(max_examples=40, deadline=None)
@given(z=small_complex(), q=small_complex())
def test_phi_symmetry(z, q):
    fam = ell.EllipticFamily(0.8j)
    if min(abs(z), abs(q), abs(z + q)) < 0.05:
        return
    # phi(z, q) = phi(q, z) and phi(-z, -q) = -phi(z, q)
    v = fam.phi(z, q)
    assert abs(fam.phi(q, z) - v) < 1e-11 * abs(v)
    assert abs(fam.phi(-z, -q) + v) < 1e-11 * abs(v)


def test_rational_and_trig_phi():
    assert ell.RationalFamily().phi(0.3, 0.5) == pytest.approx(1 / 0.3 + 1 / 0.5)
    trig = ell.TrigonometricFamily()
    assert trig.phi(0.3, 0.5) == pytest.approx(1 / math.tanh(0.3) + 1 / math.tanh(0.5))


def test_pole_guard():
    with pytest.raises(ell.PoleError):
        ell.wp(0.0, 1j)
    with pytest.raises(ell.PoleError):
        ell.eisenstein_E1(1 + 1j, 1j)
    with pytest.raises(ell.PoleError):
        ell.EllipticFamily(1j).phi(0.2, -0.2)


def test_small_imaginary_tau_rejected():
    with pytest.raises(ell.PrecisionError):
        ell.as_tau(0.5 + 0.01j)
    with pytest.raises(ell.PrecisionError):
        ell.as_tau(-1j)


def test_backends_agree():
    for tau in TAUS + [0.15j]:
        for z in (0.1 + 0.05j, -0.4 + 0.3j * tau.imag, 0.0):
            a = np.array(_theta_py.theta_jet(z, tau))
            b = np.array(ell._theta_jet_reduced(z, tau))
            assert np.max(np.abs(a - b) / np.maximum(1, np.abs(a))) < 1e-14
    assert ell.BACKEND in ("compiled", "python")


def test_lattice_distance():
    assert ell.lattice_distance(0.1, 1j) == pytest.approx(0.1)
    assert ell.lattice_distance(1 + 1j + 0.02j, 1j) == pytest.approx(0.02)


def test_laurent_coefficients_of_known_function():
    c = ell.laurent_coefficients(lambda z: 1 / z + 2 + 3 * z, 0.3, -1, 1)
    assert abs(c[-1] - 1) < 1e-13 and abs(c[0] - 2) < 1e-13 and abs(c[1] - 3) < 1e-13


@pytest.mark.parametrize("family", [1j, 0.8j, 0.3 + 0.9j, ell.RationalFamily(), ell.TrigonometricFamily()])
def test_fay_suite(family):
    rep = ell.check_fay_suite(family, samples=20)
    assert rep.passed, rep.summary_lines()
