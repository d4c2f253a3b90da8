import math

import numpy as np
import pytest

from conewedge.cross_section import interval_spectrum, tabulated_spectrum, warp_family
from conewedge.errors import DomainError, UnsupportedError
from conewedge.indicial import pole_window
from conewedge.mellin_symbolic import (
    AsymptoticFunction,
    ConormalData,
    F_sigma,
    G_sigma_ell,
    conormal_f,
    g_recursion,
    invert_f0,
    kernel_check,
    mu_sigma,
    poles_in_window,
    principal_part,
    recursion_residual,
    shift,
)
from conewedge.rational import Rational, RationalMatrixFamily

from conftest import standard_configs

S2 = interval_spectrum(math.pi, "neumann", 2)


def test_conormal_examples():
    f0 = conormal_f(0, S2)
    assert np.allclose(f0(2.0), np.diag([4.0, 3.0]))
    assert conormal_f(1, S2, warp_family(0.0, S2)).is_zero()
    f1 = conormal_f(1, S2, warp_family(1.0, S2))
    z = 0.7 - 0.2j
    assert np.allclose(f1(z), np.diag([-z, 2 - z]))
    with pytest.raises(UnsupportedError):
        conormal_f(2, S2, warp_family(1.0, S2))


def test_invert_f0_examples():
    inv = invert_f0(conormal_f(0, S2))
    z = 0.4 + 1.1j
    assert np.allclose(inv(z), np.diag([1 / z**2, 1 / ((z - 1) * (z + 1))]))
    dense = RationalMatrixFamily([[Rational.const(1.0), Rational.const(1.0)], [Rational.zero(), Rational.const(1.0)]])
    with pytest.raises(UnsupportedError):
        invert_f0(dense)


def test_shift_wrapper():
    assert shift(Rational.poly([0, 0, 1]), -1)(0.0) == pytest.approx(1.0)


def test_recursion_examples():
    fs = [conormal_f(0, S2), conormal_f(1, S2, warp_family(0.0, S2))]
    gs = g_recursion(fs, 2)
    assert np.allclose(gs[0](0.3), np.eye(2))
    assert gs[1].is_zero() and gs[2].is_zero()


def test_g1_closed_form():
    s = interval_spectrum(math.pi / 2, "neumann", 2)
    fs = [conormal_f(0, s), conormal_f(1, s, warp_family(1.0, s))]
    g1 = g_recursion(fs, 1)[1]
    z = 0.3 + 0.2j
    # mode 0: -(1/(z-1)^2) (-z) = z/(z-1)^2
    assert g1(z)[0, 0] == pytest.approx(z / (z - 1) ** 2)


@pytest.mark.parametrize("phi", [0.3, -1.2, 2.0])
def test_recursion_identity_random_warp(phi):
    s = tabulated_spectrum([0.0, -2.0, -5.0], [1, 2, 1], n=2)
    fs = [conormal_f(0, s), conormal_f(1, s, warp_family(phi, s))]
    gs = g_recursion(fs, 2)
    rng = np.random.default_rng(1)
    for z in rng.normal(size=16) + 1j * rng.normal(size=16):
        for ell in (1, 2):
            assert recursion_residual(fs, gs, ell, z) < 1e-10


def test_principal_part_examples():
    inv = invert_f0(conormal_f(0, S2))
    lp = principal_part(inv, 1.0)
    assert lp.M == 1 and lp.principal_coefficients()[0][1, 1] == pytest.approx(0.5)
    lp0 = principal_part(inv, 0.0)
    assert lp0.M == 2 and lp0.principal_coefficients()[0][0, 0] == pytest.approx(1.0)


def test_G_examples():
    inv = invert_f0(conormal_f(0, S2))
    g0 = RationalMatrixFamily.identity(2)
    v0, v1 = np.array([2.0, 5.0]), np.array([3.0, 7.0])
    G = G_sigma_ell(g0, inv, 0.0, [v0, v1])
    # residue of x^-z u(z)/z^2 at 0 is u'(0) - u(0) log x, projected on mode 0
    assert G.coefficient(0.0, 0) == pytest.approx([3.0, 0.0])
    assert G.coefficient(0.0, 1) == pytest.approx([-2.0, 0.0])
    assert G_sigma_ell(g0, inv, 0.5, [v0]).is_zero()
    with pytest.raises(DomainError):
        G_sigma_ell(g0, inv, 0.0, [v0])


def test_mu_sigma_examples():
    assert mu_sigma(0.0, 2, -0.5, 1) == 0
    assert mu_sigma(0.0, 2, 0.5, 1) == 1
    assert mu_sigma(-1.5, 2, -0.5, 1) == 0
    with pytest.raises(DomainError):
        mu_sigma(0.0, 2, 0.0, 1)


def test_kernel_check_examples():
    s = interval_spectrum(math.pi, "neumann", 3)
    e0 = np.array([1.0, 0, 0])
    assert kernel_check(AsymptoticFunction([(0.0, 1, e0)]), s).is_zero()
    e1 = np.array([0, 1.0, 0])
    assert kernel_check(AsymptoticFunction([(1.0, 0, e1)]), s).is_zero()
    r = kernel_check(AsymptoticFunction([(1.1, 0, e1)]), s)
    assert r.coefficient(3.1, 0)[1] == pytest.approx(1.1**2 - 1)


def test_F_sigma_unwarped_identity():
    s = interval_spectrum(math.pi, "neumann", 8)
    fs = F_sigma(0.0, ConormalData(s, warp_family(0.0, s), -0.5))
    assert fs.dim == 2 == len(fs.Fhat_basis)
    assert np.allclose(fs.theta, np.eye(2))


def test_F_sigma_empty_off_poles():
    s = interval_spectrum(math.pi, "neumann", 8)
    fs = F_sigma(0.3, ConormalData(s, warp_family(0.0, s), -0.5))
    assert fs.dim == 0 and fs.Fhat_basis == []


def test_dimensions_and_theta_invertible():
    for _, s, w, delta in standard_configs():
        data = ConormalData(s, w, (s.n - 3) / 2 + delta)
        win = pole_window(s, data.gamma)
        for sigma in poles_in_window(data):
            fs = F_sigma(sigma, data)
            want = sum(r.multiplicity * r.pole_order for r in win.roots if abs(r.q - sigma) < 1e-9)
            assert fs.dim == len(fs.Fhat_basis) == fs.expected_dim == want
            assert np.isfinite(np.linalg.cond(fs.theta))


def _full_operator_mode0(a, x):
    """x^2 * Delta applied to log x + a x on the warped cone phi(x) = 1 + x, mode 0.

    Mode-0 part of the Laplacian: x^-2[(x d/dx)^2 + H(x) x d/dx], H = x phi'/phi.
    With x d/dx (log x + a x) = 1 + a x and (x d/dx)^2 (log x + a x) = a x.
    """
    H = x / (1 + x)
    return a * x + H * (1 + a * x)


def test_warped_x_term_sign_from_operator():
    # the first-order x-term cancels only for a = -1; the computed space agrees
    x = np.logspace(-6, -3, 5)
    good = _full_operator_mode0(-1.0, x) / x**2
    bad = _full_operator_mode0(+1.0, x) / x**2
    assert np.max(np.abs(good)) < 2.0
    assert np.min(np.abs(bad * x)) > 1.9
    s = interval_spectrum(math.pi / 2, "neumann", 8)
    fs = F_sigma(0.0, ConormalData(s, warp_family(1.0, s), 0.5))
    logs = [f for f in fs.F_basis if abs(f.coefficient(0.0, 1)[0]) > 0.5]
    ratio = logs[0].coefficient(-1.0, 0)[0] / logs[0].coefficient(0.0, 1)[0]
    assert ratio == pytest.approx(-1.0, abs=1e-10)
