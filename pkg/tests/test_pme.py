import math

import numpy as np
import pytest

from conewedge.errors import ConfigError, DomainError, PositivityError
from conewedge.pme_solver import (
    PMEState,
    WedgeGrid,
    clement_li_window_check,
    is_m_matrix,
    laplacian_apply,
    mass,
    mode_amplitudes,
    parse_forcing,
    pme_solve,
    pme_step_imex,
    step_matrix,
    tip_exponent_fit,
    weighted_norm,
)

G = WedgeGrid(math.pi, 1e-5, 200, 16)
X, Y = np.meshgrid(G.x, G.y, indexing="ij")


def test_grid_guards():
    with pytest.raises(DomainError):
        WedgeGrid(math.pi, 1e-3)
    with pytest.raises(DomainError):
        WedgeGrid(-1.0)
    assert np.all(np.diff(G.x) > 0) and G.x[-1] == pytest.approx(1.0)


def test_laplacian_constant_is_exactly_zero():
    assert np.max(np.abs(laplacian_apply(np.full(G.shape, 3.7), G))) == 0.0


def test_laplacian_x_squared():
    # (x d/dx)^2 x^2 / x^2 = 4 in the interior, second order in h
    errs = []
    for g in (WedgeGrid(math.pi, 1e-5, 200, 8), WedgeGrid(math.pi, 1e-5, 399, 8)):
        Xg, _ = np.meshgrid(g.x, g.y, indexing="ij")
        out = laplacian_apply(Xg**2, g)
        errs.append(np.max(np.abs(out[5:-5] - 4.0)))
    assert errs[0] < 5e-3 and math.log2(errs[0] / errs[1]) > 1.8


def test_laplacian_mode_one():
    # symbolic: x^-2[(x d/dx)^2 x - x] cos y = 0, the discrete cosine mode adds O(dy^2)
    v = X * np.cos(Y)
    out = laplacian_apply(v, G)
    lam1 = G.mode_eigenvalues()[1]
    expect = (1.0 + lam1) / X * np.cos(Y)
    scale = np.abs(v / X**2)
    assert np.max(np.abs(out - expect)[5:-5] / scale[5:-5]) < 5e-3


def test_constants_are_fixed_points():
    for m in (0.5, 1.0, 2.0, 3.0):
        tr = pme_solve(np.full(G.shape, 2.5), G, 0.02, 2e-3, m=m)
        assert np.max(np.abs(tr.final - 2.5)) < 1e-12
        assert tr.summary()["c_of_t"] == pytest.approx([2.5] * len(tr.tip_value), abs=1e-12)


def test_heat_mass_and_mode_decay():
    v0 = 1.0 + 0.2 * X * np.cos(Y)
    tr = pme_solve(v0, G, 0.1, 2e-3, m=1.0)
    assert abs(mass(tr.final, G) - mass(v0, G)) < 1e-8 * 0.1
    amps = [np.max(np.abs(mode_amplitudes(s)[:, 1])) for s in tr.states]
    assert all(b <= a + 1e-15 for a, b in zip(amps, amps[1:]))


def test_step_matrix_is_m_matrix_and_max_principle():
    v = 1.0 + 0.3 * np.cos(Y) * X**0.5
    st = PMEState(0.0, v, 2.0, 0.5)
    assert is_m_matrix(step_matrix(st, G, 1e-2))
    nxt = pme_step_imex(st, G, 1e-2)
    assert nxt.v.min() >= v.min() - 1e-12


def test_positivity_halt_keeps_state():
    v = 1.0 + 0.9 * np.cos(Y)
    st = PMEState(0.0, v, 2.0, 1.5)
    with pytest.raises(PositivityError) as exc:
        pme_step_imex(st, G, 1e-2)
    assert exc.value.state is st
    tr = pme_solve(v, G, 0.02, 1e-2, alpha=1.5)
    assert tr.halted and tr.times == [0.0] and tr.summary()["converged"] is False


def test_forcing_recipes():
    assert parse_forcing("none")(0, np.ones(3)).tolist() == [0, 0, 0]
    assert parse_forcing("const 0.5")(0, np.ones(2)).tolist() == [0.5, 0.5]
    assert parse_forcing("logistic 2, 4")(0, np.full(1, 2.0))[0] == pytest.approx(2.0)
    for bad in ("sin 1", "logistic 1,0"):
        with pytest.raises(ConfigError):
            parse_forcing(bad)


def test_logistic_forcing_raises_constants():
    tr = pme_solve(np.full(G.shape, 1.0), G, 0.1, 1e-2, g=parse_forcing("logistic 1,2"))
    # v' = v(1 - v/2) from v = 1, backward Euler to O(tau)
    exact = 2.0 / (1.0 + math.exp(-0.1))
    assert np.allclose(tr.final, tr.final[0, 0]) and tr.final[0, 0] == pytest.approx(exact, abs=2e-3)


@pytest.mark.slow
def test_tipcos_example_and_refinement():
    v0 = lambda g: 1.0 + 0.1 * np.meshgrid(g.x, g.y, indexing="ij")[0] ** 1.0 * np.cos(np.meshgrid(g.x, g.y, indexing="ij")[1])
    g1 = WedgeGrid(math.pi, 1e-5, 150, 16)
    a = pme_solve(v0(g1), g1, 0.1, 4e-3)
    assert min(a.min_v) >= 0.8 and not a.halted
    g2 = g1.refined()
    b = pme_solve(v0(g2), g2, 0.1, 2e-3)
    coarse = b.final[::2, :].reshape(g1.nx, g1.ny, 2).mean(axis=2)
    assert weighted_norm(a.final - coarse, g1) < 1e-2


def test_tip_fit_modes():
    g = WedgeGrid(math.pi / 2, 1e-5, 200, 16)
    Xg, Yg = np.meshgrid(g.x, g.y, indexing="ij")
    tr = pme_solve(1.0 + 0.1 * np.cos(2 * Yg), g, 0.04, 2e-3)
    fit = tip_exponent_fit(tr, modes=(0, 1, 3))
    assert abs(fit[0]) < 0.05
    assert fit[1] == pytest.approx(2.0, rel=0.1)
    assert fit[3] is None


def test_window_examples():
    assert clement_li_window_check(8, 8, 1, 0.5)
    assert not clement_li_window_check(2, 2, 1, 0.5)
    assert clement_li_window_check(100, 100, 3, 0.03)
