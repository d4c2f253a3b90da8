import math

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from conewedge.cross_section import interval_spectrum, tabulated_spectrum, warp_family
from conewedge.domains import (
    adjoint_complement,
    atom_pairing,
    check_E3_criterion,
    e0n_report,
    make_domain,
    max_domain,
    min_domain,
    neumann_extension,
    pairing_matrix,
    per_root_complement,
    same_subspace,
)
from conewedge.errors import DomainError, HypothesisError

PI_N = interval_spectrum(math.pi, "neumann", 8)
MULTI = tabulated_spectrum([0.0, -0.5, -6.0], [1, 2, 1], n=2)


def test_max_domain_examples():
    d = max_domain(PI_N, -0.5)
    assert d.atoms == [(0.0, 0, 0), (0.0, 1, 0), (1.0, 0, 1)]
    dd = max_domain(interval_spectrum(math.pi, "dirichlet", 8), -0.5)
    assert [a[0] for a in dd.atoms] == pytest.approx([1.0])
    assert max_domain(tabulated_spectrum([0.0, -1.0, -4.0]), 10.0).dim_total == 0


def test_pairing_examples():
    e0 = (0.0, 0, 0)
    assert atom_pairing(1, e0, (0.0, 1, 0)) == pytest.approx(1.0)
    assert atom_pairing(1, (1.0, 0, 1), (1.0, 0, 1)) == 0.0
    # [e x^-q+, f x^-q-] = (q+ - q-)(e, f), see the decisions log for the sign
    assert atom_pairing(1, (1.0, 0, 1), (-1.0, 0, 1)) == pytest.approx(2.0)
    assert atom_pairing(1, (1.0, 0, 1), (-1.0, 0, 2)) == 0.0
    with pytest.raises(DomainError):
        pairing_matrix(max_domain(PI_N, -0.5), max_domain(MULTI, 0.5))


def test_complement_examples():
    s = tabulated_spectrum([0.0, -2.0], n=2)
    assert adjoint_complement(min_domain(s, 0.0)).same_as(max_domain(s, 0.0))
    assert adjoint_complement(max_domain(s, 0.0)).dim == 0
    d = make_domain(PI_N, -0.5, {0.0: "const", 1.0: "zero"})
    c = adjoint_complement(d)
    assert c.label(c.index_of(0.0)) == "const"
    assert c.same_as(per_root_complement(d))


def test_log_pair_lines_rejected():
    with pytest.raises(DomainError):
        make_domain(PI_N, -0.5, {0.0: np.array([[1.0], [1.0]])})
    with pytest.raises(DomainError):
        make_domain(PI_N, -0.5, {1.0: "const"})
    with pytest.raises(DomainError):
        make_domain(PI_N, -0.5, {3.0: "full"})


def test_E3_examples():
    good = make_domain(PI_N, -0.5, {0.0: "const", 1.0: "zero"})
    assert check_E3_criterion(good).passed
    bad = make_domain(PI_N, 0.5, {-1.0: "zero", 0.0: "const"})
    assert check_E3_criterion(bad).failed_conditions() == {2}
    s = tabulated_spectrum([0.0, -2.0], n=2)
    assert check_E3_criterion(make_domain(s, 0.0, {0.0: "full", 1.0: "zero"})).passed
    with pytest.raises(HypothesisError):
        check_E3_criterion(max_domain(MULTI, 1.6))


def test_neumann_extension_examples():
    d = neumann_extension(PI_N, 0.5)
    assert d.gamma == pytest.approx(-0.5)
    assert [d.label(i) for i in range(len(d.spaces))] == ["const", "zero"]
    d2 = neumann_extension(tabulated_spectrum([0.0, -2.0], n=2), 0.5)
    assert d2.gamma == pytest.approx(0.0)
    assert [d2.label(i) for i in range(2)] == ["full", "zero"]
    d3 = neumann_extension(tabulated_spectrum([0.0, -3.0, -8.0], n=3), 0.5)
    assert d3.gamma > 0 and check_E3_criterion(d3).passed


def test_e0n_report_examples():
    s = interval_spectrum(math.pi / 2, "neumann", 8)
    rep = e0n_report(s, warp_family(0.0, s), 1.5)
    assert all(abs(f.coefficient(-1.0, 0)[0]) < 1e-14 for f in rep.E0N)
    assert np.allclose(e0n_report(s, warp_family(1.0, s), 0.5).theta, np.eye(2))
    with pytest.raises(DomainError):
        e0n_report(MULTI, warp_family(0.0, MULTI), 0.5)


def _random_choice(spec, gamma, draw):
    choices = {}
    for sp in max_domain(spec, gamma).spaces:
        if sp.structure == "log-pair":
            choices[sp.root.q] = draw(st.sampled_from(["zero", "const", "full"]))
        else:
            r = draw(st.integers(0, sp.dim))
            seed = draw(st.integers(0, 2**31))
            choices[sp.root.q] = np.random.default_rng(seed).normal(size=(sp.dim, r))
    return make_domain(spec, gamma, choices)


gammas = st.floats(-1.2, 1.2, allow_nan=False).filter(lambda g: min(abs(g - e) for e in (-1, 0, 1)) > 1e-3)


@settings(max_examples=40, deadline=None)
@given(gammas)
def test_pairing_nondegenerate(gamma):
    try:
        plus = max_domain(PI_N, gamma)
    except DomainError:
        assume(False)
    P = pairing_matrix(plus, max_domain(PI_N, -gamma))
    assert P.shape[0] == P.shape[1]
    assert np.linalg.matrix_rank(P) == P.shape[0]


@settings(max_examples=40, deadline=None)
@given(st.data(), st.floats(-1.4, 1.4, allow_nan=False))
def test_biduality_and_dimensions(data, gamma):
    try:
        d = _random_choice(MULTI, gamma, data.draw)
    except DomainError:
        assume(False)
    c = adjoint_complement(d)
    assert d.dim + c.dim == d.dim_total
    assert adjoint_complement(c).same_as(d)
    assert c.same_as(per_root_complement(d))


def test_same_subspace_is_basis_free():
    rng = np.random.default_rng(0)
    a = rng.normal(size=(4, 2))
    assert same_subspace(a, a @ rng.normal(size=(2, 2)))
    assert not same_subspace(a, rng.normal(size=(4, 2)))
