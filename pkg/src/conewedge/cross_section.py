"""Spectral data of the cross-section Y.

Everything downstream works in the L2(Y)-orthonormal eigenbasis of the
cross-section Laplacian.  Eigenvalues follow the analyst's sign convention
(nonpositive), so the Neumann ground state is 0 and the Dirichlet one is
strictly negative.  A mode index ``j`` refers to a distinct eigenvalue; its
eigenspace occupies ``multiplicity`` consecutive coordinates of the basis.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Literal

import numpy as np
from scipy.linalg import eigh_tridiagonal

from .errors import DomainError, NumericalError

BC = Literal["dirichlet", "neumann"]

_ZERO_TOL = 1e-12


def _check_bc(bc):
    if bc not in ("dirichlet", "neumann"):
        raise DomainError(f"boundary condition must be 'dirichlet' or 'neumann', got {bc!r}")


@dataclass(frozen=True)
class Spectrum:
    """Ordered (nonincreasing) eigenvalues with multiplicities."""

    eigenvalues: tuple[float, ...]
    multiplicities: tuple[int, ...]
    n: int
    bc: BC
    # False when the entries are the first J modes of an infinite spectrum
    complete: bool = True

    def __post_init__(self):
        _check_bc(self.bc)
        lam = tuple(float(v) for v in self.eigenvalues)
        mult = tuple(int(m) for m in self.multiplicities)
        object.__setattr__(self, "eigenvalues", lam)
        object.__setattr__(self, "multiplicities", mult)
        if self.n < 1:
            raise DomainError(f"cross-section dimension n must be >= 1, got {self.n}")
        if not lam:
            raise DomainError("spectrum must contain at least one eigenvalue")
        if len(lam) != len(mult):
            raise DomainError("eigenvalues and multiplicities differ in length")
        if any(m < 1 for m in mult):
            raise DomainError("multiplicities must be positive integers")
        if any(v > _ZERO_TOL for v in lam):
            raise DomainError(
                "spectrum invariant violated: eigenvalues of the (nonpositive) "
                f"cross-section Laplacian must be <= 0, got {max(lam)!r}"
            )
        if any(b > a for a, b in zip(lam, lam[1:])):
            raise DomainError("spectrum invariant violated: eigenvalues must be nonincreasing")
        if self.bc == "neumann" and abs(lam[0]) > _ZERO_TOL:
            raise DomainError("spectrum invariant violated: Neumann ground eigenvalue must be 0")
        if self.bc == "dirichlet" and lam[0] >= -_ZERO_TOL:
            raise DomainError("spectrum invariant violated: Dirichlet ground eigenvalue must be < 0")

    @property
    def J(self) -> int:
        """Number of distinct modes kept."""
        return len(self.eigenvalues)

    @property
    def dim(self) -> int:
        """Dimension of the truncated eigenbasis."""
        return sum(self.multiplicities)

    @property
    def offsets(self) -> np.ndarray:
        return np.concatenate([[0], np.cumsum(self.multiplicities)]).astype(int)

    def block(self, j: int) -> slice:
        """Eigenbasis coordinates spanning the eigenspace of mode ``j``."""
        if not 0 <= j < self.J:
            raise IndexError(f"mode {j} outside truncation J={self.J}")
        off = self.offsets
        return slice(int(off[j]), int(off[j + 1]))

    def mode_of(self, coord: int) -> int:
        return int(np.searchsorted(self.offsets, coord, side="right") - 1)

    def diagonal(self) -> np.ndarray:
        """Eigenvalue attached to every eigenbasis coordinate."""
        return np.repeat(np.asarray(self.eigenvalues), self.multiplicities)

    def same_as(self, other: "Spectrum") -> bool:
        return (
            self.n == other.n
            and self.bc == other.bc
            and self.multiplicities == other.multiplicities
            and np.allclose(self.eigenvalues, other.eigenvalues, rtol=0, atol=1e-12)
        )


def interval_spectrum(L: float, bc: BC, J: int) -> Spectrum:
    """Closed-form spectrum of d^2/dy^2 on [0, L]."""
    _check_bc(bc)
    if not L > 0:
        raise DomainError(f"interval length must be positive, got {L!r}")
    if J < 1:
        raise DomainError(f"need at least one mode, got J={J}")
    j = np.arange(J)
    k = j if bc == "neumann" else j + 1
    lam = -((k * np.pi / L) ** 2) + 0.0  # no -0.0 for the ground mode
    return Spectrum(tuple(lam), (1,) * J, 1, bc, complete=False)


def tabulated_spectrum(eigenvalues, multiplicities=None, n: int = 1, bc: BC = "neumann") -> Spectrum:
    """Spectrum given as a table, e.g. for a spherical cap with no mesh."""
    eigenvalues = list(eigenvalues)
    if multiplicities is None:
        multiplicities = [1] * len(eigenvalues)
    return Spectrum(tuple(eigenvalues), tuple(multiplicities), int(n), bc)


def _fd_matrix_bands(L, bc, gridpoints):
    if bc == "neumann":
        h = L / (gridpoints - 1)
        d = np.full(gridpoints, -2.0)
        # ghost-point reflection u_{-1} = u_1 gives the row (-2, 2); symmetrise with sqrt(2)
        e = np.ones(gridpoints - 1)
        e[0] = e[-1] = np.sqrt(2.0)
    else:
        h = L / (gridpoints + 1)
        d = np.full(gridpoints, -2.0)
        e = np.ones(gridpoints - 1)
    return d / h**2, e / h**2, h


def fd_spectrum(L: float, bc: BC, gridpoints: int, J: int) -> Spectrum:
    """Brute-force oracle: eigenvalues of the central-difference d^2/dy^2.

    For Neumann, ``gridpoints`` nodes include both endpoints and the boundary
    rows use ghost-point reflection, so the constant vector is an exact
    discrete eigenvector with eigenvalue 0.  For Dirichlet the nodes are the
    interior points.
    """
    _check_bc(bc)
    if not L > 0:
        raise DomainError(f"interval length must be positive, got {L!r}")
    if gridpoints < 16:
        raise DomainError(f"fd_spectrum needs gridpoints >= 16, got {gridpoints}")
    if not 1 <= J <= gridpoints // 4:
        raise DomainError(f"fd_spectrum needs 1 <= J <= gridpoints/4, got J={J}")
    d, e, h = _fd_matrix_bands(L, bc, gridpoints)
    try:
        lam = eigh_tridiagonal(d, e, eigvals_only=True, select="i", select_range=(gridpoints - J, gridpoints - 1))
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"tridiagonal eigen-solve failed (L={L}, bc={bc}, gridpoints={gridpoints}, h={h:.3e})") from exc
    lam = np.sort(lam)[::-1]
    if bc == "neumann":
        # the constant mode is an exact discrete eigenpair (row sums of the
        # unsymmetrised stencil vanish); deflate it instead of keeping roundoff
        lam[0] = 0.0
    lam = np.minimum(lam, 0.0)
    return Spectrum(tuple(lam), (1,) * J, 1, bc, complete=False)


@dataclass(frozen=True)
class WarpData:
    """First-order warp data for metrics h(x) = phi(x)^2 h(0), phi(0) = 1.

    ``delta_prime`` is the derivative of the cross-section Laplacian at x = 0,
    diagonal in the eigenbasis (one entry per coordinate).  H(0) is always 0.
    """

    phi_prime0: float
    n: int
    delta_prime: np.ndarray = field(repr=False)

    @property
    def H0(self) -> float:
        return 0.0

    @property
    def H_prime0(self) -> float:
        return self.n * self.phi_prime0

    def delta_prime_matrix(self) -> np.ndarray:
        return np.diag(self.delta_prime)


def warp_family(phi_prime0: float, spectrum: Spectrum) -> WarpData:
    """Differentiate phi(x)^-2 Delta_Y(0) and x d/dx log det h(x) at x = 0.

    Exact for conformal warps of an interval; for n > 1 it is the model that
    every eigenspace is rescaled by the same conformal factor.
    """
    dp = -2.0 * float(phi_prime0) * spectrum.diagonal()
    dp = dp + 0.0  # normalise -0.0
    return WarpData(float(phi_prime0), spectrum.n, dp)


@dataclass(frozen=True)
class CrossSection:
    kind: Literal["interval-analytic", "tabulated", "fd-oracle"]
    n: int
    bc: BC
    L: float | None = None
    eigenvalues: tuple[float, ...] | None = None
    multiplicities: tuple[int, ...] | None = None
    phi_prime0: float = 0.0
    gridpoints: int = 2000

    def __post_init__(self):
        _check_bc(self.bc)
        if self.n < 1:
            raise DomainError("cross-section dimension must be >= 1")
        if self.kind in ("interval-analytic", "fd-oracle"):
            if self.n != 1:
                raise DomainError("an interval cross-section has n = 1")
            if self.L is None or not self.L > 0:
                raise DomainError(f"interval length must be positive, got {self.L!r}")
        elif self.kind == "tabulated":
            if self.eigenvalues is None:
                raise DomainError("tabulated cross-section needs eigenvalues")
        else:
            raise DomainError(f"unknown cross-section kind {self.kind!r}")

    def spectrum(self, J: int = 8) -> Spectrum:
        if self.kind == "interval-analytic":
            return interval_spectrum(self.L, self.bc, J)
        if self.kind == "fd-oracle":
            return fd_spectrum(self.L, self.bc, self.gridpoints, J)
        lam = self.eigenvalues[:J]
        mult = (self.multiplicities or (1,) * len(self.eigenvalues))[:J]
        return tabulated_spectrum(lam, mult, self.n, self.bc)

    def warp(self, J: int = 8) -> WarpData:
        return warp_family(self.phi_prime0, self.spectrum(J))
