"""Indicial roots of the Laplacian conormal symbol and the windows they fall in.

The principal conormal symbol z^2 - (n-1) z + lambda_j is singular at

    q_j^{+/-} = (n-1)/2 +/- sqrt(((n-1)/2)^2 - lambda_j),

and an asymptotic term x^{-q} enters the maximal domain in the weighted space
of weight gamma exactly when q lies in the open window
((n+1)/2 - gamma - mu, (n+1)/2 - gamma).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .cross_section import Spectrum
from .errors import DomainError, EndpointCoincidenceError, TruncationError

ENDPOINT_TOL = 1e-12
DOUBLE_ROOT_TOL = 1e-12


@dataclass(frozen=True)
class IndicialRoot:
    mode: int
    sign: str  # "+" or "-"; a double root is carried once, as "-" with pole_order 2
    value: complex
    pole_order: int
    multiplicity: int = 1  # dimension of the eigenspace E_j

    @property
    def q(self) -> float:
        return float(np.real(self.value))

    def as_dict(self) -> dict:
        return {"j": self.mode, "sign": self.sign, "q": self.q, "order": self.pole_order, "dim": self.multiplicity}

    def __repr__(self):
        return f"q{self.sign}_{self.mode}={self.q:.6g}" + (" (double)" if self.pole_order == 2 else "")


def indicial_roots(spectrum: Spectrum, j: int) -> tuple[IndicialRoot, IndicialRoot]:
    """Return ``(q^-, q^+)`` for mode ``j``."""
    if not 0 <= j < spectrum.J:
        raise IndexError(f"mode {j} outside truncation J={spectrum.J}")
    lam = spectrum.eigenvalues[j]
    c = (spectrum.n - 1) / 2.0
    rad = c * c - lam
    if rad < 0:  # only possible if lam > c^2, excluded by the spectrum invariant
        raise DomainError(f"complex indicial roots for lambda={lam}; Laplacian data expected")
    s = math.sqrt(rad)
    order = 2 if s <= DOUBLE_ROOT_TOL else 1
    if order == 2:
        s = 0.0
    mult = spectrum.multiplicities[j]
    return (
        IndicialRoot(j, "-", complex(c - s), order, mult),
        IndicialRoot(j, "+", complex(c + s), order, mult),
    )


def all_roots(spectrum: Spectrum) -> list[IndicialRoot]:
    """Every distinct root of the truncated spectrum; double roots listed once."""
    out = []
    for j in range(spectrum.J):
        qm, qp = indicial_roots(spectrum, j)
        out.append(qm)
        if qp.pole_order == 1:
            out.append(qp)
    return out


@dataclass(frozen=True)
class PoleWindow:
    lower: float
    upper: float
    roots: tuple[IndicialRoot, ...] = field(default=())

    def __contains__(self, q) -> bool:
        q = float(np.real(q))
        return self.lower < q < self.upper

    def values(self) -> list[float]:
        return [r.q for r in self.roots]

    def as_dict(self) -> dict:
        return {"window": [self.lower, self.upper], "roots": [r.as_dict() for r in self.roots]}


def pole_window(spectrum: Spectrum, gamma: float, mu: int = 2) -> PoleWindow:
    """Roots inside ((n+1)/2 - gamma - mu, (n+1)/2 - gamma).

    A root on either endpoint is an error: the weight would make the operator
    non-elliptic there.  For a truncated spectrum (``complete=False``) the
    outermost roots must bracket the window, since q_j^+ increases and q_j^-
    decreases with j; otherwise modes beyond the truncation could be missing.
    """
    n = spectrum.n
    upper = (n + 1) / 2.0 - gamma
    lower = upper - mu
    inside = []
    for r in all_roots(spectrum):
        for edge in (lower, upper):
            if abs(r.q - edge) <= ENDPOINT_TOL * max(1.0, abs(edge)):
                raise EndpointCoincidenceError(r, edge)
        if lower < r.q < upper:
            inside.append(r)
    if not spectrum.complete:
        qm, qp = indicial_roots(spectrum, spectrum.J - 1)
        if qp.q < upper or qm.q > lower:
            raise TruncationError(
                f"truncation J={spectrum.J} cannot certify the window ({lower:.6g}, {upper:.6g}): "
                f"outermost roots {qm.q:.6g}, {qp.q:.6g} do not bracket it; increase J"
            )
    inside.sort(key=lambda r: (r.q, r.mode))
    return PoleWindow(lower, upper, tuple(inside))


def laplacian_window_Igamma(spectrum: Spectrum, gamma: float) -> PoleWindow:
    """The set I_gamma used for second-order (Laplacian) domains."""
    return pole_window(spectrum, gamma, mu=2)


@dataclass(frozen=True)
class GammaWindow:
    """Admissible weights gamma = (n-3)/2 + delta for the Neumann extension."""

    n: int
    delta_max: float
    excluded: tuple[float, ...]

    def gamma(self, delta: float) -> float:
        return (self.n - 3) / 2.0 + delta

    def admissible(self, delta: float) -> bool:
        if not 0.0 < delta < self.delta_max:
            return False
        return all(abs(delta - d) > ENDPOINT_TOL for d in self.excluded)

    def check(self, delta: float) -> float:
        if not self.admissible(delta):
            raise DomainError(
                f"delta={delta} inadmissible: need 0 < delta < {self.delta_max:.6g} "
                f"and delta not in {list(self.excluded)}"
            )
        return self.gamma(delta)


def gamma_window(spectrum: Spectrum) -> GammaWindow:
    if spectrum.bc != "neumann":
        raise DomainError("gamma_window is defined for Neumann spectra")
    if spectrum.J < 2:
        raise DomainError("gamma_window needs at least two modes (q_1^- bounds delta)")
    q1m, _ = indicial_roots(spectrum, 1)
    delta_max = min(-q1m.q, 2.0)
    excluded = []
    for j in range(spectrum.J):
        _, qp = indicial_roots(spectrum, j)
        d = 2.0 - qp.q
        if 0.0 < d < delta_max:
            excluded.append(d)
    return GammaWindow(spectrum.n, delta_max, tuple(sorted(excluded)))
