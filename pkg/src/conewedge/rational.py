"""Rational functions of one complex variable with a cached pole factorisation.

A :class:`Rational` is ``num(z) / prod_i (z - r_i)^{m_i}`` with a complex
coefficient numerator and a monic denominator stored as its roots.  Keeping
the denominator factored makes shifts, Laurent expansions and products cheap
and exact up to floating-point rounding of the coefficients.
"""

from __future__ import annotations

from math import comb

import numpy as np
from numpy.polynomial import polynomial as P

POLE_MERGE_TOL = 1e-9
_CANCEL_RTOL = 1e-12


def _trim(c):
    c = np.atleast_1d(np.asarray(c, dtype=complex))
    nz = np.flatnonzero(c != 0)
    if nz.size == 0:
        return np.zeros(1, dtype=complex)
    return c[: nz[-1] + 1].copy()


def _merge_poles(poles):
    merged: list[list] = []
    for r, m in poles:
        if m <= 0:
            continue
        for entry in merged:
            if abs(entry[0] - r) <= POLE_MERGE_TOL * max(1.0, abs(r)):
                entry[1] += m
                break
        else:
            merged.append([complex(r), int(m)])
    merged.sort(key=lambda e: (e[0].real, e[0].imag))
    return tuple((r, m) for r, m in merged)


def _poly_from_poles(poles):
    c = np.ones(1, dtype=complex)
    for r, m in poles:
        for _ in range(m):
            c = P.polymul(c, [-r, 1.0])
    return c


def _shift_poly(c, rho):
    """Coefficients of p(z + rho) given those of p(z)."""
    c = np.asarray(c, dtype=complex)
    out = np.zeros_like(c)
    for k, ck in enumerate(c):
        if ck == 0:
            continue
        for i in range(k + 1):
            out[i] += ck * comb(k, i) * rho ** (k - i)
    return out


class Rational:
    __slots__ = ("num", "poles")

    def __init__(self, num, poles=()):
        self.num = _trim(num)
        self.poles = _merge_poles(poles) if self.num.any() else ()
        if self.poles:
            self._cancel()

    # construction -------------------------------------------------------
    @classmethod
    def const(cls, c):
        return cls([c])

    @classmethod
    def zero(cls):
        return cls([0.0])

    @classmethod
    def poly(cls, coeffs):
        """Polynomial from ascending coefficients."""
        return cls(coeffs)

    # structure ----------------------------------------------------------
    def is_zero(self) -> bool:
        return not self.num.any()

    @property
    def denominator(self) -> np.ndarray:
        return _poly_from_poles(self.poles)

    def pole_order(self, sigma) -> int:
        for r, m in self.poles:
            if abs(r - sigma) <= POLE_MERGE_TOL * max(1.0, abs(sigma)):
                return m
        return 0

    def _cancel(self):
        kept = []
        num = self.num
        for r, m in self.poles:
            while m > 0 and len(num) > 1:
                scale = np.sum(np.abs(num)) * max(1.0, abs(r)) ** (len(num) - 1)
                if abs(P.polyval(r, num)) > _CANCEL_RTOL * scale:
                    break
                num, _ = P.polydiv(num, [-r, 1.0])
                num = _trim(num)
                m -= 1
            if m:
                kept.append((r, m))
        self.num = num
        self.poles = tuple(kept)

    # arithmetic ---------------------------------------------------------
    def __call__(self, z):
        z = np.asarray(z, dtype=complex)
        val = P.polyval(z, self.num)
        for r, m in self.poles:
            val = val / (z - r) ** m
        return val

    def __neg__(self):
        return Rational(-self.num, self.poles)

    def __mul__(self, other):
        if not isinstance(other, Rational):
            return Rational(self.num * complex(other), self.poles)
        if self.is_zero() or other.is_zero():
            return Rational.zero()
        return Rational(P.polymul(self.num, other.num), self.poles + other.poles)

    __rmul__ = __mul__

    def __add__(self, other):
        if not isinstance(other, Rational):
            other = Rational.const(other)
        if self.is_zero():
            return other
        if other.is_zero():
            return self
        common = {}
        for poles in (self.poles, other.poles):
            for r, m in poles:
                key = next((k for k in common if abs(k - r) <= POLE_MERGE_TOL * max(1.0, abs(r))), r)
                common[key] = max(common.get(key, 0), m)
        common_poles = tuple(common.items())

        def lift(f):
            extra = []
            for r, m in common_poles:
                extra.append((r, m - f.pole_order(r)))
            return P.polymul(f.num, _poly_from_poles(extra))

        return Rational(P.polyadd(lift(self), lift(other)), common_poles)

    __radd__ = __add__

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def shift(self, rho: float) -> "Rational":
        """(T^rho h)(z) = h(z + rho)."""
        return Rational(_shift_poly(self.num, rho), tuple((r - rho, m) for r, m in self.poles))

    def derivative(self) -> "Rational":
        # (N/D)' = N'/D - N * sum m/(z-r) / D
        out = Rational(P.polyder(self.num) if len(self.num) > 1 else [0.0], self.poles)
        for r, m in self.poles:
            out = out - Rational(self.num * m, self.poles + ((r, 1),))
        return out

    # expansions ---------------------------------------------------------
    def laurent(self, sigma, order: int) -> tuple[int, np.ndarray]:
        """Laurent coefficients at ``sigma``.

        Returns ``(M, c)`` with ``c[i]`` the coefficient of (z - sigma)^(i - M)
        for i = 0 .. M + order.
        """
        sigma = complex(sigma)
        M = self.pole_order(sigma)
        n_terms = M + order + 1
        if n_terms <= 0:
            return M, np.zeros(0, dtype=complex)
        series = np.zeros(n_terms, dtype=complex)
        shifted = _shift_poly(self.num, sigma)
        series[: min(n_terms, len(shifted))] = shifted[:n_terms]
        for r, m in self.poles:
            if abs(r - sigma) <= POLE_MERGE_TOL * max(1.0, abs(sigma)):
                continue
            d = sigma - r
            k = np.arange(n_terms)
            factor = np.array([(-1) ** kk * comb(m + kk - 1, kk) for kk in k], dtype=float) * d ** (-m - k)
            series = np.convolve(series, factor)[:n_terms]
        return M, series

    def __repr__(self):
        num = " + ".join(f"({c:.4g})z^{i}" for i, c in enumerate(self.num) if c != 0) or "0"
        den = "".join(f"(z-{r:.4g})^{m}" for r, m in self.poles)
        return f"Rational[{num}{' / ' + den if den else ''}]"


class RationalMatrixFamily:
    """Square matrix of :class:`Rational` entries (a meromorphic matrix function)."""

    def __init__(self, entries):
        self.entries = [list(row) for row in entries]
        n = len(self.entries)
        if any(len(row) != n for row in self.entries):
            raise ValueError("RationalMatrixFamily must be square")

    @property
    def size(self) -> int:
        return len(self.entries)

    @classmethod
    def zeros(cls, size):
        return cls([[Rational.zero() for _ in range(size)] for _ in range(size)])

    @classmethod
    def identity(cls, size):
        return cls.diag([Rational.const(1.0)] * size)

    @classmethod
    def diag(cls, items):
        size = len(items)
        fam = cls.zeros(size)
        for i, r in enumerate(items):
            fam.entries[i][i] = r
        return fam

    def is_diagonal(self) -> bool:
        return all(self.entries[i][j].is_zero() for i in range(self.size) for j in range(self.size) if i != j)

    def is_zero(self) -> bool:
        return all(e.is_zero() for row in self.entries for e in row)

    def diagonal(self) -> list[Rational]:
        return [self.entries[i][i] for i in range(self.size)]

    def __call__(self, z) -> np.ndarray:
        z = complex(z)
        return np.array([[e(z) for e in row] for row in self.entries], dtype=complex)

    def map(self, fn) -> "RationalMatrixFamily":
        return RationalMatrixFamily([[fn(e) for e in row] for row in self.entries])

    def shift(self, rho) -> "RationalMatrixFamily":
        return self.map(lambda e: e.shift(rho))

    def __neg__(self):
        return self.map(lambda e: -e)

    def __add__(self, other):
        return RationalMatrixFamily(
            [[a + b for a, b in zip(ra, rb)] for ra, rb in zip(self.entries, other.entries)]
        )

    def __sub__(self, other):
        return self + (-other)

    def __matmul__(self, other):
        n = self.size
        out = RationalMatrixFamily.zeros(n)
        for i in range(n):
            for k in range(n):
                a = self.entries[i][k]
                if a.is_zero():
                    continue
                for j in range(n):
                    b = other.entries[k][j]
                    if b.is_zero():
                        continue
                    out.entries[i][j] = out.entries[i][j] + a * b
        return out

    def pole_order(self, sigma) -> int:
        return max((e.pole_order(sigma) for row in self.entries for e in row), default=0)

    def poles(self) -> list[complex]:
        found = []
        for row in self.entries:
            for e in row:
                for r, _ in e.poles:
                    if all(abs(r - f) > POLE_MERGE_TOL for f in found):
                        found.append(r)
        return sorted(found, key=lambda r: (r.real, r.imag))

    def laurent(self, sigma, order: int) -> "LaurentSeries":
        M = self.pole_order(sigma)
        n = self.size
        coeffs = np.zeros((M + order + 1, n, n), dtype=complex)
        for i, row in enumerate(self.entries):
            for j, e in enumerate(row):
                if e.is_zero():
                    continue
                m, c = e.laurent(sigma, order)
                coeffs[M - m : M - m + len(c), i, j] = c[: M + order + 1 - (M - m)]
        return LaurentSeries(complex(sigma), M, order, coeffs)

    def check_invariants(self, rng=None, samples: int = 8, tol: float = 1e-10) -> bool:
        """Monic denominators whose cached roots reproduce the expanded polynomial."""
        rng = np.random.default_rng(0) if rng is None else rng
        z = rng.normal(size=samples) + 1j * rng.normal(size=samples)
        for row in self.entries:
            for e in row:
                den = e.denominator
                if abs(den[-1] - 1.0) > 1e-14:
                    return False
                direct = np.ones_like(z)
                for r, m in e.poles:
                    direct = direct * (z - r) ** m
                if np.max(np.abs(P.polyval(z, den) - direct) / np.maximum(1.0, np.abs(direct))) > tol:
                    return False
        return True


class LaurentSeries:
    """Matrix Laurent coefficients c_m, m = -M .. K, at an expansion point."""

    def __init__(self, sigma: complex, M: int, K: int, coeffs: np.ndarray):
        if M < 0:
            raise ValueError("Laurent pole order must be >= 0")
        self.sigma = sigma
        self.M = M
        self.K = K
        self.coeffs = coeffs

    def coefficient(self, m: int) -> np.ndarray:
        idx = m + self.M
        if idx < 0 or idx >= len(self.coeffs):
            return np.zeros(self.coeffs.shape[1:], dtype=complex)
        return self.coeffs[idx]

    def principal_coefficients(self) -> np.ndarray:
        """c_{-M} .. c_{-1}; empty if the expansion point is regular."""
        return self.coeffs[: self.M]

    def principal(self, z) -> np.ndarray:
        w = complex(z) - self.sigma
        out = np.zeros(self.coeffs.shape[1:], dtype=complex)
        for i in range(self.M):
            out += self.coeffs[i] * w ** (i - self.M)
        return out

    def evaluate(self, z) -> np.ndarray:
        w = complex(z) - self.sigma
        out = np.zeros(self.coeffs.shape[1:], dtype=complex)
        for i, c in enumerate(self.coeffs):
            out += c * w ** (i - self.M)
        return out
