"""Conormal symbols of the cone Laplacian and the asymptotics they generate.

All families are matrices over the truncated L2(Y) eigenbasis.  The
Laplacian near the tip reads

    x^-2 [ (x d/dx)^2 + (n - 1 + H(x)) x d/dx + Delta_Y(x) ],

so with -x d/dx -> z the frozen symbol is f0(z) = z^2 - (n-1) z + Delta_Y(0)
and the first Taylor correction is f1(z) = Delta_Y'(0) - H'(0) z.

Asymptotic terms use the convention v * x^-q * log^k x throughout, so the
exponents are the indicial roots themselves.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .cross_section import Spectrum, WarpData
from .errors import DomainError, NumericalError, UnsupportedError
from .indicial import all_roots, pole_window
from .rational import LaurentSeries, Rational, RationalMatrixFamily

EXPONENT_TOL = 1e-10
PRUNE_TOL = 1e-13
RANK_TOL = 1e-10


# ---------------------------------------------------------------------------
# asymptotic functions


class AsymptoticFunction:
    """Finite sum of terms v * x^-q * log^k x with v in the eigenbasis."""

    def __init__(self, terms=(), dim: int | None = None):
        merged: list[list] = []
        for q, k, v in terms:
            v = np.asarray(v, dtype=complex)
            if dim is None:
                dim = v.size
            for entry in merged:
                if entry[1] == k and abs(entry[0] - q) <= EXPONENT_TOL * max(1.0, abs(q)):
                    entry[2] = entry[2] + v
                    break
            else:
                merged.append([complex(q), int(k), v.copy()])
        self.dim = dim
        self.terms = [
            (q, k, v) for q, k, v in sorted(merged, key=lambda e: (e[0].real, e[0].imag, e[1]))
            if np.max(np.abs(v), initial=0.0) > PRUNE_TOL
        ]

    def __add__(self, other):
        return AsymptoticFunction(self.terms + other.terms, self.dim or other.dim)

    def scale(self, c) -> "AsymptoticFunction":
        return AsymptoticFunction([(q, k, c * v) for q, k, v in self.terms], self.dim)

    def is_zero(self, tol: float = RANK_TOL) -> bool:
        return all(np.max(np.abs(v)) <= tol for _, _, v in self.terms)

    def max_coefficient(self) -> float:
        return max((float(np.max(np.abs(v))) for _, _, v in self.terms), default=0.0)

    def coefficient(self, q, k) -> np.ndarray:
        for qq, kk, v in self.terms:
            if kk == k and abs(qq - q) <= EXPONENT_TOL * max(1.0, abs(q)):
                return v
        return np.zeros(self.dim or 0, dtype=complex)

    def __call__(self, x) -> np.ndarray:
        """Evaluate at x > 0; returns shape (len(x), dim)."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        out = np.zeros((x.size, self.dim), dtype=complex)
        for q, k, v in self.terms:
            out += np.outer(x ** (-q) * np.log(x) ** k, v)
        return out

    def as_list(self) -> list[dict]:
        out = []
        for q, k, v in self.terms:
            entry = {"q": _real_or_pair(q), "k": k, "coeffs": [float(c.real) for c in v]}
            if np.max(np.abs(v.imag)) > PRUNE_TOL:
                entry["coeffs_imag"] = [float(c.imag) for c in v]
            out.append(entry)
        return out

    def __repr__(self):
        parts = []
        for q, k, v in self.terms:
            nz = np.flatnonzero(np.abs(v) > PRUNE_TOL)
            vec = ", ".join(f"e{i}:{v[i].real:.6g}" for i in nz)
            log = f" log^{k}" if k > 1 else (" log" if k == 1 else "")
            parts.append(f"[{vec}] x^{-q.real:.6g}{log}")
        return " + ".join(parts) or "0"


def _real_or_pair(z: complex):
    if abs(z.imag) <= PRUNE_TOL:
        return float(z.real)
    return [float(z.real), float(z.imag)]


# ---------------------------------------------------------------------------
# conormal families


def conormal_f(k: int, spectrum: Spectrum, warp: WarpData | None = None) -> RationalMatrixFamily:
    n = spectrum.n
    lam = spectrum.diagonal()
    if k == 0:
        return RationalMatrixFamily.diag([Rational.poly([l, -(n - 1), 1.0]) for l in lam])
    if k == 1:
        if warp is None:
            raise DomainError("the first conormal correction needs warp data")
        dp = np.asarray(warp.delta_prime, dtype=float)
        if dp.size != lam.size:
            raise DomainError(f"warp data has {dp.size} coordinates, spectrum has {lam.size}")
        return RationalMatrixFamily.diag([Rational.poly([d, -warp.H_prime0]) for d in dp])
    raise UnsupportedError(f"conormal symbol f_{k} not available: only f_0 and f_1 are modelled")


def shift(family, rho: float):
    """(T^rho h)(z) = h(z + rho); works on a Rational or a matrix family."""
    return family.shift(rho)


def invert_f0(f0: RationalMatrixFamily) -> RationalMatrixFamily:
    """Entrywise inverse of the diagonal frozen symbol, poles factored in closed form."""
    if not f0.is_diagonal():
        raise UnsupportedError("invert_f0 handles the mode-diagonal Laplacian family only")
    out = []
    for entry in f0.diagonal():
        if entry.poles or len(entry.num) != 3 or abs(entry.num[2] - 1.0) > 1e-14:
            raise UnsupportedError("invert_f0 expects monic quadratic diagonal entries")
        c0, c1, _ = entry.num
        half = -c1 / 2.0
        disc = half * half - c0
        s = np.sqrt(complex(disc))
        if abs(s) <= 1e-12:
            out.append(Rational([1.0], ((half, 2),)))
        else:
            out.append(Rational([1.0], ((half - s, 1), (half + s, 1))))
    return RationalMatrixFamily.diag(out)


def g_recursion(fs: list[RationalMatrixFamily], ell_max: int, f0inv: RationalMatrixFamily | None = None):
    """g_0 = 1, g_l = -(T^-l f0^-1) * sum_{j<l} (T^-j f_{l-j}) g_j."""
    size = fs[0].size
    f0inv = invert_f0(fs[0]) if f0inv is None else f0inv
    gs = [RationalMatrixFamily.identity(size)]
    for ell in range(1, ell_max + 1):
        acc = RationalMatrixFamily.zeros(size)
        for j in range(ell):
            k = ell - j
            if k >= len(fs) or fs[k].is_zero() or gs[j].is_zero():
                continue
            acc = acc + fs[k].shift(-j) @ gs[j]
        gs.append(-(f0inv.shift(-ell) @ acc))
    return gs


def recursion_residual(fs, gs, ell: int, z) -> float:
    """Norm of sum_{j<=l} (T^-j f_{l-j})(z) g_j(z); zero for a correct recursion."""
    total = np.zeros((fs[0].size, fs[0].size), dtype=complex)
    for j in range(ell + 1):
        k = ell - j
        if k >= len(fs):
            continue
        total += fs[k](complex(z) - j) @ gs[j](z)
    return float(np.linalg.norm(total))


def principal_part(family: RationalMatrixFamily, sigma, extra_orders: int = 0) -> LaurentSeries:
    return family.laurent(sigma, extra_orders)


# ---------------------------------------------------------------------------
# residue operators


def G_sigma_ell(g_ell: RationalMatrixFamily, f0inv: RationalMatrixFamily, sigma, jet, ell: int = 0) -> AsymptoticFunction:
    """Residue of x^l x^-z g_l(z) Pi_sigma(f0^-1 u)(z) around sigma.

    ``jet[k]`` is the k-th derivative of the Mellin transform of u at sigma.
    Near sigma, x^-z = x^-sigma * sum_k (-log x)^k/k! (z - sigma)^k, so the
    coefficient b of (z - sigma)^-(k+1) contributes (-1)^k/k! b x^(l-sigma) log^k x.
    """
    sigma = complex(sigma)
    size = f0inv.size
    Mf = f0inv.pole_order(sigma)
    if Mf == 0:
        return AsymptoticFunction((), size)
    jet = [np.asarray(v, dtype=complex) for v in jet]
    if len(jet) < Mf:
        raise DomainError(f"jet of length {len(jet)} too short at sigma={sigma:.6g}: need derivatives up to order {Mf - 1}")
    taylor = [jet[k] / math.factorial(k) for k in range(Mf)]
    lf = f0inv.laurent(sigma, 0)
    # principal coefficients p[i] of (z - sigma)^-(i+1), i = 0 .. Mf-1
    p = []
    for i in range(1, Mf + 1):
        acc = np.zeros(size, dtype=complex)
        for k in range(0, Mf - i + 1):
            acc += lf.coefficient(-i - k) @ taylor[k]
        p.append(acc)
    Mg = g_ell.pole_order(sigma)
    lg = g_ell.laurent(sigma, Mf)
    terms = []
    for r in range(1, Mg + Mf + 1):  # coefficient of (z - sigma)^-r
        b = np.zeros(size, dtype=complex)
        for i in range(1, Mf + 1):
            b += lg.coefficient(-r + i) @ p[i - 1]
        k = r - 1
        terms.append((sigma - ell, k, b * (-1) ** k / math.factorial(k)))
    return AsymptoticFunction(terms, size)


def mu_sigma(sigma, mu: int, gamma: float, n: int) -> int:
    """Number of Taylor corrections that reach the window at sigma."""
    v = float(np.real(sigma)) + mu + gamma - (n + 1) / 2.0
    if v <= 0.0:
        return 0
    r = round(v)
    if r >= 1 and abs(v - r) <= 1e-12 * max(1.0, abs(v)):
        raise DomainError(
            f"integer coincidence: Re sigma + mu + gamma - (n+1)/2 = {v:.12g}; "
            "a Taylor correction lands on the window edge"
        )
    return int(math.floor(v))


def kernel_check(asym: AsymptoticFunction, spectrum: Spectrum) -> AsymptoticFunction:
    """Apply the frozen operator termwise.

    A(v x^-q log^k x) = x^-(q+2) sum_i C(k,i) (-1)^i f0^(i)(q) v log^(k-i) x,
    which is the Leibniz rule for (-d/dz)^k applied to x^-2 f0(z) x^-z.
    """
    n = spectrum.n
    lam = spectrum.diagonal()
    terms = []
    for q, k, v in asym.terms:
        derivs = [q * q - (n - 1) * q + lam, np.full(lam.size, 2 * q - (n - 1), dtype=complex), np.full(lam.size, 2.0 + 0j)]
        for i in range(0, min(k, 2) + 1):
            terms.append((q + 2, k - i, math.comb(k, i) * (-1) ** i * derivs[i] * v))
    return AsymptoticFunction(terms, asym.dim)


# ---------------------------------------------------------------------------
# the spaces F_sigma, hat F_sigma and theta


@dataclass
class ConormalData:
    """Symbol data for one cone: spectrum, warp, weight and the operator order."""

    spectrum: Spectrum
    warp: WarpData
    gamma: float
    mu: int = 2

    @cached_property
    def fs(self) -> list[RationalMatrixFamily]:
        return [conormal_f(0, self.spectrum), conormal_f(1, self.spectrum, self.warp)]

    @cached_property
    def f0inv(self) -> RationalMatrixFamily:
        return invert_f0(self.fs[0])

    def g(self, ell: int) -> RationalMatrixFamily:
        cache = self.__dict__.setdefault("_g", [])
        if len(cache) <= ell:
            cache[:] = g_recursion(self.fs, ell, self.f0inv)
        return cache[ell]

    def window(self):
        return pole_window(self.spectrum, self.gamma, self.mu)


@dataclass
class FSigma:
    sigma: complex
    mu_sigma: int
    F_basis: list[AsymptoticFunction]
    Fhat_basis: list[AsymptoticFunction]
    theta: np.ndarray
    expected_dim: int
    jet_order: int
    laurent: dict = field(default_factory=dict, repr=False)

    @property
    def dim(self) -> int:
        return len(self.F_basis)

    def as_dict(self) -> dict:
        return {
            "sigma": _real_or_pair(complex(self.sigma)),
            "mu_sigma": self.mu_sigma,
            "jet_order": self.jet_order,
            "F_basis": [f.as_list() for f in self.F_basis],
            "Fhat_basis": [f.as_list() for f in self.Fhat_basis],
            "theta": _matrix_json(self.theta),
            **({"laurent": self.laurent} if self.laurent else {}),
        }


def _matrix_json(m: np.ndarray):
    m = np.asarray(m)
    if m.size and np.max(np.abs(m.imag)) > PRUNE_TOL:
        return {"re": m.real.tolist(), "im": m.imag.tolist()}
    return np.real(m).tolist()


def _term_key(sigma, q, k, coord):
    shift = int(round((sigma - q).real))
    return (shift, coord, k)


def _to_matrix(funcs: list[AsymptoticFunction], sigma, keys=None):
    if keys is None:
        keys = sorted({_term_key(sigma, q, k, c) for f in funcs for q, k, v in f.terms for c in np.flatnonzero(np.abs(v) > PRUNE_TOL)})
    index = {key: i for i, key in enumerate(keys)}
    mat = np.zeros((len(keys), len(funcs)), dtype=complex)
    for col, f in enumerate(funcs):
        for q, k, v in f.terms:
            for c in np.flatnonzero(np.abs(v) > PRUNE_TOL):
                mat[index[_term_key(sigma, q, k, c)], col] = v[c]
    return mat, keys


def _from_column(col, keys, sigma, dim) -> AsymptoticFunction:
    terms = []
    for val, (shift, coord, k) in zip(col, keys):
        v = np.zeros(dim, dtype=complex)
        v[coord] = val
        terms.append((sigma - shift, k, v))
    return AsymptoticFunction(terms, dim)


def _rref_columns(mat: np.ndarray, tol: float = RANK_TOL) -> np.ndarray:
    """Echelon basis of the column span (rows of the RREF of mat^T, as columns)."""
    a = mat.T.copy()
    rows, cols = a.shape
    scale = max(1.0, float(np.max(np.abs(a), initial=0.0)))
    r = 0
    for c in range(cols):
        if r == rows:
            break
        piv = r + int(np.argmax(np.abs(a[r:, c])))
        if abs(a[piv, c]) <= tol * scale:
            continue
        a[[r, piv]] = a[[piv, r]]
        a[r] /= a[r, c]
        for i in range(rows):
            if i != r:
                a[i] -= a[i, c] * a[r]
        r += 1
    out = a[:r].T
    out[np.abs(out) <= PRUNE_TOL] = 0.0
    return out


def F_sigma(sigma, data: ConormalData, jet_order: int | None = None) -> FSigma:
    """Bases of the full and model asymptotics spaces at sigma and the map theta.

    Both spaces are images of the same jet basis; theta sends G_sigma(u) to
    G_sigma^(0)(u) and is checked to be well defined and invertible.
    """
    sigma = complex(sigma)
    win = data.window()
    if not win.lower < sigma.real < win.upper:
        raise DomainError(f"sigma={sigma.real:.6g} outside the window ({win.lower:.6g}, {win.upper:.6g})")
    size = data.spectrum.dim
    f0inv = data.f0inv
    Mf = f0inv.pole_order(sigma)
    ms = mu_sigma(sigma, data.mu, data.gamma, data.spectrum.n)
    expected = sum(
        r.multiplicity * r.pole_order
        for r in all_roots(data.spectrum)
        if abs(r.value - sigma) <= EXPONENT_TOL * max(1.0, abs(sigma))
    )
    if Mf == 0:
        empty = np.zeros((0, 0))
        return FSigma(sigma, ms, [], [], empty, expected, 0)
    order = Mf + ms + 1 if jet_order is None else jet_order
    full, model = [], []
    for k in range(order):
        for c in range(size):
            jet = [np.zeros(size, dtype=complex) for _ in range(order)]
            jet[k][c] = 1.0
            g0 = G_sigma_ell(data.g(0), f0inv, sigma, jet, 0)
            total = g0
            for ell in range(1, ms + 1):
                total = total + G_sigma_ell(data.g(ell), f0inv, sigma, jet, ell)
            full.append(total)
            model.append(g0)
    A, keys = _to_matrix(full + model, sigma)
    A_full, A_model = A[:, : len(full)], A[:, len(full):]
    rank_full = np.linalg.matrix_rank(A_full, tol=RANK_TOL)
    rank_model = np.linalg.matrix_rank(A_model, tol=RANK_TOL)
    rank_joint = np.linalg.matrix_rank(np.vstack([A_full, A_model]), tol=RANK_TOL)
    if not rank_full == rank_model == rank_joint == expected:
        raise NumericalError(
            f"theta at sigma={sigma.real:.6g} is not a well-defined isomorphism: rank G={rank_full}, "
            f"rank G0={rank_model}, joint={rank_joint}, expected {expected}"
        )
    F_cols = _rref_columns(A_full)
    Fh_cols = _rref_columns(A_model)
    # theta: for each F basis vector find jets c with A_full c = F, map by A_model
    coeffs, *_ = np.linalg.lstsq(A_full, F_cols, rcond=None)
    images = A_model @ coeffs
    theta, *_ = np.linalg.lstsq(Fh_cols, images, rcond=None)
    if np.linalg.norm(Fh_cols @ theta - images) > 1e-8 or np.linalg.cond(theta) > 1e12:
        raise NumericalError(f"theta at sigma={sigma.real:.6g} is singular or inconsistent")
    theta[np.abs(theta) <= PRUNE_TOL] = 0.0
    F_basis = [_from_column(F_cols[:, i], keys, sigma, size) for i in range(F_cols.shape[1])]
    Fh_basis = [_from_column(Fh_cols[:, i], keys, sigma, size) for i in range(Fh_cols.shape[1])]
    lf = f0inv.laurent(sigma, 0)
    laurent = {"pole_order": Mf, "principal": [_matrix_json(np.diag(c)) for c in lf.principal_coefficients()]}
    return FSigma(sigma, ms, F_basis, Fh_basis, theta, expected, order, laurent)


def poles_in_window(data: ConormalData) -> list[float]:
    """Distinct pole locations of f0^-1 inside the window."""
    out = []
    for r in data.window().roots:
        if all(abs(r.q - s) > EXPONENT_TOL for s in out):
            out.append(r.q)
    return out
