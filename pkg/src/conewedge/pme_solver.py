"""Porous medium flow v' = m v^{(m-1)/m} Delta v + g(v) on a truncated 2-D wedge.

The wedge {0 < x <= 1, 0 <= y <= L} carries the cone metric dx^2 + x^2 dy^2,
so with s = log x

    Delta v = x^-2 (v_ss + v_yy).

Grid: uniform in s on [log x_min, 0], cell-centred in y with reflecting
(Neumann) ends.  The y-stencil has exact discrete cosines as eigenvectors.
At x = 1 a Neumann face closes the domain; at the tip each cosine mode is
forced onto its bounded branch x^{q_k} via the ghost value
u_{-1} = u_1 - 2 h S u_0 with S = sqrt(-D_yy).  Every operator is applied in
edge-difference form so constants are annihilated exactly.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.sparse as sp
from scipy.fft import dct
from scipy.linalg import eigh
from scipy.sparse.linalg import splu

from .errors import ConfigError, DomainError, NumericalError, PositivityError

PICARD_MAX = 5
PICARD_TOL = 1e-8


def _dyy(K: int, dy: float) -> np.ndarray:
    D = np.zeros((K, K))
    for k in range(K):
        if k > 0:
            D[k, k - 1] = 1.0
            D[k, k] -= 1.0
        if k < K - 1:
            D[k, k + 1] = 1.0
            D[k, k] -= 1.0
    return D / dy**2


def _sqrt_neg(D: np.ndarray) -> np.ndarray:
    w, V = eigh(-D)
    S = (V * np.sqrt(np.clip(w, 0.0, None))) @ V.T
    S = 0.5 * (S + S.T)
    S -= np.diag(S.sum(axis=1))  # constants exactly in the kernel
    return S


@dataclass(frozen=True)
class WedgeGrid:
    L: float
    x_min: float = 1e-5
    nx: int = 400
    ny: int = 32

    def __post_init__(self):
        if not self.L > 0:
            raise DomainError(f"wedge opening must be positive, got {self.L}")
        if not 0 < self.x_min <= 1e-4:
            raise DomainError(f"x_min must lie in (0, 1e-4] to resolve the tip, got {self.x_min}")
        if self.nx < 16 or self.ny < 4:
            raise DomainError("wedge grid too coarse (need nx >= 16, ny >= 4)")

    @property
    def s(self) -> np.ndarray:
        return np.linspace(math.log(self.x_min), 0.0, self.nx)

    @property
    def x(self) -> np.ndarray:
        return np.exp(self.s)

    @property
    def h(self) -> float:
        return -math.log(self.x_min) / (self.nx - 1)

    @property
    def dy(self) -> float:
        return self.L / self.ny

    @property
    def y(self) -> np.ndarray:
        return (np.arange(self.ny) + 0.5) * self.dy

    @property
    def shape(self) -> tuple[int, int]:
        return (self.nx, self.ny)

    def refined(self) -> "WedgeGrid":
        return WedgeGrid(self.L, self.x_min, 2 * self.nx - 1, 2 * self.ny)

    def mode_eigenvalues(self) -> np.ndarray:
        """Discrete eigenvalues of D_yy on the cosine modes k = 0 .. ny-1."""
        k = np.arange(self.ny)
        return -(4.0 / self.dy**2) * np.sin(np.pi * k / (2 * self.ny)) ** 2

    def mass_weights(self) -> np.ndarray:
        """Quadrature for the measure x dx dy = e^{2s} ds dy."""
        trap = np.full(self.nx, 1.0)
        trap[0] = trap[-1] = 0.5
        return (np.exp(2 * self.s) * self.h * trap)[:, None] * np.full(self.ny, self.dy)[None, :]


class _Operators:
    """Cached stencils for one grid."""

    def __init__(self, grid: WedgeGrid):
        self.grid = grid
        self.Dyy = _dyy(grid.ny, grid.dy)
        self.S = _sqrt_neg(self.Dyy)
        self._matrix = None

    def apply(self, v: np.ndarray) -> np.ndarray:
        g = self.grid
        h2 = g.h**2
        out = np.zeros_like(v)
        dv = np.diff(v, axis=0)  # edge differences v_{i+1} - v_i
        out[1:-1] = (dv[1:] - dv[:-1]) / h2
        out[-1] = -2.0 * dv[-1] / h2
        # S v in edge form: sum_l S_kl (v_l - v_k)
        Sv = np.sum(self.S * (v[0][None, :] - v[0][:, None]), axis=1)
        out[0] = (2.0 * dv[0] - 2.0 * g.h * Sv) / h2
        dy = np.diff(v, axis=1)
        yy = np.zeros_like(v)
        yy[:, 1:] -= dy
        yy[:, :-1] += dy
        out += yy / g.dy**2
        return out * np.exp(-2 * g.s)[:, None]

    def matrix(self) -> sp.csr_matrix:
        """Sparse Delta_h on the flattened (x-major) field."""
        if self._matrix is not None:
            return self._matrix
        g = self.grid
        nx, ny, h = g.nx, g.ny, g.h
        Dx = sp.diags([np.ones(nx - 1), -2 * np.ones(nx), np.ones(nx - 1)], [-1, 0, 1], format="lil")
        Dx[0, 1] = 2.0
        Dx[nx - 1, nx - 2] = 2.0
        Dx = Dx.tocsr() / h**2
        tip = sp.lil_matrix((nx, nx))
        tip[0, 0] = 1.0
        A = sp.kron(Dx, sp.identity(ny)) + sp.kron(tip, sp.csr_matrix(-2.0 / h * self.S)) + sp.kron(sp.identity(nx), sp.csr_matrix(self.Dyy))
        A = sp.diags(np.repeat(np.exp(-2 * g.s), ny)) @ A
        self._matrix = A.tocsr()
        return self._matrix


_OPS: dict = {}


def _ops(grid: WedgeGrid) -> _Operators:
    if grid not in _OPS:
        _OPS.clear()
        _OPS[grid] = _Operators(grid)
    return _OPS[grid]


def laplacian_apply(v: np.ndarray, grid: WedgeGrid) -> np.ndarray:
    """Discrete x^-2 ((x d/dx)^2 + d^2/dy^2) v with the wedge closures."""
    v = np.asarray(v, dtype=float)
    if v.shape != grid.shape:
        raise DomainError(f"field shape {v.shape} does not match grid {grid.shape}")
    return _ops(grid).apply(v)


def laplacian_matrix(grid: WedgeGrid) -> sp.csr_matrix:
    return _ops(grid).matrix()


# ---------------------------------------------------------------------------
# forcing recipes


@dataclass(frozen=True)
class Forcing:
    recipe: str
    fn: Callable = field(repr=False, compare=False)

    def __call__(self, t, v):
        return self.fn(t, v)


def parse_forcing(recipe: str | None) -> Forcing:
    """'none' | 'const c' | 'logistic a,b' (a v (1 - v/b)); entire functions of v only."""
    text = (recipe or "none").strip()
    if text == "none":
        return Forcing("none", lambda t, v: np.zeros_like(v))
    m = re.fullmatch(r"const\s+([-+0-9.eE]+)", text)
    if m:
        c = float(m.group(1))
        return Forcing(text, lambda t, v: np.full_like(v, c))
    m = re.fullmatch(r"logistic\s+([-+0-9.eE]+)\s*,\s*([-+0-9.eE]+)", text)
    if m:
        a, b = float(m.group(1)), float(m.group(2))
        if b == 0:
            raise ConfigError([f"forcing {text!r}: logistic capacity b must be nonzero"])
        return Forcing(text, lambda t, v: a * v * (1.0 - v / b))
    raise ConfigError([f"forcing {text!r} not recognised; use none | const c | logistic a,b"])


# ---------------------------------------------------------------------------
# time stepping


@dataclass(frozen=True)
class PMEState:
    t: float
    v: np.ndarray
    m: float
    alpha: float

    def __post_init__(self):
        if not self.m > 0:
            raise DomainError(f"PME exponent m must be positive, got {self.m}")
        if not self.alpha > 0:
            raise DomainError(f"positivity floor alpha must be positive, got {self.alpha}")


def pme_step_imex(state: PMEState, grid: WedgeGrid, tau: float, g: Forcing | None = None) -> PMEState:
    """Backward Euler with the diffusion coefficient m w^{(m-1)/m} refreshed by Picard iteration.

    Each sweep solves (I - tau a(w) Delta) d = tau (a(w) Delta v + g(w)) for the
    increment d, then sets w = v + d.  A breach of v >= alpha/2 raises
    PositivityError carrying the last valid state.
    """
    g = g or parse_forcing("none")
    A = laplacian_matrix(grid)
    v = state.v
    lap_v = laplacian_apply(v, grid).ravel()
    m = state.m
    w = v.ravel()
    d = np.zeros_like(w)
    for _ in range(PICARD_MAX):
        if np.min(w) <= 0:
            raise PositivityError(f"iterate left the positive cone at t={state.t:.6g}").with_state(state)
        a = m * w ** ((m - 1.0) / m)
        rhs = tau * (a * lap_v + g(state.t + tau, w.reshape(grid.shape)).ravel())
        if not np.any(rhs):
            d_new = np.zeros_like(rhs)
        else:
            M = sp.identity(w.size, format="csc") - tau * (sp.diags(a) @ A)
            d_new = splu(M.tocsc()).solve(rhs)
        change = np.max(np.abs(d_new - d))
        d = d_new
        w = v.ravel() + d
        if change <= PICARD_TOL * max(1.0, np.max(np.abs(w))):
            break
    vnew = w.reshape(grid.shape)
    if not np.all(np.isfinite(vnew)):
        raise NumericalError(f"non-finite PME state after t={state.t:.6g}")
    if np.min(vnew) < state.alpha / 2:
        raise PositivityError(
            f"min v = {np.min(vnew):.6g} fell below alpha/2 = {state.alpha / 2:.6g} at t={state.t + tau:.6g}"
        ).with_state(state)
    return PMEState(state.t + tau, vnew, m, state.alpha)


def step_matrix(state: PMEState, grid: WedgeGrid, tau: float) -> sp.csr_matrix:
    """The frozen-coefficient matrix I - tau a(v) Delta_h of one Picard sweep."""
    a = state.m * state.v.ravel() ** ((state.m - 1.0) / state.m)
    return (sp.identity(a.size) - tau * (sp.diags(a) @ laplacian_matrix(grid))).tocsr()


def is_m_matrix(M: sp.spmatrix) -> bool:
    """Z-matrix with positive diagonal and weak row diagonal dominance."""
    M = sp.csr_matrix(M)
    diag = M.diagonal()
    off = M - sp.diags(diag)
    if off.nnz and off.data.max() > 1e-12 * np.max(np.abs(diag)):
        return False
    rows = diag + np.asarray(off.sum(axis=1)).ravel()
    return bool(np.all(diag > 0) and np.all(rows >= -1e-9 * np.abs(diag)))


# ---------------------------------------------------------------------------
# diagnostics


def mode_amplitudes(v: np.ndarray) -> np.ndarray:
    """Cosine amplitudes a_k(x) with v = a_0 + sum_k a_k cos(k pi y / L)."""
    a = dct(v, type=2, axis=1, norm=None) / v.shape[1]
    a[:, 0] *= 0.5
    return a


def weighted_norm(v: np.ndarray, grid: WedgeGrid) -> float:
    return float(np.sqrt(np.sum(grid.mass_weights() * v**2)))


def mass(v: np.ndarray, grid: WedgeGrid) -> float:
    return float(np.sum(grid.mass_weights() * v))


@dataclass
class Trajectory:
    grid: WedgeGrid
    times: list[float]
    states: list[np.ndarray]
    min_v: list[float]
    tip_value: list[float]
    halted: bool = False
    halt_reason: str = ""

    @property
    def final(self) -> np.ndarray:
        return self.states[-1]

    def summary(self, fit_modes=(0, 1, 2)) -> dict:
        fits = tip_exponent_fit(self, modes=fit_modes)
        return {
            "c_of_t": [float(c) for c in self.tip_value],
            "times": [float(t) for t in self.times],
            "exponents": {str(k): v for k, v in fits.items()},
            "min_v": float(min(self.min_v)),
            "converged": not self.halted,
            **({"halt_reason": self.halt_reason} if self.halted else {}),
        }


def clement_li_window_check(p: float, q: float, n: int, delta: float) -> bool:
    """True iff (n+1)/p + 2/q < 1 and 2/q < delta."""
    return (n + 1) / p + 2.0 / q < 1.0 and 2.0 / q < delta


def pme_solve(
    v0: np.ndarray,
    grid: WedgeGrid,
    T: float,
    tau: float,
    m: float = 2.0,
    g: Forcing | None = None,
    alpha: float | None = None,
    save_every: int = 1,
    window: tuple[float, float, float] | None = None,
) -> Trajectory:
    """Integrate to time T; halts cleanly if v drops below alpha/2.

    ``window`` = (p, q, delta) runs the exponent-window check first.
    """
    v0 = np.asarray(v0, dtype=float)
    if v0.shape != grid.shape:
        raise DomainError(f"initial data shape {v0.shape} does not match grid {grid.shape}")
    if not np.all(np.isfinite(v0)) or np.min(v0) <= 0:
        raise DomainError("initial data must be finite and strictly positive")
    if window is not None and not clement_li_window_check(window[0], window[1], 1, window[2]):
        raise DomainError(f"exponents p={window[0]}, q={window[1]} violate the solvability window for delta={window[2]}")
    alpha = float(np.min(v0)) if alpha is None else alpha
    state = PMEState(0.0, v0.copy(), m, alpha)
    steps = int(round(T / tau))
    if steps < 1 or abs(steps * tau - T) > 1e-9 * T:
        raise DomainError(f"T={T} is not a whole number of steps tau={tau}")
    traj = Trajectory(grid, [0.0], [v0.copy()], [float(v0.min())], [float(mode_amplitudes(v0)[0, 0])])
    for k in range(1, steps + 1):
        try:
            state = pme_step_imex(state, grid, tau, g)
        except PositivityError as exc:
            traj.halted = True
            traj.halt_reason = str(exc)
            break
        traj.min_v.append(float(state.v.min()))
        traj.tip_value.append(float(mode_amplitudes(state.v)[0, 0]))
        if k % save_every == 0 or k == steps:
            traj.times.append(state.t)
            traj.states.append(state.v.copy())
    if traj.times[-1] != state.t:
        traj.times.append(state.t)
        traj.states.append(state.v.copy())
    return traj


def tip_exponent_fit(traj: Trajectory, modes=(0, 1), decades: float = 2.0, skip: int = 2) -> dict:
    """Least-squares slope of log|a_k| against log x over the first decades above x_min.

    The first ``skip`` nodes are left out; they carry the tip closure.
    Modes whose amplitude falls under 1e-12 are skipped (None).  Mode 0 tends
    to the tip value c(t), so its slope is near 0.
    """
    grid = traj.grid
    a = mode_amplitudes(traj.final)
    x = grid.x
    sel = (np.arange(grid.nx) >= skip) & (x <= grid.x_min * 10**(decades + 0.5))
    out = {}
    for k in modes:
        amp = np.abs(a[sel, k])
        if np.min(amp) < 1e-12:
            out[k] = None
            continue
        out[k] = float(np.polyfit(np.log(x[sel]), np.log(amp), 1)[0])
    return out


def tau_convergence_order(v0: np.ndarray, grid: WedgeGrid, T: float, tau: float, m: float = 2.0, g: Forcing | None = None) -> dict:
    """Observed temporal order from runs at tau, tau/2, tau/4 (same grid).

    Differences between successive runs are measured in the x dx dy norm, so
    order = log2(|v_tau - v_tau/2| / |v_tau/2 - v_tau/4|).
    """
    finals = [pme_solve(v0, grid, T, tau / 2**k, m, g).final for k in range(3)]
    d1 = weighted_norm(finals[0] - finals[1], grid)
    d2 = weighted_norm(finals[1] - finals[2], grid)
    return {"differences": [d1, d2], "order": float(np.log2(d1 / d2)) if d2 > 0 else float("inf")}
