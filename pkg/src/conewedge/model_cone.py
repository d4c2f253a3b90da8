"""Resolvent of the frozen-coefficient cone Laplacian, one eigenmode at a time.

On the model cone (0, inf) x Y the operator -Delta decouples over the
cross-section eigenbasis into

    A_j = -x^-2 ((x d/dx)^2 + (n-1) x d/dx + lambda_j),

which is nonnegative, so resolvent sectors live in C minus the positive
axis.  With t = log x the resolvent equation (lambda - A_j) u = f becomes

    u_tt + (n-1) u_t + (lambda_j + lambda e^{2t}) u = e^{2t} f,

a constant-coefficient stencil apart from the e^{2t} factor.  That makes
dilations exact integer shifts on a uniform t-grid.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from .domains import DomainDescriptor, _rank
from .errors import DomainError, NumericalError, UnsupportedError
from .indicial import indicial_roots


@dataclass(frozen=True)
class SectorSpec:
    """Rays arg(lambda) in [theta, 2 pi - theta] and log-spaced moduli."""

    theta: float
    args: tuple[float, ...]
    moduli: tuple[float, ...]

    def __post_init__(self):
        if not 0.0 < self.theta < math.pi:
            raise DomainError(f"sector half-angle must lie in (0, pi), got {self.theta}")
        for a in self.args:
            a = a % (2 * math.pi)
            if not self.theta - 1e-12 <= a <= 2 * math.pi - self.theta + 1e-12:
                raise DomainError(f"ray arg {a:.6g} leaves the sector [{self.theta:.6g}, {2 * math.pi - self.theta:.6g}]")
        if any(m <= 0 for m in self.moduli):
            raise DomainError("sample moduli must be positive")

    @classmethod
    def rays(cls, degrees, lmin=1.0, lmax=1e4, per_decade=3, theta=None):
        args = tuple(math.radians(d) for d in degrees)
        if theta is None:
            theta = min(min(a % (2 * math.pi), 2 * math.pi - a % (2 * math.pi)) for a in args)
        count = max(2, int(round(per_decade * math.log10(lmax / lmin))) + 1)
        return cls(theta, args, tuple(np.geomspace(lmin, lmax, count)))

    def samples(self):
        for a in self.args:
            for m in self.moduli:
                yield a, m, m * complex(math.cos(a), math.sin(a))


@dataclass(frozen=True)
class LogGrid:
    """Uniform nodes in t = log x on [log x_min, log x_max]."""

    x_min: float
    x_max: float
    nodes: int

    def __post_init__(self):
        if not 0 < self.x_min < 1 < self.x_max:
            raise DomainError(f"need x_min < 1 < x_max, got {self.x_min}, {self.x_max}")
        if self.nodes < 256:
            raise DomainError(f"mode grids need at least 256 nodes, got {self.nodes}")

    @property
    def t(self) -> np.ndarray:
        return np.linspace(math.log(self.x_min), math.log(self.x_max), self.nodes)

    @property
    def h(self) -> float:
        return (math.log(self.x_max) - math.log(self.x_min)) / (self.nodes - 1)

    @classmethod
    def with_spacing(cls, x_min, x_max, h):
        nodes = int(round((math.log(x_max) - math.log(x_min)) / h)) + 1
        return cls(x_min, x_max, nodes)

    def refined(self) -> "LogGrid":
        return LogGrid(self.x_min, self.x_max, 2 * self.nodes - 1)


class WeightedNorm:
    """Discrete K^{0,gamma} norm: integral of |x^{(n+1)/2 - gamma} u|^2 dx/x.

    Node i carries the exact integral of e^{2 beta t} over its dual cell.
    """

    def __init__(self, grid: LogGrid, gamma: float, n: int):
        self.grid = grid
        self.gamma = gamma
        self.n = n
        self.beta = (n + 1) / 2.0 - gamma
        t = grid.t
        edges = np.concatenate([[t[0]], 0.5 * (t[1:] + t[:-1]), [t[-1]]])
        a, b = edges[:-1], edges[1:]
        if abs(self.beta) < 1e-14:
            w = b - a
        else:
            tb = 2 * self.beta
            # e^{tb b} - e^{tb a} without cancellation
            w = np.exp(tb * a) * np.expm1(tb * (b - a)) / tb
        self.weights = w
        self.sqrt_w = np.sqrt(w)

    def cell_measure(self, i: int) -> float:
        t = self.grid.t
        lo = t[0] if i == 0 else 0.5 * (t[i - 1] + t[i])
        hi = t[-1] if i == len(t) - 1 else 0.5 * (t[i] + t[i + 1])
        if abs(self.beta) < 1e-14:
            return hi - lo
        return (math.exp(2 * self.beta * hi) - math.exp(2 * self.beta * lo)) / (2 * self.beta)

    def norm(self, u) -> float:
        u = np.asarray(u)
        return float(np.sqrt(np.sum(self.weights * np.abs(u) ** 2)))


@dataclass(frozen=True)
class ModeProblem:
    """One eigenmode with the tip exponent its domain admits."""

    mode: int
    lam_j: float
    n: int
    gamma: float
    tip_q: float
    grid: LogGrid

    def matrix(self, lam: complex) -> sp.csc_matrix:
        """Stencil of u_tt + (n-1) u_t + (lambda_j + lam e^{2t}) u with boundary ghosts eliminated."""
        N, h = self.grid.nodes, self.grid.h
        t = self.grid.t
        c = (self.n - 1) / (2 * h)
        lower = np.full(N - 1, 1 / h**2 - c, dtype=complex)
        upper = np.full(N - 1, 1 / h**2 + c, dtype=complex)
        diag = -2 / h**2 + self.lam_j + lam * np.exp(2 * t)
        diag = diag.astype(complex)
        # tip: u_t + q u = 0, ghost u_{-1} = u_1 + 2 h q u_0
        wl = 1 / h**2 - c
        upper[0] += wl
        diag[0] += wl * 2 * h * self.tip_q
        # far field: u_t = (-kappa x - n/2) u, ghost u_N = u_{N-2} + 2 h r u_{N-1}
        kappa = np.sqrt(-complex(lam))
        if kappa.real <= 0:
            raise DomainError(f"lambda={lam} on the positive axis: no decaying far-field branch")
        r = -kappa * math.exp(t[-1]) - self.n / 2.0
        wu = 1 / h**2 + c
        lower[-1] += wu
        diag[-1] += wu * 2 * h * r
        return sp.diags([lower, diag, upper], [-1, 0, 1], format="csc")

    def apply(self, lam: complex, u) -> np.ndarray:
        """(lam - A_j) u on the grid, i.e. the matrix times u divided by e^{2t}."""
        return (self.matrix(lam) @ np.asarray(u, dtype=complex)) * np.exp(-2 * self.grid.t)


def tip_exponent(descriptor: DomainDescriptor, mode: int) -> float:
    """The single exponent q with x^-q admitted at the tip for this mode."""
    spec = descriptor.spectrum
    qm, qp = indicial_roots(spec, mode)
    lower = (spec.n + 1) / 2.0 - descriptor.gamma - 2
    allowed = []
    candidates = [qm] if qm.pole_order == 2 else [qm, qp]
    for r in candidates:
        if r.q <= lower:
            allowed.append(r.q)
            continue
        try:
            i = descriptor.index_of(r.q)
        except KeyError:
            continue  # above the window: never admitted
        sp_ = descriptor.spaces[i]
        if sp_.root.mode != mode:
            continue
        c = descriptor.choices[i]
        rank = _rank(c)
        if sp_.structure == "log-pair":
            label = descriptor.label(i)
            if label == "const":
                allowed.append(r.q)
            elif label == "full":
                allowed.extend([r.q, r.q])
            continue
        if rank == sp_.dim:
            allowed.append(r.q)
        elif rank:
            raise UnsupportedError("partial choices inside an eigenspace are not probed")
    if len(allowed) != 1:
        raise DomainError(
            f"mode {mode}: the domain admits {len(allowed)} tip exponents; the model resolvent "
            "needs exactly one for a well-posed mode problem"
        )
    return allowed[0]


def mode_problem(descriptor: DomainDescriptor, mode: int, grid: LogGrid) -> ModeProblem:
    spec = descriptor.spectrum
    return ModeProblem(mode, spec.eigenvalues[mode], spec.n, descriptor.gamma, tip_exponent(descriptor, mode), grid)


def mode_resolvent_solve(problem: ModeProblem, lam: complex, f) -> np.ndarray:
    f = np.asarray(f, dtype=complex)
    A = problem.matrix(lam)
    try:
        lu = splu(A)
    except RuntimeError as exc:
        raise NumericalError(f"singular mode system at lambda={lam}, nodes={problem.grid.nodes}") from exc
    u = lu.solve(np.exp(2 * problem.grid.t) * f)
    if not np.all(np.isfinite(u)):
        raise NumericalError(f"non-finite mode solution at lambda={lam}, nodes={problem.grid.nodes}")
    return u


@dataclass
class NormEstimate:
    value: float
    converged: bool
    iterations: int


def resolvent_norm(problem: ModeProblem, lam: complex, norm: WeightedNorm, rng, iters: int = 20, tol: float = 1e-6) -> NormEstimate:
    """Power iteration for || lam (lam - A_j)^-1 || in the weighted norm."""
    A = problem.matrix(lam)
    lu = splu(A)
    s = norm.sqrt_w
    e2t = np.exp(2 * problem.grid.t)

    def M(v):  # weighted lam R
        return lam * s * lu.solve(e2t * (v / s))

    def MH(v):
        return np.conj(lam) * (e2t * lu.solve(s * v, trans="H")) / s

    v = rng.normal(size=A.shape[0]) + 1j * rng.normal(size=A.shape[0])
    v /= np.linalg.norm(v)
    prev = 0.0
    for it in range(1, iters + 1):
        w = MH(M(v))
        rq = float(np.real(np.vdot(v, w)))
        nw = np.linalg.norm(w)
        if not np.isfinite(nw) or nw == 0:
            raise NumericalError(f"power iteration broke down at lambda={lam}")
        v = w / nw
        if it > 1 and abs(rq - prev) <= tol * abs(rq):
            return NormEstimate(math.sqrt(rq), True, it)
        prev = rq
    return NormEstimate(math.sqrt(max(prev, 0.0)), False, iters)


@dataclass
class ProbeRow:
    arg: float
    modulus: float
    estimate: float
    mode: int
    converged: bool
    nodes: int
    truncation_delta: float | None = None


@dataclass
class ProbeResult:
    rows: list[ProbeRow] = field(default_factory=list)

    @property
    def sup(self) -> float:
        return max(r.estimate for r in self.rows)

    def ray_sup(self, arg: float) -> float:
        return max(r.estimate for r in self.rows if abs(r.arg - arg) < 1e-12)

    def profile(self, arg: float) -> list[tuple[float, float]]:
        return [(r.modulus, r.estimate) for r in self.rows if abs(r.arg - arg) < 1e-12]

    @property
    def all_converged(self) -> bool:
        return all(r.converged for r in self.rows)


def _probe_once(descriptor, sector, grid, seed):
    spec = descriptor.spectrum
    problems = [mode_problem(descriptor, j, grid) for j in range(spec.J)]
    wn = WeightedNorm(grid, descriptor.gamma, spec.n)
    rows = []
    for k, (arg, mod, lam) in enumerate(sector.samples()):
        best = None
        for p in problems:
            rng = np.random.default_rng([seed, k, p.mode])
            est = resolvent_norm(p, lam, wn, rng)
            if best is None or est.value > best[0].value:
                best = (est, p.mode)
        rows.append(ProbeRow(arg, mod, best[0].value, best[1], best[0].converged, grid.nodes))
    return rows


def sectoriality_probe(
    descriptor: DomainDescriptor,
    sector: SectorSpec,
    x_min: float = 1e-5,
    x_max: float = 100.0,
    nodes: int = 2048,
    seed: int = 0,
    truncation_check: bool = True,
) -> ProbeResult:
    """Estimate sup ||lam (lam - A)^-1|| over the sampled sector, maximised over modes.

    With ``truncation_check`` the probe is repeated with x_min halved and x_max
    doubled at the same spacing; each row records the relative change.
    """
    grid = LogGrid(x_min, x_max, nodes)
    rows = _probe_once(descriptor, sector, grid, seed)
    if truncation_check:
        wide = LogGrid.with_spacing(x_min / 2, 2 * x_max, grid.h)
        for r, w in zip(rows, _probe_once(descriptor, sector, wide, seed)):
            r.truncation_delta = abs(w.estimate - r.estimate) / r.estimate
    return ProbeResult(rows)


def positive_axis_scan(descriptor: DomainDescriptor, moduli, x_min=1e-5, x_max=100.0, nodes=2048, seed=0, offset=1e-9) -> float:
    """Largest resolvent estimate just above the positive axis, where sectoriality must fail."""
    grid = LogGrid(x_min, x_max, nodes)
    wn = WeightedNorm(grid, descriptor.gamma, descriptor.spectrum.n)
    best = 0.0
    for k, m in enumerate(moduli):
        lam = m * complex(math.cos(offset), math.sin(offset))
        for j in range(descriptor.spectrum.J):
            p = mode_problem(descriptor, j, grid)
            est = resolvent_norm(p, lam, wn, np.random.default_rng([seed, k, j]))
            best = max(best, est.value)
    return best


# ---------------------------------------------------------------------------
# dilations


def kappa(u, grid: LogGrid, rho: float, n: int) -> tuple[np.ndarray, np.ndarray]:
    """(kappa_rho u)(x) = rho^{(n+1)/2} u(rho x) as an integer shift in t.

    Returns values and a mask of nodes where the shifted data is defined.
    """
    s = math.log(rho) / grid.h
    shift = int(round(s))
    if abs(s - shift) > 1e-9:
        raise DomainError(f"log(rho)/h = {s:.6g} is not an integer: rho shifts data off the grid")
    u = np.asarray(u)
    out = np.zeros_like(u)
    mask = np.zeros(u.shape, dtype=bool)
    N = u.size
    if shift >= 0:
        out[: N - shift] = u[shift:]
        mask[: N - shift] = True
    else:
        out[-shift:] = u[: N + shift]
        mask[-shift:] = True
    return rho ** ((n + 1) / 2.0) * out, mask


def dilation_check(descriptor: DomainDescriptor, mode: int, eta: complex, rho: float, f, grid: LogGrid) -> float:
    """Relative K^{0,0} error of (eta^2 - A)^-1 f against rho^-2 kappa ((eta/rho)^2 - A)^-1 kappa^-1 f."""
    n = descriptor.spectrum.n
    p = mode_problem(descriptor, mode, grid)
    f = np.asarray(f, dtype=complex)
    lhs = mode_resolvent_solve(p, eta**2, f)
    g, gmask = kappa(f, grid, 1.0 / rho, n)
    if np.max(np.abs(f[~_inverse_mask(gmask, grid, rho)]), initial=0.0) > 1e-12 * np.max(np.abs(f)):
        raise DomainError("kappa_rho^-1 f leaves the grid: the data must vanish near the ends")
    w = mode_resolvent_solve(p, (eta / rho) ** 2, g)
    rhs, mask = kappa(w, grid, rho, n)
    rhs = rhs / rho**2
    wn = WeightedNorm(grid, 0.0, n)
    diff = np.where(mask, lhs - rhs, 0.0)
    ref = np.where(mask, lhs, 0.0)
    return wn.norm(diff) / wn.norm(ref)


def _inverse_mask(gmask, grid, rho):
    """Nodes of f that survive the shift by 1/rho."""
    shift = int(round(math.log(1.0 / rho) / grid.h))
    N = gmask.size
    keep = np.zeros(N, dtype=bool)
    if shift >= 0:
        keep[shift:] = True
    else:
        keep[: N + shift] = True
    return keep
