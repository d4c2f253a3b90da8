"""Asymptotics spaces, closed extensions and their adjoints.

A closed extension of the cone Laplacian is the minimal domain plus a
subspace of the finite-dimensional asymptotics space E^gamma.  Subspaces are
stored per indicial root as coefficient matrices over that root's *atoms*,
the elementary functions e_c x^-q log^k x with e_c an eigenbasis vector.
Subspace comparisons go through ranks, never through basis identity.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import null_space, orth

from .cross_section import Spectrum, WarpData
from .errors import DomainError, EndpointCoincidenceError, HypothesisError, NumericalError
from .indicial import IndicialRoot, gamma_window, pole_window
from .mellin_symbolic import ConormalData, F_sigma

RANK_TOL = 1e-10


def _rank(m) -> int:
    m = np.asarray(m)
    if m.size == 0:
        return 0
    return int(np.linalg.matrix_rank(m, tol=RANK_TOL))


def same_subspace(a: np.ndarray, b: np.ndarray) -> bool:
    ra, rb = _rank(a), _rank(b)
    if ra != rb:
        return False
    if ra == 0:
        return True
    return _rank(np.hstack([a, b])) == ra


@dataclass(frozen=True)
class AsymptoticSpace:
    """The space E_q attached to one indicial root."""

    root: IndicialRoot
    coords: tuple[int, ...]

    @property
    def structure(self) -> str:
        return "log-pair" if self.root.pole_order == 2 else "plain"

    @property
    def atoms(self) -> list[tuple[float, int, int]]:
        ks = (0, 1) if self.structure == "log-pair" else (0,)
        return [(self.root.q, k, c) for k in ks for c in self.coords]

    @property
    def dim(self) -> int:
        return len(self.atoms)

    def key(self) -> str:
        return f"q{self.root.sign}{self.root.mode}"


def _spaces(spectrum: Spectrum, gamma: float) -> tuple[AsymptoticSpace, ...]:
    win = pole_window(spectrum, gamma, 2)
    return tuple(AsymptoticSpace(r, tuple(range(spectrum.block(r.mode).start, spectrum.block(r.mode).stop))) for r in win.roots)


@dataclass
class DomainDescriptor:
    """Minimal domain K^{2,gamma+2} (with the boundary condition) plus chosen asymptotics."""

    spectrum: Spectrum
    gamma: float
    spaces: tuple[AsymptoticSpace, ...]
    choices: list[np.ndarray]
    bc: str = "neumann"
    p: float = 2.0
    mu: int = 2

    def __post_init__(self):
        if len(self.choices) != len(self.spaces):
            raise DomainError("one choice per asymptotics space is required")
        fixed = []
        for sp, c in zip(self.spaces, self.choices):
            c = np.asarray(c, dtype=complex).reshape(sp.dim, -1)
            if sp.structure == "log-pair":
                _check_log_pair_choice(sp, c)
            fixed.append(c)
        self.choices = fixed

    @property
    def minimal_tag(self) -> str:
        return f"K^{{2,{self.gamma + 2:g}}} with {self.bc} condition"

    @property
    def atoms(self) -> list[tuple[float, int, int]]:
        return [a for sp in self.spaces for a in sp.atoms]

    @property
    def dim_total(self) -> int:
        return sum(sp.dim for sp in self.spaces)

    @property
    def dim(self) -> int:
        return sum(_rank(c) for c in self.choices)

    def basis(self) -> np.ndarray:
        """Block-diagonal basis of the chosen subspace over all atoms."""
        cols = []
        off = 0
        for sp, c in zip(self.spaces, self.choices):
            block = np.zeros((self.dim_total, c.shape[1]), dtype=complex)
            block[off : off + sp.dim] = c
            cols.append(block)
            off += sp.dim
        return np.hstack(cols) if cols else np.zeros((0, 0))

    def index_of(self, q: float) -> int:
        for i, sp in enumerate(self.spaces):
            if abs(sp.root.q - q) <= 1e-12 * max(1.0, abs(q)):
                return i
        raise KeyError(q)

    def choice_at(self, q: float) -> np.ndarray:
        return self.choices[self.index_of(q)]

    def with_choice(self, q: float, choice) -> "DomainDescriptor":
        i = self.index_of(q)
        choices = list(self.choices)
        choices[i] = resolve_choice(self.spaces[i], choice)
        return DomainDescriptor(self.spectrum, self.gamma, self.spaces, choices, self.bc, self.p, self.mu)

    def same_as(self, other: "DomainDescriptor") -> bool:
        if len(self.spaces) != len(other.spaces):
            return False
        return all(same_subspace(a, b) for a, b in zip(self.choices, other.choices))

    def label(self, i: int) -> str:
        sp, c = self.spaces[i], self.choices[i]
        r = _rank(c)
        if r == 0:
            return "zero"
        if r == sp.dim:
            return "full"
        if sp.structure == "log-pair":
            return "const"
        return f"rank {r}"

    def as_dict(self) -> dict:
        out = {"gamma": self.gamma, "bc": self.bc, "p": self.p, "minimal": self.minimal_tag, "spaces": []}
        for i, (sp, c) in enumerate(zip(self.spaces, self.choices)):
            out["spaces"].append({
                **sp.root.as_dict(),
                "structure": sp.structure,
                "atoms": [{"q": q, "k": k, "coord": coord} for q, k, coord in sp.atoms],
                "choice": self.label(i),
                "basis": np.real(_orth(c)).round(15).tolist(),
            })
        return out


def _orth(c):
    if _rank(c) == 0:
        return np.zeros((c.shape[0], 0))
    return orth(c, rcond=RANK_TOL)


def _check_log_pair_choice(sp: AsymptoticSpace, c: np.ndarray):
    d = len(sp.coords)
    r = _rank(c)
    if r in (0, 2 * d):
        return
    const = np.vstack([np.eye(d), np.zeros((d, d))])
    if not same_subspace(c, const):
        raise DomainError(
            "at a double root only the choices zero, E0 x 1 (constants) or the full log pair "
            "are supported; other subspaces of the log pair are rejected"
        )


def resolve_choice(sp: AsymptoticSpace, choice) -> np.ndarray:
    """Turn 'zero' | 'full' | 'const' | coefficient matrix into a basis matrix."""
    d = sp.dim
    if isinstance(choice, str):
        if choice == "zero":
            return np.zeros((d, 0), dtype=complex)
        if choice == "full":
            return np.eye(d, dtype=complex)
        if choice == "const":
            if sp.structure != "log-pair":
                raise DomainError("'const' applies to the log pair at a double root only")
            m = len(sp.coords)
            return np.vstack([np.eye(m), np.zeros((m, m))]).astype(complex)
        raise DomainError(f"unknown choice {choice!r}; use zero, full, const or a matrix")
    c = np.asarray(choice, dtype=complex)
    if c.ndim == 1:
        c = c.reshape(-1, 1)
    if c.shape[0] == len(sp.coords) and sp.structure == "plain":
        return c
    if c.shape[0] != d:
        raise DomainError(f"choice matrix has {c.shape[0]} rows, the space at q={sp.root.q:g} has dimension {d}")
    return c


def make_domain(spectrum: Spectrum, gamma: float, choices: dict | None = None, default="full", bc=None, p=2.0) -> DomainDescriptor:
    """Build a descriptor; ``choices`` maps root value q to a choice spec."""
    spaces = _spaces(spectrum, gamma)
    choices = dict(choices or {})
    resolved = []
    for sp in spaces:
        spec = default
        for q, c in list(choices.items()):
            if abs(float(q) - sp.root.q) <= 1e-9:
                spec = c
                del choices[q]
                break
        resolved.append(resolve_choice(sp, spec))
    if choices:
        raise DomainError(f"choices given for roots outside the window: {sorted(float(q) for q in choices)}")
    return DomainDescriptor(spectrum, gamma, spaces, resolved, bc or spectrum.bc, p)


def max_domain(spectrum: Spectrum, gamma: float, bc: str | None = None) -> DomainDescriptor:
    return make_domain(spectrum, gamma, default="full", bc=bc)


def min_domain(spectrum: Spectrum, gamma: float, bc: str | None = None) -> DomainDescriptor:
    return make_domain(spectrum, gamma, default="zero", bc=bc)


# ---------------------------------------------------------------------------
# pairing


def atom_pairing(n: int, u, v) -> float:
    """[u, v] for atoms u = e_c x^-a log^k x and v = e_d x^-b log^l x.

    Green's formula leaves -lim_{x->0} x^n (u'v - uv'), whose integrand is
    x^(n-1-a-b) [(b-a) log^(k+l) + (k-l) log^(k+l-1)] (e_c, e_d).
    """
    a, k, c = u
    b, l, d = v
    if c != d:
        return 0.0
    expo = n - 1 - a - b
    top, low = (b - a), (k - l)
    # coefficient of log^(k+l) and log^(k+l-1)
    coeffs = {k + l: top}
    if k + l - 1 >= 0:
        coeffs[k + l - 1] = coeffs.get(k + l - 1, 0.0) + low
    coeffs = {p: v for p, v in coeffs.items() if abs(v) > 1e-14}
    if not coeffs:
        return 0.0
    if expo > 1e-12:
        return 0.0
    if expo < -1e-12 or any(p > 0 for p in coeffs):
        raise NumericalError(f"pairing of atoms {u} and {v} diverges (x-exponent {expo:g})")
    return -coeffs.get(0, 0.0)


def pairing_matrix(plus: DomainDescriptor, minus: DomainDescriptor) -> np.ndarray:
    if not plus.spectrum.same_as(minus.spectrum):
        raise DomainError("pairing needs both spaces over the same spectrum")
    n = plus.spectrum.n
    A, B = plus.atoms, minus.atoms
    P = np.zeros((len(A), len(B)))
    for i, u in enumerate(A):
        for j, v in enumerate(B):
            P[i, j] = atom_pairing(n, u, v)
    return P


def adjoint_complement(choice: DomainDescriptor) -> DomainDescriptor:
    """The annihilator of the chosen subspace inside E^{-gamma}."""
    target = max_domain(choice.spectrum, -choice.gamma, choice.bc)
    P = pairing_matrix(choice, target)
    C = choice.basis()
    constraints = C.T @ P if C.size else np.zeros((0, P.shape[1]))
    choices = []
    off = 0
    for sp in target.spaces:
        cols = constraints[:, off : off + sp.dim]
        if cols.size == 0 or _rank(cols) == 0:
            choices.append(np.eye(sp.dim, dtype=complex))
        else:
            choices.append(null_space(cols, rcond=RANK_TOL).astype(complex))
        off += sp.dim
    out = DomainDescriptor(choice.spectrum, -choice.gamma, target.spaces, choices, choice.bc, choice.p)
    full = null_space(constraints, rcond=RANK_TOL) if constraints.size else np.eye(target.dim_total)
    if not same_subspace(out.basis(), full):
        raise NumericalError("pairing complement does not split over roots")
    return out


def per_root_complement(choice: DomainDescriptor) -> DomainDescriptor:
    """Complement via E_q-perp = E-perp x x^-(n-1-q), with the log-pair rule at a double root."""
    n = choice.spectrum.n
    target = max_domain(choice.spectrum, -choice.gamma, choice.bc)
    choices = []
    for sp in target.spaces:
        partner = n - 1 - sp.root.q
        try:
            i = choice.index_of(partner)
        except KeyError:
            choices.append(np.eye(sp.dim, dtype=complex))
            continue
        c = choice.choices[i]
        if sp.structure == "log-pair":
            label = choice.label(i)
            choices.append(resolve_choice(sp, {"zero": "full", "full": "zero", "const": "const"}[label]))
        else:
            E = c if _rank(c) else np.zeros((sp.dim, 0))
            perp = null_space(E.conj().T, rcond=RANK_TOL) if E.shape[1] else np.eye(sp.dim)
            choices.append(perp.astype(complex))
    return DomainDescriptor(choice.spectrum, -choice.gamma, target.spaces, choices, choice.bc, choice.p)


# ---------------------------------------------------------------------------
# the extension criterion


@dataclass
class ConditionResult:
    q: float
    condition: int
    passed: bool
    detail: str

    def as_dict(self) -> dict:
        return {"q": self.q, "condition": self.condition, "pass": self.passed, "detail": self.detail}


@dataclass
class E3Verdict:
    gamma: float
    results: list[ConditionResult] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.results)

    def failed_conditions(self) -> set[int]:
        return {r.condition for r in self.results if not r.passed}

    def as_dict(self) -> dict:
        return {"gamma": self.gamma, "pass": self.passed, "roots": [r.as_dict() for r in self.results]}


def check_hypotheses(spectrum: Spectrum, gamma: float):
    n = spectrum.n
    if not abs(gamma) < (n + 1) / 2.0:
        raise HypothesisError(f"|gamma| = {abs(gamma):g} must be below (n+1)/2 = {(n + 1) / 2:g}")
    try:
        pole_window(spectrum, gamma, 2)
    except EndpointCoincidenceError as exc:
        raise HypothesisError(
            f"root {exc.root.q:g} lies on an end of the window, excluded by the requirement "
            f"q not in {{(n+1)/2 - gamma, (n+1)/2 - gamma - 2}}"
        ) from exc


def check_E3_criterion(choice: DomainDescriptor, gamma: float | None = None) -> E3Verdict:
    """Per-root test of the three conditions that make the model-cone realization sectorial.

    (1) q in both windows: the complement of E_q equals the choice at n-1-q.
    (2) gamma >= 0, q only in the gamma window: the full space.
    (3) gamma <= 0, q only in the gamma window: zero.
    """
    gamma = choice.gamma if gamma is None else gamma
    if abs(gamma - choice.gamma) > 1e-14:
        raise DomainError(f"descriptor built for gamma={choice.gamma}, asked about {gamma}")
    spec = choice.spectrum
    check_hypotheses(spec, gamma)
    n = spec.n
    other = pole_window(spec, -gamma, 2)
    comp = adjoint_complement(choice)
    verdict = E3Verdict(gamma)
    for i, sp in enumerate(choice.spaces):
        q = sp.root.q
        label = choice.label(i)
        if q in other:
            partner = n - 1 - q
            j = choice.index_of(partner)
            got = comp.choice_at(partner)
            ok = same_subspace(got, choice.choices[j])
            verdict.results.append(ConditionResult(q, 1, ok, f"complement of E_{q:g} ({label}) vs choice at {partner:g} ({choice.label(j)})"))
        elif gamma >= 0:
            verdict.results.append(ConditionResult(q, 2, label == "full", f"gamma >= 0 needs the full space, got {label}"))
        else:
            verdict.results.append(ConditionResult(q, 3, label == "zero", f"gamma <= 0 needs zero, got {label}"))
    return verdict


def neumann_extension(spectrum: Spectrum, delta: float) -> DomainDescriptor:
    """The extension with constants at the tip: gamma = (n-3)/2 + delta, E_{0,N} = E_0 x 1."""
    gw = gamma_window(spectrum)
    gamma = gw.check(delta)
    n = spectrum.n
    spaces = _spaces(spectrum, gamma)
    other = pole_window(spectrum, -gamma, 2)
    choices = []
    for sp in spaces:
        q = sp.root.q
        if sp.structure == "log-pair":
            spec = "const"
        elif q in other:
            # keep the less singular member of each pair (q^- side)
            spec = "full" if q <= (n - 1) / 2.0 else "zero"
        else:
            spec = "full" if gamma >= 0 else "zero"
        choices.append(resolve_choice(sp, spec))
    return DomainDescriptor(spectrum, gamma, spaces, choices, "neumann")


@dataclass
class E0NReport:
    delta: float
    gamma: float
    mu_sigma: int
    E0N: list
    Fhat0: list
    theta: np.ndarray

    def as_dict(self) -> dict:
        from .mellin_symbolic import _matrix_json

        return {
            "delta": self.delta,
            "gamma": self.gamma,
            "mu_sigma": self.mu_sigma,
            "E0N_basis": [f.as_list() for f in self.E0N],
            "Fhat0_basis": [f.as_list() for f in self.Fhat0],
            "theta": _matrix_json(self.theta),
        }


def e0n_report(spectrum: Spectrum, warp: WarpData, delta: float) -> E0NReport:
    """The full-operator space at sigma = 0, its model image and theta_0."""
    if spectrum.n != 1 or spectrum.bc != "neumann":
        raise DomainError("e0n_report is defined for an interval cross-section with Neumann data")
    gamma = gamma_window(spectrum).check(delta)
    res = F_sigma(0.0, ConormalData(spectrum, warp, gamma))
    if res.dim != len(res.Fhat_basis) or res.dim != res.expected_dim:
        raise NumericalError("E_{0,N} and its model image differ in dimension")
    return E0NReport(delta, gamma, res.mu_sigma, res.F_basis, res.Fhat_basis, res.theta)
