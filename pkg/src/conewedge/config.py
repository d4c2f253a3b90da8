"""Run configuration: one TOML file drives every subcommand.

``parse_config`` collects every violation before failing, and
``serialize_config`` writes the canonical form with all defaults filled in,
so parse -> serialize -> parse is the identity.
"""

from __future__ import annotations

import hashlib
import math
import sys
from dataclasses import asdict, dataclass, field, fields

import numpy as np
import tomli_w

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .cross_section import CrossSection
from .errors import ConeWedgeError, ConfigError

_KINDS = {"interval": "interval-analytic", "tabulated": "tabulated", "fd-oracle": "fd-oracle"}


@dataclass
class CrossSectionConfig:
    kind: str = "interval"
    bc: str = "neumann"
    L: float | None = None
    n: int = 1
    eigenvalues: list[float] | None = None
    multiplicities: list[int] | None = None
    phi_prime0: float = 0.0
    gridpoints: int = 2000


@dataclass
class WeightConfig:
    delta: float | None = None
    gamma: float | None = None


@dataclass
class ExtensionConfig:
    # "neumann" | "max" | "min" | "custom"; custom reads ``roots``
    kind: str = "neumann"
    roots: dict[str, str] = field(default_factory=dict)


@dataclass
class ProbeConfig:
    rays: list[float] = field(default_factory=lambda: [90.0, 135.0])
    lmin: float = 1.0
    lmax: float = 1e4
    per_decade: int = 3
    x_min: float = 1e-5
    x_max: float = 100.0
    nodes: int = 2048


@dataclass
class PMEConfig:
    m: float = 2.0
    T: float = 0.1
    tau: float = 2e-3
    nx: int = 400
    ny: int = 32
    x_min: float = 1e-5
    forcing: str = "none"
    initial: str = "cos 0.1 1"
    alpha: float | None = None
    p: float = 8.0
    q: float = 8.0


@dataclass
class OutputConfig:
    dir: str = "conewedge-out"


@dataclass
class RunConfig:
    cross_section: CrossSectionConfig
    J: int = 8
    seed: int = 0
    weight: WeightConfig = field(default_factory=WeightConfig)
    extension: ExtensionConfig = field(default_factory=ExtensionConfig)
    probe: ProbeConfig = field(default_factory=ProbeConfig)
    pme: PMEConfig = field(default_factory=PMEConfig)
    output: OutputConfig = field(default_factory=OutputConfig)

    def cross_section_object(self) -> CrossSection:
        cs = self.cross_section
        return CrossSection(
            kind=_KINDS[cs.kind],
            n=cs.n,
            bc=cs.bc,
            L=cs.L,
            eigenvalues=tuple(cs.eigenvalues) if cs.eigenvalues is not None else None,
            multiplicities=tuple(cs.multiplicities) if cs.multiplicities is not None else None,
            phi_prime0=cs.phi_prime0,
            gridpoints=cs.gridpoints,
        )

    def spectrum(self):
        return self.cross_section_object().spectrum(self.J)

    def warp(self):
        return self.cross_section_object().warp(self.J)

    def gamma(self) -> float:
        from .indicial import gamma_window

        if self.weight.gamma is not None:
            return self.weight.gamma
        if self.weight.delta is None:
            raise ConfigError(["weight: set either delta or gamma"])
        return gamma_window(self.spectrum()).check(self.weight.delta)

    def to_dict(self) -> dict:
        return _drop_none(asdict(self))

    def sha256(self) -> str:
        return hashlib.sha256(serialize_config(self).encode()).hexdigest()


def _drop_none(d):
    if isinstance(d, dict):
        return {k: _drop_none(v) for k, v in d.items() if v is not None}
    return d


_SECTIONS = {
    "cross_section": CrossSectionConfig,
    "weight": WeightConfig,
    "extension": ExtensionConfig,
    "probe": ProbeConfig,
    "pme": PMEConfig,
    "output": OutputConfig,
}
_TOP = {"J", "seed"}

_TYPES = {float: (int, float), int: (int,), str: (str,), list: (list,), dict: (dict,)}


def _expected(ftype: str):
    t = ftype.replace(" | None", "")
    if t.startswith("list"):
        return list
    if t.startswith("dict"):
        return dict
    return {"float": float, "int": int, "str": str}[t]


def _build(section: str, cls, raw, violations):
    known = {f.name: f for f in fields(cls)}
    unknown = sorted(set(raw) - set(known))
    if unknown:
        violations.append(f"[{section}] unknown keys: {', '.join(unknown)}")
    kwargs = {}
    for name, f in known.items():
        if name not in raw:
            continue
        val = raw[name]
        want = _expected(str(f.type))
        if isinstance(val, bool) or not isinstance(val, _TYPES[want]):
            violations.append(f"[{section}] {name}: expected {want.__name__}, got {type(val).__name__}")
            continue
        kwargs[name] = float(val) if want is float else val
    try:
        return cls(**kwargs)
    except TypeError as exc:
        violations.append(f"[{section}] {exc}")
        return cls()


def parse_config(text: str) -> RunConfig:
    try:
        raw = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError([f"not valid TOML: {exc}"]) from exc
    violations: list[str] = []
    unknown = sorted(set(raw) - set(_SECTIONS) - _TOP)
    if unknown:
        violations.append(f"unknown keys: {', '.join(unknown)}")
    if "cross_section" not in raw:
        violations.append("[cross_section] section is required")
    parts = {}
    for name, cls in _SECTIONS.items():
        sec = raw.get(name, {})
        if not isinstance(sec, dict):
            violations.append(f"{name} must be a table")
            sec = {}
        parts[name] = _build(name, cls, sec, violations)
    top = {}
    for key in _TOP:
        if key in raw:
            if isinstance(raw[key], bool) or not isinstance(raw[key], int):
                violations.append(f"{key}: expected int")
            else:
                top[key] = raw[key]
    cfg = RunConfig(**parts, **top)
    _validate(cfg, violations)
    if violations:
        raise ConfigError(violations)
    return cfg


def _validate(cfg: RunConfig, violations: list[str]):
    cs = cfg.cross_section
    if cs.kind not in _KINDS:
        violations.append(f"[cross_section] kind must be one of {sorted(_KINDS)}, got {cs.kind!r}")
    if cs.bc not in ("neumann", "dirichlet"):
        violations.append(f"[cross_section] bc must be neumann or dirichlet, got {cs.bc!r}")
    if cs.kind in ("interval", "fd-oracle"):
        if cs.L is None or not cs.L > 0:
            violations.append("[cross_section] L must be positive for an interval cross-section")
        if cs.n != 1:
            violations.append("[cross_section] an interval cross-section has n = 1")
    if cs.kind == "tabulated":
        if not cs.eigenvalues:
            violations.append("[cross_section] tabulated kind needs eigenvalues")
        elif any(v > 0 for v in cs.eigenvalues):
            violations.append(
                "[cross_section] spectrum invariant violated: eigenvalues of the nonpositive "
                "cross-section Laplacian must be <= 0"
            )
    if cfg.J < 1:
        violations.append(f"J must be >= 1, got {cfg.J}")
    if cfg.weight.delta is not None and cfg.weight.gamma is not None:
        violations.append("[weight] set delta or gamma, not both")
    if cfg.extension.kind not in ("neumann", "max", "min", "custom"):
        violations.append(f"[extension] kind must be neumann | max | min | custom, got {cfg.extension.kind!r}")
    for key, val in cfg.extension.roots.items():
        try:
            float(key)
        except ValueError:
            violations.append(f"[extension.roots] key {key!r} is not a root value")
        if val not in ("zero", "full", "const"):
            violations.append(f"[extension.roots] choice {val!r} must be zero | full | const")
    pr = cfg.probe
    if not 0 < pr.x_min < 1 < pr.x_max:
        violations.append("[probe] need 0 < x_min < 1 < x_max")
    if pr.nodes < 256:
        violations.append("[probe] nodes must be >= 256")
    if not 0 < pr.lmin < pr.lmax:
        violations.append("[probe] need 0 < lmin < lmax")
    pm = cfg.pme
    if not pm.m > 0:
        violations.append("[pme] m must be positive")
    if not (pm.tau > 0 and pm.T > 0):
        violations.append("[pme] tau and T must be positive")
    elif abs(pm.T / pm.tau - round(pm.T / pm.tau)) > 1e-9 * pm.T / pm.tau:
        violations.append("[pme] T must be a whole number of steps tau")
    if not 0 < pm.x_min <= 1e-4:
        violations.append("[pme] x_min must lie in (0, 1e-4]")
    try:
        from .pme_solver import parse_forcing

        parse_forcing(pm.forcing)
    except ConfigError as exc:
        violations.extend(f"[pme] {v}" for v in exc.violations)
    try:
        parse_initial(pm.initial)
    except ConfigError as exc:
        violations.extend(f"[pme] {v}" for v in exc.violations)
    if violations:
        return
    # physical checks that need the spectrum
    try:
        spec = cfg.spectrum()
    except ConeWedgeError as exc:
        violations.append(f"[cross_section] {exc}")
        return
    if cfg.weight.delta is not None:
        try:
            from .indicial import gamma_window

            gamma_window(spec).check(cfg.weight.delta)
        except ConeWedgeError as exc:
            violations.append(f"[weight] gamma window rule: {exc}")


def parse_initial(recipe: str):
    """'const c' | 'cos a k' (1 + a cos(k pi y/L)) | 'tipcos a k' (1 + a x^{k pi/L} cos(k pi y/L))."""
    parts = recipe.split()
    try:
        if parts[0] == "const" and len(parts) == 2:
            c = float(parts[1])
            return lambda X, Y, L: np.full(X.shape, c)
        if parts[0] in ("cos", "tipcos") and len(parts) == 3:
            a, k = float(parts[1]), int(parts[2])
            tip = parts[0] == "tipcos"
            return lambda X, Y, L: 1.0 + a * (X ** (k * math.pi / L) if tip else 1.0) * np.cos(k * math.pi * Y / L)
    except ValueError:
        pass
    raise ConfigError([f"initial data {recipe!r} not recognised; use const c | cos a k | tipcos a k"])


def serialize_config(cfg: RunConfig) -> str:
    d = cfg.to_dict()
    top = {k: d.pop(k) for k in ("J", "seed")}
    return tomli_w.dumps({**top, **d})


def load_config(path) -> RunConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())

