"""Command line front end: ``conewedge <subcommand> --config run.toml``.

Every subcommand prints a JSON report (sorted keys, no timestamps) and writes
it, plus any CSV, into the output directory.  Exit codes: 0 when every check
passes, 2 when a verdict fails, 1 on errors.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from importlib import resources
from pathlib import Path

import jsonschema
import numpy as np

from . import __version__
from .config import RunConfig, load_config, parse_initial
from .cross_section import fd_spectrum, interval_spectrum
from .domains import (
    adjoint_complement,
    check_E3_criterion,
    e0n_report,
    make_domain,
    max_domain,
    neumann_extension,
    pairing_matrix,
)
from .errors import ConeWedgeError, DomainError
from .indicial import all_roots, gamma_window, pole_window
from .mellin_symbolic import ConormalData, F_sigma, kernel_check, recursion_residual, _matrix_json
from .model_cone import SectorSpec, sectoriality_probe
from .pme_solver import WedgeGrid, clement_li_window_check, mode_amplitudes, parse_forcing, pme_solve

SCHEMA_VERSION = 1
TOLERANCES = {
    "identity": 1e-12,
    "recursion": 1e-10,
    "kernel": 1e-10,
    "rank": 1e-10,
    "fd_oracle": 1e-3,
    "truncation_delta": 0.2,
    "power_iteration": 1e-6,
}
ASSERTED_RAYS = (90.0, 135.0)


def _check(name, ok, **extra) -> dict:
    return {"name": name, "pass": bool(ok), **extra}


# ---------------------------------------------------------------------------
# subcommands; each returns (result, checks, files)


def _spectrum(cfg: RunConfig, args, outdir):
    spec = cfg.spectrum()
    warp = cfg.warp()
    res = {
        "n": spec.n,
        "bc": spec.bc,
        "complete": spec.complete,
        "eigenvalues": list(spec.eigenvalues),
        "multiplicities": list(spec.multiplicities),
        "warp": {"phi_prime0": warp.phi_prime0, "H0": warp.H0, "H_prime0": warp.H_prime0, "delta_prime": warp.delta_prime.tolist()},
    }
    checks = []
    cs = cfg.cross_section
    if cs.kind in ("interval", "fd-oracle") and cfg.J <= cs.gridpoints // 4:
        exact = interval_spectrum(cs.L, cs.bc, cfg.J)
        fd = fd_spectrum(cs.L, cs.bc, cs.gridpoints, cfg.J)
        err = float(np.max(np.abs(np.subtract(exact.eigenvalues, fd.eigenvalues))))
        res["fd_oracle_max_error"] = err
        checks.append(_check("fd oracle agrees with the closed form", err < TOLERANCES["fd_oracle"] * max(1.0, abs(exact.eigenvalues[-1])), value=err))
    return res, checks, []


def _indicial(cfg, args, outdir):
    spec = cfg.spectrum()
    gamma = args.gamma if args.gamma is not None else cfg.gamma()
    win = pole_window(spec, gamma, 2)
    table = [r.as_dict() for r in all_roots(spec)]
    worst = max(abs(r.q + (spec.n - 1 - r.q) - (spec.n - 1)) for r in all_roots(spec))
    res = {"gamma": gamma, **win.as_dict(), "root_table": table}
    return res, [_check("q- + q+ = n - 1", worst <= TOLERANCES["identity"], value=worst)], []


def _conormal(cfg, args, outdir):
    spec = cfg.spectrum()
    data = ConormalData(spec, cfg.warp(), cfg.gamma())
    sigma = args.sigma
    ell = args.ell
    fs = F_sigma(sigma, data)
    g = data.g(ell)
    lg = g.laurent(sigma, 0)
    rng = np.random.default_rng(cfg.seed)
    zs = rng.normal(size=16) * 3 + 1j * rng.normal(size=16) * 3
    resid = max(recursion_residual(data.fs, [data.g(j) for j in range(ell + 1)], ell, z) for z in zs) if ell else 0.0
    kern = max((kernel_check(f, spec).max_coefficient() for f in fs.Fhat_basis), default=0.0)
    res = {
        **fs.as_dict(),
        "ell": ell,
        "g_ell_laurent": {"pole_order": lg.M, "principal": [_matrix_json(c) for c in lg.principal_coefficients()]},
        "recursion_residual": resid,
        "kernel_residual": kern,
    }
    checks = [
        _check("recursion identity", resid < TOLERANCES["recursion"], value=resid),
        _check("model asymptotics lie in the kernel", kern < TOLERANCES["kernel"], value=kern),
        _check("dim F = dim hat F = expected", fs.dim == len(fs.Fhat_basis) == fs.expected_dim, value=fs.dim),
    ]
    return res, checks, []


def _descriptor(cfg: RunConfig, delta):
    spec = cfg.spectrum()
    ext = cfg.extension
    if ext.kind == "neumann":
        if delta is None:
            raise DomainError("the Neumann extension is parametrised by delta")
        return neumann_extension(spec, delta)
    gamma = gamma_window(spec).check(delta) if delta is not None else cfg.gamma()
    if ext.kind == "max":
        return max_domain(spec, gamma)
    if ext.kind == "min":
        return make_domain(spec, gamma, default="zero")
    return make_domain(spec, gamma, {float(k): v for k, v in ext.roots.items()}, default="zero")


def _domain(cfg, args, outdir):
    delta = args.delta if args.delta is not None else cfg.weight.delta
    desc = _descriptor(cfg, delta)
    minus = max_domain(desc.spectrum, -desc.gamma, desc.bc)
    P = pairing_matrix(max_domain(desc.spectrum, desc.gamma, desc.bc), minus)
    comp = adjoint_complement(desc)
    res = {
        "descriptor": desc.as_dict(),
        "pairing": {"rows": [list(a) for a in desc.atoms], "cols": [list(a) for a in minus.atoms], "matrix": P.tolist()},
        "complement": comp.as_dict(),
    }
    rank = int(np.linalg.matrix_rank(P, tol=TOLERANCES["rank"])) if P.size else 0
    checks = [
        _check("pairing non-degenerate", rank == P.shape[0] == P.shape[1], value=rank),
        _check("dim E + dim E# = dim E^gamma", desc.dim + comp.dim == desc.dim_total),
    ]
    if args.check_e3:
        verdict = check_E3_criterion(desc)
        res["e3"] = verdict.as_dict()
        checks.append(_check("extension criterion", verdict.passed))
    spec = desc.spectrum
    if spec.n == 1 and spec.bc == "neumann" and delta is not None:
        res["E0N"] = e0n_report(spec, cfg.warp(), delta).as_dict()
    return res, checks, []


def _probe(cfg, args, outdir):
    delta = args.delta if args.delta is not None else cfg.weight.delta
    desc = _descriptor(cfg, delta)
    pr = cfg.probe
    rays = [float(r) for r in args.rays.split(",")] if args.rays else pr.rays
    lmax = args.lmax if args.lmax is not None else pr.lmax
    sector = SectorSpec.rays(rays, pr.lmin, lmax, pr.per_decade)
    result = sectoriality_probe(desc, sector, pr.x_min, pr.x_max, pr.nodes, seed=cfg.seed)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["ray", "abs_lambda", "norm_estimate", "grid", "truncation_delta", "mode", "converged"])
    for r in result.rows:
        w.writerow([f"{math.degrees(r.arg):.6g}", f"{r.modulus:.10g}", f"{r.estimate:.10g}", r.nodes, f"{r.truncation_delta:.6g}", r.mode, int(r.converged)])
    path = outdir / "probe.csv"
    path.write_text(buf.getvalue())
    per_ray = {}
    checks = [_check("all estimates finite", all(math.isfinite(r.estimate) for r in result.rows))]
    for deg, arg in zip(rays, sector.args):
        rows = [r for r in result.rows if r.arg == arg]
        sup = max(r.estimate for r in rows)
        delta_sup = max(r.truncation_delta for r in rows)
        per_ray[f"{deg:g}"] = {"sup": sup, "max_truncation_delta": delta_sup, "converged": all(r.converged for r in rows)}
        if any(abs(deg - a) < 1e-9 for a in ASSERTED_RAYS):
            checks.append(_check(f"ray {deg:g}: truncation delta below 20%", delta_sup < TOLERANCES["truncation_delta"], value=delta_sup))
    res = {"gamma": desc.gamma, "sup": result.sup, "rays": per_ray, "samples": len(result.rows), "nodes": pr.nodes, "x_min": pr.x_min, "x_max": pr.x_max}
    return res, checks, [str(path)]


def _pme(cfg, args, outdir):
    cs = cfg.cross_section
    if cs.kind not in ("interval", "fd-oracle"):
        raise DomainError("the PME solver runs on an interval cross-section (a 2-D wedge)")
    pm = cfg.pme
    T = args.T if args.T is not None else pm.T
    grid = WedgeGrid(cs.L, pm.x_min, pm.nx, pm.ny)
    X, Y = np.meshgrid(grid.x, grid.y, indexing="ij")
    v0 = parse_initial(pm.initial)(X, Y, cs.L)
    steps = int(round(T / pm.tau))
    delta = cfg.weight.delta
    window_ok = clement_li_window_check(pm.p, pm.q, 1, delta) if delta is not None else None
    traj = pme_solve(v0, grid, T, pm.tau, pm.m, parse_forcing(pm.forcing), pm.alpha, save_every=max(1, steps // 10))
    path = Path(args.out) if args.out else outdir / "pme.csv"
    path.parent.mkdir(parents=True, exist_ok=True)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["t", "x", "mode", "amplitude"])
    for t, v in zip(traj.times, traj.states):
        a = mode_amplitudes(v)
        for i, x in enumerate(grid.x):
            for k in range(min(4, grid.ny)):
                w.writerow([f"{t:.10g}", f"{x:.10g}", k, f"{a[i, k]:.12g}"])
    path.write_text(buf.getvalue())
    res = {**traj.summary(), "clement_li_window": window_ok, "grid": {"L": cs.L, "x_min": pm.x_min, "nx": pm.nx, "ny": pm.ny, "tau": pm.tau, "T": T, "m": pm.m}}
    checks = [_check("stayed above the positivity floor", not traj.halted)]
    if window_ok is not None:
        checks.append(_check("exponent window for (p, q)", window_ok))
    return res, checks, [str(path)]


_COMMANDS = {"spectrum": _spectrum, "indicial": _indicial, "conormal": _conormal, "domain": _domain, "probe": _probe, "pme": _pme}


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        f = float(obj)
        return f if math.isfinite(f) else str(f)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    return obj


def load_schema() -> dict:
    return json.loads(resources.files("conewedge").joinpath("report.schema.json").read_text())


def run_scenario(cfg: RunConfig, subcommand: str, args=None, outdir: Path | None = None) -> dict:
    """Run one subcommand and return the validated report."""
    if subcommand not in _COMMANDS:
        raise DomainError(f"unknown subcommand {subcommand!r}")
    args = args or build_parser().parse_args([subcommand, "--config", "-"])
    sha = cfg.sha256()
    outdir = Path(outdir) if outdir else Path(cfg.output.dir) / f"{subcommand}-{sha[:12]}"
    outdir.mkdir(parents=True, exist_ok=True)
    result, checks, files = _COMMANDS[subcommand](cfg, args, outdir)
    options = {k: v for k, v in sorted(vars(args).items()) if k not in ("config", "command", "out_dir", "out", "quiet")}
    report = _clean({
        "schema_version": SCHEMA_VERSION,
        "tool": {"name": "conewedge", "version": __version__},
        "provenance": {"config_sha256": sha, "seed": cfg.seed, "tolerances": TOLERANCES, "options": options},
        "subcommand": subcommand,
        "verdict": {"pass": all(c["pass"] for c in checks), "checks": checks},
        "result": result,
        "files": [Path(f).name for f in files],
    })
    jsonschema.validate(report, load_schema())
    (outdir / f"{subcommand}.json").write_text(dump_report(report))
    return report


def dump_report(report: dict) -> str:
    return json.dumps(report, sort_keys=True, indent=2, allow_nan=False) + "\n"


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="conewedge", description="Cone asymptotics, extension checks and a wedge porous-medium solver.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", required=True, help="run configuration (TOML)")
        sp.add_argument("--out-dir", help="output directory (default: <output.dir>/<subcommand>-<config hash>)")
        sp.add_argument("--quiet", action="store_true", help="do not print the report")
        return sp

    common(sub.add_parser("spectrum", help="cross-section eigenvalues and warp data"))
    s = common(sub.add_parser("indicial", help="indicial roots in the weight window"))
    s.add_argument("--gamma", type=float)
    s = common(sub.add_parser("conormal", help="asymptotics spaces and theta at a pole"))
    s.add_argument("--sigma", type=float, default=0.0)
    s.add_argument("--ell", type=int, default=1)
    s = common(sub.add_parser("domain", help="extension, pairing, complement"))
    s.add_argument("--delta", type=float)
    s.add_argument("--check-e3", action="store_true", help="run the extension criterion")
    s = common(sub.add_parser("probe", help="resolvent bounds on sector rays"))
    s.add_argument("--rays", help="comma separated ray angles in degrees")
    s.add_argument("--lmax", type=float)
    s.add_argument("--delta", type=float)
    s = common(sub.add_parser("pme", help="porous medium flow on the wedge"))
    s.add_argument("--T", type=float)
    s.add_argument("--out", help="trajectory CSV path")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        report = run_scenario(cfg, args.command, args, Path(args.out_dir) if args.out_dir else None)
    except ConeWedgeError as exc:
        print(f"error [{exc.code}]: {exc}", file=sys.stderr)
        return 1
    except (OSError, jsonschema.ValidationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    if not args.quiet:
        sys.stdout.write(dump_report(report))
    return 0 if report["verdict"]["pass"] else 2


if __name__ == "__main__":
    sys.exit(main())
