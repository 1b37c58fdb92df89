"""Command-line driver: configured runs and sweep reports.

``groundstate run config.json`` executes one experiment described by a
JSON config (validated against a schema before anything is computed) and
writes deterministic artifacts into the configured output directory:

* ``spectrum.json``   -- eigendata, window constants, config hash;
* ``sweep.csv``       -- one row per requested shift mu, sorted by mu,
                         floats at 17 significant digits;
* ``solution_<offset>.csv`` -- full radial profiles on request.

``groundstate report sweep.csv --out DIR`` derives the two plotting
curves (sign-certificate and blow-up) from a previously written sweep,
copying cell text verbatim so repeated runs stay byte-identical.

Exit codes: 0 success; 2 malformed config or unreadable input; 3 a solver
raised (no convergence, singular solve, escaped bracket, window or
hypothesis violation); 4 certificates were required but some row is
uncertified.  Wall-clock time goes to stderr only, keeping files
reproducible.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import math
import sys
import time
from pathlib import Path

import jsonschema
import numpy as np

from .coop_system import (
    analyze_matrix,
    inherited_bounds,
    solve_system,
    system_problem,
    system_two_start,
    window_system,
    WINDOW_RULE_SYSTEM,
)
from .errors import (
    GroundstateError,
    MalformedInput,
    NonPositivePotential,
    NotCooperative,
    NotIncreasing,
)
from .groundstate_space import estimate_c0_delta0, x_norm
from .linear_solver import certify_theorem1, linear_problem
from .radial_grid import (
    build_grid,
    exp_potential,
    make_grid,
    power_potential,
    tabulated_potential,
)
from .semilinear_solver import (
    WINDOW_RULE_SEMILINEAR,
    constant_profile,
    exp_decay_profile,
    rational_profile,
    solve_semilinear,
    two_start_diagnostics,
    validate_nonlinearity,
    window_semilinear,
)
from .spectral import assemble, eigenpairs, summarize_spectrum

CONFIG_ERRORS = (MalformedInput, NonPositivePotential, NotIncreasing, NotCooperative)

_NUMBER = {"type": "number"}

SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["mode", "space_dim", "potential", "grid", "output_dir"],
    "properties": {
        "mode": {"enum": ["eigen", "linear", "semilinear", "system"]},
        "space_dim": {"type": "integer", "minimum": 1, "maximum": 12},
        "potential": {
            "type": "object",
            "additionalProperties": False,
            "required": ["kind"],
            "properties": {
                "kind": {"enum": ["power", "exp", "table"]},
                "c": _NUMBER,
                "s": _NUMBER,
                "r0": _NUMBER,
                "path": {"type": "string"},
            },
        },
        "grid": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "r_max": {"type": "number", "exclusiveMinimum": 0},
                "n": {"type": "integer", "minimum": 2},
                "spectral_scale": {"type": "number", "exclusiveMinimum": 0},
                "points_per_unit": {"type": "number", "exclusiveMinimum": 0},
                "truncation_factor": {"type": "number", "exclusiveMinimum": 0},
            },
        },
        "max_sector": {"type": "integer", "minimum": 1},
        "margin": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
        "mu_offsets": {"type": "array", "items": _NUMBER, "minItems": 1},
        "sweep": {
            "type": "object",
            "additionalProperties": False,
            "required": ["from_offset", "to_offset", "steps"],
            "properties": {
                "from_offset": _NUMBER,
                "to_offset": _NUMBER,
                "steps": {"type": "integer", "minimum": 1},
            },
        },
        "f": {
            "type": "object",
            "additionalProperties": False,
            "required": ["kind"],
            "properties": {
                "kind": {"enum": ["phi", "phi_plus_phi2", "table"]},
                "coeff": _NUMBER,
                "path": {"type": "string"},
            },
        },
        "nonlinearity": {"$ref": "#/$defs/nonlinearity"},
        "nonlinearity2": {"$ref": "#/$defs/nonlinearity"},
        "matrix": {
            "type": "object",
            "additionalProperties": False,
            "required": ["a", "b", "c", "d"],
            "properties": {"a": _NUMBER, "b": _NUMBER, "c": _NUMBER, "d": _NUMBER},
        },
        "solver": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "damping": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
                "max_iter": {"type": "integer", "minimum": 1},
                "tol_x": {"type": "number", "exclusiveMinimum": 0},
                "start": {"enum": ["lower", "upper"]},
                "two_start": {"type": "boolean"},
            },
        },
        "require_certificates": {"type": "boolean"},
        "dump_solutions": {"type": "array", "items": _NUMBER},
        "output_dir": {"type": "string"},
        "seed": {"type": "integer", "minimum": 0},
    },
    "$defs": {
        "nonlinearity": {
            "type": "object",
            "additionalProperties": False,
            "required": ["kind"],
            "properties": {
                "kind": {"enum": ["constant", "rational", "exp_decay"]},
                "g": _NUMBER,
                "kappa": _NUMBER,
                "K": _NUMBER,
                "s": _NUMBER,
            },
        }
    },
}

COLUMNS = [
    "mu",
    "offset",
    "branch",
    "u1_component",
    "min_ratio",
    "max_ratio",
    "x_norm",
    "bound_lo",
    "bound_hi",
    "xnorm_bound",
    "certified",
    "in_window",
    "iterations",
    "residual_x",
    "violations",
    "two_start_gap",
    "bo_residual",
    "v2_xnorm",
    "v2_bound",
]

GSP_CURVE_COLUMNS = [
    "mu", "offset", "branch", "min_ratio", "max_ratio", "bound_lo", "bound_hi", "certified",
]
BLOWUP_CURVE_COLUMNS = ["mu", "offset", "x_norm", "xnorm_bound"]


def f17(x: float) -> str:
    """Fixed 17-significant-digit text for a float (round-trip exact)."""
    return format(float(x), ".17g")


def _cell(value) -> str:
    if value is None or value == "":
        return ""
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, str):
        return value
    return f17(value)


def _jsonable(value):
    """Recursively convert numerics so json output is plain and stable."""
    if isinstance(value, dict):
        return {k: _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple, np.ndarray)):
        return [_jsonable(v) for v in value]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        return float(f17(float(value)))
    return value


def build_potential(cfg: dict):
    block = cfg["potential"]
    kind = block["kind"]
    if kind == "power":
        if "c" not in block or "s" not in block:
            raise MalformedInput("power potential needs 'c' and 's'")
        return power_potential(block["c"], block["s"], r0=block.get("r0", 1.0))
    if kind == "exp":
        return exp_potential(r0=block.get("r0", 0.0))
    if "path" not in block:
        raise MalformedInput("table potential needs 'path'")
    return tabulated_potential(block["path"], r0=block.get("r0"))


def build_the_grid(cfg: dict, pot, grid_scale: float):
    g = cfg["grid"]
    direct = "r_max" in g and "n" in g
    if direct == ("spectral_scale" in g):
        raise MalformedInput("grid needs either (r_max, n) or spectral_scale")
    if direct:
        n = int(math.ceil(g["n"] * grid_scale))
        return make_grid(cfg["space_dim"], g["r_max"], n)
    return build_grid(
        pot,
        cfg["space_dim"],
        g["spectral_scale"],
        points_per_unit=g.get("points_per_unit", 200.0) * grid_scale,
        truncation_factor=g.get("truncation_factor", 4.0),
    )


def build_nonlinearity(block: dict):
    kind = block["kind"]
    if kind == "constant":
        if "g" not in block:
            raise MalformedInput("constant nonlinearity needs 'g'")
        return constant_profile(block["g"])
    if "kappa" not in block or "K" not in block:
        raise MalformedInput(f"{kind} nonlinearity needs 'kappa' and 'K'")
    if kind == "rational":
        return rational_profile(block["kappa"], block["K"])
    return exp_decay_profile(block["kappa"], block["K"], s=block.get("s", 1.0))


def build_f(cfg: dict, op, spectrum) -> np.ndarray:
    block = cfg.get("f")
    if block is None:
        raise MalformedInput("linear mode needs an 'f' block")
    kind = block["kind"]
    phi = spectrum.phi.values
    if kind == "phi":
        return phi.copy()
    if kind == "phi_plus_phi2":
        _, vecs = eigenpairs(op, 2)
        return phi + block.get("coeff", 0.5) * vecs[:, 1]
    if "path" not in block:
        raise MalformedInput("table f needs 'path'")
    try:
        raw = np.genfromtxt(block["path"], delimiter=",", names=True)
    except OSError as exc:
        raise MalformedInput(f"cannot read f table: {exc}") from exc
    if raw.dtype.names is None or tuple(raw.dtype.names[:2]) != ("r", "f"):
        raise MalformedInput("f table must have header 'r,f'")
    return np.interp(op.grid.r, np.atleast_1d(raw["r"]), np.atleast_1d(raw["f"]))


def resolve_offsets(cfg: dict) -> list[float]:
    has_list = "mu_offsets" in cfg
    has_sweep = "sweep" in cfg
    if has_list == has_sweep:
        raise MalformedInput("give exactly one of 'mu_offsets' or 'sweep'")
    if has_list:
        offsets = [float(x) for x in cfg["mu_offsets"]]
    else:
        s = cfg["sweep"]
        offsets = [float(x) for x in np.linspace(s["from_offset"], s["to_offset"], s["steps"])]
    for off in offsets:
        if abs(off) < 1e-12:
            raise MalformedInput("mu offsets must be nonzero (mu = Lambda is singular)")
    return sorted(offsets)


def _blank_row() -> dict:
    return {k: "" for k in COLUMNS}


def _write_csv(path: Path, columns: list[str], rows: list[dict]) -> None:
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_cell(row.get(col, "")) for col in columns])


def _dump_profile(path: Path, header: list[str], arrays: list[np.ndarray]) -> None:
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(header)
        for i in range(len(arrays[0])):
            writer.writerow([f17(a[i]) for a in arrays])


def _offset_tag(offset: float) -> str:
    return format(offset, "g")


def cmd_run(args: argparse.Namespace) -> int:
    t0 = time.perf_counter()
    with open(args.config) as handle:
        cfg = json.load(handle)
    try:
        jsonschema.validate(cfg, SCHEMA)
    except jsonschema.ValidationError as exc:
        raise MalformedInput(f"config invalid: {exc.message}") from exc

    grid_scale = float(args.grid_scale)
    if grid_scale <= 0:
        raise MalformedInput("--grid-scale must be positive")
    seed = int(args.seed) if args.seed is not None else int(cfg.get("seed", 0))
    canon = json.dumps(cfg, sort_keys=True, separators=(",", ":"))
    config_hash = hashlib.sha256(
        f"{canon}|{grid_scale!r}|{seed}".encode()
    ).hexdigest()[:16]

    out_dir = Path(args.out) if args.out else Path(cfg["output_dir"])
    out_dir.mkdir(parents=True, exist_ok=True)

    pot = build_potential(cfg)
    grid = build_the_grid(cfg, pot, grid_scale)
    spectrum = summarize_spectrum(grid, pot, max_sector=cfg.get("max_sector", 8))
    op = assemble(grid, pot, 0)
    w = estimate_c0_delta0(spectrum, op, margin=cfg.get("margin", 0.5))

    meta = {
        "mode": cfg["mode"],
        "space_dim": cfg["space_dim"],
        "potential": pot.name,
        "grid": {"r_max": grid.r_max, "n": grid.n, "h": grid.h},
        "Lambda": spectrum.Lambda,
        "lambda2": spectrum.lambda2,
        "lambda2_sector": spectrum.lambda2_sector,
        "sector_cap": spectrum.sector_cap,
        "radial_eigs": spectrum.radial_eigs,
        "delta0": w.delta0,
        "c0": w.c0,
        "mu_samples": w.mu_samples,
        "seed": seed,
        "grid_scale": grid_scale,
        "config_hash": config_hash,
    }

    mode = cfg["mode"]
    solver = cfg.get("solver", {})
    rows: list[dict] = []
    dumps: dict[float, tuple[list[str], list[np.ndarray]]] = {}

    if mode == "eigen":
        meta["window"] = w.delta0
        meta["window_rule"] = "delta0"
    elif mode == "linear":
        rows, dumps, window, rule = _run_linear(cfg, op, spectrum, w)
        meta["window"] = window
        meta["window_rule"] = rule
    elif mode == "semilinear":
        rows, dumps, window = _run_semilinear(cfg, op, spectrum, w, solver)
        meta["window"] = window
        meta["window_rule"] = WINDOW_RULE_SEMILINEAR
    else:
        rows, dumps, extras = _run_system(cfg, op, spectrum, w, solver)
        meta.update(extras)
        meta["window_rule"] = WINDOW_RULE_SYSTEM

    with open(out_dir / "spectrum.json", "w") as handle:
        json.dump(_jsonable(meta), handle, indent=2, sort_keys=True)
        handle.write("\n")
    _write_csv(out_dir / "sweep.csv", COLUMNS, rows)
    for offset, (header, arrays) in dumps.items():
        _dump_profile(out_dir / f"solution_{_offset_tag(offset)}.csv", header, arrays)

    print(f"wall_time_s {time.perf_counter() - t0:.3f}", file=sys.stderr)
    if cfg.get("require_certificates", False):
        uncertified = [row for row in rows if row.get("certified") is False]
        if uncertified:
            print(
                f"{len(uncertified)} of {len(rows)} rows uncertified", file=sys.stderr
            )
            return 4
    return 0


def _requested_dumps(cfg: dict, offset: float) -> bool:
    for want in cfg.get("dump_solutions", []):
        if abs(want - offset) <= 1e-12 * max(1.0, abs(want)):
            return True
    return False


def _run_linear(cfg, op, spectrum, w):
    f_values = build_f(cfg, op, spectrum)
    phi = spectrum.phi.values
    lam = spectrum.Lambda
    rows = []
    dumps = {}
    window = None
    rule = "min(delta0, f1/(c0*||fperp||_X))"
    for offset in resolve_offsets(cfg):
        mu = lam + offset
        p = linear_problem(op, spectrum, mu, f_values)
        cert = certify_theorem1(p, w)
        if window is None:
            window = cert.window_used
        perp_x = x_norm(p.f.perp, phi) if np.any(p.f.perp) else 0.0
        row = _blank_row()
        row.update(
            mu=mu,
            offset=offset,
            branch="MP" if mu < lam else "AMP",
            u1_component=cert.solution.c1,
            min_ratio=cert.min_ratio,
            max_ratio=cert.max_ratio,
            x_norm=cert.solution.x_norm,
            bound_lo=cert.bound if (cert.in_window and mu < lam) else "",
            bound_hi=cert.bound if (cert.in_window and mu > lam) else "",
            xnorm_bound=abs(p.f.c1) / abs(lam - mu) + w.c0 * perp_x,
            certified=cert.certified,
            in_window=cert.in_window,
            iterations=1,
            violations=0,
        )
        rows.append(row)
        if _requested_dumps(cfg, offset):
            dumps[offset] = (
                ["r", "phi", "u"], [op.grid.r, phi, cert.solution.values]
            )
    return rows, dumps, window, rule


def _run_semilinear(cfg, op, spectrum, w, solver):
    if "nonlinearity" not in cfg:
        raise MalformedInput("semilinear mode needs a 'nonlinearity' block")
    nl = build_nonlinearity(cfg["nonlinearity"])
    validate_nonlinearity(nl, op.grid.r)
    phi = spectrum.phi.values
    lam = spectrum.Lambda
    window = window_semilinear(nl, w)
    two_start = solver.get("two_start", True)
    rows = []
    dumps = {}
    for offset in resolve_offsets(cfg):
        mu = lam + offset
        kwargs = dict(
            damping=solver.get("damping", 0.5),
            max_iter=solver.get("max_iter", 500),
            tol_x=solver.get("tol_x", 1e-9),
        )
        if two_start:
            rep = two_start_diagnostics(op, spectrum, w, nl, mu, **kwargs)
        else:
            rep = solve_semilinear(
                op, spectrum, w, nl, mu, start=solver.get("start", "lower"), **kwargs
            )
        edge_kappa = nl.kappa / (lam - mu)
        edge_k = nl.k_upper / (lam - mu)
        row = _blank_row()
        row.update(
            mu=mu,
            offset=offset,
            branch=rep.branch,
            u1_component=rep.solution.c1,
            min_ratio=rep.min_ratio,
            max_ratio=rep.max_ratio,
            x_norm=rep.solution.x_norm,
            bound_lo=min(edge_kappa, edge_k),
            bound_hi=max(edge_kappa, edge_k),
            xnorm_bound=rep.xnorm_bound,
            certified=rep.certified,
            in_window=True,
            iterations=rep.iterations,
            residual_x=rep.residual_x,
            violations=rep.bracket_violations,
            two_start_gap=rep.uniqueness.two_start_gap if rep.uniqueness else "",
            bo_residual=(
                rep.uniqueness.brezis_oswald_residual
                if rep.uniqueness and rep.uniqueness.brezis_oswald_residual is not None
                else ""
            ),
        )
        rows.append(row)
        if _requested_dumps(cfg, offset):
            dumps[offset] = (["r", "phi", "u"], [op.grid.r, phi, rep.solution.values])
    return rows, dumps, window


def _run_system(cfg, op, spectrum, w, solver):
    if "matrix" not in cfg or "nonlinearity" not in cfg:
        raise MalformedInput("system mode needs 'matrix' and 'nonlinearity' blocks")
    mspec = cfg["matrix"]
    m = analyze_matrix(mspec["a"], mspec["b"], mspec["c"], mspec["d"])
    nl1 = build_nonlinearity(cfg["nonlinearity"])
    nl2 = build_nonlinearity(cfg.get("nonlinearity2", cfg["nonlinearity"]))
    for nl in (nl1, nl2):
        validate_nonlinearity(nl, op.grid.r)
    phi = spectrum.phi.values
    lam_star = spectrum.Lambda - m.xi1
    two_start = solver.get("two_start", True)
    rows = []
    dumps = {}
    window = None
    extras = {}
    for offset in resolve_offsets(cfg):
        mu = lam_star + offset
        p = system_problem(op, spectrum, m, nl1, nl2, mu)
        if window is None:
            window = window_system(p, w)
            kp, kup = inherited_bounds(m, p.kappa, p.k_upper)
            extras = {
                "lambda_star": lam_star,
                "xi1": m.xi1,
                "xi2": m.xi2,
                "y": m.y,
                "kappa_prime": kp,
                "k_prime": kup,
                "window": window,
            }
        kwargs = dict(
            damping=solver.get("damping", 0.5),
            max_iter=solver.get("max_iter", 500),
            tol_x=solver.get("tol_x", 1e-9),
        )
        if two_start:
            rep = system_two_start(p, w, **kwargs)
        else:
            rep = solve_system(p, w, start=solver.get("start", "lower"), **kwargs)
        row = _blank_row()
        row.update(
            mu=mu,
            offset=offset,
            branch=rep.branch,
            u1_component=rep.u1.c1,
            min_ratio=float(np.min(rep.min_ratio)),
            max_ratio=float(np.max(rep.max_ratio)),
            x_norm=max(rep.u1.x_norm, rep.u2.x_norm),
            bound_lo=float(np.min(rep.rectangle.lo)),
            bound_hi=float(np.max(rep.rectangle.hi)),
            xnorm_bound=float(
                np.max(np.abs(np.concatenate([rep.rectangle.lo, rep.rectangle.hi])))
            ),
            certified=rep.certified,
            in_window=True,
            iterations=rep.iterations,
            residual_x=rep.residual_x,
            violations=rep.rectangle_violations,
            two_start_gap=rep.uniqueness.two_start_gap if rep.uniqueness else "",
            bo_residual=(
                rep.uniqueness.brezis_oswald_residual
                if rep.uniqueness and rep.uniqueness.brezis_oswald_residual is not None
                else ""
            ),
            v2_xnorm=x_norm(rep.v2, phi),
            v2_bound=rep.v2_bound,
        )
        rows.append(row)
        if _requested_dumps(cfg, offset):
            dumps[offset] = (
                ["r", "phi", "u1", "u2"],
                [op.grid.r, phi, rep.u1.values, rep.u2.values],
            )
    return rows, dumps, extras


def cmd_report(args: argparse.Namespace) -> int:
    with open(args.sweep, newline="") as handle:
        reader = csv.DictReader(handle)
        if reader.fieldnames is None:
            raise MalformedInput("sweep file is empty")
        missing = [c for c in COLUMNS if c not in reader.fieldnames]
        if missing:
            raise MalformedInput(f"sweep file missing columns: {', '.join(missing)}")
        data = list(reader)

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    for name, columns in (
        ("gsp_curve.csv", GSP_CURVE_COLUMNS),
        ("blowup_curve.csv", BLOWUP_CURVE_COLUMNS),
    ):
        with open(out_dir / name, "w", newline="") as handle:
            writer = csv.writer(handle, lineterminator="\n")
            writer.writerow(columns)
            for row in data:
                writer.writerow([row[col] for col in columns])
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="groundstate",
        description="Groundstate-weighted analysis of radial Schrodinger operators.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="execute one configured experiment")
    run.add_argument("config", help="path to a JSON config")
    run.add_argument("--out", help="override the config's output_dir")
    run.add_argument(
        "--grid-scale",
        type=float,
        default=1.0,
        help="multiply grid resolution (refinement studies)",
    )
    run.add_argument("--seed", type=int, default=None, help="override the config seed")

    report = sub.add_parser("report", help="derive plotting curves from a sweep")
    report.add_argument("sweep", help="path to a sweep.csv written by 'run'")
    report.add_argument("--out", required=True, help="directory for the curve files")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "run":
            return cmd_run(args)
        return cmd_report(args)
    except (json.JSONDecodeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except CONFIG_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except GroundstateError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
