"""Command-line workflows: ``forward``, ``check``, ``reconstruct``, ``roundtrip``.

Each command reads an optional JSON config, applies command-line overrides
(flags win over the file, the file over defaults), writes its outputs into
the output directory and prints the path of its main report on stdout.
Diagnostics go to stderr.

Exit codes: 0 success, 2 configuration or input error, 3 math-domain error,
4 a necessary condition failed, 5 pole divergence during reconstruction.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .bodies import BodySpec, support
from .conditions import check_belt_derivative, check_orthogonality, fibonacci_directions, merge_reports
from .errors import FlagTomoError, InvalidParameter, PoleDivergence
from .forward import ForwardFlagFunction, read_flag_csv, sample_flag_function, write_flag_csv
from .mesh import latlong_mesh, write_obj
from .reconstruct import (
    QuadratureSpec,
    centroid,
    grid_directions,
    ode_path_support,
    reconstruct_grid,
    sampled_reconstruction,
)

log = logging.getLogger("flagtomo")

EXIT_CONFIG, EXIT_MATH, EXIT_CHECK, EXIT_POLE = 2, 3, 4, 5

DEFAULTS = {
    "body": None,
    "input_csv": None,
    "quadrature": QuadratureSpec().to_dict(),
    "output_grid": [16, 32],
    "output_dir": "out",
    "sample_grid": [48, 96, 64],
    "check_directions": 32,
    "tolerance": None,
    "mesh": False,
    "mesh_grid": None,
    "dual_path": False,
    "ladder": [32, 64, 128, 256],
    "ladder_directions": 8,
    "n_jobs": 1,
    "timing": False,
}


class ConfigError(Exception):
    pass


@dataclass
class RunConfig:
    body: BodySpec | None
    input_csv: Path | None
    quadrature: QuadratureSpec
    output_grid: tuple
    output_dir: Path
    options: dict = field(default_factory=dict)

    def flag_function(self):
        if self.body is not None:
            return ForwardFlagFunction(support(self.body))
        if not self.input_csv.is_file():
            raise ConfigError(f"input file not found: {self.input_csv}")
        return read_flag_csv(self.input_csv)


def _grid(text, n: int, name: str) -> tuple:
    if isinstance(text, str):
        parts = text.lower().replace("x", ",").split(",")
    else:
        parts = list(text)
    try:
        vals = tuple(int(p) for p in parts)
    except (TypeError, ValueError):
        raise ConfigError(f"bad {name}: {text!r}") from None
    if len(vals) != n or min(vals) < 1:
        raise ConfigError(f"{name} needs {n} positive integers, got {text!r}")
    return vals


def load_config(args: argparse.Namespace) -> RunConfig:
    cfg = dict(DEFAULTS)
    if args.config:
        path = Path(args.config)
        if not path.is_file():
            raise ConfigError(f"config file not found: {path}")
        try:
            data = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from None
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
        unknown = set(data) - set(DEFAULTS)
        if unknown:
            raise ConfigError(f"unknown config fields {sorted(unknown)}")
        cfg.update(data)
    if args.body is not None:
        try:
            cfg["body"] = json.loads(args.body)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"--body is not valid JSON: {exc}") from None
        cfg["input_csv"] = None
    if args.input is not None:
        cfg["input_csv"] = args.input
        if args.body is None:
            cfg["body"] = None
    if args.out is not None:
        cfg["output_dir"] = args.out
    if args.grid is not None:
        cfg["output_grid"] = args.grid
    if args.mesh:
        cfg["mesh"] = True
    if args.dual_path:
        cfg["dual_path"] = True
    if args.jobs is not None:
        cfg["n_jobs"] = args.jobs

    if (cfg["body"] is None) == (cfg["input_csv"] is None):
        raise ConfigError("exactly one of a body spec or an input CSV is required")
    body = BodySpec.from_dict(cfg["body"]) if cfg["body"] is not None else None
    q = cfg["quadrature"]
    if args.quadrature is not None:
        q = QuadratureSpec.parse(args.quadrature)
    elif isinstance(q, dict):
        q = QuadratureSpec.from_dict(q)
    else:
        raise ConfigError("quadrature must be an object")
    grid = _grid(cfg["output_grid"], 2, "output grid")
    if grid[1] % 2:
        raise ConfigError("output grid needs an even number of longitudes")
    opts = {k: cfg[k] for k in DEFAULTS if k not in ("body", "input_csv", "quadrature", "output_grid", "output_dir")}
    opts["sample_grid"] = _grid(opts["sample_grid"], 3, "sample grid")
    opts["mesh_grid"] = _grid(opts["mesh_grid"], 2, "mesh grid") if opts["mesh_grid"] else grid
    return RunConfig(body, Path(cfg["input_csv"]) if cfg["input_csv"] else None, q, grid,
                     Path(cfg["output_dir"]), opts)


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


# --- commands -------------------------------------------------------------


def cmd_forward(cfg: RunConfig) -> tuple[Path, int]:
    if cfg.body is None:
        raise ConfigError("forward needs a body spec")
    F = ForwardFlagFunction(support(cfg.body))
    n_nu, n_tau, n_phi = cfg.options["sample_grid"]
    vals = sample_flag_function(F, n_nu, n_tau, n_phi)
    path = cfg.output_dir / "flags.csv"
    write_flag_csv(F, path, n_nu, n_tau, n_phi, values=vals)
    log.info("R min %.12g max %.12g over %d flags", float(vals.min()), float(vals.max()), vals.size)
    return path, 0


def _checks(F, n_dirs: int, tol):
    dirs = fibonacci_directions(n_dirs)
    orth = merge_reports([check_orthogonality(F, w, tol=tol) for w in dirs])
    belt = merge_reports([check_belt_derivative(F, w, tol=tol) for w in dirs])
    return orth, belt


def cmd_check(cfg: RunConfig) -> tuple[Path, int]:
    F = cfg.flag_function()
    orth, belt = _checks(F, cfg.options["check_directions"], cfg.options["tolerance"])
    path = cfg.output_dir / "check.json"
    ok = orth.passed and belt.passed
    _write_json(path, {"pass": ok, "reports": [orth.to_dict(), belt.to_dict()]})
    for r in (orth, belt):
        log.info("%s: residual %.3e tolerance %.3e %s", r.condition_id, r.max_abs_residual,
                 r.tolerance_used, "pass" if r.passed else "FAIL")
    return path, 0 if ok else EXIT_CHECK


def _pole_failures(result) -> list[str]:
    return [m for m in result.failures.values() if m.startswith("PoleDivergence")]


def cmd_reconstruct(cfg: RunConfig) -> tuple[Path, int]:
    F = cfg.flag_function()
    n_nu, n_tau = cfg.output_grid
    res = reconstruct_grid(F, grid_directions(n_nu, n_tau), cfg.quadrature, n_jobs=cfg.options["n_jobs"],
                           grid_shape=(n_nu, n_tau), timing=cfg.options["timing"])
    path = cfg.output_dir / "reconstruction.json"
    res.to_json(path)
    res.to_csv(cfg.output_dir / "reconstruction.csv")
    poles = _pole_failures(res)
    if poles:
        log.error("%d directions diverge at the pole; first: %s", len(poles), poles[0])
        return path, EXIT_POLE
    if res.failures:
        log.error("%d directions failed; first: %s", len(res.failures), next(iter(res.failures.values())))
        return path, EXIT_MATH
    if cfg.options["mesh"]:
        H = sampled_reconstruction(F, n_nu, n_tau, cfg.quadrature, result=res)
        verts, faces = latlong_mesh(H, *cfg.options["mesh_grid"])
        write_obj(cfg.output_dir / "mesh.obj", verts, faces, "reconstructed boundary")
    log.info("H range [%.12g, %.12g] over %d directions", float(res.H_values.min(initial=np.inf)),
             float(res.H_values.max(initial=-np.inf)), len(res))
    return path, 0


@dataclass
class RoundTripReport:
    body_id: str
    sup_norm_error: float
    l2_error: float
    fitted_translation: list
    condition_residuals: dict
    convergence_table: list
    wall_time: float | None = None
    dual_path: list | None = None

    def to_dict(self) -> dict:
        return {
            "body_id": self.body_id,
            "sup_norm_error": self.sup_norm_error,
            "l2_error": self.l2_error,
            "fitted_translation": list(self.fitted_translation),
            "condition_residuals": dict(self.condition_residuals),
            "convergence_table": [dict(r) for r in self.convergence_table],
            "wall_time": self.wall_time,
            "dual_path": self.dual_path,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "RoundTripReport":
        return cls(**d)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "RoundTripReport":
        return cls.from_dict(json.loads(text))


def centroid_referenced(H, directions) -> np.ndarray:
    """Ground-truth support values with the origin moved to the centroid."""
    c = centroid(H).point
    return H(directions) - directions @ c


def cmd_roundtrip(cfg: RunConfig) -> tuple[Path, int]:
    if cfg.body is None:
        raise ConfigError("roundtrip needs a body spec")
    start = time.perf_counter()
    H = support(cfg.body)
    F = ForwardFlagFunction(H)
    orth, belt = _checks(F, cfg.options["check_directions"], cfg.options["tolerance"])
    n_nu, n_tau = cfg.output_grid
    D = grid_directions(n_nu, n_tau)
    res = reconstruct_grid(F, D, cfg.quadrature, n_jobs=cfg.options["n_jobs"], conditions=False)
    if _pole_failures(res):
        log.error("pole divergence during reconstruction: %s", _pole_failures(res)[0])
        return cfg.output_dir / "roundtrip.json", EXIT_POLE
    truth = centroid_referenced(H, D)
    diff = res.H_values - truth
    a, *_ = np.linalg.lstsq(D, diff, rcond=None)
    area = np.cos(np.arcsin(np.clip(D[:, 2], -1, 1)))
    l2 = float(np.sqrt(np.sum(area * diff**2) / np.sum(area)))

    # resolution ladder on a fixed subset of grid directions
    k = min(cfg.options["ladder_directions"], len(D))
    idx = np.linspace(0, len(D) - 1, k).round().astype(int) if k else np.zeros(0, int)
    sub, sub_truth = D[idx], truth[idx]
    table = []
    for m in cfg.options["ladder"]:
        q = QuadratureSpec(cfg.quadrature.M_phi, int(m), cfg.quadrature.N_nu, cfg.quadrature.eps_pole,
                           cfg.quadrature.extrapolate_pole)
        r = reconstruct_grid(F, sub, q, n_jobs=cfg.options["n_jobs"], conditions=False)
        table.append({"M_tau": int(m), "error": float(np.max(np.abs(r.H_values - sub_truth)))})
    dual = None
    if cfg.options["dual_path"]:
        dual = [{"direction": [float(x) for x in w], "closed_form": float(h),
                 "ode_path": ode_path_support(F, w, cfg.quadrature)}
                for w, h in zip(sub, res.H_values[idx])]
        for row in dual:
            row["difference"] = abs(row["ode_path"] - row["closed_form"])
    report = RoundTripReport(
        cfg.body.label(), float(np.max(np.abs(diff), initial=0.0)), l2, [float(x) for x in a],
        {"orthogonality": orth.max_abs_residual, "belt_derivative": belt.max_abs_residual},
        table, time.perf_counter() - start if cfg.options["timing"] else None, dual)
    path = cfg.output_dir / "roundtrip.json"
    path.write_text(report.to_json())
    log.info("sup-norm error %.3e, l2 error %.3e", report.sup_norm_error, report.l2_error)
    code = 0 if orth.passed and belt.passed else EXIT_CHECK
    return path, code


COMMANDS = {"forward": cmd_forward, "check": cmd_check, "reconstruct": cmd_reconstruct, "roundtrip": cmd_roundtrip}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="flagtomo", description="Support function reconstruction from "
                                "projection curvature radii.")
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        s = sub.add_parser(name)
        s.add_argument("--config", help="JSON run configuration")
        s.add_argument("--out", help="output directory")
        s.add_argument("--grid", help="output grid NxM (latitudes x longitudes)")
        s.add_argument("--quadrature", help="M_phi,M_tau,N_nu,eps_pole")
        s.add_argument("--mesh", action="store_true", help="also export an OBJ mesh")
        s.add_argument("--dual-path", action="store_true", help="cross-check with the ODE path")
        s.add_argument("--body", help="body spec as inline JSON")
        s.add_argument("--input", help="flag-sample CSV input")
        s.add_argument("--jobs", type=int, help="worker threads for reconstruction")
        s.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO, stream=sys.stderr,
                        format="%(levelname)s %(message)s")
    try:
        cfg = load_config(args)
        cfg.output_dir.mkdir(parents=True, exist_ok=True)
        path, code = COMMANDS[args.command](cfg)
    except (ConfigError, InvalidParameter, FileNotFoundError) as exc:
        log.error("%s", exc)
        return EXIT_CONFIG
    except PoleDivergence as exc:
        log.error("%s (c1=%s)", exc, exc.c1)
        return EXIT_POLE
    except FlagTomoError as exc:
        log.error("%s: %s", type(exc).__name__, exc)
        return EXIT_MATH
    except ValueError as exc:
        log.error("%s", exc)
        return EXIT_CONFIG
    print(path)
    return code


if __name__ == "__main__":
    sys.exit(main())
