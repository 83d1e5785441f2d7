"""Command line: ``urnlab simulate | analyze | phase | verify``.

Exit codes: 0 success, 1 acceptance failure, 2 usage or I/O error.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import asdict, dataclass, fields
from pathlib import Path

import numpy as np

from . import io
from .acceptance import DEFAULT_SEED, run_acceptance
from .estimators import make_model
from .field import cyclic_center_eigenvalues, symmetric_center_eigenvalue
from .montecarlo import Tolerances, run_ensemble
from .phase import REFINE_TOL, curve_rows, empirical_overlay, sweep_cyclic, sweep_symmetric
from .stationary import (
    PolyParams,
    RootCertificationError,
    Variant,
    beta0,
    beta1,
    beta_asymmetric,
    cyclic_center_stability,
    find_positive_roots,
    phase_symmetric,
    stationary_points_for,
    two_type_root,
)
from .urn import DEFAULT_THINNING

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2
SUBCOMMANDS = ("simulate", "analyze", "phase", "verify")
KINDS = ("symmetric", "cyclic", "two-type", "general")


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    """Everything a CLI run depends on; serialises to and from a flat dict."""

    subcommand: str
    model: str = "symmetric"
    a: float | None = None
    beta: float = 2.0
    d: int = 3
    matrix: str | None = None
    steps: int = 100_000
    traj: int = 20
    seed: int = DEFAULT_SEED
    thinning: int = DEFAULT_THINNING
    point_tol: float = 0.02
    winding_min: float = 3.0
    radius_min: float = 0.05
    tail_fraction: float = 0.1
    out: str | None = None
    format: str = "csv"
    a_range: tuple | None = None
    beta_range: tuple | None = None
    with_search: bool = False
    empirical: bool = False
    refine_tol: float = REFINE_TOL
    quick: bool = False

    def __post_init__(self):
        if self.subcommand not in SUBCOMMANDS:
            raise UsageError(f"unknown subcommand {self.subcommand!r}")
        if self.model not in KINDS:
            raise UsageError(f"unknown model kind {self.model!r}")
        if self.matrix is not None and self.model != "general":
            raise UsageError(f"--matrix only applies to --model general, not {self.model}")
        if self.model == "general" and self.matrix is None and self.subcommand in ("simulate", "analyze"):
            raise UsageError("--model general needs --matrix FILE")
        if self.model == "cyclic" and self.a is None:
            self.a = 1.0
        if self.model in ("symmetric", "two-type") and self.a is None and self.subcommand in ("simulate", "analyze"):
            raise UsageError(f"--model {self.model} needs -a")
        if self.model == "two-type":
            self.d = 2
        if self.model == "cyclic" and self.d != 3:
            raise UsageError("the cyclic model has three colours")
        if self.subcommand == "phase" and self.model not in ("symmetric", "cyclic"):
            raise UsageError("phase sweeps support --model symmetric or cyclic")
        if self.format not in ("csv", "json"):
            raise UsageError(f"unknown format {self.format!r}")
        for name in ("steps", "traj", "thinning"):
            if getattr(self, name) < 1:
                raise UsageError(f"--{name} must be >= 1")
        if self.d < 2:
            raise UsageError("-d must be >= 2")
        if self.a_range is not None:
            self.a_range = tuple(float(v) for v in self.a_range)
        if self.beta_range is not None:
            self.beta_range = tuple(float(v) for v in self.beta_range)

    def to_dict(self):
        out = asdict(self)
        for key in ("a_range", "beta_range"):
            if out[key] is not None:
                out[key] = list(out[key])
        return out

    @classmethod
    def from_dict(cls, data):
        known = {f.name for f in fields(cls)}
        extra = set(data) - known
        if extra:
            raise UsageError(f"unknown config keys: {sorted(extra)}")
        return cls(**data)

    def tolerances(self):
        return Tolerances(self.point_tol, self.winding_min, self.radius_min, self.tail_fraction)


def _range(bounds, name):
    start, stop, step = bounds
    if step <= 0 or stop < start:
        raise UsageError(f"--{name}-range needs START <= STOP and STEP > 0")
    n = int(round((stop - start) / step)) + 1
    grid = start + step * np.arange(n)
    # snap to clean decimals so 0.05 * k prints as 0.15, not 0.15000000000000002
    return np.round(grid, 12)


# ---------------------------------------------------------------- commands


def _model(cfg: RunConfig):
    A = io.read_matrix(cfg.matrix) if cfg.matrix else None
    return make_model(cfg.model, cfg.a, cfg.beta, cfg.d, A)


def _out_dir(cfg):
    if cfg.out is None:
        return None
    path = Path(cfg.out)
    if not path.is_dir():
        raise FileNotFoundError(f"output directory does not exist: {path}")
    return path


def cmd_simulate(cfg: RunConfig, stdout):
    out = _out_dir(cfg)
    model = _model(cfg)
    summary = run_ensemble(
        model, cfg.traj, cfg.steps, cfg.seed, cfg.tolerances(), thinning=cfg.thinning, keep_records=out is not None
    )
    doc = summary.to_dict()
    if out is not None:
        written = []
        width = max(3, len(str(cfg.traj - 1)))
        for rec in summary.records:
            path = out / f"traj_{rec.index:0{width}d}.{cfg.format}"
            written.append(io.write_trajectory(path, rec, cfg.format))
        summary_path = io.write_json(out / "summary.json", doc)
        written.append(summary_path)
        io.write_provenance(summary_path, cfg.to_dict(), summary.seeds, written)
    stdout.write(io.dumps(doc))
    return EXIT_OK


def analyze_document(cfg: RunConfig):
    model = _model(cfg)
    doc = {"model": model.to_dict()}
    if model.kind == "symmetric" and model.d == 3:
        a, beta = model.a, model.beta
        doc["roots"] = [{"value": r.value, "multiplicity": r.multiplicity} for r in find_positive_roots(PolyParams(a, beta))]
        doc["phase"] = phase_symmetric(a, beta).to_dict()
        doc["thresholds"] = {
            "beta0": beta0(a) if a < 1 else None,
            "beta1": beta1(a) if a < 1 else None,
            "beta_asymmetric": beta_asymmetric(a) if a < 1 else None,
        }
    elif model.kind == "two-type":
        a, beta = model.a, model.beta
        doc["roots"] = [
            {"value": r.value, "multiplicity": r.multiplicity}
            for r in find_positive_roots(PolyParams(a, beta, Variant.TWO_TYPE_SYMMETRIC))
        ]
        doc["root_in_unit_interval"] = two_type_root(a, beta)
        doc["thresholds"] = {"criterion": (1 - a) / (1 + a) * beta}
    elif model.kind == "symmetric":
        doc["thresholds"] = {"center_eigenvalue": symmetric_center_eigenvalue(model.a, model.beta, model.d)}
    elif model.kind == "cyclic":
        a, beta = model.a, model.beta
        ev = cyclic_center_eigenvalues(a, beta)
        doc["center_stability"] = cyclic_center_stability(a, beta).value
        doc["thresholds"] = {
            "beta_center": 2 * (1 + a) / (2 - a) if a < 2 else None,
            "center_eigenvalues": [[ev[0].real, ev[0].imag], [ev[1].real, ev[1].imag]],
        }
    doc["stationary_points"] = [p.to_dict() for p in stationary_points_for(model)]
    return doc


def cmd_analyze(cfg: RunConfig, stdout):
    out = _out_dir(cfg)
    doc = analyze_document(cfg)
    if out is not None:
        path = io.write_json(out / "analysis.json", doc)
        io.write_provenance(path, cfg.to_dict(), files=[path])
    stdout.write(io.dumps(doc))
    return EXIT_OK


def cmd_phase(cfg: RunConfig, stdout):
    out = _out_dir(cfg)
    a_bounds = cfg.a_range or ((0.05, 0.95, 0.05) if cfg.model == "symmetric" else (0.1, 2.0, 0.1))
    b_bounds = cfg.beta_range or (1.0, 6.0, 0.25)
    a_grid, b_grid = _range(a_bounds, "a"), _range(b_bounds, "beta")
    if cfg.model == "symmetric":
        grid = sweep_symmetric(a_grid, b_grid)
    else:
        grid = sweep_cyclic(a_grid, b_grid, with_search=cfg.with_search)
    if cfg.empirical:
        empirical_overlay(grid, n_traj=cfg.traj, steps=cfg.steps, seed=cfg.seed, tolerances=cfg.tolerances())
    rows = curve_rows(grid, cfg.refine_tol)
    grid.metadata["refine_tol"] = cfg.refine_tol
    doc = {**grid.to_dict(), "curves": [{"a": a, "beta": b, "curve_id": c} for a, b, c in rows]}
    if out is not None:
        written = [
            io.atomic_write(out / "phase.csv", io.phase_csv(grid)),
            io.atomic_write(out / "curves.csv", io.curves_csv(rows)),
            io.write_json(out / "phase.json", doc),
        ]
        io.write_provenance(written[0], cfg.to_dict(), [cfg.seed] if cfg.empirical else None, written)
        stdout.write(io.dumps({"cells": len(a_grid) * len(b_grid), "curve_points": len(rows), "files": [p.name for p in written]}))
    else:
        stdout.write(io.dumps(doc))
    return EXIT_OK


def cmd_verify(cfg: RunConfig, stdout):
    out = _out_dir(cfg)
    report = run_acceptance(quick=cfg.quick, seed=cfg.seed)
    text = report.text()
    if out is not None:
        path = io.atomic_write(out / "acceptance.txt", text)
        json_path = io.write_json(out / "acceptance.json", report.to_dict())
        io.write_provenance(path, cfg.to_dict(), [cfg.seed], [path, json_path])
    stdout.write(text)
    return EXIT_OK if report.passed else EXIT_FAIL


COMMANDS = {"simulate": cmd_simulate, "analyze": cmd_analyze, "phase": cmd_phase, "verify": cmd_verify}


# ---------------------------------------------------------------- parsing


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser():
    p = _Parser(prog="urnlab", description="Nonlinear reinforced urns: simulation, stationary points, phases.")
    sub = p.add_subparsers(dest="subcommand", required=True, parser_class=_Parser)

    def model_args(sp):
        sp.add_argument("--model", choices=KINDS, default="symmetric")
        sp.add_argument("-a", type=float, default=None, help="off-diagonal interaction weight")
        sp.add_argument("--beta", type=float, default=2.0, help="reinforcement exponent")
        sp.add_argument("-d", type=int, default=3, help="number of colours (symmetric model)")
        sp.add_argument("--matrix", default=None, help="interaction matrix file (general model)")

    def ensemble_args(sp, steps=100_000):
        sp.add_argument("--steps", type=int, default=steps)
        sp.add_argument("--traj", type=int, default=20)
        sp.add_argument("--seed", type=int, default=DEFAULT_SEED)
        sp.add_argument("--thinning", type=int, default=DEFAULT_THINNING)
        sp.add_argument("--point-tol", type=float, default=0.02)
        sp.add_argument("--winding-min", type=float, default=3.0)
        sp.add_argument("--radius-min", type=float, default=0.05)
        sp.add_argument("--tail-fraction", type=float, default=0.1)

    def out_args(sp):
        sp.add_argument("--out", default=None, help="existing output directory")

    s = sub.add_parser("simulate", help="run a seeded ensemble and classify limits")
    model_args(s)
    ensemble_args(s)
    out_args(s)
    s.add_argument("--format", choices=("csv", "json"), default="csv")

    s = sub.add_parser("analyze", help="roots, stationary points, stability and phase")
    model_args(s)
    out_args(s)

    s = sub.add_parser("phase", help="phase grid and boundary curves")
    s.add_argument("--model", choices=("symmetric", "cyclic"), default="symmetric")
    s.add_argument("--a-range", type=float, nargs=3, metavar=("START", "STOP", "STEP"))
    s.add_argument("--beta-range", type=float, nargs=3, metavar=("START", "STOP", "STEP"))
    s.add_argument("--with-search", action="store_true", help="cyclic: grid search for extra stable points")
    s.add_argument("--empirical", action="store_true", help="overlay ensemble verdicts per cell")
    s.add_argument("--refine-tol", type=float, default=REFINE_TOL)
    ensemble_args(s)
    out_args(s)

    s = sub.add_parser("verify", help="run the acceptance suite")
    s.add_argument("--quick", action="store_true", help="analytic criteria only")
    s.add_argument("--seed", type=int, default=DEFAULT_SEED)
    out_args(s)
    return p


def parse_config(argv) -> RunConfig:
    return RunConfig(**vars(build_parser().parse_args(argv)))


def main(argv=None, stdout=None, stderr=None):
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    argv = sys.argv[1:] if argv is None else argv
    try:
        cfg = parse_config(argv)
        return COMMANDS[cfg.subcommand](cfg, stdout)
    except UsageError as exc:
        stderr.write(f"urnlab: error: {exc}\n")
        return EXIT_USAGE
    except (OSError, io.MatrixFileError) as exc:
        where = getattr(exc, "filename", None)
        stderr.write(f"urnlab: I/O error{f' ({where})' if where else ''}: {exc}\n")
        return EXIT_USAGE
    except (ValueError, TypeError, OverflowError, NotImplementedError, RootCertificationError) as exc:
        stderr.write(f"urnlab: error: {exc}\n")
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
