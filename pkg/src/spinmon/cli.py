"""Config-driven experiment runner.

Usage::

    spinmon --config experiment.yaml [--mode MODE] [--seed N] [--threads N] [--out DIR]

Exit status: 0 on success, 2 for an invalid config, 3 when some grid points
failed (their rows carry an ``error`` entry).
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
import time
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np
import yaml

from . import __version__
from .haar_model import haar_mean_qfi_curve
from .observables import reference_values
from .operators import SpinQuantum
from .scaling import beta_curve
from .trajectory import InitialCondition, raw_sigma_grid, rescaled_grid, run_sweep

log = logging.getLogger("spinmon")

SCHEMA_VERSION = 1
MODES = ("pure_sweep", "mixed_sweep", "haar_curve", "beta_curve", "reference_table")
EXIT_OK, EXIT_CONFIG, EXIT_PARTIAL = 0, 2, 3

SWEEP_COLUMNS = [
    "N", "J", "k", "sigma", "sigma_over_sqrtJ", "sigma_over_J",
    "mean_qfi", "mean_qfi_over_J2", "sem", "n_traj", "steps", "seed", "error",
]
MIXED_COLUMNS = [
    "N", "J", "k", "sigma", "sigma_over_sqrtJ", "sigma_over_J",
    "mean_purity", "sem", "n_traj", "steps", "seed", "error",
]
HAAR_COLUMNS = [
    "J", "sigma", "sigma_over_sqrtJ", "sigma_over_J", "mean_qfi", "mean_qfi_over_J2", "rel_change", "converged",
]
FIT_COLUMNS = ["k", "sigma_over_sqrtJ", "beta", "beta_err", "c", "r_squared", "n_points", "sizes", "flag"]
REFERENCE_COLUMNS = ["N", "J", "state", "mean_qfi", "mean_qfi_over_J2"]


class ConfigError(ValueError):
    def __init__(self, path: str, message: str, line: int | None = None):
        self.path, self.line = path, line
        where = f"line {line}, " if line else ""
        super().__init__(f"{where}field '{path}': {message}")


@dataclass
class ExperimentSpec:
    mode: str
    seed: int
    schema_version: int = SCHEMA_VERSION
    sizes: list[int] = field(default_factory=list)
    ks: list[float] = field(default_factory=list)
    sigma_over_sqrtJ: list[float] | None = None
    sigma: list[float] | None = None
    J: list[float] = field(default_factory=list)
    steps: int | None = None
    n_trajectories: int = 50
    burn_in: int = 0
    squeezing_r: float = 0.0
    quadrature_nodes: int = 2048
    out_dir: str = "out"
    formats: list[str] = field(default_factory=lambda: ["csv", "json"])

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, raw: dict) -> "ExperimentSpec":
        if not isinstance(raw, dict):
            raise ConfigError("<root>", "config must be a mapping")
        known = {f.name for f in fields(cls)}
        extra = sorted(set(raw) - known)
        if extra:
            raise ConfigError(extra[0], "unknown key")
        for key in ("schema_version", "mode", "seed"):
            if key not in raw:
                raise ConfigError(key, "required key missing")
        spec = cls(**{k: raw[k] for k in raw})
        spec.validate()
        return spec

    def validate(self):
        if self.schema_version != SCHEMA_VERSION:
            raise ConfigError("schema_version", f"unsupported version {self.schema_version!r}")
        if self.mode not in MODES:
            raise ConfigError("mode", f"must be one of {', '.join(MODES)}")
        if isinstance(self.seed, bool) or not isinstance(self.seed, int) or self.seed < 0:
            raise ConfigError("seed", "must be a non-negative integer")
        for name in ("sizes", "ks", "J", "formats"):
            val = getattr(self, name)
            if not isinstance(val, list):
                raise ConfigError(name, "must be a list")
        for fmt in self.formats:
            if fmt not in ("csv", "json"):
                raise ConfigError("formats", f"unknown format {fmt!r}")
        if any(isinstance(n, bool) or not isinstance(n, int) or n < 1 for n in self.sizes):
            raise ConfigError("sizes", "particle numbers must be positive integers")

        if self.mode in ("pure_sweep", "mixed_sweep", "beta_curve"):
            if not self.sizes:
                raise ConfigError("sizes", "grid must be non-empty")
            if not self.ks:
                raise ConfigError("ks", "grid must be non-empty")
            if (self.sigma_over_sqrtJ is None) == (self.sigma is None):
                raise ConfigError("sigma_over_sqrtJ", "give exactly one of sigma_over_sqrtJ or sigma")
            grid = self.sigma_over_sqrtJ if self.sigma is None else self.sigma
            name = "sigma_over_sqrtJ" if self.sigma is None else "sigma"
            if not isinstance(grid, list) or not grid:
                raise ConfigError(name, "grid must be a non-empty list")
            if any(not _is_number(x) or x <= 0 for x in grid):
                raise ConfigError(name, "resolutions must be positive numbers")
            if self.mode == "beta_curve" and self.sigma is not None:
                raise ConfigError("sigma", "beta_curve needs a sigma_over_sqrtJ grid")
            if self.n_trajectories < 1:
                raise ConfigError("n_trajectories", "must be >= 1")
            if self.steps is not None and self.steps < 1:
                raise ConfigError("steps", "must be >= 1")
            if self.burn_in < 0 or (self.steps is not None and self.burn_in >= self.steps):
                raise ConfigError("burn_in", "must satisfy 0 <= burn_in < steps")
        elif self.mode == "haar_curve":
            if not self.J or any(not _is_number(j) or j < 1 for j in self.J):
                raise ConfigError("J", "non-empty list of J >= 1 required")
            grid = self.sigma_over_sqrtJ if self.sigma is None else self.sigma
            if not grid:
                raise ConfigError("sigma_over_sqrtJ", "grid must be non-empty")
        elif self.mode == "reference_table":
            if not self.sizes:
                raise ConfigError("sizes", "grid must be non-empty")


def _is_number(x) -> bool:
    return isinstance(x, (int, float)) and not isinstance(x, bool) and np.isfinite(x)


def _expand_grid(value):
    """Allow ``{logspace: [start, stop, num]}`` / ``{linspace: [...]}`` shorthands."""
    if isinstance(value, dict) and len(value) == 1:
        (kind, args), = value.items()
        if kind == "logspace":
            a, b, n = args
            return [float(v) for v in np.geomspace(a, b, int(n))]
        if kind == "linspace":
            a, b, n = args
            return [float(v) for v in np.linspace(a, b, int(n))]
    return value


def _line_of(text: str, key: str) -> int | None:
    try:
        root = yaml.compose(text)
    except yaml.YAMLError:
        return None
    if isinstance(root, yaml.MappingNode):
        for k, _ in root.value:
            if k.value == key:
                return k.start_mark.line + 1
    return None


def load_spec(path: str | Path) -> ExperimentSpec:
    text = Path(path).read_text()
    try:
        raw = yaml.safe_load(text)
    except yaml.MarkedYAMLError as exc:
        line = exc.problem_mark.line + 1 if exc.problem_mark else None
        raise ConfigError("<yaml>", str(exc.problem), line) from exc
    if isinstance(raw, dict):
        for key in ("sigma_over_sqrtJ", "sigma"):
            if key in raw:
                raw[key] = _expand_grid(raw[key])
    try:
        return ExperimentSpec.from_dict(raw)
    except ConfigError as exc:
        raise ConfigError(exc.path, str(exc).split(": ", 1)[-1], _line_of(text, exc.path)) from None
    except TypeError as exc:
        raise ConfigError("<root>", str(exc)) from None


def dump_spec(spec: ExperimentSpec) -> str:
    return yaml.safe_dump(spec.to_dict(), sort_keys=False)


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def write_csv(path: Path, columns: list[str], rows: list[dict]):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, quoting=csv.QUOTE_MINIMAL, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_fmt(row.get(c)) for c in columns])


def _sweep_configs(spec: ExperimentSpec, mixed: bool):
    ic = InitialCondition("maximally_mixed") if mixed else InitialCondition()
    common = dict(steps=spec.steps, n_trajectories=spec.n_trajectories, burn_in=spec.burn_in,
                  seed=spec.seed, initial_condition=ic)
    if spec.sigma is None:
        return rescaled_grid(spec.sizes, spec.ks, spec.sigma_over_sqrtJ, **common)
    return raw_sigma_grid(spec.sizes, spec.ks, spec.sigma, **common)


def _sweep_rows(result, mixed: bool) -> list[dict]:
    rows = []
    for r in result.rows:
        row = dict(N=r.N, J=r.J, k=r.k, sigma=r.sigma, sigma_over_sqrtJ=r.sigma_over_sqrtJ,
                   sigma_over_J=r.sigma_over_J, sem=r.sem, n_traj=r.n_trajectories, steps=r.steps,
                   seed=r.seed, error=r.error)
        if mixed:
            row["mean_purity"] = r.mean
        else:
            row["mean_qfi"] = r.mean
            row["mean_qfi_over_J2"] = r.mean / r.J**2
        rows.append(row)
    return rows


def execute(spec: ExperimentSpec, threads: int | None = None) -> tuple[dict[str, tuple[list, list]], int]:
    """Run ``spec``; return ``{table_name: (columns, rows)}`` and an exit status."""
    status = EXIT_OK
    tables = {}
    if spec.mode in ("pure_sweep", "mixed_sweep", "beta_curve"):
        mixed = spec.mode == "mixed_sweep"
        result = run_sweep(_sweep_configs(spec, mixed), threads=threads)
        if result.failed:
            status = EXIT_PARTIAL
        tables["results"] = (MIXED_COLUMNS if mixed else SWEEP_COLUMNS, _sweep_rows(result, mixed))
        if spec.mode == "beta_curve":
            fits = []
            for b in beta_curve(result):
                f = b.fit
                fits.append(dict(
                    k=b.k, sigma_over_sqrtJ=b.sigma_over_sqrtJ,
                    beta=f.beta if f else None, beta_err=f.beta_err if f else None,
                    c=f.c if f else None, r_squared=f.r_squared if f else None,
                    n_points=f.n_points if f else len(b.sizes),
                    sizes=" ".join(str(n) for n in b.sizes), flag=b.flag,
                ))
            tables["fits"] = (FIT_COLUMNS, fits)
    elif spec.mode == "haar_curve":
        rows = []
        for J in spec.J:
            sig = np.asarray(spec.sigma if spec.sigma is not None else
                             [x * np.sqrt(J) for x in spec.sigma_over_sqrtJ], dtype=float)
            curve = haar_mean_qfi_curve(J, sig, nodes=spec.quadrature_nodes)
            for i in range(sig.size):
                rows.append(dict(J=float(J), sigma=sig[i], sigma_over_sqrtJ=curve.sigma_over_sqrtJ[i],
                                 sigma_over_J=sig[i] / J, mean_qfi=curve.mean_qfi[i],
                                 mean_qfi_over_J2=curve.mean_qfi_over_J2[i],
                                 rel_change=curve.rel_change[i], converged=bool(curve.converged[i])))
            if not curve.converged.all():
                log.warning("haar curve J=%s: quadrature not converged at %d points", J,
                            int((~curve.converged).sum()))
                status = EXIT_PARTIAL
        tables["results"] = (HAAR_COLUMNS, rows)
    elif spec.mode == "reference_table":
        rows = []
        for n in spec.sizes:
            q = SpinQuantum(n)
            for state, val in reference_values(q, spec.squeezing_r).items():
                rows.append(dict(N=n, J=q.J, state=state, mean_qfi=val, mean_qfi_over_J2=val / q.J**2))
        tables["results"] = (REFERENCE_COLUMNS, rows)
    return tables, status


def _jsonable(v):
    if isinstance(v, (np.floating, float)):
        v = float(v)
        return v if np.isfinite(v) else None
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, np.bool_):
        return bool(v)
    return v


def run(spec: ExperimentSpec, threads: int | None = None) -> int:
    out = Path(spec.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    tables, status = execute(spec, threads)
    wall = time.perf_counter() - t0

    written = []
    if "csv" in spec.formats:
        for name, (cols, rows) in tables.items():
            write_csv(out / f"{name}.csv", cols, rows)
            written.append(f"{name}.csv")
    manifest = {
        "schema_version": SCHEMA_VERSION,
        "code_version": __version__,
        "mode": spec.mode,
        "seed": spec.seed,
        "config": spec.to_dict(),
        "wall_time_s": wall,
        "exit_status": status,
        "outputs": written + ["manifest.json"],
    }
    if "json" in spec.formats:
        manifest["tables"] = {
            name: [{c: _jsonable(r.get(c)) for c in cols} for r in rows] for name, (cols, rows) in tables.items()
        }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")
    return status


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="spinmon", description="Monitored kicked-top experiments")
    p.add_argument("--config", required=True, help="YAML experiment file")
    p.add_argument("--mode", choices=MODES, help="override the config mode")
    p.add_argument("--seed", type=int, help="override the master seed")
    p.add_argument("--threads", type=int, default=None, help="worker processes (default: all cores)")
    p.add_argument("--out", help="output directory (overrides config out_dir)")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        spec = load_spec(args.config)
        if args.mode:
            spec.mode = args.mode
        if args.seed is not None:
            spec.seed = args.seed
        if args.out:
            spec.out_dir = args.out
        spec.validate()
    except (ConfigError, OSError) as exc:
        print(f"spinmon: invalid config: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    status = run(spec, threads=args.threads)
    if status == EXIT_PARTIAL:
        print("spinmon: some grid points failed; see rows with an error entry", file=sys.stderr)
    return status


if __name__ == "__main__":
    sys.exit(main())
