"""Command-line front end.

    windowbands [--workers N] [--output-dir DIR] SUBCOMMAND PATH

Subcommands: solve-cell, band-sweep, asymptotics, validate, resolvent-study.
``PATH`` is an INI run configuration; ``asymptotics`` also accepts a
resonance record written by ``solve-cell``.

Exit codes: 0 success, 2 bad invocation, 3 configuration error,
4 numerical failure.  Errors go to stderr as ``windowbands: error[<category>]: ...``.
"""
from __future__ import annotations

import argparse
import configparser
import csv
import logging
import os
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import asymptotics as asy
from .bands import (SolverConfig, adjudicate_asymptotics, fiber_eigs, interior_extremum_scan,
                    resolvent_convergence_study, sweep)
from .eigensolver import SolverError
from .geometry import CellGeometry, GeometryError, Slab, build_cell, make_grid
from .operators import (PotentialSpec, discrete_threshold, gaussian_bump, table_potential,
                        zero_potential)
from .threshold import (ResonanceData, SignConvention, ThresholdError, detect_virtual_levels,
                        extract_resonance_data, read_resonance_record, separation_check,
                        write_resonance_record)

log = logging.getLogger("windowbands")

EXIT_OK, EXIT_USAGE, EXIT_CONFIG, EXIT_SOLVER = 0, 2, 3, 4
OUTPUT_ENV = "WINDOWBANDS_OUTPUT_DIR"
FMT = "%.12g"


class ConfigError(ValueError):
    pass


def _floats(text: str) -> list[float]:
    return [float(t) for t in text.replace(",", " ").split()]


def _bool(text: str) -> bool:
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _opt_int(text: str) -> int | None:
    return None if text.strip().lower() in ("", "none") else int(text)


def _opt_float(text: str) -> float | None:
    return None if text.strip().lower() in ("", "none") else float(text)


# section -> key -> (parser, default); REQUIRED marks mandatory keys
REQUIRED = object()
SCHEMA: dict[str, dict[str, tuple]] = {
    "geometry": {
        "d": (float, REQUIRED),
        "a_minus": (float, 0.0),
        "a_plus": (float, 0.0),
        "x2_zero": (float, 1.0),
        "x2_inf": (_opt_float, None),
        "profile": (str, ""),
    },
    "potential": {
        "kind": (str, "zero"),
        "amplitude": (float, 0.0),
        "center": (_floats, [0.5, 0.0]),
        "widths": (_floats, [0.1, 0.1]),
        "support": (_opt_float, None),
        "file": (str, ""),
    },
    "grid": {
        "n1": (int, 32),
        "x": (float, 3.0),
        "h2": (_opt_float, None),
        "mode_cut": (_opt_int, None),
    },
    "solver": {
        "tol": (float, 1e-9),
        "bc": (str, "robin"),
        "fixed_point_tol": (float, 1e-10),
        "threshold_window": (float, 0.5),
        "threshold_abs_tol": (float, 1e-7),
        "sign": (str, "minus"),
    },
    "sweep": {
        "eps": (_floats, [0.3]),
        "tau_count": (int, 17),
        "tau": (_floats, [0.0]),
        "refine": (_bool, True),
        "source_center": (_floats, [0.5, 0.3]),
        "source_width": (float, 0.2),
    },
    "output": {
        "dir": (str, "windowbands-out"),
    },
}


@dataclass(frozen=True)
class RunConfig:
    geometry: dict
    potential: dict
    grid: dict
    solver: dict
    sweep: dict
    output: dict
    source: Path

    def section(self, name: str) -> dict:
        return getattr(self, name)


def load_config(path: str | Path) -> RunConfig:
    """Parse and validate an INI run configuration."""
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    cp = configparser.ConfigParser(interpolation=None)
    try:
        cp.read(path)
    except configparser.Error as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    unknown = set(cp.sections()) - set(SCHEMA)
    if unknown:
        raise ConfigError(f"{path}: unknown section(s) {sorted(unknown)}")
    if "geometry" not in cp:
        raise ConfigError(f"{path}: missing [geometry] section")
    values = {}
    for sec, keys in SCHEMA.items():
        raw = dict(cp[sec]) if sec in cp else {}
        extra = set(raw) - set(keys)
        if extra:
            raise ConfigError(f"{path}: unknown key(s) {sorted(extra)} in [{sec}]")
        out = {}
        for key, (parse, default) in keys.items():
            if key in raw:
                try:
                    out[key] = parse(raw[key])
                except ValueError as exc:
                    raise ConfigError(f"{path}: [{sec}] {key}: {exc}") from exc
            elif default is REQUIRED:
                raise ConfigError(f"{path}: [{sec}] requires '{key}'")
            else:
                out[key] = default
        values[sec] = out
    return RunConfig(source=path, **values)


def _parse_profile(text: str) -> list[Slab]:
    slabs = []
    for chunk in filter(None, (c.strip() for c in text.split(";"))):
        nums = _floats(chunk)
        if len(nums) != 4:
            raise ConfigError(f"profile entry needs 'x2_lo x2_hi x1_lo x1_hi', got {chunk!r}")
        slabs.append(Slab(*nums))
    return slabs


def build_geometry(cfg: RunConfig) -> CellGeometry:
    g = cfg.geometry
    return build_cell(g["d"], g["a_minus"], g["a_plus"], g["x2_zero"], g["x2_inf"],
                      _parse_profile(g["profile"]))


def build_potential(cfg: RunConfig, geom: CellGeometry) -> PotentialSpec:
    p = cfg.potential
    support = p["support"] if p["support"] is not None else geom.x2_inf
    kind = p["kind"].lower()
    if kind == "zero":
        return zero_potential(support)
    if kind == "gaussian":
        if len(p["center"]) != 2 or len(p["widths"]) != 2:
            raise ConfigError("[potential] center and widths take two numbers each")
        return gaussian_bump(p["amplitude"], tuple(p["center"]), tuple(p["widths"]), support)
    if kind == "table":
        if not p["file"]:
            raise ConfigError("[potential] kind = table needs 'file'")
        return table_potential((cfg.source.parent / p["file"]), support)
    raise ConfigError(f"[potential] unknown kind {p['kind']!r}")


def _sign(cfg: RunConfig) -> SignConvention:
    try:
        return SignConvention[cfg.solver["sign"].upper()]
    except KeyError as exc:
        raise ConfigError(f"[solver] sign must be plus or minus, got {cfg.solver['sign']!r}") from exc


def _solver_cfg(cfg: RunConfig, workers: int) -> SolverConfig:
    bc = cfg.solver["bc"].lower()
    if bc not in ("dirichlet", "robin"):
        raise ConfigError(f"[solver] bc must be dirichlet or robin, got {bc!r}")
    return SolverConfig(tol=cfg.solver["tol"], bc=bc, mode_cut=cfg.grid["mode_cut"],
                        fixed_point_tol=cfg.solver["fixed_point_tol"], workers=workers)


def _write_csv(path: Path, header: list[str], rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([FMT % v if isinstance(v, (float, np.floating)) else v for v in row])


def _setup(cfg: RunConfig):
    geom = build_geometry(cfg)
    pot = build_potential(cfg, geom)
    grid = make_grid(geom, cfg.grid["n1"], cfg.grid["x"], cfg.grid["h2"])
    return geom, pot, grid


def _resonance(cfg: RunConfig, geom, pot, grid):
    report = detect_virtual_levels(geom, pot, grid, cfg.solver["threshold_window"],
                                   cfg.solver["threshold_abs_tol"])
    data = extract_resonance_data(report.solutions, geom)
    return report, data


# --------------------------------------------------------------------------
# subcommands
# --------------------------------------------------------------------------

def cmd_solve_cell(cfg: RunConfig, out: Path, workers: int) -> None:
    geom, pot, grid = _setup(cfg)
    report, data = _resonance(cfg, geom, pot, grid)
    write_resonance_record(out / "resonance.ini", data)
    lines = [f"status = {report.status}",
             f"multiplicity = {report.multiplicity}",
             f"counts = {report.counts}",
             f"grid = h1 {grid.h1:.12g}, h2 {grid.h2:.12g}, X {grid.X:.12g}"]
    for j, s in enumerate(report.solutions):
        lines += [f"[solution {j + 1}]",
                  f"lambda = {s.lam:.12g}",
                  f"defect X = {s.defect:.3e}, defect 2X = {s.defect_refined:.3e}",
                  f"threshold_eigenvalue = {s.threshold_eigenvalue}",
                  f"c_plus = {s.c_plus:.12g}, c_minus = {s.c_minus:.12g}",
                  f"A_minus = {data.A_minus[j]:.12g}, A_plus = {data.A_plus[j]:.12g}",
                  f"M_minus = {data.M_minus[j]:.12g}, M_plus = {data.M_plus[j]:.12g}"]
    if data.multiplicity:
        rel = separation_check(data)
        lines.append("separation |A-| vs |A+| (relative) = " + ", ".join(f"{r:.3e}" for r in rel))
    (out / "solve_cell_report.txt").write_text("\n".join(lines) + "\n")


def cmd_band_sweep(cfg: RunConfig, out: Path, workers: int) -> None:
    geom, pot, grid = _setup(cfg)
    scfg = _solver_cfg(cfg, workers)
    ext_rows = []
    for eps in cfg.sweep["eps"]:
        bands = sweep(geom, pot, grid, eps, cfg.sweep["tau_count"], scfg,
                      refine=cfg.sweep["refine"])
        for b in bands:
            _write_csv(out / f"band_eps{eps:g}_j{b.index}.csv", ["tau", "lambda", "residual"],
                       ([t, lam, r] for t, lam, r in zip(b.tau, b.lam, b.residual)))
            lo, hi = b.interval
            for e in b.extrema:
                ext_rows.append([float(eps), b.index, e.kind, e.tau, e.lam, e.location.value, lo, hi])
        if not bands:
            ext_rows.append([float(eps), 0, "none", float("nan"), float("nan"), "", float("nan"),
                             float("nan")])
    _write_csv(out / "extrema.csv",
               ["eps", "band", "kind", "tau", "lambda", "location", "band_lo", "band_hi"], ext_rows)


def cmd_asymptotics(data: ResonanceData, out: Path, tau_count: int, eps_list,
                    sign: SignConvention) -> None:
    taus = np.linspace(-np.pi / data.d, np.pi / data.d, tau_count, endpoint=False)
    rows = asy.coefficient_table(data, taus, eps_list, sign)
    header = list(rows[0]) if rows else ["tau"]
    _write_csv(out / "coefficients.csv", header, ([r[k] for k in header] for r in rows))
    lines = [f"multiplicity = {data.multiplicity}", f"sign = {sign.name}"]
    if data.multiplicity:
        pred = asy.band_edges(data, sign=sign)
        lines += [f"gap factor max = {list(map(float, pred.gap_max))}",
                  f"gap factor min = {list(map(float, pred.gap_min))}",
                  f"separated = {list(map(bool, pred.separated))}"]
    if data.multiplicity == 2:
        rep = interior_extremum_scan(taus, [r["mu"] for r in rows], data.d)
        if rep.degenerate:
            lines.append("mu extrema: degenerate (constant)")
        else:
            for e in (rep.minimum, rep.maximum):
                lines.append(f"mu {e.kind}: tau = {e.tau:.12g}, mu = {e.lam:.12g}, {e.location.value}")
    (out / "asymptotics_report.txt").write_text("\n".join(lines) + "\n")


def cmd_validate(cfg: RunConfig, out: Path, workers: int) -> None:
    geom, pot, grid = _setup(cfg)
    sign = _sign(cfg)
    report, data = _resonance(cfg, geom, pot, grid)
    lines = [f"multiplicity = {report.multiplicity} ({report.status})"]
    if not data.multiplicity:
        lines.append("verdict = no threshold solution: no band expected near the threshold")
        (out / "verdict.txt").write_text("\n".join(lines) + "\n")
        return
    scfg = _solver_cfg(cfg, workers)
    th = discrete_threshold(grid)
    rows = []
    for tau in cfg.sweep["tau"]:
        eps_ok, gaps = [], []
        for eps in cfg.sweep["eps"]:
            found = fiber_eigs(geom, pot, grid, eps, tau, scfg)
            gap = th - found[0].lam if found else float("nan")
            rows.append([tau, eps, gap])
            if found:
                eps_ok.append(eps)
                gaps.append(gap)
        lines.append(f"[tau = {tau:.12g}]")
        if len(eps_ok) < 3:
            lines.append(f"verdict = inconclusive (bound state at {len(eps_ok)} window sizes)")
            continue
        fit = adjudicate_asymptotics(eps_ok, gaps, data, tau, sign)
        lines += [f"exponent = {fit.exponent:.6g}",
                  f"prefactor (eps^4 fixed) = {fit.prefactor_p4:.6g}"]
        lines += [f"{k}: predicted {v:.6g}, relative error {fit.rel_errors[k]:.3g}"
                  for k, v in fit.hypotheses.items()]
        lines.append(f"verdict = {fit.verdict}")
        if fit.notes:
            lines.append(f"note = {fit.notes}")
    _write_csv(out / "validate_gaps.csv", ["tau", "eps", "gap"], rows)
    (out / "verdict.txt").write_text("\n".join(lines) + "\n")


def cmd_resolvent(cfg: RunConfig, out: Path, workers: int) -> None:
    geom, pot, grid = _setup(cfg)
    x1, x2 = grid.mesh()
    c1, c2 = cfg.sweep["source_center"]
    w = cfg.sweep["source_width"]
    f = np.exp(-((x1 - c1) ** 2 + (x2 - c2) ** 2) / w ** 2)
    f[np.abs(x2) >= geom.x2_inf] = 0.0
    f[[0, -1], :] = 0.0
    rows, lines = [], []
    for tau in cfg.sweep["tau"]:
        st = resolvent_convergence_study(geom, pot, grid, f, cfg.sweep["eps"], tau)
        for e, n, r, loc in zip(st.eps, st.diff_norms, st.ratios, st.locality):
            rows.append([tau, e, n, r, loc])
        lines.append(f"tau = {tau:.12g}: ratio spread {st.ratios.max() / st.ratios.min():.4g}, "
                     f"verdict = {st.verdict}")
    _write_csv(out / "resolvent_study.csv", ["tau", "eps", "w1_diff", "ratio", "locality"], rows)
    (out / "resolvent_report.txt").write_text("\n".join(lines) + "\n")


def _build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="windowbands", description=__doc__.split("\n\n")[0])
    p.add_argument("--workers", type=int, default=os.cpu_count() or 1,
                   help="threads for fibre sweeps (default: CPU count)")
    p.add_argument("--output-dir", help=f"output directory (overrides config and ${OUTPUT_ENV})")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)
    for name, helptext in (("solve-cell", "threshold solutions and resonance record"),
                           ("band-sweep", "band functions over the Brillouin zone"),
                           ("asymptotics", "coefficient tables from a record or config"),
                           ("validate", "adjudicate the eigenvalue asymptotics"),
                           ("resolvent-study", "fibre-wise resolvent convergence rate")):
        sp = sub.add_parser(name, help=helptext)
        sp.add_argument("path", help="run configuration (INI)"
                        + (" or resonance record" if name == "asymptotics" else ""))
        if name == "asymptotics":
            sp.add_argument("--tau-count", type=int, default=64)
            sp.add_argument("--eps", type=_floats, default=None,
                            help="window sizes for predicted eigenvalues (comma separated)")
            sp.add_argument("--sign", choices=("plus", "minus"), default=None)
    return p


def _output_dir(args, cfg: RunConfig | None) -> Path:
    if args.output_dir:
        out = Path(args.output_dir)
    elif os.environ.get(OUTPUT_ENV):
        out = Path(os.environ[OUTPUT_ENV])
    elif cfg is not None:
        out = Path(cfg.output["dir"])
        if not out.is_absolute():
            out = cfg.source.parent / out
    else:
        out = Path("windowbands-out")
    out.mkdir(parents=True, exist_ok=True)
    return out


def _fail(category: str, message: str, code: int) -> int:
    print(f"windowbands: error[{category}]: {message}", file=sys.stderr)
    return code


def run(argv=None) -> int:
    try:
        args = _build_parser().parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "asymptotics":
            return _run_asymptotics(args)
        cfg = load_config(args.path)
        out = _output_dir(args, cfg)
        handler = {"solve-cell": cmd_solve_cell, "band-sweep": cmd_band_sweep,
                   "validate": cmd_validate, "resolvent-study": cmd_resolvent}[args.command]
        handler(cfg, out, max(1, args.workers))
    except (ConfigError, GeometryError) as exc:
        return _fail("config", str(exc), EXIT_CONFIG)
    except (SolverError, ThresholdError, ArithmeticError, np.linalg.LinAlgError) as exc:
        return _fail("solver", str(exc), EXIT_SOLVER)
    except (ValueError, OSError) as exc:
        return _fail("input", str(exc), EXIT_CONFIG)
    return EXIT_OK


def _run_asymptotics(args) -> int:
    path = Path(args.path)
    if not path.is_file():
        raise ConfigError(f"file not found: {path}")
    probe = configparser.ConfigParser(interpolation=None)
    probe.read(path)
    if probe.has_section("resonance"):
        data = read_resonance_record(path)
        cfg = None
        sign = SignConvention[(args.sign or "minus").upper()]
        eps_list = args.eps or []
    else:
        cfg = load_config(path)
        geom, pot, grid = _setup(cfg)
        _, data = _resonance(cfg, geom, pot, grid)
        sign = SignConvention[args.sign.upper()] if args.sign else _sign(cfg)
        eps_list = args.eps if args.eps is not None else cfg.sweep["eps"]
    out = _output_dir(args, cfg)
    cmd_asymptotics(data, out, args.tau_count, eps_list, sign)
    return EXIT_OK


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
