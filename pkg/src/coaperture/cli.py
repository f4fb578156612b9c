"""
Command-line entry point.

    coaperture synth   --config run.ini [--out DIR] [--format table|csv]
    coaperture run     --config run.ini [--out DIR] [--grid-n N]
    coaperture compare --config run.ini [--out DIR] [--grid-n N]
    coaperture sweep   --config run.ini --parameter NAME --values V1,V2,...

Exit codes: 0 success, 2 configuration error, 3 solver error. Outputs are
staged in a scratch directory and only moved into ``--out`` once every
artifact of the command has been written.
"""

from __future__ import annotations

import argparse
import math
import os
import shutil
import sys
import tempfile
from dataclasses import replace

import numpy as np

from . import __version__, _parallel
from .blockage import blockage_area_fraction
from .config import SWEEP_PARAMETERS, ConfigError, RunConfig, load_config
from .errors import ReflectorError
from .ir_path import coalignment_report, default_bundle, tilt_mirror, trace_ir
from .metrics import FLOOR_TEXT, format_table, reports_to_csv, reports_to_table
from .scenarios import (build_scenario, compare, comparison_svgs, plot_cuts,
                        run_scenario)
from .solver import write_cut_csv

EXIT_OK, EXIT_CONFIG, EXIT_SOLVER = 0, 2, 3


class _Stage:
    """Scratch directory whose files are moved into ``outdir`` on commit."""

    def __init__(self, outdir):
        self.outdir = outdir
        os.makedirs(outdir, exist_ok=True)
        self.tmp = tempfile.mkdtemp(prefix=".staging-", dir=outdir)
        self.names = []

    def path(self, name):
        self.names.append(name)
        return os.path.join(self.tmp, name)

    def commit(self):
        for name in self.names:
            os.replace(os.path.join(self.tmp, name), os.path.join(self.outdir, name))
        shutil.rmtree(self.tmp, ignore_errors=True)
        return [os.path.join(self.outdir, n) for n in self.names]

    def discard(self):
        shutil.rmtree(self.tmp, ignore_errors=True)


def provenance(cfg: RunConfig, overrides=()):
    lines = [f"config_sha256={cfg.sha256}", f"tool_version=coaperture {__version__}"]
    lines += [f"override: {o}" for o in overrides]
    used = set()
    for sid in cfg.scenarios:
        for note in build_scenario(sid, cfg.params).notes:
            if note not in used:
                used.add(note)
                lines.append(f"{sid} {note}")
    return lines


def _footer_text(lines):
    return "".join(f"# {ln}\n" for ln in lines)


def _write_text(path, body, footer):
    with open(path, "w", newline="") as fh:
        fh.write(body)
        fh.write(_footer_text(footer))


def _append_svg_footer(path, footer):
    text = "\n".join(footer).replace("--", "- -")
    with open(path, "a", newline="") as fh:
        fh.write(f"<!-- provenance\n{text}\n-->\n")


def _emit(text):
    sys.stdout.write(text)
    sys.stdout.flush()


# ---------------------------------------------------------------------------
# synth
# ---------------------------------------------------------------------------

def _geometry_rows(cfg: RunConfig):
    rows = []
    for sid in cfg.scenarios:
        sc = build_scenario(sid, cfg.params)
        s = sc.system
        main = s.main

        def add(q, v, unit):
            rows.append([sid, q, f"{v:.6g}" if isinstance(v, float) else str(v), unit])
        add("kind", s.kind, "")
        add("main_diameter", main.aperture_diameter, "mm")
        add("main_focal_length", main.focal_length, "mm")
        add("magnification", float(s.magnification), "")
        add("equivalent_focal_length", float(s.equivalent_focal_length), "mm")
        add("theta_e", float(s.feed_half_angle_deg), "deg")
        if s.sub is not None:
            add("eccentricity", float(s.sub.eccentricity), "")
            add("sub_diameter", float(s.sub.diameter), "mm")
            add("interfocal_distance", float(s.sub.interfocal_distance), "mm")
            add("sub_vertex_z", float(s.sub.vertex_z), "mm")
        else:
            add("offset_height", float(main.offset_height), "mm")
            add("lateral_extent", float(sc.lateral_extent_mm), "mm")
        add("feed_z", float(s.feed_location[2]), "mm")
        add("blockage_fraction", blockage_area_fraction(sc.mask, main.aperture_diameter), "")
        if sc.has_ir_path:
            add("ir_obscuration_fraction", trace_ir(s).obscuration_fraction, "")
    return rows


def cmd_synth(cfg, args):
    header = ("scenario", "quantity", "value", "unit")
    rows = _geometry_rows(cfg)
    footer = provenance(cfg)
    csv_body = ",".join(header) + "\n" + "".join(",".join(r) + "\n" for r in rows)
    stage = _Stage(args.out or cfg.output_dir)
    try:
        _write_text(stage.path("geometry.csv"), csv_body, footer)
        stage.commit()
    except BaseException:
        stage.discard()
        raise
    _emit(csv_body if args.format == "csv" else format_table(header, rows))
    return EXIT_OK


# ---------------------------------------------------------------------------
# run / compare
# ---------------------------------------------------------------------------

def _params(cfg, args):
    p = cfg.params
    return p.replace(grid_n=args.grid_n) if getattr(args, "grid_n", None) else p


def _overrides(args):
    return [f"grid_n={args.grid_n}"] if getattr(args, "grid_n", None) else []


def _write_runs(stage, runs, footer, db_min):
    for r in runs:
        stem = f"{r.scenario.id}_{r.frequency_ghz:g}GHz"
        for cut in r.cuts:
            name = f"{stem}_phi{cut.phi_plane:g}"
            write_cut_csv(cut, stage.path(name + ".csv"), footer)
            svg = stage.path(name + ".svg")
            plot_cuts({r.scenario.id: cut}, svg,
                      f"{r.scenario.id}, phi = {cut.phi_plane:g} deg, {r.frequency_ghz:g} GHz",
                      (db_min, 0.0), show_cx=True)
            _append_svg_footer(svg, footer)
    reports = [r.metrics for r in runs]
    _write_text(stage.path("metrics.csv"), reports_to_csv(reports), footer)


def cmd_run(cfg, args):
    params = _params(cfg, args)
    footer = provenance(cfg, _overrides(args))
    scenarios = [build_scenario(s, params) for s in cfg.scenarios]
    report = compare(scenarios, params.frequencies)
    stage = _Stage(args.out or cfg.output_dir)
    try:
        _write_runs(stage, report.runs, footer, cfg.plot_db_min)
        stage.commit()
    except BaseException:
        stage.discard()
        raise
    reports = [r.metrics for r in report.runs]
    _emit(reports_to_csv(reports) if args.format == "csv" else reports_to_table(reports))
    return EXIT_OK


def cmd_compare(cfg, args):
    params = _params(cfg, args)
    footer = provenance(cfg, _overrides(args))
    scenarios = [build_scenario(s, params) for s in cfg.scenarios]
    report = compare(scenarios, params.frequencies)
    stage = _Stage(args.out or cfg.output_dir)
    try:
        _write_runs(stage, report.runs, footer, cfg.plot_db_min)
        _write_text(stage.path("comparison.csv"), report.to_csv(), footer)
        _write_text(stage.path("comparison.txt"), report.to_table(), footer)
        _write_text(stage.path("ranking.txt"), report.ranking_text(), footer)
        for path in comparison_svgs(report, stage.tmp, (cfg.plot_db_min, 0.0)):
            stage.names.append(os.path.basename(path))
            _append_svg_footer(path, footer)
        stage.commit()
    except BaseException:
        stage.discard()
        raise
    _emit(report.to_csv() if args.format == "csv" else
          report.to_table() + "\n" + report.ranking_text())
    return EXIT_OK


# ---------------------------------------------------------------------------
# sweep
# ---------------------------------------------------------------------------

SWEEP_COLUMNS = ("scenario", "parameter", "value", "gain_dbi", "directivity_dbi",
                 "hpbw_e_deg", "hpbw_h_deg", "sll_e_db", "sll_h_db", "xpol_e_db", "xpol_h_db",
                 "ir_boresight_error_deg")
TREND_COLUMNS = SWEEP_COLUMNS[3:]


def _sweep_one(sid, params, parameter, value):
    freq = params.frequencies[0]
    grid = None
    if parameter == "frequency":
        freq = float(value)
    elif parameter == "grid_n":
        grid = int(value)
        if grid != value:
            raise ConfigError(f"grid_n sweep value {value} is not an integer")
    elif parameter in ("edge_taper_db", "sub_diameter"):
        params = params.replace(**{parameter: float(value)})
    sc = build_scenario(sid, params)
    ir_err = None
    if parameter == "mirror_tilt_deg":
        if not sc.has_ir_path:
            raise ConfigError(f"mirror_tilt_deg sweep needs an IR mirror; {sid} has none")
        tilted = tilt_mirror(sc.system, float(value))
        res = trace_ir(tilted, default_bundle(sc.system, params.ir_beam_radius))
        # MMW paths only see the element through the mask and internal legs
        sc = replace(sc, system=tilted)
    run = run_scenario(sc, freq, grid)
    if parameter == "mirror_tilt_deg":
        e, h = run.metrics.planes
        ir_err = coalignment_report((e.pointing_deg, h.pointing_deg), res) if res.exit_rays else None
    elif run.ir is not None and run.ir.exit_rays:
        ir_err = run.coalignment_deg
    return run, ir_err


def _trend(values):
    v = [x for x in values if x is not None and not math.isnan(x)]
    if len(v) < 2 or len(v) != len(values):
        return "n/a"
    d = np.diff(v)
    if np.all(d == 0):
        return "constant"
    if np.all(d > 0):
        return "increasing"
    if np.all(d < 0):
        return "decreasing"
    if np.all(d >= 0):
        return "non-decreasing"
    if np.all(d <= 0):
        return "non-increasing"
    return "none"


def sweep_table(cfg, parameter, values, grid_n=None):
    """Rows (list of lists of strings) and per-column trend flags."""
    params = cfg.params.replace(grid_n=grid_n) if grid_n else cfg.params
    rows, trends = [], []
    for sid in cfg.scenarios:
        numeric = {c: [] for c in TREND_COLUMNS}
        for val in values:
            run, ir_err = _sweep_one(sid, params, parameter, val)
            e, h = run.metrics.planes
            vals = dict(gain_dbi=e.gain_dbi, directivity_dbi=e.directivity_dbi,
                        hpbw_e_deg=e.hpbw_deg, hpbw_h_deg=h.hpbw_deg,
                        sll_e_db=e.first_sll_db, sll_h_db=h.first_sll_db,
                        xpol_e_db=e.xpol_peak_db, xpol_h_db=h.xpol_peak_db,
                        ir_boresight_error_deg=ir_err)
            for c in TREND_COLUMNS:
                numeric[c].append(vals[c])

            def f(c, d=4):
                v = vals[c]
                if v is None:
                    return FLOOR_TEXT if c.startswith("xpol") else "none"
                return f"{v:.{d}f}"
            rows.append([sid, parameter, f"{val:g}"] + [f(c, 6 if c.startswith("ir") else 4)
                                                       for c in TREND_COLUMNS])
        trends.append((sid, {c: _trend(numeric[c]) for c in TREND_COLUMNS}))
    return rows, trends


def cmd_sweep(cfg, args):
    parameter = args.parameter or cfg.sweep_parameter
    if not parameter:
        raise ConfigError("sweep needs --parameter or [sweep] parameter")
    if parameter not in SWEEP_PARAMETERS:
        raise ConfigError(f"unknown sweep parameter {parameter!r}; expected one of "
                          f"{', '.join(SWEEP_PARAMETERS)}")
    if args.values:
        try:
            values = tuple(float(v) for v in args.values.replace(",", " ").split())
        except ValueError:
            raise ConfigError(f"--values: cannot parse {args.values!r}") from None
    else:
        values = cfg.sweep_values
    if not values:
        raise ConfigError("sweep needs --values or [sweep] values")
    rows, trends = sweep_table(cfg, parameter, values, args.grid_n)
    trend_lines = [f"trend {sid} " + " ".join(f"{c}={t}" for c, t in tr.items())
                   for sid, tr in trends]
    body = ",".join(SWEEP_COLUMNS) + "\n" + "".join(",".join(r) + "\n" for r in rows)
    body += _footer_text(trend_lines)
    footer = provenance(cfg, _overrides(args) + [f"sweep {parameter}="
                                                 + ",".join(f"{v:g}" for v in values)])
    stage = _Stage(args.out or cfg.output_dir)
    try:
        _write_text(stage.path(f"sweep_{parameter}.csv"), body, footer)
        stage.commit()
    except BaseException:
        stage.discard()
        raise
    if args.format == "csv":
        _emit(body)
    else:
        _emit(format_table(SWEEP_COLUMNS, rows) + "\n" + "\n".join(trend_lines) + "\n")
    return EXIT_OK


def validate(cfg: RunConfig):
    """Build every configured scenario once so geometry problems surface as
    configuration errors before any solve."""
    for sid in cfg.scenarios:
        try:
            build_scenario(sid, cfg.params)
        except (ReflectorError, ValueError) as err:
            raise ConfigError(f"scenario {sid}: {err}") from None


# ---------------------------------------------------------------------------

def build_parser():
    parser = argparse.ArgumentParser(
        prog="coaperture",
        description="Co-aperture MMW/IR reflector antenna modelling.")
    parser.add_argument("--version", action="version", version=f"coaperture {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, grid=True):
        p.add_argument("--config", required=True, help="INI run configuration")
        p.add_argument("--out", help="output directory (default: [run] output_dir)")
        p.add_argument("--format", choices=("table", "csv"), default="table",
                       help="standard-output layout")
        if grid:
            p.add_argument("--grid-n", type=int, dest="grid_n",
                           help="aperture samples per side (even, >= 64)")

    common(sub.add_parser("synth", help="derive geometry and blockage figures"), grid=False)
    common(sub.add_parser("run", help="pattern cuts, metrics and plots per scenario"))
    common(sub.add_parser("compare", help="side-by-side comparison and ranking"))
    p = sub.add_parser("sweep", help="metrics versus one parameter")
    common(p)
    p.add_argument("--parameter", help=f"one of {', '.join(SWEEP_PARAMETERS)}")
    p.add_argument("--values", help="comma-separated values")
    return parser


COMMANDS = {"synth": cmd_synth, "run": cmd_run, "compare": cmd_compare, "sweep": cmd_sweep}


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        _parallel.worker_count()
        if getattr(args, "grid_n", None) is not None and (args.grid_n < 64 or args.grid_n % 2):
            raise ConfigError(f"--grid-n must be even and >= 64 (got {args.grid_n})")
        cfg = load_config(args.config)
        validate(cfg)
        return COMMANDS[args.command](cfg, args)
    except ConfigError as err:
        print(f"coaperture: config error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except ValueError as err:
        if isinstance(err, ReflectorError):
            print(f"coaperture: solver error: {err}", file=sys.stderr)
            return EXIT_SOLVER
        print(f"coaperture: config error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except ReflectorError as err:
        print(f"coaperture: solver error: {err}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
