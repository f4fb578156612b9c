"""
The three co-aperture configurations and their side-by-side comparison.

``offset_fed``
    Single offset paraboloid, feed at the focus, no aperture blockage.
``backfed_a``
    Cassegrain with a 45 deg IR mirror in the feed leg, held by a glass plate.
``backfed_b``
    Cassegrain with an IR-reflective, MMW-transmissive film above the sub.

Every dimension is a nominal default and is tagged ``assumed:`` in the
scenario notes and in every report.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, field, fields, replace
from typing import Optional

import numpy as np

from .blockage import BlockageMask, MaskPrimitive, blockage_area_fraction, project_obstacle
from .errors import ConfigurationError, ReflectorError
from .feed import FeedPattern, TabulatedPattern
from .geometry import PlanarMirrorSpec, ReflectorSystem, mirror_as_obstacle, synth_cassegrain, synth_offset
from .ir_path import IrTraceResult, coalignment_report, trace_ir
from .metrics import FLOOR_TEXT, MetricsReport, format_table, metrics_report
from .solver import PatternCut, aperture_field, far_field_cut

SCENARIO_IDS = ("offset_fed", "backfed_a", "backfed_b")
GAIN_LIMIT_DBI = 50.0
SLL_LIMIT_DB = -25.0
BORESIGHT_LIMIT_DEG = 0.01
PLANES = (0.0, 90.0)


@dataclass(frozen=True)
class ScenarioParams:
    """Nominal dimensions shared by the three configurations (mm, dB, deg, GHz)."""

    main_diameter: float = 500.0
    main_focal_length: float = 190.0
    sub_diameter: float = 60.0
    magnification: float = 5.0
    edge_taper_db: float = -18.0
    feed_model: str = "cos_q"
    polarization: str = "linear_x"
    phase_center_offset: float = 0.0
    offset_focal_length: float = 400.0
    offset_clearance: float = 50.0
    mirror_diameter: float = 36.0
    mirror_height: float = 88.0
    mirror_tilt_deg: float = 45.0
    mirror_loss_db: float = 8.0
    plate_ratio: float = 1.5
    plate_loss_db: float = 0.5
    film_diameter: float = 40.0
    film_height: float = 20.0
    film_tilt_deg: float = 45.0
    film_loss_db: float = 0.2
    ir_beam_radius: float = 10.0
    frequencies: tuple = (94.0,)
    grid_n: int = 1024
    theta_min_deg: float = -4.0
    theta_max_deg: float = 4.0
    cut_points: int = 1601
    xpol_window: float = 3.0
    feed_table: Optional[TabulatedPattern] = None
    extra_blockage: tuple = ()  # (scenario ids, MaskPrimitive) pairs

    def __post_init__(self):
        object.__setattr__(self, "frequencies", tuple(float(f) for f in self.frequencies))
        if not self.frequencies:
            raise ValueError("at least one frequency is required")
        if self.cut_points < 3:
            raise ValueError("cut_points must be >= 3")
        if not -90.0 <= self.theta_min_deg < self.theta_max_deg <= 90.0:
            raise ValueError("theta range must satisfy -90 <= theta_min < theta_max <= 90")
        if self.grid_n < 64 or self.grid_n % 2:
            raise ValueError("grid_n must be even and >= 64")

    def replace(self, **kw):
        return replace(self, **kw)

    @classmethod
    def names(cls):
        return tuple(f.name for f in fields(cls))


ASSUMED = {
    "main_diameter": "main aperture diameter",
    "main_focal_length": "main focal length",
    "sub_diameter": "sub-reflector diameter",
    "magnification": "Cassegrain magnification",
    "edge_taper_db": "feed edge taper at the rim",
    "offset_focal_length": "offset parent focal length",
    "offset_clearance": "offset rim clearance",
    "mirror_diameter": "IR mirror diameter",
    "mirror_height": "IR mirror height above the feed focus",
    "mirror_loss_db": "IR mirror MMW insertion loss",
    "plate_ratio": "glass plate diameter / sub diameter",
    "plate_loss_db": "glass plate MMW loss",
    "film_diameter": "IR film diameter",
    "film_height": "IR film height above the sub rim",
    "film_loss_db": "IR film MMW insertion loss",
    "ir_beam_radius": "IR laser beam radius",
}

_USES = {
    "offset_fed": ("main_diameter", "edge_taper_db", "offset_focal_length", "offset_clearance"),
    "backfed_a": ("main_diameter", "main_focal_length", "sub_diameter", "magnification",
                  "edge_taper_db", "mirror_diameter", "mirror_height", "mirror_loss_db",
                  "plate_ratio", "plate_loss_db", "ir_beam_radius"),
    "backfed_b": ("main_diameter", "main_focal_length", "sub_diameter", "magnification",
                  "edge_taper_db", "film_diameter", "film_height", "film_loss_db",
                  "ir_beam_radius"),
}


@dataclass(frozen=True)
class Scenario:
    id: str
    system: ReflectorSystem
    feed: FeedPattern
    mask: BlockageMask
    frequencies: tuple
    notes: tuple = field(default_factory=tuple)
    params: ScenarioParams = field(default_factory=ScenarioParams)

    @property
    def has_ir_path(self):
        m = self.system.mirror
        return m is not None and m.ir_reflective

    @property
    def lateral_extent_mm(self):
        """Largest distance of the main-reflector rim from the parent axis."""
        main = self.system.main
        return main.offset_height + 0.5 * main.aperture_diameter


def assumed_notes(scenario_id, params: ScenarioParams):
    return tuple(f"assumed: {ASSUMED[k]} = {getattr(params, k):g}"
                 for k in _USES[scenario_id])


def _feed(params, half_angle):
    kw = dict(polarization=params.polarization,
              phase_center_offset=params.phase_center_offset)
    if params.feed_model == "gaussian":
        return FeedPattern.gaussian(params.edge_taper_db, half_angle, **kw)
    if params.feed_model == "tabulated":
        if params.feed_table is None:
            raise ConfigurationError("tabulated feed model needs E- and H-plane files")
        return FeedPattern.tabulated(params.feed_table, **kw)
    if params.feed_model != "cos_q":
        raise ConfigurationError(f"unknown feed model {params.feed_model!r}")
    return FeedPattern.from_edge_taper(params.edge_taper_db, half_angle, **kw)


def _cassegrain(params):
    return synth_cassegrain(params.main_diameter, params.main_focal_length,
                            params.sub_diameter, params.magnification)


def build_system(scenario_id, params: ScenarioParams) -> ReflectorSystem:
    if scenario_id == "offset_fed":
        return synth_offset(params.offset_focal_length, params.main_diameter,
                            params.offset_clearance)
    system = _cassegrain(params)
    sub = system.sub
    if scenario_id == "backfed_a":
        zf = system.feed_location[2]
        mirror = PlanarMirrorSpec.tilted(
            (0.0, 0.0, zf + params.mirror_height), params.mirror_tilt_deg,
            params.mirror_diameter, mmw_transmission_db=params.mirror_loss_db)
        top = mirror.center[2] + 0.5 * mirror.diameter * math.sqrt(1.0 - mirror.normal[2] ** 2)
        if top >= sub.vertex_z:
            raise ConfigurationError("IR mirror reaches the sub-reflector; lower mirror_height")
        return system.with_mirror(mirror)
    if scenario_id == "backfed_b":
        film = PlanarMirrorSpec.tilted(
            (0.0, 0.0, sub.rim_z + params.film_height), params.film_tilt_deg,
            params.film_diameter, mmw_transmission_db=params.film_loss_db)
        return system.with_mirror(film)
    raise ConfigurationError(f"unknown scenario id {scenario_id!r}; expected one of {SCENARIO_IDS}")


def build_mask(scenario_id, system: ReflectorSystem, params: ScenarioParams) -> BlockageMask:
    extra = tuple(prim for ids, prim in params.extra_blockage if scenario_id in ids)
    return _base_mask(scenario_id, system, params).add(*extra)


def _base_mask(scenario_id, system, params):
    if scenario_id == "offset_fed":
        return BlockageMask()
    rs = 0.5 * params.sub_diameter
    mask = BlockageMask((MaskPrimitive.disc(rs, label="sub-reflector"),))
    if scenario_id == "backfed_a":
        mirror = project_obstacle(mirror_as_obstacle(system.mirror), (0.0, 0.0, 1.0))
        mirror = replace(mirror, label="ir-mirror")
        plate = MaskPrimitive.disc(params.plate_ratio * rs,
                                   transmission=10.0 ** (-params.plate_loss_db / 20.0),
                                   label="glass-plate")
        return mask.add(mirror, plate)
    return mask.with_film_loss(params.film_loss_db)


def build_scenario(scenario_id, params: Optional[ScenarioParams] = None) -> Scenario:
    """Baseline scenario with every assumed dimension noted.

    Raises
    ------
    ConfigurationError
        Unknown scenario id.
    """
    if scenario_id not in SCENARIO_IDS:
        raise ConfigurationError(f"unknown scenario id {scenario_id!r}; "
                                 f"expected one of {SCENARIO_IDS}")
    params = params or ScenarioParams()
    system = build_system(scenario_id, params)
    feed = _feed(params, system.feed_half_angle_deg)
    mask = build_mask(scenario_id, system, params)
    return Scenario(scenario_id, system, feed, mask, params.frequencies,
                    assumed_notes(scenario_id, params), params)


# ---------------------------------------------------------------------------
# Running and comparing
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ScenarioRun:
    scenario: Scenario
    frequency_ghz: float
    cuts: tuple
    metrics: MetricsReport
    ir: Optional[IrTraceResult]
    coalignment_deg: Optional[float]
    blockage_fraction: float


class ScenarioError(ReflectorError):
    """A solver failure, tagged with the scenario it came from."""

    def __init__(self, scenario_id, err):
        self.scenario_id = scenario_id
        self.cause = err
        super().__init__(f"{scenario_id}: {type(err).__name__}: {err}")


def run_scenario(scenario: Scenario, frequency_ghz, grid_n=None, workers=None) -> ScenarioRun:
    p = scenario.params
    n = grid_n or p.grid_n
    try:
        fld = aperture_field(scenario.system, scenario.feed, frequency_ghz, scenario.mask,
                             grid_n=n, workers=workers)
        cuts = tuple(far_field_cut(fld, phi, p.theta_min_deg, p.theta_max_deg,
                                   p.cut_points, workers=workers) for phi in PLANES)
        report = metrics_report(scenario.id, cuts, p.xpol_window, scenario.notes)
        ir = coal = None
        if scenario.has_ir_path:
            ir = trace_ir(scenario.system)
            if ir.exit_rays:
                coal = coalignment_report((report.planes[0].pointing_deg,
                                           report.planes[1].pointing_deg), ir)
    except ReflectorError as err:
        raise ScenarioError(scenario.id, err) from err
    frac = blockage_area_fraction(scenario.mask, scenario.system.main.aperture_diameter)
    return ScenarioRun(scenario, float(frequency_ghz), cuts, report, ir, coal, frac)


@dataclass(frozen=True)
class Constraint:
    name: str
    passed: bool
    detail: str


@dataclass(frozen=True)
class ComparisonReport:
    runs: tuple
    frequencies: tuple

    def run(self, scenario_id, frequency_ghz=None):
        for r in self.runs:
            if r.scenario.id == scenario_id and (frequency_ghz is None
                                                 or r.frequency_ghz == frequency_ghz):
                return r
        raise KeyError((scenario_id, frequency_ghz))

    @property
    def scenario_ids(self):
        seen = []
        for r in self.runs:
            if r.scenario.id not in seen:
                seen.append(r.scenario.id)
        return tuple(seen)

    def rank_by_gain(self, frequency_ghz=None):
        f = self.frequencies[0] if frequency_ghz is None else frequency_ghz
        runs = [r for r in self.runs if r.frequency_ghz == f]
        return tuple(r.scenario.id for r in sorted(runs, key=lambda r: -r.metrics.gain_dbi))

    def rank_by_sll(self, frequency_ghz=None):
        """Best (lowest) worst-plane first sidelobe first."""
        f = self.frequencies[0] if frequency_ghz is None else frequency_ghz
        runs = [r for r in self.runs if r.frequency_ghz == f]

        def key(r):
            s = r.metrics.worst_sll_db
            return -math.inf if s is None else s
        return tuple(r.scenario.id for r in sorted(runs, key=key))

    def constraints(self, scenario_id):
        """Gain, sidelobe and unobstructed co-aperture checks over every frequency."""
        runs = [r for r in self.runs if r.scenario.id == scenario_id]
        gain = min(r.metrics.gain_dbi for r in runs)
        slls = [r.metrics.worst_sll_db for r in runs]
        sll = max((s for s in slls if s is not None), default=None)
        out = [Constraint("gain", gain > GAIN_LIMIT_DBI,
                          f"min gain {gain:.2f} dBi vs > {GAIN_LIMIT_DBI:g}"),
               Constraint("sll", sll is None or sll < SLL_LIMIT_DB,
                          "no sidelobe" if sll is None
                          else f"worst SLL {sll:.2f} dB vs < {SLL_LIMIT_DB:g}")]
        r0 = runs[0]
        if r0.ir is None:
            out.append(Constraint("co_aperture", False, "no IR path"))
        else:
            ok = (r0.ir.lost_rays == 0 and r0.ir.boresight_error_deg < BORESIGHT_LIMIT_DEG
                  and r0.coalignment_deg is not None
                  and r0.coalignment_deg < BORESIGHT_LIMIT_DEG)
            co = "n/a" if r0.coalignment_deg is None else f"{r0.coalignment_deg:.4f}"
            out.append(Constraint(
                "co_aperture", ok,
                f"lost {r0.ir.lost_rays}/{r0.ir.n_rays} rays, "
                f"boresight {r0.ir.boresight_error_deg:.2e} deg, co-boresight {co} deg"))
        return tuple(out)

    def best(self):
        """Scenarios meeting every constraint, in gain order."""
        ok = [sid for sid in self.rank_by_gain()
              if all(c.passed for c in self.constraints(sid))]
        return tuple(ok)

    def notes(self):
        out = []
        for sid in self.scenario_ids:
            r = self.run(sid)
            if r.scenario.system.kind == "offset":
                out.append(f"{sid}: not compact: offset feed arm, lateral extent "
                           f"{r.scenario.lateral_extent_mm:.0f} mm from the parent axis "
                           f"vs {0.5 * r.scenario.system.main.aperture_diameter:.0f} mm "
                           "for the axial designs")
        return tuple(out)

    # -- serialisation ------------------------------------------------------

    COLUMNS = ("scenario", "frequency_ghz", "gain_dbi", "directivity_dbi",
               "hpbw_e_deg", "hpbw_h_deg", "sll_e_db", "sll_h_db", "xpol_e_db", "xpol_h_db",
               "blockage_fraction", "boresight_error_deg", "obscuration_fraction",
               "lost_rays")

    def rows(self):
        def f(v, d=3):
            return "none" if v is None else f"{v:.{d}f}"

        def x(v):
            return FLOOR_TEXT if v is None else f"{v:.3f}"
        for r in self.runs:
            e, h = r.metrics.planes
            ir = r.ir
            yield [r.scenario.id, f"{r.frequency_ghz:.3f}", f(e.gain_dbi), f(e.directivity_dbi),
                   f(e.hpbw_deg, 4), f(h.hpbw_deg, 4), f(e.first_sll_db), f(h.first_sll_db),
                   x(e.xpol_peak_db), x(h.xpol_peak_db), f(r.blockage_fraction, 5),
                   "none" if ir is None else f"{ir.boresight_error_deg:.6f}",
                   "none" if ir is None else f"{ir.obscuration_fraction:.5f}",
                   "none" if ir is None else str(ir.lost_rays)]

    def assumptions(self):
        seen = []
        for r in self.runs:
            for n in r.scenario.notes:
                tag = f"{r.scenario.id} {n}"
                if tag not in seen:
                    seen.append(tag)
        return tuple(seen)

    def to_csv(self):
        out = io.StringIO()
        out.write(",".join(self.COLUMNS) + "\n")
        for row in self.rows():
            out.write(",".join(row) + "\n")
        return out.getvalue()

    def to_table(self):
        return format_table(self.COLUMNS, self.rows())

    def ranking_text(self):
        lines = [f"constraint set: gain > {GAIN_LIMIT_DBI:g} dBi, first SLL < "
                 f"{SLL_LIMIT_DB:g} dB in both planes, unobstructed co-aperture "
                 f"(IR path, no lost rays, boresight < {BORESIGHT_LIMIT_DEG:g} deg)", ""]
        for f in self.frequencies:
            lines.append(f"by gain @ {f:g} GHz: " + " > ".join(self.rank_by_gain(f)))
            lines.append(f"by SLL  @ {f:g} GHz: " + " < ".join(self.rank_by_sll(f)))
        lines.append("")
        for sid in self.scenario_ids:
            cs = self.constraints(sid)
            verdict = "PASS" if all(c.passed for c in cs) else "FAIL"
            lines.append(f"{sid}: {verdict}")
            for c in cs:
                lines.append(f"  {'ok  ' if c.passed else 'FAIL'} {c.name}: {c.detail}")
        best = self.best()
        lines += ["", "best: " + (best[0] if best else "none")]
        if len(best) > 1:
            lines.append("also satisfying: " + ", ".join(best[1:]))
        for n in self.notes():
            lines.append("note: " + n)
        return "\n".join(lines) + "\n"


def compare(scenarios, frequencies=None, grid_n=None, workers=None) -> ComparisonReport:
    """Run every (scenario, frequency) pair and collect metrics and IR results.

    Raises
    ------
    ScenarioError
        A solver failure, carrying the scenario id.
    """
    scenarios = list(scenarios)
    if not scenarios:
        raise ValueError("need at least one scenario")
    freqs = tuple(float(f) for f in (frequencies if frequencies is not None
                                     else scenarios[0].frequencies))
    if not freqs:
        raise ValueError("need at least one frequency")
    jobs = [(s, f) for s in scenarios for f in freqs]
    # inner loops are already chunked over worker threads
    runs = [run_scenario(s, f, grid_n, workers) for s, f in jobs]
    return ComparisonReport(tuple(runs), freqs)


# ---------------------------------------------------------------------------
# Plots
# ---------------------------------------------------------------------------

def _figure():
    from matplotlib.figure import Figure
    fig = Figure(figsize=(7.0, 4.2))
    return fig, fig.add_subplot(1, 1, 1)


def save_svg(fig, path):
    import matplotlib
    with matplotlib.rc_context({"svg.hashsalt": "coaperture", "svg.fonttype": "path"}):
        fig.savefig(path, format="svg", metadata={"Date": None})


def plot_cuts(cuts_by_label, path, title="", db_range=(-60.0, 0.0), show_cx=False):
    """Overlay co-polar cuts (``{label: PatternCut}``) into an SVG file."""
    fig, ax = _figure()
    for label, cut in cuts_by_label.items():
        line, = ax.plot(cut.theta_deg, cut.co_db, lw=1.2, label=f"{label} co")
        if show_cx and np.any(cut.cx_db > db_range[0]):
            ax.plot(cut.theta_deg, cut.cx_db, lw=0.8, ls="--", color=line.get_color(),
                    label=f"{label} cx")
    ax.set_ylim(*db_range)
    ax.set_xlabel("theta (deg)")
    ax.set_ylabel("relative level (dB)")
    ax.grid(True, lw=0.3)
    if title:
        ax.set_title(title)
    ax.legend(fontsize=8, loc="upper right")
    fig.tight_layout()
    save_svg(fig, path)


def comparison_svgs(report: ComparisonReport, outdir, db_range=(-60.0, 0.0)):
    """One overlay SVG per plane and frequency; returns the written paths."""
    import os
    paths = []
    for f in report.frequencies:
        for k, phi in enumerate(PLANES):
            cuts = {r.scenario.id: r.cuts[k] for r in report.runs if r.frequency_ghz == f}
            name = os.path.join(outdir, f"compare_{f:g}GHz_phi{phi:g}.svg")
            plot_cuts(cuts, name, f"co-polar, phi = {phi:g} deg, {f:g} GHz", db_range)
            paths.append(name)
    return paths
