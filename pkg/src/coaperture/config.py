"""
INI run configuration.

Parsing uses :mod:`configparser`; line numbers for error messages come from
a second scan of the raw text. Every section and key is checked against the
schema below before anything is solved. See ``docs/config.md``.
"""

from __future__ import annotations

import configparser
import hashlib
import os
import re
from dataclasses import dataclass, field

from .blockage import MaskPrimitive
from .errors import ConfigError
from .feed import POLARIZATIONS, load_tabulated
from .scenarios import SCENARIO_IDS, ScenarioParams

SWEEP_PARAMETERS = ("edge_taper_db", "sub_diameter", "grid_n", "frequency", "mirror_tilt_deg")

# section -> {key: (ScenarioParams field or None, type)}
SCHEMA = {
    "run": {
        "scenarios": (None, "ids"),
        "frequencies_ghz": ("frequencies", "floats"),
        "grid_n": ("grid_n", int),
        "theta_min_deg": ("theta_min_deg", float),
        "theta_max_deg": ("theta_max_deg", float),
        "cut_points": ("cut_points", int),
        "xpol_window": ("xpol_window", float),
        "plot_db_min": (None, float),
        "output_dir": (None, str),
    },
    "geometry": {
        "main_diameter": ("main_diameter", float),
        "main_focal_length": ("main_focal_length", float),
        "sub_diameter": ("sub_diameter", float),
        "magnification": ("magnification", float),
        "offset_focal_length": ("offset_focal_length", float),
        "offset_clearance": ("offset_clearance", float),
    },
    "feed": {
        "model": ("feed_model", str),
        "edge_taper_db": ("edge_taper_db", float),
        "polarization": ("polarization", str),
        "phase_center_offset": ("phase_center_offset", float),
        "e_plane_csv": (None, str),
        "h_plane_csv": (None, str),
    },
    "backfed_a": {
        "mirror_diameter": ("mirror_diameter", float),
        "mirror_height": ("mirror_height", float),
        "mirror_tilt_deg": ("mirror_tilt_deg", float),
        "mirror_loss_db": ("mirror_loss_db", float),
        "plate_ratio": ("plate_ratio", float),
        "plate_loss_db": ("plate_loss_db", float),
    },
    "backfed_b": {
        "film_diameter": ("film_diameter", float),
        "film_height": ("film_height", float),
        "film_tilt_deg": ("film_tilt_deg", float),
        "film_loss_db": ("film_loss_db", float),
    },
    "ir": {
        "beam_radius": ("ir_beam_radius", float),
    },
    "sweep": {
        "parameter": (None, str),
        "values": (None, "floats"),
    },
}
REQUIRED = {"geometry": ("main_diameter", "main_focal_length")}
BLOCKAGE_KEYS = {"shape", "center_x", "center_y", "radius", "semi_a", "semi_b", "width",
                 "height", "rotation_deg", "transmission", "scenarios", "label"}
FEED_MODELS = ("cos_q", "gaussian", "tabulated")

_SECTION_RE = re.compile(r"^\s*\[([^\]]+)\]")
_KEY_RE = re.compile(r"^\s*([^=:#;\s][^=:]*?)\s*[=:]")


@dataclass(frozen=True)
class RunConfig:
    """Validated run configuration. ``seedless`` is always true: nothing in
    the toolkit draws random numbers."""

    scenarios: tuple
    params: ScenarioParams
    output_dir: str = "out"
    plot_db_min: float = -60.0
    sweep_parameter: str = ""
    sweep_values: tuple = ()
    source: str = ""
    sha256: str = ""
    explicit: frozenset = field(default_factory=frozenset)
    seedless: bool = True

    @property
    def frequencies(self):
        return self.params.frequencies


def _line_index(text):
    """{(section, key): line} and {section: line} from the raw file."""
    keys, sections = {}, {}
    current = None
    for no, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0] if not raw.lstrip().startswith(("#", ";")) else ""
        m = _SECTION_RE.match(line)
        if m:
            current = m.group(1).strip()
            sections.setdefault(current, no)
            continue
        m = _KEY_RE.match(line)
        if m and current is not None:
            keys.setdefault((current, m.group(1).strip().lower()), no)
    return keys, sections


def _parse_value(raw, kind, where):
    line, name = where
    raw = raw.strip()
    try:
        if kind == "floats":
            vals = tuple(float(v) for v in re.split(r"[,\s]+", raw) if v)
            if not vals:
                raise ConfigError(f"{name}: empty list", line)
            return vals
        if kind == "ids":
            return tuple(v for v in re.split(r"[,\s]+", raw) if v)
        if kind is int:
            return int(raw)
        if kind is float:
            return float(raw)
        return raw
    except ValueError:
        raise ConfigError(f"{name}: cannot parse {raw!r} as {getattr(kind, '__name__', kind)}",
                          line) from None


def _blockage_primitive(name, sec, lines):
    def get(key, default=None, kind=float):
        if key not in sec:
            if default is None:
                raise ConfigError(f"[{name}] missing key '{key}'", lines.get(name))
            return default
        return _parse_value(sec[key], kind, (lines.get((name, key)), f"[{name}] {key}"))

    shape = get("shape", kind=str)
    center = (get("center_x", 0.0), get("center_y", 0.0))
    t = get("transmission", 0.0)
    rot = get("rotation_deg", 0.0)
    label = get("label", name, str)
    try:
        if shape == "disc":
            prim = MaskPrimitive.disc(get("radius"), center, t, label)
        elif shape == "ellipse":
            prim = MaskPrimitive.ellipse(get("semi_a"), get("semi_b"), center, rot, t, label)
        elif shape == "rectangle":
            prim = MaskPrimitive.rectangle(get("width"), get("height"), center, rot, t, label)
        else:
            raise ConfigError(f"[{name}] shape must be disc, ellipse or rectangle",
                              lines.get((name, "shape")))
    except ValueError as err:
        raise ConfigError(f"[{name}] {err}", lines.get(name)) from None
    ids = get("scenarios", ("backfed_a", "backfed_b"), "ids")
    for sid in ids:
        if sid not in SCENARIO_IDS:
            raise ConfigError(f"[{name}] unknown scenario {sid!r}", lines.get((name, "scenarios")))
    return tuple(ids), prim


def load_config(path) -> RunConfig:
    """Read and validate ``path``.

    Raises
    ------
    ConfigError
        Unreadable file, unknown section or key, malformed value or a
        missing required key; the message carries the line number.
    """
    try:
        with open(path, "rb") as fh:
            blob = fh.read()
    except OSError as err:
        raise ConfigError(f"cannot read config {path}: {err.strerror}") from None
    try:
        text = blob.decode("utf-8")
    except UnicodeDecodeError:
        raise ConfigError(f"{path} is not UTF-8 text") from None
    return parse_config(text, source=str(path), sha256=hashlib.sha256(blob).hexdigest(),
                        base_dir=os.path.dirname(os.path.abspath(path)))


def parse_config(text, source="<string>", sha256=None, base_dir="."):
    keys_at, sections_at = _line_index(text)
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#",),
                                   comment_prefixes=("#", ";"), empty_lines_in_values=False)
    cp.optionxform = str.lower
    try:
        cp.read_string(text, source=source)
    except configparser.Error as err:
        line = getattr(err, "lineno", None)
        msg = getattr(err, "message", str(err)).splitlines()[0]
        raise ConfigError(msg, line) from None

    lines = dict(keys_at)
    lines.update(sections_at)
    updates, explicit = {}, set()
    extra = []
    scenarios = ("backfed_b",)
    output_dir, plot_db_min = "out", -60.0
    sweep_param, sweep_values = "", ()
    tables = {}

    for name in cp.sections():
        sec = cp[name]
        if name.startswith("blockage."):
            for key in sec:
                if key not in BLOCKAGE_KEYS:
                    raise ConfigError(f"unknown key '{key}' in [{name}]", lines.get((name, key)))
            extra.append(_blockage_primitive(name, sec, lines))
            continue
        if name not in SCHEMA:
            raise ConfigError(f"unknown section [{name}]", lines.get(name))
        for key, raw in sec.items():
            if key not in SCHEMA[name]:
                raise ConfigError(f"unknown key '{key}' in [{name}]", lines.get((name, key)))
            target, kind = SCHEMA[name][key]
            where = (lines.get((name, key)), f"[{name}] {key}")
            val = _parse_value(raw, kind, where)
            if target is not None:
                updates[target] = val
                explicit.add(target)
            elif key == "scenarios":
                if not val:
                    raise ConfigError("scenarios: empty list", where[0])
                for sid in val:
                    if sid not in SCENARIO_IDS:
                        raise ConfigError(f"unknown scenario id {sid!r}; expected one of "
                                          f"{', '.join(SCENARIO_IDS)}", where[0])
                scenarios = val
            elif key == "output_dir":
                output_dir = val
            elif key == "plot_db_min":
                plot_db_min = val
            elif key == "parameter":
                if val not in SWEEP_PARAMETERS:
                    raise ConfigError(f"unknown sweep parameter {val!r}; expected one of "
                                      f"{', '.join(SWEEP_PARAMETERS)}", where[0])
                sweep_param = val
            elif key == "values":
                sweep_values = val
            elif key in ("e_plane_csv", "h_plane_csv"):
                tables[key] = (os.path.join(base_dir, val), where[0])

    for name, req in REQUIRED.items():
        for key in req:
            if not cp.has_section(name) or key not in cp[name]:
                raise ConfigError(f"missing required key '{key}' in [{name}]",
                                  lines.get(name))

    model = updates.get("feed_model", "cos_q")
    if model not in FEED_MODELS:
        raise ConfigError(f"feed model must be one of {', '.join(FEED_MODELS)}",
                          lines.get(("feed", "model")))
    if updates.get("polarization", "linear_x") not in POLARIZATIONS:
        raise ConfigError(f"polarization must be one of {', '.join(POLARIZATIONS)}",
                          lines.get(("feed", "polarization")))
    if model == "tabulated":
        if set(tables) != {"e_plane_csv", "h_plane_csv"}:
            raise ConfigError("tabulated feed needs e_plane_csv and h_plane_csv",
                              lines.get("feed"))
        try:
            updates["feed_table"] = load_tabulated(tables["e_plane_csv"][0],
                                                   tables["h_plane_csv"][0])
        except (OSError, ValueError) as err:
            raise ConfigError(f"feed table: {err}", tables["e_plane_csv"][1]) from None
    if extra:
        updates["extra_blockage"] = tuple(extra)

    try:
        params = ScenarioParams(**updates)
    except ValueError as err:
        raise ConfigError(str(err)) from None
    if sha256 is None:
        sha256 = hashlib.sha256(text.encode("utf-8")).hexdigest()
    return RunConfig(tuple(scenarios), params, output_dir, plot_db_min, sweep_param,
                     tuple(sweep_values), source, sha256, frozenset(explicit))
