"""Config files, CSV/JSON outputs and the decay plot.

Config files are INI-style with the sections ``[grid]``, ``[time]``,
``[model]``, ``[solver]`` and ``[output]``. Every key is optional (defaults
come from :class:`SimConfig`) but unknown sections or keys are errors. See
``CONFIG_SCHEMA`` for the full key list.
"""
import configparser
import csv
import json
import math
import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from .evolution import SERIES_COLUMNS, SimConfig, TimeSeries

# (section, key) -> (SimConfig field, parser)
_BOOL = {"on": True, "true": True, "yes": True, "1": True,
         "off": False, "false": False, "no": False, "0": False}


def _parse_bool(text):
    try:
        return _BOOL[text.strip().lower()]
    except KeyError:
        raise ValueError("expected on/off, got %r" % text) from None


def _parse_int(text):
    value = float(text)
    if value != int(value):
        raise ValueError("expected an integer, got %r" % text)
    return int(value)


CONFIG_SCHEMA = {
    ("grid", "n_points"): ("n_points", _parse_int),
    ("time", "dt"): ("dt", float),
    ("time", "t_final"): ("t_final", float),
    ("time", "max_dt_halvings"): ("max_dt_halvings", _parse_int),
    ("model", "poisson"): ("poisson_on", _parse_bool),
    ("model", "mass"): ("mass", float),
    ("model", "v0"): ("v0", str),
    ("model", "v0_amplitude"): ("v0_amplitude", float),
    ("model", "v0_mode"): ("v0_mode", _parse_int),
    ("model", "v0_file"): ("v0_file", str),
    ("model", "init"): ("init", str),
    ("model", "amplitude"): ("amplitude", float),
    ("model", "mode"): ("mode", _parse_int),
    ("model", "seed"): ("seed", _parse_int),
    ("model", "init_file"): ("init_file", str),
    ("solver", "newton_tol"): ("newton_tol", float),
    ("solver", "newton_stall_tol"): ("newton_stall_tol", float),
    ("solver", "newton_max_iter"): ("newton_max_iter", _parse_int),
    ("solver", "energy_tol"): ("energy_tol", float),
    ("solver", "eq_mix"): ("eq_mix", float),
    ("solver", "eq_tol"): ("eq_tol", float),
    ("solver", "eq_max_iter"): ("eq_max_iter", _parse_int),
    ("solver", "inverse_tol"): ("inverse_tol", float),
    ("solver", "inverse_max_iter"): ("inverse_max_iter", _parse_int),
    ("solver", "fit_fraction"): ("fit_fraction", float),
    ("solver", "fit_floor"): ("fit_floor", float),
    ("output", "directory"): ("output_dir", str),
    ("output", "svg"): ("svg", _parse_bool),
    ("output", "snapshot_every"): ("snapshot_every", _parse_int),
}
SECTIONS = ("grid", "time", "model", "solver", "output")
_FIELD_TO_KEY = {f: k for k, (f, _) in CONFIG_SCHEMA.items()}


class ConfigError(ValueError):
    def __init__(self, path, line, message):
        where = "%s:%s" % (path, line) if line else str(path)
        super().__init__("%s: %s" % (where, message))
        self.path, self.line = path, line


def _line_index(text):
    """Map (section, key) and section headers to 1-based line numbers."""
    index, section = {}, None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        m = re.match(r"\[([^\]]+)\]", line)
        if m:
            section = m.group(1).strip()
            index.setdefault((section, None), lineno)
            continue
        m = re.match(r"([^=:#;\s][^=:]*?)\s*[=:]", line)
        if m and section is not None:
            index.setdefault((section, m.group(1).strip().lower()), lineno)
    return index


def load_config(path) -> SimConfig:
    """Parse an INI config; every error names the offending line."""
    path = Path(path)
    if not path.is_file():
        raise ConfigError(path, None, "config file not found")
    text = path.read_text()
    lines = _line_index(text)
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    try:
        parser.read_string(text, source=str(path))
    except configparser.Error as exc:
        raise ConfigError(path, getattr(exc, "lineno", None), exc.message) from None
    values = {}
    for section in parser.sections():
        if section not in SECTIONS:
            raise ConfigError(path, lines.get((section, None)),
                              "unknown section [%s]" % section)
        for key, raw in parser.items(section):
            line = lines.get((section, key))
            if (section, key) not in CONFIG_SCHEMA:
                raise ConfigError(path, line, "unknown key %r in [%s]" % (key, section))
            name, convert = CONFIG_SCHEMA[(section, key)]
            try:
                values[name] = convert(raw)
            except ValueError as exc:
                raise ConfigError(path, line, "type mismatch for %r: %s" % (key, exc)) from None
    try:
        return SimConfig(**values)
    except ValueError as exc:
        bad = next((f for f in values if f in str(exc)), None)
        line = lines.get(_FIELD_TO_KEY[bad]) if bad else None
        raise ConfigError(path, line, str(exc)) from None


def dump_config(cfg: SimConfig) -> str:
    """Inverse of :func:`load_config` (``None`` fields are left out)."""
    out = []
    for section in SECTIONS:
        out.append("[%s]" % section)
        for (sec, key), (name, conv) in CONFIG_SCHEMA.items():
            value = getattr(cfg, name)
            if sec != section or value is None:
                continue
            if conv is _parse_bool:
                value = "on" if value else "off"
            out.append("%s = %s" % (key, repr(value) if isinstance(value, float) else value))
        out.append("")
    return "\n".join(out)


def fmt(value) -> str:
    """17 significant digits; integers stay integers."""
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return "%.17g" % value


def write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])


def read_field_csv(path, column, n_points=None) -> np.ndarray:
    """Read one column (e.g. ``n``) from a CSV with a header row."""
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if column not in (reader.fieldnames or []):
            raise ValueError("%s has no column %r" % (path, column))
        values = np.array([float(row[column]) for row in reader])
    if n_points is not None and values.size != n_points:
        raise ValueError("%s has %d rows, expected %d" % (path, values.size, n_points))
    return values


def write_series(path, series: TimeSeries):
    write_csv(path, SERIES_COLUMNS,
              ([getattr(r, c) for c in SERIES_COLUMNS] for r in series.records))


def write_snapshot(path, x, n, A, V):
    write_csv(path, ("x", "n", "A", "V"), zip(x, n, A, V))


def _finite_or_none(x):
    if x is None:
        return None
    x = float(x)
    return x if math.isfinite(x) else None


@dataclass
class RunSummary:
    command: str
    config: dict
    fermi_level: float
    free_energy_inf: float
    min_density_inf: float
    mu: float = float("nan")
    r_squared: float = float("nan")
    fit_window: list = field(default_factory=lambda: [0, 0])
    sigma_initial: float = float("nan")
    mass_drift: float = float("nan")
    steps: int = 0
    violations: list = field(default_factory=list)
    wall_clock_seconds: float = 0.0
    status: str = "clean"

    def to_json(self) -> dict:
        out = dict(self.__dict__)
        for key in ("fermi_level", "free_energy_inf", "min_density_inf", "mu",
                    "r_squared", "sigma_initial", "mass_drift", "wall_clock_seconds"):
            out[key] = _finite_or_none(out[key])
        out["fit_window"] = [int(i) for i in self.fit_window]
        return out


def summary_schema() -> dict:
    return json.loads(resources.files("qddlab").joinpath("schemas/summary.schema.json").read_text())


def write_summary(path, summary: RunSummary):
    with open(path, "w") as fh:
        json.dump(summary.to_json(), fh, indent=2, sort_keys=True)
        fh.write("\n")


def write_outputs(out_dir, series: TimeSeries, summary: RunSummary, cfg: SimConfig,
                  svg=False):
    """series.csv, snapshot_<k>.csv, summary.json and optionally decay.svg."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_series(out / "series.csv", series)
    x = cfg.grid.nodes
    for k, (n, A, V) in sorted(series.snapshots.items()):
        write_snapshot(out / ("snapshot_%d.csv" % k), x, n, A, V)
    write_summary(out / "summary.json", summary)
    if svg:
        (out / "decay.svg").write_text(decay_svg(series))
    return out


def decay_svg(series: TimeSeries, width=640, height=400) -> str:
    """Log-linear plot of ``F - F_inf`` against time, with the fitted line."""
    t = series.column("t")
    gap = series.column("free_energy_gap")
    keep = gap > 0
    t, y = t[keep], np.log10(gap[keep])
    margin = 60
    if t.size == 0:
        t, y = np.array([0.0, 1.0]), np.array([0.0, 0.0])
    t0, t1 = float(t.min()), float(max(t.max(), t.min() + 1e-300))
    y0, y1 = math.floor(y.min()), math.ceil(y.max())
    y1 = y1 if y1 > y0 else y0 + 1

    def px(tt, yy):
        sx = margin + (tt - t0) / (t1 - t0 if t1 > t0 else 1.0) * (width - 2 * margin)
        sy = height - margin - (yy - y0) / (y1 - y0) * (height - 2 * margin)
        return "%.2f,%.2f" % (sx, sy)

    parts = [
        '<svg xmlns="http://www.w3.org/2000/svg" width="%d" height="%d">' % (width, height),
        '<rect width="100%" height="100%" fill="white"/>',
        '<line x1="%d" y1="%d" x2="%d" y2="%d" stroke="black"/>'
        % (margin, height - margin, width - margin, height - margin),
        '<line x1="%d" y1="%d" x2="%d" y2="%d" stroke="black"/>'
        % (margin, margin, margin, height - margin),
        '<text x="%d" y="%d" font-size="12">t</text>' % (width // 2, height - 20),
        '<text x="10" y="%d" font-size="12">log10(F - F_inf)</text>' % (margin - 20),
    ]
    for e in range(y0, y1 + 1):
        sx, sy = px(t0, e).split(",")
        parts.append('<text x="%d" y="%s" font-size="10">%d</text>' % (10, sy, e))
    parts.append('<text x="%d" y="%d" font-size="10">%.3g</text>' % (margin, height - 45, t0))
    parts.append('<text x="%d" y="%d" font-size="10">%.3g</text>'
                 % (width - margin - 20, height - 45, t1))
    parts.append('<polyline fill="none" stroke="steelblue" points="%s"/>'
                 % " ".join(px(a, b) for a, b in zip(t, y)))
    lo, hi = series.fit_window
    if math.isfinite(series.mu) and hi > lo:
        tt = series.column("t")
        g = series.column("free_energy_gap")
        ta, tb = tt[lo], tt[hi - 1]
        # line through the window's log-mean with slope -mu
        ybar = float(np.mean(np.log10(g[lo:hi])))
        tbar = float(np.mean(tt[lo:hi]))
        slope = -series.mu / math.log(10)
        parts.append('<polyline fill="none" stroke="crimson" stroke-dasharray="4,3" points="%s %s"/>'
                     % (px(ta, ybar + slope * (ta - tbar)), px(tb, ybar + slope * (tb - tbar))))
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
