"""CSV tables and SVG line plots for sweep results.

Plots are rendered by matplotlib with a fixed axes rectangle and explicit
axis limits, so a data point ``(x, y)`` lands at a predictable SVG
coordinate (see :func:`data_to_svg`) and repeated renders are byte-identical.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .experiments import UNITS, SweepRow, SweepTable  # noqa: E402
from .observables import Channel  # noqa: E402

FIG_SIZE = (7.2, 4.5)  # inches; SVG user units are points (72 per inch)
AXES_RECT = (0.12, 0.13, 0.58, 0.8)  # left, bottom, width, height in figure fractions
Y_MARGIN = 0.05

LABELS = {
    "omega_rabi": "collective Rabi frequency",
    "n_molecules": "number of molecules",
    "feedback_lambda": "feedback amplitude",
    "detector_efficiency": "detector efficiency",
    "feedback_target": "feedback target",
    "disorder_q": "disorder width",
}


def column_label(name: str) -> str:
    unit = UNITS.get(name, "")
    return f"{name} [{unit}]" if unit else name


def _fmt(value) -> str:
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return format(float(value), ".17g")


def _comment_block(config: Optional[str], prefix: str) -> list:
    if not config:
        return []
    return [f"{prefix}{line}".rstrip() for line in config.strip().splitlines()]


def csv_header(table: SweepTable) -> list:
    cols = [column_label(c) for c in table.coord_names] + ["channel"]
    if table.ensemble > 1:
        cols += ["sigma_e_mean [eV]", "sigma_e_stderr [eV]", "count"]
    else:
        cols += ["sigma_e [eV]"]
    return cols + ["error"]


def write_csv(table: SweepTable, path, config: Optional[str] = None) -> None:
    """Write one row per (grid point, channel); floats keep 17 significant digits."""
    lines = _comment_block(config, "# ")
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(csv_header(table))
    for row in table.rows:
        out = [_fmt(v) for v in row.coords] + [row.channel.value, _fmt(row.mean)]
        if table.ensemble > 1:
            out += [_fmt(row.stderr), str(row.count)]
        out.append(row.error)
        writer.writerow(out)
    text = "\n".join(lines + [""]) if lines else ""
    try:
        Path(path).write_text(text + buf.getvalue(), encoding="utf-8")
    except OSError as exc:
        raise OSError(f"cannot write CSV to {path}: {exc}") from exc


def read_csv(path) -> SweepTable:
    """Inverse of :func:`write_csv` (comment lines are skipped)."""
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(line for line in fh if not line.startswith("#"))
        header = next(reader)
        ci = header.index("channel")
        coord_names = tuple(h.split(" [")[0] for h in header[:ci])
        ensemble = "count" in header
        table = SweepTable(coord_names, ensemble=2 if ensemble else 1)
        for rec in reader:
            coords = tuple(int(v) if name in ("n_molecules", "feedback_target") else float(v) for name, v in zip(coord_names, rec[:ci]))
            channel = Channel(rec[ci])
            mean = float(rec[ci + 1])
            if ensemble:
                row = SweepRow(coords, channel, mean, float(rec[ci + 2]), int(rec[ci + 3]), rec[ci + 4])
            else:
                row = SweepRow(coords, channel, mean, 0.0, 1, rec[ci + 2])
            table.rows.append(row)
    return table


@dataclass(frozen=True)
class Series:
    label: str
    x: np.ndarray
    y: np.ndarray


def table_series(table: SweepTable, x: Optional[str] = None) -> list:
    """Split a table into one line per (other coordinates, channel)."""
    x = x or table.x_name
    xi = table.coord_names.index(x)
    groups = {}
    for row in table.rows:
        key = tuple(v for i, v in enumerate(row.coords) if i != xi) + (row.channel,)
        groups.setdefault(key, []).append((row.coords[xi], row.mean))
    others = [n for n in table.coord_names if n != x]
    out = []
    for key, points in groups.items():
        parts = [f"{n}={_short(v)}" for n, v in zip(others, key[:-1])]
        label = ", ".join(parts + [key[-1].value.upper()])
        xs, ys = zip(*points)
        out.append(Series(label, np.asarray(xs, float), np.asarray(ys, float)))
    return out


def _short(v):
    return str(int(v)) if float(v).is_integer() else f"{float(v):g}"


def axis_limits(series: list) -> tuple:
    xs = np.concatenate([s.x for s in series])
    ys = np.concatenate([s.y[np.isfinite(s.y)] for s in series]) if series else np.array([])
    x0, x1 = float(xs.min()), float(xs.max())
    if x0 == x1:
        x0, x1 = x0 - 0.5, x1 + 0.5
    if ys.size == 0:
        return (x0, x1), (0.0, 1.0)
    y0, y1 = float(ys.min()), float(ys.max())
    pad = Y_MARGIN * (y1 - y0) if y1 > y0 else max(abs(y0) * Y_MARGIN, 1e-12)
    return (x0, x1), (y0 - pad, y1 + pad)


def data_to_svg(x, y, xlim, ylim):
    """SVG coordinates (points, y downward) of a data point under the fixed layout."""
    w_pt, h_pt = FIG_SIZE[0] * 72, FIG_SIZE[1] * 72
    left, bottom, width, height = AXES_RECT
    fx = left + width * (x - xlim[0]) / (xlim[1] - xlim[0])
    fy = bottom + height * (y - ylim[0]) / (ylim[1] - ylim[0])
    return fx * w_pt, (1 - fy) * h_pt


def write_svg_plot(table: SweepTable, path, x: Optional[str] = None, title: str = "", config: Optional[str] = None) -> list:
    """Render every series of ``table`` against ``x`` and return the series drawn."""
    series = table_series(table, x)
    if not series:
        raise ValueError("table has no data series to plot")
    x = x or table.x_name
    for s in series:
        steps = np.diff(s.x)
        if s.x.size > 1 and not (np.all(steps > 0) or np.all(steps < 0)):
            raise ValueError(f"x values of series {s.label!r} are not monotone")
    xlim, ylim = axis_limits(series)
    with plt.rc_context({"svg.hashsalt": "exciton-feedback", "svg.fonttype": "none", "path.simplify": False}):
        fig = plt.figure(figsize=FIG_SIZE)
        ax = fig.add_axes(AXES_RECT)
        for i, s in enumerate(series):
            (line,) = ax.plot(s.x, s.y, marker="o", markersize=2.5, linewidth=1.2, label=s.label)
            line.set_gid(f"series-{i}")
        ax.set_xlim(*xlim)
        ax.set_ylim(*ylim)
        ax.set_xlabel(f"{LABELS.get(x, x)} {column_label(x)[len(x):]}".strip())
        ax.set_ylabel("exciton conductance sigma_e [eV]")
        if title:
            ax.set_title(title)
        legend = ax.legend(loc="upper left", bbox_to_anchor=(1.02, 1.0), fontsize=8, frameon=False)
        legend.set_gid("legend")
        buf = io.StringIO()
        fig.savefig(buf, format="svg", metadata={"Date": None, "Creator": None})
        plt.close(fig)
    svg = buf.getvalue()
    if config:
        comment = "<!--\n" + config.strip().replace("--", "- -") + "\n-->\n"
        head, sep, rest = svg.partition("?>\n")
        svg = head + sep + comment + rest if sep else comment + svg
    try:
        Path(path).write_text(svg, encoding="utf-8")
    except OSError as exc:
        raise OSError(f"cannot write SVG to {path}: {exc}") from exc
    return series
