"""CSV, SVG and metadata emission for sweep results.

Files are named ``<scenario>_<master_seed>.<ext>``. Secondary tables get a
suffix, as in ``rate_pdf_2014_hist.csv``. Nothing time-dependent is written,
so a rerun of the same config produces identical bytes.
"""

from __future__ import annotations

import csv
import io
import json
import math
from pathlib import Path

import numpy as np

from .errors import ParameterError

PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")


def format_value(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return "" if math.isnan(v) else repr(v)
    return str(v)


def table_csv(table) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(table.header)
    for row in table.rows:
        w.writerow([format_value(v) for v in row])
    return buf.getvalue()


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        return None if math.isnan(float(obj)) else float(obj)
    return obj


# -- svg -----------------------------------------------------------------------

W, H, PAD = 640, 400, 60


def _scale(lo, hi, a, b):
    span = (hi - lo) or 1.0
    return lambda v: a + (v - lo) / span * (b - a)


def _frame(title, xlabel, ylabel, xr, yr) -> list:
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">',
           f'<rect width="{W}" height="{H}" fill="white"/>',
           f'<line x1="{PAD}" y1="{H - PAD}" x2="{W - PAD}" y2="{H - PAD}" stroke="black"/>',
           f'<line x1="{PAD}" y1="{PAD}" x2="{PAD}" y2="{H - PAD}" stroke="black"/>',
           f'<text x="{W / 2}" y="{PAD / 2}" text-anchor="middle" font-size="14">{title}</text>',
           f'<text x="{W / 2}" y="{H - 15}" text-anchor="middle" font-size="12">{xlabel}</text>',
           f'<text x="15" y="{H / 2}" text-anchor="middle" font-size="12" '
           f'transform="rotate(-90 15 {H / 2})">{ylabel}</text>']
    for v, anchor, x, y in ((xr[0], "start", PAD, H - PAD + 15), (xr[1], "end", W - PAD, H - PAD + 15)):
        out.append(f'<text x="{x}" y="{y}" text-anchor="{anchor}" font-size="10">{v:.4g}</text>')
    for v, y in ((yr[0], H - PAD), (yr[1], PAD + 4)):
        out.append(f'<text x="{PAD - 4}" y="{y}" text-anchor="end" font-size="10">{v:.4g}</text>')
    return out


def _legend(names) -> list:
    return [f'<text x="{W - PAD}" y="{PAD + 14 * k}" text-anchor="end" font-size="11" '
            f'fill="{PALETTE[k % len(PALETTE)]}">{name}</text>' for k, name in enumerate(names)]


def _poly(points, color) -> str:
    pts = " ".join(f"{x:.2f},{y:.2f}" for x, y in points)
    return f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="1.5"/>'


def render_svg(plot: dict) -> str:
    series = plot["series"]
    if plot["type"] == "line":
        xs = [x for s in series.values() for x, _ in s]
        ys = [y for s in series.values() for _, y in s]
        xr, yr = (min(xs), max(xs)), (min(0.0, min(ys)), max(ys))
        sx, sy = _scale(*xr, PAD, W - PAD), _scale(*yr, H - PAD, PAD)
        out = _frame(plot["title"], plot["xlabel"], plot["ylabel"], xr, yr)
        for k, s in enumerate(series.values()):
            color = PALETTE[k % len(PALETTE)]
            pts = [(sx(x), sy(y)) for x, y in sorted(s)]
            out.append(_poly(pts, color))
            out.extend(f'<circle cx="{x:.2f}" cy="{y:.2f}" r="3" fill="{color}"/>' for x, y in pts)
    else:
        xs = [e for s in series.values() for e in s["edges"]]
        xs += [m for s in series.values() for m in s["markers"].values()]
        ys = [d for s in series.values() for d in s["density"]]
        xr, yr = (min(xs), max(xs)), (0.0, max(ys))
        sx, sy = _scale(*xr, PAD, W - PAD), _scale(*yr, H - PAD, PAD)
        out = _frame(plot["title"], plot["xlabel"], plot["ylabel"], xr, yr)
        for k, s in enumerate(series.values()):
            color = PALETTE[k % len(PALETTE)]
            e, d = s["edges"], s["density"]
            pts = [(sx(e[0]), sy(0.0))]
            for i, v in enumerate(d):
                pts += [(sx(e[i]), sy(v)), (sx(e[i + 1]), sy(v))]
            pts.append((sx(e[-1]), sy(0.0)))
            out.append(_poly(pts, color))
            for dash, m in zip(("4,2", "1,3"), s["markers"].values()):
                out.append(f'<line x1="{sx(m):.2f}" y1="{PAD}" x2="{sx(m):.2f}" y2="{H - PAD}" '
                           f'stroke="{color}" stroke-dasharray="{dash}"/>')
    out.extend(_legend(series.keys()))
    out.append("</svg>")
    return "\n".join(out) + "\n"


# -- entry point ---------------------------------------------------------------

def emit_outputs(result, output_dir, formats=("csv",), config_text: str | None = None) -> list:
    """Write the result's tables (always CSV), optional SVG and a metadata file."""
    if result is None or not result.points or not result.tables.get("") or not result.tables[""].rows:
        raise ParameterError("nothing to emit: the result is empty")
    bad = set(formats) - {"csv", "svg"}
    if bad:
        raise ParameterError(f"unknown output formats {sorted(bad)}")
    out_dir = Path(output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    stem = f"{result.scenario}_{result.master_seed}"
    written = []
    for name, table in result.tables.items():
        path = out_dir / (f"{stem}.csv" if not name else f"{stem}_{name}.csv")
        path.write_text(table_csv(table))
        written.append(path)
    if "svg" in formats and result.plot and result.plot["series"]:
        path = out_dir / f"{stem}.svg"
        path.write_text(render_svg(result.plot))
        written.append(path)
    meta = {"scenario": result.scenario, "master_seed": result.master_seed, "axis": result.axis_name,
            "counts": [p.count for p in result.points], "notices": result.notices,
            "tables": {name or "main": t.header for name, t in result.tables.items()},
            "metadata": result.metadata}
    if config_text is not None:
        meta["config"] = config_text.splitlines()
    path = out_dir / f"{stem}.meta.json"
    path.write_text(json.dumps(_jsonable(meta), indent=1, sort_keys=True) + "\n")
    written.append(path)
    return written
