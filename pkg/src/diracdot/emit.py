"""CSV, JSON and SVG output for pipeline results."""

from __future__ import annotations

import csv
import dataclasses
import enum
import io
import json
import math
import sys
import xml.etree.ElementTree as ET
from pathlib import Path

import numpy as np

from .core import DelayCurve, ResonancePoint
from .errors import IoError, UsageError
from .scans import CaptureDepth, ConsistencyReport, ResonanceTrajectory, SpectrumResult, SpinorProfile

DIGITS = 15


def fmt(x) -> str:
    """Number with 15 significant digits; empty for None."""
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return str(bool(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return f"{float(x):.{DIGITS}g}"
    if isinstance(x, enum.Enum):
        return str(x.value)
    return str(x)


# ---------------------------------------------------------------------------
# tables


def _trajectory_rows(points):
    return [
        [p.v, p.eps.real, p.eps.imag, p.residual, p.classification]
        for p in points
    ]


def table(result) -> tuple[list, list]:
    """Header and rows of the CSV form of a result."""
    if isinstance(result, SpectrumResult):
        rows = []
        for k, br in enumerate(result.branches):
            rows += [["branch", k, v, e, r] for v, e, r in zip(br.v, br.eps, br.residual)]
        rows += [["critical", k, v, result.mu, None] for k, v in enumerate(result.critical_depths)]
        rows += [["supercritical", k, v, -result.mu, None] for k, v in enumerate(result.supercritical_depths)]
        return ["series", "index", "v", "eps", "residual"], rows
    if isinstance(result, DelayCurve):
        cols = (result.energies, result.raw_phase, result.unwrapped_phase, result.delay)
        return ["eps", "raw_phase", "unwrapped_phase", "delay"], [list(r) for r in zip(*cols)]
    if isinstance(result, ResonanceTrajectory):
        return ["v", "eps_R", "eps_I", "residual", "classification"], _trajectory_rows(result.resonance_points())
    if isinstance(result, ConsistencyReport):
        return ["eps_R", "eps_I", "delay_peak_eps", "delay_peak_value", "gap"], [
            [r.eps_R, r.eps_I, r.delay_peak_eps, r.delay_peak_value, r.gap] for r in result.rows
        ]
    if isinstance(result, SpinorProfile):
        return ["rho", "region", "phi1_re", "phi1_im", "phi2_re", "phi2_im"], [
            [s.rho, s.region, complex(s.phi1).real, complex(s.phi1).imag, complex(s.phi2).real, complex(s.phi2).imag]
            for s in result.points
        ]
    if isinstance(result, dict):
        return ["quantity", "value"], [[k, v] for k, v in result.items()]
    if isinstance(result, list):
        if all(isinstance(r, CaptureDepth) for r in result):
            return ["kind", "v", "p_inner", "residual"], [[c.kind, c.v, c.p_inner, c.residual] for c in result]
        if all(isinstance(r, ResonancePoint) for r in result):
            return ["v", "eps_R", "eps_I", "residual", "classification"], _trajectory_rows(result)
    raise UsageError(f"no table form for {type(result).__name__}")


def to_csv(result) -> str:
    header, rows = table(result)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows([fmt(x) for x in row] for row in rows)
    return buf.getvalue()


def parse_csv(text: str) -> tuple[list, list]:
    """Read a CSV written by ``to_csv``; numeric cells become floats and
    empty cells None."""
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise IoError("empty CSV") from None

    def cell(s):
        if s == "":
            return None
        try:
            return float(s)
        except ValueError:
            return s

    return header, [[cell(s) for s in row] for row in reader]


def read_csv(path) -> tuple[list, list]:
    try:
        return parse_csv(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc


# ---------------------------------------------------------------------------
# json


def _plain(x):
    if dataclasses.is_dataclass(x) and not isinstance(x, type):
        return {f.name: _plain(getattr(x, f.name)) for f in dataclasses.fields(x)}
    if isinstance(x, enum.Enum):
        return x.value
    if isinstance(x, dict):
        return {str(k): _plain(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_plain(v) for v in x]
    if isinstance(x, np.ndarray):
        return [_plain(v) for v in x.tolist()]
    if isinstance(x, (complex, np.complexfloating)):
        return {"re": _plain(complex(x).real), "im": _plain(complex(x).imag)}
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return float(f"{x:.{DIGITS}g}") if math.isfinite(x) else None
    return x


def to_json(result) -> str:
    """JSON with the field names of the result types."""
    return json.dumps(_plain(result), indent=2) + "\n"


# ---------------------------------------------------------------------------
# svg

WIDTH, HEIGHT, MARGIN = 640, 420, 60
COLOURS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f")


@dataclasses.dataclass
class Chart:
    xlabel: str
    ylabel: str
    title: str
    lines: list = dataclasses.field(default_factory=list)
    dots: list = dataclasses.field(default_factory=list)


def _ticks(lo, hi, n=5):
    return [lo + (hi - lo) * k / (n - 1) for k in range(n)]


def render_svg(chart: Chart) -> str:
    """One XY chart: a polyline per line series and circles for dots."""
    xs = [x for line in chart.lines for x in line[0]] + [d[0] for d in chart.dots]
    ys = [y for line in chart.lines for y in line[1]] + [d[1] for d in chart.dots]
    xs = [x for x in xs if math.isfinite(x)] or [0.0, 1.0]
    ys = [y for y in ys if math.isfinite(y)] or [0.0, 1.0]
    x0, x1, y0, y1 = min(xs), max(xs), min(ys), max(ys)
    if x1 == x0:
        x0, x1 = x0 - 1, x1 + 1
    if y1 == y0:
        y0, y1 = y0 - 1, y1 + 1

    def px(x):
        return MARGIN + (x - x0) / (x1 - x0) * (WIDTH - 2 * MARGIN)

    def py(y):
        return HEIGHT - MARGIN - (y - y0) / (y1 - y0) * (HEIGHT - 2 * MARGIN)

    svg = ET.Element("svg", xmlns="http://www.w3.org/2000/svg", width=str(WIDTH), height=str(HEIGHT),
                     viewBox=f"0 0 {WIDTH} {HEIGHT}")
    ET.SubElement(svg, "title").text = chart.title
    ET.SubElement(svg, "rect", x="0", y="0", width=str(WIDTH), height=str(HEIGHT), fill="white")
    axes = ET.SubElement(svg, "g", stroke="black", fill="none")
    ET.SubElement(axes, "rect", x=str(MARGIN), y=str(MARGIN), width=str(WIDTH - 2 * MARGIN),
                  height=str(HEIGHT - 2 * MARGIN))
    labels = ET.SubElement(svg, "g", attrib={"font-family": "sans-serif", "font-size": "12"})
    for t in _ticks(x0, x1):
        ET.SubElement(labels, "text", x=f"{px(t):.1f}", y=str(HEIGHT - MARGIN + 16),
                      attrib={"text-anchor": "middle"}).text = f"{t:.3g}"
    for t in _ticks(y0, y1):
        ET.SubElement(labels, "text", x=str(MARGIN - 6), y=f"{py(t) + 4:.1f}",
                      attrib={"text-anchor": "end"}).text = f"{t:.3g}"
    ET.SubElement(labels, "text", x=str(WIDTH / 2), y=str(HEIGHT - 16),
                  attrib={"text-anchor": "middle"}).text = chart.xlabel
    ET.SubElement(labels, "text", x="16", y=str(HEIGHT / 2),
                  attrib={"text-anchor": "middle", "transform": f"rotate(-90 16 {HEIGHT / 2})"}).text = chart.ylabel
    ET.SubElement(labels, "text", x=str(WIDTH / 2), y=str(MARGIN - 20),
                  attrib={"text-anchor": "middle"}).text = chart.title
    for k, (lx, ly, name) in enumerate(chart.lines):
        pts = " ".join(f"{px(x):.2f},{py(y):.2f}" for x, y in zip(lx, ly) if math.isfinite(x) and math.isfinite(y))
        ET.SubElement(svg, "polyline", points=pts, fill="none", stroke=COLOURS[k % len(COLOURS)],
                      attrib={"stroke-width": "1.5", "data-series": name})
    for x, y, colour in chart.dots:
        ET.SubElement(svg, "circle", cx=f"{px(x):.2f}", cy=f"{py(y):.2f}", r="4", fill=colour)
    return ET.tostring(svg, encoding="unicode", xml_declaration=False) + "\n"


def chart(result) -> Chart:
    """Chart description of a result."""
    if isinstance(result, SpectrumResult):
        c = Chart("ε", "v", f"bound levels, μ = {result.mu:g}, ℓ = {result.ell}")
        c.lines = [(list(br.eps), list(br.v), f"branch {k}") for k, br in enumerate(result.branches)]
        c.dots = [(result.mu, v, "black") for v in result.critical_depths]
        c.dots += [(-result.mu, v, "grey") for v in result.supercritical_depths]
        return c
    if isinstance(result, DelayCurve):
        c = Chart("ε", "τ", "Wigner time delay")
        c.lines = [(list(result.energies), list(result.delay), "delay")]
        return c
    if isinstance(result, ResonanceTrajectory):
        return _trajectory_chart([result])
    if isinstance(result, ConsistencyReport):
        c = Chart("ε", "τ", f"delay maxima and resonances, v = {result.v:g}")
        c.lines = [([r.delay_peak_eps for r in result.rows], [r.delay_peak_value for r in result.rows], "peaks")]
        c.dots = [(r.eps_R, r.delay_peak_value, "black") for r in result.rows]
        return c
    if isinstance(result, SpinorProfile):
        c = Chart("ρ", "φ", f"radial spinor, ε = {complex(result.eps).real:.6g}")
        rho = [s.rho for s in result.points]
        for name, get in (("phi1", lambda s: s.phi1), ("phi2", lambda s: s.phi2)):
            vals = [complex(get(s)) for s in result.points]
            c.lines.append((rho, [z.real for z in vals], f"Re {name}"))
            if any(z.imag != 0 for z in vals):
                c.lines.append((rho, [z.imag for z in vals], f"Im {name}"))
        return c
    if isinstance(result, list) and result and all(isinstance(r, ResonanceTrajectory) for r in result):
        return _trajectory_chart(result)
    if isinstance(result, list) and all(isinstance(r, ResonancePoint) for r in result):
        c = Chart("ε_R", "ε_I", "resonances")
        c.lines = [([p.eps.real for p in result], [p.eps.imag for p in result], "roots")]
        c.dots = [(p.eps.real, p.eps.imag, "black") for p in result]
        return c
    if isinstance(result, list) and all(isinstance(r, CaptureDepth) for r in result):
        c = Chart("index", "v", "capture depths")
        for kind in sorted({r.kind.value for r in result}):
            vs = [r.v for r in result if r.kind.value == kind]
            c.lines.append((list(range(1, len(vs) + 1)), vs, kind))
        return c
    raise UsageError(f"no chart form for {type(result).__name__}")


def _trajectory_chart(trajectories) -> Chart:
    c = Chart("ε_R", "ε_I", "resonance trajectories")
    for k, t in enumerate(trajectories):
        c.lines.append(([p.root.real for p in t.points], [p.root.imag for p in t.points], f"trajectory {k}"))
        c.dots += [(e.eps, 0.0, "black") for e in t.capture_events]
    return c


def to_svg(result) -> str:
    return render_svg(chart(result))


# ---------------------------------------------------------------------------


def render(result, format: str) -> str:
    if format == "csv":
        return to_csv(result)
    if format == "json":
        return to_json(result)
    if format == "svg":
        return to_svg(result)
    raise UsageError(f"unknown format {format!r}")


def _write_stream(text, stream):
    (stream or sys.stdout).write(text)


def emit(result, format: str, path=None, stream=None) -> list:
    """Write a result; returns the paths written.

    A list of several trajectories is written as one CSV per trajectory
    (``name_1.csv``, ``name_2.csv``, ...), since each has its own table.
    """
    if format == "csv" and isinstance(result, list) and result and all(
            isinstance(r, ResonanceTrajectory) for r in result):
        if len(result) == 1:
            return emit(result[0], format, path, stream)
        if path is None:
            # blank line between the tables
            _write_stream("\n".join(to_csv(r) for r in result), stream)
            return []
        base = Path(path)
        written = []
        for k, r in enumerate(result, 1):
            written += emit(r, format, base.with_name(f"{base.stem}_{k}{base.suffix}"))
        return written
    text = render(result, format)
    if path is None:
        _write_stream(text, stream)
        return []
    try:
        Path(path).write_text(text, encoding="utf-8")
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc
    return [str(path)]
