"""Reports for a completed run directory.

Generates self-contained SVG plots (scatter of FOM vs BV colored by
acquisition order, and the frontier hull overlay) plus convergence and
frontier CSVs. Everything here is a pure function of the run directory, so
regenerating a report never changes its bytes.
"""

from __future__ import annotations

from pathlib import Path

from .driver import Dataset, frontier_report, load_dataset
from .lagrange import UpperHull, hull_csv

# acquisition-order color ramp endpoints: deep blue (first) to bright red (last)
COLOR_FIRST = (0x00, 0x42, 0x9D)
COLOR_LAST = (0xD7, 0x19, 0x1C)

_WIDTH, _HEIGHT = 640, 480
_MARGIN_LEFT, _MARGIN_RIGHT, _MARGIN_TOP, _MARGIN_BOTTOM = 64, 20, 36, 48


def order_color(index: int, count: int) -> str:
    """Hex color for the index-th of ``count`` points on the blue-red ramp."""
    t = index / (count - 1) if count > 1 else 1.0
    channels = (round(a + t * (b - a)) for a, b in zip(COLOR_FIRST, COLOR_LAST))
    return "#{:02x}{:02x}{:02x}".format(*channels)


def _axis_range(values) -> tuple[float, float]:
    lo, hi = min(values), max(values)
    if lo == hi:
        pad = 1.0 if lo == 0.0 else abs(lo) * 0.1
        return lo - pad, hi + pad
    pad = (hi - lo) * 0.05
    return lo - pad, hi + pad


class _Frame:
    """Data-to-pixel transform with axes and tick labels."""

    def __init__(self, xs, ys, title: str, xlabel: str, ylabel: str):
        self.x_lo, self.x_hi = _axis_range(xs)
        self.y_lo, self.y_hi = _axis_range(ys)
        self.title, self.xlabel, self.ylabel = title, xlabel, ylabel

    def px(self, x: float) -> float:
        span = self.x_hi - self.x_lo
        frac = (x - self.x_lo) / span
        return _MARGIN_LEFT + frac * (_WIDTH - _MARGIN_LEFT - _MARGIN_RIGHT)

    def py(self, y: float) -> float:
        span = self.y_hi - self.y_lo
        frac = (y - self.y_lo) / span
        return _HEIGHT - _MARGIN_BOTTOM - frac * (_HEIGHT - _MARGIN_TOP - _MARGIN_BOTTOM)

    def header(self) -> list[str]:
        x0, x1 = _MARGIN_LEFT, _WIDTH - _MARGIN_RIGHT
        y0, y1 = _HEIGHT - _MARGIN_BOTTOM, _MARGIN_TOP
        parts = [
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{_WIDTH}" height="{_HEIGHT}" '
            f'viewBox="0 0 {_WIDTH} {_HEIGHT}">',
            f'<rect width="{_WIDTH}" height="{_HEIGHT}" fill="white"/>',
            f'<text x="{_WIDTH / 2:.0f}" y="20" text-anchor="middle" '
            f'font-family="sans-serif" font-size="14">{self.title}</text>',
            f'<line x1="{x0}" y1="{y0}" x2="{x1}" y2="{y0}" stroke="black"/>',
            f'<line x1="{x0}" y1="{y0}" x2="{x0}" y2="{y1}" stroke="black"/>',
            f'<text x="{(x0 + x1) / 2:.0f}" y="{_HEIGHT - 10}" text-anchor="middle" '
            f'font-family="sans-serif" font-size="12">{self.xlabel}</text>',
            f'<text x="14" y="{(y0 + y1) / 2:.0f}" text-anchor="middle" '
            f'font-family="sans-serif" font-size="12" '
            f'transform="rotate(-90 14 {(y0 + y1) / 2:.0f})">{self.ylabel}</text>',
        ]
        for i in range(5):
            fx = self.x_lo + (self.x_hi - self.x_lo) * i / 4
            fy = self.y_lo + (self.y_hi - self.y_lo) * i / 4
            parts.append(
                f'<text x="{self.px(fx):.1f}" y="{y0 + 16}" text-anchor="middle" '
                f'font-family="sans-serif" font-size="10">{fx:.4g}</text>'
            )
            parts.append(
                f'<text x="{x0 - 6}" y="{self.py(fy) + 3:.1f}" text-anchor="end" '
                f'font-family="sans-serif" font-size="10">{fy:.4g}</text>'
            )
        return parts


def scatter_svg(dataset: Dataset) -> str:
    """FOM vs BV for every valid record, colored by acquisition order."""
    records = dataset.valid_records()
    if not records:
        raise ValueError("no valid records to plot")
    bvs = [r.evaluation.bv for r in records]
    foms = [r.evaluation.fom for r in records]
    frame = _Frame(bvs, foms, "Figure of merit vs breakdown voltage",
                   "BV (V)", "FOM (kW/mm&#178;)")
    parts = frame.header()
    n = len(records)
    for i, r in enumerate(records):
        parts.append(
            f'<circle cx="{frame.px(r.evaluation.bv):.2f}" '
            f'cy="{frame.py(r.evaluation.fom):.2f}" r="4" '
            f'fill="{order_color(i, n)}" fill-opacity="0.85"/>'
        )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def frontier_svg(dataset: Dataset, hull: UpperHull) -> str:
    """Scatter of valid records with the upper-hull frontier drawn on top."""
    records = dataset.valid_records()
    if not records:
        raise ValueError("no valid records to plot")
    bvs = [r.evaluation.bv for r in records]
    foms = [r.evaluation.fom for r in records]
    frame = _Frame(bvs, foms, "FOM frontier", "BV (V)", "FOM (kW/mm&#178;)")
    parts = frame.header()
    for r in records:
        parts.append(
            f'<circle cx="{frame.px(r.evaluation.bv):.2f}" '
            f'cy="{frame.py(r.evaluation.fom):.2f}" r="3" '
            f'fill="#9db8d9" fill-opacity="0.7"/>'
        )
    coords = " ".join(
        f"{frame.px(p.bv):.2f},{frame.py(p.fom):.2f}" for p in hull.points
    )
    parts.append(
        f'<polyline points="{coords}" fill="none" stroke="#d7191c" stroke-width="2"/>'
    )
    for p in hull.points:
        parts.append(
            f'<circle cx="{frame.px(p.bv):.2f}" cy="{frame.py(p.fom):.2f}" r="4" '
            f'fill="#d7191c"/>'
        )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def convergence_csv(dataset: Dataset) -> str:
    """Running best FOM by iteration, valid records only."""
    lines = ["iteration,fom,best_fom"]
    best = None
    for r in dataset.records:
        if not r.evaluation.valid:
            continue
        best = r.evaluation.fom if best is None else max(best, r.evaluation.fom)
        lines.append(f"{r.iteration},{r.evaluation.fom:.17g},{best:.17g}")
    return "\n".join(lines) + "\n"


REPORT_FILES = ("scatter.svg", "convergence.csv", "frontier.svg", "frontier.csv")


def write_report(run_dir) -> list[Path]:
    """Generate all report files inside the run directory."""
    run_dir = Path(run_dir)
    dataset = load_dataset(run_dir)
    if dataset.n_valid == 0:
        raise ValueError(f"run directory {run_dir} has no valid records")
    hull = frontier_report(dataset)
    outputs = {
        "scatter.svg": scatter_svg(dataset),
        "convergence.csv": convergence_csv(dataset),
        "frontier.svg": frontier_svg(dataset, hull),
        "frontier.csv": hull_csv(hull),
    }
    written = []
    for name, content in outputs.items():
        path = run_dir / name
        path.write_text(content)
        written.append(path)
    return written
