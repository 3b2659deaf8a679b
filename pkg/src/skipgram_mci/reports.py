"""Table and curve outputs: deterministic CSV text plus self-contained SVG charts."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from html import escape
from pathlib import Path
from typing import Sequence

from .evaluation import MetricsReport, RocCurve

TABLE_COLUMNS = (
    "model", "features", "k_top", "leakage", "precision", "recall", "f1", "auc",
    "auc_fold_mean", "accuracy", "status",
)


def fmt(value: float | None, digits: int = 6) -> str:
    """Fixed-point text so reruns compare byte for byte; empty for missing values."""
    if value is None:
        return ""
    text = f"{value:.{digits}f}"
    return "0." + "0" * digits if text == "-0." + "0" * digits else text


@dataclass
class TableRow:
    model: str
    features: str
    k_top: int | None
    leakage: str
    report: MetricsReport | None = None
    error: str | None = None

    def cells(self) -> list[str]:
        r = self.report
        if r is None:
            metrics = [""] * 6
        else:
            metrics = [fmt(r.weighted_precision), fmt(r.weighted_recall), fmt(r.weighted_f1),
                       fmt(r.auc), fmt(r.auc_fold_mean), fmt(r.accuracy)]
        status = "ok" if self.error is None else f"failed: {self.error}"
        k = "" if self.k_top is None else str(self.k_top)
        return [self.model, self.features, k, self.leakage, *metrics, status]


def table_csv(rows: Sequence[TableRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(TABLE_COLUMNS)
    for row in rows:
        w.writerow(row.cells())
    return buf.getvalue()


def table_text(rows: Sequence[TableRow]) -> str:
    """Console rendering with Pr/Rc/F1/AUC columns."""
    head = f"{'model':<14}{'features':<28}{'Pr':>8}{'Rc':>8}{'F1':>8}{'AUC':>8}"
    lines = [head, "-" * len(head)]
    for row in rows:
        if row.report is None:
            lines.append(f"{row.model:<14}{row.features:<28}  {row.error}")
            continue
        r = row.report
        lines.append(f"{row.model:<14}{row.features:<28}{r.weighted_precision:8.3f}"
                     f"{r.weighted_recall:8.3f}{r.weighted_f1:8.3f}{r.auc:8.3f}")
    return "\n".join(lines)


def roc_csv(curves: dict[str, RocCurve]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["model", "fpr", "tpr"])
    for name, curve in curves.items():
        for x, y in curve.points:
            w.writerow([name, fmt(x), fmt(y)])
    return buf.getvalue()


@dataclass
class CurveSeries:
    """Cross-validated accuracy against the number of top-ranked features."""

    model: str
    feature_set: str
    points: list[tuple[int, float]] = field(default_factory=list)
    note: str = ""

    def __post_init__(self):
        ks = [k for k, _ in self.points]
        if ks != sorted(set(ks)):
            raise ValueError("curve K values must be strictly ascending")
        if any(not 0.0 <= a <= 1.0 for _, a in self.points):
            raise ValueError("accuracy must lie in [0, 1]")


def effective_k_list(k_list: Sequence[int], vocab_size: int) -> tuple[list[int], str]:
    """Clip requested K values at the vocabulary size.

    Returns the distinct K values to evaluate and a note (empty when nothing
    was clipped).
    """
    ks = sorted({min(k, vocab_size) for k in k_list if vocab_size > 0})
    note = ""
    if any(k > vocab_size for k in k_list):
        note = f"truncated at vocabulary size {vocab_size}"
    return ks, note


def curves_csv(series: Sequence[CurveSeries]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["feature_set", "model", "k", "accuracy", "note"])
    for s in series:
        for k, acc in s.points:
            w.writerow([s.feature_set, s.model, k, fmt(acc), s.note])
    return buf.getvalue()


_PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")


def _nice_ticks(lo: float, hi: float, n: int = 5) -> list[float]:
    if hi <= lo:
        return [lo]
    step = (hi - lo) / (n - 1)
    return [lo + i * step for i in range(n)]


def curves_svg(series: Sequence[CurveSeries], title: str, width: int = 640, height: int = 400) -> str:
    """Line chart of accuracy against K, one polyline per model.

    The x axis is logarithmic when K spans more than a factor of 20.
    """
    left, right, top, bottom = 64, 150, 40, 52
    pw, ph = width - left - right, height - top - bottom
    ks = sorted({k for s in series for k, _ in s.points}) or [1]
    log_x = ks[-1] / max(ks[0], 1) > 20
    tx = (lambda k: math.log10(k)) if log_x else float
    x_lo, x_hi = tx(ks[0]), tx(ks[-1])
    if x_hi == x_lo:
        x_lo, x_hi = x_lo - 1, x_hi + 1

    def px(k):
        return left + (tx(k) - x_lo) / (x_hi - x_lo) * pw

    def py(acc):
        return top + (1.0 - acc) * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="12">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<text x="{left + pw / 2:.1f}" y="22" text-anchor="middle" font-size="15">{escape(title)}</text>',
        f'<line x1="{left}" y1="{top + ph}" x2="{left + pw}" y2="{top + ph}" stroke="black"/>',
        f'<line x1="{left}" y1="{top}" x2="{left}" y2="{top + ph}" stroke="black"/>',
    ]
    for acc in _nice_ticks(0.0, 1.0, 6):
        y = py(acc)
        out.append(f'<line x1="{left - 4}" y1="{y:.1f}" x2="{left + pw}" y2="{y:.1f}" stroke="#ddd"/>')
        out.append(f'<text x="{left - 8}" y="{y + 4:.1f}" text-anchor="end">{acc:.1f}</text>')
    for k in ks:
        x = px(k)
        out.append(f'<line x1="{x:.1f}" y1="{top + ph}" x2="{x:.1f}" y2="{top + ph + 4}" stroke="black"/>')
        out.append(f'<text x="{x:.1f}" y="{top + ph + 18}" text-anchor="middle">{k}</text>')
    out.append(f'<text x="{left + pw / 2:.1f}" y="{height - 10}" text-anchor="middle">'
               f'top-K features{" (log scale)" if log_x else ""}</text>')
    out.append(f'<text x="16" y="{top + ph / 2:.1f}" text-anchor="middle" '
               f'transform="rotate(-90 16 {top + ph / 2:.1f})">accuracy</text>')
    for i, s in enumerate(series):
        color = _PALETTE[i % len(_PALETTE)]
        pts = " ".join(f"{px(k):.1f},{py(a):.1f}" for k, a in s.points)
        out.append(f'<polyline fill="none" stroke="{color}" stroke-width="2" points="{pts}"/>')
        for k, a in s.points:
            out.append(f'<circle cx="{px(k):.1f}" cy="{py(a):.1f}" r="3" fill="{color}"/>')
        ly = top + 14 + 18 * i
        out.append(f'<line x1="{left + pw + 12}" y1="{ly - 4}" x2="{left + pw + 32}" y2="{ly - 4}" '
                   f'stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{left + pw + 38}" y="{ly}">{escape(s.model)}</text>')
    notes = sorted({s.note for s in series if s.note})
    for j, note in enumerate(notes):
        out.append(f'<text x="{left + pw + 12}" y="{top + ph - 14 * j}" font-size="10">{escape(note)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def write_text(path: str | Path, text: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)
    return path
