"""Report emission: per-instance tables, aggregate summaries, and boxplot
vector graphics written directly as SVG (no plotting dependency).

Summary documents and tables are key-sorted with round-trip float formatting
so replaying an experiment reproduces them byte for byte; only the SVG is
excluded from byte-identity (its underlying data table is not).
"""

from __future__ import annotations

import csv
import json
from pathlib import Path
from statistics import fmean, median
from typing import Sequence

from ceps.harness import EvaluationReport


def summary_dict(label: str, report: EvaluationReport, *, k: int | None = None,
                 max_ite: int | None = None, n_paps: int | None = None,
                 seed: int | None = None) -> dict:
    doc = {
        "method": label,
        "problem": report.problem_kind,
        "metric": report.metric_name,
        "score": report.aggregate,
        "tos": report.timeouts,
        "run_timeouts": report.run_timeouts,
        "test_size": len(report.instances),
        "cutoff": report.cutoff,
        "runs_per_instance": report.runs_per_instance,
        "members": list(report.member_fingerprints),
        "member_contributions": list(report.member_contributions),
    }
    for key, value in (("K", k), ("MaxIte", max_ite), ("n", n_paps), ("seed", seed)):
        if value is not None:
            doc[key] = value
    # the historical column names, for consumers keyed on the metric
    doc[report.metric_name] = report.aggregate
    return doc


def write_summary(doc: dict, path: str | Path) -> None:
    Path(path).write_text(json.dumps(doc, sort_keys=True, indent=2) + "\n")


def write_instance_table(report: EvaluationReport, path: str | Path) -> None:
    """One row per test instance: per-member medians, the portfolio median,
    and the winning member (argmin of member medians, lowest index on ties)."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        member_cols = [f"member{i}_median" for i in range(len(report.member_fingerprints))]
        writer.writerow(["fingerprint", "name", *member_cols, "median", "timed_out",
                         "winner"])
        for row in report.instances:
            winner = row.member_medians.index(min(row.member_medians))
            writer.writerow([
                row.fingerprint,
                row.name,
                *[repr(v) for v in row.member_medians],
                repr(row.median_score),
                int(row.timed_out),
                winner,
            ])


def read_instance_table_aggregate(path: str | Path) -> tuple[float, int]:
    """Recompute (aggregate, #TOs) from an emitted per-instance table."""
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    medians = [float(r["median"]) for r in rows]
    return fmean(medians), sum(int(r["timed_out"]) for r in rows)


# ---------------------------------------------------------------------------
# SVG boxplots
# ---------------------------------------------------------------------------

def _box_stats(values: Sequence[float]) -> dict:
    ordered = sorted(values)
    n = len(ordered)
    med = median(ordered)
    lower = ordered[: n // 2]
    upper = ordered[(n + 1) // 2:]
    q1 = median(lower) if lower else med
    q3 = median(upper) if upper else med
    iqr = q3 - q1
    lo_fence, hi_fence = q1 - 1.5 * iqr, q3 + 1.5 * iqr
    inside = [v for v in ordered if lo_fence <= v <= hi_fence] or ordered
    return {
        "n": n,
        "mean": fmean(ordered),
        "median": med,
        "q1": q1,
        "q3": q3,
        "whisker_low": min(inside),
        "whisker_high": max(inside),
        "outliers": [v for v in ordered if v < lo_fence or v > hi_fence],
    }


def boxplot_data(reports: Sequence[tuple[str, EvaluationReport]]) -> dict:
    return {
        label: _box_stats([row.median_score for row in report.instances])
        for label, report in reports
    }


def write_boxplot_svg(data: dict, path: str | Path, title: str = "") -> None:
    """One box per method with median line, whiskers, outlier dots and a
    triangular mean marker."""
    width_per_box = 110
    margin_x, margin_y = 70, 40
    plot_h = 260
    labels = list(data)
    width = margin_x * 2 + width_per_box * max(1, len(labels))
    height = plot_h + margin_y * 2 + 20

    lo = min(min(s["whisker_low"], *(s["outliers"] or [s["whisker_low"]]),
                 s["mean"]) for s in data.values())
    hi = max(max(s["whisker_high"], *(s["outliers"] or [s["whisker_high"]]),
                 s["mean"]) for s in data.values())
    if hi == lo:
        hi = lo + 1.0

    def y(value: float) -> float:
        return margin_y + plot_h * (1.0 - (value - lo) / (hi - lo))

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="12">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
    ]
    if title:
        parts.append(f'<text x="{width / 2:.1f}" y="20" text-anchor="middle">{title}</text>')
    # y-axis with a handful of tick labels
    parts.append(f'<line x1="{margin_x - 10}" y1="{margin_y}" x2="{margin_x - 10}" '
                 f'y2="{margin_y + plot_h}" stroke="black"/>')
    for i in range(5):
        value = lo + (hi - lo) * i / 4
        yy = y(value)
        parts.append(f'<line x1="{margin_x - 14}" y1="{yy:.1f}" x2="{margin_x - 10}" '
                     f'y2="{yy:.1f}" stroke="black"/>')
        parts.append(f'<text x="{margin_x - 18}" y="{yy + 4:.1f}" '
                     f'text-anchor="end">{value:.3g}</text>')

    for idx, label in enumerate(labels):
        s = data[label]
        cx = margin_x + width_per_box * idx + width_per_box / 2
        half = 28
        parts.append(f'<line x1="{cx:.1f}" y1="{y(s["whisker_low"]):.1f}" '
                     f'x2="{cx:.1f}" y2="{y(s["q1"]):.1f}" stroke="black"/>')
        parts.append(f'<line x1="{cx:.1f}" y1="{y(s["q3"]):.1f}" '
                     f'x2="{cx:.1f}" y2="{y(s["whisker_high"]):.1f}" stroke="black"/>')
        for wv in ("whisker_low", "whisker_high"):
            parts.append(f'<line x1="{cx - half / 2:.1f}" y1="{y(s[wv]):.1f}" '
                         f'x2="{cx + half / 2:.1f}" y2="{y(s[wv]):.1f}" stroke="black"/>')
        parts.append(f'<rect x="{cx - half:.1f}" y="{y(s["q3"]):.1f}" width="{2 * half}" '
                     f'height="{max(0.5, y(s["q1"]) - y(s["q3"])):.1f}" '
                     f'fill="#dce6f2" stroke="black" class="box"/>')
        parts.append(f'<line x1="{cx - half:.1f}" y1="{y(s["median"]):.1f}" '
                     f'x2="{cx + half:.1f}" y2="{y(s["median"]):.1f}" '
                     f'stroke="black" stroke-width="2"/>')
        for v in s["outliers"]:
            parts.append(f'<circle cx="{cx:.1f}" cy="{y(v):.1f}" r="2.5" fill="none" '
                         f'stroke="black"/>')
        my = y(s["mean"])
        parts.append(f'<path d="M {cx:.1f} {my - 5:.1f} L {cx - 5:.1f} {my + 4:.1f} '
                     f'L {cx + 5:.1f} {my + 4:.1f} Z" fill="black" class="mean-marker"/>')
        parts.append(f'<text x="{cx:.1f}" y="{margin_y + plot_h + 18}" '
                     f'text-anchor="middle">{label}</text>')
    parts.append("</svg>")
    Path(path).write_text("\n".join(parts) + "\n")


def emit_report(reports: Sequence[tuple[str, EvaluationReport]], out_dir: str | Path,
                context: dict | None = None) -> dict[str, Path]:
    """Write per-method instance tables and summaries, a combined summary,
    the boxplot data table, and one SVG with a box per method."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    context = context or {}
    written: dict[str, Path] = {}

    combined = {}
    for label, report in reports:
        table = out_dir / f"{label}_instances.csv"
        write_instance_table(report, table)
        written[f"{label}_table"] = table
        doc = summary_dict(label, report, **context)
        summary = out_dir / f"{label}_summary.json"
        write_summary(doc, summary)
        written[f"{label}_summary"] = summary
        combined[label] = doc
    combined_path = out_dir / "summary.json"
    write_summary(combined, combined_path)
    written["summary"] = combined_path

    data = boxplot_data(reports)
    data_path = out_dir / "boxplot_data.json"
    write_summary(data, data_path)
    written["boxplot_data"] = data_path
    svg_path = out_dir / "boxplot.svg"
    metric = reports[0][1].metric_name if reports else ""
    write_boxplot_svg(data, svg_path, title=metric)
    written["boxplot"] = svg_path
    return written
