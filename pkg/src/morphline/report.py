"""Aggregate result views: rejection/recognition curves and asymmetry summaries.

Curves are emitted as long-form CSV plus a gnuplot matrix (`splot ... matrix
nonuniform`): first row lists the column count and the alpha values in
tenths, following rows start with the generation index.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Sequence, Tuple

from .asymmetry import AsymmetryReport


@dataclass(frozen=True)
class CurveTable:
    """generation x alpha grid of fractions in [0, 1]."""

    generations: Tuple[int, ...]
    alpha_tenths: Tuple[int, ...]
    cells: Dict[Tuple[int, int], float]  # (generation, alpha_tenths) -> fraction

    def fraction(self, generation: int, alpha_tenths: int) -> float:
        return self.cells[(generation, alpha_tenths)]


def _run_rows(manifests: Sequence[dict]) -> List[dict]:
    rows = []
    for manifest in manifests:
        for row in manifest["generations"]:
            rows.append(row)
    return rows


def _build_table(manifests, numerator_key) -> CurveTable:
    rows = _run_rows(manifests)
    if not rows:
        raise ValueError("no generation statistics in the given manifests")
    generations = tuple(sorted({r["generation"] for r in rows}))
    alphas = tuple(sorted({r["alpha_tenths"] for r in rows}))
    cells = {}
    for row in rows:
        key = (row["generation"], row["alpha_tenths"])
        if key in cells:
            raise ValueError(f"duplicate (generation, alpha) cell {key}")
        attempted = row["attempted"]
        cells[key] = (row[numerator_key] / attempted) if attempted else 0.0
    missing = [
        (g, a) for g in generations for a in alphas if (g, a) not in cells
    ]
    if missing:
        raise ValueError(f"manifests do not cover a rectangular grid; missing cells: {missing}")
    return CurveTable(generations, alphas, cells)


def rejection_curves(manifests: Sequence[dict]) -> CurveTable:
    """Forgery-rejection fraction per (generation, alpha) cell."""
    return _build_table(manifests, "rejected_forgery")


def recognition_curves(manifests: Sequence[dict]) -> CurveTable:
    """Identified (not-unknown) fraction per (generation, alpha) cell."""
    return _build_table(manifests, "rejected_recognized")


def curve_csv(table: CurveTable) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["generation", "alpha_tenths", "fraction"])
    for g in table.generations:
        for a in table.alpha_tenths:
            writer.writerow([g, a, f"{table.fraction(g, a):.6f}"])
    return buf.getvalue()


def curve_gnuplot_matrix(table: CurveTable) -> str:
    lines = [
        " ".join(
            [str(len(table.alpha_tenths))] + [str(a) for a in table.alpha_tenths]
        )
    ]
    for g in table.generations:
        cells = [f"{table.fraction(g, a):.6f}" for a in table.alpha_tenths]
        lines.append(" ".join([str(g)] + cells))
    return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class AsymmetrySummary:
    """Per-region cohort means and their deltas (after minus before)."""

    before: Dict[str, float]
    after: Dict[str, float]
    delta: Dict[str, float]


def asymmetry_summary(
    before: Sequence[AsymmetryReport], after: Sequence[AsymmetryReport]
) -> AsymmetrySummary:
    if not before or not after:
        raise ValueError("both cohorts must be non-empty")

    def means(reports):
        n = len(reports)
        return {
            "eyes": sum(r.eyes for r in reports) / n,
            "cheeks": sum(r.cheeks for r in reports) / n,
            "mouth": sum(r.mouth for r in reports) / n,
        }

    b = means(before)
    a = means(after)
    d = {k: a[k] - b[k] for k in b}
    return AsymmetrySummary(b, a, d)


def asymmetry_summary_csv(summary: AsymmetrySummary) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["region", "before", "after", "delta"])
    for key, label in (("eyes", "EYES"), ("cheeks", "CHEEKS"), ("mouth", "MOUTH")):
        writer.writerow(
            [
                label,
                f"{summary.before[key]:.1f}",
                f"{summary.after[key]:.1f}",
                f"{summary.delta[key]:.1f}",
            ]
        )
    return buf.getvalue()


def write_curves(out_dir, rejection: CurveTable, recognition: CurveTable) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "rejection.csv").write_text(curve_csv(rejection))
    (out / "rejection.matrix").write_text(curve_gnuplot_matrix(rejection))
    (out / "recognition.csv").write_text(curve_csv(recognition))
    (out / "recognition.matrix").write_text(curve_gnuplot_matrix(recognition))
