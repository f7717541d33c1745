"""Deterministic figure rendering for the TMR report and the size plan.

Rendering is a pure function of the input CSV: fixed styles, fixed SVG hash
salt, no timestamps, text kept as text in SVG output.  Every figure is
written as both SVG and PNG.
"""

from __future__ import annotations

import sys
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

from .schema import read_report, read_sizes  # noqa: E402

plt.rcParams.update(
    {
        "svg.hashsalt": "mdrefe-plots",
        "svg.fonttype": "none",
        "figure.dpi": 100,
        "savefig.dpi": 100,
    }
)

# canonical curve order; variants outside this list follow alphabetically
VARIANT_ORDER = (
    "iMDR-unknown-p",
    "iMDR-known-p",
    "sMDR-planned-N-known-p",
    "sMDR-sizeC-estimated-p",
    "sMDR-sizeC-known-p",
)


def _save(fig, out_dir: Path, stem: str) -> list[Path]:
    out_dir.mkdir(parents=True, exist_ok=True)
    files = []
    for suffix in (".svg", ".png"):
        path = out_dir / (stem + suffix)
        fig.savefig(path, metadata={"Date": None} if suffix == ".svg" else None)
        files.append(path)
    plt.close(fig)
    return files


def _variant_sort_key(variant: str):
    try:
        return (0, VARIANT_ORDER.index(variant))
    except ValueError:
        return (1, variant)


def plot_tmr(csv_path, out_dir, gamma: float | None = None) -> list[dict]:
    """One TMR-vs-budget figure per response-rate level, one curve per variant.

    Returns a summary per figure: the gamma level, the written files and the
    plotted series keyed by variant label.  An empty (header-only) report is
    a warning, not an error, and produces no files.
    """
    rows = read_report(csv_path)
    out_dir = Path(out_dir)
    if gamma is not None:
        rows = [r for r in rows if r.gamma == gamma]
    if not rows:
        print(f"warning: no rows to plot in {csv_path}", file=sys.stderr)
        return []
    figures = []
    for level in sorted({r.gamma for r in rows}):
        level_rows = [r for r in rows if r.gamma == level]
        variants = sorted({r.variant for r in level_rows}, key=_variant_sort_key)
        fig, ax = plt.subplots(figsize=(6.4, 4.2))
        series = {}
        for variant in variants:
            points = sorted(
                (r.c_budget, r.tmr) for r in level_rows if r.variant == variant
            )
            series[variant] = points
            ax.plot(
                [c for c, _ in points],
                [t for _, t in points],
                marker="o",
                label=variant,
            )
        ax.set_xlabel("budget C")
        ax.set_ylabel("TMR")
        ax.set_ylim(-0.02, 1.02)
        ax.set_title(f"true model rate, gamma = {level:g}")
        ax.grid(True, alpha=0.3)
        ax.legend(fontsize=8)
        files = _save(fig, out_dir, f"tmr_gamma_{level:g}")
        figures.append({"gamma": level, "files": files, "series": series})
    return figures


def plot_sizes(table_path, out_dir) -> dict:
    """Sample-size-vs-budget panels, one per response-rate level.

    The free-label series (w = 0, size equals the budget) is drawn red, any
    priced-label series blue, matching the planner's semantics that the
    stratified size can only fall below the i.i.d. size when labels cost
    something.
    """
    rows = read_sizes(table_path)
    out_dir = Path(out_dir)
    if not rows:
        print(f"warning: no rows to plot in {table_path}", file=sys.stderr)
        return {}
    gammas = sorted({r.gamma for r in rows})
    fig, axes = plt.subplots(
        1, len(gammas), figsize=(4.0 * len(gammas), 3.6), squeeze=False, sharey=True
    )
    series = {}
    for ax, level in zip(axes[0], gammas):
        level_rows = [r for r in rows if r.gamma == level]
        for w in sorted({r.w for r in level_rows}):
            points = sorted((r.c_budget, r.s_str) for r in level_rows if r.w == w)
            series[(level, w)] = points
            ax.plot(
                [c for c, _ in points],
                [s for _, s in points],
                marker="o",
                color="red" if w == 0.0 else "blue",
                label=f"w={w:g}" + (" (size C)" if w == 0.0 else ""),
            )
        ax.set_xlabel("budget C")
        ax.set_title(f"gamma = {level:g}")
        ax.grid(True, alpha=0.3)
        ax.legend(fontsize=8)
    axes[0][0].set_ylabel("sample size")
    files = _save(fig, out_dir, "sample_sizes")
    return {"files": files, "series": series, "gammas": gammas}
