"""
SVG plots of a sweep: one figure for the codeword overlap, one for the concurrence.
"""
import logging
from pathlib import Path
from typing import Dict, Optional, Union

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import pandas as pd  # noqa: E402

from bench.sweeps import SweepResult  # noqa: E402
from overlap.errors import EmptyResultError  # noqa: E402

logger = logging.getLogger(__name__)

# Fixed salt and no date keep the SVG output byte-stable between runs
matplotlib.rcParams["svg.hashsalt"] = "codeword-overlap"

_XLABELS = {"fig1_gamma": "damping γ", "fig2_alpha": "amplitude |α|"}
_PANELS = (("f_cw", "codeword overlap $F^{CW}$", "overlap"), ("concurrence", "concurrence", "concurrence"))


def _figure(frame: pd.DataFrame, column: str, xlabel: str, ylabel: str):
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    for code, group in frame.groupby("code", sort=True):
        ax.plot(group["parameter"], group[column], marker=".", label=str(code))
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.set_ylim(-0.02, 1.02)
    ax.grid(alpha=0.3)
    ax.legend(loc="best", fontsize="small")
    fig.tight_layout()
    return fig


def emit_plot(
    result: Union[SweepResult, pd.DataFrame],
    path: Path,
    xlabel: Optional[str] = None,
) -> Dict[str, Path]:
    """
    Write {stem}_overlap.svg and {stem}_concurrence.svg next to path.

    Rows with missing values are skipped.

    Raises:
        EmptyResultError: If no plottable rows remain
    """
    if isinstance(result, SweepResult):
        frame = result.rows
        xlabel = xlabel or _XLABELS.get(str(result.metadata.get("experiment")), "parameter")
    else:
        frame = result
    xlabel = xlabel or "parameter"

    frame = frame.dropna(subset=["parameter", "f_cw", "concurrence"])
    if frame.empty:
        raise EmptyResultError("Nothing to plot: the sweep has no complete rows")
    frame = frame.sort_values(["code", "parameter"], kind="mergesort")

    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    written = {}
    for column, ylabel, suffix in _PANELS:
        out = path.with_name(f"{path.stem}_{suffix}.svg")
        fig = _figure(frame, column, xlabel, ylabel)
        try:
            fig.savefig(out, format="svg", metadata={"Date": None})
        finally:
            plt.close(fig)
        written[suffix] = out
        logger.info(f"✅ Plot written to {out}")
    return written
