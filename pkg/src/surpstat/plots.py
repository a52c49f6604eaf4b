"""Static condition-mean figures: grouped bars with standard-error bars."""

from __future__ import annotations

from typing import Dict, List, Optional, Sequence, Tuple

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

CANONICAL_CONDITIONS = ("Predictable", "Related", "Unrelated")


def _condition_order(summaries) -> List[str]:
    present = []
    for _, stats in summaries:
        for cond in stats:
            if cond not in present:
                present.append(cond)
    ordered = [c for c in CANONICAL_CONDITIONS if c in present]
    ordered.extend(sorted(c for c in present if c not in CANONICAL_CONDITIONS))
    return ordered


def condition_bar_plot(
    summaries: Sequence[Tuple[str, Dict]],
    path: str,
    title: str = "",
    conditions: Optional[Sequence[str]] = None,
) -> None:
    """Write a grouped-bar SVG of per-condition mean surprisal.

    summaries is a sequence of (model_id, {condition: SummaryStat}), one
    group of bars per model.  The SVG is deterministic: fixed hash salt,
    no embedded date.
    """
    conds = list(conditions) if conditions is not None else _condition_order(summaries)
    models = [model_id for model_id, _ in summaries]

    plt.rcParams["svg.hashsalt"] = "surpstat"
    fig, ax = plt.subplots(figsize=(max(4.0, 1.2 * len(models) + 1.5), 3.6))
    x = np.arange(len(models), dtype=float)
    width = 0.8 / max(1, len(conds))

    for j, cond in enumerate(conds):
        heights, errors = [], []
        for _, stats in summaries:
            stat = stats.get(cond)
            heights.append(stat.mean if stat is not None else np.nan)
            errors.append(
                stat.se if stat is not None and stat.se is not None else 0.0
            )
        offset = (j - (len(conds) - 1) / 2.0) * width
        ax.bar(
            x + offset,
            heights,
            width,
            yerr=errors,
            capsize=3,
            label=cond,
            error_kw={"linewidth": 1.0},
        )

    ax.set_xticks(x)
    ax.set_xticklabels(models, rotation=30, ha="right")
    ax.set_ylabel("Surprisal (bits)")
    if title:
        ax.set_title(title)
    if conds:
        ax.legend(frameon=False, fontsize="small")
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
