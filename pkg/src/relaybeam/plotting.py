"""Static figures for sweep CSVs."""
from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .experiment import read_sweep  # noqa: E402

_AF_STYLE = {
    "af_optimal_total": ("optimal, total power", "-", "o"),
    "af_optimal_individual": ("optimal, individual power", "-", "s"),
    "af_achievable_total": ("achievable, total power", "--", "^"),
    "af_achievable_individual": ("achievable, individual power", "--", "v"),
}

_RC = {
    "font.size": 9,
    "axes.labelsize": 9,
    "legend.fontsize": 8,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "lines.linewidth": 1.2,
    "lines.markersize": 4,
    "svg.hashsalt": "relaybeam",
}


def plot_sweep(csv_text: str, path, mode: str) -> Path:
    """Render a sweep CSV to ``path`` (format from the suffix, PNG by default)."""
    header, x, cols = read_sweep(csv_text)
    path = Path(path)
    with plt.rc_context(_RC):
        fig, ax = plt.subplots(figsize=(4.5, 3.2))
        if mode == "af_sweep":
            for name, (label, ls, marker) in _AF_STYLE.items():
                ax.plot(x, cols[name], ls=ls, marker=marker, label=label)
            ax.set_xscale("log")
            ax.set_xlabel("PT / Ps")
        else:
            for name in header[1:]:
                if not name.startswith("df_statistical_eps"):
                    continue
                eps = name[len("df_statistical_eps"):]
                ax.plot(x, cols[name], marker="o", label=f"eps = {eps}")
            ax.set_xlabel("PT")
        ax.set_ylabel("secrecy rate (bits/symbol)")
        rates = [v for k, v in cols.items() if k.startswith(("af_", "df_")) and np.any(np.isfinite(v))]
        ymax = max([float(np.nanmax(v)) for v in rates] + [0.0])
        ax.set_ylim(bottom=0.0, top=max(ymax * 1.05, 1e-3))
        ax.grid(True, lw=0.4, alpha=0.5)
        ax.legend(frameon=False)
        fig.tight_layout()
        fig.savefig(path, dpi=150, metadata={"Software": None})
        plt.close(fig)
    return path
