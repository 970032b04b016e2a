"""Figures for power-scaling sequences.

Both plots are drawn from the tidy rows the ``sequence`` command writes, so a
figure can always be regenerated from the CSV files alone.
"""

from __future__ import annotations

from collections import defaultdict
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
from matplotlib import cm  # noqa: E402
from matplotlib.colors import LogNorm  # noqa: E402

STYLE = {
    "font.size": 9,
    "axes.titlesize": 9,
    "axes.labelsize": 9,
    "legend.fontsize": 7,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "svg.hashsalt": "powerscale",
}
CMAP = "coolwarm"
COMPONENT_ORDER = ("prior", "likelihood")


def _grid(n_rows, n_cols, width=3.0, height=2.2):
    fig, axes = plt.subplots(
        n_rows, n_cols, figsize=(width * n_cols, height * n_rows), squeeze=False, layout="constrained"
    )
    return fig, axes


def _save(fig, path):
    path = Path(path)
    # fixed metadata keeps reruns byte-identical
    fig.savefig(path, dpi=120, bbox_inches="tight", metadata={"Software": None})
    plt.close(fig)
    return path


def _alpha_colors(alphas):
    norm = LogNorm(min(alphas), max(alphas))
    cmap = matplotlib.colormaps[CMAP]
    return lambda a: cmap(norm(a)), norm


def plot_ecdf_sequence(ecdf_rows, path, base=None):
    """One panel per (component, parameter): the weighted ECDF for each alpha.

    ``ecdf_rows`` are (parameter, component, alpha, point, cum_weight) tuples;
    ``base`` optionally maps parameter -> (points, cum_weights) for the
    unperturbed posterior, drawn in black.
    """
    curves = defaultdict(lambda: ([], []))
    params, alphas = [], set()
    for parameter, component, alpha, point, cum in ecdf_rows:
        xs, ys = curves[(parameter, component, alpha)]
        xs.append(point)
        ys.append(cum)
        if parameter not in params:
            params.append(parameter)
        alphas.add(alpha)
    components = [c for c in COMPONENT_ORDER if any(k[1] == c for k in curves)]
    color, norm = _alpha_colors(sorted(alphas))
    with plt.rc_context(STYLE):
        fig, axes = _grid(len(components), len(params))
        for i, comp in enumerate(components):
            for j, par in enumerate(params):
                ax = axes[i][j]
                for (p, c, a), (xs, ys) in sorted(curves.items()):
                    if p == par and c == comp:
                        ax.step(xs, ys, where="post", color=color(a), lw=0.9)
                if base and par in base:
                    ax.step(*base[par], where="post", color="k", lw=1.1, ls="--")
                ax.set_title(f"{par}: {comp} power-scaling")
                ax.set_ylim(0, 1)
                if j == 0:
                    ax.set_ylabel("ECDF")
        sm = cm.ScalarMappable(norm=norm, cmap=CMAP)
        bar = fig.colorbar(sm, ax=axes, label="alpha", shrink=0.8)
        ticks = sorted(alphas)
        bar.set_ticks(ticks, labels=[f"{a:.3g}" for a in ticks])
        bar.minorticks_off()
        return _save(fig, path)


def plot_quantity_sequence(quantity_rows, path, base=None):
    """Estimates against alpha (log2 axis) with +-2 MCSE bands, prior and likelihood overlaid.

    ``base`` optionally maps (parameter, quantity) -> (estimate, mcse) at
    alpha = 1, drawn as the +-2 MCSE reference band.
    """
    series = defaultdict(list)
    panels = []
    for parameter, component, alpha, quantity, estimate, mcse in quantity_rows:
        series[(parameter, quantity, component)].append((alpha, estimate, mcse))
        if (parameter, quantity) not in panels:
            panels.append((parameter, quantity))
    params = list(dict.fromkeys(p for p, _ in panels))
    quantities = list(dict.fromkeys(q for _, q in panels))
    styles = {"prior": ("tab:blue", "o"), "likelihood": ("tab:orange", "s")}
    with plt.rc_context(STYLE):
        fig, axes = _grid(len(params), len(quantities))
        for i, par in enumerate(params):
            for j, qty in enumerate(quantities):
                ax = axes[i][j]
                for comp in COMPONENT_ORDER:
                    pts = sorted(series.get((par, qty, comp), []))
                    if not pts:
                        continue
                    a, est, se = zip(*pts)
                    col, mk = styles[comp]
                    ax.plot(a, est, color=col, marker=mk, ms=3, lw=1, label=comp)
                    ax.fill_between(a, [e - 2 * s for e, s in zip(est, se)],
                                    [e + 2 * s for e, s in zip(est, se)], color=col, alpha=0.15, lw=0)
                if base and (par, qty) in base:
                    est, se = base[(par, qty)]
                    ax.axhline(est, color="k", lw=0.8)
                    for sgn in (-2, 2):
                        ax.axhline(est + sgn * se, color="k", lw=0.6, ls="--")
                ax.set_xscale("log", base=2)
                ax.set_title(f"{par}: {qty}")
                if i == len(params) - 1:
                    ax.set_xlabel("alpha")
        axes[0][0].legend(frameon=False)
        return _save(fig, path)
