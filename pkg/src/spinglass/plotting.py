"""SVG figures from result CSVs. Output bytes depend only on the input CSV."""
from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .errors import OutputError, SchemaError  # noqa: E402
from .io import detect_schema, read_csv  # noqa: E402

STYLE = {
    "svg.hashsalt": "spinglass",
    "svg.fonttype": "path",
    "font.size": 9,
    "axes.labelsize": 9,
    "legend.fontsize": 8,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "lines.markersize": 4,
}

# tag -> (x, y, yerr, log x, log y, x label, y label)
PLOT_SPECS = {
    "theorem1": ("alpha", "residual_mean", "residual_se", True, False, r"$\alpha$", "residual"),
    "overlap_tail": ("r", "tail_mean", "tail_se", False, True, "r", r"$E\,G(S^2>r)$"),
    "exp_moment": ("N", "mean", "se", False, False, "N", r"$E\langle e^{cS^2}\rangle$"),
    "interpolation": ("t", "f_t_mean", "f_t_se", False, False, "t", r"$E F_t$"),
    "concentration": ("N", "moment", "moment_se", True, True, "N", r"$E|F-EF|^d$"),
    "hopfield_stein": ("alpha", "remainder_scaled", "remainder_scaled_se", True, False, r"$\alpha$",
                       r"remainder $\cdot M/\beta^2$"),
    "mc_nodes": ("effective_beta", "energy_mean", "energy_se", False, False, r"$\beta$",
                 r"$\langle H\rangle$"),
}

FIGURE1_COLUMNS = ("beta", "field", "alpha", "f_hop", "curve")


def _col(rows, name):
    return np.array([float(r[name]) for r in rows])


def _save(fig, path) -> Path:
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        # the hash salt must be active at save time for stable element ids
        with plt.rc_context(STYLE):
            fig.savefig(path, format="svg", metadata={"Date": None})
    except OSError as exc:
        raise OutputError(f"cannot write {path}: {exc}") from exc
    finally:
        plt.close(fig)
    return path


def plot_figure1(rows, path) -> Path:
    """Free-energy points against alpha with the curve beta sqrt(alpha) + P_hat.

    One panel per (beta, B) pair, larger beta on top.
    """
    missing = [c for c in FIGURE1_COLUMNS if rows and c not in rows[0]]
    if missing:
        raise SchemaError(f"figure1 data lacks columns {missing}")
    pairs = sorted({(float(r["beta"]), float(r["field"])) for r in rows}, reverse=True)
    with plt.rc_context(STYLE):
        fig, axes = plt.subplots(max(len(pairs), 1), 1, figsize=(4.5, 2.6 * max(len(pairs), 1)),
                                 squeeze=False)
        for ax, (beta, B) in zip(axes[:, 0], pairs):
            sel = sorted((r for r in rows if float(r["beta"]) == beta and float(r["field"]) == B),
                         key=lambda r: float(r["alpha"]))
            a = _col(sel, "alpha")
            yerr = _col(sel, "f_hop_se") if "f_hop_se" in sel[0] else None
            ax.errorbar(a, _col(sel, "f_hop"), yerr=yerr, fmt="o", color="k", ms=3,
                        elinewidth=0.8, label="Hopfield")
            ax.plot(a, _col(sel, "curve"), "-", color="C0", lw=1.2,
                    label=r"$\beta\sqrt{\alpha}+\hat P$")
            ax.set_title(rf"$\beta={beta:g}$, $B={B:g}$")
            ax.set_xlabel(r"$\alpha$")
            ax.set_ylabel("free energy")
            ax.legend(loc="lower right", frameon=False)
        fig.tight_layout()
    return _save(fig, path)


def plot_series(rows, tag: str, path) -> Path:
    x, y, yerr, logx, logy, xl, yl = PLOT_SPECS[tag]
    missing = [c for c in (x, y) if rows and c not in rows[0]]
    if missing:
        raise SchemaError(f"{tag} data lacks columns {missing}")
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(4.5, 3.0))
        if rows:
            rows = sorted(rows, key=lambda r: float(r[x]))
            xv, yv = _col(rows, x), _col(rows, y)
            err = _col(rows, yerr) if yerr in rows[0] else None
            if err is not None:
                err = np.where(np.isfinite(err), err, 0.0)
            ax.errorbar(xv, yv, yerr=err, fmt="o-", color="k", ms=3, lw=0.8, elinewidth=0.8)
        if logx:
            ax.set_xscale("log")
        if logy and rows and np.all(_col(rows, y) > 0):
            ax.set_yscale("log")
        ax.set_xlabel(xl)
        ax.set_ylabel(yl)
        fig.tight_layout()
    return _save(fig, path)


def emit_svg_plot(csv_path, out=None, tag: str | None = None) -> Path:
    """Render ``csv_path`` to SVG (default: same name, ``.svg`` suffix)."""
    csv_path = Path(csv_path)
    tag = tag or detect_schema(csv_path)
    out = Path(out) if out is not None else csv_path.with_suffix(".svg")
    if tag == "figure1":
        return plot_figure1(read_csv(csv_path, required=FIGURE1_COLUMNS), out)
    if tag in PLOT_SPECS:
        x, y = PLOT_SPECS[tag][:2]
        return plot_series(read_csv(csv_path, required=(x, y)), tag, out)
    raise SchemaError(f"{csv_path} does not match a plottable schema")
