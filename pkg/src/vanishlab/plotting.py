"""Figures written next to scenario reports (Agg backend, PNG)."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

STYLE = {
    "figure.figsize": (5.0, 3.6),
    "figure.dpi": 110,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "font.size": 9,
    "legend.frameon": False,
}
METADATA = {"Software": None}


def _save(fig, path):
    fig.tight_layout()
    fig.savefig(path, metadata=METADATA)
    plt.close(fig)


def sawyer_figure(report, diag, path):
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        N = [n for n, _ in report.ratio_by_N]
        ax.semilogy(N, [v for _, v in report.ratio_by_N], "o-", label="all samples")
        ax.semilogy(N, diag.inner_by_N, "s--", ms=3, label="|x| < |y|")
        ax.semilogy(N, diag.outer_by_N, "^--", ms=3, label="|x| >= |y|")
        ax.set_xlabel("N")
        ax.set_ylabel("max ratio")
        ax.set_title(f"{report.estimate_id}: {report.samples} samples, seed {report.seed}")
        ax.legend()
        _save(fig, path)


def series_figure(x, y, xlabel, ylabel, path, hline=None):
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        ax.plot(list(x), list(y), "o-")
        if hline is not None:
            ax.axhline(hline, color="k", lw=0.8, ls=":")
        ax.set_xlabel(xlabel)
        ax.set_ylabel(ylabel)
        _save(fig, path)


def loglog_figure(x, y, xlabel, ylabel, path, ref_slope=None):
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        ax.loglog(x, np.abs(y), lw=1.2, label=ylabel)
        if ref_slope is not None:
            x = np.asarray(x)
            ref = np.abs(y[0]) * (x / x[0]) ** ref_slope
            ax.loglog(x, ref, "k:", lw=0.8, label=f"slope {ref_slope:.4g}")
        ax.set_xlabel(xlabel)
        ax.legend()
        _save(fig, path)


def vanishing_figure(profile, report, path):
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        m = profile.mass > 0
        x = np.log2(profile.r_hi[m])
        ax.plot(x, np.log2(profile.mass[m]), "o", ms=3, label="shell mass")
        ax.plot(np.log2(profile.r_hi), np.log2(np.maximum(profile.ball, 1e-300)), "-",
                lw=1, label="ball mass")
        lo, hi = report.fit_window
        ax.axvspan(-hi, -lo, color="0.9", zorder=0)
        ax.set_xlabel("log2 r")
        ax.set_ylabel("log2 mass")
        ax.set_title(f"p={report.p:g}: ord={report.ord_hat:.4f}, Ord={report.Ord_hat:.4f}")
        ax.legend()
        _save(fig, path)


def green_figure(fit, path):
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        ax.loglog(fit.abs_x, fit.G, ".", ms=3, label="G(x, y)")
        ax.loglog(fit.abs_x, fit.comparator_low, "-", lw=0.8, label="lower envelope")
        ax.loglog(fit.abs_x, fit.comparator_high, "-", lw=0.8, label="upper envelope")
        ax.set_xlabel("|x|")
        ax.set_title(f"condition number {fit.condition_number:.3g}")
        ax.legend()
        _save(fig, path)


def prop_figure(reports, path):
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        p = [r["p"] for r in reports]
        ax.plot(p, [r["norm_lower_bound"] for r in reports], "o-", label="probed norm")
        ax.plot(p, [r["bound_rhs"] for r in reports], "s--", label="kappa_p nu")
        ax.set_xlabel("p")
        ax.legend()
        _save(fig, path)
