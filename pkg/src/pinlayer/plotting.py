"""Figures written next to the CSV/JSON outputs (non-interactive Agg backend)."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

STYLE = {
    "font.size": 9,
    "axes.labelsize": 9,
    "legend.fontsize": 8,
    "lines.linewidth": 1.2,
    "figure.figsize": (5.0, 3.4),
    "figure.dpi": 120,
    "savefig.bbox": "tight",
}
# fixed metadata keeps PNG output byte-stable between runs
_META = {"Software": None}


def _save(fig, path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, metadata=_META)
    plt.close(fig)
    return path


def plot_branch(rows, v_star, path):
    rows = np.asarray(rows)
    with plt.rc_context(STYLE):
        fig, (a1, a2) = plt.subplots(1, 2, figsize=(7.0, 3.0))
        for j, lab in zip((1, 2, 3), ("h-", "h0", "h+")):
            a1.plot(rows[:, 0], rows[:, j], label=lab)
        a1.axvline(v_star, color="k", lw=0.6, ls=":")
        a1.set_xlabel("v")
        a1.set_ylabel("roots of f(., v)")
        a1.legend()
        a2.plot(rows[:, 0], rows[:, 4])
        a2.axhline(0.0, color="k", lw=0.6)
        a2.axvline(v_star, color="k", lw=0.6, ls=":")
        a2.set_xlabel("v")
        a2.set_ylabel("J(v)")
        return _save(fig, path)


def plot_layer(x, u, v, profile_z, profile_W, path):
    with plt.rc_context(STYLE):
        fig, (a1, a2) = plt.subplots(1, 2, figsize=(7.0, 3.0))
        a1.plot(profile_z, profile_W)
        a1.set_xlabel("z")
        a1.set_ylabel("W(z)")
        a2.plot(x, u, label="u")
        a2.plot(x, v, label="v")
        a2.set_xlabel("x")
        a2.legend()
        return _save(fig, path)


def plot_steady(x, u, u_composite, path):
    with plt.rc_context(STYLE):
        fig, (a1, a2) = plt.subplots(1, 2, figsize=(7.0, 3.0))
        a1.plot(x, u, label="refined")
        a1.plot(x, u_composite, ls="--", label="composite")
        a1.set_xlabel("x")
        a1.set_ylabel("u")
        a1.legend()
        a2.semilogy(x, np.abs(u - u_composite) + 1e-300)
        a2.set_xlabel("x")
        a2.set_ylabel("|refined - composite|")
        return _save(fig, path)


def plot_spectrum(eigenvalues, constrained, lam_asym, lam_evans, path, contour=None):
    eig = np.asarray(eigenvalues)
    mask = np.asarray(constrained, dtype=bool)
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        if contour is not None and len(contour):
            c = np.asarray(contour)
            sc = ax.scatter(c[:, 0], c[:, 1], c=np.log10(c[:, 2] + 1e-300), s=12, cmap="viridis")
            fig.colorbar(sc, ax=ax, label="log10 |g|")
        ax.plot(eig.real[mask], eig.imag[mask], "o", mfc="none", label="direct")
        if (~mask).any():
            ax.plot(eig.real[~mask], eig.imag[~mask], "x", label="direct (mass-carrying)")
        ax.plot([lam_asym], [0.0], "s", mfc="none", label="eps kappa*")
        if lam_evans is not None:
            ax.plot([complex(lam_evans).real], [complex(lam_evans).imag], "+", ms=10,
                    label="Evans zero")
        ax.axvline(0.0, color="k", lw=0.6)
        ax.set_xlabel("Re lambda")
        ax.set_ylabel("Im lambda")
        ax.legend()
        return _save(fig, path)


def plot_simulation(t, deviation, fit, path):
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        ax.semilogy(t, deviation, label="||(u, v) - steady||")
        if fit is not None:
            tt = np.linspace(fit.t_start, fit.t_stop, 50)
            ax.semilogy(tt, np.exp(fit.intercept + fit.rate * tt), "--",
                        label=f"fit rate {fit.rate:.4g}")
        ax.set_xlabel("t")
        ax.legend()
        return _save(fig, path)
