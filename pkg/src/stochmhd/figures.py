"""Matplotlib renderings saved next to the delimited outputs.

Figures are byte-deterministic: the Agg backend with the software tag
stripped from the PNG metadata.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

__all__ = [
    "render_identity_residuals",
    "render_renorm_growth",
    "render_chaos_zscores",
    "render_energy_series",
    "render_galerkin_decay",
    "render_noise_variance",
]

_SAVE_KW = {"dpi": 110, "metadata": {"Software": None}}


def _save(fig, path: Path) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, **_SAVE_KW)
    plt.close(fig)
    return path


def render_identity_residuals(path: Path, worst: dict[str, float], tol: float) -> Path:
    names = sorted(worst)
    vals = [max(worst[n], 1e-20) for n in names]
    fig, ax = plt.subplots(figsize=(8, 0.3 * len(names) + 1.4))
    ax.barh(range(len(names)), vals, color="#33557a")
    ax.axvline(tol, color="crimson", ls="--", lw=1, label=f"tolerance {tol:g}")
    ax.set_yticks(range(len(names)), names, fontsize=7)
    ax.set_xscale("log")
    ax.set_xlabel("worst relative residual")
    ax.legend(fontsize=8)
    fig.tight_layout()
    return _save(fig, path)


def render_renorm_growth(path: Path, lams: list[float], values: list[float]) -> Path:
    x = np.log(lams)
    fig, ax = plt.subplots(figsize=(5.5, 4))
    ax.plot(x, values, "o", color="#33557a", label="lattice sum")
    if len(lams) >= 2:
        coef = np.polyfit(x, values, 1)
        ax.plot(x, np.polyval(coef, x), "-", color="crimson", lw=1,
                label=f"fit slope {coef[0]:.3f}")
    ax.set_xlabel("log threshold")
    ax.set_ylabel("counterterm value")
    ax.legend(fontsize=8)
    fig.tight_layout()
    return _save(fig, path)


def render_chaos_zscores(path: Path, z: np.ndarray) -> Path:
    fig, ax = plt.subplots(figsize=(4.6, 4))
    im = ax.imshow(z, cmap="RdBu_r", vmin=-5, vmax=5)
    for i in range(4):
        for j in range(4):
            ax.text(j, i, f"{z[i, j]:.1f}", ha="center", va="center", fontsize=8)
    ax.set_title("entry z-scores vs expected zeroth chaos")
    fig.colorbar(im, shrink=0.85)
    fig.tight_layout()
    return _save(fig, path)


def render_energy_series(path: Path, rows: list[list[float]], header: list[str]) -> Path:
    cols = {h: np.array([r[i] for r in rows]) for i, h in enumerate(header)}
    fig, axes = plt.subplots(1, 2, figsize=(9, 3.6))
    t = cols["t"]
    axes[0].plot(t, cols["l2_w_u"], label="|w_u|")
    axes[0].plot(t, cols["l2_w_b"], label="|w_b|")
    axes[0].plot(t, cols["l2_w_low"], label="|w low|", ls="--")
    axes[0].set_xlabel("t")
    axes[0].legend(fontsize=8)
    axes[1].plot(t, cols["lam_t"], drawstyle="steps-post", color="#33557a")
    axes[1].set_xlabel("t")
    axes[1].set_ylabel("threshold")
    fig.tight_layout()
    return _save(fig, path)


def render_galerkin_decay(path: Path, report: dict) -> Path:
    fig, ax = plt.subplots(figsize=(5.5, 4))
    for per_seed in report["pairs"]:
        ns = [row["n"] for row in per_seed["rows"]]
        ds = [row["sup_l2"] for row in per_seed["rows"]]
        ax.plot(ns, ds, "o-", alpha=0.7, label=f"seed {per_seed['seed']}")
    ax.set_xscale("log", base=2)
    ax.set_yscale("log")
    ax.set_xlabel("mollification level")
    ax.set_ylabel("sup-in-time L2 distance to next level")
    ax.legend(fontsize=7)
    fig.tight_layout()
    return _save(fig, path)


def render_noise_variance(path: Path, rows: list[dict]) -> Path:
    fig, ax = plt.subplots(figsize=(5.5, 4))
    msq = [r["mode_sq"] for r in rows]
    ax.errorbar(msq, [r["sample_var"] for r in rows],
                yerr=[3 * r["stderr"] for r in rows], fmt="o", label="sampled (3 se)")
    ax.plot(msq, [r["exact_var"] for r in rows], "x", color="crimson", label="closed form")
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlabel("|m|^2")
    ax.set_ylabel("coefficient variance")
    ax.legend(fontsize=8)
    fig.tight_layout()
    return _save(fig, path)
