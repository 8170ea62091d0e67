"""Report figures. matplotlib is imported lazily so the engine never needs it."""

from __future__ import annotations

from pathlib import Path


def _pyplot():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    return plt


def plot_profiles(profiles_bp: dict, path: Path, title: str = "") -> Path:
    """Expected exposure with and without collateral, in bp of notional."""
    plt = _pyplot()
    t = profiles_bp["time"]
    fig, (top, bottom) = plt.subplots(2, 1, figsize=(8, 7), sharex=True)
    top.plot(t, profiles_bp["mean_eps_pos"], label="E[exposure+]", color="k")
    top.plot(t, profiles_bp["mean_net_pos_rehyp"], label="E[(exposure - C)+]", ls="--")
    top.plot(t, profiles_bp["mean_net_pos_norehyp"], label="E[(exposure+ - C+)+]", ls=":")
    top.plot(t, profiles_bp["p95_eps"], label="95% exposure", color="grey", lw=0.8)
    top.set_ylabel("bp")
    top.legend(fontsize=8)
    bottom.plot(t, profiles_bp["mean_eps_neg"], label="E[exposure-]", color="k")
    bottom.plot(t, profiles_bp["mean_net_neg_rehyp"], label="E[(exposure - C)-]", ls="--")
    bottom.plot(t, profiles_bp["mean_net_neg_norehyp"], label="E[(exposure- - C-)-]", ls=":")
    bottom.set_xlabel("time (years)")
    bottom.set_ylabel("bp")
    bottom.legend(fontsize=8)
    if title:
        top.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def plot_grid(rows, path: Path, title: str = "") -> Path:
    """BCCVA, CCVA and CDVA against the swept parameter with 3-SE bands."""
    plt = _pyplot()
    fig, axes = plt.subplots(1, 3, figsize=(12, 3.8))
    param = rows[0].parameter if rows else ""
    for flag, style in ((True, "-o"), (False, "--s")):
        sel = [r for r in rows if r.rehypothecation == flag]
        if not sel:
            continue
        x = [r.value for r in sel]
        label = "re-hypothecation" if flag else "no re-hypothecation"
        for ax, key in zip(axes, ("bccva", "ccva", "cdva")):
            y = [getattr(r, key + "_bp") for r in sel]
            se = [3 * getattr(r, key + "_se_bp") for r in sel]
            ax.errorbar(x, y, yerr=se, fmt=style, ms=3, capsize=2, label=label)
    for ax, key in zip(axes, ("BCCVA", "CCVA", "CDVA")):
        ax.set_title(key)
        ax.set_xlabel(param)
        ax.set_ylabel("bp")
    axes[0].legend(fontsize=8)
    if title:
        fig.suptitle(title)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path
