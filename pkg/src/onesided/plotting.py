"""Report figures.  matplotlib is imported lazily and always with the Agg backend."""

from __future__ import annotations

import math
from typing import Sequence


def _pyplot():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    return plt


def _log2(x) -> float:
    f = x.mid if hasattr(x, "mid") else x
    return math.log2(f.numerator) - math.log2(f.denominator)


def plot_construction(state, path: str) -> None:
    """log2 M_nu with the [H_nu, 2H_nu] windows, and log2 of the cap radii."""
    plt = _pyplot()
    steps = state.steps
    nus = list(range(len(steps)))
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(11, 4.5))
    ax1.plot(nus, [_log2(s.M) for s in steps], "o-", label="log2 M_nu")
    h = [_log2(s.H) for s in steps[1:-1]]
    if h:
        xs = nus[2:]
        ax1.fill_between(xs, h, [v + 1 for v in h], alpha=0.25, label="[H, 2H] of the previous step")
    ax1.set_xlabel("nu")
    ax1.set_ylabel("log2")
    ax1.legend()
    ax2.plot(nus, [-_log2(s.cap.radius) for s in steps], "s-", color="C3")
    ax2.set_xlabel("nu")
    ax2.set_ylabel("-log2 radius of B_nu")
    fig.suptitle(f"construction, profile {state.profile.label}, seed {state.seed}")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def plot_coverage(report, path: str) -> None:
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(9, 3.5))
    for nu, lo, hi in report.segments:
        ax.plot([lo, hi], [nu, nu], lw=6, solid_capstyle="butt", color="C0")
    for nu, a, b in report.gaps:
        ax.axvspan(a, b, color="C3", alpha=0.2)
    ax.set_xlabel("log2 M")
    ax.set_ylabel("nu")
    ax.set_title("segments I_nu (gaps shaded)")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def plot_scan(records: Sequence, floor_exp: int, sigma: float, path: str) -> None:
    """Running minimum of ||m . alpha|| h^sigma against height, with the floor."""
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(8, 4.5))
    hs = [r.height for r in records]
    ax.step(hs, [float(r.normalized.mid) for r in records], where="post", label="running minimum")
    ax.axhline(2.0 ** -floor_exp, color="C3", ls="--", label=f"floor 2^-{floor_exp}")
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlabel("height max(m1, m2)")
    ax.set_ylabel(f"||m1 a1 + m2 a2|| h^{sigma:.4f}")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def plot_approx(records: Sequence, phi: float, g_sigma: float, path: str) -> None:
    plt = _pyplot()
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(11, 4.5))
    rs = [r for r in records if r.exponent is not None]
    ax1.plot([r.height for r in rs], [float(r.exponent.mid) for r in rs], "o-", ms=3, label="record exponent")
    ax1.axhline(phi, color="C2", ls="--", label="phi")
    ax1.axhline(g_sigma, color="C3", ls=":", label="g(max(sigma, 2))")
    ax1.set_xscale("log")
    ax1.set_xlabel("height")
    ax1.legend()
    ax2.plot([r.height for r in records], [float(r.product_phi.mid) for r in records], "o-", ms=3)
    ax2.set_xscale("log")
    ax2.set_yscale("log")
    ax2.set_xlabel("height")
    ax2.set_ylabel("||x . alpha|| h^phi")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
