"""PNG rendering of the experiment tables (matplotlib, non-interactive backend)."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402


def _region_curve(ax, region, label):
    taus = [p.tau for p in region.points]
    errs = [p.abs_error for p in region.points]
    ax.semilogy(taus, errs, marker="o", ms=3, label=label)


def _fig1(report, data):
    fig, axes = plt.subplots(2, 2, figsize=(10, 8))
    (ax_f, ax_g), (ax_h, ax_n) = axes
    ax_f.plot(*zip(*data["F"]))
    ax_f.axhline(1.0, color="r")
    ax_f.set(xlabel="T", ylabel="F(T)", title="(a)")
    ax_g.semilogy(*zip(*data["G"]))
    ax_g.axhline(data["epsilon"], color="r")
    ax_g.set(xlabel="tau", ylabel="G(tau)", title="(b)")
    ax_h.semilogy(*zip(*data["H"]))
    ax_h.axhline(data["eta"], color="r")
    ax_h.set(xlabel="tau", ylabel="H(tau)", title="(c)")
    ax_n.semilogy(*zip(*data["N"]))
    ax_n.axhline(data["n_lo"], color="r")
    ax_n.axhline(data["n_hi"], color="r")
    ax_n.set(xlabel="tau", ylabel="N_t threshold", title="(d)")
    fig.tight_layout()
    fig.savefig(report.path("fig1.png"), dpi=120)
    plt.close(fig)


def _regions(report, name, regions):
    fig, ax = plt.subplots(figsize=(8, 5))
    for label, region in regions.items():
        _region_curve(ax, region, label)
    for bound in sorted({r.error_bound for r in regions.values()}):
        ax.axhline(bound, color="k", ls="--", lw=0.8)
    ax.set(xlabel="tau", ylabel="|a_Nt(tau) - a|")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(report.path(f"{name}.png"), dpi=120)
    plt.close(fig)


def render(report):
    for name, data in report.figures.items():
        if name == "fig1":
            _fig1(report, data)
        elif name == "fig3":
            fig, ax = plt.subplots(figsize=(6, 4))
            ax.plot(data["t"], data["f"])
            ax.set(xlabel="t", ylabel="f(t)")
            fig.tight_layout()
            fig.savefig(report.path("fig3a.png"), dpi=120)
            plt.close(fig)
            _regions(report, "fig3b", data["regions"])
        else:
            for panel in sorted({label.split(" ")[0] for label in data}) if name == "fig2" else [None]:
                chosen = {k: v for k, v in data.items() if panel is None or k.split(" ")[0] == panel}
                suffix = f"{name}{panel}" if panel else name
                _regions(report, suffix, chosen)
