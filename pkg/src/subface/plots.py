"""Render evaluation curves to PNG files next to the delimited report output."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .evaluation import EvalReport


def _save(fig, path: Path, paths: list[Path]) -> None:
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    paths.append(path)


def save_report_figures(report: EvalReport, out_dir: str | Path) -> list[Path]:
    """Write one figure per non-empty report section; returns the paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths: list[Path] = []

    if report.cmc:
        fig, ax = plt.subplots(figsize=(6, 4))
        ranks = range(1, len(report.cmc) + 1)
        ax.plot(ranks, report.cmc, marker="o")
        ax.set_xlabel("rank")
        ax.set_ylabel("identification rate")
        ax.set_title("Cumulative match characteristic")
        ax.set_ylim(0.0, 1.05)
        ax.grid(True, alpha=0.4)
        _save(fig, out / "cmc.png", paths)

    if report.rate_vs_q:
        fig, ax = plt.subplots(figsize=(6, 4))
        qs = [q for q, _ in report.rate_vs_q]
        rates = [r for _, r in report.rate_vs_q]
        ax.plot(qs, rates, marker="o")
        ax.set_xlabel("number of features")
        ax.set_ylabel("rank-1 rate")
        ax.set_title("Recognition rate vs feature count")
        ax.set_ylim(0.0, 1.05)
        ax.grid(True, alpha=0.4)
        _save(fig, out / "rate_vs_q.png", paths)

    if report.open_set:
        fig, ax = plt.subplots(figsize=(6, 4))
        thetas = [p.theta for p in report.open_set]
        ax.plot(thetas, [p.gir for p in report.open_set], marker="o", label="genuine identification")
        ax.plot(thetas, [p.irr for p in report.open_set], marker="s", label="imposter rejection")
        ax.set_xlabel("threshold fraction")
        ax.set_ylabel("rate")
        ax.set_title("Open-set rates vs threshold")
        ax.set_ylim(-0.05, 1.05)
        ax.grid(True, alpha=0.4)
        ax.legend()
        _save(fig, out / "openset.png", paths)

    if report.roc:
        fig, ax = plt.subplots(figsize=(6, 4))
        fars = [f for f, _ in report.roc]
        vrs = [v for _, v in report.roc]
        if all(f > 0 for f in fars):
            ax.semilogx(fars, vrs, marker="o")
        else:
            ax.plot(fars, vrs, marker="o")
        ax.set_xlabel("false acceptance rate target")
        ax.set_ylabel("verification rate")
        ax.set_title("Verification rate vs FAR")
        ax.set_ylim(0.0, 1.05)
        ax.grid(True, alpha=0.4)
        _save(fig, out / "roc.png", paths)

    return paths
