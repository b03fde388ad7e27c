"""Writers for validation and RBO artifacts (JSON, CSV, SVG)."""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .validation import ValidationReport  # noqa: E402

# fixed salt and no date stamp keep SVG output byte-stable
matplotlib.rcParams["svg.hashsalt"] = "occsim"
_SVG_META = {"Date": None, "Creator": None}


def _fmt(x: float) -> str:
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return repr(float(x))


def write_json(data: dict, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(data, fh, indent=2, sort_keys=True)
        fh.write("\n")


def write_validation_report(report: ValidationReport, outdir, stem: str) -> list[Path]:
    """Write ``<stem>.json``, histogram/ROC CSVs and two SVG charts."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    written = []

    path = outdir / f"{stem}.json"
    write_json(report.summary(), path)
    written.append(path)

    edges = report.hist_edges
    for cls, dens in (("rare", report.hist_rare), ("common", report.hist_common)):
        path = outdir / f"{stem}_hist_{cls}.csv"
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["bin_left", "bin_right", "density"])
            for b in range(len(dens)):
                w.writerow([_fmt(edges[b]), _fmt(edges[b + 1]), _fmt(dens[b])])
        written.append(path)

    path = outdir / f"{stem}_roc.csv"
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["fpr", "tpr", "threshold"])
        for f, t, th in zip(report.roc_fpr, report.roc_tpr, report.roc_thresholds):
            w.writerow([_fmt(f), _fmt(t), _fmt(th)])
    written.append(path)

    written.append(plot_histograms(report, outdir / f"{stem}_hist.svg"))
    written.append(plot_roc(report, outdir / f"{stem}_roc.svg"))
    return written


def plot_histograms(report: ValidationReport, path) -> Path:
    edges = report.hist_edges
    fig, axes = plt.subplots(1, 2, figsize=(8, 3), sharex=True)
    for ax, dens, title in (
        (axes[0], report.hist_rare, f"rare (N < {report.config.rare_threshold})"),
        (axes[1], report.hist_common, f"common (N >= {report.config.rare_threshold})"),
    ):
        ax.stairs(dens, edges, fill=True, alpha=0.6)
        ax.axvline(min(report.threshold, 1.0), color="k", linestyle="--", linewidth=1)
        ax.set_title(title)
        ax.set_xlabel("normalised similarity")
    axes[0].set_ylabel("density")
    fig.suptitle(f"{report.measure} ({report.mode})")
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata=_SVG_META)
    plt.close(fig)
    return Path(path)


def plot_roc(report: ValidationReport, path) -> Path:
    fig, ax = plt.subplots(figsize=(4, 4))
    ax.plot(report.roc_fpr, report.roc_tpr, drawstyle="default", label=f"AUC = {report.auc:.3f}")
    ax.plot([0, 1], [0, 1], color="grey", linewidth=0.8, linestyle=":")
    ax.set_xlabel("false positive rate")
    ax.set_ylabel("true positive rate")
    ax.set_title(f"{report.measure} ({report.mode})")
    ax.legend(loc="lower right")
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata=_SVG_META)
    plt.close(fig)
    return Path(path)


def plot_density(hist, path, title: str) -> Path:
    lefts = [h[0] for h in hist] + [hist[-1][1]]
    fig, ax = plt.subplots(figsize=(5, 3))
    ax.stairs([h[2] for h in hist], lefts, fill=True, alpha=0.6)
    ax.set_xlabel("RBO")
    ax.set_ylabel("density")
    ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata=_SVG_META)
    plt.close(fig)
    return Path(path)
