"""Figures for the evaluation and statistics reports, written as PNG files."""

from __future__ import annotations

import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

STYLE = {
    "font.size": 9,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "axes.titlesize": 10,
    "legend.fontsize": 8,
    "legend.frameon": False,
    "savefig.dpi": 150,
    "savefig.bbox": "tight",
}
# PNG metadata carries the matplotlib version by default; drop it so files compare
_META = {"Software": None}


def _save(fig, path):
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    fig.savefig(path, metadata=_META)
    plt.close(fig)
    return path


def _bars(ax, names, series, ylabel, ylim=(0, 105)):
    width = 0.8 / max(len(series), 1)
    for k, (label, values) in enumerate(series):
        xs = [i + (k - (len(series) - 1) / 2) * width for i in range(len(names))]
        ax.bar(xs, values, width, label=label)
    ax.set_xticks(range(len(names)))
    ax.set_xticklabels(names, rotation=30, ha="right")
    ax.set_ylabel(ylabel)
    ax.set_ylim(*ylim)
    if len(series) > 1:
        ax.legend(loc="upper right", ncol=len(series))


def plot_scores(report, path, title="Strict span scores"):
    """Grouped precision / recall / F1 bars per label, plus the micro average."""
    names = list(report.labels) + ["micro"]
    scores = list(report.labels.values()) + [report.micro]
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(max(4, 1.1 * len(names)), 3))
        _bars(ax, names, [
            ("precision", [s.precision for s in scores]),
            ("recall", [s.recall for s in scores]),
            ("F1", [s.f1 for s in scores]),
        ], "%")
        ax.set_title(title)
        return _save(fig, path)


def plot_corpus_stats(stats, path):
    """Label variability and, when known, out-of-domain ratio per label."""
    names = list(stats.label_counts)
    series = [("variability", [stats.variability[n] for n in names])]
    if stats.out_of_domain:
        series.append(("out-of-domain", [stats.out_of_domain.get(n, 0.0) for n in names]))
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(max(4, 1.1 * len(names)), 3))
        _bars(ax, names, series, "%")
        ax.set_title(f"{stats.entities} entities in {stats.examples} sentences")
        return _save(fig, path)


def plot_error_types(report, path):
    """Share of each error type among invalid records."""
    counts = report.tally.counts
    total = sum(counts.values())
    names = [n.replace("_", " ") for n in counts]
    values = [100.0 * c / total if total else 0.0 for c in counts.values()]
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(5, 3))
        ax.barh(names[::-1], values[::-1], color="tab:red")
        for y, (v, c) in enumerate(zip(values[::-1], list(counts.values())[::-1])):
            ax.text(v + 1, y, str(c), va="center")
        ax.set_xlabel("% of invalid records")
        ax.set_xlim(0, 110)
        return _save(fig, path)


def plot_subsection_precision(report, path):
    """Precision per subsection and for the micro-average variants."""
    names = list(report.subsections) + list(report.micro)
    values = [p.precision for p in report.subsections.values()] + [p.precision for p in report.micro.values()]
    colors = ["tab:blue"] * len(report.subsections) + ["tab:gray"] * len(report.micro)
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(max(4, 0.8 * len(names)), 3))
        ax.bar(range(len(names)), values, color=colors)
        ax.set_xticks(range(len(names)))
        ax.set_xticklabels(names, rotation=30, ha="right")
        ax.set_ylabel("precision %")
        ax.set_ylim(0, 105)
        return _save(fig, path)


def render_eval_figures(report, directory, kind):
    """Write the figures of one ``eval`` run; returns the file paths."""
    if kind == "errors":
        return [
            plot_error_types(report, os.path.join(directory, "error_types.png")),
            plot_subsection_precision(report, os.path.join(directory, "subsection_precision.png")),
        ]
    title = "Entity scores" if kind == "ner" else "Link scores"
    return [plot_scores(report, os.path.join(directory, f"{kind}_scores.png"), title)]
