"""Figure rendering for analyzed runs.

Reads the CSV tables written by the analyze command and saves static
figures next to them. Every function is a no-op with a warning when its
table is empty.
"""

import csv
import warnings
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

_MODE_COLORS = {"lamarckian": "tab:blue", "darwinian": "tab:orange"}


def _read_table(path) -> list:
    path = Path(path)
    if not path.exists():
        return []
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


def _float(value):
    return float(value) if value not in ("", None) else None


def _save(fig, out_dir, name, fmt):
    out = Path(out_dir) / f"{name}.{fmt}"
    fig.savefig(out, dpi=150, bbox_inches="tight")
    plt.close(fig)
    return out


def _series_by_mode(rows, metric):
    grouped = {}
    for row in rows:
        if row["metric"] != metric:
            continue
        key = (row["setup"], row["mode"])
        grouped.setdefault(key, []).append(
            (int(row["generation"]), _float(row["mean"]),
             _float(row["ci_low"]), _float(row["ci_high"]))
        )
    for series in grouped.values():
        series.sort()
    return grouped


def _change_generations(analysis_dir) -> dict:
    changes = {}
    for row in _read_table(Path(analysis_dir) / "transferability.csv"):
        changes.setdefault(row["setup"], set()).add(int(row["generation"]))
    return changes


def plot_metric(analysis_dir, out_dir, metric, name, ylabel, fmt="png"):
    rows = _read_table(Path(analysis_dir) / "summary.csv")
    grouped = _series_by_mode(rows, metric)
    if not grouped:
        warnings.warn(f"no {metric} rows to plot", RuntimeWarning, stacklevel=2)
        return None
    setups = sorted({setup for setup, _ in grouped})
    changes = _change_generations(analysis_dir)
    fig, axes = plt.subplots(1, len(setups), figsize=(5.2 * len(setups), 3.6),
                             squeeze=False, sharey=True)
    for ax, setup in zip(axes[0], setups):
        for (s, mode), series in sorted(grouped.items()):
            if s != setup:
                continue
            gens = [s[0] for s in series]
            means = [s[1] for s in series]
            los = [s[2] for s in series]
            his = [s[3] for s in series]
            color = _MODE_COLORS.get(mode, "tab:green")
            ax.plot(gens, means, label=mode, color=color)
            if all(v is not None for v in los + his):
                ax.fill_between(gens, los, his, color=color, alpha=0.2, linewidth=0)
        for g in sorted(changes.get(setup, ())):
            ax.axvline(g, color="grey", linestyle="--", linewidth=0.8)
        ax.set_title(setup)
        ax.set_xlabel("generation")
    axes[0][0].set_ylabel(ylabel)
    axes[0][0].legend()
    fig.tight_layout()
    return _save(fig, out_dir, name, fmt)


def plot_transferability(analysis_dir, out_dir, fmt="png"):
    rows = _read_table(Path(analysis_dir) / "transferability.csv")
    rows = [r for r in rows if r["transferability"] != ""]
    if not rows:
        warnings.warn("no transferability rows to plot", RuntimeWarning, stacklevel=2)
        return None
    grouped = {}
    for r in rows:
        key = (r["setup"], int(r["generation"]), r["mode"])
        grouped.setdefault(key, []).append(float(r["transferability"]))
    labels = sorted({(s, g) for s, g, _ in grouped})
    modes = sorted({m for *_, m in grouped})
    fig, ax = plt.subplots(figsize=(1.2 * len(labels) + 3, 3.6))
    width = 0.8 / max(len(modes), 1)
    for mi, mode in enumerate(modes):
        xs, ys = [], []
        for li, (setup, gen) in enumerate(labels):
            vals = grouped.get((setup, gen, mode))
            if vals:
                xs.append(li + mi * width)
                ys.append(sum(vals) / len(vals))
        ax.bar(xs, ys, width=width, label=mode,
               color=_MODE_COLORS.get(mode, "tab:green"))
    ax.set_xticks([i + width * (len(modes) - 1) / 2 for i in range(len(labels))])
    ax.set_xticklabels([f"{s}\ngen {g}" for s, g in labels])
    ax.set_ylabel("transferability")
    ax.axhline(1.0, color="grey", linewidth=0.8)
    ax.legend()
    fig.tight_layout()
    return _save(fig, out_dir, "transferability", fmt)


def plot_similarity_fitness(analysis_dir, out_dir, fmt="png"):
    rows = _read_table(Path(analysis_dir) / "individuals.csv")
    rows = [r for r in rows if r["generation"] != "0"]
    if not rows:
        warnings.warn("no individuals to plot", RuntimeWarning, stacklevel=2)
        return None
    fig, ax = plt.subplots(figsize=(5.0, 3.8))
    for mode in sorted({r["mode"] for r in rows}):
        xs = [float(r["controller_similarity"]) for r in rows if r["mode"] == mode]
        ys = [float(r["fitness_after"]) for r in rows if r["mode"] == mode]
        ax.scatter(xs, ys, s=8, alpha=0.5, label=mode,
                   color=_MODE_COLORS.get(mode, "tab:green"))
    ax.set_xlabel("controller similarity to fitter parent")
    ax.set_ylabel("fitness after learning")
    ax.legend()
    fig.tight_layout()
    return _save(fig, out_dir, "similarity_vs_fitness", fmt)


def plot_pca(analysis_dir, out_dir, fmt="png"):
    scores = _read_table(Path(analysis_dir) / "pca_scores.csv")
    loads = _read_table(Path(analysis_dir) / "pca_loadings.csv")
    if not scores or not loads:
        warnings.warn("no PCA rows to plot", RuntimeWarning, stacklevel=2)
        return None
    fig, ax = plt.subplots(figsize=(5.0, 4.2))
    for mode in sorted({r["mode"] for r in scores}):
        xs = [float(r["pc1"]) for r in scores if r["mode"] == mode]
        ys = [float(r["pc2"]) for r in scores if r["mode"] == mode]
        ax.scatter(xs, ys, s=8, alpha=0.5, label=mode,
                   color=_MODE_COLORS.get(mode, "tab:green"))
    trait_names = [c for c in loads[0] if c not in ("component", "explained_ratio")]
    arrow_scale = 2.5
    for trait in trait_names:
        dx = float(loads[0][trait]) * arrow_scale
        dy = float(loads[1][trait]) * arrow_scale if len(loads) > 1 else 0.0
        ax.annotate("", xy=(dx, dy), xytext=(0, 0),
                    arrowprops=dict(arrowstyle="->", color="grey", lw=0.8))
        ax.text(dx * 1.08, dy * 1.08, trait, fontsize=7, color="dimgrey")
    ev1 = float(loads[0]["explained_ratio"]) * 100
    ev2 = float(loads[1]["explained_ratio"]) * 100 if len(loads) > 1 else 0.0
    ax.set_xlabel(f"PC1 ({ev1:.1f}%)")
    ax.set_ylabel(f"PC2 ({ev2:.1f}%)")
    ax.legend()
    fig.tight_layout()
    return _save(fig, out_dir, "pca_descriptors", fmt)


def render_all(analysis_dir, out_dir, fmt="png") -> list:
    """Render every figure with data behind it; returns the files written."""
    Path(out_dir).mkdir(parents=True, exist_ok=True)
    written = []
    jobs = [
        lambda: plot_metric(analysis_dir, out_dir, "fitness_mean",
                            "fitness_mean", "mean population fitness", fmt),
        lambda: plot_metric(analysis_dir, out_dir, "fitness_max",
                            "fitness_max", "best population fitness", fmt),
        lambda: plot_metric(analysis_dir, out_dir, "learning_delta_mean",
                            "learning_delta", "mean learning delta", fmt),
        lambda: plot_metric(analysis_dir, out_dir, "controller_similarity_mean",
                            "controller_similarity", "controller similarity", fmt),
        lambda: plot_metric(analysis_dir, out_dir, "morph_similarity_desc_mean",
                            "morphological_similarity", "morphological similarity", fmt),
        lambda: plot_transferability(analysis_dir, out_dir, fmt),
        lambda: plot_similarity_fitness(analysis_dir, out_dir, fmt),
        lambda: plot_pca(analysis_dir, out_dir, fmt),
    ]
    for job in jobs:
        out = job()
        if out is not None:
            written.append(out)
    return written
