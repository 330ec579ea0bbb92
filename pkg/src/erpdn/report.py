"""Figure rendering for the CLI report paths.

Every function writes a PNG next to the delimited metrics output.  Figures
are rendered headless with pinned dpi and stripped PNG metadata so reruns
with identical inputs produce byte-identical files.
"""

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

_SAVE_KW = {"dpi": 110, "metadata": {"Software": None}}


def save_map_figure(path, values, title, cmap="magma"):
    fig, ax = plt.subplots(figsize=(4.2, 3.6))
    im = ax.imshow(np.asarray(values, dtype=np.float64), cmap=cmap, interpolation="nearest")
    ax.set_title(title)
    ax.set_xticks([])
    ax.set_yticks([])
    fig.colorbar(im, ax=ax, fraction=0.046)
    fig.tight_layout()
    fig.savefig(path, **_SAVE_KW)
    plt.close(fig)


def save_curve_figure(path, series, title, ylabel):
    """`series` maps legend label -> list of per-epoch values."""
    fig, ax = plt.subplots(figsize=(4.8, 3.2))
    for label, values in series.items():
        if values:
            ax.plot(range(1, len(values) + 1), values, marker="o", markersize=3, label=label)
    ax.set_xlabel("epoch")
    ax.set_ylabel(ylabel)
    ax.set_title(title)
    if len(series) > 1:
        ax.legend()
    fig.tight_layout()
    fig.savefig(path, **_SAVE_KW)
    plt.close(fig)


def save_ap_figure(path, per_class_ap, class_names, mean_ap):
    labels = [class_names[int(c)] if int(c) < len(class_names) else str(c)
              for c in sorted(per_class_ap, key=int)]
    values = [per_class_ap[c] for c in sorted(per_class_ap, key=int)]
    fig, ax = plt.subplots(figsize=(4.8, 3.2))
    ax.bar(labels, values, color="tab:blue")
    ax.axhline(mean_ap, color="tab:red", linestyle="--", label=f"mean {mean_ap:.3f}")
    ax.set_ylabel("average precision")
    ax.set_ylim(0.0, 1.05)
    ax.set_title("per-class AP")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, **_SAVE_KW)
    plt.close(fig)


def save_scene_figure(path, frame, bua, prda, combined):
    """Four-panel summary of one pipeline step."""
    fig, axes = plt.subplots(1, 4, figsize=(12.0, 3.2))
    panels = [
        (frame, "frame", None),
        (bua, "bottom-up", "viridis"),
        (prda, "plan-driven", "magma"),
        (combined, "combined", "magma"),
    ]
    for ax, (img, title, cmap) in zip(axes, panels):
        if img is None:
            ax.axis("off")
            continue
        ax.imshow(np.asarray(img), cmap=cmap, interpolation="nearest")
        ax.set_title(title)
        ax.set_xticks([])
        ax.set_yticks([])
    fig.tight_layout()
    fig.savefig(path, **_SAVE_KW)
    plt.close(fig)
