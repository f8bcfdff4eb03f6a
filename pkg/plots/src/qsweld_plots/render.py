"""The four figure types rendered from experiment bundles.

Each renderer returns (figure, data) where data holds exactly the
numbers plotted, so tests can compare them with the source manifests.
Rendering is read-only and deterministic (fixed layout, salted SVG ids,
no timestamps).
"""

from __future__ import annotations

from pathlib import Path

import matplotlib
import numpy as np

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .reader import (MissingData, UnknownFigure, find_manifests,
                     read_grid_container, read_json, read_polyline)

matplotlib.rcParams["svg.hashsalt"] = "qsweld-plots"

FIGURES = ("seam", "gridimage", "refinement", "stencil")


def render_seam(bundle: Path):
    seam = read_polyline(bundle / "seam.csv")
    fig, ax = plt.subplots(figsize=(5, 5))
    th = np.linspace(0, 2 * np.pi, 512)
    ax.plot(np.cos(th), np.sin(th), color="0.7", lw=1.0,
            label="unit circle")
    closed = np.append(seam, seam[0])
    ax.plot(closed.real, closed.imag, color="crimson", lw=1.2,
            label="seam")
    ax.set_aspect("equal")
    ax.legend(loc="upper right", fontsize=8)
    ax.set_title("welding seam over the unit circle")
    return fig, {"seam": seam}


def render_gridimage(bundle: Path, container: str = "F.qwgr",
                     stride: int = 16):
    n, half_width, kind, values = read_grid_container(bundle / container)
    fig, ax = plt.subplots(figsize=(5, 5))
    for i in range(0, n, stride):
        ax.plot(values[i, :].real, values[i, :].imag, color="steelblue",
                lw=0.4)
        ax.plot(values[:, i].real, values[:, i].imag, color="seagreen",
                lw=0.4)
    ax.set_aspect("equal")
    lim = 1.6
    ax.set_xlim(-lim, lim)
    ax.set_ylim(-lim, lim)
    ax.set_title(f"grid-line images under {container}")
    return fig, {"n": n, "half_width": half_width,
                 "rows": values[::stride, :], "cols": values[:, ::stride]}


def render_refinement(bundle: Path):
    manifests = find_manifests(bundle)
    points = []
    for mpath in manifests:
        doc = read_json(mpath)
        metrics = doc.get("metrics", {})
        if "residual" in metrics and "grid_n" in metrics:
            points.append((int(metrics["grid_n"]),
                           float(metrics["residual"])))
    if len(points) < 2:
        raise MissingData(
            "refinement figure needs at least two manifests with "
            "residual and grid_n metrics")
    points.sort()
    ns = np.array([p[0] for p in points], dtype=float)
    residuals = np.array([p[1] for p in points], dtype=float)
    fig, ax = plt.subplots(figsize=(5, 4))
    ax.loglog(ns, residuals, "o-", color="darkorange")
    for n, rr in points:
        ax.annotate(f"{rr:.1e}", (n, rr), textcoords="offset points",
                    xytext=(5, 5), fontsize=7)
    ax.set_xlabel("grid size N")
    ax.set_ylabel("welding residual")
    ax.set_title("residual under grid refinement")
    ax.grid(True, which="both", alpha=0.3)
    return fig, {"n_values": ns, "residuals": residuals}


def render_stencil(bundle: Path):
    family = read_json(bundle / "family.json")
    verdict = read_json(bundle / "verdict.json")
    if "t_samples" not in family:
        raise MissingData("family.json lacks t_samples")
    ts = np.array([complex(t[0], t[1]) for t in family["t_samples"]])
    fig, ax = plt.subplots(figsize=(5, 5))
    color = "seagreen" if verdict.get("pass") else "crimson"
    ax.scatter(ts.real, ts.imag, s=36, color=color, zorder=3)
    for t in ts:
        ax.annotate(f"{t.real:+.3f}{t.imag:+.3f}i", (t.real, t.imag),
                    textcoords="offset points", xytext=(4, 4), fontsize=6)
    banner = (f"{'PASS' if verdict.get('pass') else 'FAIL'}   "
              f"cr={verdict.get('cr'):.2e}  "
              f"morera={verdict.get('morera'):.2e}")
    ax.set_title(banner, color=color)
    ax.set_aspect("equal")
    ax.set_xlabel("Re t")
    ax.set_ylabel("Im t")
    ax.grid(True, alpha=0.3)
    return fig, {"t_samples": ts, "cr": verdict.get("cr"),
                 "morera": verdict.get("morera"),
                 "pass": verdict.get("pass")}


RENDERERS = {
    "seam": render_seam,
    "gridimage": render_gridimage,
    "refinement": render_refinement,
    "stencil": render_stencil,
}


def render(bundle, figure: str, out=None, **options):
    """Render one figure type from a bundle; returns (figure, data)."""
    if figure not in RENDERERS:
        raise UnknownFigure(
            f"unknown figure {figure!r}; choose from {FIGURES}")
    bundle = Path(bundle)
    if not bundle.exists():
        raise MissingData(f"bundle not found: {bundle}")
    fig, data = RENDERERS[figure](bundle, **options)
    if out is not None:
        save_deterministic(fig, out)
    return fig, data


def save_deterministic(fig, out):
    """Write SVG/PNG with no timestamps, so reruns are byte-identical."""
    out = Path(out)
    meta = {"Date": None} if out.suffix == ".svg" else {}
    fig.savefig(out, metadata=meta)
    plt.close(fig)
