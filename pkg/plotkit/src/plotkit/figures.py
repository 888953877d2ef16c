"""The four figure kinds: trajectory, profile, manifolds, convergence.

Each renderer takes one CSV produced by the billiardflow CLI (and its
JSON sidecar, which carries the table axes, caustic parameters, critical
points, and the configuration echo).  The caption footer of every figure
contains a short hash of that sidecar, so a figure can always be traced
back to the exact run that generated it.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
import os
from dataclasses import dataclass, field

import matplotlib

matplotlib.use("Agg")

import numpy as np
from matplotlib import pyplot as plt

KINDS = ("trajectory", "profile", "manifolds", "convergence")

_SCHEMAS = {
    "trajectory": ["t", "x", "y"],
    "profile": ["argument", "value", "derivative"],
    "manifolds": ["branch", "phi", "p"],
    "convergence": ["epsilon"],      # first column; any numeric column follows
}

_STYLE = {
    "figure.figsize": (6.0, 6.0),
    "font.size": 10,
    "axes.grid": True,
    "grid.alpha": 0.25,
}


class SchemaError(RuntimeError):
    """Input CSV does not match the documented schema for the figure kind."""


@dataclass(frozen=True)
class FigureSpec:
    """What to draw: one CSV, one figure kind, one output image."""

    kind: str
    csv_path: str
    out_path: str
    title: str | None = None
    dpi: int = 150
    options: dict = field(default_factory=dict)


def load_table(path: str) -> dict:
    """CSV as a dict of columns (floats where possible, else strings)."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = [row for row in reader if row]
    cols: dict = {}
    for j, name in enumerate(header):
        raw = [row[j] for row in rows]
        try:
            cols[name] = np.asarray([float(x) for x in raw])
        except ValueError:
            cols[name] = raw
    return cols


def load_sidecar(csv_path: str) -> dict:
    stem, _ = os.path.splitext(csv_path)
    try:
        with open(stem + ".json") as fh:
            return json.load(fh)
    except FileNotFoundError:
        return {}


def config_hash(meta: dict) -> str:
    return hashlib.sha256(
        json.dumps(meta, sort_keys=True).encode()).hexdigest()[:12]


def _check_schema(kind: str, cols: dict) -> None:
    expected = _SCHEMAS[kind]
    missing = [c for c in expected if c not in cols]
    if missing or (kind == "convergence" and len(cols) < 2):
        raise SchemaError(
            f"{kind} figure needs columns {expected}"
            f"{' plus at least one value column' if kind == 'convergence' else ''}; "
            f"found {list(cols)} (missing {missing})")


def _ellipse_outline(ax, sa, sb, **kw):
    th = np.linspace(0.0, 2.0 * math.pi, 400)
    ax.plot(sa * np.cos(th), sb * np.sin(th), **kw)


def _fig_trajectory(cols, meta, ax):
    cfg = meta.get("config", {})
    ca = meta.get("caustic", {})
    a, b = cfg.get("a"), cfg.get("b")
    if a is None or b is None or "lambda" not in ca:
        raise SchemaError("trajectory sidecar must carry config.a, config.b "
                          "and the caustic block")
    lam = ca["lambda"]
    c = math.sqrt(a * a - b * b)
    _ellipse_outline(ax, a, b, color="k", lw=1.5, label="table")
    _ellipse_outline(ax, math.sqrt(a * a - lam * lam),
                     math.sqrt(max(b * b - lam * lam, 0.0)),
                     color="tab:blue", lw=1.0, label="caustic")
    ax.plot(cols["x"], cols["y"], "r--", lw=1.0, marker="o", ms=3,
            label="trajectory")
    ax.plot([-c, c], [0.0, 0.0], "ks", ms=7, ls="none", label="foci")
    ax.set_aspect("equal")
    ax.legend(loc="upper right", fontsize=8)
    ax.set_xlabel("x")
    ax.set_ylabel("y")


def _fig_profile(cols, meta, ax):
    ax.plot(cols["argument"], cols["value"], color="tab:blue", lw=1.4,
            label="potential")
    ax2 = ax.twinx()
    ax2.plot(cols["argument"], cols["derivative"], color="tab:gray", lw=0.8,
             alpha=0.7, label="derivative")
    ax2.axhline(0.0, color="tab:gray", lw=0.5, alpha=0.5)
    for cp in meta.get("critical_points", []):
        ax.axvline(cp["location"], color="tab:red", lw=0.8, ls=":")
    ax.set_xlabel("argument (one period)")
    ax.set_ylabel("potential")
    ax2.set_ylabel("derivative")


def _fig_manifolds(cols, meta, ax):
    branches = np.asarray(cols["branch"])
    colors = {"unstable": "tab:red", "stable": "tab:blue"}
    for name in dict.fromkeys(branches):
        sel = branches == name
        ax.plot(np.asarray(cols["phi"])[sel], np.asarray(cols["p"])[sel],
                ".", ms=1.5, color=colors.get(name, "k"), label=name)
    ax.set_xlabel("phi")
    ax.set_ylabel("p = cos(incidence)")
    ax.legend(loc="upper right", fontsize=8, markerscale=6)


def _fig_convergence(cols, meta, ax):
    x = np.asarray(cols["epsilon"], dtype=float)
    value_col = next(name for name in cols if name != "epsilon"
                     and np.issubdtype(np.asarray(cols[name]).dtype, np.number))
    y = np.abs(np.asarray(cols[value_col], dtype=float))
    ax.loglog(x, y, "o-", color="tab:blue", label=value_col)
    slope = np.polyfit(np.log(x), np.log(y), 1)[0]
    ref = y[0] * (x / x[0]) ** 1.0
    ax.loglog(x, ref, "--", color="tab:gray", label="slope 1 reference")
    ax.set_xlabel("epsilon")
    ax.set_ylabel(value_col)
    ax.set_title(f"fitted slope {slope:.3f}", fontsize=9)
    ax.legend(fontsize=8)


_RENDERERS = {
    "trajectory": _fig_trajectory,
    "profile": _fig_profile,
    "manifolds": _fig_manifolds,
    "convergence": _fig_convergence,
}


def build_figure(spec: FigureSpec):
    """Build (but do not save) the matplotlib Figure for a spec."""
    if spec.kind not in KINDS:
        raise SchemaError(f"unknown figure kind {spec.kind!r}; expected one of {KINDS}")
    cols = load_table(spec.csv_path)
    _check_schema(spec.kind, cols)
    meta = load_sidecar(spec.csv_path)
    with plt.rc_context(_STYLE):
        fig, ax = plt.subplots()
        _RENDERERS[spec.kind](cols, meta, ax)
        if spec.title:
            ax.set_title(spec.title)
        fig.text(0.01, 0.005, f"config {config_hash(meta)}",
                 fontsize=6, color="0.4", family="monospace")
        fig.tight_layout()
    return fig


def render(spec: FigureSpec) -> str:
    """Render the figure to spec.out_path and return that path."""
    fig = build_figure(spec)
    try:
        fig.savefig(spec.out_path, dpi=spec.dpi,
                    metadata={"Software": "plotkit"} if
                    spec.out_path.lower().endswith(".png") else None)
    finally:
        plt.close(fig)
    return spec.out_path
