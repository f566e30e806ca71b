"""The six figure renderers.

Each renderer consumes Table objects already classified by header and draws
onto a fresh axes; `render` owns globbing, ordering, styling and the atomic
write.  Matched files are processed in sorted path order so colour
assignment, legend order and therefore the emitted bytes are reproducible.
"""

from __future__ import annotations

import glob
import os

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)
import numpy as np  # noqa: E402

from .figspec import FigureSpec, SpecError  # noqa: E402
from .readers import SchemaError, Table, classify, read_table, require  # noqa: E402

_PNG_META = {"Software": "annealab-plots"}


def _stem(path: str) -> str:
    return os.path.splitext(os.path.basename(path))[0]


def _finite(arr: np.ndarray) -> np.ndarray:
    return np.where(np.isfinite(arr), arr, np.nan)


def _smooth(values: np.ndarray, window: int) -> tuple[np.ndarray, int]:
    """Centred moving average; returns (smoothed, leading offset)."""
    w = min(int(window), len(values))
    if w <= 1:
        return values, 0
    kernel = np.full(w, 1.0 / w)
    return np.convolve(values, kernel, mode="valid"), (w - 1) // 2


def _draw_energy_vs_gamma(ax, tables: list[Table], spec: FigureSpec):
    for t in tables:
        fam = classify(t)
        if fam == "trace":
            ax.plot(t["gamma"], t["energy_density"], label=_stem(t.path))
        elif fam == "theory":
            ax.plot(t["gamma"], t["E"], "k--", label=_stem(t.path))
        else:
            raise SchemaError(
                f"{t.path}: expected an annealing trace (columns gamma, "
                f"energy_density) or a theory curve (columns gamma, E); "
                f"found: {', '.join(t.names())}")
    return "Gamma", "classical energy density"


def _draw_overlaps(ax, tables: list[Table], spec: FigureSpec):
    for t in tables:
        require(t, "gamma")
        lag_cols = [c for c in t.names() if c.startswith("q1_lag")]
        if not lag_cols:
            raise SchemaError(f"{t.path}: missing column(s) q1_lag* "
                              f"(found: {', '.join(t.names())})")
        for col in lag_cols:
            ax.plot(t["gamma"], t[col], label=f"{_stem(t.path)} {col[3:]}")
    return "Gamma", "Trotter overlap"


def _draw_landscape(ax, tables: list[Table], spec: FigureSpec):
    for t in tables:
        require(t, "lambda", "distance", "value")
        ax.plot(t["distance"], _finite(t["value"]), marker="o", ms=3,
                label=_stem(t.path))
    return "distance from reference", "profile value"


def _draw_qa_vs_sqa(ax, tables: list[Table], spec: FigureSpec):
    for t in tables:
        fam = classify(t)
        if fam == "exact":
            sm, off = _smooth(t["E_mean"], spec.smooth_window)
            ax.plot(t["gamma"][off:off + len(sm)], sm, label=_stem(t.path))
        elif fam == "trace":
            ax.plot(t["gamma"], t["energy_density"], label=_stem(t.path))
        else:
            raise SchemaError(
                f"{t.path}: expected an exact trace (columns gamma, E_mean) "
                f"or an annealing trace (columns gamma, energy_density); "
                f"found: {', '.join(t.names())}")
    return "Gamma", "energy density"


def _draw_gaps(ax, tables: list[Table], spec: FigureSpec):
    for t in tables:
        require(t, "gamma", "H0", "H1")
        ax.plot(t["gamma"], t["H1"] - t["H0"], marker="o", ms=3,
                label=_stem(t.path))
    return "Gamma", "H1 - H0"


def _draw_local_entropy(ax, tables: list[Table], spec: FigureSpec):
    for t in tables:
        require(t, "d", "phi_w", "phi_sol")
        d = t["d"]
        x = d / d.max() if d.max() > 0 else d
        line, = ax.plot(x, _finite(t["phi_w"]),
                        label=f"{_stem(t.path)} phi_w")
        ax.plot(x, _finite(t["phi_sol"]), "--", color=line.get_color(),
                label=f"{_stem(t.path)} phi_sol")
    return "distance fraction d/N", "local entropy"


_DRAWERS = {
    "energy-vs-gamma": _draw_energy_vs_gamma,
    "overlaps": _draw_overlaps,
    "landscape": _draw_landscape,
    "qa-vs-sqa": _draw_qa_vs_sqa,
    "gaps": _draw_gaps,
    "local-entropy": _draw_local_entropy,
}


def render(spec: FigureSpec, out_dir: str) -> str:
    """Render one figure; returns the written path.

    Raises SpecError when the glob matches nothing (no file is written) and
    SchemaError when a matched file lacks the columns the kind needs.
    """
    paths = sorted(glob.glob(spec.inputs))
    if not paths:
        raise SpecError(f"inputs matched no file: {spec.inputs}")
    tables = [read_table(p) for p in paths]

    fig, ax = plt.subplots(figsize=spec.figsize)
    try:
        xlabel, ylabel = _DRAWERS[spec.kind](ax, tables, spec)
        ax.set_xlabel(spec.xlabel if spec.xlabel is not None else xlabel)
        ax.set_ylabel(spec.ylabel if spec.ylabel is not None else ylabel)
        if spec.title is not None:
            ax.set_title(spec.title)
        if spec.logy:
            ax.set_yscale("log")
        if spec.xlim is not None:
            ax.set_xlim(spec.xlim)
        if spec.ylim is not None:
            ax.set_ylim(spec.ylim)
        ax.grid(alpha=0.3)
        ax.legend(fontsize=8)
        fig.tight_layout()

        os.makedirs(out_dir, exist_ok=True)
        out_path = os.path.join(out_dir, spec.out_name)
        tmp = out_path + ".tmp"
        fig.savefig(tmp, format="png", dpi=spec.dpi, metadata=_PNG_META)
        os.replace(tmp, out_path)
    finally:
        plt.close(fig)
    return out_path
