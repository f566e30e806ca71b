"""Figure specification parsing and validation.

A spec file is JSON: either a single figure object or {"figures": [...]}.
Every field is checked by name and type before any rendering starts, so a
bad spec never produces a partial output directory.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field

KINDS = (
    "energy-vs-gamma",
    "overlaps",
    "landscape",
    "qa-vs-sqa",
    "gaps",
    "local-entropy",
)

DEFAULT_SMOOTH_WINDOW = 200


class SpecError(ValueError):
    """Raised for malformed figure specs; the CLI maps it to exit code 2."""


@dataclass(frozen=True)
class FigureSpec:
    kind: str
    inputs: str                      # glob, resolved against the spec file dir
    out: str | None = None
    title: str | None = None
    xlabel: str | None = None
    ylabel: str | None = None
    xlim: tuple[float, float] | None = None
    ylim: tuple[float, float] | None = None
    logy: bool = False
    smooth_window: int = DEFAULT_SMOOTH_WINDOW
    dpi: int = 150
    figsize: tuple[float, float] = (6.4, 4.8)

    @property
    def out_name(self) -> str:
        return self.out if self.out is not None else f"{self.kind}.png"


_OPTIONAL = {
    "out": str,
    "title": str,
    "xlabel": str,
    "ylabel": str,
    "xlim": "pair",
    "ylim": "pair",
    "logy": bool,
    "smooth_window": int,
    "dpi": int,
    "figsize": "pair",
}


def _pair(value, key: str) -> tuple[float, float]:
    if (not isinstance(value, (list, tuple)) or len(value) != 2
            or not all(isinstance(v, (int, float)) for v in value)):
        raise SpecError(f"field {key!r} must be a pair of numbers")
    return float(value[0]), float(value[1])


def _one_spec(obj: dict, base_dir: str) -> FigureSpec:
    if not isinstance(obj, dict):
        raise SpecError("each figure spec must be a JSON object")
    unknown = set(obj) - {"kind", "inputs"} - set(_OPTIONAL)
    if unknown:
        raise SpecError(f"unknown spec field(s): {', '.join(sorted(unknown))}")
    kind = obj.get("kind")
    if kind not in KINDS:
        raise SpecError(
            f"unknown figure kind {kind!r}; expected one of {', '.join(KINDS)}")
    inputs = obj.get("inputs")
    if not isinstance(inputs, str) or not inputs:
        raise SpecError("field 'inputs' (a glob pattern) is required")
    if not os.path.isabs(inputs):
        inputs = os.path.join(base_dir, inputs)
    kw = {}
    for key, want in _OPTIONAL.items():
        if key not in obj:
            continue
        value = obj[key]
        if want == "pair":
            value = _pair(value, key)
        elif want is int:
            # bool is an int subclass; reject it explicitly
            if isinstance(value, bool) or not isinstance(value, int):
                raise SpecError(f"field {key!r} must be an integer")
        elif not isinstance(value, want):
            raise SpecError(f"field {key!r} must be {want.__name__}")
        kw[key] = value
    if kw.get("smooth_window", 1) < 1:
        raise SpecError("field 'smooth_window' must be >= 1")
    if "out" in kw and not kw["out"].endswith(".png"):
        raise SpecError("field 'out' must end in .png (the only emitted format)")
    return FigureSpec(kind=kind, inputs=inputs, **kw)


def load_specs(path: str) -> list[FigureSpec]:
    """Parse a spec file into a list of validated FigureSpec objects."""
    try:
        with open(path) as fh:
            data = json.load(fh)
    except FileNotFoundError:
        raise SpecError(f"spec file not found: {path}")
    except json.JSONDecodeError as exc:
        raise SpecError(f"spec file is not valid JSON: {exc}")
    base_dir = os.path.dirname(os.path.abspath(path))
    if isinstance(data, dict) and "figures" in data:
        extra = set(data) - {"figures"}
        if extra:
            raise SpecError(
                f"unknown top-level field(s): {', '.join(sorted(extra))}")
        items = data["figures"]
        if not isinstance(items, list) or not items:
            raise SpecError("'figures' must be a non-empty list")
    else:
        items = [data]
    specs = [_one_spec(obj, base_dir) for obj in items]
    names = [s.out_name for s in specs]
    if len(set(names)) != len(names):
        raise SpecError("two figures resolve to the same output file; "
                        "set distinct 'out' names")
    return specs


def schema_text() -> str:
    lines = [
        "Figure spec (JSON): one object, or {\"figures\": [object, ...]}.",
        "",
        "Required fields:",
        "  kind     one of: " + ", ".join(KINDS),
        "  inputs   glob over annealab artifact files, relative to the spec",
        "           file's directory (must match at least one file)",
        "",
        "Optional fields:",
        "  out            output file name (default <kind>.png)",
        "  title, xlabel, ylabel   axis text overrides",
        "  xlim, ylim     [lo, hi] axis limits",
        "  logy           log-scale y axis (default false)",
        "  smooth_window  centred moving-average window in recorded",
        f"                 Gamma-points for exact-QA traces (default "
        f"{DEFAULT_SMOOTH_WINDOW}; 1 disables)",
        "  dpi            raster resolution (default 150)",
        "  figsize        [width, height] in inches (default [6.4, 4.8])",
        "",
        "Accepted input schemas per kind:",
        "  energy-vs-gamma  annealing traces (gamma, energy_density) and",
        "                   theory curves (gamma, E)",
        "  overlaps         annealing traces with q1_lag* columns",
        "  landscape        cavity profiles (lambda, distance, value)",
        "  qa-vs-sqa        exact traces (gamma, E_mean) and annealing traces",
        "  gaps             spectrum curves (gamma, H0, H1)",
        "  local-entropy    entropy curves (d, phi_w, phi_sol)",
    ]
    return "\n".join(lines)
