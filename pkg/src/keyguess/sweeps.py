"""Parameter sweeps over distribution families (entropy curves, speed-up curves).

A sweep evaluates a fixed set of columns on a grid of one family parameter
and writes the rows as CSV (12 significant digits, LF line endings, header
row first) or JSON.  Row order is grid order whatever the worker count.
"""

from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .cost import DegenerateDistributionError, speedup
from .distributions import (AtomDistribution, DistributionError, ProductDistribution,
                            make_family, min_entropy, renyi_entropy, shannon_entropy)

__all__ = [
    "COLUMNS",
    "AXES",
    "PRESETS",
    "SweepSpec",
    "grid",
    "evaluate_point",
    "run_sweep",
    "format_value",
    "rows_to_csv",
    "rows_to_json",
]

#: Column name -> function of (distribution, n).
COLUMNS = {
    "H_0.5": lambda d, n: renyi_entropy(d, 0.5),
    "H_0.667": lambda d, n: renyi_entropy(d, 2.0 / 3.0),
    "H_1": lambda d, n: shannon_entropy(d),
    "H_min": lambda d, n: min_entropy(d),
    "s_asymptotic": lambda d, n: _speedup(d, n).s_asymptotic,
    "s_lower": lambda d, n: _speedup(d, n).s_lower,
}

# family -> axis name -> (integer axis, open lower end, lower, upper, closed upper end)
AXES = {
    "bernoulli": {"p": (False, 0.0, 1.0, False)},
    "ternary": {"p": (False, 0.0, 1.0, True)},
    "gaussian": {"sigma": (False, 0.0, math.inf, False), "bound": (True, 0.0, math.inf, False)},
    "binomial": {"m": (True, 0.0, math.inf, False)},
    "zipf": {"t": (False, 0.0, math.inf, False), "N": (True, 0.0, math.inf, False)},
    "geometric": {"p": (False, 0.0, 1.0, False), "N": (True, 0.0, math.inf, False)},
    "poisson": {"lambda": (False, 0.0, math.inf, False), "N": (True, 0.0, math.inf, False)},
    "uniform": {"size": (True, 0.0, math.inf, False)},
}

_DEFAULT_FIXED = {
    "gaussian": {"bound": 100, "sigma": 1.0},
    "zipf": {"N": 160_000_000, "t": 0.777},
    "geometric": {"N": 1000, "p": 0.5},
    "poisson": {"N": 1000, "lambda": 1.0},
}

_ENTROPY_COLUMNS = ("H_0.5", "H_0.667", "H_1", "H_min")
_SPEEDUP_COLUMNS = ("s_asymptotic",)
_GRID = 200


def _speedup(d, n):
    if n > 1 and isinstance(d, AtomDistribution):
        d = ProductDistribution(d, n)
    try:
        return speedup(d)
    except DegenerateDistributionError:
        return _NAN_SPEEDUP


class _Nan:
    s_asymptotic = math.nan
    s_lower = math.nan


_NAN_SPEEDUP = _Nan()


@dataclass(frozen=True)
class SweepSpec:
    family: str
    axis: str
    start: float
    stop: float
    steps: int = _GRID
    columns: tuple[str, ...] = _SPEEDUP_COLUMNS
    fixed: dict = field(default_factory=dict)
    n: int = 1
    scale: str = "linear"
    out: str | None = None

    def __post_init__(self):
        if self.family not in AXES:
            raise DistributionError(f"unknown family {self.family!r}; expected one of {sorted(AXES)}")
        axes = AXES[self.family]
        if self.axis not in axes:
            raise DistributionError(f"{self.family} has no axis {self.axis!r}; "
                                    f"expected one of {sorted(axes)}")
        if self.steps < 2:
            raise DistributionError(f"steps must be at least 2, got {self.steps}")
        if not self.start < self.stop:
            raise DistributionError(f"start {self.start} must be below stop {self.stop}")
        integer, low, high, closed_high = axes[self.axis]
        if not self.start > low:
            raise DistributionError(f"{self.axis} axis must start above {low}")
        if self.stop > high or (self.stop == high and not closed_high):
            raise DistributionError(f"{self.axis} axis must end {'at or ' if closed_high else ''}below {high}")
        if self.scale not in ("linear", "log"):
            raise DistributionError("scale must be linear or log")
        unknown = [c for c in self.columns if c not in COLUMNS]
        if unknown:
            raise DistributionError(f"unknown columns {unknown}; expected some of {list(COLUMNS)}")


#: Curves behind the entropy figure and the per-family speed-up figures.
PRESETS = {
    "fig1": SweepSpec("bernoulli", "p", 0.005, 0.995, columns=_ENTROPY_COLUMNS),
    "fig2": SweepSpec("bernoulli", "p", 0.005, 0.995),
    "fig3": SweepSpec("ternary", "p", 0.005, 1.0),
    "fig4": SweepSpec("gaussian", "sigma", 0.25, 10.0, fixed={"bound": 100}),
    "fig5": SweepSpec("binomial", "m", 1, 200, steps=200),
    "fig6": SweepSpec("zipf", "N", 2, 160_000_000, fixed={"t": 0.777}, scale="log"),
    "fig7a": SweepSpec("geometric", "p", 0.005, 0.995, fixed={"N": 1000}),
    "fig7b": SweepSpec("poisson", "lambda", 0.05, 20.0, fixed={"N": 1000}),
}


def grid(spec: SweepSpec) -> list:
    if spec.scale == "log":
        pts = np.geomspace(spec.start, spec.stop, spec.steps)
    else:
        pts = np.linspace(spec.start, spec.stop, spec.steps)
    integer = AXES[spec.family][spec.axis][0]
    if integer:
        vals = []
        for v in pts:
            iv = int(round(v))
            if not vals or iv != vals[-1]:
                vals.append(iv)
        return vals
    return [float(v) for v in pts]


def _params(spec: SweepSpec, value) -> dict:
    params = dict(_DEFAULT_FIXED.get(spec.family, {}))
    params.update(spec.fixed)
    params[spec.axis] = value
    return params


def evaluate_point(spec: SweepSpec, value) -> dict:
    d = make_family(spec.family, **_params(spec, value))
    row = {spec.axis: value}
    for col in spec.columns:
        row[col] = COLUMNS[col](d, spec.n)
    return row


def _eval_star(args):
    return evaluate_point(*args)


def run_sweep(spec: SweepSpec, jobs: int = 1) -> list[dict]:
    points = grid(spec)
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(_eval_star, [(spec, v) for v in points]))
    return [evaluate_point(spec, v) for v in points]


def format_value(v) -> str:
    if isinstance(v, bool):
        return str(v).lower()
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if v is None:
        return ""
    if isinstance(v, str):
        return v
    return format(float(v), ".12g")


def rows_to_csv(rows: list[dict], columns: list[str] | None = None) -> str:
    if columns is None:
        columns = list(rows[0]) if rows else []
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([format_value(row[c]) for c in columns])
    return buf.getvalue()


def rows_to_json(rows: list[dict]) -> str:
    def clean(v):
        if isinstance(v, float) and not math.isfinite(v):
            return None
        return v
    return json.dumps([{k: clean(v) for k, v in r.items()} for r in rows], indent=2) + "\n"
