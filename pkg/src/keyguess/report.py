"""Tabular and JSON renderings shared by the command line and the tests."""

from __future__ import annotations

import json
import math

from .cost import (BRUTEFORCE_LIMIT, cost_report_bounds_only, cost_report_bruteforce,
                   moment_typed)
from .distributions import (AtomDistribution, DistributionError, ProductDistribution,
                            min_entropy, renyi_entropy, shannon_entropy)
from .ranking import DEFAULT_CLASS_BUDGET, BudgetExceeded, build_rank_table, class_count
from .sweeps import rows_to_csv

DEFAULT_ALPHAS = (0.5, 2.0 / 3.0)


def _product(d, n: int):
    if n == 1:
        return d
    if not isinstance(d, AtomDistribution):
        raise DistributionError("only atom distributions can be raised to a power n > 1")
    return ProductDistribution(d, n)


def entropy_rows(d, alphas=DEFAULT_ALPHAS, n: int = 1) -> list[dict]:
    d = _product(d, n)
    rows = [{"measure": f"H_{a:.6g}", "bits": renyi_entropy(d, a)} for a in alphas]
    rows.append({"measure": "H_1", "bits": shannon_entropy(d)})
    rows.append({"measure": "H_min", "bits": min_entropy(d)})
    return rows


def cost_report(d, n: int, rho, *, budget: int = DEFAULT_CLASS_BUDGET, bounds_only: bool = False,
                table=None):
    """Best available report: type-class bracket, brute force, or Arikan bounds only.

    Returns ``(report, warning)``; ``warning`` is ``None`` unless the
    bracket fell back to the Arikan bounds.
    """
    d = _product(d, n)
    if isinstance(d, ProductDistribution):
        if float(rho) not in (1.0, 0.5):
            if d.key_space_size <= BRUTEFORCE_LIMIT:
                return cost_report_bruteforce(d, rho), None
        elif table is not None or class_count(d.atom.size, d.n) <= budget:
            tbl = table if table is not None else build_rank_table(d, budget)
            return moment_typed(tbl, rho), None
        msg = (f"{class_count(d.atom.size, d.n)} type classes exceed the budget of {budget}"
               if float(rho) in (1.0, 0.5) else "instance too large for brute force")
    else:
        if d.key_space_size <= BRUTEFORCE_LIMIT:
            return cost_report_bruteforce(d, rho), None
        msg = f"{d.key_space_size} keys exceed the brute-force limit"
    if not bounds_only:
        raise BudgetExceeded(msg + "; pass --bounds-only for the Arikan bounds")
    return cost_report_bounds_only(d, rho), msg + "; reporting Arikan bounds only"


def _clean(obj):
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    return obj


def to_json(obj) -> str:
    return json.dumps(_clean(obj), indent=2, sort_keys=False) + "\n"


def dict_to_csv(doc: dict) -> str:
    flat = {k: v for k, v in doc.items() if not isinstance(v, (dict, list, tuple))}
    return rows_to_csv([flat], list(flat))
