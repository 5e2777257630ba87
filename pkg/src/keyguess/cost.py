"""Guessing moments, Arikan bounds, quantum speed-ups and Grover query counts.

The guessing moment of order ``rho`` is ``sum_i i**rho * p_i`` over keys
sorted by decreasing probability: ``rho = 1`` is the expected work of
classical enumeration, ``rho = 1/2`` that of Montanaro's quantum search (up
to the constant ``e * pi``).  Moments are reported as ``log2`` values since
they grow like ``2 ** (c * n)``.
"""

from __future__ import annotations

import math
import threading
from dataclasses import asdict, dataclass, field
from functools import reduce

import mpmath
import numpy as np

from .distributions import (AtomDistribution, DistributionError, ExplicitDistribution,
                            ProductDistribution, log2_sum_exp2, renyi_entropy)
from .ranking import RankTable

__all__ = [
    "BRUTEFORCE_LIMIT",
    "EXACT_SQRT_BLOCK",
    "BRACKET_SLACK",
    "MONTANARO_CONSTANT",
    "CostReport",
    "SpeedupReport",
    "DegenerateDistributionError",
    "sorted_probabilities",
    "moment_bruteforce",
    "moment_typed",
    "arikan_order",
    "arikan_bounds",
    "cost_report_bounds_only",
    "speedup",
    "lpn_small_noise_bound",
    "grover_queries",
]

BRUTEFORCE_LIMIT = 1 << 24
#: Blocks shorter than this are summed term by term for rho = 1/2.
EXACT_SQRT_BLOCK = 1 << 16
#: Widening (bits) applied to each side of a bracket to absorb float rounding.
BRACKET_SLACK = 2.0 ** -36
MONTANARO_CONSTANT = math.e * math.pi


class DegenerateDistributionError(DistributionError):
    """A single-key distribution has no meaningful speed-up."""


@dataclass(frozen=True)
class CostReport:
    rho: float
    log2_lower: float
    log2_upper: float
    arikan_log2_lower: float
    arikan_log2_upper: float
    method: str = "typed"
    metadata: dict = field(default_factory=dict)

    @property
    def width(self) -> float:
        return self.log2_upper - self.log2_lower

    def overlaps_arikan(self) -> bool:
        return (self.log2_lower <= self.arikan_log2_upper
                and self.arikan_log2_lower <= self.log2_upper)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class SpeedupReport:
    s_lower: float
    s_asymptotic: float
    n: int = 1
    log2_key_space: float = 0.0

    @property
    def lower_bound_vacuous(self) -> bool:
        # log2(1 + log2|K|) exceeds H_1/2 on tiny key spaces
        return self.s_lower <= 0

    def to_dict(self) -> dict:
        out = asdict(self)
        out["lower_bound_vacuous"] = self.lower_bound_vacuous
        return out


def _rho_value(rho) -> float:
    try:
        r = float(rho)
    except (TypeError, ValueError):
        raise DistributionError(f"rho must be a positive real, got {rho!r}") from None
    if not r > 0 or not math.isfinite(r):
        raise DistributionError(f"rho must be a positive real, got {rho!r}")
    return r


def sorted_probabilities(d) -> np.ndarray:
    """All key probabilities of a small distribution, largest first (linear domain)."""
    if isinstance(d, ProductDistribution):
        if d.key_space_size > BRUTEFORCE_LIMIT:
            raise DistributionError(f"{d.key_space_size} keys exceed the brute-force limit")
        p = d.atom.linear_probs
        probs = reduce(lambda acc, _: np.multiply.outer(acc, p).ravel(), range(d.n - 1), p)
    elif isinstance(d, (AtomDistribution, ExplicitDistribution)):
        if d.key_space_size > BRUTEFORCE_LIMIT:
            raise DistributionError(f"{d.key_space_size} keys exceed the brute-force limit")
        probs = np.exp2(np.asarray(d.log_probs, dtype=np.float64))
    else:
        raise TypeError(f"unsupported distribution type {type(d).__name__}")
    return np.sort(np.asarray(probs, dtype=np.float64))[::-1]


def moment_bruteforce(d, rho) -> float:
    """``sum_i i**rho * p_i`` by explicit sorting (at most 2**24 keys)."""
    rho = _rho_value(rho)
    probs = sorted_probabilities(d)
    ranks = np.arange(1, probs.size + 1, dtype=np.float64)
    return math.fsum((ranks ** rho * probs).tolist())


def _log2_diff_pow15(hi: int, lo: int) -> float:
    """``log2(hi**1.5 - lo**1.5)`` for integers ``hi > lo >= 0``."""
    w = hi - lo
    # hi**1.5 * (1 - (1 - w/hi)**1.5), stable when w << hi
    frac = -math.expm1(1.5 * math.log1p(-w / hi)) if w < hi else 1.0
    return 1.5 * math.log2(hi) + math.log2(frac)


def _sqrt_block_bounds(a: int, b: int) -> tuple[float, float]:
    """``log2`` bracket on ``sum_{i=a}^{b} sqrt(i)``."""
    if b - a < EXACT_SQRT_BLOCK:
        vals = np.sqrt(np.arange(a, b + 1, dtype=np.float64)) if b < 1 << 52 else \
            np.array([math.sqrt(i) for i in range(a, b + 1)])
        s = math.log2(math.fsum(vals.tolist()))
        return s, s
    log23 = math.log2(2.0 / 3.0)
    lower = log23 + _log2_diff_pow15(b, a - 1)
    upper = log23 + _log2_diff_pow15(b + 1, a)
    return lower, upper


def _log2_arith_series(a: int, b: int) -> float:
    return math.log2((a + b) * (b - a + 1) // 2)


def moment_typed(tbl: RankTable, rho) -> CostReport:
    """Certified ``log2`` bracket on the moment, one term per type class.

    ``rho = 1`` sums each rank block as an exact arithmetic series.
    ``rho = 1/2`` sums short blocks term by term and brackets long ones with
    ``int_{a-1}^{b} sqrt(x) dx <= sum_{i=a}^{b} sqrt(i) <= int_{a}^{b+1} sqrt(x) dx``.
    """
    r = _rho_value(rho)
    if r == 1.0:
        lo_terms = []
        for idx, tc in enumerate(tbl.classes):
            a, b = tbl.block(idx)
            lo_terms.append(_log2_arith_series(a, b) + tc.log_prob)
        lo = hi = log2_sum_exp2(lo_terms)
    elif r == 0.5:
        lo_terms, hi_terms = [], []
        for idx, tc in enumerate(tbl.classes):
            a, b = tbl.block(idx)
            sl, su = _sqrt_block_bounds(a, b)
            lo_terms.append(sl + tc.log_prob)
            hi_terms.append(su + tc.log_prob)
        lo = log2_sum_exp2(lo_terms)
        hi = log2_sum_exp2(hi_terms)
    else:
        raise DistributionError(f"moment_typed supports rho in {{1, 1/2}}, got {rho!r}")
    alo, ahi = arikan_bounds(tbl.dist, r)
    meta = {"classes": len(tbl.classes)}
    if r == 0.5:
        meta["montanaro_constant"] = MONTANARO_CONSTANT
    return CostReport(r, lo - BRACKET_SLACK, hi + BRACKET_SLACK, alo, ahi, "typed", meta)


def cost_report_bruteforce(d, rho) -> CostReport:
    r = _rho_value(rho)
    v = math.log2(moment_bruteforce(d, r))
    alo, ahi = arikan_bounds(d, r)
    return CostReport(r, v - BRACKET_SLACK, v + BRACKET_SLACK, alo, ahi, "bruteforce", {})


def cost_report_bounds_only(d, rho) -> CostReport:
    """Report carrying only the Arikan sandwich as its bracket."""
    r = _rho_value(rho)
    alo, ahi = arikan_bounds(d, r)
    return CostReport(r, alo, ahi, alo, ahi, "bounds-only", {})


def arikan_order(rho) -> float:
    """Renyi order ``1 / (1 + rho)`` governing the moment of order ``rho``."""
    return 1.0 / (1.0 + _rho_value(rho))


def arikan_bounds(d, rho) -> tuple[float, float]:
    """``(log2 lower, log2 upper)`` sandwich on the guessing moment.

    ``upper = rho * H_{1/(1+rho)}(d)`` and
    ``lower = upper - rho * log2(1 + log2|K|)``.
    """
    r = _rho_value(rho)
    upper = r * renyi_entropy(d, arikan_order(r))
    lower = upper - r * math.log2(1.0 + d.log2_key_space)
    return lower, upper


def speedup(d) -> SpeedupReport:
    """Exponent ratio ``log T_C / log T_Q`` guaranteed by the Arikan bounds."""
    if isinstance(d, ProductDistribution):
        base, n = d.atom, d.n
    else:
        base, n = d, 1
    h_half = renyi_entropy(base, 0.5)
    h_two_thirds = renyi_entropy(base, 2.0 / 3.0)
    if h_two_thirds <= 0.0:
        raise DegenerateDistributionError("single-key distribution: H_2/3 = 0, speed-up undefined")
    log2_k = n * base.log2_key_space
    s_asym = 2.0 * h_half / h_two_thirds
    s_low = 2.0 * (n * h_half - math.log2(1.0 + log2_k)) / (n * h_two_thirds)
    return SpeedupReport(s_low, s_asym, n, log2_k)


def lpn_small_noise_bound(p) -> float:
    """Closed-form floor ``p**(-1/6) / 3`` on the Bernoulli speed-up, ``0 < p <= 1/2``."""
    try:
        p = float(p)
    except (TypeError, ValueError):
        raise DistributionError(f"p must be a real in (0, 1/2], got {p!r}") from None
    if not 0.0 < p <= 0.5:
        raise DistributionError(f"p must lie in (0, 1/2], got {p!r}")
    return p ** (-1.0 / 6.0) / 3.0


_iv_lock = threading.Lock()


def _exact_ceil(x, prec: int) -> int:
    # converting an endpoint rounds to the mp context precision, so widen it
    with mpmath.workprec(prec):
        return int(mpmath.ceil(mpmath.mpf(x)))


def grover_queries(t: int) -> int:
    """Queries ``ceil(pi/4 * sqrt(t)) + 1`` for a Grover search over ``t`` items.

    The ceiling is resolved with interval arithmetic; precision doubles
    until the interval of ``pi/4 * sqrt(t)`` excludes every integer
    boundary (it never contains one, the value is irrational).
    """
    if isinstance(t, bool) or not isinstance(t, (int, np.integer)):
        raise TypeError(f"t must be an integer, got {t!r}")
    t = int(t)
    if t < 1:
        raise ValueError(f"t must be at least 1, got {t}")
    iv = mpmath.iv
    prec = 64 + 2 * t.bit_length()
    with _iv_lock:
        saved = iv.prec
        try:
            while True:
                iv.prec = prec
                x = iv.pi * iv.sqrt(iv.mpf(t)) / 4
                lo, hi = _exact_ceil(x.a, prec), _exact_ceil(x.b, prec)
                if lo == hi:
                    return lo + 1
                prec *= 2
        finally:
            iv.prec = saved
