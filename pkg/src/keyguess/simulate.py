"""Simulated single- and multi-key guessing with exact oracle-query accounting.

Enumerating keys in rank order and stopping at the first hit costs exactly
the rank of the secret key, so the simulators charge ``rank_of_key``
instead of looping; the ``*_literal`` variants really loop over
:func:`~keyguess.ranking.get_key` and are kept as a cross-check for small
key spaces.  Quantum phases are charged :func:`~keyguess.cost.grover_queries`
and succeed exactly when the key lies among the ``t`` searched ranks.

Random streams
--------------
Key ``j`` of a run with seed ``s`` is drawn from a Philox4x64 generator keyed
with the 128-bit value ``(j << 64) | s`` at counter zero: one uniform per
coordinate, mapped through the atom's CDF.  Streams are independent of
each other and of evaluation order.  Bulk Monte Carlo sampling uses the
reserved stream index ``2**64 - 1``.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import asdict, dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np
from scipy.stats import binomtest

from .cost import grover_queries
from .distributions import DistributionError, ProductDistribution, shannon_entropy
from .ranking import TIE_TOL, RankTable, cached_rank_table, get_key, rank_of_key

__all__ = [
    "SimConfig",
    "SimOutcome",
    "Phase",
    "DoublingLimitExceeded",
    "key_stream",
    "sample_key",
    "sample_keys",
    "key_guess",
    "key_guess_literal",
    "aborted_key_guess",
    "aborted_key_guess_literal",
    "key_guess_monte_carlo",
    "multi_key_guess",
    "quantum_multi_key_guess",
    "CoreSetEstimate",
    "core_set_mass_estimate",
    "hoeffding_delta",
    "trace_csv",
]

_MASK64 = (1 << 64) - 1
_BULK_STREAM = _MASK64


class DoublingLimitExceeded(RuntimeError):
    """The doubling schedule hit ``max_doublings`` before recovering enough keys."""


@dataclass(frozen=True)
class SimConfig:
    seed: int
    m: int
    c: float
    max_doublings: int | None = None
    skip_found: bool = False
    keep_per_key: bool = False

    def __post_init__(self):
        if not 0 <= self.seed <= _MASK64:
            raise ValueError(f"seed must fit in 64 bits, got {self.seed}")
        if self.m < 1:
            raise ValueError(f"m must be at least 1, got {self.m}")
        if not 0 < self.c < 1:
            raise ValueError(f"c must lie in (0, 1), got {self.c}")
        if self.max_doublings is not None and self.max_doublings < 1:
            raise ValueError("max_doublings must be positive")

    @property
    def target(self) -> int:
        # decimal reading of c, so c=0.1, m=30 targets 3 keys, not 4
        return math.ceil(Fraction(repr(float(self.c))) * self.m)


@dataclass(frozen=True)
class Phase:
    t: int
    recovered: int
    queries: int


@dataclass(frozen=True)
class SimOutcome:
    queries_total: int
    recovered: int
    alpha_max: int
    m: int
    target: int
    quantum: bool
    seed: int
    phases: tuple[Phase, ...] = ()
    recovered_indices: tuple[int, ...] = ()
    per_key_costs: tuple[int, ...] | None = None

    @property
    def amortized_cost(self) -> float:
        return self.queries_total / self.m

    def to_dict(self, trace: bool = False) -> dict:
        out = asdict(self)
        out["amortized_cost"] = self.amortized_cost
        out.pop("phases")
        if trace:
            out["trace"] = [asdict(p) for p in self.phases]
        if self.per_key_costs is None:
            out.pop("per_key_costs")
        return out


def _table(d) -> RankTable:
    if isinstance(d, RankTable):
        return d
    if isinstance(d, ProductDistribution):
        return cached_rank_table(d)
    raise TypeError(f"expected a ProductDistribution or RankTable, got {type(d).__name__}")


def key_stream(seed: int, j: int) -> np.random.Generator:
    if not 0 <= seed <= _MASK64 or not 0 <= j <= _MASK64:
        raise ValueError("seed and stream index must fit in 64 bits")
    return np.random.Generator(np.random.Philox(key=(j << 64) | seed))


def _cdf(atom) -> np.ndarray:
    cdf = np.cumsum(atom.linear_probs)
    cdf[-1] = 1.0
    return cdf


def _draw(atom, u: np.ndarray) -> np.ndarray:
    idx = np.searchsorted(_cdf(atom), u, side="right")
    return np.minimum(idx, atom.size - 1)


def sample_key(d: ProductDistribution, seed: int, j: int) -> tuple[int, ...]:
    """Key ``j`` of the run seeded with ``seed``."""
    idx = _draw(d.atom, key_stream(seed, j).random(d.n))
    labels = d.atom.support
    return tuple(labels[i] for i in idx)


def sample_keys(d: ProductDistribution, count: int, seed: int) -> np.ndarray:
    """``(count, n)`` array of support indices from the bulk stream."""
    u = key_stream(seed, _BULK_STREAM).random((count, d.n))
    return _draw(d.atom, u)


def _keys_from_indices(d: ProductDistribution, idx: np.ndarray):
    labels = np.asarray(d.atom.support)
    return [tuple(row) for row in labels[idx].tolist()]


# -- single key ---------------------------------------------------------------


def key_guess(d, key: Sequence[int]) -> int:
    """Queries spent by in-order enumeration to find ``key``."""
    return rank_of_key(_table(d), key)


def key_guess_literal(d, key: Sequence[int]) -> int:
    tbl = _table(d)
    key = tuple(key)
    rank_of_key(tbl, key)  # validates the key
    i = 0
    while True:
        i += 1
        if get_key(tbl, i) == key:
            return i


def aborted_key_guess(d, key: Sequence[int], t: int) -> tuple[int, bool]:
    """Enumeration aborted after ``t`` guesses: ``(queries, found)``."""
    if t < 1:
        raise ValueError(f"t must be at least 1, got {t}")
    r = key_guess(d, key)
    return min(r, t), r <= t


def aborted_key_guess_literal(d, key: Sequence[int], t: int) -> tuple[int, bool]:
    if t < 1:
        raise ValueError(f"t must be at least 1, got {t}")
    tbl = _table(d)
    key = tuple(key)
    rank_of_key(tbl, key)
    limit = min(t, tbl.key_space_size)
    for i in range(1, limit + 1):
        if get_key(tbl, i) == key:
            return i, True
    return limit, False


def key_guess_monte_carlo(d: ProductDistribution, samples: int, seed: int) -> tuple[float, float]:
    """Mean query count of :func:`key_guess` over sampled keys, with its standard error."""
    tbl = _table(d)
    keys = _keys_from_indices(d, sample_keys(d, samples, seed))
    ranks = np.array([float(rank_of_key(tbl, k)) for k in keys])
    se = float(ranks.std(ddof=1) / math.sqrt(samples)) if samples > 1 else math.inf
    return float(ranks.mean()), se


# -- multi key ----------------------------------------------------------------


def _default_doublings(tbl: RankTable) -> int:
    # t = 2**k covers the whole key space once k >= ceil(log2 |K|)
    return (tbl.key_space_size - 1).bit_length() + 1


def _run_doubling(d, cfg: SimConfig, quantum: bool) -> SimOutcome:
    tbl = _table(d)
    dist = tbl.dist
    ranks = [rank_of_key(tbl, sample_key(dist, cfg.seed, j)) for j in range(cfg.m)]
    limit = cfg.max_doublings or _default_doublings(tbl)
    target = cfg.target
    per_key = [0] * cfg.m if cfg.keep_per_key else None
    found = [False] * cfg.m
    phases = []
    total = 0
    t, alpha = 1, 0
    while True:
        if alpha >= limit:
            raise DoublingLimitExceeded(
                f"{sum(found)} of {cfg.m} keys recovered after {alpha} doublings; "
                f"target {target} not reached")
        t *= 2
        alpha += 1
        charge = grover_queries(t) if quantum else t
        active = [j for j in range(cfg.m) if not (cfg.skip_found and found[j])]
        for j in active:
            found[j] = ranks[j] <= t
            if per_key is not None:
                per_key[j] += charge
        phase_cost = charge * len(active)
        total += phase_cost
        recovered = sum(found)
        phases.append(Phase(t, recovered, phase_cost))
        if recovered >= target:
            break
    return SimOutcome(
        queries_total=total,
        recovered=recovered,
        alpha_max=alpha,
        m=cfg.m,
        target=target,
        quantum=quantum,
        seed=cfg.seed,
        phases=tuple(phases),
        recovered_indices=tuple(j for j in range(cfg.m) if found[j]),
        per_key_costs=tuple(per_key) if per_key is not None else None,
    )


def multi_key_guess(d, cfg: SimConfig) -> SimOutcome:
    """Doubling schedule ``t = 2, 4, 8, ...`` of aborted enumeration over ``m`` keys.

    Every phase restarts all ``m`` searches from scratch and charges
    ``t`` queries per key (``skip_found`` drops keys found earlier, which
    lowers the cost but never changes which keys are recovered).  Stops
    after the first phase that leaves at least ``ceil(c * m)`` keys found.
    """
    return _run_doubling(d, cfg, quantum=False)


def quantum_multi_key_guess(d, cfg: SimConfig) -> SimOutcome:
    """Same schedule as :func:`multi_key_guess`; each search costs ``grover_queries(t)``."""
    return _run_doubling(d, cfg, quantum=True)


def trace_csv(outcome: SimOutcome) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["phase", "t", "keys_recovered", "queries_charged"])
    for i, p in enumerate(outcome.phases, 1):
        w.writerow([i, p.t, p.recovered, p.queries])
    return buf.getvalue()


# -- core set -----------------------------------------------------------------


@dataclass(frozen=True)
class CoreSetEstimate:
    probability: float
    ci_low: float
    ci_high: float
    hits: int
    trials: int
    delta: float
    confidence: float = 0.95


def core_set_mass_estimate(d: ProductDistribution, delta: float, trials: int, seed: int,
                           confidence: float = 0.95) -> CoreSetEstimate:
    """Fraction of sampled keys with ``P(k) >= 2 ** (-(H + delta) * n)``, with a Wilson interval."""
    if trials < 1:
        raise ValueError(f"trials must be at least 1, got {trials}")
    if not delta >= 0:
        raise DistributionError(f"delta must be non-negative, got {delta!r}")
    idx = sample_keys(d, trials, seed)
    lp = np.asarray(d.atom.log_probs)[idx].sum(axis=1)
    threshold = -(shannon_entropy(d.atom) + delta) * d.n
    hits = int(np.count_nonzero(lp >= threshold - TIE_TOL))
    ci = binomtest(hits, trials).proportion_ci(confidence, method="wilson")
    return CoreSetEstimate(hits / trials, float(ci.low), float(ci.high), hits, trials,
                           float(delta), confidence)


def hoeffding_delta(atom, n: int, eps: float) -> float:
    """Smallest ``delta`` for which Hoeffding guarantees core-set mass ``>= 1 - eps``.

    With ``X = -log2 P(symbol)`` ranging over an interval of width ``R``,
    ``Pr[mean(X) - H > delta] <= exp(-2 n delta**2 / R**2)``.
    """
    if not 0 < eps < 1:
        raise ValueError(f"eps must lie in (0, 1), got {eps}")
    spread = max(atom.log_probs) - min(atom.log_probs)
    return spread * math.sqrt(math.log(1.0 / eps) / (2.0 * n))
