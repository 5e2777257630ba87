"""Seeded property suites behind ``keyguess verify``.

Each suite returns a :class:`SuiteReport` listing every checked inequality
with the values involved.  Suites are deterministic given their seed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import mpmath
import numpy as np

from .cost import arikan_bounds, moment_bruteforce, lpn_small_noise_bound, speedup
from .distributions import (ExplicitDistribution, ProductDistribution, make_bernoulli,
                            make_categorical, shannon_entropy)
from .oracles import key_order
from .ranking import build_rank_table, core_set_size, get_key, rank_of_key
from .simulate import (SimConfig, core_set_mass_estimate, hoeffding_delta, multi_key_guess,
                       quantum_multi_key_guess)

__all__ = ["Check", "SuiteReport", "SUITES", "run_suite", "random_explicit",
           "random_rational_atom", "fit_slope"]


@dataclass(frozen=True)
class Check:
    name: str
    value: float
    low: float | None
    high: float | None
    passed: bool

    def line(self) -> str:
        lo = "-inf" if self.low is None else f"{self.low:.6g}"
        hi = "+inf" if self.high is None else f"{self.high:.6g}"
        return f"{'PASS' if self.passed else 'FAIL'}  {self.name}: {lo} <= {self.value:.6g} <= {hi}"


@dataclass
class SuiteReport:
    name: str
    seed: int
    checks: list[Check] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def add(self, name, value, low=None, high=None, passed=None) -> Check:
        if passed is None:
            passed = (low is None or low <= value) and (high is None or value <= high)
        c = Check(name, float(value), low, high, bool(passed))
        self.checks.append(c)
        return c

    def render(self) -> str:
        lines = [f"suite {self.name} (seed {self.seed})"]
        lines += ["  " + c.line() for c in self.checks]
        failed = sum(not c.passed for c in self.checks)
        lines.append(f"{'PASS' if self.passed else 'FAIL'}: {len(self.checks) - failed}/"
                     f"{len(self.checks)} checks passed")
        return "\n".join(lines) + "\n"


def random_explicit(rng: np.random.Generator, max_log2_size: int = 12) -> ExplicitDistribution:
    """Random explicit distribution; shapes range from near-uniform to heavy-tailed."""
    size = int(rng.integers(1, 2 ** max_log2_size + 1))
    shape = rng.choice(["dirichlet", "power", "spiky"])
    if shape == "dirichlet":
        w = rng.dirichlet(np.full(size, float(rng.uniform(0.05, 5.0))))
    elif shape == "power":
        w = np.arange(1, size + 1, dtype=float) ** -float(rng.uniform(0.0, 3.0))
    else:
        w = rng.uniform(0.0, 1.0, size) ** float(rng.uniform(1.0, 40.0))
    w = np.maximum(w, 1e-300)
    return ExplicitDistribution.from_probs(w, normalize=True)


def random_rational_atom(rng: np.random.Generator, size: int, denominator: int = 16):
    w = rng.integers(1, denominator + 1, size).tolist()
    total = sum(w)
    return make_categorical(list(range(size)), [Fraction(x, total) for x in w])


def fit_slope(xs, ys) -> float:
    return float(np.polyfit(np.asarray(xs, float), np.asarray(ys, float), 1)[0])


def suite_arikan_sandwich(seed: int, instances: int = 200) -> SuiteReport:
    rep = SuiteReport("arikan-sandwich", seed)
    rng = np.random.default_rng(seed)
    for i in range(instances):
        d = random_explicit(rng)
        for rho in (0.5, 1.0, 2.0):
            lo, hi = arikan_bounds(d, rho)
            v = math.log2(moment_bruteforce(d, rho))
            rep.add(f"instance {i} |K|={d.size} rho={rho} log2 moment", v, lo, hi)
    return rep


def suite_rank_bijection(seed: int, max_keys: int = 1 << 12) -> SuiteReport:
    rep = SuiteReport("rank-bijection", seed)
    rng = np.random.default_rng(seed)
    for k in range(1, 5):
        for n in range(1, 13):
            if k ** n > max_keys:
                break
            atom = random_rational_atom(rng, k)
            d = ProductDistribution(atom, n)
            tbl = build_rank_table(d)
            keys = [get_key(tbl, i) for i in range(1, k ** n + 1)]
            oracle = key_order(d)
            rep.add(f"|A|={k} n={n} order matches brute force", float(keys == oracle),
                    passed=keys == oracle)
            roundtrip = all(rank_of_key(tbl, key) == i for i, key in enumerate(keys, 1))
            rep.add(f"|A|={k} n={n} rank_of_key(get_key(i)) == i", float(roundtrip),
                    passed=roundtrip)
    return rep


def suite_core_set(seed: int) -> SuiteReport:
    rep = SuiteReport("core-set", seed)
    rng = np.random.default_rng(seed)
    d = make_bernoulli(0.25) ** 400
    est = core_set_mass_estimate(d, 0.0, 10_000, seed)
    rep.add("Ber(0.25)^400 delta=0 membership", est.probability, 0.40, 0.60)
    delta = hoeffding_delta(d.atom, d.n, 0.05)
    est = core_set_mass_estimate(d, delta, 10_000, seed)
    rep.add(f"Ber(0.25)^400 delta={delta:.4f} membership", est.probability, 0.95, None)
    for i in range(50):
        atom = random_rational_atom(rng, int(rng.integers(2, 5)))
        n = int(rng.integers(1, 65))
        delta = float(rng.uniform(0.0, 0.5))
        size = core_set_size(ProductDistribution(atom, n), delta)
        exponent = (shannon_entropy(atom) + delta) * n
        ok = size <= _floor_pow2(exponent)
        rep.add(f"instance {i} n={n} delta={delta:.3f} log2|C| <= (H+delta)n",
                math.log2(size), None, exponent, passed=ok)
    return rep


def _floor_pow2(x: float) -> int:
    """``floor(2 ** x)`` exactly for a float exponent ``x``."""
    with mpmath.workprec(int(abs(x)) + 128):
        return int(mpmath.floor(mpmath.power(2, mpmath.mpf(x))))


def scaling_run(seed: int, ns=(8, 12, 16, 20), p: float = 0.2, c: float = 0.4, m: int = 2000):
    """Classical and quantum multi-key runs on ``Ber(p)**n`` for each ``n``."""
    atom = make_bernoulli(p)
    out = []
    for n in ns:
        d = ProductDistribution(atom, n)
        cfg = SimConfig(seed=seed, m=m, c=c)
        out.append((n, multi_key_guess(d, cfg), quantum_multi_key_guess(d, cfg)))
    return out


def suite_thm2_scaling(seed: int) -> SuiteReport:
    rep = SuiteReport("thm2-scaling", seed)
    h = shannon_entropy(make_bernoulli(0.2))
    runs = scaling_run(seed)
    ns = [n for n, _, _ in runs]
    cl = [math.log2(o.amortized_cost) for _, o, _ in runs]
    qu = [math.log2(q.amortized_cost) for _, _, q in runs]
    rep.add("classical slope of log2 amortized cost", fit_slope(ns, cl), h - 0.15, h + 0.15)
    rep.add("quantum slope of log2 amortized cost", fit_slope(ns, qu), h / 2 - 0.15, h / 2 + 0.15)
    for n, o, q in runs:
        same = o.recovered_indices == q.recovered_indices and o.alpha_max == q.alpha_max
        rep.add(f"n={n} classical and quantum recover the same keys", float(same), passed=same)
    return rep


def suite_lpn_bound(seed: int) -> SuiteReport:
    rep = SuiteReport("lpn-bound", seed)
    prev = None
    for k in range(1, 7):
        p = 10.0 ** -k
        s = speedup(make_bernoulli(p)).s_asymptotic
        rep.add(f"p=1e-{k} s_asymptotic >= p^(-1/6)/3", s, lpn_small_noise_bound(p), None)
        if prev is not None:
            rep.add(f"p=1e-{k} s_asymptotic grows as p decreases", s, prev, None, passed=s > prev)
        prev = s
    return rep


SUITES = {
    "arikan-sandwich": suite_arikan_sandwich,
    "rank-bijection": suite_rank_bijection,
    "core-set": suite_core_set,
    "thm2-scaling": suite_thm2_scaling,
    "lpn-bound": suite_lpn_bound,
}


def run_suite(name: str, seed: int = 0) -> SuiteReport:
    try:
        fn = SUITES[name]
    except KeyError:
        raise KeyError(f"unknown suite {name!r}; expected one of {sorted(SUITES)}") from None
    return fn(seed)
