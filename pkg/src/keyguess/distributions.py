"""Finite discrete distributions, product distributions and the Renyi family.

Every probability is stored as a base-2 logarithm.  A product distribution
``atom ** n`` is never expanded: its entropies follow from the atom and its
keys are handled by :mod:`keyguess.ranking`.

Constructors for the families used to model key material (Bernoulli,
ternary, centered binomial, truncated discrete Gaussian, Zipf, truncated
geometric and Poisson) live at the bottom of the module, together with the
JSON literal format understood by the command line.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from numbers import Rational
from typing import Any, Sequence

import mpmath
import numpy as np

__all__ = [
    "NORMALIZATION_TOL",
    "DistributionError",
    "AtomDistribution",
    "ProductDistribution",
    "ExplicitDistribution",
    "ZipfDistribution",
    "log2_sum_exp2",
    "renyi_entropy",
    "shannon_entropy",
    "min_entropy",
    "hartley_entropy",
    "make_uniform",
    "make_bernoulli",
    "make_ternary",
    "make_binomial",
    "make_discrete_gaussian",
    "make_zipf",
    "make_geometric",
    "make_poisson",
    "make_categorical",
    "dist_from_json",
    "dist_to_json",
    "load_dist",
]

#: Largest tolerated drift of the total mass from 1.
NORMALIZATION_TOL = 2.0 ** -40

_LOG2E = math.log2(math.e)
# Explicit distributions above this size are never materialized.
_MATERIALIZE_LIMIT = 1 << 26


class DistributionError(ValueError):
    """Raised for invalid distribution parameters or literals."""


def log2_sum_exp2(values) -> float:
    """Return ``log2(sum(2 ** v))`` without leaving the log domain.

    ``-inf`` entries are allowed and contribute nothing.  An empty input (or
    one made only of ``-inf``) gives ``-inf``.
    """
    arr = np.asarray(values, dtype=np.float64).ravel()
    if arr.size == 0:
        return -math.inf
    top = float(arr.max())
    if top == -math.inf:
        return -math.inf
    if top == math.inf:
        return math.inf
    scaled = np.exp2(arr - top)
    if scaled.size <= 1 << 16:
        total = math.fsum(scaled.tolist())
    else:
        total = float(np.sum(scaled))
    return top + math.log2(total)


def _log2_rational(q: Fraction) -> float:
    # math.log2 on big ints is exact to rounding; avoids float underflow of q.
    return math.log2(q.numerator) - math.log2(q.denominator)


def _is_rational(x) -> bool:
    return isinstance(x, Rational) and not isinstance(x, bool)


def _check_normalized(log_probs: np.ndarray) -> None:
    total = log2_sum_exp2(log_probs)
    if not abs(math.expm1(total * math.log(2))) <= NORMALIZATION_TOL:
        raise DistributionError(
            f"probabilities sum to 2**{total:.3e} != 1 (tolerance {NORMALIZATION_TOL:.1e})"
        )


class _Finite:
    """Entropy interface shared by the explicit (non-product) distributions."""

    def log2_power_sum(self, alpha: float) -> float:
        """``log2(sum_x P(x) ** alpha)``."""
        return log2_sum_exp2(alpha * self._log_probs_array)

    def shannon(self) -> float:
        lp = self._log_probs_array
        return -math.fsum((np.exp2(lp) * lp).tolist())

    @property
    def max_log_prob(self) -> float:
        return float(np.max(self._log_probs_array))

    @property
    def log2_key_space(self) -> float:
        return math.log2(self.key_space_size)


@dataclass(frozen=True)
class AtomDistribution(_Finite):
    """Probability mass function of one key symbol.

    ``probs`` carries exact rational masses when the distribution was built
    from rationals; :mod:`keyguess.ranking` then breaks probability ties
    exactly instead of within a float tolerance band.
    """

    support: tuple[int, ...]
    log_probs: tuple[float, ...]
    probs: tuple[Fraction, ...] | None = None
    family: str | None = field(default=None, compare=False)
    params: tuple[tuple[str, Any], ...] = field(default=(), compare=False)

    def __post_init__(self):
        if len(self.support) == 0:
            raise DistributionError("support must contain at least one symbol")
        if len(self.support) != len(self.log_probs):
            raise DistributionError("support and log_probs differ in length")
        if len(set(self.support)) != len(self.support):
            raise DistributionError("support labels must be pairwise distinct")
        for lp in self.log_probs:
            if not math.isfinite(lp) or lp > 0.0:
                raise DistributionError(f"log2-probability {lp!r} is not a finite value <= 0")
        if self.probs is not None and len(self.probs) != len(self.support):
            raise DistributionError("probs and support differ in length")
        _check_normalized(np.asarray(self.log_probs))

    @classmethod
    def from_probs(cls, support: Sequence[int], probs: Sequence, *, normalize: bool = False,
                   family: str | None = None, params: dict | None = None) -> "AtomDistribution":
        """Build from linear masses, dropping zero-mass symbols.

        Rational masses (``Fraction`` or ``int``) are kept exactly.  Unless
        ``normalize`` is set, the masses must already sum to one within
        :data:`NORMALIZATION_TOL`; they are renormalized either way.
        """
        if len(support) != len(probs):
            raise DistributionError("support and probs differ in length")
        exact = all(_is_rational(p) for p in probs)
        pairs = [(int(a), Fraction(p) if exact else float(p)) for a, p in zip(support, probs)]
        for a, p in pairs:
            if p < 0 or (not exact and not math.isfinite(p)):
                raise DistributionError(f"mass of symbol {a} is {p!r}")
        pairs = [(a, p) for a, p in pairs if p > 0]
        if not pairs:
            raise DistributionError("all masses are zero")
        labels = tuple(a for a, _ in pairs)
        if exact:
            total = sum(p for _, p in pairs)
            if not normalize and abs(float(total - 1)) > NORMALIZATION_TOL:
                raise DistributionError(f"probabilities sum to {float(total)!r}, not 1")
            qs = tuple(p / total for _, p in pairs)
            lps = tuple(_log2_rational(q) for q in qs)
            return cls(labels, lps, qs, family, tuple(sorted((params or {}).items())))
        total = math.fsum(p for _, p in pairs)
        if not normalize and abs(total - 1.0) > NORMALIZATION_TOL:
            raise DistributionError(f"probabilities sum to {total!r}, not 1")
        lps = tuple(math.log2(p) - math.log2(total) for _, p in pairs)
        return cls(labels, _renormalize(lps), None, family, tuple(sorted((params or {}).items())))

    @classmethod
    def from_log_probs(cls, support: Sequence[int], log_probs: Sequence[float], *,
                       family: str | None = None, params: dict | None = None) -> "AtomDistribution":
        lps = [float(v) for v in log_probs]
        keep = [(int(a), v) for a, v in zip(support, lps) if v != -math.inf]
        if not keep:
            raise DistributionError("all masses are zero")
        labels = tuple(a for a, _ in keep)
        vals = np.array([v for _, v in keep])
        drift = log2_sum_exp2(vals)
        if abs(math.expm1(drift * math.log(2))) > NORMALIZATION_TOL:
            raise DistributionError(f"probabilities sum to 2**{drift!r}, not 1")
        return cls(labels, _renormalize(tuple(vals.tolist())), None, family,
                   tuple(sorted((params or {}).items())))

    @property
    def size(self) -> int:
        return len(self.support)

    @property
    def key_space_size(self) -> int:
        return len(self.support)

    @property
    def is_exact(self) -> bool:
        return self.probs is not None

    @cached_property
    def _log_probs_array(self) -> np.ndarray:
        return np.asarray(self.log_probs, dtype=np.float64)

    @cached_property
    def linear_probs(self) -> np.ndarray:
        if self.probs is not None:
            return np.array([float(q) for q in self.probs])
        return np.exp2(self._log_probs_array)

    def index_of(self, label: int) -> int:
        try:
            return self._index[label]
        except KeyError:
            raise DistributionError(f"symbol {label!r} is not in the support") from None

    @cached_property
    def _index(self) -> dict[int, int]:
        return {a: i for i, a in enumerate(self.support)}

    def __pow__(self, n: int) -> "ProductDistribution":
        return ProductDistribution(self, n)


def _renormalize(lps: tuple[float, ...]) -> tuple[float, ...]:
    shift = log2_sum_exp2(lps)
    return tuple(min(v - shift, 0.0) for v in lps)


@dataclass(frozen=True)
class ProductDistribution:
    """The ``n``-fold product of an atom; keys are length-``n`` symbol tuples."""

    atom: AtomDistribution
    n: int

    def __post_init__(self):
        if not isinstance(self.n, int) or isinstance(self.n, bool) or self.n < 1:
            raise DistributionError(f"n must be a positive integer, got {self.n!r}")

    @property
    def key_space_size(self) -> int:
        return self.atom.size ** self.n

    @property
    def log2_key_space(self) -> float:
        return self.n * math.log2(self.atom.size)

    @property
    def max_log_prob(self) -> float:
        return self.n * self.atom.max_log_prob

    def log2_power_sum(self, alpha: float) -> float:
        return self.n * self.atom.log2_power_sum(alpha)

    def shannon(self) -> float:
        return self.n * self.atom.shannon()

    def log_prob(self, key: Sequence[int]) -> float:
        if len(key) != self.n:
            raise DistributionError(f"key has length {len(key)}, expected {self.n}")
        return math.fsum(self.atom.log_probs[self.atom.index_of(a)] for a in key)


class ExplicitDistribution(_Finite):
    """A distribution given by the full list of its key probabilities."""

    def __init__(self, log_probs, labels: Sequence | None = None, *,
                 family: str | None = None, params: dict | None = None):
        arr = np.asarray(log_probs, dtype=np.float64).ravel()
        if arr.size == 0:
            raise DistributionError("distribution has empty support")
        if not np.all(np.isfinite(arr)) or np.any(arr > 0):
            raise DistributionError("log2-probabilities must be finite and <= 0 "
                                    "(drop zero-mass keys from the support)")
        _check_normalized(arr)
        arr = arr - log2_sum_exp2(arr)
        np.minimum(arr, 0.0, out=arr)
        arr.flags.writeable = False
        self._lp = arr
        self.labels = tuple(labels) if labels is not None else tuple(range(1, arr.size + 1))
        if len(self.labels) != arr.size:
            raise DistributionError("labels and log2_probs differ in length")
        self.family = family
        self.params = dict(params or {})

    @classmethod
    def from_probs(cls, probs, labels=None, *, normalize=False) -> "ExplicitDistribution":
        p = np.asarray(probs, dtype=np.float64)
        if np.any(p < 0) or not np.all(np.isfinite(p)):
            raise DistributionError("masses must be finite and non-negative")
        if labels is not None:
            labels = [a for a, q in zip(labels, p) if q > 0]
        p = p[p > 0]
        total = math.fsum(p.tolist())
        if not normalize and abs(total - 1.0) > NORMALIZATION_TOL:
            raise DistributionError(f"probabilities sum to {total!r}, not 1")
        return cls(np.log2(p) - math.log2(total), labels)

    @property
    def log_probs(self) -> np.ndarray:
        return self._lp

    @property
    def _log_probs_array(self) -> np.ndarray:
        return self.log_probs

    @property
    def size(self) -> int:
        return int(self._lp.size)

    @property
    def key_space_size(self) -> int:
        return self.size

    def __repr__(self):
        return f"ExplicitDistribution(size={self.size})"


class ZipfDistribution(ExplicitDistribution):
    """Zipf law ``P(i) = i**-t / c(N, t)`` on ``{1, ..., N}``.

    Power sums use the Hurwitz zeta identity
    ``sum_{i<=N} i**-s = zeta(s) - zeta(s, N + 1)``, so entropies cost
    O(1) even for ``N`` in the hundreds of millions.  The explicit
    probability vector is only built on demand.
    """

    def __init__(self, N: int, t: float):
        self.N = int(N)
        self.t = float(t)
        self.family = "zipf"
        self.params = {"N": self.N, "t": self.t}

    @property
    def size(self) -> int:
        return self.N

    @property
    def labels(self):
        return range(1, self.N + 1)

    @cached_property
    def log_probs(self) -> np.ndarray:
        if self.N > _MATERIALIZE_LIMIT:
            raise DistributionError(f"Zipf support of {self.N} keys is too large to materialize")
        i = np.arange(1, self.N + 1, dtype=np.float64)
        arr = -self.t * np.log2(i) - float(self._log2_norm)
        arr.flags.writeable = False
        return arr

    def _power_sum(self, s, derivative: int = 0):
        # Sum_{i=1}^N i**-s (derivative=0) or its s-derivative; analytic in s,
        # so the pole of zeta at s = 1 is stepped around symmetrically.
        def f(x):
            return mpmath.zeta(x, 1, derivative) - mpmath.zeta(x, self.N + 1, derivative)

        with mpmath.workdps(40):
            s = mpmath.mpf(s)
            if abs(s - 1) < mpmath.mpf("1e-8"):
                h = mpmath.mpf("1e-15")
                return (f(1 + h) + f(1 - h)) / 2
            return f(s)

    @cached_property
    def _log2_norm(self):
        with mpmath.workdps(40):
            return mpmath.log(self._power_sum(self.t), 2)

    def log2_power_sum(self, alpha: float) -> float:
        with mpmath.workdps(40):
            val = mpmath.log(self._power_sum(self.t * alpha), 2) - alpha * self._log2_norm
        return float(val)

    def shannon(self) -> float:
        with mpmath.workdps(40):
            c = self._power_sum(self.t)
            # -sum p log2 p = log2 c + (t / c) * sum i**-t log2 i
            weighted = -self._power_sum(self.t, 1) / mpmath.log(2)
            val = mpmath.log(c, 2) + self.t * weighted / c
        return float(val)

    @property
    def max_log_prob(self) -> float:
        return -float(self._log2_norm)

    def __repr__(self):
        return f"ZipfDistribution(N={self.N}, t={self.t})"


Distribution = AtomDistribution | ProductDistribution | ExplicitDistribution


# -- entropy family -----------------------------------------------------------


def renyi_entropy(d, alpha: float) -> float:
    """Renyi entropy of order ``alpha`` in bits.

    ``alpha`` must be positive and different from 1; use
    :func:`shannon_entropy` for the ``alpha -> 1`` limit.
    """
    try:
        alpha = float(alpha)
    except (TypeError, ValueError):
        raise DistributionError(f"alpha must be a real number, got {alpha!r}") from None
    if not alpha > 0:
        raise DistributionError(f"alpha must be positive, got {alpha!r}")
    if alpha == 1.0:
        raise DistributionError("alpha = 1 is the Shannon entropy; call shannon_entropy")
    if alpha == math.inf:
        return min_entropy(d)
    h = d.log2_power_sum(alpha) / (1.0 - alpha)
    return max(h, 0.0)


def shannon_entropy(d) -> float:
    """Shannon entropy in bits."""
    return max(d.shannon(), 0.0)


def min_entropy(d) -> float:
    """``-log2`` of the largest mass."""
    return max(-d.max_log_prob, 0.0)


def hartley_entropy(d) -> float:
    """``H_0``: log2 of the support size."""
    return d.log2_key_space


# -- constructors -------------------------------------------------------------


def _param_error(name: str, value, rule: str) -> DistributionError:
    shown = str(value) if isinstance(value, Fraction) else repr(value)
    return DistributionError(f"parameter {name}={shown} out of range: need {rule}")


def _real(name, value):
    if isinstance(value, bool):
        raise _param_error(name, value, "a real number")
    if _is_rational(value):
        return Fraction(value)
    try:
        v = float(value)
    except (TypeError, ValueError):
        raise _param_error(name, value, "a real number") from None
    if not math.isfinite(v):
        raise _param_error(name, value, "a finite real")
    return v


def _integer(name, value, low=1):
    if isinstance(value, bool) or not float(value).is_integer() or int(value) < low:
        raise _param_error(name, value, f"an integer >= {low}")
    return int(value)


def make_uniform(size: int) -> AtomDistribution:
    size = _integer("size", size)
    return AtomDistribution.from_probs(range(size), [Fraction(1, size)] * size,
                                       family="uniform", params={"size": size})


def make_bernoulli(p) -> AtomDistribution:
    """``Ber(p)`` on ``{0, 1}`` with ``P(1) = p``."""
    p = _real("p", p)
    if not 0 < p < 1:
        raise _param_error("p", p, "0 < p < 1")
    return AtomDistribution.from_probs((0, 1), (1 - p, p), family="bernoulli", params={"p": p})


def make_ternary(p) -> AtomDistribution:
    """``T(p)`` on ``{-1, 0, 1}`` with ``P(-1) = P(1) = p/2``.

    ``p = 1`` is accepted and gives the uniform distribution on ``{-1, 1}``.
    """
    p = _real("p", p)
    if not 0 < p <= 1:
        raise _param_error("p", p, "0 < p <= 1")
    half = p / 2
    return AtomDistribution.from_probs((-1, 0, 1), (half, 1 - p, half),
                                       family="ternary", params={"p": p})


def make_binomial(m) -> AtomDistribution:
    """Centered-binomial source ``Bin(m, 1/2)`` on ``{0, ..., m}``."""
    m = _integer("m", m)
    probs = [Fraction(math.comb(m, i), 2 ** m) for i in range(m + 1)]
    return AtomDistribution.from_probs(range(m + 1), probs, family="binomial", params={"m": m})


def make_discrete_gaussian(bound, sigma) -> AtomDistribution:
    """Discrete Gaussian on ``{-bound, ..., bound}``, renormalized on that support."""
    bound = _integer("bound", bound)
    sigma = float(_real("sigma", sigma))
    if not sigma > 0:
        raise _param_error("sigma", sigma, "sigma > 0")
    j = np.arange(-bound, bound + 1, dtype=np.float64)
    raw = -(j * j) / (2.0 * sigma * sigma) * _LOG2E
    lps = raw - log2_sum_exp2(raw)
    return AtomDistribution.from_log_probs(range(-bound, bound + 1), lps, family="gaussian",
                                           params={"bound": bound, "sigma": sigma})


def make_zipf(N, t) -> ZipfDistribution:
    """Zipf law on ``{1, ..., N}`` with exponent ``t``; not a product distribution."""
    N = _integer("N", N)
    t = float(_real("t", t))
    if not t > 0:
        raise _param_error("t", t, "t > 0")
    return ZipfDistribution(N, t)


def make_geometric(N, p) -> AtomDistribution:
    """Truncated geometric ``P(i) ~ (1-p)**i`` on ``{0, ..., N}``."""
    N = _integer("N", N)
    p = _real("p", p)
    if not 0 < p < 1:
        raise _param_error("p", p, "0 < p < 1")
    params = {"N": N, "p": p}
    if isinstance(p, Fraction):
        q = 1 - p
        return AtomDistribution.from_probs(range(N + 1), [q ** i for i in range(N + 1)],
                                           normalize=True, family="geometric", params=params)
    raw = np.arange(N + 1, dtype=np.float64) * math.log2(1.0 - p)
    return AtomDistribution.from_log_probs(range(N + 1), raw - log2_sum_exp2(raw),
                                           family="geometric", params=params)


def make_poisson(N, lam) -> AtomDistribution:
    """Truncated Poisson ``P(k) ~ lam**k / k!`` on ``{0, ..., N}``."""
    N = _integer("N", N)
    lam = _real("lambda", lam)
    if not lam > 0:
        raise _param_error("lambda", lam, "lambda > 0")
    params = {"N": N, "lambda": lam}
    if isinstance(lam, Fraction):
        w = [lam ** k / math.factorial(k) for k in range(N + 1)]
        return AtomDistribution.from_probs(range(N + 1), w, normalize=True,
                                           family="poisson", params=params)
    k = np.arange(N + 1, dtype=np.float64)
    lgam = np.array([math.lgamma(x + 1.0) for x in k])
    raw = k * math.log2(lam) - lgam * _LOG2E
    return AtomDistribution.from_log_probs(range(N + 1), raw - log2_sum_exp2(raw),
                                           family="poisson", params=params)


def make_categorical(labels, probs=None, log2_probs=None, normalize=False) -> AtomDistribution:
    if (probs is None) == (log2_probs is None):
        raise DistributionError("give exactly one of probs or log2_probs")
    if probs is not None:
        return AtomDistribution.from_probs(labels, probs, normalize=normalize)
    return AtomDistribution.from_log_probs(labels, log2_probs)


# -- JSON literals ------------------------------------------------------------

_FAMILIES = {
    "uniform": (make_uniform, ("size",)),
    "bernoulli": (make_bernoulli, ("p",)),
    "ternary": (make_ternary, ("p",)),
    "binomial": (make_binomial, ("m",)),
    "gaussian": (make_discrete_gaussian, ("bound", "sigma")),
    "zipf": (make_zipf, ("N", "t")),
    "geometric": (make_geometric, ("N", "p")),
    "poisson": (make_poisson, ("N", "lambda")),
}
FAMILY_NAMES = tuple(_FAMILIES)


def _decode_number(v):
    # "1/4" style strings select the exact rational code path.
    if isinstance(v, str):
        try:
            return Fraction(v) if "/" in v else float(v)
        except (ValueError, ZeroDivisionError):
            raise DistributionError(f"cannot parse number {v!r}") from None
    return v


def _encode_number(v):
    if isinstance(v, Fraction):
        return str(v) if v.denominator != 1 else v.numerator
    return v


def make_family(kind: str, **params):
    """Construct a named family from keyword parameters."""
    try:
        ctor, names = _FAMILIES[kind]
    except KeyError:
        raise DistributionError(f"unknown distribution kind {kind!r}; "
                                f"expected one of {sorted(_FAMILIES) + ['categorical', 'explicit']}") from None
    missing = [k for k in names if k not in params]
    extra = sorted(set(params) - set(names))
    if missing or extra:
        raise DistributionError(f"{kind} takes parameters {list(names)}; "
                                f"missing {missing}, unexpected {extra}")
    return ctor(*(_decode_number(params[k]) for k in names))


def dist_from_json(doc) -> AtomDistribution | ExplicitDistribution:
    """Decode a distribution literal (a dict, or a JSON string)."""
    if isinstance(doc, (str, bytes)):
        try:
            doc = json.loads(doc)
        except json.JSONDecodeError as exc:
            raise DistributionError(f"malformed distribution JSON: {exc}") from None
    if not isinstance(doc, dict) or "kind" not in doc:
        raise DistributionError('distribution literal must be an object with a "kind" field')
    kind = doc["kind"]
    if kind == "explicit":
        if "log2_probs" not in doc:
            raise DistributionError('explicit distribution needs "log2_probs"')
        return ExplicitDistribution(doc["log2_probs"], doc.get("labels"))
    if kind == "categorical":
        if "labels" not in doc:
            raise DistributionError('categorical distribution needs "labels"')
        probs = doc.get("probs")
        if probs is not None:
            probs = [_decode_number(p) for p in probs]
        return make_categorical(doc["labels"], probs, doc.get("log2_probs"),
                                normalize=bool(doc.get("normalize", False)))
    params = doc.get("params", {})
    if not isinstance(params, dict):
        raise DistributionError('"params" must be an object')
    return make_family(kind, **params)


def dist_to_json(d) -> dict:
    """Encode a distribution literal; inverse of :func:`dist_from_json`."""
    if isinstance(d, ProductDistribution):
        raise DistributionError("product distributions are encoded as atom literal plus n")
    if d.family is not None:
        params = dict(d.params)
        return {"kind": d.family, "params": {k: _encode_number(v) for k, v in params.items()}}
    if isinstance(d, AtomDistribution):
        if d.probs is not None:
            return {"kind": "categorical", "labels": list(d.support),
                    "probs": [_encode_number(q) for q in d.probs]}
        return {"kind": "categorical", "labels": list(d.support), "log2_probs": list(d.log_probs)}
    return {"kind": "explicit", "labels": list(d.labels), "log2_probs": d.log_probs.tolist()}


def load_dist(arg: str):
    """Parse a ``--dist`` argument: inline JSON, or a path to a JSON file."""
    text = arg.strip()
    if not text.startswith("{"):
        try:
            with open(arg, encoding="utf-8") as fh:
                text = fh.read()
        except OSError as exc:
            raise DistributionError(f"cannot read distribution file {arg!r}: {exc}") from None
    return dist_from_json(text)
