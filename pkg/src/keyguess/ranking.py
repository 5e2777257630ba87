"""Rank/key conversion for product distributions via type classes.

All keys of ``atom ** n`` with the same symbol multiplicities (a type class,
or composition of ``n``) share one probability.  Sorting the
``C(n + |A| - 1, |A| - 1)`` classes once gives every rank in
``1 .. |A| ** n`` a home: a binary search over cumulative class sizes finds
the block, and lexicographic multiset-permutation unranking finds the key
inside it.

Order convention (total, deterministic):

* classes by decreasing probability;
* equiprobable classes by lexicographically smaller counts vector first
  (counts indexed in support order);
* keys inside a class in lexicographic order of support indices.

Classes whose float log-probabilities are within :data:`TIE_TOL` bits are
treated as equiprobable, unless the atom carries exact rational masses, in
which case the band is re-sorted by exact probability.
"""

from __future__ import annotations

import bisect
import itertools
import json
import math
import struct
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import BinaryIO, Sequence

import numpy as np

from .distributions import (AtomDistribution, DistributionError, ProductDistribution,
                            dist_from_json, dist_to_json, shannon_entropy)

__all__ = [
    "TIE_TOL",
    "DEFAULT_CLASS_BUDGET",
    "BudgetExceeded",
    "TypeClass",
    "RankTable",
    "class_count",
    "build_rank_table",
    "cached_rank_table",
    "get_key",
    "rank_of_key",
    "cumulative_mass",
    "core_set_size",
    "save_rank_table",
    "load_rank_table",
]

TIE_TOL = 2.0 ** -30
DEFAULT_CLASS_BUDGET = 10 ** 8


class BudgetExceeded(MemoryError):
    """The number of type classes exceeds the configured budget."""


@dataclass(frozen=True)
class TypeClass:
    """One composition of ``n``, stored sparsely as ``((symbol, count), ...)``.

    Symbols are support indices in increasing order and every count is
    positive, so large alphabets cost nothing for the symbols a class omits.
    """

    parts: tuple[tuple[int, int], ...]
    log_prob: float
    cardinality: int
    alphabet: int

    @property
    def counts(self) -> tuple[int, ...]:
        """Dense counts vector indexed by support position."""
        dense = [0] * self.alphabet
        for a, c in self.parts:
            dense[a] = c
        return tuple(dense)


def _order_key(parts) -> tuple:
    # Sorting by this matches sorting dense counts vectors lexicographically:
    # at the first differing symbol, the vector lacking it (or having fewer)
    # is smaller, and a larger negated symbol index means "lacks it".
    return tuple((-a, c) for a, c in parts)


def _sparse(counts: Sequence[int]) -> tuple[tuple[int, int], ...]:
    return tuple((a, int(c)) for a, c in enumerate(counts) if c)


@dataclass(frozen=True, eq=False)
class RankTable:
    dist: ProductDistribution
    classes: tuple[TypeClass, ...]
    cum_counts: tuple[int, ...]
    cum_log_mass: tuple[float, ...]

    @property
    def n(self) -> int:
        return self.dist.n

    @property
    def atom(self) -> AtomDistribution:
        return self.dist.atom

    @property
    def key_space_size(self) -> int:
        return self.cum_counts[-1]

    def class_index(self, counts: Sequence[int]) -> int:
        """Position of the class with the given dense counts vector."""
        if len(counts) != self.atom.size:
            raise DistributionError(f"counts vector has length {len(counts)}, "
                                    f"expected {self.atom.size}")
        return self._class_index(_sparse(counts))

    def _class_index(self, parts) -> int:
        try:
            return self._by_parts[parts]
        except KeyError:
            raise DistributionError(f"counts {parts} do not form a type class") from None

    @property
    def _by_parts(self) -> dict:
        cache = self.__dict__.get("_by_parts_cache")
        if cache is None:
            cache = {c.parts: i for i, c in enumerate(self.classes)}
            object.__setattr__(self, "_by_parts_cache", cache)
        return cache

    def block(self, idx: int) -> tuple[int, int]:
        """Inclusive rank range ``(first, last)`` of class ``idx``."""
        start = self.cum_counts[idx - 1] if idx else 0
        return start + 1, self.cum_counts[idx]


def class_count(alphabet: int, n: int) -> int:
    return math.comb(n + alphabet - 1, alphabet - 1)


def _compositions(n: int, k: int):
    """Sparse compositions of ``n`` into ``k`` parts, one per size-``n`` multiset."""
    for multiset in itertools.combinations_with_replacement(range(k), n):
        yield tuple((a, len(list(g))) for a, g in itertools.groupby(multiset))


def _exact_prob(probs: Sequence[Fraction], parts) -> Fraction:
    out = Fraction(1)
    for a, c in parts:
        out *= probs[a] ** c
    return out


def build_rank_table(d: ProductDistribution, budget: int = DEFAULT_CLASS_BUDGET) -> RankTable:
    """Enumerate and sort the type classes of ``d``."""
    atom, n = d.atom, d.n
    k = atom.size
    total_classes = class_count(k, n)
    if total_classes > budget:
        raise BudgetExceeded(f"{k} symbols and n={n} give {total_classes} type classes, "
                             f"above the budget of {budget}")
    lps = atom.log_probs
    fact = [1] * (n + 1)
    for i in range(2, n + 1):
        fact[i] = fact[i - 1] * i

    raw = []
    for parts in _compositions(n, k):
        lp = math.fsum(c * lps[a] for a, c in parts)
        denom = 1
        for _, c in parts:
            denom *= fact[c]
        raw.append(TypeClass(parts, lp, fact[n] // denom, k))
    raw.sort(key=lambda tc: (-tc.log_prob, _order_key(tc.parts)))

    ordered: list[TypeClass] = []
    i = 0
    while i < len(raw):
        j = i + 1
        while j < len(raw) and raw[j - 1].log_prob - raw[j].log_prob < TIE_TOL:
            j += 1
        band = raw[i:j]
        if len(band) > 1:
            if atom.probs is not None:
                band.sort(key=lambda tc: (-_exact_prob(atom.probs, tc.parts), _order_key(tc.parts)))
            else:
                band.sort(key=lambda tc: _order_key(tc.parts))
        ordered.extend(band)
        i = j

    cum_counts = tuple(itertools.accumulate(tc.cardinality for tc in ordered))
    log_mass = np.array([math.log2(tc.cardinality) + tc.log_prob for tc in ordered])
    cum_log_mass = tuple(np.logaddexp2.accumulate(log_mass).tolist())
    return RankTable(d, tuple(ordered), cum_counts, cum_log_mass)


@lru_cache(maxsize=32)
def cached_rank_table(d: ProductDistribution) -> RankTable:
    return build_rank_table(d)


def _as_table(obj) -> RankTable:
    if isinstance(obj, RankTable):
        return obj
    if isinstance(obj, ProductDistribution):
        return cached_rank_table(obj)
    raise TypeError(f"expected a RankTable or ProductDistribution, got {type(obj).__name__}")


def _check_rank(tbl: RankTable, i, low: int) -> int:
    if isinstance(i, bool) or not isinstance(i, (int, np.integer)):
        raise TypeError(f"rank must be an integer, got {i!r}")
    i = int(i)
    if not low <= i <= tbl.key_space_size:
        raise IndexError(f"rank {i} outside [{low}, {tbl.key_space_size}]")
    return i


def get_key(tbl, i: int, *, counter: dict | None = None) -> tuple[int, ...]:
    """Return the ``i``-th most likely key (1-based) as a tuple of labels.

    Each position costs four big-integer operations (one division locates
    the next symbol, the rest update the offset and the sub-class size);
    the scan over the class's symbols only touches small integers.
    ``counter``, if given, accumulates the count under ``"bigint_ops"``.
    """
    tbl = _as_table(tbl)
    i = _check_rank(tbl, i, 1)
    cls = bisect.bisect_left(tbl.cum_counts, i)
    ops = max(1, len(tbl.cum_counts).bit_length())
    start = tbl.cum_counts[cls - 1] if cls else 0
    tc = tbl.classes[cls]
    pos = i - start - 1
    symbols = [tbl.atom.support[a] for a, _ in tc.parts]
    counts = [c for _, c in tc.parts]
    total = tc.cardinality
    remaining = tbl.n
    key = []
    while remaining:
        # keys starting with symbol j occupy total * counts[j] / remaining
        # consecutive offsets, so the next symbol is the first whose
        # running count exceeds floor(pos * remaining / total)
        q = pos * remaining // total
        acc = 0
        j = 0
        while acc + counts[j] <= q:
            acc += counts[j]
            j += 1
        key.append(symbols[j])
        pos -= total * acc // remaining
        total = total * counts[j] // remaining
        counts[j] -= 1
        remaining -= 1
    ops += 4 * tbl.n
    if counter is not None:
        counter["bigint_ops"] = counter.get("bigint_ops", 0) + ops
    return tuple(key)


def rank_of_key(tbl, key: Sequence[int]) -> int:
    """Inverse of :func:`get_key`."""
    tbl = _as_table(tbl)
    atom = tbl.atom
    if len(key) != tbl.n:
        raise DistributionError(f"key has length {len(key)}, expected {tbl.n}")
    try:
        idx = [atom._index[a] for a in key]
    except (KeyError, TypeError):
        bad = next(a for a in key if a not in atom.support)
        raise DistributionError(f"symbol {bad!r} is not in the support") from None
    counts: dict[int, int] = {}
    for a in idx:
        counts[a] = counts.get(a, 0) + 1
    parts = tuple(sorted(counts.items()))
    cls = tbl._class_index(parts)
    start = tbl.cum_counts[cls - 1] if cls else 0
    total = tbl.classes[cls].cardinality
    remaining = tbl.n
    symbols = [a for a, _ in parts]
    pos = 0
    for a in idx:
        below = 0
        for b in symbols:
            if b >= a:
                break
            below += counts[b]
        if below:
            pos += total * below // remaining
        total = total * counts[a] // remaining
        counts[a] -= 1
        remaining -= 1
    return start + pos + 1


def cumulative_mass(tbl, t: int) -> float:
    """``log2`` of the total mass of the ``t`` most likely keys."""
    tbl = _as_table(tbl)
    t = _check_rank(tbl, t, 0)
    if t == 0:
        return -math.inf
    cls = bisect.bisect_left(tbl.cum_counts, t)
    if t == tbl.cum_counts[cls]:
        return tbl.cum_log_mass[cls]
    start = tbl.cum_counts[cls - 1] if cls else 0
    partial = math.log2(t - start) + tbl.classes[cls].log_prob
    if cls == 0:
        return partial
    return float(np.logaddexp2(tbl.cum_log_mass[cls - 1], partial))


def core_set_size(d, delta: float) -> int:
    """Number of keys with probability at least ``2 ** -(H(atom) + delta) * n``."""
    if not delta >= 0:
        raise DistributionError(f"delta must be non-negative, got {delta!r}")
    tbl = _as_table(d)
    n = tbl.n
    threshold = -(shannon_entropy(tbl.atom) + delta) * n
    # classes are sorted by probability, so the core set is a prefix
    size = 0
    for tc in tbl.classes:
        if tc.log_prob < threshold - TIE_TOL:
            break
        size += tc.cardinality
    return size


# -- cache file ---------------------------------------------------------------
#
# Little-endian layout, version 1:
#   header   "KGRT" | u16 version | u16 reserved | u32 alphabet | u32 n
#            | u64 class count | u32 atom-literal length | atom literal (UTF-8 JSON)
#   classes  repeated: u32 nparts | (u32 symbol, u32 count)[nparts] | f64 log_prob
#            | u32 nbytes | cardinality (nbytes, little-endian unsigned)
#   tail     f64 cum_log_mass[class count]
# Cumulative counts are re-derived on load.

_MAGIC = b"KGRT"
_VERSION = 1
_HEADER = struct.Struct("<4sHHIIQI")


def save_rank_table(tbl: RankTable, fh: BinaryIO | str) -> None:
    if isinstance(fh, str):
        with open(fh, "wb") as f:
            return save_rank_table(tbl, f)
    atom_doc = json.dumps(dist_to_json(tbl.atom), sort_keys=True).encode()
    k = tbl.atom.size
    fh.write(_HEADER.pack(_MAGIC, _VERSION, 0, k, tbl.n, len(tbl.classes), len(atom_doc)))
    fh.write(atom_doc)
    for tc in tbl.classes:
        card = tc.cardinality.to_bytes(max(1, (tc.cardinality.bit_length() + 7) // 8), "little")
        flat = [v for part in tc.parts for v in part]
        fh.write(struct.pack(f"<I{len(flat)}IdI", len(tc.parts), *flat, tc.log_prob, len(card)))
        fh.write(card)
    fh.write(struct.pack(f"<{len(tbl.classes)}d", *tbl.cum_log_mass))


def load_rank_table(fh: BinaryIO | str, expect: ProductDistribution | None = None) -> RankTable:
    if isinstance(fh, str):
        with open(fh, "rb") as f:
            return load_rank_table(f, expect)

    def read(size):
        buf = fh.read(size)
        if len(buf) != size:
            raise ValueError("truncated rank table cache")
        return buf

    magic, version, _, k, n, count, doc_len = _HEADER.unpack(read(_HEADER.size))
    if magic != _MAGIC:
        raise ValueError("not a rank table cache file")
    if version != _VERSION:
        raise ValueError(f"unsupported rank table cache version {version}")
    atom = dist_from_json(read(doc_len).decode())
    dist = ProductDistribution(atom, n)
    if expect is not None and (expect.n != n or expect.atom != atom):
        raise ValueError("rank table cache was built for a different distribution")
    classes = []
    for _ in range(count):
        (nparts,) = struct.unpack("<I", read(4))
        if not 0 < nparts <= min(k, n):
            raise ValueError("corrupt rank table cache: bad class record")
        *flat, lp, nbytes = struct.unpack(f"<{2 * nparts}IdI", read(8 * nparts + 12))
        parts = tuple(zip(flat[::2], flat[1::2]))
        classes.append(TypeClass(parts, lp, int.from_bytes(read(nbytes), "little"), k))
    cum_log_mass = struct.unpack(f"<{count}d", read(8 * count))
    cum_counts = tuple(itertools.accumulate(tc.cardinality for tc in classes))
    return RankTable(dist, tuple(classes), cum_counts, tuple(cum_log_mass))
