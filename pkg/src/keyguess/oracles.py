"""Brute-force reference computations for small key spaces.

These enumerate every key of ``atom ** n`` explicitly and share no code
with the type-class machinery, so they can serve as independent oracles.
"""

from __future__ import annotations

import itertools
import math

from .distributions import ProductDistribution
from .ranking import TIE_TOL


def key_order(d: ProductDistribution) -> list[tuple[int, ...]]:
    """All keys, most likely first, under the documented tie-break.

    Exact rational atoms are compared exactly.  Float atoms compare
    log-probabilities with the same tolerance band the rank table uses, by
    chaining consecutive keys whose probabilities differ by less than it.
    """
    atom = d.atom
    k = atom.size
    keys = list(itertools.product(range(k), repeat=d.n))

    def counts(key):
        # A counts vector is lexicographically smaller exactly when the
        # sorted key is lexicographically larger, so negate the sorted key.
        return tuple(-a for a in sorted(key))

    if atom.probs is not None:
        # integer numerators over a common denominator compare exactly
        den = math.lcm(*(q.denominator for q in atom.probs))
        w = [q.numerator * (den // q.denominator) for q in atom.probs]

        def weight(key):
            return math.prod(w[a] for a in key)
        keys.sort(key=lambda key: (-weight(key), counts(key), key))
    else:
        lp = {key: math.fsum(atom.log_probs[a] for a in key) for key in keys}
        keys.sort(key=lambda key: -lp[key])
        bands, band = [], [keys[0]]
        for prev, key in zip(keys, keys[1:]):
            if lp[prev] - lp[key] < TIE_TOL:
                band.append(key)
            else:
                bands.append(band)
                band = [key]
        bands.append(band)
        keys = [key for band in bands for key in sorted(band, key=lambda x: (counts(x), x))]
    labels = atom.support
    return [tuple(labels[a] for a in key) for key in keys]
