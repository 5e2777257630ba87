import json
import math
from fractions import Fraction

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from keyguess.distributions import (AtomDistribution, DistributionError, ExplicitDistribution,
                                    ProductDistribution, dist_from_json, dist_to_json,
                                    hartley_entropy, load_dist, log2_sum_exp2, make_bernoulli,
                                    make_binomial, make_categorical, make_discrete_gaussian,
                                    make_family, make_geometric, make_poisson, make_ternary,
                                    make_uniform, make_zipf, min_entropy, renyi_entropy,
                                    shannon_entropy)


def _mp_renyi(probs, alpha):
    """High-precision closed form used as the reference."""
    with mpmath.workdps(50):
        s = mpmath.fsum(mpmath.mpf(p) ** alpha for p in probs)
        return float(mpmath.log(s, 2) / (1 - alpha))


class TestEntropies:
    def test_uniform_orders(self):
        d = make_uniform(8)
        for a in (0.5, 2.0 / 3.0, 2.0, 7.5):
            assert renyi_entropy(d, a) == pytest.approx(3.0, abs=1e-12)
        assert min_entropy(d) == pytest.approx(3.0)
        assert shannon_entropy(make_uniform(4)) == pytest.approx(2.0)
        assert hartley_entropy(d) == pytest.approx(3.0)

    def test_bernoulli_tenth(self):
        d = make_bernoulli(0.1)
        assert renyi_entropy(d, 0.5) == pytest.approx(_mp_renyi([0.1, 0.9], 0.5), abs=1e-12)
        assert renyi_entropy(d, 0.5) == pytest.approx(0.67807, abs=1e-5)
        # 3 log2(0.1^(2/3) + 0.9^(2/3)) evaluates to 0.595909...
        assert renyi_entropy(d, 2.0 / 3.0) == pytest.approx(_mp_renyi([0.1, 0.9], Fraction(2, 3)),
                                                            abs=1e-12)
        assert renyi_entropy(d, 2.0 / 3.0) == pytest.approx(0.5959095, abs=1e-7)
        assert min_entropy(d) == pytest.approx(-math.log2(0.9), abs=1e-12)

    def test_shannon_closed_forms(self):
        assert shannon_entropy(make_bernoulli(0.2)) == pytest.approx(
            -(0.2 * math.log2(0.2) + 0.8 * math.log2(0.8)), abs=1e-12)
        assert shannon_entropy(make_bernoulli(0.2)) == pytest.approx(0.72193, abs=1e-5)
        assert shannon_entropy(make_bernoulli(0.5) ** 16) == pytest.approx(16.0)

    def test_ternary_min_entropy(self):
        assert min_entropy(make_ternary(0.375)) == pytest.approx(-math.log2(0.625), abs=1e-12)

    def test_infinite_order_is_min_entropy(self):
        d = make_bernoulli(0.3)
        assert renyi_entropy(d, math.inf) == min_entropy(d)

    @pytest.mark.parametrize("alpha", [0, -1, 1, 1.0])
    def test_rejected_orders(self, alpha):
        with pytest.raises(DistributionError):
            renyi_entropy(make_bernoulli(0.3), alpha)

    @given(st.lists(st.floats(0.01, 1.0), min_size=2, max_size=12),
           st.integers(1, 40), st.sampled_from([0.5, 2.0 / 3.0, 2.0, 3.0]))
    @settings(max_examples=60, deadline=None)
    def test_product_rule(self, weights, n, alpha):
        atom = make_categorical(list(range(len(weights))), weights, normalize=True)
        d = ProductDistribution(atom, n)
        assert renyi_entropy(d, alpha) == pytest.approx(n * renyi_entropy(atom, alpha), rel=1e-12)
        assert shannon_entropy(d) == pytest.approx(n * shannon_entropy(atom), rel=1e-12)
        assert min_entropy(d) == pytest.approx(n * min_entropy(atom), rel=1e-12)

    @given(st.lists(st.floats(1e-6, 1.0), min_size=2, max_size=30))
    @settings(max_examples=80, deadline=None)
    def test_renyi_monotone_in_order(self, weights):
        d = ExplicitDistribution.from_probs(weights, normalize=True)
        chain = [hartley_entropy(d), renyi_entropy(d, 0.5), renyi_entropy(d, 2.0 / 3.0),
                 shannon_entropy(d), renyi_entropy(d, 2.0), min_entropy(d)]
        for hi, lo in zip(chain, chain[1:]):
            assert lo <= hi + 1e-9


class TestConstructors:
    def test_binomial_masses(self):
        d = make_binomial(4)
        assert d.probs == tuple(Fraction(c, 16) for c in (1, 4, 6, 4, 1))
        assert d.support == (0, 1, 2, 3, 4)

    def test_ternary_two_thirds_is_uniform(self):
        d = make_ternary(Fraction(2, 3))
        assert sorted(d.support) == [-1, 0, 1]
        assert d.probs == (Fraction(1, 3),) * 3
        assert renyi_entropy(make_ternary(2.0 / 3.0), 0.5) == pytest.approx(math.log2(3))

    def test_ternary_one_drops_zero(self):
        d = make_ternary(1)
        assert sorted(d.support) == [-1, 1]

    def test_zipf_harmonic(self):
        d = make_zipf(5, 1.0)
        harmonic = sum(Fraction(1, i) for i in range(1, 6))
        assert float(harmonic) == pytest.approx(137 / 60)
        assert 2.0 ** d.log_probs[0] == pytest.approx(float(1 / harmonic), rel=1e-12)
        assert 2.0 ** d.log_probs[0] == pytest.approx(0.4380, abs=1e-4)

    def test_zipf_closed_forms_match_direct_sums(self):
        d = make_zipf(20_000, 0.777)
        p = np.arange(1, 20_001, dtype=float) ** -0.777
        p /= math.fsum(p.tolist())
        direct_h = -math.fsum((p * np.log2(p)).tolist())
        assert shannon_entropy(d) == pytest.approx(direct_h, rel=1e-10)
        for a in (0.5, 2.0 / 3.0):
            direct = math.log2(math.fsum((p ** a).tolist())) / (1 - a)
            assert renyi_entropy(d, a) == pytest.approx(direct, rel=1e-10)

    def test_zipf_near_one_exponent(self):
        d = make_zipf(1000, 1.0)
        p = 1.0 / np.arange(1, 1001)
        p /= p.sum()
        assert shannon_entropy(d) == pytest.approx(-(p * np.log2(p)).sum(), rel=1e-9)

    def test_gaussian_symmetric(self):
        d = make_discrete_gaussian(100, 1.0)
        assert d.size == 201
        lp = dict(zip(d.support, d.log_probs))
        assert lp[3] == pytest.approx(lp[-3])
        assert max(d.log_probs) == lp[0]

    def test_geometric_and_poisson_normalized(self):
        for d in (make_geometric(1000, 0.3), make_poisson(1000, 4.0), make_poisson(50, Fraction(1, 2))):
            assert math.fsum(2.0 ** x for x in d.log_probs) == pytest.approx(1.0, abs=1e-12)

    @pytest.mark.parametrize("make,args,name", [
        (make_bernoulli, (0.0,), "p"),
        (make_bernoulli, (1.0,), "p"),
        (make_ternary, (0.0,), "p"),
        (make_ternary, (1.5,), "p"),
        (make_binomial, (0,), "m"),
        (make_discrete_gaussian, (100, -1.0), "sigma"),
        (make_zipf, (0, 1.0), "N"),
        (make_geometric, (10, 1.5), "p"),
        (make_poisson, (10, -2.0), "lam"),
        (make_uniform, (0,), "size"),
    ])
    def test_out_of_range_names_parameter(self, make, args, name):
        with pytest.raises(DistributionError, match=name):
            make(*args)

    def test_validation(self):
        with pytest.raises(DistributionError):
            AtomDistribution.from_probs([0, 0], [0.5, 0.5])
        with pytest.raises(DistributionError):
            AtomDistribution.from_probs([0, 1], [0.5, 0.6])
        with pytest.raises(DistributionError):
            ExplicitDistribution([0.0, -math.inf])

    def test_zero_mass_symbols_removed(self):
        d = make_categorical([7, 8, 9], [0.5, 0.0, 0.5])
        assert d.support == (7, 9)

    def test_small_drift_renormalized(self):
        d = make_categorical([0, 1], [0.5, 0.5 + 2.0 ** -45])
        assert math.fsum(2.0 ** x for x in d.log_probs) == pytest.approx(1.0, abs=1e-15)


class TestLogSumExp:
    def test_matches_direct(self):
        vals = np.random.default_rng(0).uniform(-50, 0, 1000)
        assert log2_sum_exp2(vals) == pytest.approx(math.log2(np.exp2(vals).sum()), rel=1e-12)

    def test_underflow_safe(self):
        assert log2_sum_exp2([-5000.0, -5000.0]) == pytest.approx(-4999.0)
        assert log2_sum_exp2([]) == -math.inf


class TestJson:
    @pytest.mark.parametrize("doc", [
        {"kind": "bernoulli", "params": {"p": 0.1}},
        {"kind": "bernoulli", "params": {"p": "1/4"}},
        {"kind": "ternary", "params": {"p": 0.375}},
        {"kind": "binomial", "params": {"m": 6}},
        {"kind": "gaussian", "params": {"bound": 100, "sigma": 1.0}},
        {"kind": "zipf", "params": {"N": 1000, "t": 0.777}},
        {"kind": "geometric", "params": {"N": 1000, "p": 0.2}},
        {"kind": "poisson", "params": {"N": 1000, "lambda": 3.0}},
        {"kind": "uniform", "params": {"size": 5}},
        {"kind": "explicit", "labels": [0, 1, 2], "log2_probs": [-1.0, -2.0, -2.0]},
    ])
    def test_roundtrip(self, doc):
        d = dist_from_json(json.dumps(doc))
        again = dist_from_json(json.loads(json.dumps(dist_to_json(d))))
        assert np.allclose(np.asarray(again.log_probs), np.asarray(d.log_probs), rtol=0, atol=1e-15)

    def test_rational_survives(self):
        d = dist_from_json({"kind": "bernoulli", "params": {"p": "1/4"}})
        assert d.is_exact
        assert dist_to_json(d)["params"]["p"] == "1/4"

    def test_family_by_name(self):
        assert make_family("bernoulli", p=0.3) == make_bernoulli(0.3)

    @pytest.mark.parametrize("text", ['{"kind": "bern', '[1, 2]', '{"params": {}}',
                                      '{"kind": "nosuch", "params": {}}',
                                      '{"kind": "bernoulli", "params": {"q": 0.1}}'])
    def test_malformed(self, text):
        with pytest.raises(DistributionError):
            dist_from_json(text)

    def test_load_from_file(self, tmp_path):
        f = tmp_path / "d.json"
        f.write_text('{"kind": "bernoulli", "params": {"p": 0.2}}')
        assert load_dist(str(f)) == make_bernoulli(0.2)
        with pytest.raises(DistributionError):
            load_dist(str(tmp_path / "missing.json"))
