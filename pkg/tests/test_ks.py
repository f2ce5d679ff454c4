import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as hst

from abmcal.ks import (NEGATIVE, POSITIVE, c_alpha, compare, critical_value, ks_statistic, label,
                       to_cdf)
from abmcal.params import DimensionError


def brute_ks(a, b):
    """Scaled cumulative curves built with plain loops, then the sup-gap."""
    def cdf(x):
        total = sum(x)
        run, out = 0.0, []
        for v in x:
            run += v
            out.append(run / total)
        return out
    if sum(a) == 0 or sum(b) == 0:
        return 0.0 if sum(a) == sum(b) == 0 else 1.0
    return max(abs(p - q) for p, q in zip(cdf(a), cdf(b)))


def test_cdf_examples():
    assert np.allclose(to_cdf([1, 2, 3]).values, [1 / 6, 1 / 2, 1])
    assert to_cdf([7]).values.tolist() == [1.0]
    assert to_cdf([0, 0, 0]).degenerate


def test_statistic_examples():
    a = to_cdf([1, 2, 3])
    assert ks_statistic(a, a) == 0.0
    assert ks_statistic(a, to_cdf([3, 2, 1])) == pytest.approx(1 / 3)
    assert ks_statistic(a, to_cdf([0, 0, 0])) == 1.0
    assert ks_statistic(to_cdf([0, 0]), to_cdf([0, 0])) == 0.0
    with pytest.raises(DimensionError):
        ks_statistic(a, to_cdf([1, 2]))


def test_critical_values():
    assert c_alpha(0.05) == pytest.approx(1.2239, abs=1e-4)
    assert critical_value(0.05, 100) == pytest.approx(0.17307, abs=1e-4)
    vals = [critical_value(0.05, n) for n in (10, 100, 500, 1000)]
    assert all(x > y for x, y in zip(vals, vals[1:]))
    with pytest.raises(ValueError):
        c_alpha(1.0)


def test_labels():
    assert label(0.0, 0.1) == POSITIVE
    assert label(1.0, 0.05) == NEGATIVE
    assert label(0.05, 0.05) == POSITIVE


def test_compare_bundles_both():
    out = compare(to_cdf([1, 2, 3]), [1, 2, 3], 0.05, 100)
    assert out.statistic == 0 and out.label == POSITIVE


def test_matches_loop_oracle():
    rng = np.random.default_rng(0)
    for _ in range(1000):
        n = int(rng.integers(1, 60))
        a = rng.integers(0, 50, n) * (rng.random(n) < 0.8)
        b = rng.integers(0, 50, n) * (rng.random(n) < 0.8)
        got = ks_statistic(to_cdf(a), to_cdf(b))
        assert abs(got - brute_ks(a.tolist(), b.tolist())) <= 1e-12
    for _ in range(1000):
        alpha = float(rng.uniform(1e-6, 1 - 1e-6))
        n = int(rng.integers(1, 10**6))
        ref = math.sqrt(-0.5 * math.log(alpha)) * math.sqrt(2 * n / n**2)
        assert abs(critical_value(alpha, n) - ref) <= 1e-12


@settings(max_examples=100, deadline=None)
@given(hst.lists(hst.integers(0, 1000), min_size=1, max_size=50), hst.data())
def test_statistic_properties(a, data):
    b = data.draw(hst.lists(hst.integers(0, 1000), min_size=len(a), max_size=len(a)))
    ca, cb = to_cdf(a), to_cdf(b)
    d = ks_statistic(ca, cb)
    assert 0.0 <= d <= 1.0
    assert d == ks_statistic(cb, ca)
    # scale invariance
    assert ks_statistic(ca, to_cdf([3 * x for x in b])) == pytest.approx(d, abs=1e-12)
    if not ca.degenerate:
        assert np.all(np.diff(ca.values) >= 0) and ca.values[-1] == pytest.approx(1.0)
