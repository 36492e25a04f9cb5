import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from stylseg.stats import (
    AlignmentError, DegenerateSample, LengthMismatch, TooFewPoints, group_summaries, p_bucket, pearson,
    section_correlation_matrix, significance_stars, student_t, welch_t, zscore_by_length_bins,
)


def mp_t_two_sided(t, df):
    """Two-sided Student t tail by direct quadrature of the density."""
    t, df = mpmath.mpf(t), mpmath.mpf(df)
    c = mpmath.gamma((df + 1) / 2) / (mpmath.sqrt(df * mpmath.pi) * mpmath.gamma(df / 2))
    tail = mpmath.quad(lambda u: c * (1 + u * u / df) ** (-(df + 1) / 2), [abs(t), mpmath.inf])
    return 2 * tail


def mp_welch(a, b):
    with mpmath.workdps(40):
        a = [mpmath.mpf(float(v)) for v in a]
        b = [mpmath.mpf(float(v)) for v in b]
        na, nb = len(a), len(b)
        ma, mb = sum(a) / na, sum(b) / nb
        va = sum((v - ma) ** 2 for v in a) / (na - 1)
        vb = sum((v - mb) ** 2 for v in b) / (nb - 1)
        se = va / na + vb / nb
        t = (ma - mb) / mpmath.sqrt(se)
        df = se ** 2 / ((va / na) ** 2 / (na - 1) + (vb / nb) ** 2 / (nb - 1))
        return float(t), float(mp_t_two_sided(t, df)), float(df)


def mp_pearson(x, y):
    with mpmath.workdps(40):
        x = [mpmath.mpf(float(v)) for v in x]
        y = [mpmath.mpf(float(v)) for v in y]
        n = len(x)
        mx, my = sum(x) / n, sum(y) / n
        sxy = sum((a - mx) * (b - my) for a, b in zip(x, y))
        sxx = sum((a - mx) ** 2 for a in x)
        syy = sum((b - my) ** 2 for b in y)
        r = sxy / mpmath.sqrt(sxx * syy)
        t = r * mpmath.sqrt((n - 2) / (1 - r * r))
        return float(r), float(mp_t_two_sided(t, n - 2))


class TestWelch:
    def test_identical(self):
        r = welch_t([1, 2, 3], [1, 2, 3])
        assert r.t == 0 and r.p == 1

    def test_reference_fixture(self):
        r = welch_t([1, 2, 3, 4, 5], [2, 3, 4, 5, 6])
        t, p, df = mp_welch([1, 2, 3, 4, 5], [2, 3, 4, 5, 6])
        assert abs(r.t - t) <= 1e-9 and abs(r.p - p) <= 1e-9 and abs(r.df - df) <= 1e-9
        assert r.t == pytest.approx(-1.0, abs=1e-12)

    def test_random_fixtures(self, rng):
        for _ in range(20):
            a = rng.normal(0, rng.uniform(0.5, 3), rng.integers(3, 40))
            b = rng.normal(rng.normal(), rng.uniform(0.5, 3), rng.integers(3, 40))
            r = welch_t(a, b)
            t, p, df = mp_welch(a, b)
            assert abs(r.t - t) <= 1e-9 and abs(r.p - p) <= 1e-9 and abs(r.df - df) <= 1e-9

    def test_swap(self, rng):
        a, b = rng.normal(size=10), rng.normal(1, 2, size=14)
        r1, r2 = welch_t(a, b), welch_t(b, a)
        assert r1.t == -r2.t and r1.p == r2.p

    def test_p_monotone_in_shift(self, rng):
        a, b = rng.normal(size=20), rng.normal(size=25)
        ps = [welch_t(a + s, b).p for s in np.linspace(0.5, 5, 10)]
        assert all(0 < p <= 1 for p in ps)
        assert all(x > y for x, y in zip(ps, ps[1:]))

    def test_degenerate(self):
        with pytest.raises(DegenerateSample):
            welch_t([1], [1, 2])
        with pytest.raises(DegenerateSample):
            welch_t([1, 1, 1], [1, 2])

    def test_student_equal_sizes_equal_welch_t(self, rng):
        a, b = rng.normal(size=12), rng.normal(size=12)
        assert student_t(a, b).t == pytest.approx(welch_t(a, b).t, rel=1e-12)
        assert student_t(a, b).df == 22


class TestPearson:
    def test_perfect(self):
        x = np.arange(10.0)
        assert abs(pearson(x, 2 * x + 3).r - 1) <= 1e-12
        assert pearson(x, -x).r == -1

    def test_fixed_dataset(self):
        x = [1.0, 2.5, 3.1, 4.7, 5.0, 6.2, 7.9, 8.1, 9.4, 10.0]
        y = [2.1, 2.0, 3.9, 4.1, 6.3, 5.5, 8.8, 7.7, 9.9, 9.0]
        r, p = mp_pearson(x, y)
        rec = pearson(x, y)
        assert abs(rec.r - r) <= 1e-9 and abs(rec.p - p) <= 1e-9

    def test_random_fixtures(self, rng):
        for _ in range(20):
            n = int(rng.integers(5, 60))
            x = rng.normal(size=n)
            y = 0.3 * x + rng.normal(size=n)
            r, p = mp_pearson(x, y)
            rec = pearson(x, y)
            assert abs(rec.r - r) <= 1e-9 and abs(rec.p - p) <= 1e-9

    @settings(max_examples=100, deadline=None)
    @given(st.floats(0.01, 100), st.floats(-100, 100), st.integers(0, 10_000))
    def test_affine_invariance(self, a, b, seed):
        g = np.random.default_rng(seed)
        x, y = g.normal(size=30), g.normal(size=30)
        r = pearson(x, y).r
        assert abs(pearson(a * x + b, y).r - r) <= 1e-12
        assert abs(pearson(x, -a * y + b).r + r) <= 1e-12

    def test_errors(self):
        with pytest.raises(LengthMismatch):
            pearson([1, 2, 3], [1, 2])
        with pytest.raises(TooFewPoints):
            pearson([1, 2], [1, 2])
        with pytest.raises(DegenerateSample):
            pearson([1, 1, 1], [1, 2, 3])


class TestZscore:
    def test_bins_standardized(self, rng):
        ln = rng.integers(200, 8000, 1000)
        v = 0.01 * ln + rng.normal(size=1000)
        z = zscore_by_length_bins(ln, v, 25)
        order = np.argsort(ln, kind="stable")
        for g in np.array_split(order, 25):
            assert abs(z[g].mean()) < 1e-9
            assert abs(z[g].std() - 1) < 1e-9

    def test_constant_bin_is_zero(self):
        z = zscore_by_length_bins([1, 2, 3, 10, 11, 12], [5, 5, 5, 1, 2, 3], bins=2)
        assert list(z[:3]) == [0, 0, 0]

    def test_idempotent(self, rng):
        ln = rng.integers(100, 1000, 200)
        v = rng.normal(size=200)
        z = zscore_by_length_bins(ln, v, 25)
        np.testing.assert_allclose(zscore_by_length_bins(ln, z, 25), z, atol=1e-12)

    def test_removes_length_trend(self, rng):
        ln = rng.uniform(500, 10000, 2000)
        v = 0.05 * ln + rng.normal(0, 20, 2000)
        assert abs(pearson(ln, v).r) > 0.5
        assert abs(pearson(ln, zscore_by_length_bins(ln, v)).r) < 0.05

    def test_width_binning(self, rng):
        ln = rng.uniform(0, 100, 300)
        z = zscore_by_length_bins(ln, rng.normal(size=300), 10, "width")
        assert abs(z.mean()) < 1e-9


class TestSummaries:
    def test_pair(self):
        (s,) = group_summaries({"g": [2, 4]})
        assert s.mean == 3 and s.sd == pytest.approx(math.sqrt(2))

    def test_single(self):
        (s,) = group_summaries({"g": [7]})
        assert s.sd == 0 and s.degenerate

    def test_recovered_means(self, rng):
        params = {"a": (1.0, 0.5), "b": (3.0, 1.0), "c": (-2.0, 2.0)}
        groups = {k: rng.normal(m, s, 400) for k, (m, s) in params.items()}
        for s in group_summaries(groups):
            mu, sigma = params[s.label]
            assert abs(s.mean - mu) < 3 * sigma / math.sqrt(s.n)


class TestSectionMatrix:
    def test_latent_factor(self, rng):
        ids = [f"d{i}" for i in range(300)]
        latent = rng.normal(size=300)
        per = {s: dict(zip(ids, latent + rng.normal(0, 1, 300))) for s in ("A", "B", "C", "D")}
        m = section_correlation_matrix(per)
        for a in per:
            assert m[a, a].r == 1
            for b in per:
                assert m[a, b].r == m[b, a].r
                if a != b:
                    assert m[a, b].r > 0 and m[a, b].p < 1e-3

    def test_alignment_by_id(self):
        per = {"A": {"x": 1.0, "y": 2.0, "z": 3.0, "w": 5.0}, "B": {"z": 3.0, "y": 2.0, "x": 1.0}}
        assert section_correlation_matrix(per)["A", "B"].r == pytest.approx(1.0)
        with pytest.raises(AlignmentError):
            section_correlation_matrix({"A": {"x": 1.0}, "B": {"y": 1.0}})


def test_reporting_buckets():
    assert significance_stars(0.0005) == "***"
    assert significance_stars(0.03) == "*"
    assert significance_stars(0.5) == ""
    assert p_bucket(0.0001) == "< 0.001"
    assert p_bucket(0.3) == "> 0.2"
