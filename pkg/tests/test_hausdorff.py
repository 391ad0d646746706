import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from sklearn.base import clone

from tsslab.exceptions import DomainError, UsageError
from tsslab.hausdorff import (
    CONSISTENT,
    INCONCLUSIVE,
    BoxCountingDimension,
    CoverEstimate,
    HausdorffCoverEstimator,
    SyntheticSpec,
    box_counting,
    cantor_endpoints,
    cover_singular_set,
    dimension_bound,
    optimal_premeasure,
    premeasure,
    premeasure_table,
    propagate_regular_set,
    synthesize,
    verdict,
)

LOG2_LOG3 = math.log(2) / math.log(3)


def _grid(T=1.0, h=1e-3):
    return np.arange(int(round(T / h)) + 1) * h


def _brute_force_regular(t, z, C, a, seed_mask):
    """Fixpoint of the window rule by repeated sweeps over all pairs."""
    zc = z.copy()
    zc[:-1] = np.maximum(z[:-1], z[1:])
    width = C * zc ** (-a)
    regular = seed_mask.copy()
    while True:
        new = regular.copy()
        for k in np.flatnonzero(regular):
            new |= (t > t[k]) & (t < t[k] + width[k])
        if np.array_equal(new, regular):
            return regular
        regular = new


def _single(beta=0.7, cap=1e3, h=1e-4, point=0.5):
    return synthesize(SyntheticSpec(T=1.0, h=h, beta=beta, cap=cap, points=(point,)))


@pytest.fixture(scope="module")
def cantor():
    return synthesize(SyntheticSpec(T=1.0, h=1e-5, beta=2.0, cap=1e10, cantor_level=8))


class TestDimensionBound:
    def test_values(self):
        assert dimension_bound(1, 2) == Fraction(1, 2)
        assert dimension_bound(1.0, 1.0001) == pytest.approx(1e-4, rel=1e-3)
        sigma = 3
        assert dimension_bound(1, sigma - 1) == Fraction(1, 2)

    @pytest.mark.parametrize("s,a", [(1, 1), (2, 1), (0, 1), (-1, 2)])
    def test_inapplicable(self, s, a):
        with pytest.raises(DomainError):
            dimension_bound(s, a)

    @settings(max_examples=200, deadline=None)
    @given(s=st.fractions(min_value=Fraction(1, 1000), max_value=100), extra=st.fractions(Fraction(1, 1000), 100))
    def test_complement_identity(self, s, extra):
        a = s + extra
        d = dimension_bound(s, a)
        assert d + s / a == 1
        assert 0 <= d < 1


class TestPropagation:
    def test_constant_profile(self):
        t = _grid(1.0)
        rs = propagate_regular_set(t, np.ones_like(t), 1.0, 2.0, seeds=[0.0])
        assert rs.regular.all()
        assert rs.intervals == [(0.0, 1.0)]
        assert rs.measure == pytest.approx(1.0)

    def test_monotone_decreasing(self):
        t = _grid(2.0)
        z = 50.0 * np.exp(-3 * t) + 1
        rs = propagate_regular_set(t, z, 10.0, 2.0, seeds=[0.0])
        assert rs.regular.all()

    def test_empty_seeds_warn(self):
        t = _grid()
        rs = propagate_regular_set(t, np.ones_like(t), 1.0, 2.0, seeds=[])
        assert not rs.regular.any() and rs.warnings and rs.intervals == []

    def test_tail(self):
        t = _grid()
        z = np.full_like(t, 1e6)
        rs = propagate_regular_set(t, z, 1.0, 2.0, seeds=[0.0], tail=0.75)
        assert rs.regular[t > 0.75].all()
        assert rs.intervals[-1] == (0.75, 1.0)
        assert not rs.regular[(t > 0.01) & (t < 0.75)].any()

    def test_single_singularity_complement_shrinks_with_cap(self):
        # windows stay below h, so the capped plateau cannot chain across itself
        widths = []
        for cap in (5.0, 10.0, 20.0):
            st_ = _single(beta=0.5, cap=cap)
            rs = propagate_regular_set(st_.t, st_.z, 1e-3, 2.0, seeds=st_.seeds())
            comps = rs.components()
            assert len(comps) == 1
            k0, k1 = comps[0]
            assert st_.t[k0] <= 0.5 <= st_.t[k1]
            widths.append(k1 - k0 + 1)
        assert widths[0] > widths[1] > widths[2] >= 1

    def test_input_validation(self):
        t = _grid()
        with pytest.raises(UsageError):
            propagate_regular_set(t, np.full_like(t, 0.5), 1, 2, seeds=[0])
        with pytest.raises(DomainError):
            propagate_regular_set(t, np.ones_like(t), 0, 2, seeds=[0])
        with pytest.raises(UsageError):
            propagate_regular_set(t, np.ones(3), 1, 2, seeds=[0])

    @settings(max_examples=40, deadline=None)
    @given(seed=st.integers(0, 10**6), C=st.floats(0.001, 0.05), a=st.floats(0.5, 3))
    def test_matches_brute_force(self, seed, C, a):
        r = np.random.default_rng(seed)
        t = _grid(1.0, 1e-2)
        z = 1 + np.exp(r.normal(0, 2, t.size))
        seeds = r.random(t.size) < 0.05
        seeds[0] = True
        rs = propagate_regular_set(t, z, C, a, seeds=seeds)
        assert np.array_equal(rs.regular, _brute_force_regular(t, z, C, a, seeds))
        ivs = rs.intervals
        assert all(0 <= lo < hi <= 1.0 for lo, hi in ivs)
        assert all(ivs[i][1] < ivs[i + 1][0] for i in range(len(ivs) - 1))
        assert rs.measure <= 1.0

    @settings(max_examples=40, deadline=None)
    @given(seed=st.integers(0, 10**6), C=st.floats(0.001, 0.05), a=st.floats(0.5, 3),
           growC=st.floats(1, 4), shrink_a=st.floats(0.5, 1))
    def test_monotone_in_parameters(self, seed, C, a, growC, shrink_a):
        r = np.random.default_rng(seed)
        t = _grid(1.0, 1e-2)
        z = 1 + np.exp(r.normal(0, 2, t.size))
        base = propagate_regular_set(t, z, C, a, seeds=[0.0]).regular
        assert np.all(propagate_regular_set(t, z, C * growC, a, seeds=[0.0]).regular >= base)
        assert np.all(propagate_regular_set(t, z, C, a * shrink_a, seeds=[0.0]).regular >= base)


class TestCover:
    def test_premeasure_examples(self):
        assert premeasure([0.25], 0.5) == pytest.approx(0.5)
        assert premeasure([0.01, 0.01], 1) == pytest.approx(0.02)
        with pytest.raises(DomainError):
            premeasure([0.1], -0.1)

    def test_empty_set(self):
        t = _grid()
        rs = propagate_regular_set(t, np.ones_like(t), 1, 2, seeds=[0])
        cover = cover_singular_set(rs, 0.1, 0.5)
        assert cover.intervals == [] and cover.premeasure == 0.0

    def test_boundary_component_flagged(self):
        t = _grid()
        z = np.ones_like(t)
        rs = propagate_regular_set(t, z, 1e-3, 2, seeds=t > 0.2)
        cover = cover_singular_set(rs, 0.5, 0.5)
        assert cover.boundary and cover.intervals[0][0] == 0.0

    def test_long_component_split(self):
        t = _grid()
        k = np.arange(t.size)
        seeds = (k < 100) | (k > 600)
        rs = propagate_regular_set(t, np.full_like(t, 1e3), 1e-9, 2, seeds=seeds)
        cover = cover_singular_set(rs, 0.1, 1.0)
        # samples 100..600 anchored at 0.099: length 0.501 -> 6 pieces
        assert len(cover.intervals) == 6
        assert np.all(cover.lengths <= 0.1 + 1e-15)
        assert cover.premeasure == pytest.approx(0.501, rel=1e-9)

    def test_delta_validation(self):
        t = _grid()
        rs = propagate_regular_set(t, np.ones_like(t), 1, 2, seeds=[0])
        with pytest.raises(DomainError):
            cover_singular_set(rs, 0.0)

    @settings(max_examples=40, deadline=None)
    @given(seed=st.integers(0, 10**6), delta=st.floats(1e-3, 0.5), d=st.floats(0, 1))
    def test_cover_contains_singular_samples(self, seed, delta, d):
        r = np.random.default_rng(seed)
        t = _grid(1.0, 1e-3)
        rs = propagate_regular_set(t, np.full_like(t, 10.0), 1e-4, 2, seeds=r.random(t.size) < 0.3)
        cover = cover_singular_set(rs, delta, d)
        assert np.all(cover.covers(rs.singular_times()))
        lengths = cover.lengths
        assert np.all((lengths > 0) & (lengths <= delta * (1 + 1e-12)))
        assert cover.premeasure >= 0
        assert optimal_premeasure(rs, delta, d) <= cover.premeasure * (1 + 1e-12)

    def test_single_point_premeasure_falls_with_cap(self):
        vals = []
        for cap in (5.0, 10.0, 20.0):
            st_ = _single(beta=0.5, cap=cap)
            rs = propagate_regular_set(st_.t, st_.z, 1e-3, 2.0, seeds=st_.seeds())
            vals.append(cover_singular_set(rs, 0.05, 0.5).premeasure)
        assert vals[0] > vals[1] > vals[2] > 0


class TestVerdict:
    def test_rules(self):
        ds = [0.1, 0.05, 0.025]
        assert verdict(ds, [0, 0, 0]) == CONSISTENT
        assert verdict(ds, [1.0, 0.8, 0.5]) == CONSISTENT
        assert verdict(ds, [1.0, 1.0, 1.0]) == CONSISTENT
        assert verdict(ds, [1.0, 1.5, 2.0]) == INCONCLUSIVE

    def test_single_singularity_consistent(self):
        for beta in (0.5, 0.7, 0.9):
            st_ = _single(beta=beta)
            est = HausdorffCoverEstimator(s=1, a=2, C=1, seed_below=st_.spec.cap,
                                          deltas=tuple(0.1 * 0.5 ** np.arange(5))).fit(st_.t, st_.z)
            assert est.exponent_ == 0.5
            assert est.verdict_ == CONSISTENT

    def test_cantor_separates(self, cantor):
        rs = propagate_regular_set(cantor.t, cantor.z, 1.0, 2.0, seeds=cantor.seeds())
        deltas = 0.5 / 9 * 0.5 ** np.arange(5)
        assert verdict(deltas, premeasure_table(rs, deltas, 0.9)) == CONSISTENT
        assert verdict(deltas, premeasure_table(rs, deltas, 0.4)) == INCONCLUSIVE

    def test_higher_exponent_decays_faster(self, cantor):
        rs = propagate_regular_set(cantor.t, cantor.z, 1.0, 2.0, seeds=cantor.seeds())
        deltas = 0.5 / 9 * 0.5 ** np.arange(5)
        for d in (0.3, 0.5, LOG2_LOG3):
            lo = premeasure_table(rs, deltas, d)
            hi = premeasure_table(rs, deltas, d + 0.2)
            assert hi[-1] / hi[0] < lo[-1] / lo[0]


class TestBoxCounting:
    def test_cantor_endpoints(self):
        pts = cantor_endpoints(8)
        assert pts.size == 2**9
        assert box_counting(pts, 3.0 ** -np.arange(1, 8)) == pytest.approx(0.63, abs=0.05)

    def test_interval_and_point(self):
        assert box_counting(np.linspace(0, 1, 10000, endpoint=False), 2.0 ** -np.arange(2, 10)) == pytest.approx(1.0, abs=0.02)
        assert box_counting([0.3], 2.0 ** -np.arange(2, 10)) == pytest.approx(0.0, abs=1e-12)

    def test_estimator(self):
        est = BoxCountingDimension(scales=3.0 ** -np.arange(1, 8)).fit(cantor_endpoints(8))
        assert est.dimension_ == pytest.approx(LOG2_LOG3, abs=0.05)
        assert clone(est).get_params()["origin"] == 0.0

    def test_errors(self):
        with pytest.raises(UsageError):
            box_counting([], [0.1, 0.01])
        with pytest.raises(UsageError):
            box_counting([0.1], [0.1])
        with pytest.raises(DomainError):
            cantor_endpoints(3, ratio=0.6)


class TestSynthesize:
    def test_profile(self):
        st_ = _single(beta=0.6, cap=50.0, h=1e-3)
        assert np.all(st_.z >= st_.spec.baseline) and st_.z.max() == 50.0
        k = 250
        assert st_.z[k] == pytest.approx(1 + abs(st_.t[k] - 0.5) ** -0.6)

    def test_empty_set(self):
        st_ = synthesize(SyntheticSpec(T=1.0, h=1e-3, baseline=2.0))
        assert np.all(st_.z == 2.0)

    def test_l2_converges_when_integrable(self):
        # beta = 0.45, s = 2: error of the trapezoid sum with cap h^{-beta} scales as h^{1 - 2 beta}
        beta = 0.45
        exact = 1 + 4 * 0.5 ** (1 - beta) / (1 - beta) + 2 * 0.5 ** (1 - 2 * beta) / (1 - 2 * beta)
        errs = []
        for h in (1e-3, 1e-4, 1e-5):
            st_ = synthesize(SyntheticSpec(T=1.0, h=h, beta=beta, cap=h**-beta, points=(0.5,)))
            errs.append(abs(np.trapezoid(st_.z**2, st_.t) - exact))
        for e0, e1 in zip(errs, errs[1:]):
            assert e1 / e0 == pytest.approx(10 ** -(1 - 2 * beta), abs=0.03)

    def test_l2_diverges_when_not_integrable(self):
        norms = [np.trapezoid(_single(beta=0.6, cap=cap, h=1e-6).z ** 2, _grid(1.0, 1e-6))
                 for cap in (1e2, 1e3, 1e4)]
        assert norms[0] < norms[1] < norms[2]
        assert norms[2] > 2 * norms[0]

    @pytest.mark.parametrize("kwargs", [dict(beta=0.0), dict(baseline=0.5), dict(cap=1.0),
                                        dict(beta=0.6, s=2.0)])
    def test_rejections(self, kwargs):
        with pytest.raises(DomainError):
            synthesize(SyntheticSpec(T=1.0, h=1e-3, points=(0.5,), **kwargs))

    def test_trajectory_metadata(self):
        traj = _single(cap=77.0).to_trajectory()
        assert float(traj.metadata["cap"]) == 77.0 and "z" in traj


class TestEstimator:
    def test_params_and_report(self):
        est = HausdorffCoverEstimator(s=1, a=2, C=1.0, deltas=(0.1, 0.05))
        assert clone(est).get_params()["deltas"] == (0.1, 0.05)
        st_ = _single()
        est.set_params(seed_below=st_.spec.cap).fit(st_.to_trajectory())
        rep = est.report()
        assert rep["d"] == 0.5 and len(rep["premeasure_table"]) == 2
        assert np.allclose(est.transform(d=1.0), [c.lengths.sum() for c in est.covers_])

    def test_inapplicable(self):
        st_ = _single()
        with pytest.raises(DomainError):
            HausdorffCoverEstimator(s=2, a=1).fit(st_.t, st_.z)

    def test_cover_estimate_type(self):
        c = CoverEstimate([(0.0, 0.25)], 0.5, 0.5, 0.0)
        assert c.covers([0.1, 0.3]).tolist() == [True, False]
