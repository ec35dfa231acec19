import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from slidesvm.loss import (
    ProxResult,
    SlideParams,
    SubdiffKind,
    oracle_grid_span,
    prox_objective,
    prox_oracle,
    prox_slide,
    prox_slide_vector,
    prox_thresholds,
    slide_loss,
    slide_loss_sum,
    slide_subdifferential,
)

P_WIDE = SlideParams(0.1, 1.0)  # gamma_c = 0.5 lands in the ramp regime
P_NARROW = SlideParams(0.1, 0.3)  # gamma_c = 0.5 lands in the pin regime


@st.composite
def slide_params(draw):
    v = draw(st.floats(min_value=0.1, max_value=1.0))
    frac = draw(st.floats(min_value=0.0, max_value=0.9))
    return SlideParams(v * frac, v)


@st.composite
def prox_case(draw):
    p = draw(slide_params())
    boundary = 2.0 * p.ramp_width**2
    scale = draw(
        st.one_of(
            st.floats(min_value=0.05, max_value=0.98),
            st.floats(min_value=1.0, max_value=8.0),
        )
    )
    gamma_c = min(boundary * scale, 4.0)
    s = draw(st.floats(min_value=-4.0, max_value=8.0))
    return s, gamma_c, p


class TestSlideParams:
    def test_rejects_bad_shapes(self):
        with pytest.raises(ValueError):
            SlideParams(0.5, 0.5)
        with pytest.raises(ValueError):
            SlideParams(-0.1, 0.5)
        with pytest.raises(ValueError):
            SlideParams(0.1, 1.5)

    def test_zero_epsilon_allowed(self):
        assert SlideParams(0.0, 1.0).ramp_width == 1.0


class TestSlideLoss:
    def test_zero_branch_boundary(self):
        assert slide_loss(P_WIDE.epsilon, P_WIDE) == 0.0

    def test_ramp_midpoint(self):
        mid = (P_WIDE.epsilon + P_WIDE.v) / 2.0
        assert slide_loss(mid, P_WIDE) == pytest.approx(0.5, abs=1e-15)

    def test_plateau(self):
        assert slide_loss(1.7, P_WIDE) == 1.0

    def test_sum_examples(self):
        eps = P_WIDE.epsilon
        assert slide_loss_sum([eps, eps, eps], P_WIDE, scale=3.7) == 0.0
        assert slide_loss_sum([P_WIDE.v + 1, P_WIDE.v + 2], P_WIDE, scale=1.0) == 2.0
        mid = (P_WIDE.epsilon + P_WIDE.v) / 2.0
        assert slide_loss_sum([mid, P_WIDE.v + 1], P_WIDE, scale=2.0) == 3.0

    def test_empty_sum(self):
        assert slide_loss_sum([], P_WIDE, scale=5.0) == 0.0

    def test_ramp_collapse_at_eps0_v1(self):
        # with epsilon=0, v=1 the loss equals min(1, max(t, 0)) pointwise
        p = SlideParams(0.0, 1.0)
        ts = np.linspace(-2.0, 3.0, 10001)
        assert np.array_equal(slide_loss(ts, p), np.minimum(1.0, np.maximum(ts, 0.0)))

    @given(slide_params(), st.floats(-10, 10), st.floats(-10, 10))
    @settings(max_examples=300)
    def test_lipschitz_and_range(self, p, t1, t2):
        l1, l2 = slide_loss(t1, p), slide_loss(t2, p)
        assert 0.0 <= l1 <= 1.0
        assert abs(l1 - l2) <= abs(t1 - t2) / p.ramp_width + 1e-9
        if t1 <= t2:
            assert l1 <= l2


class TestSubdifferential:
    def test_ramp_interior(self):
        sd = slide_subdifferential(0.5, P_WIDE)
        assert sd.kind is SubdiffKind.SINGLETON
        assert sd.lo == sd.hi == 1.0 / 0.9

    def test_at_epsilon(self):
        sd = slide_subdifferential(0.1, P_WIDE)
        assert sd.kind is SubdiffKind.INTERVAL
        assert (sd.lo, sd.hi) == (0.0, 1.0 / 0.9)

    def test_at_knee(self):
        sd = slide_subdifferential(P_WIDE.v, P_WIDE)
        assert sd.kind is SubdiffKind.PAIR
        assert (sd.lo, sd.hi) == (0.0, 1.0 / 0.9)

    def test_flat_regions(self):
        for t in (-3.0, 0.05, 1.5):
            sd = slide_subdifferential(t, P_WIDE)
            assert sd.kind is SubdiffKind.SINGLETON
            assert sd.lo == 0.0

    @given(slide_params(), st.floats(-2, 3))
    @settings(max_examples=300)
    def test_singleton_matches_finite_difference(self, p, t):
        h = 1e-7
        # keep the difference stencil away from the two kinks
        if min(abs(t - p.epsilon), abs(t - p.v)) <= 1e-6:
            return
        sd = slide_subdifferential(t, p)
        assert sd.kind is SubdiffKind.SINGLETON
        slope = (slide_loss(t + h, p) - slide_loss(t - h, p)) / (2.0 * h)
        assert abs(slope - sd.lo) <= 1e-5 * max(1.0, sd.lo)


class TestProxClosedForm:
    def test_regime_split(self):
        assert prox_thresholds(0.5, P_WIDE).ramp_regime  # 0.5 < 2*0.81
        assert not prox_thresholds(0.5, P_NARROW).ramp_regime  # 0.5 >= 0.08
        # the boundary value itself belongs to the pin regime
        assert not prox_thresholds(2.0 * P_WIDE.ramp_width**2, P_WIDE).ramp_regime

    def test_rejects_nonpositive_gamma_c(self):
        with pytest.raises(ValueError):
            prox_slide(0.3, 0.0, P_WIDE)
        with pytest.raises(ValueError):
            prox_slide(0.3, -1.0, P_WIDE)

    def test_identity_left_of_dead_zone(self):
        assert prox_slide(0.05, 0.5, P_WIDE) == ProxResult(0.05)

    def test_ramp_regime_frozen_values(self):
        # frozen from prox_oracle(step=1e-6)
        assert prox_slide(0.3, 0.5, P_WIDE).value == pytest.approx(0.1, abs=1e-12)
        assert prox_slide(0.8, 0.5, P_WIDE).value == pytest.approx(
            0.24444444444444446, abs=1e-12
        )

    def test_pin_regime_frozen_values(self):
        assert prox_slide(0.9, 0.5, P_NARROW).value == pytest.approx(0.1, abs=1e-12)
        assert prox_slide(1.2, 0.5, P_NARROW).value == 1.2  # past sqrt(1)+0.1

    def test_tie_points_keep_identity_value(self):
        tie1 = 1.0 + 0.5 / (2.0 * 0.9)
        r = prox_slide(tie1, 0.5, P_WIDE)
        assert r.is_tie and r.value == tie1
        assert r.alternate == pytest.approx(tie1 - 0.5 / 0.9, abs=1e-15)

        tie2 = math.sqrt(2.0 * 0.5) + 0.1
        r = prox_slide(tie2, 0.5, P_NARROW)
        assert r.is_tie and r.value == tie2 and r.alternate == 0.1

    def test_off_tie_has_no_alternate(self):
        r = prox_slide(0.8, 0.5, P_WIDE)
        assert not r.is_tie and r.alternate is None

    def test_near_tie_output_is_one_of_the_two_minimizers(self):
        # inside the 1e-6 tie neighborhood the grid oracle cannot arbitrate,
        # but the closed form must still return one of the two candidates
        for gamma_c, p in ((0.5, P_WIDE), (0.5, P_NARROW)):
            th = prox_thresholds(gamma_c, p)
            for offset in (-3e-7, 0.0, 3e-7):
                s = th.tie_point + offset
                value = prox_slide(s, gamma_c, p).value
                alt = s - th.shift if th.ramp_regime else p.epsilon
                assert min(abs(value - s), abs(value - alt)) <= 1e-9

    def test_vector_matches_scalar(self):
        s = np.array([-0.9, 0.05, 0.3, 0.8, 1.2777, 1.5])
        out = prox_slide_vector(s, 0.5, P_WIDE)
        expected = [prox_slide(v, 0.5, P_WIDE).value for v in s]
        assert np.array_equal(out, np.array(expected))

    def test_vector_identity_region_and_empty(self):
        eps = P_WIDE.epsilon
        s = np.array([eps - 1.0, eps - 1.0])
        assert np.array_equal(prox_slide_vector(s, 0.5, P_WIDE), s)
        assert prox_slide_vector(np.array([]), 0.5, P_WIDE).size == 0

    def test_vector_mixed_frozen(self):
        out = prox_slide_vector(np.array([0.05, 0.3]), 0.5, P_WIDE)
        assert out == pytest.approx([0.05, 0.1], abs=1e-12)

    @given(prox_case())
    @settings(max_examples=500)
    def test_minimizer_certificate(self, case):
        s, gamma_c, p = case
        value = prox_slide(s, gamma_c, p).value
        attained = prox_objective(value, s, gamma_c, p)
        for cand in (p.epsilon, p.v, s, s - gamma_c / p.ramp_width):
            assert attained <= prox_objective(cand, s, gamma_c, p) + 1e-12


def exhaustive_scan(s, gamma_c, p, step):
    """Literal sweep of the oracle's full grid, for cross-checking the lazy
    evaluation in prox_oracle."""
    lo, hi, count = oracle_grid_span(s, gamma_c, p, step)
    best = math.inf
    winners = []

    def feed(ts):
        nonlocal best, winners
        obj = prox_objective(ts, s, gamma_c, p)
        m = float(obj.min())
        if m < best:
            best, winners = m, list(ts[obj == m])
        elif m == best:
            winners += list(ts[obj == m])

    chunk = 1_000_000
    for a in range(0, count, chunk):
        j = np.arange(a, min(a + chunk, count), dtype=np.float64)
        feed(lo + j * step)
    feed(np.array([p.epsilon, p.v, s, s - gamma_c / p.ramp_width]))
    w = np.array(winners)
    return float(w[np.argmin(np.abs(w - s))])


class TestProxOracle:
    def test_matches_frozen_example(self):
        assert prox_oracle(0.3, 0.5, P_WIDE) == pytest.approx(0.1, abs=1e-12)

    def test_identity_fixed_points(self):
        assert prox_oracle(P_WIDE.epsilon, 0.5, P_WIDE) == P_WIDE.epsilon
        assert prox_oracle(-5.0, 0.5, P_WIDE) == -5.0

    def test_rejects_bad_step(self):
        with pytest.raises(ValueError):
            prox_oracle(0.3, 0.5, P_WIDE, step=0.0)

    def test_equals_exhaustive_scan_coarse(self):
        rng = np.random.default_rng(11)
        for i in range(150):
            v = rng.uniform(0.1, 1.0)
            p = SlideParams(rng.uniform(0.0, 0.9 * v), v)
            boundary = 2.0 * p.ramp_width**2
            scale = rng.uniform(0.05, 0.98) if i % 2 else rng.uniform(1.0, 8.0)
            gamma_c = boundary * scale
            s = rng.uniform(-1.5, p.v + gamma_c / p.ramp_width + 2.0)
            assert prox_oracle(s, gamma_c, p, step=1e-3) == exhaustive_scan(
                s, gamma_c, p, step=1e-3
            )

    def test_equals_exhaustive_scan_fine(self):
        rng = np.random.default_rng(12)
        for _ in range(4):
            v = rng.uniform(0.3, 1.0)
            p = SlideParams(rng.uniform(0.0, 0.5 * v), v)
            gamma_c = rng.uniform(0.05, 0.6)
            s = rng.uniform(-0.5, 2.0)
            assert prox_oracle(s, gamma_c, p, step=1e-6) == exhaustive_scan(
                s, gamma_c, p, step=1e-6
            )

    def test_closed_form_agrees_with_oracle(self):
        rng = np.random.default_rng(13)
        worst = 0.0
        for i in range(2000):
            v = rng.uniform(0.08, 1.0)
            p = SlideParams(rng.uniform(0.0, 0.9 * v), v)
            boundary = 2.0 * p.ramp_width**2
            scale = rng.uniform(0.05, 0.98) if i % 2 else rng.uniform(1.0, 8.0)
            gamma_c = boundary * scale
            s = rng.uniform(-1.5, p.v + gamma_c / p.ramp_width + 2.0)
            tie = prox_thresholds(gamma_c, p).tie_point
            if abs(s - tie) <= 1e-6:
                continue
            worst = max(worst, abs(prox_slide(s, gamma_c, p).value - prox_oracle(s, gamma_c, p)))
        assert worst <= 1e-6
