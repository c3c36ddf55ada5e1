import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from snmqd.losses import (
    LOSS_KINDS,
    LossParams,
    compute_loss,
    loss_mpiw_captured,
    loss_mse,
    loss_penalty,
    loss_picp,
    loss_qd,
    loss_qd_plus,
    soft_k,
)
from snmqd.metrics import IntervalBatch, integrity_violations, picp


def fd_grads(f, batch, y, eps=1e-5):
    """Central differences of ``f(batch, y).value`` for each output channel."""
    cols = [batch.lower.copy(), batch.point.copy(), batch.upper.copy()]
    out = []
    for c in range(3):
        g = np.zeros_like(cols[c])
        for i in range(g.size):
            plus = [v.copy() for v in cols]
            minus = [v.copy() for v in cols]
            plus[c][i] += eps
            minus[c][i] -= eps
            g[i] = (f(IntervalBatch(*plus), y).value - f(IntervalBatch(*minus), y).value) / (2 * eps)
        out.append(g)
    return out


def rel_err(a, b):
    a, b = np.concatenate(a), np.concatenate(b)
    return np.linalg.norm(a - b) / max(np.linalg.norm(b), 1e-12)


def random_batch(rng, n=8, cover=0.6, crossing=False):
    """Batch whose targets and bounds keep clear of every kink."""
    point = rng.normal(size=n)
    lo = point - rng.uniform(0.3, 1.0, n)
    up = point + rng.uniform(0.3, 1.0, n)
    if crossing:
        # push some points outside their interval, well past the bound
        flip = rng.uniform(size=n) < 0.4
        point = np.where(flip, up + rng.uniform(0.2, 0.5, n), point)
    inside = rng.uniform(size=n) < cover
    frac = rng.uniform(0.1, 0.9, n)
    # outside targets sit within a few 1/s of a bound so the soft indicator has slope
    off = rng.uniform(0.005, 0.03, n)
    y = np.where(inside, lo + frac * (up - lo), np.where(rng.uniform(size=n) < 0.5, lo - off, up + off))
    return IntervalBatch(lo, point, up), y


class TestParams:
    def test_defaults(self):
        p = LossParams()
        assert p.alpha == 0.05 and p.xi == 10.0 and p.softness == 160.0
        assert not p.scale_picp

    @pytest.mark.parametrize(
        "kw", [{"alpha": 0.0}, {"alpha": 1.0}, {"lambda1": 1.5}, {"lambda2": -0.1}, {"xi": -1}, {"softness": 0}, {"lambda_qd": -1}]
    )
    def test_ranges(self, kw):
        with pytest.raises(ValueError):
            LossParams(**kw)

    def test_with(self):
        assert LossParams().with_(xi=0.0).xi == 0.0


class TestSoftK:
    def test_centred(self):
        assert soft_k(0.0, 1.0, 2.0, 160.0) == pytest.approx(1.0, abs=1e-12)

    def test_on_bound(self):
        other = soft_k(np.inf * -1, 0.0, 2.0, 160.0)
        assert soft_k(0.0, 0.0, 2.0, 160.0) == pytest.approx(0.5 * other)

    def test_far_outside(self):
        assert soft_k(0.0, 10.0, 2.0, 160.0) < 1e-100

    def test_bad_softness(self):
        with pytest.raises(ValueError):
            soft_k(0, 1, 2, 0.0)

    @given(st.integers(5, 60), st.integers(0, 2**31 - 1))
    def test_approaches_hard_indicator(self, n, seed):
        rng = np.random.default_rng(seed)
        lo = rng.normal(size=n)
        up = lo + rng.uniform(0.1, 2, n)
        y = rng.normal(size=n)
        gap = np.minimum(np.abs(y - lo), np.abs(y - up))
        y = np.where(gap < 1e-2, up + 0.5, y)
        soft = soft_k(lo, y, up, 1e4).mean()
        assert abs(soft - picp(IntervalBatch(lo, lo, up), y)) <= 1.0 / n


class TestMpiwLoss:
    def test_all_captured(self):
        out = loss_mpiw_captured(IntervalBatch([0, 0], [0.5, 1], [1, 3]), [0.5, 1.0])
        assert out.value == 2.0

    def test_one_captured(self):
        out = loss_mpiw_captured(IntervalBatch([0, 0], [0.5, 1], [1, 3]), [0.5, 7.0])
        assert out.value == 1.0
        np.testing.assert_array_equal(out.d_upper, [1.0, 0.0])
        np.testing.assert_array_equal(out.d_lower, [-1.0, 0.0])

    def test_none_captured(self):
        out = loss_mpiw_captured(IntervalBatch([0, 0], [0.5, 1], [1, 3]), [-4.0, 7.0])
        assert out.value == 0.0
        assert not np.any(out.d_lower) and not np.any(out.d_upper)

    def test_empty(self):
        with pytest.raises(ValueError):
            loss_mpiw_captured(IntervalBatch([], [], []), [])


class TestPicpLoss:
    def _batch_with_coverage(self, frac, n=100):
        # every target deep inside or far outside, so soft and hard agree
        k = int(round(frac * n))
        y = np.where(np.arange(n) < k, 0.0, 50.0)
        return IntervalBatch(-np.ones(n), np.zeros(n), np.ones(n)), y

    def test_dead_zone(self):
        b, y = self._batch_with_coverage(0.96)
        out = loss_picp(b, y, 0.05)
        assert out.value == 0.0 and not np.any(out.d_upper)

    def test_shortfall(self):
        b, y = self._batch_with_coverage(0.90)
        assert loss_picp(b, y, 0.05).value == pytest.approx(0.0025, abs=1e-12)

    def test_boundary(self):
        b, y = self._batch_with_coverage(0.95)
        assert loss_picp(b, y, 0.05).value == pytest.approx(0.0, abs=1e-20)

    def test_widening_never_hurts(self, rng):
        b, y = random_batch(rng, n=50, cover=0.5)
        prev = loss_picp(b, y).value
        for d in np.linspace(0.01, 2.0, 40):
            cur = loss_picp(IntervalBatch(b.lower - d, b.point, b.upper + d), y).value
            assert cur <= prev + 1e-15
            prev = cur


class TestQdLoss:
    def test_scaling_arithmetic(self):
        # n=100 with 90 % hard coverage: picp term 0.0025 scaled by n / (a (1 - a))
        n = 100
        y = np.where(np.arange(n) < 90, 0.0, 50.0)
        b = IntervalBatch(-np.ones(n), np.zeros(n), np.ones(n))
        out = loss_qd(b, y, LossParams(lambda_qd=1.0))
        width = loss_mpiw_captured(b, y).value
        np.testing.assert_allclose(out.value - width, 100 / (0.05 * 0.95) * 0.0025, rtol=1e-9)
        assert out.value - width == pytest.approx(5.263, abs=1e-3)

    def test_lambda_zero(self, rng):
        b, y = random_batch(rng)
        assert loss_qd(b, y, LossParams(lambda_qd=0.0)).value == loss_mpiw_captured(b, y).value

    def test_coverage_satisfied(self, rng):
        b, y = random_batch(rng, cover=1.0)
        assert loss_qd(b, y).value == pytest.approx(loss_mpiw_captured(b, y).value, abs=1e-12)


class TestMseLoss:
    def test_values(self):
        assert loss_mse(IntervalBatch([0, 0], [1, 2], [3, 3]), [1, 2]).value == 0.0
        assert loss_mse(IntervalBatch([0, 0], [1, -1], [3, 3]), [0, 0]).value == 1.0

    def test_gradient(self, rng):
        b, y = random_batch(rng)
        out = loss_mse(b, y)
        np.testing.assert_allclose(out.d_point, 2 * (b.point - y) / y.size)
        assert rel_err(out.grads, fd_grads(loss_mse, b, y)) < 1e-6


class TestPenalty:
    @pytest.mark.parametrize("triple,want", [((0, 1, 2), 0.0), ((1, 0, 2), 1.0), ((0, 3, 2), 1.0)])
    def test_examples(self, triple, want):
        assert loss_penalty(IntervalBatch(*[[v] for v in triple])).value == want

    def test_kink_subgradient_zero(self):
        out = loss_penalty(IntervalBatch([1.0], [1.0], [1.0]))
        assert out.value == 0 and not any(np.any(g) for g in out.grads)

    @given(st.lists(st.tuples(*(st.integers(-20, 20) for _ in range(3))), min_size=1, max_size=30))
    def test_zero_iff_integrity(self, rows):
        lo, pt, up = (np.array(c, dtype=float) for c in zip(*rows))
        b = IntervalBatch(lo, pt, up)
        assert (loss_penalty(b).value == 0) == (integrity_violations(b) == (0, 0))


class TestQdPlus:
    def test_mse_limit(self, rng):
        b, y = random_batch(rng, crossing=True)
        p = LossParams(lambda2=1.0)
        want = loss_mse(b, y).value + p.xi * loss_penalty(b).value
        assert loss_qd_plus(b, y, p).value == pytest.approx(want, rel=1e-12)

    def test_convex_combination(self, rng):
        b, y = random_batch(rng, cover=0.5)
        p = LossParams(lambda1=0.7, lambda2=0.2, xi=0.0)
        want = 0.3 * 0.8 * loss_mpiw_captured(b, y).value + 0.7 * 0.8 * loss_picp(b, y).value + 0.2 * loss_mse(b, y).value
        assert loss_qd_plus(b, y, p).value == pytest.approx(want, rel=1e-12)

    def test_scale_switch(self, rng):
        b, y = random_batch(rng, cover=0.5)
        p = LossParams(lambda1=0.7, lambda2=0.2, xi=0.0)
        extra = loss_qd_plus(b, y, p.with_(scale_picp=True)).value - loss_qd_plus(b, y, p).value
        want = 0.7 * 0.8 * loss_picp(b, y).value * (y.size / (0.05 * 0.95) - 1)
        assert extra == pytest.approx(want, rel=1e-10)

    def test_permutation_invariant(self, rng):
        b, y = random_batch(rng, n=30, cover=0.7, crossing=True)
        perm = rng.permutation(30)
        a = loss_qd_plus(b, y)
        c = loss_qd_plus(b[perm], y[perm])
        assert a.value == pytest.approx(c.value, rel=1e-14)
        np.testing.assert_allclose(c.d_upper, a.d_upper[perm], rtol=1e-14)


LOSSES = {
    "mpiw": loss_mpiw_captured,
    "picp": lambda b, y: loss_picp(b, y, 0.05, 160.0),
    "mse": loss_mse,
    "penalty": lambda b, y: loss_penalty(b),
    "qd": lambda b, y: loss_qd(b, y, LossParams(lambda_qd=1.0)),
    "qd_plus": lambda b, y: loss_qd_plus(b, y, LossParams(lambda1=0.9, lambda2=0.3)),
}


class TestGradients:
    @pytest.mark.parametrize("name", sorted(LOSSES))
    @pytest.mark.parametrize("crossing", [False, True])
    def test_central_differences(self, name, crossing, rng):
        f = LOSSES[name]
        for _ in range(20):
            b, y = random_batch(rng, n=8, cover=0.5, crossing=crossing)
            got = f(b, y).grads
            want = fd_grads(f, b, y)
            assert rel_err(got, want) < 1e-4 or (np.abs(np.concatenate(want)).max() < 1e-10 and np.abs(np.concatenate(got)).max() < 1e-10)

    def test_dispatch(self, rng):
        b, y = random_batch(rng)
        for kind in LOSS_KINDS:
            assert np.isfinite(compute_loss(kind, b, y).value)
        with pytest.raises(ValueError):
            compute_loss("mve", b, y)
