import math

import numpy as np
import pytest

from entroport import (
    AssetWeights,
    EntropyLedger,
    FractionalRebalance,
    FullRebalance,
    PairwiseTrade,
    PortfolioState,
    accumulate,
    apply_batch,
    apply_trade,
    log_potential,
    pair_entropy_first_order,
    plan_rebalance,
    total_value,
    trade_entropy_exact,
    with_prices,
)
from support import make_state, random_state

# Frozen references (mpmath, 40 digits) for the w=(.5,.5), ratios (2,.5) state.
FULL_DS = [-0.23500181462286782, 0.45814536593707755]  # 0.5 ln .625, 0.5 ln 2.5
FULL_DS_TOTAL = 0.22314355131420976  # ln 1.25
HALF_DS_TOTAL = 0.17598821157858909  # 0.5 ln(0.8125 * 1.75)
SMALL_EXACT = 0.014585188649889928  # 0.5 ln(0.99 * 1.04), amount 0.01

HOT_COLD = PortfolioState(AssetWeights([0.5, 0.5]), [2.0, 0.5], [0.5, 0.5])


def full_rebalanced(state):
    out, _ = apply_batch(state, plan_rebalance(state, FullRebalance()))
    return out


class TestTradeEntropyExact:
    def test_no_trade_is_zero(self):
        d = trade_entropy_exact(HOT_COLD, HOT_COLD)
        assert d.tolist() == [0.0, 0.0]

    def test_full_rebalance_values(self):
        post = full_rebalanced(HOT_COLD)
        d = trade_entropy_exact(HOT_COLD, post)
        np.testing.assert_allclose(d, FULL_DS, rtol=1e-15)
        assert math.fsum(d) == pytest.approx(FULL_DS_TOTAL, abs=1e-15)

    def test_half_rebalance_value(self):
        post, _ = apply_batch(
            HOT_COLD, plan_rebalance(HOT_COLD, FractionalRebalance(0.5))
        )
        d = trade_entropy_exact(HOT_COLD, post)
        assert math.fsum(d) == pytest.approx(HALF_DS_TOTAL, abs=1e-15)

    def test_sum_equals_log_potential_change(self):
        rng = np.random.default_rng(53)
        for _ in range(100):
            s = random_state(rng, int(rng.integers(2, 9)))
            post = full_rebalanced(s)
            d = trade_entropy_exact(s, post)
            assert math.fsum(d) == pytest.approx(
                log_potential(post) - log_potential(s), abs=1e-12
            )

    def test_rejects_price_motion(self):
        moved = with_prices(HOT_COLD, [2.1, 0.5])
        with pytest.raises(ValueError, match="prices"):
            trade_entropy_exact(HOT_COLD, moved)

    def test_rejects_zero_value_assets(self):
        w = AssetWeights([0.5, 0.5])
        z = PortfolioState(w, [1.0, 1.0], [1.0, 0.0])
        ok = PortfolioState(w, [1.0, 1.0], [0.5, 0.5])
        with pytest.raises(ValueError, match="zero value"):
            trade_entropy_exact(z, ok)

    def test_rejects_weight_mismatch(self):
        other = PortfolioState(AssetWeights([0.4, 0.6]), [2.0, 0.5], [0.5, 0.5])
        with pytest.raises(ValueError, match="weights"):
            trade_entropy_exact(HOT_COLD, other)


class TestPairEntropyFirstOrder:
    def test_equal_ratios_exactly_zero(self):
        s = make_state([0.5, 0.5], [1.3, 1.3])
        assert pair_entropy_first_order(s, PairwiseTrade(1, 0, 0.01)) == 0.0

    def test_large_trade_overestimates(self):
        # first-order 0.5625 vs exact ln 1.25 for the 0.375 transfer
        fo = pair_entropy_first_order(HOT_COLD, PairwiseTrade(buyer=1, seller=0, amount=0.375))
        assert fo == pytest.approx(0.5625, rel=1e-15)
        assert fo > FULL_DS_TOTAL

    def test_small_trade_close_to_exact(self):
        tr = PairwiseTrade(buyer=1, seller=0, amount=0.01)
        fo = pair_entropy_first_order(HOT_COLD, tr)
        assert fo == pytest.approx(0.015, rel=1e-15)
        exact = math.fsum(trade_entropy_exact(HOT_COLD, apply_trade(HOT_COLD, tr)))
        assert exact == pytest.approx(SMALL_EXACT, abs=1e-15)
        assert abs(fo - exact) < 5e-4

    def test_gap_shrinks_quadratically(self):
        rng = np.random.default_rng(59)
        for _ in range(30):
            s = random_state(rng, 2)
            ti = s.sub_temperatures
            seller = int(np.argmax(ti))
            buyer = 1 - seller
            if ti[seller] / ti[buyer] < 1.1:
                continue
            # stay in the quadratic regime: small next to both touched values
            base = 0.02 * float(min(s.values[seller], s.values[buyer]))
            gaps = []
            for k in range(3):
                tr = PairwiseTrade(buyer=buyer, seller=seller, amount=base / 2**k)
                exact = math.fsum(trade_entropy_exact(s, apply_trade(s, tr)))
                gaps.append(abs(pair_entropy_first_order(s, tr) - exact))
            for g, g_half in zip(gaps, gaps[1:]):
                assert 3.2 <= g / g_half <= 4.8

    def test_nonnegative_for_legal_trades(self):
        rng = np.random.default_rng(61)
        for _ in range(100):
            s = random_state(rng, int(rng.integers(2, 8)))
            for tr in plan_rebalance(s, FullRebalance()).trades:
                assert pair_entropy_first_order(s, tr) >= 0.0
                s = apply_trade(s, tr)

    def test_index_range(self):
        with pytest.raises(IndexError):
            pair_entropy_first_order(HOT_COLD, PairwiseTrade(buyer=7, seller=0, amount=0.1))


class TestLedger:
    def test_fresh_is_zero(self):
        led = EntropyLedger.fresh(HOT_COLD, 0.0)
        assert led.total == 0.0
        assert led.s.tolist() == [0.0, 0.0]

    def test_accumulate_zeros_is_noop(self):
        led = EntropyLedger.fresh(HOT_COLD)
        led2 = accumulate(led, np.zeros(2))
        assert led2.total == 0.0
        assert led2.s.tolist() == led.s.tolist()

    def test_two_deltas_equal_combined(self):
        led = EntropyLedger.fresh(HOT_COLD)
        d1 = np.array([0.01, 0.02])
        d2 = np.array([0.005, -0.001])
        a = accumulate(accumulate(led, d1), d2)
        b = accumulate(led, d1 + d2)
        np.testing.assert_allclose(a.s, b.s, rtol=0, atol=1e-15)
        assert a.total == pytest.approx(b.total, abs=1e-15)

    def test_full_rebalance_delta(self):
        led = EntropyLedger.fresh(HOT_COLD)
        post = full_rebalanced(HOT_COLD)
        led = led.accumulate(trade_entropy_exact(HOT_COLD, post))
        assert led.total == pytest.approx(FULL_DS_TOTAL, abs=1e-15)

    def test_rejects_negative_total_delta(self):
        led = EntropyLedger.fresh(HOT_COLD)
        with pytest.raises(ValueError, match="illegal trade"):
            accumulate(led, np.array([-0.01, 0.0]))

    def test_rejects_shape_mismatch(self):
        led = EntropyLedger.fresh(HOT_COLD)
        with pytest.raises(ValueError, match="shape"):
            accumulate(led, np.zeros(3))


class TestBatchEntropyProperties:
    def test_telescoping_over_batch(self):
        rng = np.random.default_rng(67)
        for _ in range(50):
            s = random_state(rng, int(rng.integers(3, 9)))
            batch = plan_rebalance(s, FullRebalance())
            endpoint, _ = apply_batch(s, batch)
            per_trade = 0.0
            state = s
            for tr in batch.trades:
                nxt = apply_trade(state, tr)
                per_trade += math.fsum(trade_entropy_exact(state, nxt))
                state = nxt
            whole = math.fsum(trade_entropy_exact(s, endpoint))
            assert per_trade == pytest.approx(whole, abs=1e-12)

    def test_batch_entropy_nonnegative(self):
        rng = np.random.default_rng(71)
        for _ in range(200):
            s = random_state(rng, int(rng.integers(2, 9)))
            alpha = float(rng.uniform(0.05, 1.0))
            post, _ = apply_batch(s, plan_rebalance(s, FractionalRebalance(alpha)))
            if post is s:
                continue
            assert math.fsum(trade_entropy_exact(s, post)) >= -1e-12

    def test_full_maximizes_one_shot_entropy(self):
        rng = np.random.default_rng(73)
        for _ in range(50):
            s = random_state(rng, int(rng.integers(2, 8)))
            full_post = full_rebalanced(s)
            full_ds = math.fsum(trade_entropy_exact(s, full_post))
            for alpha in (0.1, 0.3, 0.5, 0.7, 0.9, float(rng.uniform(0.01, 0.99))):
                post, _ = apply_batch(s, plan_rebalance(s, FractionalRebalance(alpha)))
                if post is s:
                    continue
                assert math.fsum(trade_entropy_exact(s, post)) <= full_ds + 1e-12

    def test_near_reversible_trades_produce_negligible_entropy(self):
        w = AssetWeights([0.5, 0.5])
        t_hi = 1.0 + 1e-13
        s = make_state([0.5, 0.5], [t_hi, 1.0])
        # largest no-crossing transfer between the near-equal pair
        a_star = (t_hi - 1.0) / (1 / 0.5 + 1 / 0.5)
        for amount in (a_star, a_star / 2, a_star / 10):
            tr = PairwiseTrade(buyer=1, seller=0, amount=amount)
            post = apply_trade(s, tr)
            assert abs(math.fsum(trade_entropy_exact(s, post))) <= 1e-9
