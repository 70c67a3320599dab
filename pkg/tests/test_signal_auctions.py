from unittest import mock

import numpy as np
from django.core.exceptions import ValidationError as DjValidationError
from django.test import override_settings

from clarke.assign import TieRule
from clarke.exceptions import InvariantViolation, ShapeError
from clarke.models import Allocation, LinearValuationModel, SignalBid, SignalProfile
from clarke.signal_auctions import (
    auction1_payment_bid_independence,
    payment_table,
    residual_allocation,
    run_auction1,
    run_auction2,
    threshold_payment,
    threshold_payment_independence,
    truthful_reports,
)
from clarke.verify import random_model
from tests import CustomTestCase


class Auction1TestCase(CustomTestCase):
    def test_payment_table(self):
        table = payment_table(self.collectors, self.collector_signals)
        self.assertEqual(table.sigmas, [(0, 1), (1, 0)])
        self.assertAlmostEqual(table.row(0)[0], 6.5)
        self.assertAlmostEqual(table.row(0)[1], 4.0)

    def test_truthful_collectors(self):
        outcome = run_auction1(self.collectors, truthful_reports(self.collector_signals))
        self.assertEqual(outcome.allocation, Allocation((0, 1)))
        self.assertAlmostEqual(outcome.payments[0], 0.0)
        # s_1A + 1
        self.assertAlmostEqual(outcome.utilities[0], 2.0)
        self.assertEqual(outcome.diagnostics["selected_sigma"], [0, 1])

    def test_forcing_the_other_permutation(self):
        reports = SignalBid([[1.0, 10.0], [2.0, 4.0]])
        outcome = run_auction1(self.collectors, reports, signals=self.collector_signals)
        self.assertEqual(outcome.allocation, Allocation((1, 0)))
        self.assertAlmostEqual(outcome.payments[0], 2.5)
        # s_1B - 1/2, measured at the true signals
        self.assertAlmostEqual(outcome.utilities[0], 1.5)

    def test_tie_averages_both_cases(self):
        reports = SignalBid([[1.0, 2.5], [2.0, 4.0]])
        first = run_auction1(
            self.collectors, reports, TieRule("nth", index=0), signals=self.collector_signals
        )
        second = run_auction1(
            self.collectors, reports, TieRule("nth", index=1), signals=self.collector_signals
        )
        self.assertEqual(len(first.diagnostics["optima"]), 2)
        self.assertAlmostEqual((first.utilities[0] + second.utilities[0]) / 2, 1.75)

    def test_payment_table_ignores_own_report(self):
        shifted = self.collector_signals.with_row(0, [2.0, -1.0])
        self.assertAlmostEqual(payment_table(self.collectors, shifted).row(0)[0], 6.5)
        for buyer in range(2):
            self.assertTrue(
                auction1_payment_bid_independence(
                    self.collectors, self.collector_signals, buyer, rng=self.rng
                )
            )

    def test_payment_difference_identity(self):
        table = payment_table(self.collectors, self.collector_signals)
        f2 = self.collectors.f
        expected = (3.0 * 2.0 - 1.0) / (3.0 - 1.0) * (f2(1, 4.0) - f2(1, 2.0))
        self.assertAlmostEqual(table.row(0)[0] - table.row(0)[1], expected)

    def test_payments_nonnegative_on_random_models(self):
        for _ in range(30):
            model, signals = random_model(self.rng, 3, 3)
            outcome = run_auction1(model, signals)
            self.assertTrue((outcome.payments >= -1e-9).all())

    def test_shape_and_validation(self):
        with self.assertRaises(ShapeError):
            run_auction1(self.three_buyers, self.three_buyer_signals)
        with self.assertRaises(ShapeError):
            run_auction1(self.collectors, SignalBid([[1.0], [2.0]]))
        broken = LinearValuationModel.build(f_slope=[1.0, 1.0], c=[0.5, 2.0], m=2)
        with self.assertRaises(DjValidationError):
            run_auction1(broken, self.collector_signals)

    def test_single_buyer(self):
        model = LinearValuationModel.build(f_slope=[1.0], c=[2.0], m=1)
        outcome = run_auction1(model, SignalProfile([[3.0]]))
        self.assertEqual(outcome.allocation, Allocation((0,)))
        self.assertEqual(outcome.payments.tolist(), [0.0])


class Auction2TestCase(CustomTestCase):
    def test_truthful_three_buyers(self):
        outcome = run_auction2(self.three_buyers, self.three_buyer_signals)
        self.assertEqual(outcome.allocation, Allocation((0, 2)))
        self.assertArrayAlmostEqual(outcome.payments, [4.0, 0.0, 3.0])
        # s_1A - 2
        self.assertAlmostEqual(outcome.utilities[0], 1.0)
        self.assertAlmostEqual(outcome.welfare, 12.5)
        first = outcome.diagnostics["thresholds"][0]
        self.assertEqual((first["buyer"], first["good"]), (0, 0))
        self.assertAlmostEqual(first["signal"], 2.0)
        self.assertEqual(first["residual"], [1, 2])

    def test_reporting_for_the_second_good(self):
        reports = self.three_buyer_signals.with_row(0, [0.0, 8.0])
        outcome = run_auction2(self.three_buyers, reports, signals=self.three_buyer_signals)
        self.assertEqual(outcome.allocation, Allocation((2, 0)))
        self.assertAlmostEqual(outcome.payments[0], 9.0)
        threshold = threshold_payment(self.three_buyers, reports, outcome.allocation, 1)
        self.assertAlmostEqual(threshold.signal, 6.0)
        # true v_1B is 4
        self.assertAlmostEqual(outcome.utilities[0], -5.0)

    def test_allocation_regions(self):
        # buyer 1 takes A iff s_1A >= max(2, s_1B - 4)
        cases = [((2.5, 1.0), (0, 2)), ((1.5, 1.0), (1, 2)), ((3.0, 8.0), (2, 0))]
        for report, expected in cases:
            reports = self.three_buyer_signals.with_row(0, list(report))
            outcome = run_auction2(self.three_buyers, reports)
            self.assertEqual(outcome.allocation, Allocation(expected), report)

    def test_payment_independent_of_own_report(self):
        for buyer in range(3):
            self.assertTrue(
                threshold_payment_independence(
                    self.three_buyers, self.three_buyer_signals, buyer, rng=self.rng
                )
            )

    def test_residual_allocation(self):
        residual = residual_allocation(self.three_buyers, self.three_buyer_signals, 0)
        self.assertEqual(residual, Allocation((1, 2)))

    @override_settings(CLARKE={"CHECK_INVARIANTS": True})
    def test_checked_residual_allocation(self):
        for _ in range(10):
            model, signals = random_model(self.rng, 3, 2)
            residual_allocation(model, signals, 1)

    def test_checked_residual_allocation_raises(self):
        def leaky_values(model, bids):
            # buyer 0 moves the ranking of the others
            return np.array([[0.0, 0.0], [1.0, 0.0], [1.0 + bids.s[0, 0], 0.0]])

        with override_settings(CLARKE={"CHECK_INVARIANTS": True}), mock.patch(
            "clarke.signal_auctions.valuation_matrix", side_effect=leaky_values
        ):
            with self.assertRaises(InvariantViolation):
                reports = self.three_buyer_signals.with_row(0, [0.0, 0.0])
                residual_allocation(self.three_buyers, reports, 0)

    def test_needs_more_buyers_than_goods(self):
        with self.assertRaises(ShapeError):
            run_auction2(self.collectors, self.collector_signals)
