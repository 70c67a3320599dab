import json
import os
import tempfile

import numpy as np
from rest_framework import serializers

from clarke.bidfn_auctions import AffineBid, BidProfile
from clarke.exceptions import ShapeError
from clarke.models import Allocation, SignalBid
from clarke.scenarios import Scenario, write_scenario
from clarke.serializers import OutcomeReportSerializer, ScenarioSerializer, render_json, round_floats
from clarke.vcg import SubsetBid
from tests import CustomTestCase

COLLECTORS = {"f_slope": [1 / 3, 1 / 2], "c": [3.0, 2.0]}


class ScenarioSerializerTestCase(CustomTestCase):
    def validate(self, data):
        serializer = ScenarioSerializer(data=data)
        serializer.is_valid(raise_exception=True)
        return serializer.validated_data

    def test_minimal_scenario(self):
        data = self.validate({"mechanism": "auction1", "model": COLLECTORS, "signals": [[1, 2], [2, 4]]})
        self.assertEqual(data["mechanism"], "auction1")
        self.assertNotIn("bids", data)

    def test_unknown_fields_are_rejected(self):
        with self.assertRaises(serializers.ValidationError) as ctx:
            self.validate({"mechanism": "vcg", "bids": [[]], "seeed": 3})
        self.assertIn("seeed", ctx.exception.detail)
        with self.assertRaises(serializers.ValidationError) as ctx:
            self.validate(
                {"mechanism": "auction1", "model": dict(COLLECTORS, e=[0, 0]), "signals": [[1]]}
            )
        self.assertIn("model", ctx.exception.detail)

    def test_bids_are_checked_per_mechanism(self):
        with self.assertRaises(serializers.ValidationError) as ctx:
            self.validate({"mechanism": "dm2", "bids": [{"intercept": 1.0}]})
        self.assertIn("bids", ctx.exception.detail)
        data = self.validate({"mechanism": "vcg", "bids": [[{"goods": [0], "bid": 1}]]})
        self.assertEqual(data["bids"][0][0]["bid"], 1.0)

    def test_requirements(self):
        for data in (
            {"mechanism": "auction3", "model": COLLECTORS},
            {"mechanism": "auction1", "bids": [[1.0]]},
            {"mechanism": "vcg", "signals": [[1.0]], "bids": [[]]},
            {"mechanism": "auction5", "bids": [[]]},
            {"mechanism": "vcg", "bids": [[]], "epsilon": -1.0},
        ):
            with self.assertRaises(serializers.ValidationError, msg=data):
                self.validate(data)

    def test_bundle_values(self):
        values = [[{"goods": [0], "bid": 3}], [{"goods": [0], "bid": 2}]]
        data = self.validate({"mechanism": "vcg", "values": values})
        self.assertEqual(data["values"][1][0]["bid"], 2.0)
        for data in (
            {"mechanism": "auction3", "values": values, "bids": [[[1.0]]]},
            {"mechanism": "vcg", "values": values, "model": COLLECTORS, "signals": [[1, 2], [2, 4]]},
            {"mechanism": "vcg", "values": [[{"goods": [0]}]]},
        ):
            with self.assertRaises(serializers.ValidationError, msg=data) as ctx:
                self.validate(data)
            self.assertIn("values", ctx.exception.detail)


class ScenarioTestCase(CustomTestCase):
    def test_truthful_bids_are_synthesized(self):
        scenario = Scenario.load(self.scenario_path("collectors_auction1.json"))
        self.assertIsNone(scenario.bids)
        outcome = scenario.run()
        self.assertEqual(outcome.allocation, Allocation((0, 1)))
        table = {tuple(row["sigma"]): row["P"][0] for row in outcome.diagnostics["payment_table"]}
        self.assertAlmostEqual(table[(0, 1)], 6.5)
        self.assertAlmostEqual(table[(1, 0)], 4.0)

    def test_forced_reports(self):
        scenario = Scenario.load(self.scenario_path("collectors_auction1_forced.json"))
        self.assertIsInstance(scenario.bids, SignalBid)
        outcome = scenario.run()
        self.assertAlmostEqual(outcome.payments[0], 2.5)
        self.assertAlmostEqual(outcome.utilities[0], 1.5)

    def test_three_buyers(self):
        outcome = Scenario.load(self.scenario_path("three_buyers_auction2.json")).run()
        self.assertArrayAlmostEqual(outcome.payments, [4.0, 0.0, 3.0])

    def test_dm2_and_vcg_files(self):
        dm2 = Scenario.load(self.scenario_path("collectors_dm2.json")).run()
        self.assertArrayAlmostEqual(dm2.payments, [2.5, 0.0])
        vcg = Scenario.load(self.scenario_path("private_values_vcg.json")).run()
        self.assertArrayAlmostEqual(vcg.payments, [3.5, 0.0, 2.0])

    def test_bid_objects(self):
        scenario = Scenario.from_validated_data(
            {"mechanism": "dm2", "bids": [{"intercept": 1.0, "slope": 0.5}, {"intercept": 2.0, "slope": 0.0}]}
        )
        self.assertEqual(scenario.bids[0], AffineBid(1.0, 0.5))
        vcg = Scenario.from_validated_data({"mechanism": "vcg", "bids": [[{"goods": [1], "bid": 2.0}]]})
        self.assertEqual(vcg.bids, [SubsetBid({(1,): 2.0})])
        self.assertEqual(vcg.run().allocation, Allocation((None, 0)))

    def test_bundle_values_are_the_truth(self):
        values = [[{"goods": [0], "bid": 3.0}], [{"goods": [0], "bid": 2.0}]]
        truthful = Scenario.from_validated_data({"mechanism": "vcg", "values": values}).run()
        self.assertArrayAlmostEqual(truthful.payments, [2.0, 0.0])
        self.assertArrayAlmostEqual(truthful.utilities, [1.0, 0.0])
        overbid = Scenario.from_validated_data(
            {"mechanism": "vcg", "values": values, "bids": [values[0], [{"goods": [0], "bid": 4.0}]]}
        ).run()
        self.assertEqual(overbid.allocation, Allocation((1,)))
        self.assertArrayAlmostEqual(overbid.utilities, [0.0, -1.0])
        with self.assertRaises(ShapeError):
            Scenario.from_validated_data({"mechanism": "vcg", "values": values, "bids": values[:1]})

    def test_bid_function_layout(self):
        bids = np.ones((2, 3, 3)).tolist()
        scenario = Scenario.from_validated_data(
            {"mechanism": "auction4", "model": {"f_slope": [1, 1, 1], "c": [2, 2, 2]}, "bids": bids}
        )
        self.assertIsInstance(scenario.bids, BidProfile)
        self.assertEqual(scenario.model.m, 2)

    def test_shape_mismatch(self):
        with self.assertRaises(ShapeError):
            Scenario.from_validated_data(
                {"mechanism": "auction1", "model": COLLECTORS, "signals": [[1.0, 2.0]]}
            )
        with self.assertRaises(ShapeError):
            Scenario.from_validated_data(
                {"mechanism": "dm2", "model": COLLECTORS, "signals": [[1.0, 2.0], [2.0, 4.0]]}
            )
        with self.assertRaises(ShapeError):
            Scenario.from_validated_data({"mechanism": "auction1", "model": COLLECTORS, "bids": [[1.0, 2.0], [3.0]]})

    def test_write_and_reload(self):
        scenario = Scenario.load(self.scenario_path("three_buyers_auction2.json"))
        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, "copy.json")
            write_scenario(scenario.to_dict(), path)
            reloaded = Scenario.load(path)
        np.testing.assert_array_equal(reloaded.signals.s, scenario.signals.s)
        np.testing.assert_array_equal(reloaded.model.f_slope, scenario.model.f_slope)
        self.assertArrayAlmostEqual(reloaded.run().payments, scenario.run().payments, places=12)


class OutcomeReportTestCase(CustomTestCase):
    def test_report_layout(self):
        outcome = Scenario.load(self.scenario_path("three_buyers_auction2.json")).run()
        data = OutcomeReportSerializer(outcome).data
        self.assertEqual(data["allocation"], [0, 2])
        self.assertEqual(data["payments"], [4.0, 0.0, 3.0])
        self.assertTrue(data["allocated"])
        self.assertEqual(data["diagnostics"]["thresholds"][0]["signal"], 2.0)

    def test_rendering_is_deterministic(self):
        outcome = Scenario.load(self.scenario_path("collectors_auction1.json")).run()
        text = render_json(OutcomeReportSerializer(outcome).data)
        self.assertEqual(text, render_json(json.loads(text)))
        self.assertLess(text.index('"allocated"'), text.index('"allocation"'))

    def test_round_floats(self):
        self.assertEqual(round_floats(1 / 3), 0.333333333333)
        self.assertEqual(round_floats([np.float64(-0.0), np.int64(2), np.bool_(True)]), [0.0, 2, True])
        self.assertEqual(round_floats({1: np.array([np.inf])}), {"1": [None]})
        self.assertEqual(round_floats(6.499999999999999), 6.5)
