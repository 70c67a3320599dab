import os

import numpy as np
from django.test import SimpleTestCase

from clarke.models import LinearValuationModel, SignalProfile

SCENARIO_DIR = os.path.join(
    os.path.dirname(os.path.dirname(os.path.abspath(__file__))), "example_project", "scenarios"
)


class CustomTestCase(SimpleTestCase):
    def setUp(self):
        # two collectors, two paintings: v_1A = s_1A + s_2A / 2
        self.collectors = LinearValuationModel.build(f_slope=[1 / 3, 1 / 2], c=[3.0, 2.0], m=2)
        self.collector_signals = SignalProfile([[1.0, 2.0], [2.0, 4.0]])

        # three buyers, two goods, priced by thresholds
        self.three_buyers = LinearValuationModel.build(
            f_slope=[1 / 2, 1 / 2, 1 / 3], c=[2.0, 2.0, 3.0], m=2
        )
        self.three_buyer_signals = SignalProfile([[3.0, 1.0], [2.0, 2.0], [3.0, 6.0]])

        self.rng = np.random.default_rng(7)

    def scenario_path(self, name):
        return os.path.join(SCENARIO_DIR, name)

    def assertArrayAlmostEqual(self, first, second, places=9):
        first, second = np.asarray(first, dtype=float), np.asarray(second, dtype=float)
        self.assertEqual(first.shape, second.shape)
        for a, b in zip(first.ravel(), second.ravel()):
            self.assertAlmostEqual(a, b, places=places)
