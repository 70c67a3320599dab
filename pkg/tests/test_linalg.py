import numpy as np
from django.test import SimpleTestCase, override_settings
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from clarke.exceptions import ShapeError, SingularSystem
from clarke.linalg import PIVOTING_STRATEGIES, gauss_solve


class GaussSolveTestCase(SimpleTestCase):
    def test_small_system(self):
        a = [[2.0, 1.0], [1.0, 3.0]]
        for pivoting in PIVOTING_STRATEGIES:
            x = gauss_solve(a, [3.0, 5.0], pivoting=pivoting)
            np.testing.assert_allclose(x, [0.8, 1.4], atol=1e-12)

    def test_needs_row_swap(self):
        x = gauss_solve([[0.0, 1.0], [1.0, 0.0]], [2.0, 3.0])
        np.testing.assert_allclose(x, [3.0, 2.0])

    def test_empty_system(self):
        self.assertEqual(len(gauss_solve(np.zeros((0, 0)), [])), 0)

    def test_singular(self):
        with self.assertRaises(SingularSystem):
            gauss_solve([[1.0, 2.0], [2.0, 4.0]], [1.0, 2.0])
        with self.assertRaises(SingularSystem):
            gauss_solve([[0.0, 0.0], [1.0, 1.0]], [1.0, 2.0], pivoting="scaled")

    @override_settings(CLARKE={"PIVOT_TOLERANCE": 1e-3})
    def test_pivot_tolerance_from_settings(self):
        with self.assertRaises(SingularSystem):
            gauss_solve([[1.0, 1.0], [1.0, 1.0001]], [1.0, 2.0])

    def test_bad_input(self):
        with self.assertRaises(ShapeError):
            gauss_solve([[1.0, 2.0]], [1.0, 2.0])
        with self.assertRaises(ValueError):
            gauss_solve([[1.0]], [1.0], pivoting="complete")

    def test_inputs_untouched(self):
        a = np.array([[0.0, 1.0], [1.0, 0.0]])
        b = np.array([2.0, 3.0])
        gauss_solve(a, b)
        np.testing.assert_array_equal(a, [[0.0, 1.0], [1.0, 0.0]])
        np.testing.assert_array_equal(b, [2.0, 3.0])

    @settings(max_examples=100, deadline=None)
    @given(
        arrays(np.float64, (4, 4), elements=st.floats(-1.0, 1.0)),
        arrays(np.float64, (4,), elements=st.floats(-10.0, 10.0)),
    )
    def test_diagonally_dominant_systems(self, a, b):
        a = a + np.diag(np.full(4, 5.0))
        for pivoting in PIVOTING_STRATEGIES:
            x = gauss_solve(a, b, pivoting=pivoting)
            np.testing.assert_allclose(a @ x, b, atol=1e-9)
            np.testing.assert_allclose(x, np.linalg.solve(a, b), atol=1e-9)
