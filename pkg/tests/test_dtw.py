import numpy as np
import pytest

from subdisc.abx import dtw_distance, frame_cost_matrix
from subdisc.errors import DimensionError

from helpers import brute_force_dtw


class TestFrameCost:
    def test_identical_frames_cost_exactly_zero(self):
        rng = np.random.default_rng(0)
        seg = rng.standard_normal((5, 8))
        cost = frame_cost_matrix(seg, seg)
        assert np.all(np.diag(cost) == 0.0)
        assert np.all(cost >= 0.0)

    def test_orthogonal_frames_cost_one(self):
        a = np.array([[1.0, 0.0]])
        x = np.array([[0.0, 2.0]])
        assert frame_cost_matrix(a, x)[0, 0] == pytest.approx(1.0, abs=1e-15)

    def test_opposite_frames_cost_two(self):
        a = np.array([[1.0, 0.0]])
        x = np.array([[-3.0, 0.0]])
        assert frame_cost_matrix(a, x)[0, 0] == pytest.approx(2.0, abs=1e-15)

    def test_zero_vector_conventions(self):
        a = np.array([[0.0, 0.0], [1.0, 0.0]])
        x = np.array([[0.0, 0.0]])
        cost = frame_cost_matrix(a, x)
        assert cost[0, 0] == 0.0  # zero vs zero
        assert cost[1, 0] == 1.0  # non-zero vs zero

    def test_scale_invariance(self):
        rng = np.random.default_rng(1)
        a = rng.standard_normal((4, 6))
        x = rng.standard_normal((3, 6))
        c1 = frame_cost_matrix(a, x)
        c2 = frame_cost_matrix(a * 7.5, x * 0.2)
        np.testing.assert_allclose(c1, c2, atol=1e-12)


class TestDtwDistance:
    def test_identical_segments_zero(self):
        rng = np.random.default_rng(2)
        for t in (1, 2, 5, 9):
            seg = rng.standard_normal((t, 4))
            assert dtw_distance(seg, seg) == 0.0

    def test_two_frame_example(self):
        # A = [(1,0),(0,1)], X = [(1,0)]: both A frames align to the X frame
        a = np.array([[1.0, 0.0], [0.0, 1.0]])
        x = np.array([[1.0, 0.0]])
        assert dtw_distance(a, x) == pytest.approx(0.5, abs=1e-12)

    def test_symmetry(self):
        rng = np.random.default_rng(3)
        for _ in range(20):
            a = rng.standard_normal((int(rng.integers(1, 8)), 5))
            x = rng.standard_normal((int(rng.integers(1, 8)), 5))
            assert dtw_distance(a, x) == pytest.approx(dtw_distance(x, a), abs=1e-12)

    def test_non_negative(self):
        rng = np.random.default_rng(4)
        for _ in range(30):
            a = rng.standard_normal((int(rng.integers(1, 10)), 3))
            x = rng.standard_normal((int(rng.integers(1, 10)), 3))
            assert dtw_distance(a, x) >= 0.0

    @pytest.mark.parametrize("seed", range(8))
    def test_matches_exhaustive_enumeration(self, seed):
        rng = np.random.default_rng(100 + seed)
        for _ in range(25):
            ta = int(rng.integers(1, 7))
            tx = int(rng.integers(1, 7))
            d = int(rng.integers(1, 6))
            a = rng.standard_normal((ta, d))
            x = rng.standard_normal((tx, d))
            fast = dtw_distance(a, x)
            slow = brute_force_dtw(a, x)
            assert abs(fast - slow) < 1e-9

    def test_frame_duplication_invariance(self):
        rng = np.random.default_rng(5)
        for _ in range(25):
            a = rng.standard_normal((int(rng.integers(1, 10)), 6))
            x = rng.standard_normal((int(rng.integers(1, 10)), 6))
            a2 = np.repeat(a, 2, axis=0)
            x2 = np.repeat(x, 2, axis=0)
            assert dtw_distance(a2, x2) == pytest.approx(dtw_distance(a, x), abs=1e-9)

    def test_euclidean_metric(self):
        a = np.array([[0.0], [2.0]])
        x = np.array([[0.0]])
        # costs 0 and 4 along the only path, two nodes
        assert dtw_distance(a, x, "euclidean_sq") == pytest.approx(2.0, abs=1e-12)

    def test_dim_mismatch(self):
        with pytest.raises(DimensionError):
            dtw_distance(np.zeros((2, 3)), np.zeros((2, 4)))

    def test_empty_segment_rejected(self):
        with pytest.raises(DimensionError):
            dtw_distance(np.zeros((0, 3)), np.zeros((2, 3)))
