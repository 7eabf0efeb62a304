import numpy as np
import pytest

from globreg.geometry import PointSet, Transform2DSimilarity
from globreg.sim2d import Sim2DModel, default_sim2d_box


def model_1x1(x, y):
    return Sim2DModel(PointSet([x]), PointSet([y]))


class TestEvalTrue:
    @pytest.mark.parametrize(
        "x, y, theta, expected",
        [
            ((1, 0), (1, 0), (1, 0, 0, 0), 0.0),
            ((1, 0), (0, 0), (1, 0, 0, 0), 1.0),
            ((1, 1), (3, 3), (2, 0, 1, 1), 0.0),
        ],
    )
    def test_examples(self, x, y, theta, expected):
        assert model_1x1(x, y).eval_true(0, 0, theta) == pytest.approx(expected, abs=1e-15)

    def test_matrix_matches_pairs(self, rng):
        m = Sim2DModel(PointSet(rng.normal(size=(4, 2))), PointSet(rng.normal(size=(5, 2))))
        theta = rng.normal(size=4)
        E = m.true_matrix(theta)
        for i in range(4):
            for j in range(5):
                assert E[i, j] == pytest.approx(m.eval_true(i, j, theta), abs=1e-12)

    def test_wrong_theta_length(self):
        with pytest.raises(ValueError):
            model_1x1((0, 0), (0, 0)).eval_true(0, 0, (1, 0, 0))


class TestGradient:
    @pytest.mark.parametrize(
        "x, y, theta0, expected",
        [
            ((1, 0), (0, 0), (1, 0, 0, 0), (2, 0, 2, 0)),
            ((0, 0), (0, 1), (0, 0, 0, 0), (0, 0, 0, -2)),
            ((1, 1), (3, 3), (2, 0, 1, 1), (0, 0, 0, 0)),
        ],
    )
    def test_examples(self, x, y, theta0, expected):
        np.testing.assert_allclose(model_1x1(x, y).grad_cvx(0, 0, theta0), expected, atol=1e-14)

    def test_tensor_matches_pairs(self, rng):
        m = Sim2DModel(PointSet(rng.normal(size=(3, 2))), PointSet(rng.normal(size=(4, 2))))
        theta = rng.normal(size=4)
        G = m.grad_cvx_tensor(theta)
        for i in range(3):
            for j in range(4):
                np.testing.assert_allclose(G[i, j], m.grad_cvx(i, j, theta), atol=1e-12)


class TestDCSplit:
    def test_concave_part_is_zero(self, rng):
        m = Sim2DModel(PointSet(rng.normal(size=(3, 2))), PointSet(rng.normal(size=(4, 2))))
        for _ in range(20):
            theta = rng.normal(size=4)
            assert not m.cav_matrix(theta).any()
            np.testing.assert_array_equal(m.cvx_matrix(theta), m.true_matrix(theta))
        assert not m.cav_stack(rng.normal(size=(5, 4))).any()

    def test_convex_along_segments(self, rng):
        m = Sim2DModel(PointSet(rng.normal(size=(3, 2))), PointSet(rng.normal(size=(3, 2))))
        for _ in range(200):
            a, b = rng.normal(size=(2, 4)) * 2
            mid = m.true_matrix(0.5 * (a + b))
            assert np.all(mid <= 0.5 * (m.true_matrix(a) + m.true_matrix(b)) + 1e-9)

    @pytest.mark.parametrize("phi", [0.0, np.pi / 2, np.pi])
    def test_rotation_consistency(self, phi):
        x = np.array([0.3, -1.2])
        R = np.array([[np.cos(phi), -np.sin(phi)], [np.sin(phi), np.cos(phi)]])
        m = model_1x1(x, R @ x)
        assert m.eval_true(0, 0, (np.cos(phi), np.sin(phi), 0, 0)) == pytest.approx(0.0, abs=1e-24)


class TestDefaultBox:
    def test_contains_generating_transforms(self, rng):
        for _ in range(200):
            x = rng.uniform(-1, 1, size=(10, 2))
            T = Transform2DSimilarity.from_params(rng.uniform(0.5, 1.5), rng.uniform(0, 2 * np.pi), rng.uniform(-3, 3, 2))
            k = int(rng.integers(1, 10))
            y = np.vstack([T.apply(x[:k]), rng.uniform(-5, 5, size=(3, 2))])
            box = default_sim2d_box(PointSet(x), PointSet(y))
            assert box.contains(T.theta)
