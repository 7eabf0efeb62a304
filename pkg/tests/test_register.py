import numpy as np
import pytest

from globreg.bnb import BUDGET, EPS_OPTIMAL
from globreg.geometry import PointSet, Transform2DSimilarity, Transform3DRigid, random_rotation
from globreg.metrics import rmse
from globreg.register import register_2d, register_3d, resolve_np
from globreg.prototypes import random_cloud


class TestResolveNp:
    @pytest.mark.parametrize(
        "arg, expected",
        [("7", 7), (7, 7), ("1.0", 10), ("0.9", 9), ("1/2", 5), (0.25, 2), ("0.01", 1), ("1/1", 10)],
    )
    def test_valid(self, arg, expected):
        assert resolve_np(arg, 10, 12) == expected

    @pytest.mark.parametrize("arg", ["1.5", "0", "-0.5", "11", "abc", "1/0", 0, "3/2"])
    def test_invalid(self, arg):
        with pytest.raises(ValueError):
            resolve_np(arg, 10, 12)


class TestRegister2d:
    def test_identical_sets(self):
        x = PointSet(np.random.default_rng(2).uniform(-1, 1, size=(8, 2)))
        reg = register_2d(x, x, 8)
        assert reg.certificate == EPS_OPTIMAL
        pairs = np.stack([np.arange(8)] * 2, 1)
        assert rmse(reg.transform, x, x, pairs) < 1e-2
        assert reg.value <= reg.epsilon

    def test_offset_data_mapped_back(self, rng):
        # far from the origin, so centring and scaling must be undone correctly
        x = rng.uniform(-1, 1, size=(7, 2)) * 30 + [500.0, -200.0]
        T = Transform2DSimilarity.from_params(1.3, 2.0, [40.0, 10.0])
        src, tgt = PointSet(x), PointSet(T.apply(x))
        reg = register_2d(src, tgt, 7, epsilon=1e-8 * tgt.diameter() ** 2)
        assert reg.certificate == EPS_OPTIMAL
        np.testing.assert_allclose(reg.transform.apply(x), tgt.points, atol=1e-3 * tgt.diameter())
        assert reg.value == pytest.approx(np.sum((reg.transform.apply(x) - tgt.points) ** 2), rel=1e-9, abs=1e-12)
        # the trace is reported in original units
        assert reg.trace[-1].incumbent == pytest.approx(reg.value, rel=1e-6, abs=1e-9)

    def test_wrong_dims(self):
        with pytest.raises(ValueError):
            register_2d(PointSet(np.zeros((2, 3))), PointSet(np.zeros((2, 3))), 1)


class TestRegister3d:
    def test_clean_rigid(self):
        x = random_cloud(30, 3, seed=4).points
        rng = np.random.default_rng(4)
        T = Transform3DRigid(random_rotation(rng), rng.uniform(-0.5, 0.5, 3))
        src, tgt = PointSet(x), PointSet(T.apply(x))
        reg = register_3d(src, tgt, 30, epsilon=1e-7)
        assert reg.certificate == EPS_OPTIMAL
        np.testing.assert_allclose(reg.transform.translation, T.translation, atol=1e-3)
        np.testing.assert_allclose(reg.transform.rotation, T.rotation, atol=1e-2)
        assert set(reg.timings) == {"translation", "rotation", "total"}

    def test_pure_translation(self):
        x = random_cloud(20, 3, seed=1).points
        t = np.array([0.2, -0.1, 0.3])
        reg = register_3d(PointSet(x), PointSet(x + t), 20, epsilon=1e-10)
        np.testing.assert_allclose(reg.transform.rotation, np.eye(3), atol=1e-5)

    def test_two_points_warns(self):
        x = np.array([[0.1, 0.2, 0.3], [-0.3, 0.1, 0.0]])
        reg = register_3d(PointSet(x), PointSet(x + 0.1), 2, epsilon=1e-6, max_iterations=300)
        assert reg.certificate == BUDGET
        assert reg.warnings and "rotation" in reg.warnings[0]
        np.testing.assert_array_equal(reg.transform.rotation, np.eye(3))
        assert len(reg.pairs) == 2
