import numpy as np
import pytest

from globreg.geometry import PointSet, Transform3DRigid, quaternion_to_matrix, random_rotation
from globreg.rif3d import Rif3DModel, RotationUnderdetermined, kabsch_rotation, recover_rotation


def model_with_norms(x, y_norms):
    """Targets placed on the x axis so that ``||y_j||`` equals the given norms."""
    y = np.array([[r, 0.0, 0.0] for r in y_norms])
    return Rif3DModel(PointSet(np.atleast_2d(x)), PointSet(y))


def horn_rotation(a, b):
    """Rotation minimising sum ||R a_k - b_k||^2 from the top eigenvector of Horn's 4x4 matrix."""
    S = a.T @ b
    (sxx, sxy, sxz), (syx, syy, syz), (szx, szy, szz) = S
    N = np.array(
        [
            [sxx + syy + szz, syz - szy, szx - sxz, sxy - syx],
            [syz - szy, sxx - syy - szz, sxy + syx, szx + sxz],
            [szx - sxz, sxy + syx, -sxx + syy - szz, syz + szy],
            [sxy - syx, szx + sxz, syz + szy, -sxx - syy + szz],
        ]
    )
    w, v = np.linalg.eigh(N)
    return quaternion_to_matrix(v[:, -1])


class TestEvaluations:
    @pytest.mark.parametrize(
        "x, yn, t, expected",
        [
            ((1, 0, 0), 1.0, (0, 0, 0), 0.0),
            ((1, 0, 0), np.sqrt(5), (1, 1, 0), 0.0),
            ((0, 0, 0), 2.0, (1, 0, 0), 1.0),
        ],
    )
    def test_true(self, x, yn, t, expected):
        assert model_with_norms(x, [yn]).eval_true(0, 0, t) == pytest.approx(expected, abs=1e-14)

    def test_split_example(self):
        m = model_with_norms((1, 0, 0), [2.0])
        assert m.eval_cvx(0, 0, np.zeros(3)) == pytest.approx(1.0)
        assert m.eval_cav(0, 0, np.zeros(3)) == pytest.approx(0.0)
        assert m.eval_true(0, 0, np.zeros(3)) == pytest.approx(1.0)

    def test_target_at_origin(self, rng):
        m = model_with_norms((0.3, -0.2, 0.5), [0.0])
        for t in rng.normal(size=(10, 3)):
            assert m.eval_cav(0, 0, t) == 0.0
            assert m.eval_true(0, 0, t) == pytest.approx(m.eval_cvx(0, 0, t), abs=1e-12)

    def test_source_lands_at_origin(self):
        x = np.array([0.4, -1.0, 2.0])
        m = model_with_norms(x, [1.5])
        assert m.eval_cvx(0, 0, -x) == 0.0
        assert m.eval_cav(0, 0, -x) == pytest.approx(2.25)
        assert m.eval_true(0, 0, -x) == pytest.approx(2.25)

    @pytest.mark.parametrize(
        "x, t0, expected",
        [((1, 0, 0), (0, 0, 0), (2, 0, 0)), ((1, 2, 3), (1, 1, 1), (4, 6, 8)), ((1, 2, 3), (-1, -2, -3), (0, 0, 0))],
    )
    def test_gradient(self, x, t0, expected):
        np.testing.assert_allclose(model_with_norms(x, [1.0]).grad_cvx(0, 0, t0), expected)

    def test_matrices_match_pairs(self, rng):
        m = Rif3DModel(PointSet(rng.normal(size=(4, 3))), PointSet(rng.normal(size=(5, 3))))
        t = rng.normal(size=3)
        for name in ("true", "cvx", "cav"):
            mat = getattr(m, f"{name}_matrix")(t)
            ref = np.array([[getattr(m, f"eval_{name}")(i, j, t) for j in range(5)] for i in range(4)])
            np.testing.assert_allclose(mat, ref, atol=1e-12)
        G = m.grad_cvx_tensor(t)
        np.testing.assert_allclose(G[2, 3], m.grad_cvx(2, 3, t))
        ts = rng.normal(size=(6, 3))
        np.testing.assert_allclose(m.cav_stack(ts), np.stack([m.cav_matrix(v) for v in ts]), atol=1e-12)


class TestProperties:
    def test_dc_identity(self, rng):
        m = Rif3DModel(PointSet(rng.normal(size=(10, 3))), PointSet(rng.normal(size=(12, 3))))
        for _ in range(2000):
            t = rng.normal(size=3) * 2
            np.testing.assert_allclose(m.cvx_matrix(t) + m.cav_matrix(t), m.true_matrix(t), atol=1e-9)

    def test_convex_and_concave_parts(self, rng):
        m = Rif3DModel(PointSet(rng.normal(size=(5, 3))), PointSet(rng.normal(size=(5, 3))))
        for _ in range(500):
            a, b = rng.normal(size=(2, 3)) * 2
            mid = 0.5 * (a + b)
            assert np.all(m.cvx_matrix(mid) <= 0.5 * (m.cvx_matrix(a) + m.cvx_matrix(b)) + 1e-9)
            assert np.all(m.cav_matrix(mid) >= 0.5 * (m.cav_matrix(a) + m.cav_matrix(b)) - 1e-9)

    def test_rotation_invariance(self, rng):
        x, y = rng.normal(size=(6, 3)), rng.normal(size=(7, 3))
        m1 = Rif3DModel(PointSet(x), PointSet(y))
        m2 = Rif3DModel(PointSet(x), PointSet(y @ random_rotation(rng).T))
        for t in rng.normal(size=(20, 3)):
            np.testing.assert_allclose(m1.true_matrix(t), m2.true_matrix(t), atol=1e-12)
            np.testing.assert_allclose(m1.cav_matrix(t), m2.cav_matrix(t), atol=1e-12)

    def test_default_box_contains_truth(self, rng):
        for _ in range(200):
            x = rng.normal(size=(20, 3))
            t = rng.uniform(-3, 3, 3)
            T = Transform3DRigid(random_rotation(rng), t)
            y = np.vstack([T.apply(x[:5]), rng.normal(size=(10, 3)) * 4])
            model = Rif3DModel(PointSet(x), PointSet(y))
            assert model.default_box().contains(t)
            assert model.default_box(5).contains(t)

    def test_default_box_shrinks_with_np(self, rng):
        x = rng.normal(size=(30, 3))
        T = Transform3DRigid(random_rotation(rng), [0.5, -0.2, 0.1])
        model = Rif3DModel(PointSet(x), PointSet(T.apply(x)))
        vols = [model.default_box(k).volume() for k in (1, 10, 30)]
        assert vols[0] > vols[1] > vols[2]
        assert model.default_box(30).contains(T.translation)

    @pytest.mark.parametrize("n_p", [0, 31])
    def test_default_box_bad_np(self, rng, n_p):
        with pytest.raises(ValueError):
            Rif3DModel(PointSet(rng.normal(size=(30, 3))), PointSet(rng.normal(size=(30, 3)))).default_box(n_p)

    def test_needs_3d(self):
        with pytest.raises(ValueError):
            Rif3DModel(PointSet([[0.0, 0.0]]), PointSet([[0.0, 0.0]]))


class TestRecoverRotation:
    def test_identity(self, rng):
        x = rng.normal(size=(15, 3))
        t = np.array([0.5, -0.2, 0.1])
        T, pairs = recover_rotation(PointSet(x), PointSet(x + t), t, 15)
        np.testing.assert_allclose(T.rotation, np.eye(3), atol=1e-6)
        assert len(pairs) == 15

    def test_quarter_turn_matches_quaternion_oracle(self, rng):
        x = rng.normal(size=(20, 3))
        t = np.array([0.3, 0.1, -0.4])
        Rz = np.array([[0.0, -1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 1.0]])
        y = (x + t) @ Rz.T
        T, pairs = recover_rotation(PointSet(x), PointSet(y), t, 20)
        oracle = horn_rotation(x[pairs[:, 0]] + t, y[pairs[:, 1]])
        np.testing.assert_allclose(T.rotation, Rz, atol=1e-9)
        np.testing.assert_allclose(T.rotation, oracle, atol=1e-9)

    def test_kabsch_vs_horn_on_noisy_pairs(self, rng):
        for _ in range(50):
            a = rng.normal(size=(10, 3))
            R = random_rotation(rng)
            b = a @ R.T + 0.05 * rng.normal(size=a.shape)
            np.testing.assert_allclose(kabsch_rotation(a, b), horn_rotation(a, b), atol=1e-8)

    def test_two_pairs_underdetermined(self, rng):
        x = rng.normal(size=(2, 3))
        with pytest.raises(RotationUnderdetermined):
            recover_rotation(PointSet(x), PointSet(x), np.zeros(3), 2)

    def test_collinear_underdetermined(self):
        x = np.outer([1.0, 2.0, 3.0, 4.0], [1.0, 1.0, 0.0])
        with pytest.raises(RotationUnderdetermined, match="collinear"):
            recover_rotation(PointSet(x), PointSet(x), np.zeros(3), 4)

    def test_non_finite_translation(self, rng):
        x = rng.normal(size=(5, 3))
        with pytest.raises(ValueError):
            recover_rotation(PointSet(x), PointSet(x), [np.nan, 0, 0], 5)
