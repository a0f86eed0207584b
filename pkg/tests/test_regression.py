import json
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from polyntk.kernels import KernelModel, pnn_ntk
from polyntk.regression import (
    Dataset,
    GramMatrix,
    NumericalError,
    assemble_gram,
    fit,
    predict,
    read_dataset_csv,
    spectrum_bounds,
    write_dataset_csv,
)

GOLDEN = json.loads((Path(__file__).parent / "golden.json").read_text())
PNN2 = KernelModel("pnn", 2, 3)
MLP3 = KernelModel("mlp", 3, 3)


def random_data(n=12, d=3, seed=0):
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((n, d))
    return Dataset(X, np.sin(X[:, 0]) + X[:, 1] ** 2)


class TestDataset:
    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            Dataset(np.ones((3, 2)), np.ones(2))

    def test_empty(self):
        with pytest.raises(ValueError):
            Dataset(np.ones((0, 2)), np.ones(0))


class TestGram:
    def test_single_point(self):
        x = np.array([[0.5, 0.1, -0.2]])
        G = assemble_gram(PNN2, x)
        assert G.entries.shape == (1, 1)
        assert G.entries[0, 0] == pytest.approx(pnn_ntk(2, x[0], x[0]))

    def test_orthogonal_pair(self):
        G = assemble_gram(PNN2, np.eye(3)[:2]).entries
        assert np.allclose(np.diag(G), GOLDEN["pnn2_unit_diag"], rtol=1e-14)
        assert G[0, 1] == pytest.approx(GOLDEN["pnn2_orthogonal_unit"], abs=1e-14)

    def test_duplicate_rows(self):
        with pytest.raises(ValueError):
            assemble_gram(PNN2, np.array([[1.0, 0, 0], [1.0, 0, 0]]))

    def test_exactly_symmetric_and_psd(self):
        for kernel in (PNN2, MLP3, KernelModel("mfn", 2, 3)):
            G = assemble_gram(kernel, random_data(20).X).entries
            assert np.array_equal(G, G.T)
            assert np.linalg.eigvalsh(G)[0] >= -1e-8 * np.trace(G)

    def test_permutation(self):
        X = random_data(8).X
        perm = np.random.default_rng(1).permutation(8)
        G = assemble_gram(PNN2, X).entries
        assert np.allclose(assemble_gram(PNN2, X[perm]).entries, G[np.ix_(perm, perm)], rtol=1e-14)


class TestSpectrum:
    def test_small_cases(self):
        assert spectrum_bounds(GramMatrix(np.array([[3.0]]))) == pytest.approx((3.0, 3.0))
        assert spectrum_bounds(np.diag([1.0, 4.0])) == pytest.approx((1.0, 4.0))


class TestFit:
    def test_single_point_interpolates(self):
        data = Dataset(np.array([[0.2, 0.4, -1.0]]), np.array([3.5]))
        model = fit(PNN2, data)
        assert model.jitter == 0.0
        assert predict(model, data.X[0]) == pytest.approx(3.5, rel=1e-14)

    def test_zero_labels(self):
        data = random_data()
        model = fit(PNN2, Dataset(data.X, np.zeros(len(data))))
        assert not np.any(model.alpha)
        assert predict(model, np.ones(3)) == 0.0

    def test_antipodal_pair(self):
        v = np.array([0.6, 0.0, 0.8])
        model = fit(PNN2, Dataset(np.stack([v, -v]), np.array([1.0, 1.0])))
        assert predict(model, v) == pytest.approx(1.0, rel=1e-12)

    def test_interpolation_and_residual(self):
        data = random_data(30)
        model = fit(MLP3, data)
        K = model.gram.entries + model.jitter * np.eye(30)
        assert np.max(np.abs(K @ model.alpha - data.y)) <= 1e-8 * np.max(np.abs(data.y))
        if spectrum_bounds(model.gram)[0] > 1e-8:
            assert np.max(np.abs(predict(model, data.X) - data.y)) <= 1e-6 * np.max(np.abs(data.y))

    def test_solution_matches_dense_solve(self):
        data = random_data(15, seed=3)
        model = fit(PNN2, data)
        ref = np.linalg.solve(model.gram.entries, data.y)
        assert np.allclose(model.alpha, ref, rtol=1e-8, atol=1e-10)

    def test_linearity_in_labels(self):
        data = random_data(10)
        y2 = np.cos(data.X[:, 2])
        m1 = fit(PNN2, data)
        m2 = fit(PNN2, Dataset(data.X, y2))
        m12 = fit(PNN2, Dataset(data.X, data.y + y2))
        Q = np.random.default_rng(9).standard_normal((5, 3))
        assert np.allclose(predict(m12, Q), predict(m1, Q) + predict(m2, Q), rtol=1e-10, atol=1e-10)

    def test_jitter_ladder_engages(self):
        # v and 2v: homogeneity makes the Gram rank one
        X = np.array([[0.6, 0.0, 0.8], [1.2, 0.0, 1.6]])
        model = fit(PNN2, Dataset(X, np.array([1.0, 2.0])))
        assert model.jitter > 0

    def test_hopeless_gram_raises(self):
        class Rank1:
            def __call__(self, a, b):
                return -np.ones(np.broadcast_shapes(a.shape, b.shape)[:-1])

        with pytest.raises(NumericalError):
            fit(Rank1(), random_data(5))


class TestHomogeneity:
    @settings(max_examples=30, deadline=None)
    @given(st.floats(0.2, 5.0), st.integers(0, 100))
    def test_pnn_predictor_scales(self, t, seed):
        data = random_data(10, seed=seed)
        model = fit(PNN2, data)
        v = np.random.default_rng(seed + 1).standard_normal(3)
        base = predict(model, v)
        assert predict(model, t * v) == pytest.approx(t**2 * base, rel=1e-8, abs=1e-12)

    @settings(max_examples=30, deadline=None)
    @given(st.floats(0.2, 5.0), st.integers(0, 100))
    def test_mlp_predictor_scales(self, t, seed):
        data = random_data(10, seed=seed)
        model = fit(MLP3, data)
        v = np.random.default_rng(seed + 1).standard_normal(3)
        assert predict(model, t * v) == pytest.approx(t * predict(model, v), rel=1e-8, abs=1e-12)


class TestCsv:
    def test_round_trip(self, tmp_path):
        data = random_data(4)
        path = tmp_path / "d.csv"
        write_dataset_csv(path, data)
        back = read_dataset_csv(path)
        assert np.array_equal(back.X, data.X) and np.array_equal(back.y, data.y)

    @pytest.mark.parametrize(
        "text",
        ["x1,x2,y\n1,2,3\n4,5\n", "a,b,y\n1,2,3\n", "x1,x2,z\n1,2,3\n", "x1,y\n"],
    )
    def test_rejects_bad_files(self, tmp_path, text):
        path = tmp_path / "bad.csv"
        path.write_text(text)
        with pytest.raises(ValueError):
            read_dataset_csv(path)
