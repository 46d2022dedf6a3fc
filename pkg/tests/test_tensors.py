import numpy as np
import pytest

from motifclust.tensors import (
    SparseTensor,
    dense_reconstruct,
    gram_hadamard,
    matricize,
    mttkrp_sparse,
    residual_fro_sq,
)

from conftest import random_sparse_tensor


def kr_columns(factors, skip):
    """Column-wise Kronecker of the factors' rows, skipping one mode.

    Column c is kron over i != skip of factors[i][c, :], in ascending mode
    order; this is the dense matrix the sparse kernels avoid materializing."""
    c = factors[0].shape[0]
    cols = []
    for k in range(c):
        col = np.ones(1)
        for i, f in enumerate(factors):
            if i != skip:
                col = np.kron(col, f[k, :])
        cols.append(col)
    return np.stack(cols, axis=1)


def random_factors(rng, dims, c):
    return [rng.uniform(0.0, 1.0, size=(c, d)) for d in dims]


class TestSparseTensor:
    def test_sorting_and_lookup(self):
        x = SparseTensor((2, 3), [[1, 2], [0, 0]], [5.0, 7.0])
        assert x.indices.tolist() == [[0, 0], [1, 2]]
        assert x.values.tolist() == [7.0, 5.0]
        assert x.nnz == 2

    def test_rejects_out_of_bounds(self):
        with pytest.raises(ValueError, match="out of bounds"):
            SparseTensor((2, 2), [[0, 2]], [1.0])

    def test_rejects_duplicates(self):
        with pytest.raises(ValueError, match="duplicate"):
            SparseTensor((2, 2), [[0, 1], [0, 1]], [1.0, 1.0])

    def test_from_tuples_dedups(self):
        x = SparseTensor.from_tuples((4, 4), [(1, 2), (1, 2), (0, 3)])
        assert x.nnz == 2
        assert set(map(tuple, x.indices.tolist())) == {(1, 2), (0, 3)}

    def test_todense(self):
        x = SparseTensor.from_tuples((2, 2, 2), [(0, 1, 1), (1, 0, 0)])
        dense = x.todense()
        assert dense[0, 1, 1] == 1.0 and dense[1, 0, 0] == 1.0
        assert dense.sum() == 2.0

    def test_tsv_round_trip(self, tmp_path):
        rng = np.random.default_rng(2)
        x = random_sparse_tensor(rng, (5, 6, 7), 20)
        path = tmp_path / "x.tsv"
        x.write_tsv(path)
        assert SparseTensor.read_tsv(path) == x

    def test_empty(self):
        x = SparseTensor.empty((3, 4))
        assert x.nnz == 0 and x.dims == (3, 4)


class TestMttkrp:
    def test_all_zero_tensor(self):
        rng = np.random.default_rng(0)
        x = SparseTensor.empty((4, 5))
        f = random_factors(rng, (4, 5), 3)
        assert np.array_equal(mttkrp_sparse(x, f, 0), np.zeros((4, 3)))

    def test_identity_collapses_to_other_factor(self):
        # N=2 with X = I: row j of the result is column j of the other factor.
        rng = np.random.default_rng(1)
        x = SparseTensor.from_tuples((3, 3), [(j, j) for j in range(3)])
        w = rng.uniform(0.0, 1.0, size=(4, 3))
        out = mttkrp_sparse(x, [np.zeros((4, 3)), w], 0)
        np.testing.assert_allclose(out, w.T, rtol=0, atol=0)

    def test_matches_dense_oracle_order4(self):
        rng = np.random.default_rng(7)
        dims = (5, 6, 7, 8)
        x = random_sparse_tensor(rng, dims, 50)
        f = random_factors(rng, dims, 3)
        dense = x.todense()
        for k in range(4):
            expected = matricize(dense, k).T @ kr_columns(f, k)
            got = mttkrp_sparse(x, f, k)
            np.testing.assert_allclose(got, expected, rtol=1e-10, atol=1e-12)

    def test_shape_mismatch(self):
        x = SparseTensor.empty((4, 5))
        with pytest.raises(ValueError):
            mttkrp_sparse(x, [np.zeros((2, 4))], 0)
        with pytest.raises(ValueError):
            mttkrp_sparse(x, [np.zeros((2, 4)), np.zeros((2, 6))], 0)


class TestGramHadamard:
    def test_single_other_factor(self):
        rng = np.random.default_rng(3)
        v = rng.uniform(size=(3, 5))
        out = gram_hadamard([np.zeros((3, 9)), v], 0)
        np.testing.assert_allclose(out, v @ v.T)

    def test_zero_row_annihilates(self):
        rng = np.random.default_rng(4)
        a = rng.uniform(size=(3, 4))
        a[1, :] = 0.0
        out = gram_hadamard([a, rng.uniform(size=(3, 5))], 1)
        assert np.all(out[1, :] == 0) and np.all(out[:, 1] == 0)

    def test_matches_dense_kron_oracle(self):
        rng = np.random.default_rng(5)
        dims = (3, 4, 2, 3)
        f = random_factors(rng, dims, 3)
        for k in range(4):
            kr = kr_columns(f, k)
            np.testing.assert_allclose(gram_hadamard(f, k), kr.T @ kr, rtol=1e-10)

    def test_symmetric_psd(self):
        rng = np.random.default_rng(6)
        for _ in range(20):
            dims = tuple(rng.integers(2, 8, size=rng.integers(2, 5)))
            f = random_factors(rng, dims, int(rng.integers(2, 5)))
            g = gram_hadamard(f, int(rng.integers(0, len(dims))))
            np.testing.assert_allclose(g, g.T, rtol=1e-12)
            assert np.linalg.eigvalsh(g).min() >= -1e-10


class TestResidual:
    def test_all_zero(self):
        x = SparseTensor.empty((3, 4, 5))
        f = [np.zeros((2, d)) for d in (3, 4, 5)]
        assert residual_fro_sq(x, f) == 0.0

    def test_zero_tensor_measures_reconstruction(self):
        rng = np.random.default_rng(8)
        dims = (3, 4, 5)
        f = random_factors(rng, dims, 2)
        expected = np.sum(dense_reconstruct(f) ** 2)
        got = residual_fro_sq(SparseTensor.empty(dims), f)
        np.testing.assert_allclose(got, expected, rtol=1e-9)

    def test_matches_dense_oracle(self):
        rng = np.random.default_rng(9)
        for _ in range(25):
            order = int(rng.integers(2, 5))
            dims = tuple(int(d) for d in rng.integers(2, 8, size=order))
            x = random_sparse_tensor(rng, dims, int(rng.integers(0, 20)))
            f = random_factors(rng, dims, int(rng.integers(1, 4)))
            expected = np.sum((x.todense() - dense_reconstruct(f)) ** 2)
            got = residual_fro_sq(x, f)
            np.testing.assert_allclose(got, expected, rtol=1e-9, atol=1e-12)
            assert got >= 0.0

    def test_near_exact_fit_clamps_to_zero(self):
        rng = np.random.default_rng(10)
        f = random_factors(rng, (4, 5), 2)
        dense = dense_reconstruct(f)
        idx = np.argwhere(dense != 0)
        x = SparseTensor((4, 5), idx, dense[tuple(idx.T)])
        assert residual_fro_sq(x, f) <= 1e-10


class TestDenseOracles:
    def test_rank_one_ones(self):
        f = [np.ones((1, 3)), np.ones((1, 4))]
        np.testing.assert_array_equal(dense_reconstruct(f), np.ones((3, 4)))

    def test_matrix_case(self):
        rng = np.random.default_rng(11)
        v1, v2 = rng.uniform(size=(3, 4)), rng.uniform(size=(3, 5))
        np.testing.assert_allclose(dense_reconstruct([v1, v2]), v1.T @ v2)

    def test_order3_against_triple_loop(self):
        rng = np.random.default_rng(12)
        f = random_factors(rng, (3, 4, 2), 3)
        got = dense_reconstruct(f)
        for i in range(3):
            for j in range(4):
                for k in range(2):
                    expected = sum(
                        f[0][c, i] * f[1][c, j] * f[2][c, k] for c in range(3)
                    )
                    assert got[i, j, k] == pytest.approx(expected, rel=1e-12)

    def test_matricize_order1(self):
        v = np.arange(4.0)
        np.testing.assert_array_equal(matricize(v, 0), v.reshape(1, 4).T.reshape(-1, 4))
        assert matricize(v, 0).shape == (1, 4)

    def test_matricize_2x3(self):
        m = np.arange(6.0).reshape(2, 3)
        out = matricize(m, 0)
        assert out.shape == (3, 2)
        # column j of the unfolding is the slice with first index j
        np.testing.assert_array_equal(out[:, 0], m[0])
        np.testing.assert_array_equal(out[:, 1], m[1])

    def test_matricize_invalid_mode(self):
        with pytest.raises(ValueError):
            matricize(np.zeros((2, 2)), 2)

    def test_unfolded_residual_matches_every_mode(self):
        # the Frobenius residual is the same computed natively or through any
        # mode's unfolding against the Kronecker-with-identity factor
        rng = np.random.default_rng(13)
        for _ in range(10):
            order = int(rng.integers(2, 5))
            dims = tuple(int(d) for d in rng.integers(2, 6, size=order))
            x = rng.uniform(size=dims)
            f = random_factors(rng, dims, int(rng.integers(1, 4)))
            native = np.linalg.norm(x - dense_reconstruct(f))
            for k in range(order):
                unfolded = np.linalg.norm(matricize(x, k) - kr_columns(f, k) @ f[k])
                np.testing.assert_allclose(unfolded, native, rtol=1e-9)
