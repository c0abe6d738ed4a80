import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from polarmuon.errors import DegenerateInputError, DimensionError
from polarmuon.matcore import (
    RngStream,
    derive_stream_id,
    frobenius_norm,
    inner_product,
    nuclear_norm,
    numerical_rank,
    operator_norm,
    orthonormal_basis,
    svd,
)

finite_matrices = arrays(
    np.float64,
    st.tuples(st.integers(1, 8), st.integers(1, 8)),
    elements=st.floats(-1e6, 1e6, allow_nan=False),
)


class TestNorms:
    def test_frobenius_zero(self):
        assert frobenius_norm(np.zeros((2, 2))) == 0.0

    def test_frobenius_identity(self):
        assert frobenius_norm(np.eye(2)) == pytest.approx(np.sqrt(2))

    def test_frobenius_diag(self):
        assert frobenius_norm(np.diag([3.0, 4.0])) == pytest.approx(5.0)

    def test_operator_norm_zero(self):
        assert operator_norm(np.zeros((3, 2))) == 0.0

    def test_operator_norm_diag(self):
        assert operator_norm(np.diag([3.0, 4.0])) == pytest.approx(4.0)

    def test_operator_norm_vs_power_iteration(self):
        # independent oracle: plain power iteration on A^T A
        rng = RngStream(42).generator
        a = rng.standard_normal((8, 5))
        v = rng.standard_normal(5)
        for _ in range(500):
            v = a.T @ (a @ v)
            v /= np.linalg.norm(v)
        est = np.linalg.norm(a @ v)
        assert operator_norm(a) == pytest.approx(est, abs=1e-8)

    def test_nuclear_norm_diag(self):
        assert nuclear_norm(np.diag([3.0, 4.0])) == pytest.approx(7.0)

    def test_nuclear_norm_rank_one(self):
        u = np.array([[0.6], [0.8]])
        v = np.array([[1.0], [0.0]])
        assert nuclear_norm(u @ v.T) == pytest.approx(1.0)

    def test_nuclear_norm_matches_svd_trace(self):
        a = RngStream(7).normal((6, 6))
        assert nuclear_norm(a) == pytest.approx(np.sum(svd(a).sigma), abs=1e-10)

    def test_rejects_nan(self):
        with pytest.raises(ValueError):
            frobenius_norm(np.array([[np.nan, 0.0]]))


class TestInnerProduct:
    def test_identity(self):
        assert inner_product(np.eye(2), np.eye(2)) == pytest.approx(2.0)

    def test_zero(self):
        assert inner_product(np.ones((3, 2)), np.zeros((3, 2))) == 0.0

    def test_diag_trace(self):
        assert inner_product(np.diag([2.0, 1.0]), np.diag([1.0, 3.0])) == pytest.approx(5.0)

    def test_shape_mismatch(self):
        with pytest.raises(DimensionError):
            inner_product(np.eye(2), np.eye(3))


class TestSvd:
    def test_diag(self):
        f = svd(np.diag([2.0, 1.0]))
        np.testing.assert_allclose(f.sigma, [2.0, 1.0])
        np.testing.assert_allclose(np.abs(f.u), np.eye(2), atol=1e-12)

    def test_orthogonal_input(self):
        q, _ = np.linalg.qr(RngStream(3).normal((5, 5)))
        np.testing.assert_allclose(svd(q).sigma, np.ones(5), atol=1e-12)

    def test_rank_deficient(self):
        a = np.array([[0.0, 1.0], [1.0, 0.0], [0.0, 0.0]])
        np.testing.assert_allclose(svd(a).sigma, [1.0, 1.0], atol=1e-12)

    def test_zero_matrix(self):
        with pytest.raises(DegenerateInputError):
            svd(np.zeros((2, 2)))

    def test_reconstruction_sweep(self):
        rng = RngStream(11)
        for _ in range(200):
            shape = (
                int(rng.generator.integers(1, 65)),
                int(rng.generator.integers(1, 65)),
            )
            a = rng.normal(shape)
            f = svd(a)
            err = np.linalg.norm(f.reconstruct() - a) / np.linalg.norm(a)
            assert err <= 1e-10
            r = f.rank
            np.testing.assert_allclose(f.u.T @ f.u, np.eye(r), atol=1e-10)
            np.testing.assert_allclose(f.v.T @ f.v, np.eye(r), atol=1e-10)
            assert np.all(np.diff(f.sigma) <= 0) and np.all(f.sigma > 0)


class TestOrthonormalBasis:
    def test_identity(self):
        q = orthonormal_basis(np.eye(3))
        np.testing.assert_allclose(q.T @ q, np.eye(3), atol=1e-12)

    def test_rank_collapse(self):
        e1 = np.array([[1.0, 2.0], [0.0, 0.0], [0.0, 0.0]])
        q = orthonormal_basis(e1)
        assert q.shape == (3, 1)
        np.testing.assert_allclose(np.abs(q[:, 0]), [1.0, 0.0, 0.0], atol=1e-12)

    def test_projector_residual(self):
        y = RngStream(5).normal((10, 4))
        q = orthonormal_basis(y)
        assert np.linalg.norm(q.T @ q - np.eye(4)) <= 1e-10
        resid = np.linalg.norm(y - q @ (q.T @ y))
        assert resid <= 1e-8 * np.linalg.norm(y)

    def test_idempotent_span(self):
        y = RngStream(6).normal((9, 3))
        q1 = orthonormal_basis(y)
        q2 = orthonormal_basis(q1)
        p1 = q1 @ q1.T
        p2 = q2 @ q2.T
        assert np.linalg.norm(p1 - p2) <= 1e-10

    def test_zero_input(self):
        with pytest.raises(DegenerateInputError):
            orthonormal_basis(np.zeros((3, 2)))


@settings(max_examples=100, deadline=None)
@given(finite_matrices)
def test_norm_inequalities(a):
    # ||A||_F <= ||A||_* <= sqrt(rank) ||A||_F and ||A||_F <= sqrt(d0) ||A||_op
    fro = frobenius_norm(a)
    if fro == 0.0:
        return
    nuc = nuclear_norm(a)
    op = operator_norm(a)
    r = max(numerical_rank(a), 1)
    tol = 1e-9 * max(1.0, fro)
    assert fro <= nuc + tol
    assert nuc <= np.sqrt(r) * fro + tol
    assert fro <= np.sqrt(min(a.shape)) * op + tol


class TestRngStream:
    def test_determinism(self):
        a = RngStream(123, 5).normal((10_000,))
        b = RngStream(123, 5).normal((10_000,))
        assert np.array_equal(a, b)

    def test_streams_differ(self):
        a = RngStream(123, 0).normal((100,))
        b = RngStream(123, 1).normal((100,))
        assert not np.array_equal(a, b)

    def test_derive_stream_id_stable(self):
        assert derive_stream_id(1, 2, 3) == derive_stream_id(1, 2, 3)
        assert derive_stream_id(1, 2) != derive_stream_id(2, 1)

    def test_substream_reproducible(self):
        r = RngStream(9, 1)
        a = r.substream(4).normal((50,))
        b = RngStream(9, 1).substream(4).normal((50,))
        assert np.array_equal(a, b)
