import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tucomp.norms import (
    is_u1_subgradient, slice_nuclear_dual_witness, slice_nuclear_norm, slice_spectral_norm,
    slice_svt, soft_threshold, svt, u0_norm, u1_dual_witness, u1_norm, u1_subgradient_witness,
    uinf_norm,
)
from tucomp.tensor import elementwise_norms, inner, mode_product
from tucomp.transforms import TransformFamily, dcm, dfm

FAMILIES = ["", "1=dcm,2=dcm,3=dcm", "1=dfm,3=dfm", "2=orth"]


def fam(spec, shape):
    return TransformFamily.parse(spec, shape, seed=4)


def test_u0_norm():
    assert u0_norm(np.zeros((3, 3)), TransformFamily.identity(2)) == 0
    A = np.zeros((4, 4))
    A[1, 2] = 1.0
    assert u0_norm(A, TransformFamily.identity(2)) == 1
    # Oracle: transform the delta explicitly and count.
    T = dfm(4) @ A @ dfm(4).T
    assert np.count_nonzero(np.abs(T) > 1e-12) == 16
    assert u0_norm(A, fam("1=dfm,2=dfm", A.shape)) == 16


def test_u1_and_uinf_basic():
    A = np.random.default_rng(0).standard_normal((3, 4))
    ident = TransformFamily.identity(2)
    en = elementwise_norms(A)
    assert abs(u1_norm(A, ident) - en.l1) < 1e-12
    assert abs(uinf_norm(A, ident) - en.linf) < 1e-15
    assert u1_norm(np.zeros((2, 2)), ident) == 0 and uinf_norm(np.zeros((2, 2)), ident) == 0


def test_u1_against_mode_product_oracle():
    A = np.random.default_rng(1).standard_normal((3, 3, 3))
    T = A
    for k in range(3):
        T = mode_product(T, dcm(3), k)
    assert abs(u1_norm(A, fam("1=dcm,2=dcm,3=dcm", A.shape)) - np.abs(T).sum()) < 1e-12


def test_slice_nuclear_norm():
    M = np.random.default_rng(2).standard_normal((4, 5))
    assert abs(slice_nuclear_norm(M, TransformFamily.identity(2), (0, 1))
               - np.linalg.svd(M, compute_uv=False).sum()) < 1e-12
    # m rank-one slices with unit singular value.
    u, v = np.array([1.0, 0, 0]), np.array([0, 1.0, 0])
    A = np.stack([np.outer(u, v)] * 5, axis=-1)
    assert abs(slice_nuclear_norm(A, TransformFamily.identity(3), (0, 1)) - 5) < 1e-12
    B = np.random.default_rng(3).standard_normal((4, 4, 3))
    f = fam("3=dcm", B.shape)
    TB = mode_product(B, dcm(3), 2)
    oracle = sum(np.linalg.svd(TB[:, :, i], compute_uv=False).sum() for i in range(3))
    assert abs(slice_nuclear_norm(B, f, (0, 1)) - oracle) < 1e-9
    with pytest.raises(ValueError):
        slice_nuclear_norm(B, f, (1, 1))


def test_slice_spectral_norm():
    ident = TransformFamily.identity(3)
    assert slice_spectral_norm(np.zeros((2, 2, 2)), ident, (0, 1)) == 0
    stack = np.stack([np.eye(3)] * 4, axis=-1)
    assert abs(slice_spectral_norm(stack, ident, (0, 1)) - 1) < 1e-12


@pytest.mark.parametrize("spec", FAMILIES)
def test_u1_uinf_duality(spec):
    rng = np.random.default_rng(5)
    shape = (3, 4, 5)
    f = fam(spec, shape)
    for _ in range(20):
        A, B = rng.standard_normal(shape), rng.standard_normal(shape)
        assert inner(A, B) <= u1_norm(A, f) * uinf_norm(B, f) + 1e-9
        W = u1_dual_witness(A, f)
        assert not np.iscomplexobj(W)
        assert abs(uinf_norm(W, f) - 1) < 1e-10
        assert abs(inner(A, W) - u1_norm(A, f)) <= 1e-8 * u1_norm(A, f)


@pytest.mark.parametrize("spec", ["", "3=dcm", "3=dfm"])
def test_slice_duality(spec):
    rng = np.random.default_rng(6)
    shape = (4, 3, 5)
    f = fam(spec, shape)
    for _ in range(20):
        A, B = rng.standard_normal(shape), rng.standard_normal(shape)
        assert inner(A, B) <= (slice_nuclear_norm(A, f, (0, 1))
                               * slice_spectral_norm(B, f, (0, 1)) + 1e-9)
        W = slice_nuclear_dual_witness(A, f, (0, 1))
        assert abs(slice_spectral_norm(W, f, (0, 1)) - 1) < 1e-10
        nuc = slice_nuclear_norm(A, f, (0, 1))
        assert abs(inner(A, W) - nuc) <= 1e-8 * nuc


def test_soft_threshold_scalars():
    assert soft_threshold(np.array([3.0]), 1.0)[0] == 2.0
    assert soft_threshold(np.array([-0.5]), 1.0)[0] == 0.0
    assert soft_threshold(np.array([-3.0]), 1.0)[0] == -2.0
    np.testing.assert_allclose(soft_threshold(np.array([3 + 4j]), 1.0), [0.8 * (3 + 4j)])
    assert soft_threshold(np.array([0j]), 1.0)[0] == 0


def test_soft_threshold_grid_oracle():
    rng = np.random.default_rng(7)
    grid = np.linspace(-6, 6, 120001)
    for _ in range(20):
        a, tau = rng.uniform(-5, 5), rng.uniform(0.05, 2)
        obj = tau * np.abs(grid) + 0.5 * (grid - a) ** 2
        x = soft_threshold(np.array([a]), tau)[0]
        assert abs(x - grid[np.argmin(obj)]) < 2e-4
        assert tau * abs(x) + 0.5 * (x - a) ** 2 <= obj.min() + 1e-12


def test_svt_limits_and_perturbation_oracle():
    rng = np.random.default_rng(8)
    M = rng.standard_normal((3, 3))
    s1 = np.linalg.svd(M, compute_uv=False)[0]
    np.testing.assert_allclose(svt(M, s1), np.zeros((3, 3)), atol=1e-12)
    np.testing.assert_allclose(svt(M, 0.0), M, atol=1e-12)
    tau = 0.5
    X = svt(M, tau)

    def obj(Y):
        return tau * np.linalg.svd(Y, compute_uv=False).sum() + 0.5 * np.linalg.norm(Y - M) ** 2
    base = obj(X)
    cands = X + 0.05 * rng.standard_normal((10_000, 3, 3))
    vals = tau * np.linalg.svd(cands, compute_uv=False).sum(-1) \
        + 0.5 * np.linalg.norm(cands - M, axis=(1, 2)) ** 2
    assert (vals - base).min() >= -1e-9


def test_slice_svt_batches():
    A = np.random.default_rng(9).standard_normal((3, 4, 5))
    out = slice_svt(A, 0.3, (0, 2))
    for j in range(4):
        np.testing.assert_allclose(out[:, j, :], svt(A[:, j, :], 0.3), atol=1e-12)


def test_subgradient_witness():
    A = np.array([[1.5, -2.0], [0.0, 3.0]])
    ident = TransformFamily.identity(2)
    np.testing.assert_array_equal(u1_subgradient_witness(A, ident), np.sign(A))
    rng = np.random.default_rng(10)
    f = fam("1=dfm,2=dcm", (4, 3))
    for _ in range(100):
        A, B = rng.standard_normal((4, 3)), rng.standard_normal((4, 3))
        W = u1_subgradient_witness(A, f)
        assert u1_norm(B, f) >= u1_norm(A, f) + inner(W, B - A) - 1e-9
        assert is_u1_subgradient(W, A, f)


def test_subgradient_membership():
    Z = np.zeros((3, 3))
    ident = TransformFamily.identity(2)
    F = np.random.default_rng(11).uniform(-1, 1, (3, 3))
    assert is_u1_subgradient(F, Z, ident)
    assert not is_u1_subgradient(2 * np.ones((3, 3)), Z, ident)
    A = np.diag([1.0, 0.0, 0.0])
    G = np.sign(A) + np.diag([0, 0.5, -0.5])
    assert is_u1_subgradient(G, A, ident)
    assert not is_u1_subgradient(G + np.diag([0.1, 0, 0]), A, ident)


norm_families = st.sampled_from(FAMILIES)


@settings(max_examples=40, deadline=None)
@given(norm_families, st.integers(0, 2 ** 31), st.floats(-3, 3))
def test_norm_axioms(spec, seed, alpha):
    rng = np.random.default_rng(seed)
    shape = (3, 4, 5)
    f = fam(spec, shape)
    A, B = rng.standard_normal(shape), rng.standard_normal(shape)
    for norm in (lambda X: u1_norm(X, f), lambda X: uinf_norm(X, f),
                 lambda X: slice_nuclear_norm(X, f, (0, 1))):
        assert abs(norm(alpha * A) - abs(alpha) * norm(A)) <= 1e-9 * (1 + norm(A))
        assert norm(A + B) <= norm(A) + norm(B) + 1e-9
    assert u1_norm(A, f) <= u0_norm(A, f) * uinf_norm(A, f) + 1e-9


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2 ** 31), st.floats(0.01, 2))
def test_prox_nonexpansive(seed, tau):
    rng = np.random.default_rng(seed)
    A, B = rng.standard_normal((4, 5)), rng.standard_normal((4, 5))
    assert np.linalg.norm(soft_threshold(A, tau) - soft_threshold(B, tau)) <= np.linalg.norm(A - B) + 1e-12
    assert np.linalg.norm(svt(A, tau) - svt(B, tau)) <= np.linalg.norm(A - B) + 1e-10
    Ac, Bc = A + 1j * B, B - 1j * A
    assert np.linalg.norm(soft_threshold(Ac, tau) - soft_threshold(Bc, tau)) <= np.linalg.norm(Ac - Bc) + 1e-12


def test_u1_permutation_invariance():
    # Replacing the fixed matrix F by F P and permuting the data by P^T
    # leaves the transformed tensor unchanged.
    rng = np.random.default_rng(12)
    A = rng.standard_normal((5, 4))
    P = np.eye(5)[rng.permutation(5)]
    f = fam("1=dcm", A.shape)
    g = TransformFamily.identity(2).with_fixed(0, dcm(5) @ P)
    assert abs(u1_norm(A, f) - u1_norm(P.T @ A, g)) < 1e-12
