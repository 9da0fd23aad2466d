import dataclasses

import numpy as np
import pytest

from tucomp.solver import (
    SolverConfig, SolverState, apply_factors, apply_factors_adjoint, procrustes_objective,
    procrustes_update, solve, update_E, update_penalties, update_U, update_Y, update_Z,
)
from tucomp.synthetic import SyntheticSpec, gen_mask, gen_synthetic, relative_error
from tucomp.tensor import mode_product, unfold
from tucomp.transforms import TransformFamily, random_orthogonal, unitarity_error

SMALL = (8, 8, 8)


def small_problem(rank=2, p=0.6, seed=0):
    M = gen_synthetic(SyntheticSpec(shape=SMALL, rank=rank, seed=seed))
    mask = gen_mask(SMALL, p, seed + 100)
    family = TransformFamily.parse("1=dcm,2=dcm,3=learnable", SMALL)
    return M, mask, family


def test_config_validation():
    SolverConfig().validate()
    bad = [dict(model="x"), dict(model="tcsl"), dict(rho_mu=1.0), dict(mu0=0),
           dict(mu_bar=1e-3), dict(eps=0), dict(max_iter=0),
           dict(theorem_mode=True, rho_mu=1.2, rho_eta=1.3)]
    for kw in bad:
        with pytest.raises(ValueError):
            SolverConfig(**kw).validate()
    SolverConfig(theorem_mode=True).validate()


def test_penalty_schedule_caps():
    cfg = SolverConfig(mu_bar=1.0, eta_bar=2.0)
    assert update_penalties(0.5, 1.0, cfg) == pytest.approx((0.55, 1.22))
    assert update_penalties(0.99, 1.9, cfg) == (1.0, 2.0)


def test_factor_application_round_trip():
    rng = np.random.default_rng(0)
    A = rng.standard_normal((3, 4, 5))
    U = {0: random_orthogonal(3, 1), 2: random_orthogonal(5, 2)}
    np.testing.assert_allclose(apply_factors_adjoint(apply_factors(A, U), U), A, atol=1e-12)
    expected = mode_product(mode_product(A, U[0], 0), U[2], 2)
    np.testing.assert_allclose(apply_factors(A, U), expected, atol=1e-12)


def test_procrustes_matches_brute_force_2x2():
    # Compare against a dense scan of rotations and reflections.
    rng = np.random.default_rng(1)
    A, B, U0 = rng.standard_normal((2, 6)), rng.standard_normal((2, 6)), np.eye(2)
    mu, eta = 1.0, 0.3
    U = procrustes_update(A, B, U0, mu, eta)
    best = np.inf
    for th in np.linspace(0, 2 * np.pi, 20001):
        c, s = np.cos(th), np.sin(th)
        for R in (np.array([[c, -s], [s, c]]), np.array([[c, s], [s, -c]])):
            best = min(best, procrustes_objective(R, A, B, U0, mu, eta))
    assert procrustes_objective(U, A, B, U0, mu, eta) <= best + 1e-9
    assert unitarity_error(U) < 1e-12


def test_procrustes_complex_and_eta_only():
    rng = np.random.default_rng(2)
    U0 = random_orthogonal(4, 3, complex=True)
    np.testing.assert_allclose(procrustes_update(np.zeros((4, 3)), np.zeros((4, 3)), U0, 1.0, 1.0),
                               U0, atol=1e-12)
    A = rng.standard_normal((4, 9)) + 1j * rng.standard_normal((4, 9))
    B = rng.standard_normal((4, 9)) + 1j * rng.standard_normal((4, 9))
    U = procrustes_update(A, B, U0, 2.0, 0.1)
    assert unitarity_error(U) < 1e-10
    assert procrustes_objective(U, A, B, U0, 2.0, 0.1) <= procrustes_objective(U0, A, B, U0, 2.0, 0.1)
    for _ in range(200):
        V = random_orthogonal(4, rng, complex=True)
        assert procrustes_objective(U, A, B, U0, 2.0, 0.1) <= procrustes_objective(V, A, B, U0, 2.0, 0.1) + 1e-9


def _state(shape, family, rng, mu=0.7, eta=0.2):
    U = {k: random_orthogonal(shape[k], rng) for k in family.learnable_modes}
    return SolverState(Z=rng.standard_normal(shape), U=U, E=rng.standard_normal(shape),
                       Y=rng.standard_normal(shape), mu=mu, eta=eta)


def test_update_Z_tcu1_oracle():
    rng = np.random.default_rng(3)
    family = TransformFamily.parse("1=dcm,3=learnable", (4, 3, 5))
    st = _state((4, 3, 5), family, rng)
    P = rng.standard_normal((4, 3, 5))
    Z = update_Z(st, SolverConfig(), family, P, real=True)
    W = (st.mu * mode_product(P, st.U[2], 2) + st.eta * st.Z) / (st.mu + st.eta)
    T = family.forward(W)
    T = np.sign(T) * np.maximum(np.abs(T) - 1 / (st.mu + st.eta), 0)
    np.testing.assert_allclose(Z, family.inverse(T), atol=1e-12)


def test_update_Z_tcsl_oracle():
    rng = np.random.default_rng(4)
    family = TransformFamily.parse("3=learnable", (4, 3, 5))
    st = _state((4, 3, 5), family, rng)
    P = rng.standard_normal((4, 3, 5))
    cfg = SolverConfig(model="tcsl", slice_pair=(0, 1))
    Z = update_Z(st, cfg, family, P, real=True)
    W = (st.mu * mode_product(P, st.U[2], 2) + st.eta * st.Z) / (st.mu + st.eta)
    for i in range(5):
        u, s, vh = np.linalg.svd(W[:, :, i], full_matrices=False)
        np.testing.assert_allclose(Z[:, :, i], (u * np.maximum(s - 1 / (st.mu + st.eta), 0)) @ vh,
                                   atol=1e-12)


def test_update_Z_rejects_non_unitary_factor():
    rng = np.random.default_rng(5)
    family = TransformFamily.parse("2=learnable", (3, 3))
    st = _state((3, 3), family, rng)
    st.U[1] = 1.01 * st.U[1]
    with pytest.raises(ValueError):
        update_Z(st, SolverConfig(), family, np.zeros((3, 3)))


def test_update_U_single_mode_is_procrustes():
    rng = np.random.default_rng(6)
    family = TransformFamily.parse("2=learnable", (3, 4))
    st = _state((3, 4), family, rng)
    P, Zn = rng.standard_normal((3, 4)), rng.standard_normal((3, 4))
    U = update_U(st, P, Zn, 1)
    expected = procrustes_update(unfold(Zn, 1), unfold(P, 1), st.U[1], st.mu, st.eta)
    np.testing.assert_allclose(U, expected, atol=1e-12)
    with pytest.raises(ValueError):
        update_U(st, P, Zn, 0)


def test_update_E_and_Y():
    rng = np.random.default_rng(7)
    family = TransformFamily.identity(2)
    st = _state((3, 3), family, rng)
    mask = np.eye(3, dtype=bool)
    M, X = rng.standard_normal((3, 3)), rng.standard_normal((3, 3))
    E = update_E(st, M, mask, X)
    assert np.all(E[mask] == 0)
    off = ~mask
    expected = (st.mu * (M - X) + st.Y + st.eta * st.E) / (st.mu + st.eta)
    np.testing.assert_allclose(E[off], expected[off], atol=1e-14)
    np.testing.assert_allclose(update_Y(st, M, X, E), st.Y + st.mu * (M - X - E), atol=1e-14)


def test_solve_input_validation():
    M, mask, family = small_problem()
    with pytest.raises(ValueError):
        solve(M, mask[:4], family)
    with pytest.raises(ValueError):
        solve(M, np.zeros_like(mask), family)
    with pytest.raises(ValueError):
        solve(M, mask, TransformFamily.identity(2))
    with pytest.raises(ValueError):
        solve(M, mask, family, SolverConfig(model="tcsl", slice_pair=(0, 2)))
    with pytest.raises(ValueError):
        solve(M, mask, family, U0={2: 2 * np.eye(8)})


def test_solve_recovers_small_instance():
    M, mask, family = small_problem()
    res = solve(M, mask, family)
    assert res.converged
    assert relative_error(M, res.X) < 1e-6
    assert not np.iscomplexobj(res.X)
    assert res.final["rel_residual"] < 1e-6
    # Observed entries are reproduced.
    np.testing.assert_allclose(res.X[mask], M[mask], atol=1e-6)


def test_solve_history_and_callback():
    M, mask, family = small_problem(seed=1)
    seen = []

    def cb(state, record):
        seen.append((record["t"], bool(np.all(state.E[mask] == 0)),
                     max(unitarity_error(U) for U in state.U.values())))
    res = solve(M, mask, family, SolverConfig(max_iter=20), callback=cb)
    assert [t for t, _, _ in seen] == list(range(res.iterations))
    assert all(ok for _, ok, _ in seen)
    assert max(err for _, _, err in seen) < 1e-8
    mus = [r["mu"] for r in res.history]
    assert all(b == pytest.approx(1.1 * a) for a, b in zip(mus, mus[1:]))
    for r in res.history:
        for before, after in r["procrustes"]:
            assert after <= before * (1 + 1e-12) + 1e-12


def test_max_iter_reports_not_converged():
    M, mask, family = small_problem()
    res = solve(M, mask, family, SolverConfig(max_iter=3))
    assert not res.converged and res.iterations == 3


def test_scale_equivariance():
    M, mask, family = small_problem(seed=2)
    a = solve(M, mask, family, SolverConfig(max_iter=40))
    b = solve(1000 * M, mask, family, SolverConfig(max_iter=40))
    np.testing.assert_allclose(b.X, 1000 * a.X, rtol=1e-8, atol=1e-8)


def test_tcsl_recovers_low_slice_rank():
    rng = np.random.default_rng(1)
    shape = (16, 16, 4)
    # Every frontal slice has rank 1 in the original domain.
    M = np.einsum("ik,jk->ijk", rng.standard_normal((16, 4)), rng.standard_normal((16, 4)))
    mask = gen_mask(shape, 0.8, 1)
    family = TransformFamily.parse("3=learnable", shape)
    res = solve(M, mask, family, SolverConfig(model="tcsl", slice_pair=(0, 1)))
    assert res.converged
    assert relative_error(M, res.X) < 1e-5


def test_dfm_family_keeps_real_output():
    M, mask, _ = small_problem(seed=3)
    family = TransformFamily.parse("1=dfm,2=dfm,3=learnable", SMALL)
    res = solve(M, mask, family, SolverConfig(max_iter=60))
    assert not np.iscomplexobj(res.X)


def test_complex_family_on_real_data_warns_or_is_real():
    M, mask, _ = small_problem(seed=4)
    family = TransformFamily.identity(3).with_fixed(0, random_orthogonal(8, 0, complex=True))
    res = solve(M, mask, family, SolverConfig(max_iter=5))
    assert not np.iscomplexobj(res.X)


def test_random_init_is_seeded():
    M, mask, family = small_problem()
    cfg = SolverConfig(max_iter=5, random_init=True, seed=11)
    a, b = solve(M, mask, family, cfg), solve(M, mask, family, cfg)
    np.testing.assert_array_equal(a.X, b.X)
    c = solve(M, mask, family, dataclasses.replace(cfg, seed=12))
    assert not np.array_equal(a.X, c.X)


def test_full_observation_identity_family():
    M = np.random.default_rng(9).standard_normal((4, 5, 3))
    res = solve(M, np.ones(M.shape, bool), TransformFamily.identity(3))
    assert res.converged
    assert np.abs(res.X - M).max() < 1e-7


def test_weighted_steps_have_bounded_partial_sums():
    M, mask, family = small_problem(seed=5)
    res = solve(M, mask, family)
    steps = np.array([r["weighted_step"] for r in res.history])
    partial = np.cumsum(steps)
    # The tail adds almost nothing: the last half contributes under 1% of the total.
    assert partial[-1] - partial[len(partial) // 2] <= 1e-2 * partial[-1]
    residuals = [r["rel_residual"] for r in res.history]
    assert residuals[-1] < 1e-6 and max(residuals[len(residuals) // 2:]) < residuals[0]
