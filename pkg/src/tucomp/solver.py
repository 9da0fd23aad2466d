"""Proximal ADMM solvers for U1-norm (TC-U1) and slice-nuclear-norm (TC-SL) completion.

Both models share one scaffold. With ``P = Psi(M) - E + Y/mu`` each
iteration performs

1. the Z update: a proximal step on the model norm, applied in the fixed
   transform domain to the average ``(mu * P x U's + eta * Z) / (mu + eta)``;
2. a Procrustes update of every learnable factor, in ascending mode order;
3. ``X = Z x U^H's``; the E update on unobserved entries; the multiplier
   update ``Y += mu * (Psi(M) - X - E)``;
4. geometric growth of ``mu`` and ``eta`` up to their caps.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field

import numpy as np

from .norms import check_pair, slice_nuclear_norm, slice_svt, soft_threshold, u1_norm
from .tensor import mode_product, unfold
from .transforms import initial_factors, unitarity_error

log = logging.getLogger(__name__)

MODELS = ("tcu1", "tcsl")


@dataclass
class SolverConfig:
    """Penalty schedule, stopping rule and model selection.

    ``slice_pair`` (0-based modes) is required for the ``tcsl`` model.
    With ``theorem_mode`` the schedule must satisfy ``rho_eta > rho_mu**2``.
    """

    model: str = "tcu1"
    slice_pair: tuple | None = None
    mu0: float = 1e-1
    eta0: float = 1e-8
    rho_mu: float = 1.1
    rho_eta: float = 1.22
    mu_bar: float = 1e8
    eta_bar: float = 1e12
    eps: float = 1e-7
    feas_tol: float = 1e-6
    max_iter: int = 500
    theorem_mode: bool = False
    normalize: bool = True
    y_bound: float = 1e12
    random_init: bool = False
    seed: int | None = None

    def validate(self):
        if self.model not in MODELS:
            raise ValueError(f"unknown model {self.model!r}; expected one of {MODELS}")
        if self.model == "tcsl" and self.slice_pair is None:
            raise ValueError("tcsl model needs a slice_pair")
        if self.rho_mu <= 1 or self.rho_eta <= 1:
            raise ValueError("penalty growth factors must exceed 1")
        if self.mu0 <= 0 or self.eta0 <= 0:
            raise ValueError("initial penalties must be positive")
        if self.mu_bar < self.mu0 or self.eta_bar < self.eta0:
            raise ValueError("penalty caps must be at least the initial values")
        if self.eps <= 0 or self.feas_tol <= 0:
            raise ValueError("eps and feas_tol must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be at least 1")
        if self.theorem_mode and not self.rho_eta > self.rho_mu ** 2:
            raise ValueError("theorem mode requires rho_eta > rho_mu**2")
        return self


@dataclass
class SolverState:
    Z: np.ndarray
    U: dict
    E: np.ndarray
    Y: np.ndarray
    mu: float
    eta: float
    t: int = 0


@dataclass
class SolveResult:
    X: np.ndarray
    Z: np.ndarray
    U: dict
    E: np.ndarray
    Y: np.ndarray
    converged: bool
    iterations: int
    history: list = field(default_factory=list)
    flags: dict = field(default_factory=dict)

    @property
    def final(self):
        return self.history[-1] if self.history else {}


def psi_project(A, mask):
    """Keep the entries of ``A`` where ``mask`` is true, zero the rest."""
    return np.where(mask, A, 0)


def sampling_rate(mask):
    return float(np.count_nonzero(mask)) / np.size(mask)


def apply_factors(A, U):
    """``A x_k U_k`` over every learnable mode ``k``."""
    for k in sorted(U):
        A = mode_product(A, U[k], k)
    return A


def apply_factors_adjoint(Z, U):
    """``Z x_k U_k^H`` over every learnable mode; inverse of :func:`apply_factors`."""
    for k in sorted(U, reverse=True):
        Z = mode_product(Z, U[k].conj().T, k)
    return Z


def _keep_real(A, real):
    return A.real if real and np.iscomplexobj(A) else A


def update_Z(state, config, family, P_hat, real=False):
    """Proximal step on the model norm.

    TC-U1 soft-thresholds the transformed average; TC-SL applies singular
    value thresholding to every slice along ``config.slice_pair``. The
    threshold is ``1 / (mu + eta)`` in both cases.
    """
    for k, Uk in state.U.items():
        if unitarity_error(Uk) > 1e-8:
            raise ValueError(f"learnable factor on mode {k} is not unitary")
    mu, eta = state.mu, state.eta
    W = (mu * apply_factors(P_hat, state.U) + eta * state.Z) / (mu + eta)
    T = family.forward(W)
    if config.model == "tcu1":
        T = soft_threshold(T, 1.0 / (mu + eta))
    else:
        T = slice_svt(T, 1.0 / (mu + eta), config.slice_pair)
    return _keep_real(family.inverse(T), real)


def procrustes_objective(U, A_unf, B_unf, U_prev, mu, eta):
    """``mu ||U B - A||_F^2 + eta ||U - U_prev||_F^2`` for unfolded ``A``, ``B``."""
    return float(mu * np.linalg.norm(U @ B_unf - A_unf) ** 2
                 + eta * np.linalg.norm(U - U_prev) ** 2)


def procrustes_update(A_unf, B_unf, U_prev, mu, eta):
    """Minimize :func:`procrustes_objective` over unitary ``U``.

    The minimizer is the polar factor ``W V^H`` of
    ``G = [sqrt(mu) A, sqrt(eta) U_prev] [sqrt(mu) B, sqrt(eta) I]^H``.
    """
    G = mu * (A_unf @ B_unf.conj().T) + eta * U_prev
    W, _, Vh = np.linalg.svd(G)
    U = W @ Vh
    if unitarity_error(U) > 1e-10:
        W, _, Vh = np.linalg.svd(U)
        U = W @ Vh
    return U


def factor_problem(state, P_hat, Z_next, mode, updated):
    """Unfolded ``(A, B)`` of the Procrustes subproblem for learnable ``mode``.

    ``A`` removes the current factors of later learnable modes from
    ``Z_next``; ``B`` applies the already-updated factors of earlier modes
    to ``P_hat``.
    """
    A = Z_next
    for k in sorted(state.U, reverse=True):
        if k > mode:
            A = mode_product(A, state.U[k].conj().T, k)
    B = P_hat
    for k in sorted(updated):
        if k < mode:
            B = mode_product(B, updated[k], k)
    return unfold(A, mode), unfold(B, mode)


def update_U(state, P_hat, Z_next, mode, updated=None):
    """New learnable factor for ``mode``, given earlier modes' updated factors."""
    if mode not in state.U:
        raise ValueError(f"mode {mode} is not learnable")
    A_unf, B_unf = factor_problem(state, P_hat, Z_next, mode, updated or {})
    return procrustes_update(A_unf, B_unf, state.U[mode], state.mu, state.eta)


def update_E(state, M_obs, mask, X_next):
    """Proximal least-squares step for the slack ``E``, supported off the mask."""
    mu, eta = state.mu, state.eta
    E = (mu * (M_obs - X_next) + state.Y + eta * state.E) / (mu + eta)
    return np.where(mask, 0, E)


def update_Y(state, M_obs, X_next, E_next):
    return state.Y + state.mu * (M_obs - X_next - E_next)


def update_penalties(mu, eta, config):
    return min(config.mu_bar, config.rho_mu * mu), min(config.eta_bar, config.rho_eta * eta)


def model_objective(Z, family, config):
    if config.model == "tcu1":
        return u1_norm(Z, family)
    return slice_nuclear_norm(Z, family, config.slice_pair)


def _max_abs(A):
    return float(np.abs(A).max(initial=0.0))


def check_model(family, config, shape):
    family.check_shape(shape)
    if config.model == "tcsl":
        pair = check_pair(config.slice_pair, len(shape))
        for k in pair:
            if family.modes[k].kind == "learnable":
                raise ValueError(f"slice mode {k} cannot be learnable")


def solve(M_observed, mask, family, config=None, U0=None, callback=None):
    """Complete ``M_observed`` from the entries selected by ``mask``.

    Parameters
    ----------
    M_observed : ndarray
        Observed tensor; entries outside ``mask`` are ignored.
    mask : ndarray of bool
        Sampling support, same shape as ``M_observed``.
    family : TransformFamily
        Fixed transforms and learnable modes.
    config : SolverConfig, optional
    U0 : dict, optional
        Initial learnable factors ``{mode: matrix}``.
    callback : callable, optional
        Called as ``callback(state, record)`` after every iteration.

    Returns
    -------
    SolveResult
        Non-convergence within ``max_iter`` is reported through
        ``converged=False``, not raised.
    """
    config = (config or SolverConfig()).validate()
    M_observed = np.asarray(M_observed)
    mask = np.asarray(mask, dtype=bool)
    if mask.shape != M_observed.shape:
        raise ValueError(f"mask shape {mask.shape} != tensor shape {M_observed.shape}")
    if not mask.any():
        raise ValueError("mask selects no entries")
    check_model(family, config, M_observed.shape)

    input_real = not np.iscomplexobj(M_observed)
    real = input_real and family.preserves_real
    dtype = float if real else complex
    M_obs = psi_project(M_observed, mask).astype(dtype)
    # The model is scale-equivariant; solving at unit peak keeps the default
    # penalty schedule meaningful across data ranges.
    scale = _max_abs(M_obs) if config.normalize else 1.0
    if scale == 0:
        scale = 1.0
    M_obs = M_obs / scale

    if U0 is None:
        U0 = initial_factors(family, M_observed.shape, config.random_init, config.seed)
    U = {k: np.asarray(U0[k], dtype=dtype) for k in family.learnable_modes}
    for k, Uk in U.items():
        if unitarity_error(Uk) > 1e-8:
            raise ValueError(f"initial factor on mode {k} is not unitary")

    state = SolverState(
        Z=apply_factors(M_obs, U), U=U,
        E=np.zeros_like(M_obs), Y=np.zeros_like(M_obs),
        mu=config.mu0, eta=config.eta0)
    X = M_obs.copy()
    obs_norm = float(np.linalg.norm(M_obs))
    history = []
    converged = False
    eta_capped_at = None

    for t in range(config.max_iter):
        state.t = t
        P_hat = M_obs - state.E + state.Y / state.mu
        Z_next = update_Z(state, config, family, P_hat, real)

        U_next = {}
        procrustes = []
        for k in sorted(state.U):
            A_unf, B_unf = factor_problem(state, P_hat, Z_next, k, U_next)
            U_next[k] = procrustes_update(A_unf, B_unf, state.U[k], state.mu, state.eta)
            procrustes.append((
                procrustes_objective(state.U[k], A_unf, B_unf, state.U[k], state.mu, state.eta),
                procrustes_objective(U_next[k], A_unf, B_unf, state.U[k], state.mu, state.eta)))

        X_next = apply_factors_adjoint(Z_next, U_next)
        E_next = update_E(state, M_obs, mask, X_next)
        Y_next = update_Y(state, M_obs, X_next, E_next)

        dZ = _max_abs(Z_next - state.Z)
        dX = _max_abs(X_next - X)
        dU = max((_max_abs(U_next[k] - state.U[k]) for k in U_next), default=0.0)
        step = (np.linalg.norm(Z_next - state.Z) ** 2
                + np.linalg.norm(E_next - state.E) ** 2
                + sum(np.linalg.norm(U_next[k] - state.U[k]) ** 2 for k in U_next))
        residual = float(np.linalg.norm(M_obs - X_next - E_next))
        record = {
            "t": t,
            "objective": model_objective(Z_next, family, config),
            "residual": residual,
            "rel_residual": residual / obs_norm if obs_norm > 0 else residual,
            "mu": state.mu,
            "eta": state.eta,
            "dZ": dZ,
            "dX": dX,
            "dU_max": dU,
            "weighted_step": float(state.eta * step),
            "y_norm": float(np.linalg.norm(Y_next)),
            "procrustes": procrustes,
        }
        history.append(record)

        state.Z, state.U, state.E, state.Y = Z_next, U_next, E_next, Y_next
        X = X_next
        state.mu, state.eta = update_penalties(state.mu, state.eta, config)
        if eta_capped_at is None and state.eta >= config.eta_bar:
            eta_capped_at = t
        if callback is not None:
            callback(state, record)

        if not np.isfinite(record["y_norm"]) or not np.isfinite(residual):
            log.warning("iterates diverged at t=%d", t)
            break
        if (dZ < config.eps and dX < config.eps and dU < config.eps
                and record["rel_residual"] < config.feas_tol):
            converged = True
            break

    y_bounded = all(np.isfinite(r["y_norm"]) and r["y_norm"] < config.y_bound for r in history)
    flags = {
        "y_bounded": bool(y_bounded),
        "eta_capped_before_convergence": eta_capped_at is not None,
        "eta_capped_at": eta_capped_at,
    }
    if eta_capped_at is not None:
        log.warning("eta reached its cap at t=%d before convergence", eta_capped_at)
    if not y_bounded:
        log.warning("multiplier norm exceeded %g", config.y_bound)

    if input_real and np.iscomplexobj(X):
        if _max_abs(X.imag) > 1e-8 * _max_abs(X):
            warnings.warn("discarding non-negligible imaginary part of the estimate",
                          RuntimeWarning, stacklevel=2)
        X = X.real

    return SolveResult(
        X=X * scale, Z=state.Z * scale, U=state.U, E=state.E * scale, Y=state.Y,
        converged=converged, iterations=len(history), history=history, flags=flags)
