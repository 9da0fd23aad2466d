"""Approximate slice-wise low-rank (TDSL) and sparsity (TDST) decompositions.

The TDSL model writes a fully observed tensor as

    A = C x_k F_k^H (fixed modes) x_j U_j^H (learnable modes)

with every ``pair``-slice of the core ``C`` of rank at most ``r``.
:func:`tdsl_decompose` fits it by block coordinate descent: an optimal
rank-``r`` truncation of every slice, then an orthogonal Procrustes update of
each learnable factor. Both blocks are solved exactly, so the residual never
increases.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .norms import ZERO_RTOL, check_pair
from .solver import apply_factors, apply_factors_adjoint, procrustes_update
from .tensor import mode_product, slice_stack, unfold, unstack_slices
from .transforms import initial_factors


@dataclass
class TdslResult:
    core: np.ndarray
    factors: dict
    rank: int
    residual: float
    residuals: list = field(default_factory=list)

    def reconstruct(self, family):
        return apply_factors_adjoint(family.inverse(self.core), self.factors)


def truncate_slices(T, pair, r):
    """Best rank-``r`` approximation of every ``pair``-slice of ``T``."""
    U, s, Vh = np.linalg.svd(slice_stack(T, pair), full_matrices=False)
    s = s.copy()
    s[..., r:] = 0
    return unstack_slices((U * s[..., np.newaxis, :]) @ Vh, pair)


def slice_rank(T, pair, rtol=1e-8):
    """Largest numerical rank over the ``pair``-slices of ``T``."""
    s = np.linalg.svd(slice_stack(T, pair), compute_uv=False)
    top = s[..., :1]
    return int(np.max(np.sum(s > rtol * np.where(top > 0, top, np.inf), axis=-1)))


def tdsl_decompose(A, family, pair, r, iters=500, tol=1e-10, factors=None):
    """Fit a TDSL decomposition of target slice rank ``r``.

    Parameters
    ----------
    A : ndarray
        Fully observed tensor.
    family : TransformFamily
        Fixed transforms and learnable modes; the ``pair`` modes must not
        be learnable.
    pair : tuple of int
        The two slice modes (0-based).
    r : int
        Target rank, ``0 <= r <= min(I_pair)``.
    iters : int
        Maximum number of alternations.
    tol : float
        Stop once the residual improves by less than ``tol``.
    factors : dict, optional
        Initial learnable factors (identity by default).

    Returns
    -------
    TdslResult
    """
    A = np.asarray(A)
    pair = check_pair(pair, A.ndim)
    family.check_shape(A.shape)
    if not 0 <= r <= min(A.shape[pair[0]], A.shape[pair[1]]):
        raise ValueError(f"rank {r} out of range for slices of size "
                         f"{A.shape[pair[0]]}x{A.shape[pair[1]]}")
    for k in pair:
        if family.modes[k].kind == "learnable":
            raise ValueError(f"slice mode {k} cannot be learnable")
    real = not np.iscomplexobj(A) and family.preserves_real
    U = {k: np.array(v) for k, v in (factors or initial_factors(family, A.shape)).items()}

    T = family.forward(apply_factors(A, U))
    core = truncate_slices(T, pair, r)
    residuals = [float(np.linalg.norm(T - core))]
    for _ in range(iters if U else 0):
        # Target for the learnable factors: the core expressed before them.
        target = family.inverse(core)
        if real:
            target = target.real
        for k in sorted(U):
            B = A
            for j in sorted(U):
                if j != k:
                    B = mode_product(B, U[j], j)
            U[k] = procrustes_update(unfold(target, k), unfold(B, k), U[k], 1.0, 0.0)
        T = family.forward(apply_factors(A, U))
        core = truncate_slices(T, pair, r)
        residuals.append(float(np.linalg.norm(T - core)))
        if residuals[-2] - residuals[-1] < tol:
            break
    return TdslResult(core=core, factors=U, rank=r, residual=residuals[-1], residuals=residuals)


@dataclass
class SparsityReport:
    u0: int
    u1: float
    energy_profile: np.ndarray

    def coefficients_for(self, fraction):
        """Smallest number of coefficients capturing ``fraction`` of the energy."""
        return int(np.searchsorted(self.energy_profile, fraction - 1e-15) + 1)


def tdst_sparsity(A, family):
    """Sparsity statistics of ``A`` in the transform domain of ``family``.

    ``energy_profile[i]`` is the fraction of squared magnitude held by the
    ``i + 1`` largest transformed coefficients.
    """
    T = np.abs(family.forward(A)).ravel()
    peak = T.max(initial=0.0)
    energy = np.sort(T ** 2)[::-1]
    total = energy.sum()
    profile = np.cumsum(energy) / total if total > 0 else np.ones_like(energy)
    return SparsityReport(
        u0=int(np.count_nonzero(T > ZERO_RTOL * peak)),
        u1=float(T.sum()),
        energy_profile=profile,
    )
