"""Transform-domain tensor norms and their proximal operators."""

from __future__ import annotations

import numpy as np

from .tensor import slice_stack, unstack_slices

# Relative threshold below which transformed entries count as zero.
ZERO_RTOL = 1e-12


def check_pair(pair, order):
    k1, k2 = pair
    if k1 == k2 or not (0 <= k1 < order and 0 <= k2 < order):
        raise ValueError(f"invalid slice mode pair {pair} for order {order}")
    return int(k1), int(k2)


def _support(T, rtol=ZERO_RTOL):
    mod = np.abs(T)
    return mod > rtol * mod.max(initial=0.0)


def u0_norm(Z, family):
    """Number of entries of ``family.forward(Z)`` above ``1e-12 * max modulus``."""
    return int(np.count_nonzero(_support(family.forward(Z))))


def u1_norm(Z, family):
    """Sum of moduli of the transformed tensor."""
    return float(np.abs(family.forward(Z)).sum())


def uinf_norm(Z, family):
    return float(np.abs(family.forward(Z)).max(initial=0.0))


def slice_nuclear_norm(Z, family, pair):
    """Sum of nuclear norms of all ``pair``-slices of the transformed tensor."""
    pair = check_pair(pair, np.ndim(Z))
    S = slice_stack(family.forward(Z), pair)
    return float(np.linalg.svd(S, compute_uv=False).sum())


def slice_spectral_norm(A, family, pair):
    """Largest spectral norm over the ``pair``-slices of the transformed tensor."""
    pair = check_pair(pair, np.ndim(A))
    S = slice_stack(family.forward(A), pair)
    return float(np.linalg.svd(S, compute_uv=False).max(initial=0.0))


def soft_threshold(A, tau):
    """Entrywise shrinkage ``z * max(1 - tau/|z|, 0)``.

    This is the proximal map of ``tau * ||.||_1``; complex entries shrink
    in modulus and keep their phase.
    """
    A = np.asarray(A)
    if not np.iscomplexobj(A):
        return np.sign(A) * np.maximum(np.abs(A) - tau, 0.0)
    mod = np.abs(A)
    scale = np.maximum(mod - tau, 0.0) / np.where(mod > 0, mod, 1.0)
    return A * scale


def svt(M, tau):
    """Singular value thresholding, the proximal map of ``tau * ||.||_*``.

    Works on a single matrix or on a stack of matrices (leading axes are
    batch axes).
    """
    M = np.asarray(M)
    U, s, Vh = np.linalg.svd(M, full_matrices=False)
    s = np.maximum(s - tau, 0.0)
    return (U * s[..., np.newaxis, :]) @ Vh


def slice_svt(A, tau, pair):
    """Apply :func:`svt` to every ``pair``-slice of ``A``."""
    return unstack_slices(svt(slice_stack(A, pair), tau), pair)


def _sgn(T, rtol=ZERO_RTOL):
    mod = np.abs(T)
    support = _support(T, rtol)
    return np.where(support, T / np.where(support, mod, 1.0), 0), support


def u1_subgradient_witness(A, family):
    """The element ``U^{-1}(sgn(U(A)))`` of the subdifferential of the U1 norm at ``A``.

    For a real ``A`` and a family whose forward transform keeps conjugate
    pairs together, the witness is real.
    """
    S, _ = _sgn(family.forward(A))
    W = family.inverse(S)
    if not np.iscomplexobj(A) and family.preserves_real:
        W = W.real
    return W


def is_u1_subgradient(G, A, family, tol=1e-9):
    """Check membership of ``G`` in the subdifferential of the U1 norm at ``A``.

    ``G - witness`` must vanish (in the transform domain) on the support of
    ``U(A)`` and have U-infinity norm at most one.
    """
    _, support = _sgn(family.forward(A))
    F = family.forward(np.asarray(G) - u1_subgradient_witness(A, family))
    if np.abs(F[support]).max(initial=0.0) > tol:
        return False
    return bool(np.abs(F).max(initial=0.0) <= 1.0 + tol)


def u1_dual_witness(A, family):
    """Tensor ``B`` with unit U-infinity norm and ``<A, B> = ||A||_{U,1}``."""
    return u1_subgradient_witness(A, family)


def slice_nuclear_dual_witness(A, family, pair):
    """Tensor ``B`` with unit slice spectral norm and ``<A, B>`` equal to the slice nuclear norm."""
    pair = check_pair(pair, np.ndim(A))
    S = slice_stack(family.forward(A), pair)
    U, s, Vh = np.linalg.svd(S, full_matrices=False)
    keep = s > ZERO_RTOL * s.max(initial=0.0)
    W = (U * keep[..., np.newaxis, :]) @ Vh
    B = family.inverse(unstack_slices(W, pair))
    if not np.iscomplexobj(A) and family.preserves_real:
        B = B.real
    return B
