"""Synthetic low-rank tensors, sampling masks and recovery metrics."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .tensor import mode_product
from .transforms import dcm, random_orthogonal


@dataclass(frozen=True)
class SyntheticSpec:
    """Shape, rank parameter and seed of a synthetic tensor.

    The tensor is ``G x_1 U_1 ... x_h U_h`` with an ``R x ... x R`` Gaussian
    core ``G`` and factors made of ``R`` distinct basis vectors of the
    ``source`` transform (``dcm`` cosine vectors or ``orth`` random
    orthonormal columns).
    """

    shape: tuple = (20, 20, 20, 20)
    rank: int = 3
    seed: int = 0
    source: str = "dcm"

    def __post_init__(self):
        if self.rank < 1 or self.rank > min(self.shape):
            raise ValueError(f"rank {self.rank} must lie in [1, {min(self.shape)}]")
        if self.source not in ("dcm", "orth"):
            raise ValueError(f"unknown factor source {self.source!r}")


def synthetic_factors(spec, rng):
    factors = []
    for k, n in enumerate(spec.shape):
        basis = dcm(n).T if spec.source == "dcm" else random_orthogonal(n, rng)
        cols = np.sort(rng.choice(n, size=spec.rank, replace=False))
        factors.append(basis[:, cols])
    return factors


def gen_synthetic(spec):
    """Generate the tensor described by ``spec`` (deterministic per seed)."""
    rng = np.random.default_rng(spec.seed)
    core = rng.standard_normal((spec.rank,) * len(spec.shape))
    factors = synthetic_factors(spec, rng)
    M = core
    for k in reversed(range(len(spec.shape))):
        M = mode_product(M, factors[k], k)
    return M


def gen_mask(shape, p, seed=None):
    """Boolean mask with exactly ``round(p * N)`` entries drawn uniformly without replacement."""
    if not 0 <= p <= 1:
        raise ValueError("sampling rate must lie in [0, 1]")
    n = int(np.prod(shape))
    m = int(round(p * n))
    rng = np.random.default_rng(seed)
    mask = np.zeros(n, dtype=bool)
    mask[rng.choice(n, size=m, replace=False)] = True
    return mask.reshape(shape)


def relative_error(M, M_hat):
    """``||M - M_hat||_F / ||M||_F``."""
    return float(np.linalg.norm(np.asarray(M) - M_hat) / np.linalg.norm(M))


def psnr(reference, estimate, peak=1.0):
    """Peak signal-to-noise ratio in dB; ``inf`` when the inputs coincide."""
    mse = float(np.mean(np.abs(np.asarray(reference, dtype=float) - estimate) ** 2))
    if mse == 0:
        return float("inf")
    return float(10 * np.log10(peak ** 2 / mse))
