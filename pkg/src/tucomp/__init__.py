"""Tensor completion with transform-domain sparsity and learnable unitary transforms."""

from .decomposition import tdsl_decompose, tdst_sparsity
from .norms import slice_nuclear_norm, soft_threshold, svt, u0_norm, u1_norm, uinf_norm
from .solver import SolveResult, SolverConfig, solve
from .synthetic import SyntheticSpec, gen_mask, gen_synthetic, psnr, relative_error
from .tensor import fold, load_tensor, mode_product, save_tensor, unfold
from .transforms import TransformFamily, dcm, dfm, random_orthogonal

__version__ = "0.1.0"

__all__ = [
    "SolveResult", "SolverConfig", "SyntheticSpec", "TransformFamily",
    "dcm", "dfm", "fold", "gen_mask", "gen_synthetic", "load_tensor", "mode_product",
    "psnr", "random_orthogonal", "relative_error", "save_tensor", "slice_nuclear_norm",
    "soft_threshold", "solve", "svt", "tdsl_decompose", "tdst_sparsity", "u0_norm",
    "u1_norm", "uinf_norm", "unfold",
]
