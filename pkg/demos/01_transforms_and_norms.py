"""
Transforms and the U1 norm
==========================

A tensor that is dense entry by entry can be sparse after a unitary
transform along some of its modes. The U1 norm measures that sparsity, and
it is what the completion model minimises.
"""

import numpy as np

from tucomp.norms import soft_threshold, u0_norm, u1_norm
from tucomp.transforms import TransformFamily, dcm

# A smooth 16 x 16 x 4 tensor: products of low-frequency cosines.
C = dcm(16)
A = (np.einsum("i,j,k->ijk", C[1], C[2], [1, 2, 3, 4])
     + 0.5 * np.einsum("i,j,k->ijk", C[0], C[4], [4, 3, 2, 1]))
print("nonzero entries:", np.count_nonzero(A), "of", A.size)

# Cosine transforms on the two spatial modes concentrate it.
family = TransformFamily.parse("1=dcm,2=dcm", A.shape)
print("nonzeros after the transform:", u0_norm(A, family))
print("U1 norm, identity vs cosine:",
      round(u1_norm(A, TransformFamily.identity(3)), 2), round(u1_norm(A, family), 2))

# The Fourier matrix spreads a point mass over every coefficient instead.
delta = np.zeros((4, 4))
delta[1, 2] = 1
print("delta under a 2-D Fourier transform:",
      u0_norm(delta, TransformFamily.parse("1=dfm,2=dfm", delta.shape)), "nonzeros")

# Soft thresholding is the proximal map of the l1 norm. Complex entries
# shrink in modulus and keep their phase.
z = np.array([3.0, -0.4, 1 + 1j])
print("soft_threshold(z, 0.5) =", soft_threshold(z, 0.5))
