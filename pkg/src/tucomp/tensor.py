"""Dense tensor primitives: unfolding, folding, mode-n products, slices.

Tensors are plain :class:`numpy.ndarray` objects. Modes are 0-based axes
throughout the library; the CLI and config files use 1-based mode numbers.

The mode-n unfolding follows the Kolda-Bader convention: the column index of
entry ``(i_0, ..., i_{h-1})`` is ``sum_{k != n} i_k * J_k`` with
``J_k = prod_{m < k, m != n} I_m`` (earliest remaining mode varies fastest).
"""

from __future__ import annotations

import struct
from typing import NamedTuple

import numpy as np

MAX_ORDER = 8


def _check_mode(ndim, n):
    if not 0 <= n < ndim:
        raise ValueError(f"mode {n} out of range for order-{ndim} tensor")


def as_tensor(data, dtype=None):
    """Validate and return ``data`` as an ndarray usable as a dense tensor."""
    A = np.asarray(data, dtype=dtype)
    if A.ndim < 1:
        raise ValueError("tensor order must be at least 1")
    if A.ndim > MAX_ORDER:
        raise ValueError(f"tensor order {A.ndim} exceeds {MAX_ORDER}")
    if A.size == 0:
        raise ValueError("every extent must be at least 1")
    return A


def to_real(A, rtol=1e-12):
    """Drop the imaginary part of ``A`` if it is negligible.

    Raises ``ValueError`` when some imaginary part exceeds ``rtol`` times the
    largest modulus.
    """
    A = np.asarray(A)
    if not np.iscomplexobj(A):
        return A
    scale = np.abs(A).max(initial=0.0)
    if np.abs(A.imag).max(initial=0.0) > rtol * scale:
        raise ValueError("tensor has non-negligible imaginary part")
    return A.real.copy()


def unfold(A, n):
    """Mode-``n`` unfolding of ``A`` as an ``I_n x prod_{k != n} I_k`` matrix."""
    A = np.asarray(A)
    _check_mode(A.ndim, n)
    return np.moveaxis(A, n, 0).reshape(A.shape[n], -1, order="F")


def fold(M, n, shape):
    """Inverse of :func:`unfold`: rebuild a tensor of ``shape`` from its mode-``n`` unfolding."""
    M = np.asarray(M)
    shape = tuple(int(s) for s in shape)
    _check_mode(len(shape), n)
    rest = shape[:n] + shape[n + 1:]
    if M.ndim != 2 or M.shape != (shape[n], int(np.prod(rest))):
        raise ValueError(
            f"matrix of shape {M.shape} cannot be folded along mode {n} into {shape}")
    return np.moveaxis(M.reshape((shape[n],) + rest, order="F"), 0, n)


def mode_product(A, U, n):
    """Mode-``n`` product ``A x_n U``.

    ``U`` has shape ``(J, I_n)``; the result replaces extent ``I_n`` by ``J``
    and satisfies ``unfold(result, n) == U @ unfold(A, n)``.
    """
    A = np.asarray(A)
    U = np.asarray(U)
    _check_mode(A.ndim, n)
    if U.ndim != 2 or U.shape[1] != A.shape[n]:
        raise ValueError(
            f"matrix of shape {U.shape} does not act on mode {n} of extent {A.shape[n]}")
    return np.moveaxis(np.tensordot(U, A, axes=(1, n)), 0, n)


def multi_mode_product(A, matrices):
    """Apply ``{mode: matrix}`` products in ascending mode order."""
    for n in sorted(matrices):
        A = mode_product(A, matrices[n], n)
    return A


def tensor_slice(A, fixed):
    """Return the matrix obtained by fixing every mode but two.

    ``fixed`` maps each fixed mode to its index. The two free modes keep their
    relative order (rows = lower mode).
    """
    A = np.asarray(A)
    free = [k for k in range(A.ndim) if k not in fixed]
    if len(free) != 2:
        raise ValueError(f"exactly two free modes required, got {len(free)}")
    index = []
    for k in range(A.ndim):
        if k in fixed:
            i = fixed[k]
            if not 0 <= i < A.shape[k]:
                raise IndexError(f"index {i} out of range for mode {k}")
            index.append(i)
        else:
            index.append(slice(None))
    return A[tuple(index)]


def slice_stack(A, pair):
    """View ``A`` as a stack of ``(pair[0], pair[1])`` slices.

    Returns an array of shape ``(..., I_{pair[0]}, I_{pair[1]})`` whose leading
    axes run over the remaining modes in ascending order.
    """
    A = np.asarray(A)
    k1, k2 = pair
    _check_mode(A.ndim, k1)
    _check_mode(A.ndim, k2)
    if k1 == k2:
        raise ValueError("slice modes must be distinct")
    return np.moveaxis(A, (k1, k2), (-2, -1))


def unstack_slices(S, pair):
    """Inverse of :func:`slice_stack`."""
    return np.moveaxis(S, (-2, -1), tuple(pair))


class ElementwiseNorms(NamedTuple):
    l0: int
    l1: float
    linf: float
    fro: float


def elementwise_norms(A):
    """Entrywise norms of ``A``. ``l0`` counts exact nonzeros, no tolerance."""
    mod = np.abs(np.asarray(A))
    return ElementwiseNorms(
        l0=int(np.count_nonzero(mod)),
        l1=float(mod.sum()),
        linf=float(mod.max(initial=0.0)),
        fro=float(np.sqrt(np.sum(mod * mod))),
    )


def inner(A, B):
    """Real inner product ``Re <A, B> = Re sum conj(A) * B``."""
    return float(np.real(np.vdot(A, B)))


# Binary tensor file format (all fields little-endian):
#   magic       4 bytes  b"TU1T"
#   version     u32      currently 1
#   scalar_kind u8       0 = real float64, 1 = complex128
#   order       u8       h, 1 <= h <= 8
#   extents     u64 * h
#   data        float64 values in C order (last mode fastest); complex
#               values are stored as interleaved (re, im) pairs.
MAGIC = b"TU1T"
FORMAT_VERSION = 1
_HEADER = struct.Struct("<4sIBB")


def tensor_to_bytes(A):
    A = as_tensor(A)
    complex_kind = np.iscomplexobj(A)
    dtype = np.dtype("<c16") if complex_kind else np.dtype("<f8")
    header = _HEADER.pack(MAGIC, FORMAT_VERSION, int(complex_kind), A.ndim)
    extents = struct.pack(f"<{A.ndim}Q", *A.shape)
    return header + extents + np.ascontiguousarray(A, dtype=dtype).tobytes(order="C")


def tensor_from_bytes(buf):
    if len(buf) < _HEADER.size:
        raise ValueError("truncated tensor header")
    magic, version, kind, order = _HEADER.unpack_from(buf, 0)
    if magic != MAGIC:
        raise ValueError(f"bad magic {magic!r}")
    if version != FORMAT_VERSION:
        raise ValueError(f"unsupported tensor format version {version}")
    if kind not in (0, 1):
        raise ValueError(f"unknown scalar kind {kind}")
    if not 1 <= order <= MAX_ORDER:
        raise ValueError(f"invalid tensor order {order}")
    offset = _HEADER.size
    shape = struct.unpack_from(f"<{order}Q", buf, offset)
    offset += 8 * order
    dtype = np.dtype("<c16") if kind else np.dtype("<f8")
    count = int(np.prod(shape))
    if len(buf) - offset != count * dtype.itemsize:
        raise ValueError("tensor payload size does not match header")
    data = np.frombuffer(buf, dtype=dtype, count=count, offset=offset)
    return data.reshape(shape).astype(complex if kind else float)


def save_tensor(path, A):
    """Write ``A`` to ``path`` in the binary tensor format."""
    with open(path, "wb") as fh:
        fh.write(tensor_to_bytes(A))


def load_tensor(path):
    with open(path, "rb") as fh:
        return tensor_from_bytes(fh.read())
