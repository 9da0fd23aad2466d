"""Fixed unitary transforms and per-mode transform families."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.fft
import scipy.linalg

from .tensor import mode_product

FIXED = "fixed"
LEARNABLE = "learnable"
IDENTITY = "identity"

UNITARY_TOL = 1e-10


def dfm(n):
    """Unitary DFT matrix with entries ``exp(-2j*pi*j*k/n) / sqrt(n)``."""
    if n < 1:
        raise ValueError("size must be at least 1")
    return scipy.linalg.dft(n, scale="sqrtn")


def dcm(n):
    """Orthonormal DCT-II matrix (row 0 is the constant vector ``1/sqrt(n)``)."""
    if n < 1:
        raise ValueError("size must be at least 1")
    return scipy.fft.dct(np.eye(n), type=2, norm="ortho", axis=0)


def random_orthogonal(n, seed=None, complex=False):
    """Haar-distributed orthogonal (or unitary, if ``complex``) matrix.

    QR of a Gaussian matrix with the phases of ``diag(R)`` folded back into
    ``Q`` so the distribution is uniform.
    """
    rng = np.random.default_rng(seed)
    G = rng.standard_normal((n, n))
    if complex:
        G = G + 1j * rng.standard_normal((n, n))
    Q, R = np.linalg.qr(G)
    d = np.diagonal(R)
    phase = d / np.abs(d)
    return Q * phase[np.newaxis, :]


def unitarity_error(U):
    U = np.asarray(U)
    return float(np.linalg.norm(U.conj().T @ U - np.eye(U.shape[1])))


def _is_conjugate_pairing(M, tol=1e-10):
    # conj(M) = P @ M for a permutation P  <=>  conj(M) @ M^H is a permutation.
    P = np.conj(M) @ M.conj().T
    mag = np.abs(P)
    rows = np.argmax(mag, axis=1)
    if len(set(rows.tolist())) != len(rows):
        return False
    target = np.zeros_like(mag)
    target[np.arange(len(rows)), rows] = 1.0
    return bool(np.abs(P - target).max() < tol)


@dataclass(frozen=True)
class ModeTransform:
    kind: str
    matrix: np.ndarray | None = None
    name: str = ""


@dataclass(frozen=True, eq=False)
class TransformFamily:
    """Per-mode transform assignment.

    Each mode carries a fixed unitary matrix, a learnable unitary factor
    (owned by the solver state, not by the family), or the identity.
    ``forward`` applies only the fixed matrices.
    """

    modes: tuple

    def __post_init__(self):
        for k, m in enumerate(self.modes):
            if m.kind not in (FIXED, LEARNABLE, IDENTITY):
                raise ValueError(f"unknown transform kind {m.kind!r} on mode {k}")
            if m.kind == FIXED:
                M = np.asarray(m.matrix)
                if M.ndim != 2 or M.shape[0] != M.shape[1]:
                    raise ValueError(f"fixed transform on mode {k} must be square")
                if unitarity_error(M) > UNITARY_TOL:
                    raise ValueError(f"fixed transform on mode {k} is not unitary")

    @classmethod
    def from_names(cls, shape, names, seed=None):
        """Build a family from ``{mode: name}``; unnamed modes are identity.

        Names: ``dfm``, ``dcm``, ``identity``, ``learnable``, ``orth`` (random
        orthogonal drawn from ``seed``).
        """
        if not isinstance(names, dict):
            names = dict(enumerate(names))
        modes = []
        for k, size in enumerate(shape):
            name = str(names.get(k, IDENTITY)).strip().lower()
            if name == "dfm":
                modes.append(ModeTransform(FIXED, dfm(size), name))
            elif name == "dcm":
                modes.append(ModeTransform(FIXED, dcm(size), name))
            elif name == "orth":
                sub = None if seed is None else [seed, k]
                modes.append(ModeTransform(FIXED, random_orthogonal(size, sub), name))
            elif name == LEARNABLE:
                modes.append(ModeTransform(LEARNABLE, None, name))
            elif name == IDENTITY:
                modes.append(ModeTransform(IDENTITY, None, name))
            else:
                raise ValueError(f"unknown transform {name!r} for mode {k + 1}")
        extra = [k for k in names if not 0 <= k < len(shape)]
        if extra:
            raise ValueError(f"transform given for nonexistent mode(s) {extra}")
        return cls(tuple(modes))

    @classmethod
    def parse(cls, text, shape, seed=None):
        """Parse ``"1=dfm,2=dfm,3=learnable"`` (1-based modes)."""
        names = {}
        for item in filter(None, (p.strip() for p in text.split(","))):
            key, sep, value = item.partition("=")
            if not sep:
                raise ValueError(f"expected mode=name, got {item!r}")
            key = key.strip().lower().removeprefix("mode")
            names[int(key) - 1] = value.strip()
        return cls.from_names(shape, names, seed=seed)

    @classmethod
    def identity(cls, order):
        return cls(tuple(ModeTransform(IDENTITY, None, IDENTITY) for _ in range(order)))

    @property
    def order(self):
        return len(self.modes)

    @property
    def fixed_modes(self):
        return tuple(k for k, m in enumerate(self.modes) if m.kind == FIXED)

    @property
    def learnable_modes(self):
        return tuple(k for k, m in enumerate(self.modes) if m.kind == LEARNABLE)

    @property
    def partition(self):
        """Mode ordering with non-learnable modes first, learnable modes last."""
        learn = self.learnable_modes
        return tuple(k for k in range(self.order) if k not in learn) + learn

    @property
    def split(self):
        """Number of non-learnable modes (learnable modes follow this point)."""
        return self.order - len(self.learnable_modes)

    @property
    def is_complex(self):
        return any(np.iscomplexobj(self.modes[k].matrix) for k in self.fixed_modes)

    @property
    def preserves_real(self):
        """True if conjugation-commuting maps in the transform domain keep real data real."""
        return all(
            _is_conjugate_pairing(self.modes[k].matrix)
            for k in self.fixed_modes if np.iscomplexobj(self.modes[k].matrix))

    def names(self):
        return [m.name or m.kind for m in self.modes]

    def check_shape(self, shape):
        if len(shape) != self.order:
            raise ValueError(f"family has order {self.order}, tensor has order {len(shape)}")
        for k in self.fixed_modes:
            if self.modes[k].matrix.shape[0] != shape[k]:
                raise ValueError(
                    f"fixed transform on mode {k} has size {self.modes[k].matrix.shape[0]}, "
                    f"tensor extent is {shape[k]}")

    def forward(self, A):
        self.check_shape(np.shape(A))
        for k in self.fixed_modes:
            A = mode_product(A, self.modes[k].matrix, k)
        return A

    def inverse(self, A):
        self.check_shape(np.shape(A))
        for k in self.fixed_modes:
            A = mode_product(A, self.modes[k].matrix.conj().T, k)
        return A

    def with_fixed(self, k, matrix, name=""):
        modes = list(self.modes)
        modes[k] = ModeTransform(FIXED, np.asarray(matrix), name)
        return TransformFamily(tuple(modes))


def apply_transform(A, family):
    """Apply every fixed matrix of ``family`` along its mode."""
    return family.forward(A)


def apply_inverse_transform(A, family):
    return family.inverse(A)


def initial_factors(family, shape, random=False, seed=None):
    """Initial learnable factors: identity by default, random orthogonal if asked."""
    factors = {}
    for k in family.learnable_modes:
        if random:
            factors[k] = random_orthogonal(shape[k], None if seed is None else [seed, k])
        else:
            factors[k] = np.eye(shape[k])
    return factors
