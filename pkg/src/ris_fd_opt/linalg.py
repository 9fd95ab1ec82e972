"""Complex linear-algebra helpers shared by every other module.

Quadratic forms use the convention ``q(x) = x^H A x + 2 Re{b^H x} + c`` with
Hermitian ``A``.  The real embedding stacks real parts over imaginary parts,
``x -> [Re x; Im x]``, so Hermitian forms map to symmetric real forms with
block structure ``[[Re A, -Im A], [Im A, Re A]]``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

HERMITIAN_TOL = 1e-12


def hermitian(M: np.ndarray) -> np.ndarray:
    """Conjugate transpose of a vector or matrix."""
    return np.conj(np.swapaxes(M, -1, -2)) if np.ndim(M) >= 2 else np.conj(M)


def diag_embed(v) -> np.ndarray:
    """Square matrix with ``v`` on its diagonal."""
    v = np.asarray(v)
    if v.ndim != 1:
        raise ValueError("diag_embed expects a 1-D vector")
    return np.diag(v)


def _is_hermitian(A: np.ndarray, tol: float = HERMITIAN_TOL) -> bool:
    scale = max(1.0, float(np.max(np.abs(A)))) if A.size else 1.0
    return bool(np.all(np.abs(A - hermitian(A)) <= tol * scale))


@dataclass(frozen=True)
class QuadraticForm:
    """``q(x) = x^H A x + 2 Re{b^H x} + c``; real or complex coefficients."""

    A: np.ndarray
    b: np.ndarray
    c: float = 0.0

    def __post_init__(self):
        A = np.atleast_2d(np.asarray(self.A))
        b = np.atleast_1d(np.asarray(self.b))
        n = b.shape[0]
        if A.shape != (n, n):
            raise ValueError(f"A has shape {A.shape}, expected {(n, n)}")
        if not np.all(np.isfinite(A)) or not np.all(np.isfinite(b)) or not np.isfinite(self.c):
            raise ValueError("quadratic form coefficients must be finite")
        if not _is_hermitian(A):
            raise ValueError("A must be Hermitian")
        A = 0.5 * (A + hermitian(A))
        if np.isrealobj(A) and np.iscomplexobj(b) and not np.any(b.imag):
            b = b.real
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "c", float(np.real(self.c)))

    @property
    def dim(self) -> int:
        return self.b.shape[0]

    @property
    def is_real(self) -> bool:
        return not (np.iscomplexobj(self.A) or np.iscomplexobj(self.b))

    @classmethod
    def zeros(cls, n: int, dtype=float) -> "QuadraticForm":
        return cls(np.zeros((n, n), dtype=dtype), np.zeros(n, dtype=dtype), 0.0)

    def __add__(self, other: "QuadraticForm") -> "QuadraticForm":
        return QuadraticForm(self.A + other.A, self.b + other.b, self.c + other.c)

    def __neg__(self) -> "QuadraticForm":
        return QuadraticForm(-self.A, -self.b, -self.c)

    def __sub__(self, other: "QuadraticForm") -> "QuadraticForm":
        return self + (-other)

    def scaled(self, s: float) -> "QuadraticForm":
        return QuadraticForm(s * self.A, s * self.b, s * self.c)

    def __call__(self, x) -> float:
        return quad_eval(self, x)

    def gradient(self, x) -> np.ndarray:
        """Gradient w.r.t. a real variable (``2 A x + 2 b``)."""
        return 2.0 * (self.A @ x + self.b)


def quad_eval(q: QuadraticForm, x) -> float:
    """Evaluate ``x^H A x + 2 Re{b^H x} + c`` as a real number."""
    x = np.atleast_1d(np.asarray(x))
    if x.shape != (q.dim,):
        raise ValueError(f"x has shape {x.shape}, expected ({q.dim},)")
    return float(np.real(np.vdot(x, q.A @ x)) + 2.0 * np.real(np.vdot(q.b, x)) + q.c)


def hermitian_eigen(A: np.ndarray):
    """Eigen-decomposition of a Hermitian matrix, eigenvalues descending.

    Returns ``(eigenvalues, eigenvectors)`` with eigenvectors as columns.
    """
    A = np.atleast_2d(np.asarray(A))
    if A.shape[0] != A.shape[1] or not _is_hermitian(A, 1e-10):
        raise ValueError("hermitian_eigen requires a square Hermitian matrix")
    lam, V = np.linalg.eigh(0.5 * (A + hermitian(A)))
    order = np.argsort(lam)[::-1]
    return lam[order], V[:, order]


def real_embed(obj):
    """Map a complex vector or :class:`QuadraticForm` to its real embedding.

    Vectors become ``[Re x; Im x]``.  Forms become real forms of twice the
    dimension whose evaluation at ``real_embed(x)`` equals ``q(x)``.
    """
    if isinstance(obj, QuadraticForm):
        A = np.asarray(obj.A, dtype=complex)
        b = np.asarray(obj.b, dtype=complex)
        Ar = np.block([[A.real, -A.imag], [A.imag, A.real]])
        return QuadraticForm(Ar, np.concatenate([b.real, b.imag]), obj.c)
    x = np.asarray(obj, dtype=complex)
    return np.concatenate([x.real, x.imag])


def complex_from_real(x) -> np.ndarray:
    """Inverse of :func:`real_embed` on vectors."""
    x = np.asarray(x, dtype=float)
    if x.shape[0] % 2:
        raise ValueError("real embedding must have even length")
    n = x.shape[0] // 2
    return x[:n] + 1j * x[n:]


def block_diag(blocks) -> np.ndarray:
    """Block-diagonal matrix from a sequence of square blocks."""
    blocks = [np.atleast_2d(b) for b in blocks]
    n = sum(b.shape[0] for b in blocks)
    dtype = np.result_type(*blocks) if blocks else float
    out = np.zeros((n, n), dtype=dtype)
    i = 0
    for b in blocks:
        k = b.shape[0]
        out[i:i + k, i:i + k] = b
        i += k
    return out


def pad_form(q: QuadraticForm, n_before: int, n_after: int) -> QuadraticForm:
    """Extend a real form with extra variables that do not enter it."""
    n = q.dim + n_before + n_after
    A = np.zeros((n, n), dtype=q.A.dtype)
    b = np.zeros(n, dtype=q.b.dtype)
    A[n_before:n_before + q.dim, n_before:n_before + q.dim] = q.A
    b[n_before:n_before + q.dim] = q.b
    return QuadraticForm(A, b, q.c)
