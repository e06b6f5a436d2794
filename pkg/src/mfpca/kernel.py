"""Multiplication-free (MF) dot product and covariance builders.

The MF product of two vectors is

    w (.) x = sum_i sign(w_i * x_i) * min(|w_i|, |x_i|)

and is evaluated here without forming any product ``w_i * x_i``: the sign of
each term comes from comparing operand signs and the magnitude from a
comparison of absolute values. ``x (.) x`` is exactly ``||x||_1``.

Both covariance builders return an :class:`OpCount` so the arithmetic cost
of the two kernels can be compared per call. Counts are logical term
operations, not machine instructions.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from mfpca.linalg import SymMatrix

__all__ = [
    "KernelKind",
    "OpCount",
    "mf_dot",
    "l2_dot",
    "kernel_covariance",
    "regular_covariance",
    "l1_kernel_covariance",
    "full_matrix_op_count",
]


class KernelKind(enum.Enum):
    L2 = "l2"
    L1_MF = "l1-mf"


@dataclass(frozen=True)
class OpCount:
    multiplications: int = 0
    additions: int = 0
    sign_ops: int = 0
    min_ops: int = 0

    def __post_init__(self) -> None:
        for name in ("multiplications", "additions", "sign_ops", "min_ops"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")

    def __add__(self, other: OpCount) -> OpCount:
        return OpCount(
            self.multiplications + other.multiplications,
            self.additions + other.additions,
            self.sign_ops + other.sign_ops,
            self.min_ops + other.min_ops,
        )


def _vector_pair(w, x) -> tuple[np.ndarray, np.ndarray]:
    w = np.asarray(w, dtype=float)
    x = np.asarray(x, dtype=float)
    if w.ndim != 1 or x.ndim != 1:
        raise ValueError("expected 1-D vectors")
    if w.shape != x.shape:
        raise ValueError(f"length mismatch: {w.shape[0]} != {x.shape[0]}")
    if w.size == 0:
        raise ValueError("vectors must have at least one entry")
    if not (np.all(np.isfinite(w)) and np.all(np.isfinite(x))):
        raise ValueError("vectors must be finite")
    return w, x


def _sum_left_to_right(terms: np.ndarray) -> float:
    # cumsum accumulates sequentially; np.sum would use pairwise summation.
    if terms.size == 0:
        return 0.0
    return float(np.cumsum(terms)[-1])


def _mf_terms(w: np.ndarray, x: np.ndarray) -> np.ndarray:
    mag = np.minimum(np.abs(w), np.abs(x))
    same = (w > 0) == (x > 0)
    nonzero = (w != 0) & (x != 0)
    return np.where(nonzero, np.where(same, mag, -mag), 0.0)


def mf_dot(w, x) -> float:
    """Multiplication-free dot product of two equal-length real vectors.

    A term whose operand is zero contributes 0 regardless of the other
    operand. Terms are summed left to right with a single accumulator.

    >>> mf_dot([1.0, -2.0, 3.0], [1.0, -2.0, 3.0])
    6.0
    >>> mf_dot([1.0, -2.0], [3.0, 1.0])
    0.0
    """
    w, x = _vector_pair(w, x)
    return _sum_left_to_right(_mf_terms(w, x))


def l2_dot(w, x) -> float:
    """Ordinary dot product, accumulated left to right like :func:`mf_dot`."""
    w, x = _vector_pair(w, x)
    return _sum_left_to_right(w * x)


def kernel_covariance(X, kind: KernelKind) -> tuple[SymMatrix, OpCount]:
    """Gram matrix of the columns of ``X`` under the chosen product.

    Entry ``(i, j)`` is ``col_i . col_j`` for :attr:`KernelKind.L2` or
    ``col_i (.) col_j`` for :attr:`KernelKind.L1_MF`. Only the upper
    triangle (diagonal included) is computed, so for an N x D input the MF
    path costs ``N * D * (D + 1) / 2`` sign and min operations and no
    multiplications.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[0] < 1 or X.shape[1] < 1:
        raise ValueError(f"expected a non-empty N x D matrix, got shape {X.shape}")
    if not np.all(np.isfinite(X)):
        raise ValueError("matrix has non-finite entries")
    kind = KernelKind(kind)
    n, d = X.shape
    cols = [np.ascontiguousarray(X[:, j]) for j in range(d)]
    out = np.zeros((d, d))
    mults = adds = signs = mins = 0
    for i in range(d):
        for j in range(i, d):
            if kind is KernelKind.L1_MF:
                out[i, j] = _sum_left_to_right(_mf_terms(cols[i], cols[j]))
                signs += n
                mins += n
            else:
                out[i, j] = _sum_left_to_right(cols[i] * cols[j])
                mults += n
            adds += n - 1
    return SymMatrix.from_upper(out), OpCount(mults, adds, signs, mins)


def regular_covariance(X) -> SymMatrix:
    """``X^T X``."""
    return kernel_covariance(X, KernelKind.L2)[0]


def l1_kernel_covariance(X) -> SymMatrix:
    """``X^T (.) X``, the MF kernel covariance."""
    return kernel_covariance(X, KernelKind.L1_MF)[0]


def full_matrix_op_count(n: int, d: int, kind: KernelKind) -> OpCount:
    """Cost of filling all ``d * d`` entries without exploiting symmetry.

    This is the textbook figure (``D^2 N`` multiplications, or ``D^2 N``
    sign plus ``D^2 N`` min operations, and ``D^2 (N - 1)`` additions);
    :func:`kernel_covariance` does roughly half of it.
    """
    if n < 1 or d < 1:
        raise ValueError("n and d must be positive")
    kind = KernelKind(kind)
    terms = d * d * n
    adds = d * d * (n - 1)
    if kind is KernelKind.L1_MF:
        return OpCount(0, adds, terms, terms)
    return OpCount(terms, adds, 0, 0)
