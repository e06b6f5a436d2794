"""Dense symmetric eigendecomposition for the small covariance matrices used here.

Covariances in this package are D x D or L x L with D, L typically 3 to 5, so a
cyclic Jacobi solver is used instead of an external LAPACK call. It is simple,
unconditionally convergent on real symmetric input, and bit-reproducible.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

__all__ = [
    "SymMatrix",
    "EigenBasis",
    "DominantPair",
    "eigendecompose",
    "dominant_eigenvector",
]

_SIGN_EPS = 1e-12
_OFF_DIAG_RTOL = 1e-14
_MAX_SWEEPS = 100


@dataclass(frozen=True, eq=False)
class SymMatrix:
    """Real symmetric matrix built from one triangle.

    Only the upper triangle of the input is read; the lower triangle is a
    mirror, so ``entries[i, j] == entries[j, i]`` holds bit for bit.
    """

    entries: np.ndarray

    def __post_init__(self) -> None:
        a = np.array(self.entries, dtype=float, copy=True)
        if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
            raise ValueError(f"expected a non-empty square matrix, got shape {a.shape}")
        if not np.all(np.isfinite(a)):
            raise ValueError("matrix has non-finite entries")
        upper = np.triu(a)
        a = upper + np.triu(a, 1).T
        a.setflags(write=False)
        object.__setattr__(self, "entries", a)

    @classmethod
    def from_upper(cls, upper: np.ndarray) -> SymMatrix:
        return cls(np.asarray(upper, dtype=float))

    @property
    def order(self) -> int:
        return int(self.entries.shape[0])

    def max_abs(self) -> float:
        return float(np.max(np.abs(self.entries)))

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.entries, dtype=dtype)


@dataclass(frozen=True, eq=False)
class EigenBasis:
    """Eigenpairs sorted by descending eigenvalue.

    ``eigenvectors`` holds one unit vector per row, aligned with
    ``eigenvalues``. Each vector is sign-normalized so that its first
    component with magnitude above 1e-12 is non-negative.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    source_order: int

    def __len__(self) -> int:
        return len(self.eigenvalues)

    def top(self, k: int) -> np.ndarray:
        """First ``k`` eigenvectors as rows of a ``(k, order)`` array."""
        if not 1 <= k <= len(self):
            raise ValueError(f"k must be in [1, {len(self)}], got {k}")
        return self.eigenvectors[:k]


class DominantPair(NamedTuple):
    value: float
    vector: np.ndarray
    degenerate: bool


def _normalize_sign(v: np.ndarray) -> np.ndarray:
    for c in v:
        if abs(c) > _SIGN_EPS:
            return -v if c < 0 else v
    return v


def _jacobi(a: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Cyclic Jacobi sweeps on a copy of ``a``. Returns (diag, V) with A = V diag V^T."""
    n = a.shape[0]
    a = a.copy()
    v = np.eye(n)
    for _ in range(_MAX_SWEEPS):
        off = math.sqrt(float(np.sum(np.triu(a, 1) ** 2)) * 2.0)
        on = math.sqrt(float(np.sum(np.diag(a) ** 2)))
        if off <= _OFF_DIAG_RTOL * on or off == 0.0:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                h = a[q, q] - a[p, p]
                if abs(h) + 100.0 * abs(apq) == abs(h):
                    # Tiny angle; theta would overflow.
                    t = apq / h
                else:
                    theta = h / (2.0 * apq)
                    t = math.copysign(1.0, theta) / (abs(theta) + math.hypot(theta, 1.0))
                c = 1.0 / math.hypot(t, 1.0)
                s = t * c
                # A <- J^T A J, J the (p, q) Givens rotation.
                ap = a[:, p].copy()
                aq = a[:, q].copy()
                a[:, p] = c * ap - s * aq
                a[:, q] = s * ap + c * aq
                ap = a[p, :].copy()
                aq = a[q, :].copy()
                a[p, :] = c * ap - s * aq
                a[q, :] = s * ap + c * aq
                a[p, q] = a[q, p] = 0.0
                vp = v[:, p].copy()
                vq = v[:, q].copy()
                v[:, p] = c * vp - s * vq
                v[:, q] = s * vp + c * vq
    return np.diag(a).copy(), v


def eigendecompose(m: SymMatrix | np.ndarray) -> EigenBasis:
    """All eigenpairs of a symmetric matrix, descending, sign-normalized.

    Ties keep the order the Jacobi sweeps produced them in.
    """
    if not isinstance(m, SymMatrix):
        m = SymMatrix(m)
    values, vectors = _jacobi(m.entries)
    order = np.argsort(-values, kind="stable")
    values = values[order]
    rows = []
    for j in order:
        col = vectors[:, j]
        col = col / math.sqrt(float(np.sum(col * col)))
        rows.append(_normalize_sign(col))
    basis = np.array(rows)
    values.setflags(write=False)
    basis.setflags(write=False)
    return EigenBasis(eigenvalues=values, eigenvectors=basis, source_order=m.order)


def dominant_eigenvector(m: SymMatrix | np.ndarray) -> DominantPair:
    """Largest eigenpair, with a flag when the top eigenvalue is (near) repeated.

    A degenerate result is still a valid unit vector inside the top
    eigenspace; callers that need a unique direction should check the flag.
    """
    basis = eigendecompose(m)
    lam = float(basis.eigenvalues[0])
    degenerate = False
    if len(basis) > 1:
        gap = lam - float(basis.eigenvalues[1])
        degenerate = gap < 1e-12 * max(1.0, abs(lam))
    return DominantPair(lam, basis.eigenvectors[0].copy(), degenerate)
