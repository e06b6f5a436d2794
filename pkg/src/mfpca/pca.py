"""Principal-direction estimators: regular (l2) PCA, l1-kernel PCA, recursive l1-PCA.

``fit`` expects data that is already scaled and centered; it never
re-centers. Rows of ``X`` are the measurement vectors, columns the
variables (sensors, or temporal windows for single-sensor analysis).
"""

from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from mfpca.kernel import KernelKind, kernel_covariance
from mfpca.linalg import EigenBasis, _normalize_sign, eigendecompose

__all__ = [
    "Method",
    "PcaMethod",
    "PrincipalBasis",
    "fit",
    "l1_objective",
    "recursive_l1_pca",
]

logger = logging.getLogger(__name__)


class Method(enum.Enum):
    REGULAR = "regular"
    L1_KERNEL = "l1-kernel"
    RECURSIVE_L1 = "recursive-l1"


@dataclass(frozen=True)
class PcaMethod:
    """Estimator choice. ``tolerance`` and ``max_iterations`` only affect recursive l1-PCA."""

    tag: Method = Method.L1_KERNEL
    tolerance: float = 1e-8
    max_iterations: int = 1000

    def __post_init__(self) -> None:
        object.__setattr__(self, "tag", Method(self.tag))
        if not self.tolerance > 0:
            raise ValueError(f"tolerance must be positive, got {self.tolerance}")
        if self.max_iterations < 1:
            raise ValueError(f"max_iterations must be >= 1, got {self.max_iterations}")

    @property
    def name(self) -> str:
        return self.tag.value


@dataclass(frozen=True, eq=False)
class PrincipalBasis:
    """Fitted principal directions.

    For eigen-based methods ``basis`` is the full :class:`EigenBasis` of the
    (kernel) covariance. Recursive l1-PCA produces only a dominant direction,
    stored as a one-vector basis with an objective value instead of an
    eigenvalue.
    """

    method: PcaMethod
    basis: EigenBasis
    degenerate: bool = False
    converged: bool = True
    iterations: int = 0
    objective_trace: tuple[float, ...] = field(default=())

    @property
    def vectors(self) -> np.ndarray:
        return self.basis.eigenvectors

    @property
    def dominant(self) -> np.ndarray:
        return self.basis.eigenvectors[0]

    def __len__(self) -> int:
        return len(self.basis)


def l1_objective(X: np.ndarray, v: np.ndarray) -> float:
    """``sum_i |v . x_i|`` over the rows ``x_i`` of ``X``."""
    return float(np.sum(np.abs(np.asarray(X) @ np.asarray(v))))


def _check_data(X) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[0] < 1 or X.shape[1] < 1:
        raise ValueError(f"expected a non-empty N x D matrix, got shape {X.shape}")
    if not np.all(np.isfinite(X)):
        raise ValueError("data has non-finite entries")
    if not np.any(X):
        raise ValueError("all-zero data defines no principal direction")
    return X


def _is_degenerate(values: np.ndarray) -> bool:
    if len(values) < 2:
        return False
    lam = float(values[0])
    return lam - float(values[1]) < 1e-12 * max(1.0, abs(lam))


def _ascend(
    X: np.ndarray,
    v: np.ndarray,
    tolerance: float,
    max_iterations: int,
    explored: set[bytes],
) -> tuple[np.ndarray, bool, int, list[float]] | None:
    """One monotone run: fixed-point steps, then single sign flips when stuck.

    Returns None when the run reaches a sign pattern already in ``explored``
    (an earlier run took the same path from there on).
    """
    row_sq = np.einsum("ij,ij->i", X, X)
    best = l1_objective(X, v)
    trace = [best]
    seen: set[bytes] = set()
    for k in range(1, max_iterations + 1):
        s = np.where(X @ v >= 0.0, 1.0, -1.0)
        key = s.tobytes()
        if key in explored:
            return None
        u = X.T @ s
        if key in seen:
            # Fixed point reached. Flipping s_i changes ||X^T s||^2 by
            # 4 (||x_i||^2 - s_i x_i . u); take the best strictly improving flip.
            gain = 4.0 * (row_sq - s * (X @ u))
            i = int(np.argmax(gain))
            if gain[i] <= 1e-12 * float(u @ u):
                explored |= seen
                return v, True, k, trace
            s[i] = -s[i]
            u = X.T @ s
        seen.add(s.tobytes())
        norm = math.sqrt(float(u @ u))
        if norm == 0.0:
            explored |= seen
            return v, True, k, trace
        v_new = u / norm
        obj = l1_objective(X, v_new)
        # Ascent is exact in real arithmetic; allow rounding-level slack.
        if obj < best - 1e-12 * max(1.0, best):
            raise AssertionError(f"objective decreased at step {k}: {best} -> {obj}")
        step = math.sqrt(float((v_new - v) @ (v_new - v)))
        v = v_new
        best = max(best, obj)
        trace.append(best)
        if step <= tolerance:
            seen.add(np.where(X @ v >= 0.0, 1.0, -1.0).tobytes())
    explored |= seen
    return v, False, max_iterations, trace


def recursive_l1_pca(
    X,
    tolerance: float = 1e-8,
    max_iterations: int = 1000,
    start: np.ndarray | None = None,
) -> tuple[np.ndarray, bool, int, tuple[float, ...]]:
    """Maximize ``sum_i |v . x_i|`` over unit vectors ``v``.

    Each run alternates ``s = sign(X v)`` (zeros count as +1) with
    ``v = X^T s / ||X^T s||``. When the sign pattern stops changing, the single
    sign flip that most increases ``||X^T s||`` is applied and iteration
    resumes; a run ends when no flip helps. Every step is non-decreasing in the
    objective. A step smaller than ``tolerance`` counts as a stall.

    The objective is non-convex, so runs start from the dominant l2
    eigenvector and from every nonzero row of ``X``; the best run wins.
    Passing ``start`` restricts the search to a single run from that vector.

    Returns ``(v, converged, iterations, objective_trace)`` for the winning
    run. A run that hits ``max_iterations`` reports ``converged=False``.
    """
    X = _check_data(X)
    if start is not None:
        starts = [np.asarray(start, dtype=float)]
    else:
        l2 = eigendecompose(kernel_covariance(X, KernelKind.L2)[0]).eigenvectors[0]
        starts = [l2] + [row for row in X if np.any(row)]
    best = None
    explored: set[bytes] = set()
    for v0 in starts:
        v0 = v0 / math.sqrt(float(v0 @ v0))
        run = _ascend(X, v0, tolerance, max_iterations, explored)
        if run is None:
            continue
        if best is None or run[3][-1] > best[3][-1]:
            best = run
    v, converged, iterations, trace = best
    if not converged:
        logger.warning("recursive l1-PCA did not converge in %d iterations", max_iterations)
    return _normalize_sign(v), converged, iterations, tuple(trace)


def fit(X, method: PcaMethod | Method | str = Method.L1_KERNEL) -> PrincipalBasis:
    """Estimate principal directions of ``X`` with the given method."""
    if not isinstance(method, PcaMethod):
        method = PcaMethod(Method(method))
    X = _check_data(X)
    if method.tag is Method.RECURSIVE_L1:
        v, converged, iterations, trace = recursive_l1_pca(
            X, method.tolerance, method.max_iterations
        )
        values = np.array([trace[-1]])
        vectors = v.reshape(1, -1)
        values.setflags(write=False)
        vectors.setflags(write=False)
        basis = EigenBasis(values, vectors, source_order=X.shape[1])
        return PrincipalBasis(method, basis, False, converged, iterations, trace)
    kind = KernelKind.L2 if method.tag is Method.REGULAR else KernelKind.L1_MF
    cov, _ = kernel_covariance(X, kind)
    basis = eigendecompose(cov)
    return PrincipalBasis(method, basis, degenerate=_is_degenerate(basis.eigenvalues))
