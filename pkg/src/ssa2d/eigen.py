"""Eigendecomposition of the lag covariance and eigenvector symmetry classes.

The solver is a cyclic Jacobi iteration on the full symmetric matrix: the
accumulated rotations keep the basis orthonormal by construction, which the
downstream reconstruction identities depend on. Eigenvectors are classified
by their overlap with their own index reversal; for a bisymmetric matrix
with a nondegenerate spectrum every eigenvector is (anti)symmetric under
that reversal, and the corresponding window grid is centrosymmetric or
skew-centrosymmetric.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .lagcov import LagCovariance, WindowGeometry

__all__ = [
    "SYMMETRIC",
    "ANTISYMMETRIC",
    "MIXED",
    "EigenFilter",
    "JacobiConvergenceError",
    "classify_symmetry",
    "apply_sign_convention",
    "jacobi_eigh",
    "eigendecompose",
]

SYMMETRIC = "symmetric"
ANTISYMMETRIC = "antisymmetric"
MIXED = "mixed"

#: |score| must reach 1 - SYMMETRY_TOL for a definite class.
SYMMETRY_TOL = 1e-6

#: eigenvalues closer than DEGENERACY_TOL * trace(C) are flagged degenerate.
DEGENERACY_TOL = 1e-8


class JacobiConvergenceError(RuntimeError):
    """Off-diagonal norm failed to reach the threshold within the sweep cap."""


def classify_symmetry(vector: np.ndarray, tol: float = SYMMETRY_TOL) -> tuple[str, float]:
    """Return (class, score) with score = overlap of the vector and its reversal.

    The vector must be unit length to within 1e-12. A score of +1 means the
    vector equals its index reversal, -1 means it equals the negation.
    """
    v = np.asarray(vector, dtype=float)
    if abs(np.linalg.norm(v) - 1.0) > 1e-12:
        raise ValueError("vector must have unit Euclidean norm")
    score = float(np.dot(v, v[::-1]))
    if score >= 1.0 - tol:
        return SYMMETRIC, score
    if score <= -(1.0 - tol):
        return ANTISYMMETRIC, score
    return MIXED, score


def apply_sign_convention(vector: np.ndarray) -> np.ndarray:
    """Fix the overall sign deterministically.

    If the component sum is decisively nonzero the sum is made positive;
    otherwise the first component exceeding 1e-9 in magnitude is made
    positive. Idempotent.
    """
    v = np.asarray(vector, dtype=float)
    total = float(v.sum())
    if abs(total) > 1e-9:
        return v if total > 0 else -v
    big = np.nonzero(np.abs(v) > 1e-9)[0]
    if big.size == 0 or v[big[0]] > 0:
        return v
    return -v


def jacobi_eigh(
    matrix: np.ndarray, max_sweeps: int = 100, tol_factor: float = 1e-14
) -> tuple[np.ndarray, np.ndarray]:
    """Cyclic Jacobi diagonalization of a symmetric matrix.

    Sweeps rotate every (p, q) pair in turn until the off-diagonal
    Frobenius norm drops below ``tol_factor * ||A||_F``. Returns
    (eigenvalues, eigenvectors-as-columns), unordered; the eigenvector
    matrix is orthogonal by construction.

    Raises JacobiConvergenceError after ``max_sweeps`` sweeps.
    """
    A = np.array(matrix, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError("matrix must be square")
    K = A.shape[0]
    V = np.eye(K)
    if K == 1:
        return np.array([A[0, 0]]), V

    target = tol_factor * np.linalg.norm(A)
    # rotations on entries below skip cannot lift the total off-norm above target
    skip = target / K

    for _ in range(max_sweeps):
        off = np.sqrt(max(np.sum(A * A) - np.sum(np.diag(A) ** 2), 0.0))
        if off <= target:
            return np.diag(A).copy(), V
        for p in range(K - 1):
            for q in range(p + 1, K):
                apq = A[p, q]
                if abs(apq) <= skip:
                    continue
                tau = (A[q, q] - A[p, p]) / (2.0 * apq)
                if tau >= 0:
                    t = 1.0 / (tau + np.sqrt(1.0 + tau * tau))
                else:
                    t = 1.0 / (tau - np.sqrt(1.0 + tau * tau))
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = t * c

                col_p = A[:, p].copy()
                col_q = A[:, q].copy()
                A[:, p] = c * col_p - s * col_q
                A[:, q] = s * col_p + c * col_q
                row_p = A[p, :].copy()
                row_q = A[q, :].copy()
                A[p, :] = c * row_p - s * row_q
                A[q, :] = s * row_p + c * row_q
                A[p, q] = 0.0
                A[q, p] = 0.0

                v_p = V[:, p].copy()
                v_q = V[:, q].copy()
                V[:, p] = c * v_p - s * v_q
                V[:, q] = s * v_p + c * v_q

    off = np.sqrt(max(np.sum(A * A) - np.sum(np.diag(A) ** 2), 0.0))
    if off <= target:
        return np.diag(A).copy(), V
    raise JacobiConvergenceError(
        f"off-diagonal norm {off:.3e} above threshold {target:.3e} "
        f"after {max_sweeps} sweeps"
    )


@dataclass(frozen=True)
class EigenFilter:
    """One eigenpair of the lag covariance, viewed as a window filter.

    ``grid`` is the pure relabeling of ``vector`` onto the m x n window
    (column-major component order). ``symmetry_score`` is the overlap of
    the vector with its own index reversal.
    """

    index: int
    eigenvalue: float
    vector: np.ndarray
    symmetry: str
    symmetry_score: float
    grid: np.ndarray
    degenerate: bool = False

    def __post_init__(self) -> None:
        self.vector.setflags(write=False)
        self.grid.setflags(write=False)

    @classmethod
    def from_vector(
        cls,
        geometry: WindowGeometry,
        vector: np.ndarray,
        index: int = 1,
        eigenvalue: float = 0.0,
        tol: float = SYMMETRY_TOL,
    ) -> "EigenFilter":
        """Wrap an arbitrary unit vector as a filter for the given window."""
        v = np.array(vector, dtype=float)
        if v.shape != (geometry.K,):
            raise ValueError(f"expected a vector of length {geometry.K}")
        symmetry, score = classify_symmetry(v, tol)
        return cls(
            index=index,
            eigenvalue=float(eigenvalue),
            vector=v,
            symmetry=symmetry,
            symmetry_score=score,
            grid=geometry.to_grid(v),
        )


def eigendecompose(
    cov: LagCovariance,
    max_sweeps: int = 100,
    symmetry_tol: float = SYMMETRY_TOL,
    degeneracy_tol: float = DEGENERACY_TOL,
) -> list[EigenFilter]:
    """Full eigendecomposition of the covariance, one filter per eigenpair.

    Filters come back ordered by descending eigenvalue (ties kept stable by
    original column order) with the deterministic sign convention applied.
    Eigenvalues within ``degeneracy_tol * trace`` of a neighbour are flagged
    degenerate; their symmetry classification is still reported but carries
    no guarantee.
    """
    C = cov.entries
    scale = np.max(np.abs(C)) if C.size else 0.0
    if np.max(np.abs(C - C.T)) > 1e-10 * max(scale, 1.0):
        raise ValueError("covariance matrix must be symmetric")

    lams, vecs = jacobi_eigh(C, max_sweeps=max_sweeps)
    order = np.argsort(-lams, kind="stable")
    lams = lams[order]
    vecs = vecs[:, order]

    frob = np.linalg.norm(C)
    residual = np.linalg.norm(C @ vecs - vecs * lams[None, :], axis=0)
    if np.any(residual > 1e-9 * max(frob, 1e-300)):
        raise JacobiConvergenceError(
            f"eigenpair residual {residual.max():.3e} above 1e-9 * ||C||_F"
        )
    gram = vecs.T @ vecs
    if np.max(np.abs(gram - np.eye(len(lams)))) > 1e-10:
        raise JacobiConvergenceError("eigenvector basis lost orthonormality")

    gap_scale = degeneracy_tol * abs(float(np.trace(C)))
    filters = []
    for rank, lam in enumerate(lams):
        v = vecs[:, rank]
        v = apply_sign_convention(v / np.linalg.norm(v))
        symmetry, score = classify_symmetry(v, symmetry_tol)
        neighbour_gap = min(
            abs(lam - lams[rank - 1]) if rank > 0 else np.inf,
            abs(lam - lams[rank + 1]) if rank + 1 < len(lams) else np.inf,
        )
        filters.append(
            EigenFilter(
                index=rank + 1,
                eigenvalue=float(lam),
                vector=v,
                symmetry=symmetry,
                symmetry_score=score,
                grid=cov.geometry.to_grid(v),
                degenerate=bool(neighbour_gap <= gap_scale),
            )
        )
    return filters
