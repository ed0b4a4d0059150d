"""Davidson iteration for the lowest eigenpair of a sparse symmetric matrix."""

from __future__ import annotations

import numpy as np

__all__ = ["DavidsonError", "davidson_ground"]


class DavidsonError(RuntimeError):
    """Raised on non-convergence; carries the final residual norm."""

    def __init__(self, message: str, residual: float):
        super().__init__(message)
        self.residual = residual


def davidson_ground(
    matvec,
    diagonal: np.ndarray,
    tol: float = 1e-8,
    max_subspace: int = 32,
    max_iterations: int = 400,
    guess: np.ndarray | None = None,
):
    """Lowest eigenpair of a symmetric operator given its action and diagonal.

    Returns (eigenvalue, eigenvector, residual_norm).  Uses a diagonal
    preconditioner and restarts once the subspace reaches ``max_subspace``
    vectors.
    """
    dim = diagonal.shape[0]
    if dim == 1:
        vec = np.ones(1)
        return float(diagonal[0]), vec, 0.0

    if guess is None:
        guess = np.zeros(dim)
        guess[int(np.argmin(diagonal))] = 1.0
    basis = [guess / np.linalg.norm(guess)]
    sigma = [matvec(basis[0])]

    theta = float(basis[0] @ sigma[0])
    vector = basis[0]
    residual_norm = np.inf

    for _ in range(max_iterations):
        m = len(basis)
        proj = np.empty((m, m))
        for i in range(m):
            for j in range(i + 1):
                proj[i, j] = proj[j, i] = float(basis[i] @ sigma[j])
        evals, evecs = np.linalg.eigh(proj)
        theta = float(evals[0])
        coeff = evecs[:, 0]
        vector = sum(c * v for c, v in zip(coeff, basis))
        hv = sum(c * s for c, s in zip(coeff, sigma))
        residual = hv - theta * vector
        residual_norm = float(np.linalg.norm(residual))
        if residual_norm <= tol:
            norm = np.linalg.norm(vector)
            return theta, vector / norm, residual_norm / norm

        denom = diagonal - theta
        denom = np.where(np.abs(denom) < 1e-10, np.copysign(1e-10, denom), denom)
        correction = residual / denom

        if m >= max_subspace:
            basis = [vector / np.linalg.norm(vector)]
            sigma = [matvec(basis[0])]
        # Orthogonalize the correction against the current basis (twice, for
        # numerical safety) and append.
        for _ in range(2):
            for v in basis:
                correction -= (v @ correction) * v
        norm = np.linalg.norm(correction)
        if norm < 1e-12:
            # Stagnated; perturb deterministically along the steepest diagonal.
            correction = np.zeros(dim)
            correction[int(np.argmin(np.abs(denom)))] = 1.0
            for v in basis:
                correction -= (v @ correction) * v
            norm = np.linalg.norm(correction)
            if norm < 1e-12:
                break
        basis.append(correction / norm)
        sigma.append(matvec(basis[-1]))

    raise DavidsonError(
        f"Davidson failed to reach tol={tol:g} within {max_iterations} iterations "
        f"(final residual {residual_norm:.3e})",
        residual_norm,
    )
