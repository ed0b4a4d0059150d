"""Multi-determinant trial states for the auxiliary-field sampler: walker
overlaps, mixed Green's functions, force bias, and local energies.

Walkers are nonorthogonal Slater determinants stored as (n_orbitals, n_occ)
orbital-coefficient matrices per spin channel.  All heavy routines are
vectorized over a leading walker axis; per-determinant quantities use the
occupied-row submatrices selected by each trial determinant's bits.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .determinants import occupied_orbitals
from .doci import DociSolution
from .integrals import CholeskyFactors, IntegralSet
from .qsci import CiSolution
from .selection import DeterminantSpace

__all__ = ["TrialWavefunction", "Walker", "overlap_ratio", "local_energy"]

# |det| below this is treated as an exactly vanishing overlap contribution.
SINGULAR_DET_CUTOFF = 1e-100
DEGENERATE_OVERLAP_CUTOFF = 1e-12


@dataclass
class Walker:
    """One auxiliary-field walker: orbital matrices, weight, stored overlap."""

    slater_alpha: np.ndarray
    slater_beta: np.ndarray
    weight: float = 1.0
    overlap: complex = 1.0 + 0.0j


@dataclass(frozen=True)
class TrialWavefunction:
    """A CI expansion in spin-factorized form.

    ``occ_alpha[k]``/``occ_beta[k]`` hold the ascending occupied-orbital
    indices of determinant k, so the overlap with a walker is
    sum_k c_k det(phi_a[occ_alpha[k], :]) det(phi_b[occ_beta[k], :]).
    """

    n_orbitals: int
    coefficients: np.ndarray  # (K,)
    occ_alpha: np.ndarray  # (K, n_alpha) int
    occ_beta: np.ndarray  # (K, n_beta) int
    energy: float
    _rdm: np.ndarray | None = field(default=None, repr=False, compare=False)
    _scatter_a: np.ndarray | None = field(default=None, repr=False, compare=False)
    _scatter_b: np.ndarray | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if self.coefficients.size == 0:
            raise ValueError("trial wavefunction needs at least one determinant")
        norm = float(np.linalg.norm(self.coefficients))
        if abs(norm - 1.0) > 1e-10:
            raise ValueError(f"trial coefficients are not normalized: {norm!r}")
        self.coefficients.setflags(write=False)
        self.occ_alpha.setflags(write=False)
        self.occ_beta.setflags(write=False)

    # -- construction -----------------------------------------------------

    @classmethod
    def from_ci_solution(cls, solution: CiSolution) -> "TrialWavefunction":
        space = solution.space
        occ_a = np.array([occupied_orbitals(d.alpha) for d in space.dets], dtype=np.intp)
        occ_b = np.array([occupied_orbitals(d.beta) for d in space.dets], dtype=np.intp)
        occ_a = occ_a.reshape(len(space), space.n_alpha)
        occ_b = occ_b.reshape(len(space), space.n_beta)
        return cls(
            n_orbitals=space.n_orbitals,
            coefficients=np.asarray(solution.coefficients, dtype=float).copy(),
            occ_alpha=occ_a,
            occ_beta=occ_b,
            energy=float(solution.energy),
        )

    @classmethod
    def from_doci_solution(cls, solution: DociSolution) -> "TrialWavefunction":
        from .determinants import Determinant

        dets = [Determinant(p, p) for p in solution.basis]
        space = DeterminantSpace.from_determinants(dets, solution.n_orbitals)
        # Pair strings sort identically to their (p, p) determinants, so the
        # amplitude order carries over unchanged.
        ci = CiSolution(
            energy=solution.energy,
            coefficients=np.asarray(solution.amplitudes, dtype=float).copy(),
            space=space,
        )
        return cls.from_ci_solution(ci)

    @property
    def n_determinants(self) -> int:
        return self.coefficients.shape[0]

    @property
    def n_alpha(self) -> int:
        return self.occ_alpha.shape[1]

    @property
    def n_beta(self) -> int:
        return self.occ_beta.shape[1]

    def dominant_slater_matrices(self) -> tuple[np.ndarray, np.ndarray]:
        """Orbital matrices of the largest-|c| determinant (walker seed)."""
        k = int(np.argmax(np.abs(self.coefficients)))
        phi_a = np.zeros((self.n_orbitals, self.n_alpha))
        phi_b = np.zeros((self.n_orbitals, self.n_beta))
        phi_a[self.occ_alpha[k], np.arange(self.n_alpha)] = 1.0
        phi_b[self.occ_beta[k], np.arange(self.n_beta)] = 1.0
        return phi_a, phi_b

    # -- batched walker algebra -------------------------------------------

    def _det_and_inv(self, phi: np.ndarray, occ: np.ndarray, want_inverse: bool):
        """Per-determinant occupied-row submatrices M_k = phi[occ_k, :] with
        their determinants and (masked) inverses, batched over walkers."""
        sub = phi[:, occ, :]  # (W, K, n, n)
        dets = np.linalg.det(sub)
        if not want_inverse:
            return dets, None
        singular = np.abs(dets) < SINGULAR_DET_CUTOFF
        if np.any(singular):
            eye = np.eye(sub.shape[-1], dtype=sub.dtype)
            sub = np.where(singular[..., None, None], eye, sub)
        return dets, np.linalg.inv(sub)

    def overlaps(self, phi_a: np.ndarray, phi_b: np.ndarray) -> np.ndarray:
        """<trial|walker> for a (W, N, n) batch of walker matrices."""
        det_a, _ = self._det_and_inv(phi_a, self.occ_alpha, want_inverse=False)
        det_b, _ = self._det_and_inv(phi_b, self.occ_beta, want_inverse=False)
        return np.einsum("k,wk,wk->w", self.coefficients, det_a, det_b)

    def greens_functions(self, phi_a: np.ndarray, phi_b: np.ndarray):
        """Mixed one-body Green's functions G_pq = <T|a+_p a_q|w> / <T|w>
        per spin channel, plus the overlaps.  Returns (G_a, G_b, overlaps)."""
        det_a, inv_a = self._det_and_inv(phi_a, self.occ_alpha, want_inverse=True)
        det_b, inv_b = self._det_and_inv(phi_b, self.occ_beta, want_inverse=True)
        omega = self.coefficients[None, :] * det_a * det_b  # (W, K)
        denom = omega.sum(axis=1)
        ghalf_a = np.einsum("wpi,wkij->wkpj", phi_a, inv_a)
        ghalf_b = np.einsum("wpi,wkij->wkpj", phi_b, inv_b)
        g_a = self._scatter_weighted(omega, ghalf_a, which="alpha")
        g_b = self._scatter_weighted(omega, ghalf_b, which="beta")
        safe = np.where(np.abs(denom) < SINGULAR_DET_CUTOFF, 1.0, denom)
        return g_a / safe[:, None, None], g_b / safe[:, None, None], denom

    def _scatter_matrix(self, which: str) -> np.ndarray:
        """One-hot (n_orbitals, K*n_occ) map from flattened (det, slot) pairs
        to orbital rows; lets the Green's-function scatter run through BLAS."""
        cached = self._scatter_a if which == "alpha" else self._scatter_b
        if cached is None:
            occ = self.occ_alpha if which == "alpha" else self.occ_beta
            flat = occ.ravel()
            mat = np.zeros((self.n_orbitals, flat.size))
            mat[flat, np.arange(flat.size)] = 1.0
            object.__setattr__(self, "_scatter_a" if which == "alpha" else "_scatter_b", mat)
            cached = mat
        return cached

    def _scatter_weighted(self, omega, ghalf, which: str):
        """sum_k omega_k G^(k) with G^(k)_pq = Ghalf[q, i] at p = occ[k, i]."""
        w, k, n_orb, n_occ = ghalf.shape
        contrib = np.einsum("wk,wkqi->wkiq", omega, ghalf).reshape(w, k * n_occ, n_orb)
        return np.matmul(self._scatter_matrix(which).astype(ghalf.dtype), contrib)

    def force_bias(self, g_a: np.ndarray, g_b: np.ndarray, chol: np.ndarray) -> np.ndarray:
        """<v_g> per walker from the spin-summed mixed Green's function."""
        return np.einsum("gpq,wpq->wg", chol, g_a + g_b)

    def local_energies(
        self,
        phi_a: np.ndarray,
        phi_b: np.ndarray,
        integrals: IntegralSet,
        chol: CholeskyFactors,
    ) -> np.ndarray:
        """Mixed estimator <T|H|w>/<T|w> for a batch of walkers (complex)."""
        det_a, inv_a = self._det_and_inv(phi_a, self.occ_alpha, want_inverse=True)
        det_b, inv_b = self._det_and_inv(phi_b, self.occ_beta, want_inverse=True)
        omega = self.coefficients[None, :] * det_a * det_b
        denom = omega.sum(axis=1)
        ghalf_a = np.einsum("wpi,wkij->wkpj", phi_a, inv_a)  # (W, K, N, na)
        ghalf_b = np.einsum("wpi,wkij->wkpj", phi_b, inv_b)

        h1 = integrals.h1
        h_rows_a = h1[self.occ_alpha, :]  # (K, na, N)
        h_rows_b = h1[self.occ_beta, :]
        e1 = np.einsum("kin,wkni->wk", h_rows_a, ghalf_a)
        e1 += np.einsum("kin,wkni->wk", h_rows_b, ghalf_b)

        vectors = chol.vectors
        n_chol = vectors.shape[0]
        w, k = omega.shape
        coul = np.zeros((w, k), dtype=ghalf_a.dtype)
        exch = np.zeros((w, k), dtype=ghalf_a.dtype)
        # Loop over factors to keep the (W, K, n, n) intermediates small.
        for g in range(n_chol):
            rows_a = vectors[g][self.occ_alpha, :]  # (K, na, N)
            rows_b = vectors[g][self.occ_beta, :]
            b_a = np.einsum("kin,wknj->wkij", rows_a, ghalf_a)
            b_b = np.einsum("kin,wknj->wkij", rows_b, ghalf_b)
            tr_a = np.einsum("wkii->wk", b_a)
            tr_b = np.einsum("wkii->wk", b_b)
            coul += 0.5 * (tr_a + tr_b) ** 2
            exch -= 0.5 * (
                np.einsum("wkij,wkji->wk", b_a, b_a)
                + np.einsum("wkij,wkji->wk", b_b, b_b)
            )

        per_det = e1 + coul + exch
        safe = np.where(np.abs(denom) < SINGULAR_DET_CUTOFF, 1.0, denom)
        return integrals.core_energy + np.einsum("wk,wk->w", omega, per_det) / safe

    # -- trial one-body density -------------------------------------------

    def one_rdm(self) -> np.ndarray:
        """Spin-summed one-body density matrix of the CI expansion itself."""
        if self._rdm is not None:
            return self._rdm
        n = self.n_orbitals
        rdm = np.zeros((n, n))
        coeff = self.coefficients
        masks_a = [sum(1 << int(p) for p in self.occ_alpha[k]) for k in range(self.n_determinants)]
        masks_b = [sum(1 << int(p) for p in self.occ_beta[k]) for k in range(self.n_determinants)]
        for k in range(self.n_determinants):
            ck2 = coeff[k] ** 2
            for p in self.occ_alpha[k]:
                rdm[p, p] += ck2
            for p in self.occ_beta[k]:
                rdm[p, p] += ck2
        from .determinants import _single_phase  # shared phase convention

        for k in range(self.n_determinants):
            for l in range(k):
                da = masks_a[k] ^ masks_a[l]
                db = masks_b[k] ^ masks_b[l]
                if da.bit_count() + db.bit_count() != 2:
                    continue
                if da:
                    (hole,) = occupied_orbitals(da & masks_a[k])
                    (particle,) = occupied_orbitals(da & masks_a[l])
                    phase = _single_phase(masks_a[l], hole, particle)
                else:
                    (hole,) = occupied_orbitals(db & masks_b[k])
                    (particle,) = occupied_orbitals(db & masks_b[l])
                    phase = _single_phase(masks_b[l], hole, particle)
                value = coeff[k] * coeff[l] * phase
                rdm[hole, particle] += value
                rdm[particle, hole] += value
        rdm.setflags(write=False)
        object.__setattr__(self, "_rdm", rdm)
        return rdm


def overlap_ratio(trial: TrialWavefunction, walker: Walker) -> complex:
    """<trial|walker>; 0 when every occupied-row submatrix is singular."""
    value = trial.overlaps(
        np.asarray(walker.slater_alpha, dtype=complex)[None],
        np.asarray(walker.slater_beta, dtype=complex)[None],
    )[0]
    return complex(value)


def local_energy(
    trial: TrialWavefunction,
    walker: Walker,
    integrals: IntegralSet,
    chol: CholeskyFactors,
) -> float:
    """Mixed energy estimator for a single walker.

    The imaginary part of the estimator is pure statistical noise for a real
    Hamiltonian and is discarded.  Raises when the trial-walker overlap is
    degenerate (|<T|w>| below 1e-12).
    """
    phi_a = np.asarray(walker.slater_alpha, dtype=complex)[None]
    phi_b = np.asarray(walker.slater_beta, dtype=complex)[None]
    overlap = trial.overlaps(phi_a, phi_b)[0]
    if abs(overlap) < DEGENERATE_OVERLAP_CUTOFF:
        raise ValueError(f"degenerate walker: |<T|w>| = {abs(overlap):.3e} < 1e-12")
    return float(trial.local_energies(phi_a, phi_b, integrals, chol)[0].real)
