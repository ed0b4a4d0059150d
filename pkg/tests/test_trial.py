import numpy as np
import pytest

from pairqmc.determinants import Determinant, occupied_orbitals
from pairqmc.integrals import cholesky_factorize
from pairqmc.qsci import CiSolution, full_sector_space, solve_space
from pairqmc.selection import DeterminantSpace
from pairqmc.trial import TrialWavefunction, Walker, local_energy, overlap_ratio

from oracles import random_integral_set, sector_states


def slater_matrix(det_bits, n_orbitals):
    occ = occupied_orbitals(det_bits)
    phi = np.zeros((n_orbitals, len(occ)))
    phi[occ, np.arange(len(occ))] = 1.0
    return phi


def single_det_trial(det, n_orbitals):
    space = DeterminantSpace.from_determinants([det], n_orbitals)
    solution = CiSolution(energy=0.0, coefficients=np.array([1.0]), space=space)
    return TrialWavefunction.from_ci_solution(solution)


def test_overlap_with_own_determinant_is_one():
    det = Determinant(0b0011, 0b0101)
    trial = single_det_trial(det, 4)
    walker = Walker(slater_matrix(det.alpha, 4), slater_matrix(det.beta, 4))
    assert overlap_ratio(trial, walker) == pytest.approx(1.0 + 0.0j, abs=1e-14)


def test_overlap_orthogonal_trial_is_zero():
    trial = single_det_trial(Determinant(0b0011, 0b0011), 4)
    other = Determinant(0b1100, 0b0011)
    walker = Walker(slater_matrix(other.alpha, 4), slater_matrix(other.beta, 4))
    assert overlap_ratio(trial, walker) == pytest.approx(0.0, abs=1e-14)


def full_basis_expansion_overlap(trial, walker, n_orbitals, n_alpha, n_beta):
    """Oracle: expand the walker in the complete determinant basis and dot
    with the trial coefficient vector placed on that basis."""
    total = 0.0j
    phi_a = np.asarray(walker.slater_alpha, dtype=complex)
    phi_b = np.asarray(walker.slater_beta, dtype=complex)
    coeff_map = {}
    for k in range(trial.n_determinants):
        alpha_bits = sum(1 << int(p) for p in trial.occ_alpha[k])
        beta_bits = sum(1 << int(p) for p in trial.occ_beta[k])
        coeff_map[(alpha_bits, beta_bits)] = trial.coefficients[k]
    for alpha, beta in sector_states(n_orbitals, n_alpha, n_beta):
        coeff = coeff_map.get((alpha, beta))
        if coeff is None:
            continue
        amp_a = np.linalg.det(phi_a[occupied_orbitals(alpha), :])
        amp_b = np.linalg.det(phi_b[occupied_orbitals(beta), :])
        total += coeff * amp_a * amp_b
    return total


def test_overlap_matches_full_basis_expansion():
    rng = np.random.default_rng(19)
    dets = [Determinant(0b0011, 0b0101), Determinant(0b0110, 0b0011)]
    space = DeterminantSpace.from_determinants(dets, 4)
    raw = rng.normal(size=2)
    coeff = raw / np.linalg.norm(raw)
    solution = CiSolution(energy=0.0, coefficients=coeff, space=space)
    trial = TrialWavefunction.from_ci_solution(solution)
    for _ in range(5):
        walker = Walker(
            rng.normal(size=(4, 2)) + 1j * rng.normal(size=(4, 2)),
            rng.normal(size=(4, 2)) + 1j * rng.normal(size=(4, 2)),
        )
        direct = overlap_ratio(trial, walker)
        reference = full_basis_expansion_overlap(trial, walker, 4, 2, 2)
        assert direct == pytest.approx(reference, abs=1e-12)


def test_local_energy_single_sector_dimension():
    ints = random_integral_set(1, 1, 1, seed=4, psd=True)
    chol = cholesky_factorize(ints, 1e-12)
    trial = single_det_trial(Determinant(1, 1), 1)
    rng = np.random.default_rng(0)
    expected = ints.core_energy + 2 * ints.h1[0, 0] + ints.get_eri(0, 0, 0, 0)
    for _ in range(3):
        walker = Walker(
            rng.normal(size=(1, 1)) + 0j, rng.normal(size=(1, 1)) + 0j
        )
        assert local_energy(trial, walker, ints, chol) == pytest.approx(expected, abs=1e-10)


def test_local_energy_zero_variance_with_exact_trial(h2):
    chol = cholesky_factorize(h2, 1e-12)
    solution = solve_space(full_sector_space(h2), h2)
    trial = TrialWavefunction.from_ci_solution(solution)
    rng = np.random.default_rng(12)
    for _ in range(10):
        walker = Walker(
            rng.normal(size=(2, 1)) + 1j * rng.normal(size=(2, 1)),
            rng.normal(size=(2, 1)) + 1j * rng.normal(size=(2, 1)),
        )
        if abs(overlap_ratio(trial, walker)) < 1e-8:
            continue
        assert local_energy(trial, walker, h2, chol) == pytest.approx(
            solution.energy, abs=1e-8
        )


def test_local_energy_one_body_matches_greens_trace():
    ints = random_integral_set(3, 2, 1, seed=6)
    eri_free = type(ints).from_arrays(
        ints.h1, np.zeros((3, 3, 3, 3)), ints.core_energy, 2, 1
    )
    chol = cholesky_factorize(eri_free, 1e-12)
    assert chol.n_vectors == 0
    trial = single_det_trial(Determinant(0b011, 0b001), 3)
    rng = np.random.default_rng(2)
    walker = Walker(
        rng.normal(size=(3, 2)) + 1j * rng.normal(size=(3, 2)),
        rng.normal(size=(3, 1)) + 1j * rng.normal(size=(3, 1)),
    )
    # dense oracle: E = sum_pq h_pq (G^a + G^b)_pq with G from projector algebra
    psi_a = slater_matrix(0b011, 3).astype(complex)
    psi_b = slater_matrix(0b001, 3).astype(complex)
    g_a = (walker.slater_alpha @ np.linalg.inv(psi_a.conj().T @ walker.slater_alpha) @ psi_a.conj().T).T
    g_b = (walker.slater_beta @ np.linalg.inv(psi_b.conj().T @ walker.slater_beta) @ psi_b.conj().T).T
    expected = eri_free.core_energy + np.einsum("pq,pq->", eri_free.h1, g_a + g_b)
    assert local_energy(trial, walker, eri_free, chol) == pytest.approx(expected.real, abs=1e-10)


def test_local_energy_degenerate_overlap_raises():
    trial = single_det_trial(Determinant(0b0011, 0b0011), 4)
    other = Determinant(0b1100, 0b1100)
    walker = Walker(slater_matrix(other.alpha, 4), slater_matrix(other.beta, 4))
    ints = random_integral_set(4, 2, 2, seed=1)
    chol = cholesky_factorize(random_integral_set(4, 2, 2, seed=1, psd=True), 1e-6)
    with pytest.raises(ValueError, match="degenerate"):
        local_energy(trial, walker, ints, chol)


def test_trial_one_rdm_traces_and_matches_ci(h4):
    solution = solve_space(full_sector_space(h4), h4)
    trial = TrialWavefunction.from_ci_solution(solution)
    rdm = trial.one_rdm()
    assert np.allclose(rdm, rdm.T, atol=1e-14)
    assert np.trace(rdm) == pytest.approx(h4.n_electrons, abs=1e-12)
    # Energy reconstructed from the RDMs must match <T|H|T>; check the
    # one-body part against a direct expectation in the determinant basis.
    heff = np.einsum("pq,pq->", h4.h1, rdm)
    from pairqmc.qsci import build_heff

    space = solution.space
    one_body_only = type(h4).from_arrays(
        h4.h1, np.zeros((4, 4, 4, 4)), 0.0, 2, 2
    )
    matrix = build_heff(space, one_body_only).matrix
    direct = float(solution.coefficients @ (matrix @ solution.coefficients))
    assert heff == pytest.approx(direct, abs=1e-11)


def test_dominant_slater_matrices_reproduce_determinant(h4):
    solution = solve_space(full_sector_space(h4), h4)
    trial = TrialWavefunction.from_ci_solution(solution)
    phi_a, phi_b = trial.dominant_slater_matrices()
    dominant = solution.dominant_determinant()
    assert np.array_equal(phi_a, slater_matrix(dominant.alpha, 4))
    assert np.array_equal(phi_b, slater_matrix(dominant.beta, 4))
