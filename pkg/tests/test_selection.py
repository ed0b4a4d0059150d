import numpy as np
import pytest

from pairqmc.determinants import (
    Determinant,
    excitation_degree,
    hartree_fock_determinant,
    seniority,
    slater_condon,
)
from pairqmc.qsci import CiSolution, fci_oracle, full_sector_space, solve_space
from pairqmc.selection import (
    DeterminantSpace,
    SelectionConfig,
    cartesian_product,
    heatbath_enlarge,
    iterate_selection,
)

from oracles import random_integral_set, sector_states


def test_cartesian_r_squared():
    pool = [0b011, 0b101, 0b110]
    space = cartesian_product(pool, pool, 3)
    assert len(space) == 9
    assert all(det.alpha in pool and det.beta in pool for det in space)


def test_cartesian_single_pair():
    assert len(cartesian_product([0b01], [0b10], 2)) == 1


def test_cartesian_seniority_split():
    space = cartesian_product([0b110, 0b101], [0b110, 0b101], 3)
    assert len(space) == 4
    seniorities = sorted(seniority(d) for d in space)
    assert seniorities == [0, 0, 2, 2]


def test_cartesian_contains_seniority_zero_seeds():
    pool = [0b0011, 0b0101, 0b1100]
    space = cartesian_product(pool, pool, 4)
    assert len(space) == 9
    for p in pool:
        assert Determinant(p, p) in space


def test_cartesian_rejects_mixed_popcount():
    with pytest.raises(ValueError, match="mixes particle numbers"):
        cartesian_product([0b011, 0b111], [0b011], 3)
    with pytest.raises(ValueError, match="nonempty"):
        cartesian_product([], [0b011], 3)


def test_cartesian_cardinality_random_pools():
    rng = np.random.default_rng(11)
    for _ in range(50):
        n = int(rng.integers(3, 8))
        k = int(rng.integers(1, n))
        from pairqmc.doci import enumerate_seniority_zero

        candidates = enumerate_seniority_zero(n, k)
        r = int(rng.integers(1, len(candidates) + 1))
        pool = list(rng.choice(candidates, size=r, replace=False))
        assert len(cartesian_product(pool, pool, n)) == r * r


def test_space_canonical_order_and_dedup():
    dets = [Determinant(0b10, 0b01), Determinant(0b01, 0b10), Determinant(0b10, 0b01)]
    space = DeterminantSpace.from_determinants(dets, 2)
    assert space.dets == (Determinant(0b01, 0b10), Determinant(0b10, 0b01))
    assert space.index[space.dets[1]] == 1


def test_space_serialization_roundtrip(tmp_path):
    space = cartesian_product([0b011, 0b110], [0b011, 0b110], 3)
    path = tmp_path / "space.dets"
    space.save(path)
    again = DeterminantSpace.load(path, 3)
    assert again == space
    assert again.to_lines()[0].count("|") == 1


def test_heatbath_infinite_cutoff_is_identity(h4):
    space = cartesian_product([0b0011], [0b0011], 4)
    solution = solve_space(space, h4)
    config = SelectionConfig(epsilon=np.inf, max_enlargement_rounds=1)
    assert heatbath_enlarge(space, solution, h4, config) == space


def test_heatbath_zero_cutoff_reaches_fci_energy(h4):
    # Orbital symmetry leaves some sector determinants uncoupled to the
    # ground state, so the space closes on the symmetry-connected component
    # while the energy still reaches the exact sector minimum.
    space = DeterminantSpace.from_determinants([hartree_fock_determinant(2, 2)], 4)
    config = SelectionConfig(epsilon=0.0, max_enlargement_rounds=10)
    final, solution = iterate_selection(
        space, h4, config, solver=lambda sp: solve_space(sp, h4)
    )
    assert solution.energy == pytest.approx(fci_oracle(h4), abs=1e-10)
    closed = heatbath_enlarge(final, solution, h4, config)
    assert closed == final


def test_heatbath_zero_cutoff_full_sector_when_connected():
    # Random integrals carry no point-group symmetry: every determinant is
    # eventually reachable through nonzero connections.
    ints = random_integral_set(3, 2, 1, seed=23)
    start = DeterminantSpace.from_determinants([hartree_fock_determinant(2, 1)], 3)
    config = SelectionConfig(epsilon=0.0, max_enlargement_rounds=6)
    final, _ = iterate_selection(start, ints, config, solver=lambda sp: solve_space(sp, ints))
    assert len(final) == len(sector_states(3, 2, 1))


def test_heatbath_matches_bruteforce_scan(h4):
    """Single-round enlargement from the aufbau determinant must admit exactly
    the sector determinants with |<l|H|hf>| above the cutoff."""
    hf = hartree_fock_determinant(2, 2)
    space = DeterminantSpace.from_determinants([hf], 4)
    solution = CiSolution(energy=0.0, coefficients=np.array([1.0]), space=space)
    epsilon = 1e-6
    config = SelectionConfig(epsilon=epsilon, max_enlargement_rounds=1)
    enlarged = heatbath_enlarge(space, solution, h4, config)
    expected = {hf}
    for alpha, beta in sector_states(4, 2, 2):
        candidate = Determinant(alpha, beta)
        if candidate == hf:
            continue
        if abs(slater_condon(candidate, hf, h4)) > epsilon:
            expected.add(candidate)
    assert set(enlarged.dets) == expected


def test_heatbath_candidates_stay_connected_and_in_sector(h4_stretched):
    space = cartesian_product([0b0011, 0b0101], [0b0011, 0b0101], 4)
    solution = solve_space(space, h4_stretched)
    config = SelectionConfig(epsilon=1e-4, max_enlargement_rounds=1)
    enlarged = heatbath_enlarge(space, solution, h4_stretched, config)
    for det in enlarged:
        assert det.alpha.bit_count() == 2 and det.beta.bit_count() == 2
        if det not in space:
            assert min(excitation_degree(det, parent) for parent in space) <= 2


def test_heatbath_monotone_in_epsilon(h4_stretched):
    space = cartesian_product([0b0011], [0b0011], 4)
    solution = solve_space(space, h4_stretched)
    spaces = {}
    for epsilon in (1e-2, 1e-6):
        config = SelectionConfig(epsilon=epsilon, max_enlargement_rounds=1)
        spaces[epsilon] = set(heatbath_enlarge(space, solution, h4_stretched, config).dets)
    assert spaces[1e-2] <= spaces[1e-6]
    loose = solve_space(
        DeterminantSpace.from_determinants(spaces[1e-2], 4), h4_stretched
    ).energy
    tight = solve_space(
        DeterminantSpace.from_determinants(spaces[1e-6], 4), h4_stretched
    ).energy
    assert tight <= loose + 1e-12


def test_heatbath_size_mismatch_contract(h4):
    space = cartesian_product([0b0011, 0b0101], [0b0011, 0b0101], 4)
    small = DeterminantSpace.from_determinants([hartree_fock_determinant(2, 2)], 4)
    solution = CiSolution(energy=0.0, coefficients=np.array([1.0]), space=small)
    with pytest.raises(ValueError, match="coefficients"):
        heatbath_enlarge(space, solution, h4, SelectionConfig(epsilon=0.0))


def test_iterate_selection_fixed_variant(h4):
    space = cartesian_product([0b0011, 0b0101], [0b0011, 0b0101], 4)
    config = SelectionConfig(epsilon=0.0, max_enlargement_rounds=0)
    final, solution = iterate_selection(space, h4, config, solver=lambda sp: solve_space(sp, h4))
    assert final == space
    assert solution.energy == pytest.approx(solve_space(space, h4).energy, abs=0)


def test_iterate_selection_energy_non_increasing(h4_stretched):
    space = DeterminantSpace.from_determinants([hartree_fock_determinant(2, 2)], 4)
    energies = []

    def solver(sp):
        solution = solve_space(sp, h4_stretched)
        energies.append(solution.energy)
        return solution

    config = SelectionConfig(epsilon=0.0, max_enlargement_rounds=8)
    iterate_selection(space, h4_stretched, config, solver=solver)
    assert all(b <= a + 1e-12 for a, b in zip(energies, energies[1:]))


def test_iterate_selection_fixed_point(h4):
    full = full_sector_space(h4)
    config = SelectionConfig(epsilon=0.0, max_enlargement_rounds=3)
    final, _ = iterate_selection(full, h4, config, solver=lambda sp: solve_space(sp, h4))
    assert final == full


def test_selection_config_validation():
    with pytest.raises(ValueError):
        SelectionConfig(epsilon=-1.0)
    with pytest.raises(ValueError):
        SelectionConfig(max_enlargement_rounds=-1)
    with pytest.raises(ValueError):
        SelectionConfig(pool_size=0)
