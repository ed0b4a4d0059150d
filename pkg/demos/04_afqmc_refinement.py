"""Auxiliary-field refinement and why the trial state matters.

Runs the phaseless auxiliary-field sampler on a stretched H4 chain twice:
once guided by the pair-restricted CI state and once by the product-space
state built from the same pair strings.  The pair-restricted trial leaves a
visible bias; the product-space trial removes it.  Error bars come from the
reblocking analysis, which also demonstrates its behavior on synthetic
correlated data.
"""

import pathlib

import numpy as np

from pairqmc import (
    AfqmcConfig,
    TrialWavefunction,
    cholesky_factorize,
    fci_oracle,
    load_fcidump,
    reblock,
    run_afqmc,
    solve_doci,
)
from pairqmc.doci import enumerate_seniority_zero
from pairqmc.qsci import solve_space
from pairqmc.selection import cartesian_product

DATA = pathlib.Path(__file__).resolve().parent.parent / "data" / "fcidump"


def main():
    ints = load_fcidump(DATA / "h4_2.00.fcidump")
    chol = cholesky_factorize(ints, 1e-8)
    e_fci = fci_oracle(ints)

    pair_ci = solve_doci(ints)
    pool = enumerate_seniority_zero(ints.n_orbitals, ints.n_alpha)
    product_state = solve_space(cartesian_product(pool, pool, ints.n_orbitals), ints)

    trials = {
        "pair-restricted trial": TrialWavefunction.from_doci_solution(pair_ci),
        "product-space trial": TrialWavefunction.from_ci_solution(product_state),
    }
    config = AfqmcConfig(
        dt=0.005, steps_per_block=25, n_blocks=120, n_walkers=120, seed=42,
        equilibration_blocks=20,
    )
    print(f"exact energy: {e_fci:.8f} Ha\n")
    for label, trial in trials.items():
        result = run_afqmc(ints, chol, trial, config)
        bias = 1e3 * (result.mean_energy - e_fci)
        print(f"{label}: trial E = {trial.energy:.6f}")
        print(f"  refined  E = {result.mean_energy:.8f} +- {result.error_bar:.1e} Ha "
              f"({bias:+.2f} mHa vs exact)\n")

    # Reblocking on a synthetic correlated series: the naive error bar is a
    # systematic underestimate, the blocked plateau is not.
    rng = np.random.default_rng(1)
    phi = 0.85
    series = np.empty(4096)
    series[0] = rng.normal()
    for i in range(1, series.size):
        series[i] = phi * series[i - 1] + np.sqrt(1 - phi**2) * rng.normal()
    stats = reblock(series)
    print("reblocking a synthetic correlated series:")
    print(f"  naive stderr   : {stats.naive_stderr:.4f}")
    print(f"  blocked stderr : {stats.stderr:.4f} (plateau at level {stats.plateau_level})")


if __name__ == "__main__":
    main()
