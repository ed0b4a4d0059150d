"""Pair-sampled selected CI with phaseless auxiliary-field QMC refinement.

The library turns seniority-zero (pair-occupation) shot records into a
determinant subspace via Cartesian products of the sampled spin strings,
optionally enlarges the subspace with an importance-score criterion,
diagonalizes the projected Hamiltonian, and refines the resulting
multi-determinant state with phaseless auxiliary-field quantum Monte Carlo.
Everything is verifiable against full-enumeration oracles on small systems.
"""

__version__ = "0.1.0"

from .afqmc import (
    AfqmcConfig,
    AfqmcResult,
    build_propagator,
    propagate_block,
    reblock,
    run_afqmc,
)
from .determinants import (
    Determinant,
    excitation_degree,
    expand_pair,
    hartree_fock_determinant,
    seniority,
    slater_condon,
)
from .doci import DociSolution, enumerate_seniority_zero, solve_doci
from .integrals import (
    CholeskyFactors,
    IntegralSet,
    cholesky_factorize,
    get_eri,
    load_fcidump,
    parse_fcidump,
    write_fcidump,
)
from .pipeline import PipelineConfig, ResultRecord, run_curve, run_pipeline
from .qsci import CiSolution, EffectiveHamiltonian, build_heff, fci_oracle, solve_ground
from .sampler import (
    SamplerConfig,
    ShotRecord,
    filter_particle_number,
    load_counts,
    surrogate_sample,
    top_r,
)
from .selection import (
    DeterminantSpace,
    SelectionConfig,
    cartesian_product,
    heatbath_enlarge,
    iterate_selection,
)
from .trial import TrialWavefunction, Walker, local_energy, overlap_ratio
