"""Dealiased pseudospectral toolkit for 2D stochastic MHD forced by rough noise.

Core layers:
  grid / spectral       fields on the torus, exact products and projections
  littlewood_paley      dyadic blocks, Besov norms, paraproducts, high/low cutoffs
  noise                 per-mode OU coefficients of the divergence-free forcing
  renorm                block gradient matrix, counterterm, renormalized products
  dynamics              exponential time stepping, adaptive threshold, diagnostics
  identities            machine-precision checks of the cancellation identities
  experiments / cli     reproducible experiment drivers and file emission
"""

from .grid import GridSpec, SpectralField, TensorField2, TensorField4, VectorField
from .littlewood_paley import (
    LPConfig,
    besov_norm,
    bony_decompose,
    freq_project,
    freq_project_vector,
    lp_block,
    low_cutoff,
)
from .noise import (
    NoiseState,
    initial_noise_state,
    noise_fields,
    ou_step,
    perturbation_fields,
    q_step,
    sample_noise_at_time,
)
from .renorm import (
    EnhancedNoise,
    chaos_diagnostics,
    enhanced_noise,
    grad_block_matrix,
    renorm_constant,
)
from .dynamics import (
    SolverParams,
    SolverState,
    advance,
    commutator,
    energy_decomposition_report,
    galerkin_convergence,
    high_low_split,
    new_solver_state,
    paracontrolled_remainder,
    run_simulation,
    update_threshold,
    verify_threshold_ledger,
    w_step,
    y_step,
)
from .experiments import run_experiment
from .reporting import ExperimentConfig, parse_config
from .identities import (
    IdentityRecord,
    divfree_tensor_identities,
    energy_identities,
    identity_suite,
    paraproduct_algebra_identities,
    transport_pair_identities,
)
from .spectral import (
    dealiased_product,
    divergence_tensor,
    fractional_laplacian,
    grad_decompose,
    heat_propagate,
    inner,
    inner_vector,
    leray_project,
    random_divfree_field,
    random_scalar_field,
    tensor_product,
)

__version__ = "0.1.0"
