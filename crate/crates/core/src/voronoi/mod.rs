//! Bessel kernels, smooth cutoffs, the Voronoi expansion of the error term,
//! smooth dyadic partitions and Poisson summation for divisor-weighted test
//! functions.

mod bessel;
mod cutoff;
mod expansion;
mod partition;
mod poisson;
pub mod quadrature;
mod weights;

pub use bessel::{bessel_j0, bessel_k0, bessel_y0};
pub use cutoff::{
    smooth_step, smooth_step_derivative, smooth_step_second_derivative, SmoothCutoff,
    SMOOTH_STEP_MAX_SLOPE,
};
pub use expansion::{
    default_y, smoothed_error_term, voronoi_error_term, DivisorTruncation, TruncationReport,
    VoronoiCheckRow, VoronoiExpansion, VoronoiOptions, DEFAULT_BUDGET_EXPONENT,
};
pub use partition::{smooth_partition, SmoothPartition};
pub use poisson::{
    poisson_tau, poisson_tau_twisted, GaussianBump, PoissonSides, TensorBump,
    TwistedPoissonSides, BUMP_TRUNCATION, DUAL_BUDGET, DUAL_CUTOFF, LATTICE_BUDGET,
};
pub use weights::{
    u_threshold, v_threshold, weight_u, weight_u_with, DecayFit, Sign, VoronoiWeights,
    WeightValue, DEFAULT_EPSILON, WEIGHT_REL_TOL,
};
