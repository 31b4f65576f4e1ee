//! Numerical free probability on the real line: equilibrium measures of convex
//! potentials, free moment maps, free Stein kernels and discrepancies, free
//! convolution, and the diffusion operators of the associated Hessian metrics.

// Negated comparisons keep NaN on the failing side.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cheb;
pub mod convolution;
pub mod diffusion;
pub mod equilibrium;
pub mod error;
pub mod measure;
pub mod momentmap;
pub mod potential;
pub mod quadrature;
pub mod stein;

pub use cheb::ChebSeries;
pub use diffusion::{HessianManifold, DiffusionOptions};
pub use convolution::{free_convolve, free_convolve_power, ConvolutionOptions};
pub use equilibrium::{
    euler_lagrange_residual, gibbs_energy, schwinger_dyson_residual, solve_equilibrium,
    EquilibriumMeasure, EquilibriumOptions,
};
pub use error::{Error, Result};
pub use measure::{max_correlation, w2_distance, ChebMeasure, SupportInterval};
pub use momentmap::{
    kahler_einstein_residual, monotone_transport, solve_moment_map, variational_objective,
    KahlerEinsteinReport, MomentMap, MomentMapOptions, MonotoneTransport,
};
pub use potential::{ConvexPotential, Polynomial};
pub use quadrature::{QuadratureKind, QuadratureRule};
pub use stein::{
    clt_experiment, contraction_check, moment_stein_kernel, stability_probe, stability_report, stein_discrepancy,
    stein_residual, transported_kernel, ContractionMode, ContractionReport, SteinKernel1D,
};
