//! Error type shared by the numerical modules.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid support interval [{a}, {b}]")]
    InvalidSupport { a: f64, b: f64 },
    #[error("measure has non-positive mass {mass}")]
    NonPositiveMass { mass: f64 },
    #[error("density takes the negative value {value} at x = {at}")]
    NegativeDensity { value: f64, at: f64 },
    #[error("quantile iteration did not converge for p = {p}")]
    QuantileNonConvergent { p: f64 },
    #[error("subordination iteration did not converge at x = {at}")]
    SubordinationNonConvergent { at: f64 },
    #[error("endpoint Newton iteration diverged after {iterations} steps (residual {residual:e})")]
    NewtonDiverged { iterations: usize, residual: f64 },
    #[error("candidate support [{a}, {b}] leaves the working interval [{wa}, {wb}]")]
    WorkingIntervalTooSmall { a: f64, b: f64, wa: f64, wb: f64 },
    #[error("potential is not strictly convex: {0}")]
    NotConvex(String),
    #[error("target is not centered (mean {mean:e})")]
    NotCentered { mean: f64 },
    #[error("target is degenerate (variance {variance:e})")]
    DegenerateTarget { variance: f64 },
    #[error("no convergence after {iterations} iterations (last residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("value {y} lies outside the range [{lo}, {hi}] of the map")]
    OutOfRange { y: f64, lo: f64, hi: f64 },
    #[error("metric weight {value:e} is not positive at ({x}, {y})")]
    LogOfNonpositive { value: f64, x: f64, y: f64 },
    #[error("barycenter of V' under the measure is {value:e}, expected 0")]
    BarycenterNotZero { value: f64 },
    #[error("potential V is not convex: {0}")]
    NonConvexV(String),
    #[error("hypotheses not met: {}", .0.join("; "))]
    HypothesisNotMet(Vec<String>),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

impl Error {
    /// Stable machine-readable name of the variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidSupport { .. } => "InvalidSupport",
            Error::NonPositiveMass { .. } => "NonPositiveMass",
            Error::NegativeDensity { .. } => "NegativeDensity",
            Error::QuantileNonConvergent { .. } => "QuantileNonConvergent",
            Error::SubordinationNonConvergent { .. } => "SubordinationNonConvergent",
            Error::NewtonDiverged { .. } => "NewtonDiverged",
            Error::WorkingIntervalTooSmall { .. } => "WorkingIntervalTooSmall",
            Error::NotConvex(_) => "NotConvex",
            Error::NotCentered { .. } => "NotCentered",
            Error::DegenerateTarget { .. } => "DegenerateTarget",
            Error::NoConvergence { .. } => "NoConvergence",
            Error::OutOfRange { .. } => "OutOfRange",
            Error::LogOfNonpositive { .. } => "LogOfNonpositive",
            Error::BarycenterNotZero { .. } => "BarycenterNotZero",
            Error::NonConvexV(_) => "NonConvexV",
            Error::HypothesisNotMet(_) => "HypothesisNotMet",
            Error::InvalidArgument(_) => "InvalidArgument",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
