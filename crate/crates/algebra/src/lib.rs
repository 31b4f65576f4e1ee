//! Exact free calculus over the rationals: the spectral theory of the free
//! Ornstein-Uhlenbeck operator in the Chebyshev-U basis, and derivations,
//! Jacobians and semicircular moments for noncommutative polynomials.

// Negated comparisons keep NaN on the failing side.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod chebfree;
pub mod ncfree;

use num::{BigRational, Zero};
use std::collections::btree_map::{BTreeMap, Entry};
use thiserror::Error;

/// Exact rational scalar.
pub type Q = BigRational;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AlgebraError {
    #[error("variable index {index} is outside arity {arity}")]
    IndexOutOfArity { index: usize, arity: usize },
    #[error("arity mismatch: expected {expected}, found {found}")]
    ArityMismatch { expected: usize, found: usize },
    #[error("symmetrization needs a polynomial without constant term")]
    ConstantTermInSymmetrize,
    #[error("matrix is not positive definite (pivot {pivot} at row {row})")]
    NotPositiveDefinite { row: usize, pivot: String },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

impl AlgebraError {
    pub fn kind(&self) -> &'static str {
        match self {
            Self::IndexOutOfArity { .. } => "IndexOutOfArity",
            Self::ArityMismatch { .. } => "ArityMismatch",
            Self::ConstantTermInSymmetrize => "ConstantTermInSymmetrize",
            Self::NotPositiveDefinite { .. } => "NotPositiveDefinite",
            Self::InvalidArgument(_) => "InvalidArgument",
        }
    }
}

/// Adds `value` at `key`, dropping entries that cancel.
pub(crate) fn add_to<K: Ord>(map: &mut BTreeMap<K, Q>, key: K, value: Q) {
    if value.is_zero() {
        return;
    }
    match map.entry(key) {
        Entry::Vacant(e) => {
            e.insert(value);
        }
        Entry::Occupied(mut e) => {
            *e.get_mut() += value;
            if e.get().is_zero() {
                e.remove();
            }
        }
    }
}

pub use chebfree::{
    bochner_residual, gamma2_gap, j_u_apply, ou_apply, u_expand, u_tensor_product, UPoly, UTensor,
};
pub use ncfree::{
    cyclic, jacobian, partial, semicircular_moment, CovarianceMatrix, NCMatrix, NCPoly, NCTensor, Word,
};
