//! Exact spectral calculus of the free Ornstein-Uhlenbeck operator.
//!
//! Polynomials are expanded in the Chebyshev polynomials of the second kind
//! dilated to `[-2, 2]`: `U_0 = 1`, `U_1 = x`, `U_{n+1} = x U_n - U_{n-1}`. They are
//! orthonormal for the semicircle law and `L U_n = -n U_n`. Two-variable elements
//! live in the span of `U_m (x) U_n`, realized as functions of `(x, y)`.

use crate::{add_to, AlgebraError, Q};
use num::{One, Zero};
use std::collections::BTreeMap;
use std::fmt;

/// `sum_n c_n U_n` with exact rational coefficients and no stored zeros.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct UPoly {
    coeffs: BTreeMap<usize, Q>,
}

/// `sum_{m,n} c_{mn} U_m (x) U_n`.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct UTensor {
    coeffs: BTreeMap<(usize, usize), Q>,
}

/// `U_m U_n = sum_{k=0}^{min(m,n)} U_{m+n-2k}`.
fn linearize(m: usize, n: usize) -> impl Iterator<Item = usize> {
    (0..=m.min(n)).map(move |k| m + n - 2 * k)
}

/// Values `U_0(x), ..., U_n(x)`.
pub fn u_values(n: usize, x: f64) -> Vec<f64> {
    let mut v = Vec::with_capacity(n + 1);
    v.push(1.0);
    if n >= 1 {
        v.push(x);
    }
    for k in 2..=n {
        v.push(x * v[k - 1] - v[k - 2]);
    }
    v
}

fn u_values_exact(n: usize, x: &Q) -> Vec<Q> {
    let mut v = Vec::with_capacity(n + 1);
    v.push(Q::one());
    if n >= 1 {
        v.push(x.clone());
    }
    for k in 2..=n {
        let next = x * &v[k - 1] - &v[k - 2];
        v.push(next);
    }
    v
}

impl UPoly {
    pub fn zero() -> Self {
        Self::default()
    }

    /// The basis element `U_n`.
    pub fn basis(n: usize) -> Self {
        let mut p = Self::zero();
        p.coeffs.insert(n, Q::one());
        p
    }

    pub fn from_coeffs(pairs: impl IntoIterator<Item = (usize, Q)>) -> Self {
        let mut p = Self::zero();
        for (n, c) in pairs {
            add_to(&mut p.coeffs, n, c);
        }
        p
    }

    pub fn coeff(&self, n: usize) -> Q {
        self.coeffs.get(&n).cloned().unwrap_or_else(Q::zero)
    }

    pub fn terms(&self) -> impl Iterator<Item = (usize, &Q)> {
        self.coeffs.iter().map(|(n, c)| (*n, c))
    }

    pub fn degree(&self) -> Option<usize> {
        self.coeffs.keys().next_back().copied()
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (n, c) in &other.coeffs {
            add_to(&mut out.coeffs, *n, c.clone());
        }
        out
    }

    pub fn scale(&self, s: &Q) -> Self {
        Self::from_coeffs(self.coeffs.iter().map(|(n, c)| (*n, c * s)))
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut out = Self::zero();
        for (m, a) in &self.coeffs {
            for (n, b) in &other.coeffs {
                for k in linearize(*m, *n) {
                    add_to(&mut out.coeffs, k, a * b);
                }
            }
        }
        out
    }

    /// Coefficients in the monomial basis, lowest degree first.
    pub fn to_monomial(&self) -> Vec<Q> {
        let deg = self.degree().unwrap_or(0);
        // monomial coefficients of U_0..U_deg, built by the recursion
        let mut prev: Vec<Q> = vec![Q::one()];
        let mut cur: Vec<Q> = vec![Q::zero(), Q::one()];
        let mut out = vec![Q::zero(); deg + 1];
        for n in 0..=deg {
            let un = if n == 0 { &prev } else { &cur };
            let c = self.coeff(n);
            if !c.is_zero() {
                for (k, v) in un.iter().enumerate() {
                    out[k] += &c * v;
                }
            }
            if n >= 1 {
                let mut next = vec![Q::zero(); cur.len() + 1];
                for (k, v) in cur.iter().enumerate() {
                    next[k + 1] += v;
                }
                for (k, v) in prev.iter().enumerate() {
                    next[k] -= v;
                }
                prev = std::mem::replace(&mut cur, next);
            }
        }
        out
    }

    pub fn eval(&self, x: f64) -> f64 {
        let u = u_values(self.degree().unwrap_or(0), x);
        self.coeffs.iter().map(|(n, c)| to_f64(c) * u[*n]).sum()
    }

    pub fn eval_exact(&self, x: &Q) -> Q {
        let u = u_values_exact(self.degree().unwrap_or(0), x);
        self.coeffs.iter().fold(Q::zero(), |acc, (n, c)| acc + c * &u[*n])
    }
}

impl UTensor {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn basis(m: usize, n: usize) -> Self {
        Self::from_coeffs([((m, n), Q::one())])
    }

    pub fn from_coeffs(pairs: impl IntoIterator<Item = ((usize, usize), Q)>) -> Self {
        let mut t = Self::zero();
        for (k, c) in pairs {
            add_to(&mut t.coeffs, k, c);
        }
        t
    }

    pub fn coeff(&self, m: usize, n: usize) -> Q {
        self.coeffs.get(&(m, n)).cloned().unwrap_or_else(Q::zero)
    }

    pub fn terms(&self) -> impl Iterator<Item = ((usize, usize), &Q)> {
        self.coeffs.iter().map(|(k, c)| (*k, c))
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (k, c) in &other.coeffs {
            add_to(&mut out.coeffs, *k, c.clone());
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(&-Q::one()))
    }

    pub fn scale(&self, s: &Q) -> Self {
        Self::from_coeffs(self.coeffs.iter().map(|(k, c)| (*k, c * s)))
    }

    /// `L (x) 1 + 1 (x) L`, diagonal with eigenvalue `-(m + n)`.
    pub fn ou2(&self) -> Self {
        Self::from_coeffs(self.coeffs.iter().map(|(&(m, n), c)| ((m, n), c * int(-((m + n) as i64)))))
    }

    fn max_degrees(&self) -> (usize, usize) {
        self.coeffs.keys().fold((0, 0), |(a, b), &(m, n)| (a.max(m), b.max(n)))
    }

    pub fn eval(&self, x: f64, y: f64) -> f64 {
        let (dm, dn) = self.max_degrees();
        let (ux, uy) = (u_values(dm, x), u_values(dn, y));
        self.coeffs.iter().map(|(&(m, n), c)| to_f64(c) * ux[m] * uy[n]).sum()
    }

    pub fn eval_exact(&self, x: &Q, y: &Q) -> Q {
        let (dm, dn) = self.max_degrees();
        let (ux, uy) = (u_values_exact(dm, x), u_values_exact(dn, y));
        self.coeffs.iter().fold(Q::zero(), |acc, (&(m, n), c)| acc + c * &ux[m] * &uy[n])
    }

    /// Minimum over the `grid x grid` tensor grid of first-kind Chebyshev nodes of `[-2, 2]`.
    pub fn grid_min(&self, grid: usize) -> f64 {
        let nodes: Vec<f64> = (0..grid)
            .map(|j| 2.0 * (std::f64::consts::PI * (j as f64 + 0.5) / grid as f64).cos())
            .collect();
        let (dm, dn) = self.max_degrees();
        let ux: Vec<Vec<f64>> = nodes.iter().map(|&x| u_values(dm, x)).collect();
        let uy: Vec<Vec<f64>> = nodes.iter().map(|&y| u_values(dn, y)).collect();
        let dense: Vec<((usize, usize), f64)> = self.coeffs.iter().map(|(k, c)| (*k, to_f64(c))).collect();
        let mut worst = f64::INFINITY;
        for vx in &ux {
            for vy in &uy {
                let v: f64 = dense.iter().map(|&((m, n), c)| c * vx[m] * vy[n]).sum();
                worst = worst.min(v);
            }
        }
        if self.is_zero() {
            0.0
        } else {
            worst
        }
    }
}

fn int(n: i64) -> Q {
    Q::from_integer(n.into())
}

pub(crate) fn to_f64(q: &Q) -> f64 {
    use num::ToPrimitive;
    q.to_f64().unwrap_or(f64::NAN)
}

/// Monomial coefficients (lowest degree first) to the `U` basis, using `x U_n = U_{n+1} + U_{n-1}`.
pub fn u_expand(mono: &[Q]) -> UPoly {
    let mut out = UPoly::zero();
    let mut power = UPoly::basis(0);
    for (k, c) in mono.iter().enumerate() {
        if k > 0 {
            let mut next = UPoly::zero();
            for (n, a) in &power.coeffs {
                add_to(&mut next.coeffs, n + 1, a.clone());
                if *n >= 1 {
                    add_to(&mut next.coeffs, n - 1, a.clone());
                }
            }
            power = next;
        }
        out = out.add(&power.scale(c));
    }
    out
}

/// `L p` with `L U_n = -n U_n`.
pub fn ou_apply(p: &UPoly) -> UPoly {
    UPoly::from_coeffs(p.coeffs.iter().map(|(n, c)| (*n, c * int(-(*n as i64)))))
}

/// Divided difference: `J U_n = sum_{k=1}^n U_{k-1} (x) U_{n-k}`.
pub fn j_u_apply(p: &UPoly) -> UTensor {
    let mut t = UTensor::zero();
    for (n, c) in &p.coeffs {
        for k in 1..=*n {
            add_to(&mut t.coeffs, (k - 1, n - k), c.clone());
        }
    }
    t
}

/// Slot-wise product `(U_a (x) U_b)(U_c (x) U_d) = U_a U_c (x) U_b U_d`.
pub fn u_tensor_product(s: &UTensor, t: &UTensor) -> UTensor {
    let mut out = UTensor::zero();
    for (&(a, b), p) in &s.coeffs {
        for (&(c, d), q) in &t.coeffs {
            let pq = p * q;
            for i in linearize(a, c) {
                for j in linearize(b, d) {
                    add_to(&mut out.coeffs, (i, j), pq.clone());
                }
            }
        }
    }
    out
}

/// `J(L p) - (L (x) 1 + 1 (x) L - Id)(J p)`; vanishes identically.
pub fn bochner_residual(p: &UPoly) -> UTensor {
    let jp = j_u_apply(p);
    j_u_apply(&ou_apply(p)).sub(&jp.ou2().sub(&jp))
}

/// `Gamma(f) = (J f)^2` on the semicircular manifold.
pub fn ou_gamma(p: &UPoly) -> UTensor {
    let jp = j_u_apply(p);
    u_tensor_product(&jp, &jp)
}

/// `Gamma_2(f) = (L (x) 1 + 1 (x) L) Gamma(f) / 2 - J(L f) J f`.
pub fn ou_gamma2(p: &UPoly) -> UTensor {
    let jp = j_u_apply(p);
    let half = Q::new(1.into(), 2.into());
    ou_gamma(p).ou2().scale(&half).sub(&u_tensor_product(&j_u_apply(&ou_apply(p)), &jp))
}

/// `E_n = (L (x) 1 + 1 (x) L)((J U_n)^2) - 2 (L (x) 1 + 1 (x) L)(J U_n) J U_n`.
pub fn gamma2_gap(n: usize) -> Result<UTensor, AlgebraError> {
    if !(1..=12).contains(&n) {
        return Err(AlgebraError::InvalidArgument(format!("gamma2_gap needs 1 <= n <= 12, got {n}")));
    }
    let j = j_u_apply(&UPoly::basis(n));
    let two = Q::from_integer(2.into());
    Ok(u_tensor_product(&j, &j).ou2().sub(&u_tensor_product(&j.ou2(), &j).scale(&two)))
}

/// Grid positivity certificate for a tensor element.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridCertificate {
    pub grid: usize,
    pub minimum: f64,
    pub nonnegative: bool,
}

pub fn certify_nonnegative(t: &UTensor, grid: usize, tol: f64) -> GridCertificate {
    let minimum = t.grid_min(grid);
    GridCertificate { grid, minimum, nonnegative: minimum >= -tol }
}

impl fmt::Display for UPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let parts: Vec<String> = self.coeffs.iter().map(|(n, c)| format!("{c}*U{n}")).collect();
        write!(f, "{}", parts.join(" + "))
    }
}

impl fmt::Display for UTensor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let parts: Vec<String> = self.coeffs.iter().map(|((m, n), c)| format!("{c}*U{m}@U{n}")).collect();
        write!(f, "{}", parts.join(" + "))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64) -> Q {
        Q::from_integer(n.into())
    }

    #[test]
    fn expansion_of_low_powers() {
        assert_eq!(u_expand(&[q(0), q(1)]), UPoly::basis(1));
        assert_eq!(u_expand(&[q(0), q(0), q(1)]), UPoly::from_coeffs([(2, q(1)), (0, q(1))]));
        assert_eq!(u_expand(&[q(0), q(0), q(0), q(1)]), UPoly::from_coeffs([(3, q(1)), (1, q(2))]));
        let p = UPoly::from_coeffs([(3, q(2)), (1, q(-1)), (0, q(5))]);
        assert_eq!(u_expand(&p.to_monomial()), p);
    }

    #[test]
    fn derivative_of_u3_at_points() {
        let t = j_u_apply(&UPoly::basis(3));
        assert_eq!(t.eval_exact(&q(1), &q(2)), q(5));
    }

    #[test]
    fn e2_is_four() {
        assert_eq!(gamma2_gap(2).unwrap(), UTensor::basis(0, 0).scale(&q(4)));
        assert!(gamma2_gap(1).unwrap().is_zero());
    }

    #[test]
    fn square_of_j_u2() {
        let j = j_u_apply(&UPoly::basis(2));
        let expected = UTensor::from_coeffs([((2, 0), q(1)), ((0, 2), q(1)), ((1, 1), q(2)), ((0, 0), q(2))]);
        assert_eq!(u_tensor_product(&j, &j), expected);
    }
}
