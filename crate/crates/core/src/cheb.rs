//! Chebyshev-T series on an interval, with exact divided differences.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// `p(x) = sum_k c_k T_k(s)` with `s = (2x - a - b) / (b - a)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChebSeries {
    pub a: f64,
    pub b: f64,
    pub coeffs: Vec<f64>,
}

impl ChebSeries {
    pub fn new(a: f64, b: f64, coeffs: Vec<f64>) -> Self {
        assert!(a < b, "empty interval [{a}, {b}]");
        let coeffs = if coeffs.is_empty() { vec![0.0] } else { coeffs };
        Self { a, b, coeffs }
    }

    pub fn constant(a: f64, b: f64, c: f64) -> Self {
        Self::new(a, b, vec![c])
    }

    /// Chebyshev points of the first kind mapped to [a, b], in decreasing order.
    pub fn points(a: f64, b: f64, n: usize) -> Vec<f64> {
        let (c, h) = (0.5 * (a + b), 0.5 * (b - a));
        (0..n)
            .map(|j| c + h * (PI * (j as f64 + 0.5) / n as f64).cos())
            .collect()
    }

    /// Interpolant through the first-kind Chebyshev points.
    pub fn interpolate(a: f64, b: f64, n: usize, f: impl Fn(f64) -> f64) -> Self {
        let values: Vec<f64> = Self::points(a, b, n).into_iter().map(f).collect();
        Self::from_values(a, b, &values)
    }

    /// Coefficients from values at `points(a, b, values.len())`.
    pub fn from_values(a: f64, b: f64, values: &[f64]) -> Self {
        let n = values.len();
        let table: Vec<f64> = (0..4 * n).map(|m| (PI * m as f64 / (2 * n) as f64).cos()).collect();
        let coeffs = (0..n)
            .map(|k| {
                let s: f64 = values
                    .iter()
                    .enumerate()
                    .map(|(j, v)| v * table[(k * (2 * j + 1)) % (4 * n)])
                    .sum();
                let scale = if k == 0 { 1.0 } else { 2.0 };
                scale * s / n as f64
            })
            .collect();
        Self::new(a, b, coeffs)
    }

    /// Exact re-expansion of a monomial-basis polynomial.
    pub fn from_monomial(a: f64, b: f64, mono: &[f64]) -> Self {
        let n = mono.len().max(1);
        let mut out = Self::interpolate(a, b, n, |x| horner(mono, x));
        out.trim(0.0);
        out
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn halfwidth(&self) -> f64 {
        0.5 * (self.b - self.a)
    }

    pub fn to_unit(&self, x: f64) -> f64 {
        (2.0 * x - self.a - self.b) / (self.b - self.a)
    }

    /// Drops trailing coefficients with magnitude `<= tol * max|c|`.
    pub fn trim(&mut self, tol: f64) {
        let scale = self.coeffs.iter().fold(0.0f64, |m, c| m.max(c.abs()));
        while self.coeffs.len() > 1 && self.coeffs.last().unwrap().abs() <= tol * scale {
            self.coeffs.pop();
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        clenshaw_t(&self.coeffs, self.to_unit(x))
    }

    pub fn derivative(&self) -> Self {
        let c = &self.coeffs;
        let n = c.len();
        if n == 1 {
            return Self::constant(self.a, self.b, 0.0);
        }
        let mut d = vec![0.0; n + 1];
        for k in (1..n).rev() {
            d[k - 1] = d[k + 1] + 2.0 * k as f64 * c[k];
        }
        d[0] *= 0.5;
        d.truncate(n - 1);
        let inv_h = 1.0 / self.halfwidth();
        Self::new(self.a, self.b, d.into_iter().map(|v| v * inv_h).collect())
    }

    /// Antiderivative vanishing at the left endpoint.
    pub fn antiderivative(&self) -> Self {
        let c = &self.coeffs;
        let n = c.len();
        let get = |k: usize| c.get(k).copied().unwrap_or(0.0);
        let h = self.halfwidth();
        let mut out = vec![0.0; n + 1];
        for (k, slot) in out.iter_mut().enumerate().skip(1) {
            let lower = if k == 1 { 2.0 * get(0) } else { get(k - 1) };
            *slot = h * (lower - get(k + 1)) / (2.0 * k as f64);
        }
        let at_left: f64 = out
            .iter()
            .enumerate()
            .skip(1)
            .map(|(k, v)| if k % 2 == 0 { *v } else { -*v })
            .sum();
        out[0] = -at_left;
        Self::new(self.a, self.b, out)
    }

    /// `(p(x) - p(y)) / (x - y)`, equal to `p'(x)` on the diagonal; exactly symmetric.
    pub fn divided_difference(&self, x: f64, y: f64) -> f64 {
        let (x, y) = if x <= y { (x, y) } else { (y, x) };
        let (s, t) = (self.to_unit(x), self.to_unit(y));
        let c = &self.coeffs;
        let (mut d_prev, mut d) = (0.0, 1.0);
        let (mut t_prev, mut t_cur) = (1.0, t);
        let mut acc = if c.len() > 1 { c[1] } else { 0.0 };
        for ck in c.iter().skip(2) {
            let d_next = 2.0 * s * d + 2.0 * t_cur - d_prev;
            let t_next = 2.0 * t * t_cur - t_prev;
            d_prev = d;
            d = d_next;
            t_prev = t_cur;
            t_cur = t_next;
            acc += ck * d;
        }
        acc / self.halfwidth()
    }

    /// `p[x, x, y] = d/dx p[x, y]`, equal to `p''(x) / 2` when `x = y`.
    pub fn second_divided_difference(&self, x: f64, y: f64) -> f64 {
        let (s, t) = (self.to_unit(x), self.to_unit(y));
        let c = &self.coeffs;
        let (mut d_prev, mut d) = (0.0, 1.0);
        let (mut e_prev, mut e) = (0.0, 0.0);
        let (mut t_prev, mut t_cur) = (1.0, t);
        let mut acc = 0.0;
        for ck in c.iter().skip(2) {
            let e_next = 2.0 * d + 2.0 * s * e - e_prev;
            let d_next = 2.0 * s * d + 2.0 * t_cur - d_prev;
            let t_next = 2.0 * t * t_cur - t_prev;
            e_prev = e;
            e = e_next;
            d_prev = d;
            d = d_next;
            t_prev = t_cur;
            t_cur = t_next;
            acc += ck * e;
        }
        let h = self.halfwidth();
        acc / (h * h)
    }

    /// Same polynomial expressed on a translated interval, `q(x) = p(x + shift)`.
    pub fn shifted(&self, shift: f64) -> Self {
        Self::new(self.a - shift, self.b - shift, self.coeffs.clone())
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self::new(self.a, self.b, self.coeffs.iter().map(|c| c * factor).collect())
    }
}

/// `sum_k c_k T_k(s)`.
pub fn clenshaw_t(c: &[f64], s: f64) -> f64 {
    let (mut b1, mut b2) = (0.0, 0.0);
    for &ck in c.iter().skip(1).rev() {
        let b0 = ck + 2.0 * s * b1 - b2;
        b2 = b1;
        b1 = b0;
    }
    c.first().copied().unwrap_or(0.0) + s * b1 - b2
}

/// `sum_k c_k U_k(s)`.
pub fn clenshaw_u(c: &[f64], s: f64) -> f64 {
    let (mut b1, mut b2) = (0.0, 0.0);
    for &ck in c.iter().rev() {
        let b0 = ck + 2.0 * s * b1 - b2;
        b2 = b1;
        b1 = b0;
    }
    b1
}

/// Monomial-basis evaluation.
pub fn horner(mono: &[f64], x: f64) -> f64 {
    mono.iter().rev().fold(0.0, |acc, c| acc * x + c)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cubic() -> ChebSeries {
        ChebSeries::from_monomial(-1.0, 3.0, &[1.0, -2.0, 0.5, 1.0])
    }

    #[test]
    fn monomial_roundtrip() {
        let p = cubic();
        for &x in &[-1.0, 0.0, 0.7, 2.5, 3.0] {
            let exact = 1.0 - 2.0 * x + 0.5 * x * x + x * x * x;
            assert!((p.eval(x) - exact).abs() < 1e-12);
        }
        assert_eq!(p.degree(), 3);
    }

    #[test]
    fn derivative_and_antiderivative() {
        let p = cubic();
        let dp = p.derivative();
        let ip = p.antiderivative();
        for &x in &[-0.5, 1.0, 2.9] {
            assert!((dp.eval(x) - (-2.0 + x + 3.0 * x * x)).abs() < 1e-12);
            let exact = |x: f64| x - x * x + x.powi(3) / 6.0 + x.powi(4) / 4.0;
            assert!((ip.eval(x) - (exact(x) - exact(-1.0))).abs() < 1e-12);
        }
        assert!(ip.eval(-1.0).abs() < 1e-14);
    }

    #[test]
    fn divided_differences_match_closed_forms() {
        let p = ChebSeries::from_monomial(-2.0, 2.0, &[0.0, 0.0, 0.0, 0.0, 0.25]);
        let q = ChebSeries::from_monomial(-2.0, 2.0, &[0.0, 0.0, 0.0, 1.0]);
        assert!((q.divided_difference(1.0, 2.0) - 7.0).abs() < 1e-12);
        assert!((q.divided_difference(1.0, 1.0) - 3.0).abs() < 1e-12);
        assert_eq!(p.divided_difference(0.3, -1.1), p.divided_difference(-1.1, 0.3));
        let (x, y) = (0.4, -1.3);
        let p1 = p.derivative();
        let expected = (p1.eval(x) - p.divided_difference(x, y)) / (x - y);
        assert!((p.second_divided_difference(x, y) - expected).abs() < 1e-12);
        assert!((p.second_divided_difference(x, x) - 0.5 * 3.0 * x * x).abs() < 1e-12);
    }

    #[test]
    fn interpolation_of_smooth_function() {
        let p = ChebSeries::interpolate(0.0, 2.0, 32, f64::exp);
        assert!((p.eval(1.234) - 1.234f64.exp()).abs() < 1e-13);
        assert!((p.derivative().eval(0.5) - 0.5f64.exp()).abs() < 1e-11);
    }

    #[test]
    fn u_clenshaw() {
        // U_2(s) = 4s^2 - 1
        assert!((clenshaw_u(&[0.0, 0.0, 1.0], 0.5) - 0.0).abs() < 1e-15);
        assert!((clenshaw_u(&[1.0, 1.0], 0.25) - 1.5).abs() < 1e-15);
    }
}
