//! Free additive convolution by subordination.
//!
//! For `mu ⊞ nu` the subordination function `w` of `mu` is the fixed point of
//! `w -> z + h_nu(z + h_mu(w))` with `h = F - id`, `F = 1 / G`. For the power
//! `mu^{⊞t}` it solves `t w = z + (t - 1) F_mu(w)`. Edges of the result are the
//! critical values of the inverse subordination map along the real axis.

use crate::error::{Error, Result};
use crate::measure::{ChebMeasure, SupportInterval};
use num_complex::Complex64;
use rayon::prelude::*;
use std::f64::consts::PI;

#[derive(Debug, Clone)]
pub struct ConvolutionOptions {
    /// Height of the Picard stage above the real axis.
    pub eps: f64,
    /// Number of evaluation nodes on the support.
    pub grid: usize,
    pub max_iter: usize,
}

impl Default for ConvolutionOptions {
    fn default() -> Self {
        Self { eps: 1e-4, grid: 1024, max_iter: 500 }
    }
}

trait Subordination: Sync {
    /// Picard map and the derivative of `map(w) - w`.
    fn step(&self, z: Complex64, w: Complex64) -> (Complex64, Complex64);
    fn cauchy(&self, w: Complex64) -> Complex64;
    fn initial(&self, x: f64) -> Complex64;
    fn right_edge(&self) -> Result<f64>;
    fn left_edge(&self) -> Result<f64>;
}

fn real(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

fn f_real(mu: &ChebMeasure, w: f64) -> (f64, f64) {
    let (f, df) = mu.reciprocal_cauchy(real(w));
    (f.re, df.re)
}

/// Point beyond the right end of the support where `pred` turns true, by bisection.
fn bisect_right(b: f64, width: f64, pred: impl Fn(f64) -> bool) -> f64 {
    let mut lo = b + 1e-15 * width.max(b.abs());
    let mut step = width;
    while !pred(b + step) {
        lo = b + step;
        step *= 2.0;
    }
    let mut hi = b + step;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if pred(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo <= 1e-16 * hi.abs().max(width) {
            break;
        }
    }
    0.5 * (lo + hi)
}

struct Power<'a> {
    mu: &'a ChebMeasure,
    t: f64,
}

impl Subordination for Power<'_> {
    fn step(&self, z: Complex64, w: Complex64) -> (Complex64, Complex64) {
        let (f, df) = self.mu.reciprocal_cauchy(w);
        let c = 1.0 - 1.0 / self.t;
        (z / self.t + f * c, df * c - 1.0)
    }

    fn cauchy(&self, w: Complex64) -> Complex64 {
        self.mu.cauchy(w)
    }

    fn initial(&self, x: f64) -> Complex64 {
        Complex64::new(x, self.mu.support().width() * self.t.sqrt())
    }

    fn right_edge(&self) -> Result<f64> {
        let s = self.mu.support();
        let target = self.t / (self.t - 1.0);
        let w = bisect_right(s.b, s.width(), |w| f_real(self.mu, w).1 < target);
        Ok(self.t * w - (self.t - 1.0) * f_real(self.mu, w).0)
    }

    fn left_edge(&self) -> Result<f64> {
        let r = self.mu.reflect();
        Ok(-Power { mu: &r, t: self.t }.right_edge()?)
    }
}

struct Pair<'a> {
    mu: &'a ChebMeasure,
    nu: &'a ChebMeasure,
}

impl Pair<'_> {
    /// Inverse of `F_nu` on the right of its support.
    fn f_inverse_right(nu: &ChebMeasure, y: f64) -> f64 {
        let s = nu.support();
        bisect_right(s.b, s.width(), |w| f_real(nu, w).0 >= y)
    }

    /// `z(w1) = w1 + w2 - y` along the real axis right of both supports.
    fn right_edge_of(mu: &ChebMeasure, nu: &ChebMeasure) -> f64 {
        let (sm, sn) = (mu.support(), nu.support());
        let y_min = f_real(nu, sn.b).0;
        let lo = if f_real(mu, sm.b).0 >= y_min {
            sm.b
        } else {
            bisect_right(sm.b, sm.width(), |w| f_real(mu, w).0 >= y_min)
        };
        let z = |w1: f64| {
            let y = f_real(mu, w1).0;
            w1 + Self::f_inverse_right(nu, y) - y
        };
        let scale = sm.width() + sn.width();
        let mut hi = lo + scale;
        while z(hi + scale) < z(hi) {
            hi += scale;
        }
        hi += scale;
        let mut a = lo;
        let mut b = hi;
        let g = 0.5 * (5f64.sqrt() - 1.0);
        let (mut x1, mut x2) = (b - g * (b - a), a + g * (b - a));
        let (mut f1, mut f2) = (z(x1), z(x2));
        for _ in 0..120 {
            if f1 < f2 {
                b = x2;
                x2 = x1;
                f2 = f1;
                x1 = b - g * (b - a);
                f1 = z(x1);
            } else {
                a = x1;
                x1 = x2;
                f1 = f2;
                x2 = a + g * (b - a);
                f2 = z(x2);
            }
        }
        f1.min(f2).min(z(lo.max(sm.b + 1e-15 * scale)))
    }
}

impl Subordination for Pair<'_> {
    fn step(&self, z: Complex64, w: Complex64) -> (Complex64, Complex64) {
        let (fm, dfm) = self.mu.reciprocal_cauchy(w);
        let w2 = z + fm - w;
        let (fn_, dfn) = self.nu.reciprocal_cauchy(w2);
        (z + fn_ - w2, (dfn - 1.0) * (dfm - 1.0) - 1.0)
    }

    fn cauchy(&self, w: Complex64) -> Complex64 {
        self.mu.cauchy(w)
    }

    fn initial(&self, x: f64) -> Complex64 {
        Complex64::new(x, self.mu.support().width() + self.nu.support().width())
    }

    fn right_edge(&self) -> Result<f64> {
        Ok(Self::right_edge_of(self.mu, self.nu))
    }

    fn left_edge(&self) -> Result<f64> {
        Ok(-Self::right_edge_of(&self.mu.reflect(), &self.nu.reflect()))
    }
}

fn lift(w: Complex64, floor: f64) -> Complex64 {
    if w.im < floor {
        Complex64::new(w.re, floor)
    } else {
        w
    }
}

/// Subordination value at `x + i0`, from a starting guess.
fn solve_node(
    sub: &dyn Subordination,
    x: f64,
    start: Complex64,
    opts: &ConvolutionOptions,
    scale: f64,
) -> Result<Complex64> {
    let floor = 1e-300;
    let mut w = start;
    let z_eps = Complex64::new(x, opts.eps * scale);
    for _ in 0..opts.max_iter {
        let next = lift(sub.step(z_eps, w).0, floor);
        let done = (next - w).norm() <= 1e-13 * scale;
        w = next;
        if done {
            break;
        }
    }
    let mut height = opts.eps * scale;
    loop {
        height *= 1e-2;
        let z = if height < 1e-13 * scale { real(x) } else { Complex64::new(x, height) };
        let mut converged = false;
        for _ in 0..100 {
            let (p, dphi) = sub.step(z, w);
            let phi = p - w;
            if !(dphi.norm() > 0.0) {
                break;
            }
            let mut delta = phi / dphi;
            let mut next = w - delta;
            let mut tries = 0;
            while next.im <= 0.0 && tries < 60 {
                delta *= 0.5;
                next = w - delta;
                tries += 1;
            }
            next = lift(next, floor);
            let reference = scale.max(w.norm());
            let small = delta.norm() <= 1e-13 * reference || phi.norm() <= 1e-15 * reference;
            w = next;
            if small {
                converged = true;
                break;
            }
        }
        if z.im == 0.0 {
            if converged {
                return Ok(w);
            }
            return Err(Error::SubordinationNonConvergent { at: x });
        }
    }
}

fn convolve(sub: &dyn Subordination, scale: f64, opts: &ConvolutionOptions) -> Result<ChebMeasure> {
    let (l, r) = (sub.left_edge()?, sub.right_edge()?);
    let support = SupportInterval::new(l, r)?;
    let m = opts.grid;
    let thetas: Vec<f64> = (0..m).map(|j| PI * (j as f64 + 0.5) / m as f64).collect();
    // Independent chunks, each swept with warm starts from its first node.
    let chunk = 32;
    let samples: Vec<Result<Vec<f64>>> = thetas
        .par_chunks(chunk)
        .map(|block| {
            let mut out = Vec::with_capacity(block.len());
            let mut w = sub.initial(support.from_unit(block[0].cos()));
            for &theta in block {
                let x = support.from_unit(theta.cos());
                w = solve_node(sub, x, w, opts, scale)?;
                let density = -sub.cauchy(w).im / PI;
                out.push(support.halfwidth() * density.max(0.0));
            }
            Ok(out)
        })
        .collect();
    let mut flat = Vec::with_capacity(m);
    for s in samples {
        flat.extend(s?);
    }
    let mut measure = ChebMeasure::from_theta_samples(support, &flat, m / 2)?;
    let d = measure.coeffs();
    let top = d.iter().fold(0.0f64, |a, c| a.max(c.abs()));
    let keep = d.iter().rposition(|c| c.abs() > 1e-13 * top).map_or(1, |i| i + 1);
    if keep < d.len() {
        measure = ChebMeasure::from_coeffs(support, d[..keep].to_vec())?;
    }
    Ok(measure)
}

/// `mu ⊞ nu`.
pub fn free_convolve(mu: &ChebMeasure, nu: &ChebMeasure, opts: &ConvolutionOptions) -> Result<ChebMeasure> {
    let (wide, narrow) = if mu.support().width() >= nu.support().width() { (mu, nu) } else { (nu, mu) };
    let scale = wide.support().width();
    convolve(&Pair { mu: wide, nu: narrow }, scale, opts)
}

/// `mu^{⊞t}` for real `t >= 1`.
pub fn free_convolve_power(mu: &ChebMeasure, t: f64, opts: &ConvolutionOptions) -> Result<ChebMeasure> {
    if !(t >= 1.0) {
        return Err(Error::InvalidArgument(format!("convolution power {t} must be at least 1")));
    }
    if t == 1.0 {
        return Ok(mu.clone());
    }
    let scale = mu.support().width() * t.sqrt();
    convolve(&Power { mu, t }, scale, opts)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn semicircles_add_variances() {
        let eta = ChebMeasure::semicircle();
        let out = free_convolve(&eta, &eta, &Default::default()).unwrap();
        let s = out.support();
        assert!((s.b - 2.0 * 2f64.sqrt()).abs() < 1e-10, "{s:?}");
        assert!((s.a + 2.0 * 2f64.sqrt()).abs() < 1e-10);
        let exact = ChebMeasure::scaled_semicircle(2.0).unwrap();
        let err = s.interior_grid(301, 1e-3).into_iter().map(|x| (out.density(x) - exact.density(x)).abs()).fold(0.0, f64::max);
        assert!(err < 1e-10, "{err}");
    }

    #[test]
    fn power_of_semicircle() {
        let eta = ChebMeasure::scaled_semicircle(0.25).unwrap();
        let out = free_convolve_power(&eta, 4.0, &Default::default()).unwrap();
        assert!((out.support().b - 2.0).abs() < 1e-10);
        assert!((out.moment(2) - 1.0).abs() < 1e-10);
    }
}
