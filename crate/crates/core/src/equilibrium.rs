//! Free Gibbs (equilibrium) measures of convex potentials.
//!
//! On a candidate support `[a, b]` let `g(s) = ((b - a) / 4) u'(M(s))` with `M` the
//! affine map of `[-1, 1]` onto `[a, b]`, and `c_k` its Chebyshev-T coefficients.
//! The support is the solution of `c_0 = 0`, `c_1 = 2`, after which the density
//! coefficients in the weighted U basis are `d_k = c_k / pi`.

use crate::cheb::ChebSeries;
use crate::error::{Error, Result};
use crate::measure::{ChebMeasure, SupportInterval};
use crate::potential::ConvexPotential;
use std::f64::consts::PI;

#[derive(Debug, Clone)]
pub struct EquilibriumOptions {
    /// Gauss-Chebyshev nodes used for the coefficients of `g`.
    pub nodes: usize,
    /// Stopping tolerance on the endpoint residual.
    pub tol: f64,
    pub max_newton: usize,
    /// Starting support; when absent it is found by a scalar solve around the minimizer.
    pub initial_support: Option<SupportInterval>,
    pub sd_test_degree: u32,
}

impl Default for EquilibriumOptions {
    fn default() -> Self {
        Self {
            nodes: 256,
            tol: 1e-13,
            max_newton: 100,
            initial_support: None,
            sd_test_degree: 8,
        }
    }
}

#[derive(Debug, Clone)]
pub struct EquilibriumMeasure {
    pub measure: ChebMeasure,
    pub potential: ConvexPotential,
    /// Schwinger-Dyson residual at the configured test degree.
    pub sd_residual: f64,
    pub newton_iterations: usize,
}

struct Endpoints<'a> {
    u: &'a ConvexPotential,
    nodes: Vec<f64>,
}

impl Endpoints<'_> {
    fn samples(&self, m: f64, h: f64) -> Vec<f64> {
        self.nodes
            .iter()
            .map(|&s| 0.5 * h * self.u.derivative(m + h * s))
            .collect()
    }

    /// `(c_0, c_1 - 2)` on `[m - h, m + h]`.
    fn residual(&self, m: f64, h: f64) -> [f64; 2] {
        let n = self.nodes.len() as f64;
        let g = self.samples(m, h);
        let c0: f64 = g.iter().sum::<f64>() / n;
        let c1: f64 = 2.0 * g.iter().zip(&self.nodes).map(|(v, s)| v * s).sum::<f64>() / n;
        [c0, c1 - 2.0]
    }
}

fn norm(r: [f64; 2]) -> f64 {
    r[0].abs().max(r[1].abs())
}

/// Halfwidth solving `c_1 = 2` with the center held fixed.
fn scalar_halfwidth(eq: &Endpoints, m: f64) -> f64 {
    let f = |h: f64| eq.residual(m, h)[1];
    let (mut lo, mut hi) = (1.0, 1.0);
    while f(lo) > 0.0 && lo > 1e-12 {
        lo *= 0.5;
    }
    while f(hi) < 0.0 && hi < 1e12 {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-14 * hi {
            break;
        }
    }
    0.5 * (lo + hi)
}

pub fn solve_equilibrium(u: &ConvexPotential, opts: &EquilibriumOptions) -> Result<EquilibriumMeasure> {
    let n = opts.nodes;
    let eq = Endpoints {
        u,
        nodes: (0..n).map(|j| (PI * (j as f64 + 0.5) / n as f64).cos()).collect(),
    };
    let (mut m, mut h) = match opts.initial_support {
        Some(s) => (s.midpoint(), s.halfwidth()),
        None => {
            let m = u.minimizer();
            (m, scalar_halfwidth(&eq, m))
        }
    };
    let ensure_covered = |m: f64, h: f64| -> Result<()> {
        if u.covers(m - h, m + h) {
            Ok(())
        } else {
            let w = u.working_interval();
            Err(Error::WorkingIntervalTooSmall { a: m - h, b: m + h, wa: w.a, wb: w.b })
        }
    };
    ensure_covered(m, h)?;
    let mut r = eq.residual(m, h);
    let mut iterations = 0;
    while norm(r) > opts.tol {
        if iterations == opts.max_newton {
            return Err(Error::NewtonDiverged { iterations, residual: norm(r) });
        }
        iterations += 1;
        let eps = 1e-7 * h;
        let rm = eq.residual(m + eps, h);
        let rh = eq.residual(m, h + eps);
        let j = [
            [(rm[0] - r[0]) / eps, (rh[0] - r[0]) / eps],
            [(rm[1] - r[1]) / eps, (rh[1] - r[1]) / eps],
        ];
        let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
        if !det.is_finite() || det == 0.0 {
            return Err(Error::NewtonDiverged { iterations, residual: norm(r) });
        }
        let dm = (j[1][1] * r[0] - j[0][1] * r[1]) / det;
        let dh = (j[0][0] * r[1] - j[1][0] * r[0]) / det;
        let mut lambda = 1.0;
        let accepted = loop {
            let (m_new, h_new) = (m - lambda * dm, h - lambda * dh);
            if h_new > 0.0 && u.covers(m_new - h_new, m_new + h_new) {
                let r_new = eq.residual(m_new, h_new);
                if norm(r_new) < norm(r) || lambda < 1e-3 {
                    break Some((m_new, h_new, r_new));
                }
            }
            lambda *= 0.5;
            if lambda < 1e-10 {
                break None;
            }
        };
        match accepted {
            Some((m_new, h_new, r_new)) => {
                let step = (m_new - m).abs().max((h_new - h).abs());
                m = m_new;
                h = h_new;
                r = r_new;
                if step <= 1e-15 * h {
                    break;
                }
            }
            None => {
                ensure_covered(m - dm, h - dh)?;
                return Err(Error::NewtonDiverged { iterations, residual: norm(r) });
            }
        }
    }
    if norm(r) > 1e-9 {
        return Err(Error::NewtonDiverged { iterations, residual: norm(r) });
    }
    let support = SupportInterval::new(m - h, m + h)?;
    let g = eq.samples(m, h);
    let c = ChebSeries::from_values(-1.0, 1.0, &g);
    let d: Vec<f64> = c.coeffs[1..].iter().map(|ck| ck / PI).collect();
    let measure = ChebMeasure::from_coeffs(support, d)?;
    let sd_residual = schwinger_dyson_residual(&measure, u, opts.sd_test_degree);
    Ok(EquilibriumMeasure {
        measure,
        potential: u.clone(),
        sd_residual,
        newton_iterations: iterations,
    })
}

/// Moments `m_0..=m_k` of a measure.
pub fn moments(nu: &ChebMeasure, k: u32) -> Vec<f64> {
    (0..=k).map(|j| if j == 0 { 1.0 } else { nu.moment(j) }).collect()
}

/// `max_{k <= degree} |int u' x^k dnu - sum_{i+j=k-1} m_i m_j|`.
pub fn schwinger_dyson_residual(nu: &ChebMeasure, u: &ConvexPotential, test_degree: u32) -> f64 {
    let m = moments(nu, test_degree);
    let n = nu.default_nodes() + test_degree as usize + 64;
    let (xs, ws) = nu.rule(n);
    let du: Vec<f64> = xs.iter().map(|&x| u.derivative(x)).collect();
    (0..=test_degree)
        .map(|k| {
            let lhs: f64 = xs
                .iter()
                .zip(&ws)
                .zip(&du)
                .map(|((x, w), d)| w * d * x.powi(k as i32))
                .sum();
            let rhs: f64 = (0..k as usize).map(|i| m[i] * m[k as usize - 1 - i]).sum();
            (lhs - rhs).abs()
        })
        .fold(0.0, f64::max)
}

/// `sup |2 PV int dnu(y) / (x - y) - u'(x)|` on the support shrunk by 5% at each end.
pub fn euler_lagrange_residual(nu: &ChebMeasure, u: &ConvexPotential) -> f64 {
    nu.support()
        .interior_grid(201, 0.05)
        .into_iter()
        .map(|x| (2.0 * nu.hilbert(x) - u.derivative(x)).abs())
        .fold(0.0, f64::max)
}

/// `-int int log|t - s| drho drho + int u drho`.
pub fn gibbs_energy(rho: &ChebMeasure, u: &ConvexPotential) -> f64 {
    -rho.log_energy() + rho.integrate_with(rho.default_nodes() + 64, |x| u.value(x))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn solve(c: &[f64]) -> EquilibriumMeasure {
        solve_equilibrium(&ConvexPotential::polynomial(c).unwrap(), &Default::default()).unwrap()
    }

    #[test]
    fn quadratic_gives_semicircle() {
        let eq = solve(&[0.0, 0.0, 0.5]);
        let s = eq.measure.support();
        assert!((s.a + 2.0).abs() < 1e-12 && (s.b - 2.0).abs() < 1e-12);
        assert_eq!(eq.measure.coeffs().len(), 1);
        assert!(eq.sd_residual < 1e-12);
    }

    #[test]
    fn quartic_endpoints_and_coefficients() {
        let eq = solve(&[0.0, 0.0, 0.0, 0.0, 0.25]);
        let b = (16.0f64 / 3.0).powf(0.25);
        assert!((eq.measure.support().b - b).abs() < 1e-12);
        let d = eq.measure.coeffs();
        assert!((d[0] - 2.0 / PI).abs() < 1e-14);
        assert!(d[1].abs() < 1e-14);
        assert!((d[2] - 2.0 / (3.0 * PI)).abs() < 1e-13);
        assert!(eq.sd_residual < 1e-10);
    }

    #[test]
    fn shifted_potential_gives_shifted_measure() {
        // u = (x - 1)^2 / 2
        let eq = solve(&[0.5, -1.0, 0.5]);
        let s = eq.measure.support();
        assert!((s.a + 1.0).abs() < 1e-12 && (s.b - 3.0).abs() < 1e-12);
    }

    #[test]
    fn energy_of_semicircle() {
        let u = ConvexPotential::polynomial(&[0.0, 0.0, 0.5]).unwrap();
        assert!((gibbs_energy(&ChebMeasure::semicircle(), &u) - 0.75).abs() < 1e-14);
    }
}
