//! Free Stein kernels, Stein discrepancies and the contraction estimates.
//!
//! A kernel `A` is a free Stein kernel for `mu` with respect to `V` when
//! `int V' f dmu = int int A(x, y) (f(x) - f(y)) / (x - y) dmu(x) dmu(y)` for all
//! test functions `f`. The moment kernel of a centered target is the divided
//! difference of `u'` read at the conjugate points `(u*)'(x)`, `(u*)'(y)`.

use crate::cheb::ChebSeries;
use crate::convolution::{free_convolve_power, ConvolutionOptions};
use crate::equilibrium::{solve_equilibrium, EquilibriumOptions};
use crate::error::{Error, Result};
use crate::measure::{w2_distance, ChebMeasure, SupportInterval};
use crate::momentmap::{monotone_transport, solve_moment_map, MomentMap, MomentMapOptions};
use crate::potential::{ConvexPotential, Polynomial};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::sync::Arc;

#[derive(Debug, Clone)]
pub enum KernelKind {
    Moment(Arc<MomentMap>),
    Constant(f64),
    Transported {
        inner: Box<SteinKernel1D>,
        potential: ConvexPotential,
    },
}

/// Symmetric kernel on `domain x domain`.
#[derive(Debug, Clone)]
pub struct SteinKernel1D {
    kind: KernelKind,
    domain: SupportInterval,
}

impl SteinKernel1D {
    pub fn constant(c: f64, domain: SupportInterval) -> Self {
        Self { kind: KernelKind::Constant(c), domain }
    }

    pub fn kind(&self) -> &KernelKind {
        &self.kind
    }

    pub fn domain(&self) -> SupportInterval {
        self.domain
    }

    pub fn eval(&self, x: f64, y: f64) -> Result<f64> {
        Ok(self.matrix(&[x], &[y])?[0])
    }

    /// Row-major values `A(xs[i], ys[j])`.
    pub fn matrix(&self, xs: &[f64], ys: &[f64]) -> Result<Vec<f64>> {
        let m = ys.len();
        match &self.kind {
            KernelKind::Constant(c) => Ok(vec![*c; xs.len() * m]),
            KernelKind::Moment(map) => {
                let cx = conjugates(map, xs)?;
                let cy = conjugates(map, ys)?;
                let mut out = vec![0.0; xs.len() * m];
                out.par_chunks_mut(m.max(1))
                    .zip(&cx)
                    .for_each(|(row, &x)| {
                        for (v, &y) in row.iter_mut().zip(&cy) {
                            *v = map.jd(x, y);
                        }
                    });
                Ok(out)
            }
            KernelKind::Transported { inner, potential } => {
                let vx: Vec<f64> = xs.iter().map(|&x| potential.derivative(x)).collect();
                let vy: Vec<f64> = ys.iter().map(|&y| potential.derivative(y)).collect();
                let mut out = inner.matrix(&vx, &vy)?;
                out.par_chunks_mut(m.max(1)).zip(xs).for_each(|(row, &x)| {
                    for (v, &y) in row.iter_mut().zip(ys) {
                        *v /= potential.derivative_divided_difference(x, y);
                    }
                });
                Ok(out)
            }
        }
    }
}

fn conjugates(map: &MomentMap, pts: &[f64]) -> Result<Vec<f64>> {
    pts.iter().map(|&y| map.conjugate_derivative(y)).collect()
}

/// `A(x, y) = (x - y) / ((u*)'(x) - (u*)'(y))` for the moment map `u` of its target.
pub fn moment_stein_kernel(map: MomentMap) -> SteinKernel1D {
    let domain = map.target().support();
    SteinKernel1D { kind: KernelKind::Moment(Arc::new(map)), domain }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[derive(Default)]
pub struct SteinOptions {
    /// Gauss nodes per axis; `None` picks the measure's default.
    pub nodes: Option<usize>,
}


fn tensor_mean(a: &SteinKernel1D, mu: &ChebMeasure, opts: &SteinOptions, g: impl Fn(f64, f64, f64) -> f64 + Sync) -> Result<f64> {
    let (xs, ws) = mu.rule(opts.nodes.unwrap_or_else(|| mu.default_nodes()));
    let values = a.matrix(&xs, &xs)?;
    let n = xs.len();
    Ok(values
        .par_chunks(n)
        .enumerate()
        .map(|(i, row)| {
            ws[i] * row.iter().zip(&xs).zip(&ws).map(|((v, &y), w)| w * g(xs[i], y, *v)).sum::<f64>()
        })
        .sum())
}

/// `int int (A - 1)^2 dmu dmu`.
pub fn stein_discrepancy(a: &SteinKernel1D, mu: &ChebMeasure) -> Result<f64> {
    stein_discrepancy_with(a, mu, &SteinOptions::default())
}

pub fn stein_discrepancy_with(a: &SteinKernel1D, mu: &ChebMeasure, opts: &SteinOptions) -> Result<f64> {
    tensor_mean(a, mu, opts, |_, _, v| (v - 1.0) * (v - 1.0))
}

/// The same discrepancy written on the source side: `int int (jd u' - 1)^2 dnu_u dnu_u`.
pub fn source_discrepancy(map: &MomentMap) -> f64 {
    let nu = &map.source().measure;
    let (xs, ws) = nu.rule(nu.default_nodes());
    xs.par_iter()
        .zip(&ws)
        .map(|(&x, &wx)| {
            wx * xs.iter().zip(&ws).map(|(&y, &wy)| wy * (map.jd(x, y) - 1.0).powi(2)).sum::<f64>()
        })
        .sum()
}

/// `|int V' f dmu - int int A (f(x) - f(y)) / (x - y) dmu dmu|`.
pub fn stein_residual(a: &SteinKernel1D, mu: &ChebMeasure, v: &ConvexPotential, f: &Polynomial) -> Result<f64> {
    let s = mu.support();
    let fs = f.to_cheb(s.a, s.b);
    let n = mu.default_nodes() + f.degree() + v.polynomial_coeffs().map_or(64, |c| c.len());
    let lhs = mu.integrate_with(n, |x| v.derivative(x) * f.eval(x));
    let rhs = tensor_mean(a, mu, &SteinOptions { nodes: Some(n) }, |x, y, k| k * fs.divided_difference(x, y))?;
    Ok((lhs - rhs).abs())
}

/// `(V')_# mu`, with density `f_mu(x) / V''(x)` at `y = V'(x)`.
pub fn pushforward(mu: &ChebMeasure, v: &ConvexPotential, n_coeffs: usize) -> Result<ChebMeasure> {
    let s = mu.support();
    let (lo, hi) = (v.derivative(s.a), v.derivative(s.b));
    let support = SupportInterval::new(lo, hi)?;
    let inverse = |y: f64| {
        let (mut a, mut b) = (s.a, s.b);
        let mut x = a + (b - a) * (y - lo) / (hi - lo);
        for _ in 0..200 {
            let r = v.derivative(x) - y;
            if r < 0.0 {
                a = x;
            } else {
                b = x;
            }
            let newton = x - r / v.second_derivative(x);
            let next = if newton > a && newton < b { newton } else { 0.5 * (a + b) };
            if (next - x).abs() <= 1e-16 * s.width() {
                return next;
            }
            x = next;
        }
        x
    };
    ChebMeasure::from_density(support, n_coeffs, |y| {
        let x = inverse(y);
        mu.density(x) / v.second_derivative(x)
    })
}

/// `(x, y) -> A_V(V'(x), V'(y)) (x - y) / (V'(x) - V'(y))`, a kernel for `mu` with respect to `V`
/// when `A_V` is one for `(V')_# mu` with respect to `x^2 / 2`.
pub fn transported_kernel(a_v: SteinKernel1D, mu: &ChebMeasure, v: &ConvexPotential) -> Result<SteinKernel1D> {
    if !(v.kappa() > 0.0) {
        return Err(Error::NonConvexV(format!("V'' has infimum {:e}", v.kappa())));
    }
    let barycenter = mu.integrate_with(mu.default_nodes() + 64, |x| v.derivative(x));
    if barycenter.abs() > 1e-8 {
        return Err(Error::BarycenterNotZero { value: barycenter });
    }
    if v.polynomial_coeffs() == Some(&[0.0, 0.0, 0.5][..]) {
        return Ok(a_v);
    }
    Ok(SteinKernel1D {
        kind: KernelKind::Transported { inner: Box::new(a_v), potential: v.clone() },
        domain: mu.support(),
    })
}

/// Moment kernel of `(V')_# mu` transported back to `mu`.
pub fn transported_moment_kernel(mu: &ChebMeasure, v: &ConvexPotential, opts: &MomentMapOptions) -> Result<SteinKernel1D> {
    let pushed = pushforward(mu, v, 256)?;
    let map = solve_moment_map(&pushed, opts)?;
    transported_kernel(moment_stein_kernel(map), mu, v)
}

/// Symmetry defect and minimum of the kernel on an `n x n` grid of its domain.
pub fn kernel_grid_check(a: &SteinKernel1D, n: usize) -> Result<(f64, f64)> {
    let grid = a.domain().grid(n);
    let m = a.matrix(&grid, &grid)?;
    let mut asym = 0.0f64;
    let mut min = f64::INFINITY;
    for i in 0..n {
        for j in 0..n {
            asym = asym.max((m[i * n + j] - m[j * n + i]).abs());
            min = min.min(m[i * n + j]);
        }
    }
    Ok((asym, min))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ContractionMode {
    MomentMap,
    Caffarelli,
}

#[derive(Debug, Clone, Serialize)]
pub struct ContractionReport {
    pub mode: ContractionMode,
    pub epsilon: f64,
    pub bound_claimed: f64,
    pub bound_observed: f64,
    /// Supremum of the moment kernel on a 64 x 64 grid (moment-map mode only).
    pub kernel_sup: Option<f64>,
    pub pass: bool,
}

fn centered_gibbs(u: &ConvexPotential) -> Result<ChebMeasure> {
    let nu = solve_equilibrium(u, &EquilibriumOptions::default())?.measure;
    Ok(if nu.mean().abs() > 1e-12 { nu.recenter() } else { nu })
}

pub fn contraction_check(u: &ConvexPotential, mode: ContractionMode, opts: &MomentMapOptions) -> Result<ContractionReport> {
    let eps = u.kappa();
    if !(eps > 0.0) {
        return Err(Error::HypothesisNotMet(vec![format!("u is not uniformly convex (kappa = {eps:e})")]));
    }
    let nu = centered_gibbs(u)?;
    let tol = 1e-6;
    match mode {
        ContractionMode::MomentMap => {
            let map = solve_moment_map(&nu, opts)?;
            let observed = map.max_second_derivative();
            let kernel = moment_stein_kernel(map);
            let grid = kernel.domain().grid(64);
            let kernel_sup = kernel.matrix(&grid, &grid)?.into_iter().fold(f64::NEG_INFINITY, f64::max);
            let claimed = 1.0 / eps;
            Ok(ContractionReport {
                mode,
                epsilon: eps,
                bound_claimed: claimed,
                bound_observed: observed,
                kernel_sup: Some(kernel_sup),
                pass: observed <= claimed + tol && kernel_sup <= claimed + tol,
            })
        }
        ContractionMode::Caffarelli => {
            let t = monotone_transport(&ChebMeasure::semicircle(), &nu, opts.degree)?;
            let observed = t.lipschitz();
            let claimed = eps.powf(-0.5);
            Ok(ContractionReport {
                mode,
                epsilon: eps,
                bound_claimed: claimed,
                bound_observed: observed,
                kernel_sup: None,
                pass: observed <= claimed + tol,
            })
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct StabilityReport {
    pub w2: f64,
    /// `sup |T - id|` for the monotone map from the semicircle onto the Gibbs law.
    pub transport_deviation: f64,
    pub kappa: f64,
    /// Whether `u'' >= 1`, the convexity level under which both numbers should vanish.
    pub unit_convex: bool,
    pub variance: f64,
    pub support: SupportInterval,
    /// Measure hypotheses that do not hold; empty when the probe is in scope.
    pub failed_hypotheses: Vec<String>,
}

/// Distance of a normalized Gibbs law from the semicircle; the measure hypotheses
/// (centered, unit variance, support near `[-2, 2]`) are enforced.
pub fn stability_probe(u: &ConvexPotential) -> Result<StabilityReport> {
    let report = stability_report(u)?;
    if report.failed_hypotheses.is_empty() {
        Ok(report)
    } else {
        Err(Error::HypothesisNotMet(report.failed_hypotheses))
    }
}

/// Same measurements as [`stability_probe`], listing failed hypotheses instead of rejecting.
pub fn stability_report(u: &ConvexPotential) -> Result<StabilityReport> {
    let nu = solve_equilibrium(u, &EquilibriumOptions::default())?.measure;
    let (mean, variance, s) = (nu.mean(), nu.variance(), nu.support());
    let mut failed = Vec::new();
    if mean.abs() > 1e-8 {
        failed.push(format!("mean {mean:e} is not zero"));
    }
    if (variance - 1.0).abs() > 1e-6 {
        failed.push(format!("variance {variance} differs from 1"));
    }
    if (s.a + 2.0).abs() > 1e-3 || (s.b - 2.0).abs() > 1e-3 {
        failed.push(format!("support [{}, {}] is not within 1e-3 of [-2, 2]", s.a, s.b));
    }
    let eta = ChebMeasure::semicircle();
    let w2 = w2_distance(&nu, &eta)?;
    let t = monotone_transport(&eta, &nu, 128)?;
    let mut deviation = 0.0f64;
    for x in eta.support().grid(513) {
        deviation = deviation.max((t.eval(x)? - x).abs());
    }
    Ok(StabilityReport {
        w2,
        transport_deviation: deviation,
        kappa: u.kappa(),
        unit_convex: u.kappa() >= 1.0 - 1e-12,
        variance,
        support: s,
        failed_hypotheses: failed,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct CltEntry {
    pub n: u32,
    pub w2_squared: f64,
    pub m4: f64,
    /// `2 + kappa_4 / n`, from additivity and scaling of free cumulants.
    pub m4_predicted: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CltReport {
    pub entries: Vec<CltEntry>,
    /// Least-squares slope of `log W2^2` against `log n`; absent when every distance vanishes.
    pub slope: Option<f64>,
    pub kappa4: f64,
}

/// Normalized sums `D_{1/sqrt n} nu^{⊞n}` of the Gibbs law of `u`, rescaled to unit variance.
pub fn clt_experiment(u: &ConvexPotential, n_list: &[u32], opts: &ConvolutionOptions) -> Result<CltReport> {
    let nu = centered_gibbs(u)?;
    let nu = nu.dilate(1.0 / nu.variance().sqrt());
    let kappa4 = nu.moment(4) - 2.0;
    let eta = ChebMeasure::semicircle();
    let mut entries = Vec::with_capacity(n_list.len());
    for &n in n_list {
        if n == 0 {
            return Err(Error::InvalidArgument("CLT sample sizes must be positive".into()));
        }
        let t = f64::from(n);
        let mu_n = free_convolve_power(&nu, t, opts)?.dilate(1.0 / t.sqrt());
        let w2 = w2_distance(&mu_n, &eta)?;
        entries.push(CltEntry { n, w2_squared: w2 * w2, m4: mu_n.moment(4), m4_predicted: 2.0 + kappa4 / t });
    }
    let pts: Vec<(f64, f64)> = entries
        .iter()
        .filter(|e| e.w2_squared > 1e-24)
        .map(|e| (f64::from(e.n).ln(), e.w2_squared.ln()))
        .collect();
    let slope = (pts.len() >= 2 && pts.len() == entries.len()).then(|| {
        let k = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
        sxy / sxx
    });
    Ok(CltReport { entries, slope, kappa4 })
}

/// Kernel values on an `n x n` grid of the domain, as `x,y,A` rows.
pub fn kernel_csv(a: &SteinKernel1D, n: usize) -> Result<String> {
    let grid = a.domain().grid(n);
    let m = a.matrix(&grid, &grid)?;
    let mut out = String::from("x,y,A\n");
    for (i, x) in grid.iter().enumerate() {
        for (j, y) in grid.iter().enumerate() {
            out.push_str(&format!("{x},{y},{}\n", m[i * n + j]));
        }
    }
    Ok(out)
}

/// Interpolant of `x -> A(x, x)` on the domain, handy for plotting.
pub fn kernel_diagonal(a: &SteinKernel1D, degree: usize) -> Result<ChebSeries> {
    let d = a.domain();
    let pts = ChebSeries::points(d.a, d.b, degree + 1);
    let values = pts.iter().map(|&x| a.eval(x, x)).collect::<Result<Vec<f64>>>()?;
    Ok(ChebSeries::from_values(d.a, d.b, &values))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn semicircle_kernel_is_one() {
        let map = solve_moment_map(&ChebMeasure::semicircle(), &Default::default()).unwrap();
        let a = moment_stein_kernel(map);
        assert!((a.eval(0.3, -1.2).unwrap() - 1.0).abs() < 1e-9);
        assert!(stein_discrepancy(&a, &ChebMeasure::semicircle()).unwrap() < 1e-16);
    }

    #[test]
    fn constant_kernel_residuals() {
        let half = ConvexPotential::polynomial(&[0.0, 0.0, 0.5]).unwrap();
        let eta = ChebMeasure::semicircle();
        let one = SteinKernel1D::constant(1.0, eta.support());
        assert!(stein_residual(&one, &eta, &half, &Polynomial::monomial(3)).unwrap() < 1e-12);
        let s2 = ChebMeasure::scaled_semicircle(2.0).unwrap();
        let wrong = SteinKernel1D::constant(1.0, s2.support());
        let r = stein_residual(&wrong, &s2, &half, &Polynomial::monomial(1)).unwrap();
        assert!((r - 1.0).abs() < 1e-12);
    }
}
