//! Diffusion operators on the Hessian metric of a moment map.
//!
//! For a moment map `phi` with source law `nu_phi` and a target potential `u`,
//! `L f(x) = 2 int f[x, x, y] / Jphi'(x, y) dnu_phi(y) - f'(x) u'(phi'(x))`, where
//! `Jphi'(x, y)` is the divided difference of `phi'`. Two-variable functions are
//! acted on slot by slot, through Chebyshev interpolants in the active variable.

use crate::cheb::ChebSeries;
use crate::equilibrium::{moments, solve_equilibrium, EquilibriumOptions};
use crate::error::{Error, Result};
use crate::measure::{ChebMeasure, SupportInterval};
use crate::momentmap::{solve_moment_map, MomentMap, MomentMapOptions};
use crate::potential::{ConvexPotential, Polynomial};
use crate::stein::SteinKernel1D;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy)]
pub struct DiffusionOptions {
    /// Quadrature nodes against `nu_phi`, on top of the measure's default.
    pub extra_nodes: usize,
    /// Interpolation degree for functions of one slot.
    pub degree: usize,
}

impl Default for DiffusionOptions {
    fn default() -> Self {
        Self { extra_nodes: 32, degree: 64 }
    }
}

/// A function of one variable with its derivative, ready for `L`.
#[derive(Debug, Clone)]
pub struct Smooth {
    f: ChebSeries,
    df: ChebSeries,
}

impl Smooth {
    pub fn new(f: ChebSeries) -> Self {
        let df = f.derivative();
        Self { f, df }
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.f.eval(x)
    }

    pub fn series(&self) -> &ChebSeries {
        &self.f
    }
}

#[derive(Debug, Clone)]
pub struct HessianManifold {
    phi: MomentMap,
    source: ChebMeasure,
    u_target: ConvexPotential,
    opts: DiffusionOptions,
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl HessianManifold {
    pub fn new(phi: MomentMap, u_target: ConvexPotential, opts: DiffusionOptions) -> Self {
        let source = phi.source().measure.clone();
        let (nodes, weights) = source.rule(source.default_nodes() + opts.extra_nodes);
        Self { phi, source, u_target, opts, nodes, weights }
    }

    /// Manifold of the Gibbs law of `u`: the moment map of `nu_u` with drift through `u`.
    pub fn from_gibbs(u: &ConvexPotential, opts: &MomentMapOptions) -> Result<Self> {
        let nu = solve_equilibrium(u, &EquilibriumOptions::default())?.measure;
        let map = solve_moment_map(&nu, opts)?;
        Ok(Self::new(map, u.clone(), DiffusionOptions::default()))
    }

    pub fn phi(&self) -> &MomentMap {
        &self.phi
    }

    pub fn source(&self) -> &ChebMeasure {
        &self.source
    }

    pub fn u_target(&self) -> &ConvexPotential {
        &self.u_target
    }

    fn domain(&self) -> SupportInterval {
        self.source.support()
    }

    /// Polynomial as a series on the support enlarged to contain `extra`.
    pub fn smooth(&self, f: &Polynomial, extra: &[f64]) -> Smooth {
        let s = self.domain();
        let a = extra.iter().fold(s.a, |m, &x| m.min(x));
        let b = extra.iter().fold(s.b, |m, &x| m.max(x));
        Smooth::new(f.to_cheb(a, b))
    }

    fn interpolate(&self, g: impl Fn(f64) -> f64) -> Smooth {
        let s = self.domain();
        Smooth::new(ChebSeries::interpolate(s.a, s.b, self.opts.degree + 1, g))
    }

    pub fn laplacian(&self, f: &Smooth, x: f64) -> f64 {
        let integral: f64 = self
            .nodes
            .iter()
            .zip(&self.weights)
            .map(|(&y, &w)| w * f.f.second_divided_difference(x, y) / self.phi.jd(x, y))
            .sum();
        2.0 * integral - f.df.eval(x) * self.u_target.derivative(self.phi.uprime(x))
    }

    /// `L` applied to `f` and interpolated on the support.
    pub fn laplacian_series(&self, f: &Smooth) -> Smooth {
        self.interpolate(|x| self.laplacian(f, x))
    }

    /// `Gamma(f, g)(x, y) = f[x, y] g[x, y] / Jphi'(x, y)`.
    pub fn gamma_smooth(&self, f: &Smooth, g: &Smooth, x: f64, y: f64) -> f64 {
        f.f.divided_difference(x, y) * g.f.divided_difference(x, y) / self.phi.jd(x, y)
    }

    /// `Gamma_2(f)` on `xs x ys`, row-major, from `(L (x) 1 + 1 (x) L) Gamma(f) - 2 Gamma(L f, f)`.
    pub fn gamma2_grid(&self, f: &Smooth, xs: &[f64], ys: &[f64]) -> Vec<f64> {
        let lf = self.laplacian_series(f);
        // L in the first slot of Gamma(f)(., y), for each y in the pair list
        let first_slot = |pts: &[f64], others: &[f64]| -> Vec<f64> {
            others
                .par_iter()
                .flat_map_iter(|&y| {
                    let slice = self.interpolate(|x| self.gamma_smooth(f, f, x, y));
                    pts.iter().map(move |&x| self.laplacian(&slice, x)).collect::<Vec<_>>()
                })
                .collect()
        };
        // first[j * nx + i] = L_x Gamma(x_i, y_j); second[i * ny + j] = L_y Gamma(x_i, y_j)
        let first = first_slot(xs, ys);
        let second = first_slot(ys, xs);
        let (nx, ny) = (xs.len(), ys.len());
        let mut out = vec![0.0; nx * ny];
        for i in 0..nx {
            for j in 0..ny {
                let both = first[j * nx + i] + second[i * ny + j];
                out[i * ny + j] = 0.5 * both - self.gamma_smooth(&lf, f, xs[i], ys[j]);
            }
        }
        out
    }

    pub fn gamma2(&self, f: &Smooth, x: f64, y: f64) -> f64 {
        self.gamma2_grid(f, &[x], &[y])[0]
    }
}

pub fn laplacian_apply(m: &HessianManifold, f: &Polynomial, x: f64) -> f64 {
    m.laplacian(&m.smooth(f, &[x]), x)
}

/// `sup |L phi' + phi'|` over an interior grid of the support.
pub fn eigen_residual(m: &HessianManifold) -> f64 {
    let s = m.domain();
    let phi = Smooth::new(m.phi.uprime_series().clone());
    s.interior_grid(101, 0.02)
        .par_iter()
        .map(|&x| (m.laplacian(&phi, x) + phi.eval(x)).abs())
        .reduce(|| 0.0, f64::max)
}

pub fn gamma(m: &HessianManifold, f: &Polynomial, g: &Polynomial, x: f64, y: f64) -> f64 {
    let pts = [x, y];
    m.gamma_smooth(&m.smooth(f, &pts), &m.smooth(g, &pts), x, y)
}

pub fn gamma2(m: &HessianManifold, f: &Polynomial, x: f64, y: f64) -> f64 {
    m.gamma2(&m.smooth(f, &[x, y]), x, y)
}

#[derive(Debug, Clone, Serialize)]
pub struct DirichletReport {
    /// `int int Gamma(f, g) dnu dnu`.
    pub energy: f64,
    pub pairing_fg: f64,
    pub pairing_gf: f64,
    /// `|energy + <f, L g>|`.
    pub residual: f64,
    /// `|<f, L g> - <g, L f>|`.
    pub symmetry: f64,
}

fn pairing(m: &HessianManifold, f: &Smooth, g: &Smooth) -> f64 {
    m.nodes
        .par_iter()
        .zip(&m.weights)
        .map(|(&x, &w)| w * f.eval(x) * m.laplacian(g, x))
        .sum()
}

pub fn dirichlet_residual(m: &HessianManifold, f: &Polynomial, g: &Polynomial) -> DirichletReport {
    let (fs, gs) = (m.smooth(f, &[]), m.smooth(g, &[]));
    let energy: f64 = m
        .nodes
        .par_iter()
        .zip(&m.weights)
        .map(|(&x, &wx)| {
            wx * m
                .nodes
                .iter()
                .zip(&m.weights)
                .map(|(&y, &wy)| wy * m.gamma_smooth(&fs, &gs, x, y))
                .sum::<f64>()
        })
        .sum();
    let pairing_fg = pairing(m, &fs, &gs);
    let pairing_gf = pairing(m, &gs, &fs);
    DirichletReport {
        energy,
        pairing_fg,
        pairing_gf,
        residual: (energy + pairing_fg).abs(),
        symmetry: (pairing_fg - pairing_gf).abs(),
    }
}

/// `|int L f dnu_phi|`.
pub fn stationarity_residual(m: &HessianManifold, f: &Polynomial) -> f64 {
    let fs = m.smooth(f, &[]);
    m.nodes
        .par_iter()
        .zip(&m.weights)
        .map(|(&x, &w)| w * m.laplacian(&fs, x))
        .sum::<f64>()
        .abs()
}

/// `-2 d/dx int f[x, y] dnu(y) + V'(x) f'(x)`, with the smoothed field expanded in the
/// moments of `nu`.
pub fn langevin_apply(v: &ConvexPotential, nu: &ChebMeasure, f: &Polynomial, x: f64) -> f64 {
    let k = f.degree();
    let mom = moments(nu, k.max(1) as u32);
    // d/dx sum_k c_k sum_{i + j = k - 1} x^i m_j
    let mut field = 0.0;
    for (deg, c) in f.coeffs.iter().enumerate().skip(2) {
        let mut xp = 1.0;
        for i in 1..deg {
            field += c * i as f64 * xp * mom[deg - 1 - i];
            xp *= x;
        }
    }
    -2.0 * field + v.derivative(x) * f.derivative().eval(x)
}

/// `int int (f[x, y])^2 dnu dnu`.
pub fn h1_seminorm_sq(nu: &ChebMeasure, f: &Polynomial) -> f64 {
    weighted_energy(nu, f, |_, _| 1.0)
}

fn weighted_energy(nu: &ChebMeasure, f: &Polynomial, weight: impl Fn(f64, f64) -> f64 + Sync) -> f64 {
    let s = nu.support();
    let fs = f.to_cheb(s.a, s.b);
    let (xs, ws) = nu.rule(nu.default_nodes() + f.degree());
    xs.par_iter()
        .zip(&ws)
        .map(|(&x, &wx)| {
            wx * xs
                .iter()
                .zip(&ws)
                .map(|(&y, &wy)| wy * weight(x, y) * fs.divided_difference(x, y).powi(2))
                .sum::<f64>()
        })
        .sum()
}

#[derive(Debug, Clone, Serialize)]
pub struct LangevinReport {
    pub quadratic_form: f64,
    pub h1_seminorm_sq: f64,
    pub residual: f64,
}

/// `<M_V f, f>_nu` against the `H^1(nu)` seminorm.
pub fn langevin_check(v: &ConvexPotential, nu: &ChebMeasure, f: &Polynomial) -> LangevinReport {
    let n = nu.default_nodes() + 2 * f.degree() + 32;
    let quadratic_form = nu.integrate_with(n, |x| langevin_apply(v, nu, f, x) * f.eval(x));
    let h1 = h1_seminorm_sq(nu, f);
    LangevinReport { quadratic_form, h1_seminorm_sq: h1, residual: (quadratic_form - h1).abs() }
}

pub fn variance(mu: &ChebMeasure, f: &Polynomial) -> f64 {
    let n = mu.default_nodes() + 2 * f.degree();
    let m1 = mu.integrate_with(n, |x| f.eval(x));
    mu.integrate_with(n, |x| (f.eval(x) - m1).powi(2))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VarianceKind {
    FreePoincare,
    BrascampLieb,
    WeightedPoincare,
}

/// Inputs matched to each inequality.
#[derive(Debug, Clone)]
pub enum VarianceInputs<'a> {
    /// Measure and constant; `None` uses `2 rho(mu)^2` with `rho` the spectral radius.
    FreePoincare { mu: &'a ChebMeasure, constant: Option<f64> },
    /// Potential; the measure is its Gibbs law.
    BrascampLieb { v: &'a ConvexPotential },
    /// Measure and a Stein kernel for it.
    WeightedPoincare { mu: &'a ChebMeasure, kernel: &'a SteinKernel1D },
}

#[derive(Debug, Clone, Serialize)]
pub struct VarianceReport {
    pub kind: VarianceKind,
    pub lhs: f64,
    pub rhs: f64,
    pub pass: bool,
}

pub fn variance_check(inputs: &VarianceInputs, f: &Polynomial) -> Result<VarianceReport> {
    let (kind, lhs, rhs) = match inputs {
        VarianceInputs::FreePoincare { mu, constant } => {
            let s = mu.support();
            let c = constant.unwrap_or(2.0 * s.a.abs().max(s.b.abs()).powi(2));
            (VarianceKind::FreePoincare, variance(mu, f), c * h1_seminorm_sq(mu, f))
        }
        VarianceInputs::BrascampLieb { v } => {
            let nu = solve_equilibrium(v, &EquilibriumOptions::default())?.measure;
            let rhs = weighted_energy(&nu, f, |x, y| 1.0 / v.derivative_divided_difference(x, y));
            (VarianceKind::BrascampLieb, variance(&nu, f), rhs)
        }
        VarianceInputs::WeightedPoincare { mu, kernel } => {
            let s = mu.support();
            let fs = f.to_cheb(s.a, s.b);
            let (xs, ws) = mu.rule(mu.default_nodes() + f.degree());
            let a = kernel.matrix(&xs, &xs)?;
            let n = xs.len();
            let mut rhs = 0.0;
            for i in 0..n {
                for j in 0..n {
                    rhs += ws[i] * ws[j] * a[i * n + j] * fs.divided_difference(xs[i], xs[j]).powi(2);
                }
            }
            (VarianceKind::WeightedPoincare, variance(mu, f), rhs)
        }
    };
    Ok(VarianceReport { kind, lhs, rhs, pass: lhs <= rhs + 1e-9 })
}

#[derive(Debug, Clone, Serialize)]
pub struct BakryEmeryReport {
    /// Always true: the inequality probed here is not a theorem.
    pub exploratory: bool,
    pub constant: f64,
    /// `min (Gamma_2(f) - c Gamma(f))` over the grid, per function.
    pub per_function: Vec<f64>,
    pub min_gap: f64,
}

/// Minimum of `Gamma_2(f) - c Gamma(f)` over a `grid x grid` square of the support.
pub fn bakry_emery_probe(m: &HessianManifold, family: &[Polynomial], grid: usize, constant: f64) -> Result<BakryEmeryReport> {
    if grid < 2 {
        return Err(Error::InvalidArgument("grid needs at least two points per side".into()));
    }
    let pts = m.domain().grid(grid);
    let per_function: Vec<f64> = family
        .iter()
        .map(|f| {
            let fs = m.smooth(f, &[]);
            let g2 = m.gamma2_grid(&fs, &pts, &pts);
            let mut worst = f64::INFINITY;
            for (i, &x) in pts.iter().enumerate() {
                for (j, &y) in pts.iter().enumerate() {
                    worst = worst.min(g2[i * grid + j] - constant * m.gamma_smooth(&fs, &fs, x, y));
                }
            }
            worst
        })
        .collect();
    let min_gap = per_function.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(BakryEmeryReport { exploratory: true, constant, per_function, min_gap })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ou() -> HessianManifold {
        let half = ConvexPotential::polynomial(&[0.0, 0.0, 0.5]).unwrap();
        HessianManifold::from_gibbs(&half, &Default::default()).unwrap()
    }

    #[test]
    fn ou_laplacian_on_low_chaos() {
        let m = ou();
        for x in [-1.5, 0.0, 0.7] {
            assert!((laplacian_apply(&m, &Polynomial::monomial(1), x) + x).abs() < 1e-9);
            assert!((laplacian_apply(&m, &Polynomial::monomial(2), x) - (2.0 - 2.0 * x * x)).abs() < 1e-9);
        }
        assert!(eigen_residual(&m) < 1e-9);
    }

    #[test]
    fn ou_gamma2_first_chaos() {
        let m = ou();
        let g2 = gamma2(&m, &Polynomial::monomial(1), 0.4, -1.1);
        assert!((g2 - 1.0).abs() < 1e-9, "{g2}");
        let gg = gamma(&m, &Polynomial::monomial(2), &Polynomial::monomial(2), 0.4, -1.1);
        assert!((gg - 0.7f64.powi(2)).abs() < 1e-9);
    }

    #[test]
    fn langevin_on_semicircle() {
        let half = ConvexPotential::polynomial(&[0.0, 0.0, 0.5]).unwrap();
        let eta = ChebMeasure::semicircle();
        let x = 0.8;
        assert!((langevin_apply(&half, &eta, &Polynomial::monomial(2), x) - (2.0 * x * x - 2.0)).abs() < 1e-12);
        let r = langevin_check(&half, &eta, &Polynomial::monomial(2));
        assert!((r.quadratic_form - 2.0).abs() < 1e-12 && r.residual < 1e-12);
    }
}
