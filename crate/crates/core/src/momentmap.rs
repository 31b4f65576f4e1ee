//! Free moment maps: convex `u` with `mu = (u')_# nu_u`, found by damped fixed-point
//! iteration on `u'` through the monotone rearrangement.

use crate::cheb::ChebSeries;
use crate::equilibrium::{solve_equilibrium, EquilibriumMeasure, EquilibriumOptions};
use crate::error::{Error, Result};
use crate::measure::{max_correlation, ChebMeasure, SupportInterval};
use crate::potential::ConvexPotential;
use serde::Serialize;

#[derive(Debug, Clone)]
pub struct MomentMapOptions {
    /// Stop when `sup |u'_{k+1} - u'_k| < tol` on the current support.
    pub tol: f64,
    pub damping: f64,
    pub max_iter: usize,
    /// Interpolation degree of `u'` (the node count is one more).
    pub degree: usize,
    pub kappa_min: f64,
    /// Slope of the initial map `u'_0(x) = slope * x`.
    pub initial_slope: f64,
    pub equilibrium: EquilibriumOptions,
}

impl Default for MomentMapOptions {
    fn default() -> Self {
        Self {
            tol: 1e-13,
            damping: 0.5,
            max_iter: 200,
            degree: 128,
            kappa_min: 1e-8,
            initial_slope: 1.0,
            equilibrium: EquilibriumOptions::default(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct MomentMapDiagnostics {
    pub iterations: usize,
    pub residual: f64,
    pub pushforward_residual: f64,
    /// Number of iterations in which the monotonicity safeguard shortened the step.
    pub clamp_events: usize,
    pub clamp_active_at_convergence: bool,
    /// Shift applied to a slightly off-center target.
    pub target_shift: f64,
}

#[derive(Debug, Clone)]
pub struct MomentMap {
    uprime: ChebSeries,
    potential: ConvexPotential,
    kappa_min: f64,
    source: EquilibriumMeasure,
    target: ChebMeasure,
    diagnostics: MomentMapDiagnostics,
}

fn monotone(series: &ChebSeries, kappa_min: f64) -> bool {
    let d = series.derivative();
    SupportInterval { a: series.a, b: series.b }
        .grid(512)
        .into_iter()
        .all(|x| d.eval(x) >= kappa_min)
}

pub fn solve_moment_map(mu: &ChebMeasure, opts: &MomentMapOptions) -> Result<MomentMap> {
    let variance = mu.variance();
    if !(variance >= 1e-10) {
        return Err(Error::DegenerateTarget { variance });
    }
    let mean = mu.mean();
    if mean.abs() > 1e-6 {
        return Err(Error::NotCentered { mean });
    }
    let target = if mean != 0.0 { mu.translate(-mean) } else { mu.clone() };
    let n = opts.degree + 1;
    let r0 = 2.0 / opts.initial_slope.sqrt();
    let mut series = ChebSeries::new(-r0, r0, vec![0.0, opts.initial_slope * r0]);
    let mut clamp_events = 0;
    let mut last_clamped = false;
    let mut residual = f64::INFINITY;
    for iteration in 1..=opts.max_iter {
        let (pot, eq, shifted) = equilibrium_centered(&series, opts)?;
        series = shifted;
        let support = eq.measure.support();
        let nodes = ChebSeries::points(support.a, support.b, n);
        let mut old = Vec::with_capacity(n);
        let mut step = Vec::with_capacity(n);
        for &x in &nodes {
            let t = target.quantile(eq.measure.cdf(x))?;
            let o = pot.derivative(x);
            old.push(o);
            step.push(opts.damping * (t - o));
        }
        residual = step.iter().fold(0.0f64, |m, s| m.max(s.abs()));
        if residual < opts.tol {
            let diagnostics = MomentMapDiagnostics {
                iterations: iteration,
                residual,
                pushforward_residual: 0.0,
                clamp_events,
                clamp_active_at_convergence: last_clamped,
                target_shift: -mean,
            };
            let mut map = MomentMap {
                uprime: series,
                potential: pot,
                kappa_min: opts.kappa_min,
                source: eq,
                target,
                diagnostics,
            };
            map.diagnostics.pushforward_residual = map.pushforward_residual()?;
            return Ok(map);
        }
        let mut scale = 1.0;
        last_clamped = false;
        loop {
            let values: Vec<f64> = old.iter().zip(&step).map(|(o, s)| o + scale * s).collect();
            let candidate = ChebSeries::from_values(support.a, support.b, &values);
            if monotone(&candidate, opts.kappa_min) {
                series = candidate;
                break;
            }
            last_clamped = true;
            scale *= 0.5;
            if scale < 1e-6 {
                return Err(Error::NoConvergence { iterations: iteration, residual });
            }
        }
        if last_clamped {
            clamp_events += 1;
        }
    }
    Err(Error::NoConvergence { iterations: opts.max_iter, residual })
}

/// Solves for the equilibrium of `u'` and translates so that it is centered.
fn equilibrium_centered(
    series: &ChebSeries,
    opts: &MomentMapOptions,
) -> Result<(ConvexPotential, EquilibriumMeasure, ChebSeries)> {
    let pot = ConvexPotential::from_derivative(series.clone(), true, opts.kappa_min)?;
    let mut eq_opts = opts.equilibrium.clone();
    eq_opts.initial_support = Some(SupportInterval::new(series.a, series.b)?);
    let eq = solve_equilibrium(&pot, &eq_opts)?;
    let m = eq.measure.mean();
    if m == 0.0 {
        return Ok((pot, eq, series.clone()));
    }
    let shifted = series.shifted(m);
    let pot = ConvexPotential::from_derivative(shifted.clone(), true, opts.kappa_min)?;
    let eq = EquilibriumMeasure {
        measure: eq.measure.translate(-m),
        potential: pot.clone(),
        ..eq
    };
    Ok((pot, eq, shifted))
}

impl MomentMap {
    pub fn source(&self) -> &EquilibriumMeasure {
        &self.source
    }

    pub fn target(&self) -> &ChebMeasure {
        &self.target
    }

    pub fn diagnostics(&self) -> &MomentMapDiagnostics {
        &self.diagnostics
    }

    pub fn kappa_min(&self) -> f64 {
        self.kappa_min
    }

    /// Interval on which `u'` is interpolated.
    pub fn working_interval(&self) -> SupportInterval {
        SupportInterval { a: self.uprime.a, b: self.uprime.b }
    }

    pub fn uprime_series(&self) -> &ChebSeries {
        &self.uprime
    }

    pub fn potential(&self) -> &ConvexPotential {
        &self.potential
    }

    /// `u(x)` with `u(0) = 0`.
    pub fn u(&self, x: f64) -> f64 {
        self.potential.value(x)
    }

    pub fn uprime(&self, x: f64) -> f64 {
        self.potential.derivative(x)
    }

    pub fn usecond(&self, x: f64) -> f64 {
        self.potential.second_derivative(x)
    }

    /// `(u')^{-1}(y)`, the derivative of the Legendre conjugate.
    pub fn conjugate_derivative(&self, y: f64) -> Result<f64> {
        let w = self.working_interval();
        let (lo, hi) = (self.uprime(w.a), self.uprime(w.b));
        let slack = 1e-9 * (hi - lo);
        if !(y >= lo - slack && y <= hi + slack) {
            return Err(Error::OutOfRange { y, lo, hi });
        }
        if y <= lo {
            return Ok(w.a);
        }
        if y >= hi {
            return Ok(w.b);
        }
        let (mut a, mut b) = (w.a, w.b);
        let mut x = a + (b - a) * (y - lo) / (hi - lo);
        for _ in 0..200 {
            let r = self.uprime(x) - y;
            if r == 0.0 {
                return Ok(x);
            }
            if r < 0.0 {
                a = x;
            } else {
                b = x;
            }
            let d = self.usecond(x);
            let newton = x - r / d;
            let next = if d > 0.0 && newton > a && newton < b { newton } else { 0.5 * (a + b) };
            if (next - x).abs() <= 1e-15 * w.width() || b - a <= 1e-15 * w.width() {
                return Ok(next);
            }
            x = next;
        }
        Ok(x)
    }

    /// Free difference quotient of `u'`; exactly symmetric.
    pub fn jd(&self, x: f64, y: f64) -> f64 {
        let w = self.working_interval();
        if w.contains(x) && w.contains(y) {
            self.uprime.divided_difference(x, y)
        } else if x == y {
            self.usecond(x)
        } else {
            let (x, y) = if x < y { (x, y) } else { (y, x) };
            (self.uprime(x) - self.uprime(y)) / (x - y)
        }
    }

    /// `sup_p |F_mu(u'(q_nu(p))) - p|` over 199 interior levels.
    pub fn pushforward_residual(&self) -> Result<f64> {
        let mut worst = 0.0f64;
        for i in 1..200 {
            let p = i as f64 / 200.0;
            let x = self.source.measure.quantile(p)?;
            worst = worst.max((self.target.cdf(self.uprime(x)) - p).abs());
        }
        Ok(worst)
    }

    /// `sup |u'(x) - g(x)|` on a 512-point grid of the source support.
    pub fn sup_distance(&self, g: impl Fn(f64) -> f64) -> f64 {
        self.source
            .measure
            .support()
            .grid(512)
            .into_iter()
            .map(|x| (self.uprime(x) - g(x)).abs())
            .fold(0.0, f64::max)
    }

    /// `sup u''` on a 512-point grid of the source support.
    pub fn max_second_derivative(&self) -> f64 {
        self.source
            .measure
            .support()
            .grid(512)
            .into_iter()
            .map(|x| self.usecond(x))
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Monotone rearrangement `T = q_mu o F_nu`, with a Chebyshev interpolant on `supp nu`.
#[derive(Debug, Clone)]
pub struct MonotoneTransport {
    pub source: ChebMeasure,
    pub target: ChebMeasure,
    pub interpolant: ChebSeries,
}

pub fn monotone_transport(nu: &ChebMeasure, mu: &ChebMeasure, degree: usize) -> Result<MonotoneTransport> {
    let s = nu.support();
    let values = ChebSeries::points(s.a, s.b, degree + 1)
        .into_iter()
        .map(|x| mu.quantile(nu.cdf(x)))
        .collect::<Result<Vec<f64>>>()?;
    Ok(MonotoneTransport {
        source: nu.clone(),
        target: mu.clone(),
        interpolant: ChebSeries::from_values(s.a, s.b, &values),
    })
}

impl MonotoneTransport {
    pub fn eval(&self, x: f64) -> Result<f64> {
        self.target.quantile(self.source.cdf(x))
    }

    /// `sup T'` over a 512-point grid of the source support, from the interpolant.
    pub fn lipschitz(&self) -> f64 {
        let d = self.interpolant.derivative();
        self.source
            .support()
            .grid(512)
            .into_iter()
            .map(|x| d.eval(x))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// `sup |F_mu(T(x)) - F_nu(x)|` on an interior grid.
    pub fn consistency(&self) -> Result<f64> {
        let mut worst = 0.0f64;
        for x in self.source.support().interior_grid(201, 0.01) {
            let t = self.eval(x)?;
            worst = worst.max((self.target.cdf(t) - self.source.cdf(x)).abs());
        }
        Ok(worst)
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct KahlerEinsteinReport {
    pub residual: f64,
    pub constant: f64,
}

/// De-meaned sup of `2 int log jd(x, y) dnu(y) - [u_target(u'(x)) - u(x)]` on an interior grid.
pub fn kahler_einstein_residual(
    map: &MomentMap,
    u_target: &ConvexPotential,
) -> Result<KahlerEinsteinReport> {
    let nu = &map.source.measure;
    let (ys, ws) = nu.rule(nu.default_nodes() + 128);
    let grid = nu.support().interior_grid(101, 0.05);
    let mut r = Vec::with_capacity(grid.len());
    for &x in &grid {
        let mut acc = 0.0;
        for (&y, &w) in ys.iter().zip(&ws) {
            let j = map.jd(x, y);
            if !(j > 0.0) {
                return Err(Error::LogOfNonpositive { value: j, x, y });
            }
            acc += w * j.ln();
        }
        r.push(2.0 * acc - (u_target.value(map.uprime(x)) - map.u(x)));
    }
    let constant = r.iter().sum::<f64>() / r.len() as f64;
    let residual = r.iter().fold(0.0f64, |m, v| m.max((v - constant).abs()));
    Ok(KahlerEinsteinReport { residual, constant })
}

/// `-log_energy(rho) + T(rho, mu)`; the source of the moment map of `mu` minimizes it
/// among centered measures.
pub fn variational_objective(rho: &ChebMeasure, mu: &ChebMeasure) -> Result<f64> {
    Ok(-rho.log_energy() + max_correlation(rho, mu)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn semicircle_is_fixed_point() {
        let map = solve_moment_map(&ChebMeasure::semicircle(), &Default::default()).unwrap();
        assert!(map.sup_distance(|x| x) < 1e-10);
        assert!(map.diagnostics().iterations <= 2);
    }

    #[test]
    fn scaled_semicircle() {
        for var in [0.5, 2.0] {
            let mu = ChebMeasure::scaled_semicircle(var).unwrap();
            let map = solve_moment_map(&mu, &Default::default()).unwrap();
            assert!(map.sup_distance(|x| var * x) < 1e-9, "var {var}");
            assert!((map.conjugate_derivative(0.3).unwrap() - 0.3 / var).abs() < 1e-9);
        }
    }
}
