//! Compactly supported densities in the weighted Chebyshev-U basis.
//!
//! With `x = c + h s` on the support `[c - h, c + h]`, the density in `s` is
//! `f(s) = sqrt(1 - s^2) * sum_k d_k U_{k-1}(s)`, i.e. `sum_k d_k sin(k theta)` for
//! `s = cos(theta)`. Unit mass means `d_1 = 2 / pi`.

use crate::cheb::{clenshaw_t, clenshaw_u};
use crate::error::{Error, Result};
use crate::quadrature::{QuadratureKind, QuadratureRule};
use num_complex::Complex64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::f64::consts::PI;
use std::sync::Arc;

const CDF_TABLE: usize = 512;
const QUANTILE_MAX_ITER: usize = 200;
const TRIM_REL: f64 = 1e-14;

/// Number of coefficients used for the truncated uniform density.
pub const UNIFORM_TERMS: usize = 1024;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SupportInterval {
    pub a: f64,
    pub b: f64,
}

impl SupportInterval {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        if a.is_finite() && b.is_finite() && a < b {
            Ok(Self { a, b })
        } else {
            Err(Error::InvalidSupport { a, b })
        }
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.a + self.b)
    }

    pub fn halfwidth(&self) -> f64 {
        0.5 * (self.b - self.a)
    }

    pub fn width(&self) -> f64 {
        self.b - self.a
    }

    pub fn contains(&self, x: f64) -> bool {
        self.a <= x && x <= self.b
    }

    pub fn to_unit(&self, x: f64) -> f64 {
        (x - self.midpoint()) / self.halfwidth()
    }

    pub fn from_unit(&self, s: f64) -> f64 {
        self.midpoint() + self.halfwidth() * s
    }

    /// `n` equispaced points including both endpoints.
    pub fn grid(&self, n: usize) -> Vec<f64> {
        let step = self.width() / (n - 1) as f64;
        (0..n).map(|i| self.a + step * i as f64).collect()
    }

    /// `n` equispaced points of the interval shrunk by `margin * width` on each side.
    pub fn interior_grid(&self, n: usize, margin: f64) -> Vec<f64> {
        let shrink = margin * self.width();
        SupportInterval {
            a: self.a + shrink,
            b: self.b - shrink,
        }
        .grid(n)
    }
}

/// Probability measure with density in the weighted Chebyshev-U basis.
#[derive(Debug, Clone)]
pub struct ChebMeasure {
    support: SupportInterval,
    coeffs: Vec<f64>,
    cdf_table: Arc<Vec<f64>>,
}

impl PartialEq for ChebMeasure {
    fn eq(&self, other: &Self) -> bool {
        self.support == other.support && self.coeffs == other.coeffs
    }
}

impl ChebMeasure {
    /// Normalizes and validates a coefficient vector.
    pub fn from_coeffs(support: SupportInterval, coeffs: Vec<f64>) -> Result<Self> {
        let mass = coeffs.first().copied().unwrap_or(0.0) * PI / 2.0;
        if !(mass > 0.0 && mass.is_finite()) {
            return Err(Error::NonPositiveMass { mass });
        }
        let raw = Self::assemble(support, coeffs.clone());
        if let Some((at, value)) = raw.most_negative(CDF_TABLE) {
            if value < -1e-8 {
                return Err(Error::NegativeDensity { value, at });
            }
        }
        let mut d: Vec<f64> = coeffs.into_iter().map(|c| c / mass).collect();
        trim(&mut d, TRIM_REL);
        Ok(Self::assemble(support, d))
    }

    /// Projects a density function (in `x`) onto the basis with `n_coeffs` terms.
    pub fn from_density(
        support: SupportInterval,
        n_coeffs: usize,
        density: impl Fn(f64) -> f64,
    ) -> Result<Self> {
        let m = (2 * n_coeffs).max(64);
        let samples: Vec<f64> = (0..m)
            .map(|j| {
                let theta = PI * (j as f64 + 0.5) / m as f64;
                support.halfwidth() * density(support.from_unit(theta.cos()))
            })
            .collect();
        Self::from_theta_samples(support, &samples, n_coeffs)
    }

    /// Builds from samples of the `s`-density at the midpoints `theta_j = pi (j + 1/2) / m`.
    pub fn from_theta_samples(
        support: SupportInterval,
        samples: &[f64],
        n_coeffs: usize,
    ) -> Result<Self> {
        let m = samples.len();
        if let Some((j, &v)) = samples
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1))
        {
            if v < -1e-8 {
                let theta = PI * (j as f64 + 0.5) / m as f64;
                return Err(Error::NegativeDensity {
                    value: v / support.halfwidth(),
                    at: support.from_unit(theta.cos()),
                });
            }
        }
        let coeffs = (1..=n_coeffs)
            .map(|k| {
                let s: f64 = samples
                    .iter()
                    .enumerate()
                    .map(|(j, v)| v * (k as f64 * PI * (j as f64 + 0.5) / m as f64).sin())
                    .sum();
                2.0 * s / m as f64
            })
            .collect();
        Self::from_coeffs(support, coeffs)
    }

    fn assemble(support: SupportInterval, coeffs: Vec<f64>) -> Self {
        let mut out = Self {
            support,
            coeffs,
            cdf_table: Arc::new(Vec::new()),
        };
        let table: Vec<f64> = support
            .grid(CDF_TABLE + 1)
            .into_iter()
            .map(|x| out.cdf(x))
            .collect();
        out.cdf_table = Arc::new(table);
        out
    }

    /// Standard semicircle on [-2, 2].
    pub fn semicircle() -> Self {
        Self::assemble(SupportInterval { a: -2.0, b: 2.0 }, vec![2.0 / PI])
    }

    /// Centered semicircle with the given variance.
    pub fn scaled_semicircle(variance: f64) -> Result<Self> {
        if !(variance > 0.0 && variance.is_finite()) {
            return Err(Error::InvalidArgument(format!("variance {variance} must be positive")));
        }
        let r = 2.0 * variance.sqrt();
        Ok(Self::assemble(SupportInterval::new(-r, r)?, vec![2.0 / PI]))
    }

    /// Uniform law on [a, b], truncated to `UNIFORM_TERMS` terms.
    pub fn uniform(a: f64, b: f64) -> Result<Self> {
        Self::uniform_with_terms(a, b, UNIFORM_TERMS)
    }

    pub fn uniform_with_terms(a: f64, b: f64, terms: usize) -> Result<Self> {
        let support = SupportInterval::new(a, b)?;
        let coeffs = (1..=terms)
            .map(|k| if k % 2 == 1 { 2.0 / (PI * k as f64) } else { 0.0 })
            .collect();
        Ok(Self::assemble(support, coeffs))
    }

    pub fn support(&self) -> SupportInterval {
        self.support
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn mass(&self) -> f64 {
        self.coeffs[0] * PI / 2.0
    }

    /// Density with respect to `s` divided by `sqrt(1 - s^2)`.
    fn weight_poly(&self, s: f64) -> f64 {
        clenshaw_u(&self.coeffs, s)
    }

    pub fn density(&self, x: f64) -> f64 {
        if !self.support.contains(x) {
            return 0.0;
        }
        let s = self.support.to_unit(x).clamp(-1.0, 1.0);
        (1.0 - s * s).max(0.0).sqrt() * self.weight_poly(s) / self.support.halfwidth()
    }

    pub fn cdf(&self, x: f64) -> f64 {
        if x <= self.support.a {
            return 0.0;
        }
        if x >= self.support.b {
            return 1.0;
        }
        let s = self.support.to_unit(x).clamp(-1.0, 1.0);
        let theta = s.acos();
        let (st, ct) = theta.sin_cos();
        // sin(j theta) for j = 0, 1, ... by the Chebyshev recurrence.
        let (mut s_prev, mut s_cur) = (0.0, st);
        let mut sines = Vec::with_capacity(self.coeffs.len() + 2);
        sines.push(0.0);
        sines.push(st);
        for _ in 1..=self.coeffs.len() {
            let next = 2.0 * ct * s_cur - s_prev;
            s_prev = s_cur;
            s_cur = next;
            sines.push(next);
        }
        let mut acc = self.coeffs[0] * 0.5 * (PI - theta + 0.5 * sines[2]);
        for (i, d) in self.coeffs.iter().enumerate().skip(1) {
            let k = (i + 1) as f64;
            acc -= d * 0.5 * (sines[i] / (k - 1.0) - sines[i + 2] / (k + 1.0));
        }
        acc.clamp(0.0, 1.0)
    }

    pub fn quantile(&self, p: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidArgument(format!("quantile level {p} outside [0, 1]")));
        }
        let SupportInterval { a, b } = self.support;
        if p == 0.0 {
            return Ok(a);
        }
        if p == 1.0 {
            return Ok(b);
        }
        let table = &self.cdf_table;
        let step = self.support.width() / CDF_TABLE as f64;
        let i = table.partition_point(|&f| f <= p).clamp(1, CDF_TABLE) - 1;
        let (mut lo, mut hi) = (a + step * i as f64, a + step * (i + 1) as f64);
        if i + 1 == CDF_TABLE {
            hi = b;
        }
        let (f_lo, f_hi) = (table[i], table[i + 1]);
        let mut x = if f_hi > f_lo {
            lo + (hi - lo) * (p - f_lo) / (f_hi - f_lo)
        } else {
            0.5 * (lo + hi)
        };
        let width = self.support.width();
        for _ in 0..QUANTILE_MAX_ITER {
            let r = self.cdf(x) - p;
            if r == 0.0 {
                return Ok(x);
            }
            if r < 0.0 {
                lo = x;
            } else {
                hi = x;
            }
            if hi - lo <= 1e-15 * width {
                return Ok(0.5 * (lo + hi));
            }
            let f = self.density(x);
            let newton = if f > 0.0 { x - r / f } else { f64::NAN };
            if newton > lo && newton < hi {
                if (newton - x).abs() <= 1e-15 * width {
                    return Ok(newton);
                }
                x = newton;
            } else {
                x = 0.5 * (lo + hi);
            }
        }
        Err(Error::QuantileNonConvergent { p })
    }

    /// Nodes and weights integrating against the measure, exact for
    /// polynomials of degree `< 2n - N` where `N` is the number of coefficients.
    pub fn rule(&self, n: usize) -> (Vec<f64>, Vec<f64>) {
        let q = QuadratureRule::new(QuadratureKind::GaussChebyshev2, n);
        q.nodes
            .iter()
            .zip(&q.weights)
            .map(|(&s, &w)| (self.support.from_unit(s), w * self.weight_poly(s)))
            .unzip()
    }

    /// Node count used by default for integrals of smooth functions.
    pub fn default_nodes(&self) -> usize {
        (self.coeffs.len() / 2 + 64).max(128)
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.integrate_with(self.default_nodes(), f)
    }

    pub fn integrate_with(&self, n: usize, f: impl Fn(f64) -> f64) -> f64 {
        let (xs, ws) = self.rule(n);
        xs.iter().zip(&ws).map(|(&x, &w)| w * f(x)).sum()
    }

    pub fn moment(&self, k: u32) -> f64 {
        let n = self.coeffs.len() / 2 + k as usize / 2 + 2;
        self.integrate_with(n, |x| x.powi(k as i32))
    }

    pub fn mean(&self) -> f64 {
        self.moment(1)
    }

    pub fn variance(&self) -> f64 {
        let m = self.mean();
        let n = self.coeffs.len() / 2 + 3;
        self.integrate_with(n, |x| (x - m) * (x - m))
    }

    pub fn translate(&self, c: f64) -> Self {
        let s = self.support;
        Self {
            support: SupportInterval { a: s.a + c, b: s.b + c },
            coeffs: self.coeffs.clone(),
            cdf_table: self.cdf_table.clone(),
        }
    }

    /// Law of `lambda X` for `lambda > 0`.
    pub fn dilate(&self, lambda: f64) -> Self {
        assert!(lambda > 0.0, "dilation factor must be positive");
        let s = self.support;
        Self {
            support: SupportInterval { a: lambda * s.a, b: lambda * s.b },
            coeffs: self.coeffs.clone(),
            cdf_table: self.cdf_table.clone(),
        }
    }

    /// Law of `-X`.
    pub fn reflect(&self) -> Self {
        let s = self.support;
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(i, d)| if i % 2 == 0 { *d } else { -*d })
            .collect();
        Self::assemble(SupportInterval { a: -s.b, b: -s.a }, coeffs)
    }

    pub fn recenter(&self) -> Self {
        self.translate(-self.mean())
    }

    /// Most negative density value on an `n`-point grid, if any.
    fn most_negative(&self, n: usize) -> Option<(f64, f64)> {
        self.support
            .grid(n)
            .into_iter()
            .map(|x| (x, self.density(x)))
            .filter(|(_, v)| *v < 0.0)
            .min_by(|a, b| a.1.total_cmp(&b.1))
    }

    /// Minimum density on an `n`-point grid.
    pub fn min_density(&self, n: usize) -> f64 {
        self.support
            .grid(n)
            .into_iter()
            .map(|x| self.density(x))
            .fold(f64::INFINITY, f64::min)
    }

    /// The point of the inverse Joukowski map inside the unit disk.
    fn joukowski_inverse(w: Complex64) -> (Complex64, Complex64) {
        let w = if w.im == 0.0 { Complex64::new(w.re, 0.0) } else { w };
        let r = (w - 1.0).sqrt() * (w + 1.0).sqrt();
        ((w + r).inv(), r)
    }

    /// `G(z) = int dmu(x) / (z - x)` for `Im z >= 0` (boundary values from above).
    pub fn cauchy(&self, z: Complex64) -> Complex64 {
        let w = (z - self.support.midpoint()) / self.support.halfwidth();
        let (xi, _) = Self::joukowski_inverse(w);
        let mut acc = Complex64::new(0.0, 0.0);
        for d in self.coeffs.iter().rev() {
            acc = (acc + d) * xi;
        }
        acc * (PI / self.support.halfwidth())
    }

    /// `G'(z)`, undefined at the support endpoints.
    pub fn cauchy_derivative(&self, z: Complex64) -> Complex64 {
        let h = self.support.halfwidth();
        let w = (z - self.support.midpoint()) / h;
        let (xi, r) = Self::joukowski_inverse(w);
        let mut acc = Complex64::new(0.0, 0.0);
        for (i, d) in self.coeffs.iter().enumerate().rev() {
            acc = acc * xi + d * (i + 1) as f64;
        }
        acc * (-xi / r) * (PI / (h * h))
    }

    /// Reciprocal Cauchy transform `F = 1 / G` and its derivative.
    pub fn reciprocal_cauchy(&self, z: Complex64) -> (Complex64, Complex64) {
        let g = self.cauchy(z);
        let dg = self.cauchy_derivative(z);
        (g.inv(), -dg / (g * g))
    }

    /// `PV int dmu(y) / (x - y)` on the support.
    pub fn hilbert(&self, x: f64) -> f64 {
        let s = self.support.to_unit(x);
        let mut t = Vec::with_capacity(self.coeffs.len() + 1);
        t.push(0.0);
        t.extend_from_slice(&self.coeffs);
        PI * clenshaw_t(&t, s) / self.support.halfwidth()
    }

    /// `int int log|x - y| dmu(x) dmu(y)`, in closed form.
    pub fn log_energy(&self) -> f64 {
        let d = &self.coeffs;
        let n = d.len();
        // Chebyshev-T coefficients of the logarithmic potential in s.
        let mut ell = vec![0.0; n + 2];
        ell[0] -= d[0] * PI / 2.0 * 2f64.ln();
        ell[2] += d[0] * PI / 4.0;
        for (i, dk) in d.iter().enumerate().skip(1) {
            let k = (i + 1) as f64;
            ell[i + 2] += dk * PI / 2.0 / (k + 1.0);
            ell[i] -= dk * PI / 2.0 / (k - 1.0);
        }
        let dk = |k: usize| if k >= 1 && k <= n { d[k - 1] } else { 0.0 };
        let inner: f64 = ell
            .iter()
            .enumerate()
            .map(|(j, l)| {
                let moment = match j {
                    0 => PI / 2.0 * dk(1),
                    1 => PI / 4.0 * dk(2),
                    _ => PI / 4.0 * (dk(j + 1) - dk(j - 1)),
                };
                l * moment
            })
            .sum();
        self.support.halfwidth().ln() * self.mass() * self.mass() + inner
    }

    /// Free entropy `log_energy + 3/4 + log(2 pi) / 2`.
    pub fn free_entropy(&self) -> f64 {
        self.log_energy() + 0.75 + 0.5 * (2.0 * PI).ln()
    }

    /// CSV with columns `x,density,cdf` on an `n`-point grid.
    pub fn grid_csv(&self, n: usize) -> String {
        let mut out = String::from("x,density,cdf\n");
        for x in self.support.grid(n) {
            out.push_str(&format!("{x:.16e},{:.16e},{:.16e}\n", self.density(x), self.cdf(x)));
        }
        out
    }
}

fn trim(d: &mut Vec<f64>, rel: f64) {
    let scale = d.iter().fold(0.0f64, |m, c| m.max(c.abs()));
    while d.len() > 1 && d.last().unwrap().abs() < rel * scale {
        d.pop();
    }
}

/// Smooth map of [0, 1] onto itself with vanishing first and second derivative at the ends.
fn smootherstep(t: f64) -> (f64, f64) {
    let p = t * t * t * (10.0 - 15.0 * t + 6.0 * t * t);
    let dp = 30.0 * t * t * (1.0 - t) * (1.0 - t);
    (p, dp)
}

/// Gauss-Legendre nodes in the level `p` after the smootherstep substitution,
/// which removes the endpoint singularities of quantile functions.
fn level_rule(n: usize) -> Vec<(f64, f64)> {
    let q = QuadratureRule::new(QuadratureKind::GaussLegendre, n);
    q.nodes
        .iter()
        .zip(&q.weights)
        .map(|(&s, &w)| {
            let (p, dp) = smootherstep(0.5 * (s + 1.0));
            (p, 0.5 * w * dp)
        })
        .collect()
}

/// Default Gauss-Legendre node count for integrals over quantile levels.
pub const LEVEL_NODES: usize = 256;

/// Quadratic Wasserstein distance by comonotone coupling.
pub fn w2_distance(mu: &ChebMeasure, nu: &ChebMeasure) -> Result<f64> {
    w2_distance_with(mu, nu, LEVEL_NODES)
}

pub fn w2_distance_with(mu: &ChebMeasure, nu: &ChebMeasure, nodes: usize) -> Result<f64> {
    let mut acc = 0.0;
    for (p, w) in level_rule(nodes) {
        let d = mu.quantile(p)? - nu.quantile(p)?;
        acc += w * d * d;
    }
    Ok(acc.sqrt())
}

/// `T(rho, mu) = int_0^1 q_rho(p) q_mu(p) dp`.
pub fn max_correlation(rho: &ChebMeasure, mu: &ChebMeasure) -> Result<f64> {
    let mut acc = 0.0;
    for (p, w) in level_rule(LEVEL_NODES) {
        acc += w * rho.quantile(p)? * mu.quantile(p)?;
    }
    Ok(acc)
}

#[derive(Serialize, Deserialize)]
struct MeasureJson {
    kind: String,
    support: [f64; 2],
    coeffs: Vec<f64>,
}

impl Serialize for ChebMeasure {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        MeasureJson {
            kind: "cheb".into(),
            support: [self.support.a, self.support.b],
            coeffs: self.coeffs.clone(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for ChebMeasure {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let raw = MeasureJson::deserialize(deserializer)?;
        if raw.kind != "cheb" {
            return Err(D::Error::custom(format!("unsupported measure kind {:?}", raw.kind)));
        }
        let support = SupportInterval::new(raw.support[0], raw.support[1]).map_err(D::Error::custom)?;
        ChebMeasure::from_coeffs(support, raw.coeffs).map_err(D::Error::custom)
    }
}
