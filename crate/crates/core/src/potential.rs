//! Convex potentials and polynomial test functions.

use crate::cheb::{horner, ChebSeries};
use crate::error::{Error, Result};
use crate::measure::SupportInterval;
use serde::{Deserialize, Serialize};

/// Real polynomial in the monomial basis, lowest degree first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Polynomial {
    pub coeffs: Vec<f64>,
}

impl Polynomial {
    pub fn new(coeffs: Vec<f64>) -> Self {
        let mut p = Self { coeffs };
        while p.coeffs.len() > 1 && *p.coeffs.last().unwrap() == 0.0 {
            p.coeffs.pop();
        }
        if p.coeffs.is_empty() {
            p.coeffs.push(0.0);
        }
        p
    }

    pub fn monomial(k: usize) -> Self {
        let mut c = vec![0.0; k + 1];
        c[k] = 1.0;
        Self::new(c)
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|&c| c == 0.0)
    }

    pub fn eval(&self, x: f64) -> f64 {
        horner(&self.coeffs, x)
    }

    pub fn derivative(&self) -> Self {
        if self.coeffs.len() == 1 {
            return Self::new(vec![0.0]);
        }
        Self::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, c)| k as f64 * c)
                .collect(),
        )
    }

    /// Exact Chebyshev re-expansion on `[a, b]`.
    pub fn to_cheb(&self, a: f64, b: f64) -> ChebSeries {
        ChebSeries::from_monomial(a, b, &self.coeffs)
    }

    /// `p(lambda x)`.
    pub fn rescale_argument(&self, lambda: f64) -> Self {
        let mut f = 1.0;
        Self::new(
            self.coeffs
                .iter()
                .map(|c| {
                    let v = c * f;
                    f *= lambda;
                    v
                })
                .collect(),
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Repr {
    Polynomial {
        u: Polynomial,
        du: Polynomial,
        d2u: Polynomial,
    },
    /// `u'` given by an interpolant on `[a, b]`, extended linearly outside with the
    /// end slopes when `extended` is set.
    Derivative {
        du: ChebSeries,
        d2u: ChebSeries,
        u: ChebSeries,
        slope_lo: f64,
        slope_hi: f64,
        extended: bool,
        u_at_zero: f64,
    },
}

/// Smooth strictly convex potential with a certified lower bound on `u''`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvexPotential {
    repr: Repr,
    kappa: f64,
    working: SupportInterval,
}

const CERTIFY_GRID: usize = 512;

impl ConvexPotential {
    /// Polynomial potential; the working interval is a root bound for `u'''`
    /// enlarged to contain the relevant scale, where `u''` attains its minimum.
    pub fn polynomial(coeffs: &[f64]) -> Result<Self> {
        let u = Polynomial::new(coeffs.to_vec());
        let du = u.derivative();
        let d2u = du.derivative();
        let deg2 = d2u.degree();
        if d2u.is_zero() {
            return Err(Error::NotConvex("u'' vanishes identically".into()));
        }
        let lead = *d2u.coeffs.last().unwrap();
        if deg2 % 2 == 1 || lead < 0.0 {
            return Err(Error::NotConvex("u'' is negative somewhere on the line".into()));
        }
        let radius = if deg2 == 0 {
            1.0
        } else {
            let d3 = d2u.derivative();
            let top = d3.coeffs.last().unwrap().abs();
            let bound = d3.coeffs[..d3.degree()]
                .iter()
                .map(|c| (c / top).abs())
                .fold(0.0f64, f64::max);
            1.0 + bound
        };
        let working = SupportInterval::new(-radius, radius)?;
        let kappa = certify_min(|x| d2u.eval(x), working);
        if kappa < -1e-12 * (1.0 + lead.abs()) {
            return Err(Error::NotConvex(format!("min u'' = {kappa:e}")));
        }
        // Minima at roundoff level are not evidence of uniform convexity.
        let kappa = if kappa <= 1e-12 * (1.0 + lead.abs()) { 0.0 } else { kappa };
        check_increasing(|x| du.eval(x), working)?;
        Ok(Self {
            repr: Repr::Polynomial { u, du, d2u },
            kappa,
            working,
        })
    }

    /// Potential with `u'` given by an interpolant; `u(0) = 0` when `0` lies in the
    /// extended domain.
    pub fn from_derivative(du: ChebSeries, extended: bool, kappa_min: f64) -> Result<Self> {
        let working = SupportInterval::new(du.a, du.b)?;
        let d2u = du.derivative();
        let slope_lo = d2u.eval(du.a).max(kappa_min);
        let slope_hi = d2u.eval(du.b).max(kappa_min);
        let kappa = certify_min(|x| d2u.eval(x), working).min(slope_lo).min(slope_hi);
        check_increasing(|x| du.eval(x), working)?;
        let u = du.antiderivative();
        let mut out = Self {
            repr: Repr::Derivative {
                du,
                d2u,
                u,
                slope_lo,
                slope_hi,
                extended,
                u_at_zero: 0.0,
            },
            kappa: kappa.max(0.0),
            working,
        };
        let zero = out.raw_value(0.0);
        if let Repr::Derivative { u_at_zero, .. } = &mut out.repr {
            *u_at_zero = zero;
        }
        Ok(out)
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn working_interval(&self) -> SupportInterval {
        self.working
    }

    /// Whether `u'` is defined on the whole line.
    pub fn is_global(&self) -> bool {
        match &self.repr {
            Repr::Polynomial { .. } => true,
            Repr::Derivative { extended, .. } => *extended,
        }
    }

    pub fn polynomial_coeffs(&self) -> Option<&[f64]> {
        match &self.repr {
            Repr::Polynomial { u, .. } => Some(&u.coeffs),
            Repr::Derivative { .. } => None,
        }
    }

    fn raw_value(&self, x: f64) -> f64 {
        match &self.repr {
            Repr::Polynomial { u, .. } => u.eval(x),
            Repr::Derivative { du, u, slope_lo, slope_hi, .. } => {
                if x < du.a {
                    let t = x - du.a;
                    u.eval(du.a) + du.eval(du.a) * t + 0.5 * slope_lo * t * t
                } else if x > du.b {
                    let t = x - du.b;
                    u.eval(du.b) + du.eval(du.b) * t + 0.5 * slope_hi * t * t
                } else {
                    u.eval(x)
                }
            }
        }
    }

    /// `u(x)`, anchored so that `u(0) = 0`.
    pub fn value(&self, x: f64) -> f64 {
        match &self.repr {
            Repr::Polynomial { u, .. } => u.eval(x) - u.coeffs[0],
            Repr::Derivative { u_at_zero, .. } => self.raw_value(x) - u_at_zero,
        }
    }

    pub fn derivative(&self, x: f64) -> f64 {
        match &self.repr {
            Repr::Polynomial { du, .. } => du.eval(x),
            Repr::Derivative { du, slope_lo, slope_hi, .. } => {
                if x < du.a {
                    du.eval(du.a) + slope_lo * (x - du.a)
                } else if x > du.b {
                    du.eval(du.b) + slope_hi * (x - du.b)
                } else {
                    du.eval(x)
                }
            }
        }
    }

    pub fn second_derivative(&self, x: f64) -> f64 {
        match &self.repr {
            Repr::Polynomial { d2u, .. } => d2u.eval(x),
            Repr::Derivative { du, d2u, slope_lo, slope_hi, .. } => {
                if x < du.a {
                    *slope_lo
                } else if x > du.b {
                    *slope_hi
                } else {
                    d2u.eval(x)
                }
            }
        }
    }

    /// `(u'(x) - u'(y)) / (x - y)`, equal to `u''(x)` on the diagonal; exactly symmetric.
    pub fn derivative_divided_difference(&self, x: f64, y: f64) -> f64 {
        let (x, y) = if x <= y { (x, y) } else { (y, x) };
        match &self.repr {
            Repr::Polynomial { du, .. } => {
                // sum_k c_k h_{k-1}(x, y) with h_m = sum_{i+j=m} x^i y^j
                let (mut h, mut ym, mut acc) = (1.0, 1.0, 0.0);
                for (k, c) in du.coeffs.iter().enumerate().skip(1) {
                    if k > 1 {
                        ym *= y;
                        h = x * h + ym;
                    }
                    acc += c * h;
                }
                acc
            }
            Repr::Derivative { du, .. } if du.a <= x && y <= du.b => du.divided_difference(x, y),
            Repr::Derivative { .. } => {
                if x == y {
                    self.second_derivative(x)
                } else {
                    (self.derivative(y) - self.derivative(x)) / (y - x)
                }
            }
        }
    }

    /// Whether `[a, b]` lies where `u'` is represented.
    pub fn covers(&self, a: f64, b: f64) -> bool {
        self.is_global() || (self.working.a <= a && b <= self.working.b)
    }

    /// Root of `u'`, by bisection on a bracket grown from the origin.
    pub fn minimizer(&self) -> f64 {
        let (mut lo, mut hi) = (-1.0, 1.0);
        while self.derivative(lo) > 0.0 {
            lo *= 2.0;
        }
        while self.derivative(hi) < 0.0 {
            hi *= 2.0;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if self.derivative(mid) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo < 1e-15 * (1.0 + mid.abs()) {
                break;
            }
        }
        0.5 * (lo + hi)
    }
}

/// Minimum of `f` on an interval: dense grid followed by golden-section refinement.
fn certify_min(f: impl Fn(f64) -> f64, iv: SupportInterval) -> f64 {
    let grid = iv.grid(CERTIFY_GRID);
    let (i, mut best) = grid
        .iter()
        .map(|&x| f(x))
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .unwrap();
    let (mut lo, mut hi) = (grid[i.saturating_sub(1)], grid[(i + 1).min(grid.len() - 1)]);
    let g = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..80 {
        let x1 = hi - g * (hi - lo);
        let x2 = lo + g * (hi - lo);
        if f(x1) < f(x2) {
            hi = x2;
        } else {
            lo = x1;
        }
    }
    best = best.min(f(0.5 * (lo + hi)));
    best
}

fn check_increasing(f: impl Fn(f64) -> f64, iv: SupportInterval) -> Result<()> {
    let values: Vec<f64> = iv.grid(CERTIFY_GRID).into_iter().map(f).collect();
    match values.windows(2).position(|w| w[1] <= w[0]) {
        Some(i) => Err(Error::NotConvex(format!(
            "u' is not strictly increasing near x = {}",
            iv.grid(CERTIFY_GRID)[i]
        ))),
        None => Ok(()),
    }
}
