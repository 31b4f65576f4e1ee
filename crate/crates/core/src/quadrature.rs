//! Gauss rules on [-1, 1].

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum QuadratureKind {
    /// Weight 1/sqrt(1 - s^2).
    GaussChebyshev1,
    /// Weight sqrt(1 - s^2).
    GaussChebyshev2,
    /// Weight 1.
    GaussLegendre,
}

/// Nodes and weights for one of the classical weights on [-1, 1].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadratureRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub kind: QuadratureKind,
}

impl QuadratureRule {
    pub fn new(kind: QuadratureKind, n: usize) -> Self {
        match kind {
            QuadratureKind::GaussChebyshev1 => gauss_chebyshev1(n),
            QuadratureKind::GaussChebyshev2 => gauss_chebyshev2(n),
            QuadratureKind::GaussLegendre => gauss_legendre(n),
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Highest polynomial degree integrated exactly against the weight.
    pub fn exactness_degree(&self) -> usize {
        2 * self.nodes.len() - 1
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }
}

fn gauss_chebyshev1(n: usize) -> QuadratureRule {
    let nodes = (0..n)
        .map(|j| (PI * (j as f64 + 0.5) / n as f64).cos())
        .collect();
    QuadratureRule {
        nodes,
        weights: vec![PI / n as f64; n],
        kind: QuadratureKind::GaussChebyshev1,
    }
}

fn gauss_chebyshev2(n: usize) -> QuadratureRule {
    let step = PI / (n as f64 + 1.0);
    let (nodes, weights) = (1..=n)
        .map(|j| {
            let t = step * j as f64;
            (t.cos(), step * t.sin().powi(2))
        })
        .unzip();
    QuadratureRule {
        nodes,
        weights,
        kind: QuadratureKind::GaussChebyshev2,
    }
}

fn gauss_legendre(n: usize) -> QuadratureRule {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                let (_, d) = legendre_with_derivative(n, x);
                dp = d;
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = x;
        weights[i] = w;
        nodes[n - 1 - i] = -x;
        weights[n - 1 - i] = w;
    }
    QuadratureRule {
        nodes,
        weights,
        kind: QuadratureKind::GaussLegendre,
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn legendre_integrates_polynomials() {
        let rule = QuadratureRule::new(QuadratureKind::GaussLegendre, 16);
        for k in 0..31 {
            let exact = if k % 2 == 0 { 2.0 / (k as f64 + 1.0) } else { 0.0 };
            assert!((rule.integrate(|x| x.powi(k)) - exact).abs() < 1e-14, "k={k}");
        }
    }

    #[test]
    fn chebyshev_rules_integrate_weights() {
        let r1 = QuadratureRule::new(QuadratureKind::GaussChebyshev1, 8);
        assert!((r1.integrate(|_| 1.0) - PI).abs() < 1e-14);
        assert!((r1.integrate(|x| x * x) - PI / 2.0).abs() < 1e-14);
        let r2 = QuadratureRule::new(QuadratureKind::GaussChebyshev2, 8);
        assert!((r2.integrate(|_| 1.0) - PI / 2.0).abs() < 1e-14);
        assert!((r2.integrate(|x| x * x) - PI / 8.0).abs() < 1e-14);
        assert!(r2.weights.iter().all(|&w| w > 0.0));
    }

    #[test]
    fn large_legendre_rule_is_accurate() {
        let rule = QuadratureRule::new(QuadratureKind::GaussLegendre, 1024);
        assert!((rule.integrate(|x| x.exp()) - (1f64.exp() - (-1f64).exp())).abs() < 1e-13);
        assert!(rule.weights.iter().all(|&w| w > 0.0));
    }
}
