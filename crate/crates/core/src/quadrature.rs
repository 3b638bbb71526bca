//! Quadrature on the reference triangle `(0,0), (1,0), (0,1)`.
//!
//! Degrees 1–6 use fully symmetric Gauss rules (Strang–Fix / Dunavant).
//! Degrees 7–10 use the collapsed (Duffy) tensor product of Gauss–Legendre
//! rules, which keeps every weight positive.

use crate::tensor::Point;
use crate::{Error, Result};

#[derive(Clone, Debug)]
pub struct QuadratureRule {
    pub points: Vec<Point>,
    /// Weights sum to the reference area ½.
    pub weights: Vec<f64>,
    pub degree: usize,
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (Point, f64)> + '_ {
        self.points.iter().copied().zip(self.weights.iter().copied())
    }
}

/// Rule on the reference triangle exact for polynomials of total degree `degree`.
pub fn quadrature_rule(degree: usize) -> Result<QuadratureRule> {
    let mut rule = SymmetricRule::default();
    match degree {
        1 => rule.centroid(1.0),
        2 => rule.orbit3(1.0 / 6.0, 1.0 / 3.0),
        3 | 4 => {
            rule.orbit3(0.445948490915965, 0.223381589678011);
            rule.orbit3(0.091576213509771, 0.109951743655322);
        }
        5 => {
            rule.centroid(0.225);
            rule.orbit3(0.470142064105115, 0.132394152788506);
            rule.orbit3(0.101286507323456, 0.125939180544827);
        }
        6 => {
            rule.orbit3(0.249286745170910, 0.116786275726379);
            rule.orbit3(0.063089014491502, 0.050844906370207);
            rule.orbit6(0.053145049844817, 0.310352451033784, 0.082851075618374);
        }
        7..=10 => return Ok(collapsed_gauss(degree)),
        _ => return Err(Error::UnsupportedQuadrature(degree)),
    }
    Ok(QuadratureRule {
        points: rule.points,
        // barycentric-form weights sum to one; scale to the reference area
        weights: rule.weights.into_iter().map(|w| 0.5 * w).collect(),
        degree,
    })
}

#[derive(Default)]
struct SymmetricRule {
    points: Vec<Point>,
    weights: Vec<f64>,
}

impl SymmetricRule {
    fn centroid(&mut self, w: f64) {
        self.points.push([1.0 / 3.0, 1.0 / 3.0]);
        self.weights.push(w);
    }

    /// Barycentric orbit `(a, a, 1−2a)`.
    fn orbit3(&mut self, a: f64, w: f64) {
        let b = 1.0 - 2.0 * a;
        for p in [[a, a], [b, a], [a, b]] {
            self.points.push(p);
            self.weights.push(w);
        }
    }

    /// Barycentric orbit of `(a, b, 1−a−b)`.
    fn orbit6(&mut self, a: f64, b: f64, w: f64) {
        let c = 1.0 - a - b;
        for p in [[a, b], [b, a], [a, c], [c, a], [b, c], [c, b]] {
            self.points.push(p);
            self.weights.push(w);
        }
    }
}

/// Gauss–Legendre nodes and weights on `[0, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = Vec::with_capacity(n);
    let mut weights = Vec::with_capacity(n);
    for i in 0..n {
        // Chebyshev initial guess, then Newton on P_n.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let p = if n == 0 { 1.0 } else { p1 };
            dp = n as f64 * (x * p - p0) / (x * x - 1.0);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes.push(0.5 * (1.0 - x));
        weights.push(1.0 / ((1.0 - x * x) * dp * dp));
    }
    (nodes, weights)
}

fn collapsed_gauss(degree: usize) -> QuadratureRule {
    // The Duffy factor (1−u) raises the degree in u by one.
    let n = (degree + 2).div_ceil(2);
    let (x, w) = gauss_legendre(n);
    let mut points = Vec::with_capacity(n * n);
    let mut weights = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            let u = x[i];
            points.push([u, x[j] * (1.0 - u)]);
            weights.push(w[i] * w[j] * (1.0 - u));
        }
    }
    QuadratureRule { points, weights, degree }
}

/// `rule` copied onto each of the `n²` congruent sub-triangles of the reference triangle.
pub fn composite(rule: &QuadratureRule, n: usize) -> QuadratureRule {
    let h = 1.0 / n as f64;
    let scale = h * h;
    let mut points = Vec::with_capacity(n * n * rule.len());
    let mut weights = Vec::with_capacity(n * n * rule.len());
    for i in 0..n {
        for j in 0..n - i {
            let (x0, y0) = (i as f64 * h, j as f64 * h);
            for (p, w) in rule.iter() {
                points.push([x0 + h * p[0], y0 + h * p[1]]);
                weights.push(scale * w);
            }
            // downward sub-triangle with the right angle at (x0+h, y0+h)
            if i + j + 1 < n {
                for (p, w) in rule.iter() {
                    points.push([x0 + h - h * p[0], y0 + h - h * p[1]]);
                    weights.push(scale * w);
                }
            }
        }
    }
    QuadratureRule { points, weights, degree: rule.degree }
}

/// Two-point Gauss rule on `[0, 1]` for edge integrals.
pub fn edge_gauss2() -> [(f64, f64); 2] {
    let d = 0.5 / 3f64.sqrt();
    [(0.5 - d, 0.5), (0.5 + d, 0.5)]
}
