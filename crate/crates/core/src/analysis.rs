//! Interpolation, projection and post-processing.

use crate::adapt::{compute_errors, ErrorNorms};
use crate::assembly::LsqProblem;
use crate::mesh::TriangleMesh;
use crate::quadrature::{edge_gauss2, quadrature_rule};
use crate::spaces::{FeFunction, SpaceKind};
use crate::tensor::{Point, Tensor};
use crate::Result;

/// Elementwise means `Π⁰_{L²} q`.
pub fn project_l2_piecewise_constant(mesh: &TriangleMesh, q: impl Fn(Point) -> f64, degree: usize) -> Result<Vec<f64>> {
    let rule = quadrature_rule(degree)?;
    Ok((0..mesh.num_elements())
        .map(|k| {
            let geo = mesh.geo(k);
            let s: f64 = rule.iter().map(|(xhat, w)| w * q(geo.map(xhat))).sum();
            // weights sum to 1/2
            2.0 * s
        })
        .collect())
}

/// `‖q − Π⁰_{L²} q‖`.
pub fn projection_error(mesh: &TriangleMesh, q: impl Fn(Point) -> f64, degree: usize) -> Result<f64> {
    let means = project_l2_piecewise_constant(mesh, &q, degree)?;
    let rule = quadrature_rule(degree)?;
    let mut s = 0.0;
    for (k, mean) in means.iter().enumerate() {
        let geo = mesh.geo(k);
        for (xhat, w) in rule.iter() {
            s += w * geo.det * (q(geo.map(xhat)) - mean).powi(2);
        }
    }
    Ok(s.sqrt())
}

/// Row-wise Raviart–Thomas interpolant: per edge and row, the mean normal flux
/// `|E|⁻¹ ∫_E N_r · n_E ds` (two-point Gauss).
pub fn interpolate_rt(mesh: &TriangleMesh, n: impl Fn(Point) -> Tensor) -> Vec<[f64; 2]> {
    let rule = edge_gauss2();
    mesh.edges()
        .iter()
        .enumerate()
        .map(|(e, &[a, b])| {
            let (pa, pb) = (mesh.vertices()[a], mesh.vertices()[b]);
            let normal = mesh.edge_normal(e);
            let mut flux = [0.0; 2];
            for &(si, wi) in &rule {
                let x = [pa[0] + si * (pb[0] - pa[0]), pa[1] + si * (pb[1] - pa[1])];
                let v = n(x);
                for (row, f) in flux.iter_mut().enumerate() {
                    *f += wi * (v[row][0] * normal[0] + v[row][1] * normal[1]);
                }
            }
            flux
        })
        .collect()
}

/// Discrete pair with zero velocity and pseudostress `Π_{ℛ𝒯} N`.
pub fn rt_interpolant_field(mesh: &TriangleMesh, n: impl Fn(Point) -> Tensor) -> FeFunction {
    let mut f = FeFunction::zero(mesh);
    f.rt = interpolate_rt(mesh, n);
    f
}

/// Discrete pair with zero velocity and pseudostress `(I_h q) I`, `I_h` the
/// nodal P1 interpolant.
pub fn nodal_identity_field(mesh: &TriangleMesh, q: impl Fn(Point) -> f64) -> FeFunction {
    let mut f = FeFunction::zero(mesh);
    f.augmented = mesh.vertices().iter().map(|&x| q(x)).collect();
    f
}

/// `p_h = −(t/2) tr M_h`, stored by its vertex values on each element.
#[derive(Clone, Debug, PartialEq)]
pub struct PiecewiseLinear {
    pub values: Vec<[f64; 3]>,
}

impl PiecewiseLinear {
    pub fn eval(&self, k: usize, xhat: Point) -> f64 {
        let l = crate::mesh::ElementGeometry::barycentric(xhat);
        (0..3).map(|i| l[i] * self.values[k][i]).sum()
    }

    /// Elementwise means.
    pub fn element_means(&self) -> Vec<f64> {
        self.values.iter().map(|v| (v[0] + v[1] + v[2]) / 3.0).collect()
    }

    /// `|Ω|⁻¹ ∫_Ω p_h`.
    pub fn mean(&self, mesh: &TriangleMesh) -> f64 {
        let s: f64 = self
            .element_means()
            .iter()
            .enumerate()
            .map(|(k, m)| m * mesh.geo(k).area)
            .sum();
        s / mesh.area()
    }

    /// `‖p − p_h‖`.
    pub fn l2_error(&self, mesh: &TriangleMesh, p: impl Fn(Point) -> f64, degree: usize) -> Result<f64> {
        let rule = quadrature_rule(degree)?;
        let mut s = 0.0;
        for k in 0..mesh.num_elements() {
            let geo = mesh.geo(k);
            for (xhat, w) in rule.iter() {
                s += w * geo.det * (p(geo.map(xhat)) - self.eval(k, xhat)).powi(2);
            }
        }
        Ok(s.sqrt())
    }
}

pub fn recover_pressure(mesh: &TriangleMesh, m: &FeFunction, t: f64) -> PiecewiseLinear {
    const CORNERS: [Point; 3] = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];
    let values = (0..mesh.num_elements())
        .map(|k| {
            let geo = mesh.geo(k);
            CORNERS.map(|c| -0.5 * t * m.eval(mesh, k, &geo, c).trace_m())
        })
        .collect();
    PiecewiseLinear { values }
}

/// Error norms of the explicit approximations used to explain locking, for
/// the smooth-pressure problem (`u = 0`, `M = −(p/t) I`):
///
/// * standard space: `(0, Π_{ℛ𝒯} M)`;
/// * augmented space: `(0, −(I_h p / t) I)`.
pub fn best_approximation_probe(problem: &LsqProblem, mesh: &TriangleMesh, kind: SpaceKind, degree: usize) -> Result<ErrorNorms> {
    let exact = problem.exact()?;
    let candidate = match kind {
        SpaceKind::Standard => rt_interpolant_field(mesh, |x| exact.pseudostress(x)),
        SpaceKind::Augmented => {
            let t = problem.t();
            nodal_identity_field(mesh, |x| -exact.pressure(x) / t)
        }
    };
    compute_errors(mesh, problem, &candidate, degree)
}
