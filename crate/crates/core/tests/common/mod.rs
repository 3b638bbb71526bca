//! Shared oracles for the integration tests.
#![allow(dead_code)]

use brinkman_fosls::assembly::{dirichlet_lift, LsqProblem};
use brinkman_fosls::quadrature::quadrature_rule;
use brinkman_fosls::spaces::{Coefficients, FeFunction, FeSpace, FieldValue};
use brinkman_fosls::tensor;

pub struct DenseSystem {
    pub matrix: Vec<Vec<f64>>,
    pub rank1: Vec<f64>,
    pub rhs: Vec<f64>,
}

/// `(−t Div M + u, Dev M − t∇u, div u)` flattened.
pub fn image(v: &FieldValue, t: f64) -> [f64; 7] {
    let m = v.momentum_residual(t);
    let c = v.constitutive_residual(t);
    [m[0], m[1], c[0][0], c[0][1], c[1][0], c[1][1], v.div_u()]
}

pub fn unit_fields(space: &FeSpace) -> Vec<FeFunction> {
    (0..space.dim())
        .map(|i| {
            let mut c = Coefficients::zeros(space);
            c.values[i] = 1.0;
            FeFunction::from_coefficients(space, &c, None).unwrap()
        })
        .collect()
}

/// Normal equations built from globally evaluated basis functions, one
/// quadrature point at a time.
pub fn brute_force(space: &FeSpace, problem: &LsqProblem, mat_degree: usize, load_degree: usize) -> DenseSystem {
    let mesh = space.mesh();
    let n = space.dim();
    let t = problem.t();
    let basis = unit_fields(space);
    let mut lift_field = FeFunction::zero(mesh);
    lift_field.velocity = dirichlet_lift(space, problem);
    let scale = t / space.domain_area().sqrt();

    let mut a = vec![vec![0.0; n]; n];
    let mut g = vec![0.0; n];
    let mut b = vec![0.0; n];
    let mr = quadrature_rule(mat_degree).unwrap();
    let lr = quadrature_rule(load_degree).unwrap();
    for k in 0..mesh.num_elements() {
        let geo = mesh.geometry(k).unwrap();
        for (xhat, w) in mr.iter() {
            let wd = w * geo.det;
            let vals: Vec<FieldValue> = basis.iter().map(|f| f.eval(mesh, k, &geo, xhat)).collect();
            let imgs: Vec<[f64; 7]> = vals.iter().map(|v| image(v, t)).collect();
            let lift = image(&lift_field.eval(mesh, k, &geo, xhat), t);
            for i in 0..n {
                g[i] += scale * wd * vals[i].trace_m();
                b[i] -= wd * dot7(&imgs[i], &lift);
                for j in 0..n {
                    a[i][j] += wd * dot7(&imgs[i], &imgs[j]);
                }
            }
        }
        for (xhat, w) in lr.iter() {
            let wd = w * geo.det;
            let f = problem.load(geo.map(xhat));
            for i in 0..n {
                let v = basis[i].eval(mesh, k, &geo, xhat);
                b[i] += wd * tensor::dot(&f, &v.momentum_residual(t));
            }
        }
    }
    DenseSystem { matrix: a, rank1: g, rhs: b }
}

fn dot7(a: &[f64; 7], b: &[f64; 7]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}
