//! Normal equations of the least-squares functional
//!
//! ```text
//! J(u, M; f) = ‖−t Div M + u − f‖² + ‖Dev M − t∇u‖² + ‖div u‖² + t² ‖Π⁰ tr M‖²
//! ```
//!
//! over a discrete space. The bilinear form of the first three terms is
//! assembled into a sparse matrix `A`; the non-local mean-trace penalty is
//! kept as a rank-one factor `g`, so the system operator is `A + g gᵀ`.

use std::sync::Arc;

use crate::mesh::TriangleMesh;
use crate::quadrature::quadrature_rule;
use crate::solver::CsrMatrix;
use crate::spaces::{DofLayout, FeFunction, FeSpace, FieldValue, LocalDof};
use crate::tensor::{self, Point, Tensor, Vector};
use crate::{Error, Result};

pub type VectorField = Arc<dyn Fn(Point) -> Vector + Send + Sync>;

/// Exact velocity / pseudostress pair, used for error norms.
pub trait ExactSolution: Send + Sync {
    fn velocity(&self, x: Point) -> Vector;
    fn velocity_gradient(&self, x: Point) -> Tensor;
    fn pressure(&self, x: Point) -> f64;
    fn pseudostress(&self, x: Point) -> Tensor;
    /// Row-wise divergence of the pseudostress.
    fn pseudostress_div(&self, x: Point) -> Vector;

    fn field_value(&self, x: Point) -> FieldValue {
        FieldValue {
            u: self.velocity(x),
            grad_u: self.velocity_gradient(x),
            m: self.pseudostress(x),
            div_m: self.pseudostress_div(x),
        }
    }
}

#[derive(Clone)]
pub struct LsqProblem {
    t: f64,
    load: VectorField,
    dirichlet: Option<VectorField>,
    exact: Option<Arc<dyn ExactSolution>>,
}

impl std::fmt::Debug for LsqProblem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("LsqProblem")
            .field("t", &self.t)
            .field("dirichlet", &self.dirichlet.is_some())
            .field("exact", &self.exact.is_some())
            .finish()
    }
}

impl LsqProblem {
    pub fn new(t: f64, load: impl Fn(Point) -> Vector + Send + Sync + 'static) -> Result<Self> {
        if !(t > 0.0 && t <= 1.0) {
            return Err(Error::InvalidParameter(t));
        }
        Ok(Self {
            t,
            load: Arc::new(load),
            dirichlet: None,
            exact: None,
        })
    }

    pub fn with_dirichlet(mut self, g: impl Fn(Point) -> Vector + Send + Sync + 'static) -> Self {
        self.dirichlet = Some(Arc::new(g));
        self
    }

    pub fn with_exact(mut self, exact: impl ExactSolution + 'static) -> Self {
        self.exact = Some(Arc::new(exact));
        self
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn load(&self, x: Point) -> Vector {
        (self.load)(x)
    }

    pub fn dirichlet(&self, x: Point) -> Vector {
        self.dirichlet.as_ref().map(|g| g(x)).unwrap_or([0.0; 2])
    }

    pub fn has_dirichlet_data(&self) -> bool {
        self.dirichlet.is_some()
    }

    pub fn exact(&self) -> Result<&dyn ExactSolution> {
        self.exact.as_deref().ok_or(Error::ExactSolutionUnavailable)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct AssemblyOptions {
    /// Rule for products of discrete fields (degree ≤ 2, so 4 is exact).
    pub matrix_degree: usize,
    /// Rule for every term containing the load.
    pub load_degree: usize,
}

impl Default for AssemblyOptions {
    fn default() -> Self {
        Self {
            matrix_degree: 4,
            load_degree: 6,
        }
    }
}

#[derive(Clone, Debug)]
pub struct SparseSystem {
    /// The form `b_*`.
    pub matrix: CsrMatrix,
    /// `g_i = t |Ω|^{-1/2} ∫ tr Φ_i`, so `(gᵀc)² = t² ‖Π⁰ tr M_c‖²`.
    pub rank1: Vec<f64>,
    /// `L(Φ_i) = ⟨f, −t Div N_i + v_i⟩` minus the lifting contribution.
    pub rhs: Vec<f64>,
    pub layout: DofLayout,
    /// Nodal Dirichlet lifting (zero at interior vertices).
    pub lift: Vec<Vector>,
}

/// Nodal interpolant of the Dirichlet data that vanishes at interior vertices.
pub fn dirichlet_lift(space: &FeSpace, problem: &LsqProblem) -> Vec<Vector> {
    let mesh = space.mesh();
    (0..mesh.num_vertices())
        .map(|v| {
            if space.velocity().is_dirichlet(v) {
                problem.dirichlet(mesh.vertices()[v])
            } else {
                [0.0; 2]
            }
        })
        .collect()
}

/// Residual images of one local function: `−t Div N + v`, `Dev N − t∇v`,
/// `div v`, packed as seven numbers.
#[inline]
fn residual_image(v: &FieldValue, t: f64) -> [f64; 7] {
    let r1 = v.momentum_residual(t);
    let r2 = v.constitutive_residual(t);
    [r1[0], r1[1], r2[0][0], r2[0][1], r2[1][0], r2[1][1], v.div_u()]
}

pub fn assemble(space: &FeSpace, problem: &LsqProblem) -> Result<SparseSystem> {
    assemble_with(space, problem, &AssemblyOptions::default())
}

pub fn assemble_with(space: &FeSpace, problem: &LsqProblem, opts: &AssemblyOptions) -> Result<SparseSystem> {
    let t = problem.t();
    if !(t > 0.0 && t <= 1.0) {
        return Err(Error::InvalidParameter(t));
    }
    let mesh = space.mesh();
    let n = space.dim();
    let mat_rule = quadrature_rule(opts.matrix_degree)?;
    let load_rule = quadrature_rule(opts.load_degree)?;
    let lift = dirichlet_lift(space, problem);
    let trace_scale = t / space.domain_area().sqrt();
    let augmented = space.layout().augmented.clone();

    let mut triplets = Vec::with_capacity(mesh.num_elements() * 15 * 15);
    let mut rhs = vec![0.0; n];
    let mut rank1 = vec![0.0; n];
    let mut local = vec![[0.0; 15]; 15];

    for k in 0..mesh.num_elements() {
        let geo = mesh.geo(k);
        let mut dofs: Vec<LocalDof> = Vec::new();
        let nloc = {
            let funcs = space.local_functions(k, &geo, [0.0, 0.0]);
            dofs.extend(funcs.iter().map(|f| f.dof));
            funcs.len()
        };
        for row in local.iter_mut().take(nloc) {
            row[..nloc].iter_mut().for_each(|v| *v = 0.0);
        }
        let mut local_trace = [0.0; 15];
        let mut local_load = [0.0; 15];

        for (xhat, w) in mat_rule.iter() {
            let wd = w * geo.det;
            let funcs = space.local_functions(k, &geo, xhat);
            let images: Vec<[f64; 7]> = funcs.iter().map(|f| residual_image(&f.value, t)).collect();
            for i in 0..nloc {
                local_trace[i] += wd * funcs[i].value.trace_m();
                for j in i..nloc {
                    let s: f64 = (0..7).map(|c| images[i][c] * images[j][c]).sum();
                    local[i][j] += wd * s;
                }
            }
        }
        for i in 0..nloc {
            for j in 0..i {
                local[i][j] = local[j][i];
            }
        }

        for (xhat, w) in load_rule.iter() {
            let wd = w * geo.det;
            let f = problem.load(geo.map(xhat));
            for (i, func) in space.local_functions(k, &geo, xhat).iter().enumerate() {
                let r1 = func.value.momentum_residual(t);
                local_load[i] += wd * tensor::dot(&f, &r1);
            }
        }

        for i in 0..nloc {
            let LocalDof::Free(gi) = dofs[i] else { continue };
            rhs[gi] += local_load[i];
            // augmented functions (λ_v − m_v)I have zero mean trace; their
            // constant part outside the element patch is not in the local basis
            if !augmented.contains(&gi) {
                rank1[gi] += trace_scale * local_trace[i];
            }
            for j in 0..nloc {
                match dofs[j] {
                    LocalDof::Free(gj) => triplets.push((gi, gj, local[i][j])),
                    LocalDof::Dirichlet { vertex, component } => {
                        rhs[gi] -= local[i][j] * lift[vertex][component];
                    }
                    LocalDof::Dropped => {}
                }
            }
        }
    }

    Ok(SparseSystem {
        matrix: CsrMatrix::from_triplets(n, triplets),
        rank1,
        rhs,
        layout: space.layout().clone(),
        lift,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FunctionalVariant {
    /// `J_*` without the mean-trace penalty.
    JStar,
    J,
}

/// The individual squared terms of the functional.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct FunctionalTerms {
    /// `‖−t Div M + u − f‖²`
    pub momentum: f64,
    /// `‖Dev M − t∇u‖²`
    pub constitutive: f64,
    /// `‖div u‖²`
    pub divergence: f64,
    /// `t² ‖Π⁰ tr M‖²`
    pub mean_trace: f64,
}

impl FunctionalTerms {
    pub fn j_star(&self) -> f64 {
        self.momentum + self.constitutive + self.divergence
    }

    pub fn j(&self) -> f64 {
        self.j_star() + self.mean_trace
    }
}

pub fn functional_terms(space: &FeSpace, problem: &LsqProblem, u: &FeFunction, degree: usize) -> Result<FunctionalTerms> {
    let mesh = space.mesh();
    let rule = quadrature_rule(degree)?;
    let t = problem.t();
    let mut terms = FunctionalTerms::default();
    let mut trace_integral = 0.0;
    for k in 0..mesh.num_elements() {
        let geo = mesh.geo(k);
        for (xhat, w) in rule.iter() {
            let wd = w * geo.det;
            let v = u.eval(mesh, k, &geo, xhat);
            let f = problem.load(geo.map(xhat));
            let r1 = tensor::sub(&v.momentum_residual(t), &f);
            terms.momentum += wd * tensor::norm_sq(&r1);
            terms.constitutive += wd * tensor::frobenius_sq(&v.constitutive_residual(t));
            terms.divergence += wd * v.div_u().powi(2);
            trace_integral += wd * v.trace_m();
        }
    }
    terms.mean_trace = t * t * trace_integral * trace_integral / space.domain_area();
    Ok(terms)
}

pub fn eval_functional(
    space: &FeSpace,
    problem: &LsqProblem,
    u: &FeFunction,
    variant: FunctionalVariant,
    degree: usize,
) -> Result<f64> {
    let terms = functional_terms(space, problem, u, degree)?;
    Ok(match variant {
        FunctionalVariant::JStar => terms.j_star(),
        FunctionalVariant::J => terms.j(),
    })
}

/// `Π⁰ tr M_h = |Ω|⁻¹ ∫ tr M_h`.
pub fn mean_trace(mesh: &TriangleMesh, u: &FeFunction) -> f64 {
    // tr M_h is linear per element, so the centroid rule is exact.
    let mut s = 0.0;
    let mut area = 0.0;
    for k in 0..mesh.num_elements() {
        let geo = mesh.geo(k);
        s += geo.area * u.eval(mesh, k, &geo, [1.0 / 3.0, 1.0 / 3.0]).trace_m();
        area += geo.area;
    }
    s / area
}
