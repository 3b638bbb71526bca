//! Solve → Estimate → Mark → Refine.
//!
//! The local indicators are the three residuals of `J_*` restricted to an
//! element. The mean-trace penalty of `J` is global and does not enter the
//! marking; it is reported separately in [`AdaptRecord::est_j`].

use crate::assembly::{assemble_with, mean_trace, AssemblyOptions, LsqProblem};
use crate::mesh::{refine_nvb, uniform_refine, TriangleMesh};
use crate::quadrature::{quadrature_rule, QuadratureRule};
use crate::solver::{dot, pcg, PcgOptions, SolveReport};
use crate::spaces::{build_space, embed_identity, Coefficients, DiscreteField, FeFunction, FeSpace, SpaceKind};
use crate::tensor;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug)]
pub struct SolveOptions {
    pub assembly: AssemblyOptions,
    pub pcg: PcgOptions,
    /// Quadrature degree for indicators and error norms.
    pub quad_degree: usize,
    /// Minimize exactly along the coefficients of `(0, I)` after PCG.
    pub trace_correction: bool,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            assembly: AssemblyOptions::default(),
            pcg: PcgOptions::default(),
            quad_degree: 6,
            trace_correction: true,
        }
    }
}

#[derive(Clone, Debug)]
pub struct DiscreteSolution {
    pub coefficients: Coefficients,
    pub field: FeFunction,
    pub report: SolveReport,
    /// `Π⁰ tr M_h` of the PCG iterate before the trace correction.
    pub raw_mean_trace: f64,
}

/// Assembles and solves the normal equations on `space`.
///
/// `(0, I)` lies in the kernel of `A` and is orthogonal to `b`, so along
/// `c + s c_I` only the penalty `(gᵀc + s gᵀc_I)²` varies. Its energy `4t²|Ω|`
/// is tiny for small `t` and PCG barely resolves that direction; with
/// [`SolveOptions::trace_correction`] the minimizing `s` is applied exactly.
pub fn solve(space: &FeSpace, problem: &LsqProblem, opts: &SolveOptions) -> Result<DiscreteSolution> {
    let sys = assemble_with(space, problem, &opts.assembly)?;
    let (mut x, report) = pcg(&sys.matrix, &sys.rank1, &sys.rhs, &opts.pcg)?;
    let identity = embed_identity(space);
    let g_identity = dot(&sys.rank1, &identity.values);
    let gx = dot(&sys.rank1, &x);
    // gᵀc = t |Ω|^{1/2} Π⁰ tr M_h and gᵀc_I = 2t |Ω|^{1/2}
    let raw_mean_trace = 2.0 * gx / g_identity;
    if opts.trace_correction {
        let s = gx / g_identity;
        x.iter_mut().zip(&identity.values).for_each(|(xi, ci)| *xi -= s * ci);
    }
    let coefficients = Coefficients {
        kind: space.kind(),
        values: x,
    };
    let field = FeFunction::from_coefficients(space, &coefficients, Some(&sys.lift))?;
    Ok(DiscreteSolution {
        coefficients,
        field,
        report,
        raw_mean_trace,
    })
}

/// Squared element indicators `η(T)²`.
#[derive(Clone, Debug, PartialEq)]
pub struct Indicators {
    pub values: Vec<f64>,
}

impl Indicators {
    pub fn total(&self) -> f64 {
        self.values.iter().sum()
    }
}

/// `η(T)² = ‖−t Div M_h + u_h − f‖²_T + ‖Dev M_h − t∇u_h‖²_T + ‖div u_h‖²_T`.
pub fn estimate(space: &FeSpace, problem: &LsqProblem, u: &FeFunction, degree: usize) -> Result<Indicators> {
    let mesh = space.mesh();
    let rule = quadrature_rule(degree)?;
    let t = problem.t();
    let values = (0..mesh.num_elements())
        .map(|k| {
            let geo = mesh.geo(k);
            rule.iter()
                .map(|(xhat, w)| {
                    let v = u.eval(mesh, k, &geo, xhat);
                    let f = problem.load(geo.map(xhat));
                    let r1 = tensor::sub(&v.momentum_residual(t), &f);
                    w * geo.det
                        * (tensor::norm_sq(&r1)
                            + tensor::frobenius_sq(&v.constitutive_residual(t))
                            + v.div_u().powi(2))
                })
                .sum()
        })
        .collect();
    Ok(Indicators { values })
}

/// Smallest set `ℳ` with `θ Σ η(T)² ≤ Σ_{T∈ℳ} η(T)²`, chosen greedily by
/// (indicator descending, index ascending). Returned indices are ascending.
///
/// All-zero indicators give an empty set.
pub fn dorfler_mark(ind: &Indicators, theta: f64) -> Result<Vec<usize>> {
    if !(theta > 0.0 && theta <= 1.0) {
        return Err(Error::InvalidConfig(format!("marking parameter {theta} outside (0, 1]")));
    }
    let total = ind.total();
    if total <= 0.0 {
        return Ok(Vec::new());
    }
    let mut order: Vec<usize> = (0..ind.values.len()).collect();
    order.sort_by(|&a, &b| ind.values[b].total_cmp(&ind.values[a]).then(a.cmp(&b)));
    let goal = theta * total;
    let mut acc = 0.0;
    let mut marked = Vec::new();
    for k in order {
        if acc >= goal {
            break;
        }
        acc += ind.values[k];
        marked.push(k);
    }
    marked.sort_unstable();
    Ok(marked)
}

/// Squared pieces of the error norms; `t`-weights are already applied.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ErrorNorms {
    /// `‖u − u_h‖²`
    pub u_l2: f64,
    /// `t² ‖∇(u − u_h)‖²`
    pub u_grad: f64,
    /// `‖div u_h‖²`
    pub div_u: f64,
    /// `‖Dev(M − M_h)‖²`
    pub m_dev: f64,
    /// `t² ‖tr(M − M_h)‖²`
    pub m_trace: f64,
    /// `t² ‖Div(M − M_h)‖²`
    pub m_div: f64,
}

impl ErrorNorms {
    pub fn err_u(&self) -> f64 {
        (self.u_l2 + self.u_grad + self.div_u).sqrt()
    }

    pub fn err_m(&self) -> f64 {
        (self.m_dev + self.m_trace + self.m_div).sqrt()
    }

    pub fn norm_div_u(&self) -> f64 {
        self.div_u.sqrt()
    }

    /// `⦀(u − u_h, M − M_h)⦀_t²`
    pub fn energy_sq(&self) -> f64 {
        self.err_u().powi(2) + self.err_m().powi(2)
    }
}

/// Error norms of any discrete field against the exact solution of `problem`.
pub fn compute_errors(
    mesh: &TriangleMesh,
    problem: &LsqProblem,
    discrete: &dyn DiscreteField,
    degree: usize,
) -> Result<ErrorNorms> {
    compute_errors_with(mesh, problem, discrete, &quadrature_rule(degree)?)
}

/// [`compute_errors`] with an explicit reference rule, e.g. a composite one for sharp layers.
pub fn compute_errors_with(
    mesh: &TriangleMesh,
    problem: &LsqProblem,
    discrete: &dyn DiscreteField,
    rule: &QuadratureRule,
) -> Result<ErrorNorms> {
    let exact = problem.exact()?;
    let t2 = problem.t().powi(2);
    let mut e = ErrorNorms::default();
    for k in 0..mesh.num_elements() {
        let geo = mesh.geo(k);
        for (xhat, w) in rule.iter() {
            let wd = w * geo.det;
            let h = discrete.value(mesh, k, &geo, xhat);
            let d = exact.field_value(geo.map(xhat)).sub(&h);
            e.u_l2 += wd * tensor::norm_sq(&d.u);
            e.u_grad += wd * t2 * tensor::frobenius_sq(&d.grad_u);
            e.div_u += wd * h.div_u().powi(2);
            e.m_dev += wd * tensor::frobenius_sq(&d.dev_m());
            e.m_trace += wd * t2 * d.trace_m().powi(2);
            e.m_div += wd * t2 * tensor::norm_sq(&d.div_m);
        }
    }
    Ok(e)
}

/// `‖div u_h‖` (needs no exact solution).
pub fn norm_div(mesh: &TriangleMesh, u: &FeFunction) -> f64 {
    // div u_h is piecewise constant
    (0..mesh.num_elements())
        .map(|k| {
            let geo = mesh.geo(k);
            geo.area * u.eval(mesh, k, &geo, [1.0 / 3.0, 1.0 / 3.0]).div_u().powi(2)
        })
        .sum::<f64>()
        .sqrt()
}

#[derive(Clone, Debug, PartialEq)]
pub struct AdaptRecord {
    pub step: usize,
    pub dofs: usize,
    pub elements: usize,
    /// `(Σ_T η(T)²)^{1/2}`
    pub est: f64,
    /// `J(u_h, M_h; f)^{1/2}`, including the mean-trace penalty.
    pub est_j: f64,
    pub err_u: Option<f64>,
    pub err_m: Option<f64>,
    pub norm_div_u: f64,
    /// `Π⁰ tr M_h`
    pub mean_trace: f64,
    /// `Π⁰ tr M_h` straight out of PCG.
    pub raw_mean_trace: f64,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Refinement {
    /// Dörfler marking with bulk parameter θ followed by newest-vertex bisection.
    Dorfler(f64),
    /// Every element split into four.
    Uniform,
}

#[derive(Clone, Debug)]
pub struct AdaptRun {
    pub records: Vec<AdaptRecord>,
    pub mesh: TriangleMesh,
    pub solution: FeFunction,
    pub kind: SpaceKind,
}

/// Solves, estimates and records one mesh.
pub fn step(
    mesh: &TriangleMesh,
    problem: &LsqProblem,
    kind: SpaceKind,
    opts: &SolveOptions,
    index: usize,
) -> Result<(AdaptRecord, Indicators, DiscreteSolution)> {
    let space = build_space(mesh, kind);
    let sol = solve(&space, problem, opts)?;
    let ind = estimate(&space, problem, &sol.field, opts.quad_degree)?;
    let est2 = ind.total();
    let mean = mean_trace(mesh, &sol.field);
    let penalty = problem.t().powi(2) * mean * mean * space.domain_area();
    let errors = match problem.exact() {
        Ok(_) => Some(compute_errors(mesh, problem, &sol.field, opts.quad_degree)?),
        Err(_) => None,
    };
    let record = AdaptRecord {
        step: index,
        dofs: space.dim(),
        elements: mesh.num_elements(),
        est: est2.sqrt(),
        est_j: (est2 + penalty).sqrt(),
        err_u: errors.map(|e| e.err_u()),
        err_m: errors.map(|e| e.err_m()),
        norm_div_u: norm_div(mesh, &sol.field),
        mean_trace: mean,
        raw_mean_trace: sol.raw_mean_trace,
        iterations: sol.report.iterations,
        converged: sol.report.converged,
    };
    Ok((record, ind, sol))
}

/// Runs the adaptive (or uniform) loop until a mesh with at least `max_dofs`
/// unknowns has been solved.
pub fn adaptive_loop(
    problem: &LsqProblem,
    initial: TriangleMesh,
    kind: SpaceKind,
    refinement: Refinement,
    max_dofs: usize,
    opts: &SolveOptions,
) -> Result<AdaptRun> {
    adaptive_loop_with(problem, initial, kind, refinement, max_dofs, opts, |_, _| {})
}

/// As [`adaptive_loop`], calling `on_step` after every solve.
pub fn adaptive_loop_with(
    problem: &LsqProblem,
    initial: TriangleMesh,
    kind: SpaceKind,
    refinement: Refinement,
    max_dofs: usize,
    opts: &SolveOptions,
    mut on_step: impl FnMut(&AdaptRecord, &TriangleMesh),
) -> Result<AdaptRun> {
    if let Refinement::Dorfler(theta) = refinement {
        if !(theta > 0.0 && theta <= 1.0) {
            return Err(Error::InvalidConfig(format!("marking parameter {theta} outside (0, 1]")));
        }
    }
    let mut mesh = initial;
    let mut records = Vec::new();
    loop {
        let (record, ind, sol) = step(&mesh, problem, kind, opts, records.len())?;
        on_step(&record, &mesh);
        let done = record.dofs >= max_dofs;
        records.push(record);
        if done {
            return Ok(AdaptRun {
                records,
                mesh,
                solution: sol.field,
                kind,
            });
        }
        mesh = match refinement {
            Refinement::Uniform => uniform_refine(&mesh),
            Refinement::Dorfler(theta) => {
                let mut marked = dorfler_mark(&ind, theta)?;
                if marked.is_empty() {
                    // exact discrete solution: keep refining everywhere
                    marked = (0..mesh.num_elements()).collect();
                }
                refine_nvb(&mesh, &marked)?
            }
        };
    }
}

/// Least-squares slope of `log y` against `log x`.
pub fn loglog_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let (sx, sy) = points.iter().fold((0.0, 0.0), |(a, b), &(x, y)| (a + x.ln(), b + y.ln()));
    let (mx, my) = (sx / n, sy / n);
    let (mut num, mut den) = (0.0, 0.0);
    for &(x, y) in points {
        let dx = x.ln() - mx;
        num += dx * (y.ln() - my);
        den += dx * dx;
    }
    num / den
}

/// Slope of `est` against `dofs` over the last `n` records.
pub fn tail_rate(records: &[AdaptRecord], n: usize, value: impl Fn(&AdaptRecord) -> f64) -> f64 {
    let start = records.len().saturating_sub(n);
    let pts: Vec<(f64, f64)> = records[start..].iter().map(|r| (r.dofs as f64, value(r))).collect();
    loglog_slope(&pts)
}
