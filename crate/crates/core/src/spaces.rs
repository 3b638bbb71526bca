//! Discrete spaces `X_h = S₀¹(𝒯)² × RT⁰(𝒯)` and the augmented
//! `X_h⁺ = S₀¹(𝒯)² × (RT⁰(𝒯) + S_*¹(𝒯) I)`.
//!
//! Coefficient layout is `[velocity | pseudostress RT0 | augmented]`:
//!
//! * velocity: two entries per interior vertex, `base + component`;
//! * RT0: two entries per edge, one per tensor row, `offset + 2e + row`;
//! * augmented: one entry per vertex except vertex 0, `offset + v − 1`.
//!
//! Boundary velocity values are not unknowns; they come from the Dirichlet
//! lifting. The augmented basis is `(λ_v − m_v) I` with `m_v` the mean of the
//! hat function `λ_v` over the domain, so every basis function has zero mean
//! trace. Dropping vertex 0 removes the constant mode already contained in RT0.

use std::ops::Range;

use crate::mesh::{ElementGeometry, TriangleMesh};
use crate::tensor::{self, Point, Tensor, Vector};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SpaceKind {
    Standard,
    Augmented,
}

impl SpaceKind {
    pub fn name(self) -> &'static str {
        match self {
            SpaceKind::Standard => "standard",
            SpaceKind::Augmented => "augmented",
        }
    }
}

impl std::str::FromStr for SpaceKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "standard" => Ok(SpaceKind::Standard),
            "augmented" => Ok(SpaceKind::Augmented),
            _ => Err(Error::InvalidConfig(format!("unknown space kind `{s}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DofLayout {
    pub velocity: Range<usize>,
    pub pseudostress: Range<usize>,
    pub augmented: Range<usize>,
}

impl DofLayout {
    pub fn total(&self) -> usize {
        self.augmented.end
    }
}

#[derive(Clone, Debug)]
pub struct VelocitySpace {
    /// First of the two component dofs of each vertex; `None` on the boundary.
    dof: Vec<Option<usize>>,
    boundary: Vec<bool>,
}

impl VelocitySpace {
    pub fn vertex_dof(&self, v: usize) -> Option<usize> {
        self.dof[v]
    }

    pub fn is_dirichlet(&self, v: usize) -> bool {
        self.boundary[v]
    }
}

#[derive(Clone, Debug)]
pub struct PseudostressSpace {
    rt_offset: usize,
    augmented: Option<AugmentedBlock>,
}

#[derive(Clone, Debug)]
struct AugmentedBlock {
    dof: Vec<Option<usize>>,
    hat_mean: Vec<f64>,
}

impl PseudostressSpace {
    pub fn rt_dof(&self, edge: usize, row: usize) -> usize {
        self.rt_offset + 2 * edge + row
    }

    pub fn augmented_dof(&self, v: usize) -> Option<usize> {
        self.augmented.as_ref().and_then(|a| a.dof[v])
    }

    /// `|Ω|⁻¹ ∫ λ_v` for the augmented block, `None` for standard spaces.
    pub fn hat_mean(&self, v: usize) -> Option<f64> {
        self.augmented.as_ref().map(|a| a.hat_mean[v])
    }

    pub fn is_augmented(&self) -> bool {
        self.augmented.is_some()
    }
}

#[derive(Clone, Debug)]
pub struct FeSpace<'m> {
    mesh: &'m TriangleMesh,
    kind: SpaceKind,
    velocity: VelocitySpace,
    pseudostress: PseudostressSpace,
    layout: DofLayout,
    domain_area: f64,
}

/// Lowest-order spaces (`k = 0`) on `mesh`.
pub fn build_space(mesh: &TriangleMesh, kind: SpaceKind) -> FeSpace<'_> {
    build_space_with_degree(mesh, kind, 0).expect("k = 0 is supported")
}

pub fn build_space_with_degree(mesh: &TriangleMesh, kind: SpaceKind, k: usize) -> Result<FeSpace<'_>> {
    if k != 0 {
        return Err(Error::UnsupportedDegree(k));
    }
    let nv = mesh.num_vertices();
    let boundary: Vec<bool> = (0..nv).map(|v| mesh.is_boundary_vertex(v)).collect();
    let mut dof = vec![None; nv];
    let mut next = 0;
    for v in 0..nv {
        if !boundary[v] {
            dof[v] = Some(next);
            next += 2;
        }
    }
    let velocity = 0..next;
    let pseudostress = next..next + 2 * mesh.num_edges();
    let domain_area = mesh.area();

    let (augmented_block, augmented) = match kind {
        SpaceKind::Standard => (None, pseudostress.end..pseudostress.end),
        SpaceKind::Augmented => {
            let mut hat_mean = vec![0.0; nv];
            for k in 0..mesh.num_elements() {
                let a = mesh.geo(k).area;
                for &v in &mesh.triangles()[k].v {
                    hat_mean[v] += a / 3.0;
                }
            }
            hat_mean.iter_mut().for_each(|m| *m /= domain_area);
            let start = pseudostress.end;
            let dof = (0..nv).map(|v| if v == 0 { None } else { Some(start + v - 1) }).collect();
            (Some(AugmentedBlock { dof, hat_mean }), start..start + nv.saturating_sub(1))
        }
    };

    Ok(FeSpace {
        mesh,
        kind,
        velocity: VelocitySpace { dof, boundary },
        pseudostress: PseudostressSpace {
            rt_offset: pseudostress.start,
            augmented: augmented_block,
        },
        layout: DofLayout {
            velocity,
            pseudostress,
            augmented,
        },
        domain_area,
    })
}

impl<'m> FeSpace<'m> {
    pub fn mesh(&self) -> &'m TriangleMesh {
        self.mesh
    }

    pub fn kind(&self) -> SpaceKind {
        self.kind
    }

    pub fn layout(&self) -> &DofLayout {
        &self.layout
    }

    pub fn dim(&self) -> usize {
        self.layout.total()
    }

    pub fn velocity(&self) -> &VelocitySpace {
        &self.velocity
    }

    pub fn pseudostress(&self) -> &PseudostressSpace {
        &self.pseudostress
    }

    pub fn domain_area(&self) -> f64 {
        self.domain_area
    }

    /// All local basis functions of element `k` at reference point `xhat`:
    /// six velocity, six RT0 and (augmented only) three `ηI` functions.
    pub fn local_functions(&self, k: usize, geo: &ElementGeometry, xhat: Point) -> Vec<LocalFunction> {
        let mut out = Vec::with_capacity(15);
        out.extend(eval_velocity_basis(self, k, geo, xhat));
        out.extend(eval_pseudostress_basis(self, k, geo, xhat));
        out
    }
}

/// Values of a (discrete or exact) pair `(u, M)` and its derivatives at a point.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct FieldValue {
    pub u: Vector,
    pub grad_u: Tensor,
    pub m: Tensor,
    /// Row-wise divergence of `m`.
    pub div_m: Vector,
}

impl FieldValue {
    pub fn div_u(&self) -> f64 {
        tensor::trace(&self.grad_u)
    }

    pub fn dev_m(&self) -> Tensor {
        tensor::deviator(&self.m)
    }

    pub fn trace_m(&self) -> f64 {
        tensor::trace(&self.m)
    }

    /// `−t Div M + u` (without the load).
    pub fn momentum_residual(&self, t: f64) -> Vector {
        [self.u[0] - t * self.div_m[0], self.u[1] - t * self.div_m[1]]
    }

    /// `Dev M − t ∇u`.
    pub fn constitutive_residual(&self, t: f64) -> Tensor {
        tensor::tensor_sub(&self.dev_m(), &tensor::tensor_scale(&self.grad_u, t))
    }

    pub fn sub(&self, other: &FieldValue) -> FieldValue {
        FieldValue {
            u: tensor::sub(&self.u, &other.u),
            grad_u: tensor::tensor_sub(&self.grad_u, &other.grad_u),
            m: tensor::tensor_sub(&self.m, &other.m),
            div_m: tensor::sub(&self.div_m, &other.div_m),
        }
    }

    pub fn add_scaled(&mut self, s: f64, other: &FieldValue) {
        tensor::axpy(&mut self.u, s, &other.u);
        tensor::tensor_axpy(&mut self.grad_u, s, &other.grad_u);
        tensor::tensor_axpy(&mut self.m, s, &other.m);
        tensor::axpy(&mut self.div_m, s, &other.div_m);
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LocalDof {
    Free(usize),
    /// Eliminated boundary velocity value.
    Dirichlet { vertex: usize, component: usize },
    /// Augmented function of the dropped vertex.
    Dropped,
}

#[derive(Clone, Copy, Debug)]
pub struct LocalFunction {
    pub dof: LocalDof,
    pub value: FieldValue,
}

/// P1 velocity functions `λ_i e_c`, ordered `2i + c`.
pub fn eval_velocity_basis(space: &FeSpace, k: usize, geo: &ElementGeometry, xhat: Point) -> [LocalFunction; 6] {
    let lambda = ElementGeometry::barycentric(xhat);
    let tri = space.mesh.triangles()[k];
    std::array::from_fn(|j| {
        let (i, c) = (j / 2, j % 2);
        let v = tri.v[i];
        let dof = match space.velocity.dof[v] {
            Some(base) => LocalDof::Free(base + c),
            None => LocalDof::Dirichlet { vertex: v, component: c },
        };
        let mut value = FieldValue::default();
        value.u[c] = lambda[i];
        value.grad_u[c] = geo.hat_gradients[i];
        LocalFunction { dof, value }
    })
}

/// Row-wise RT0 functions ordered `2i + row` for local edge `i`, followed by the
/// three augmented functions `(λ_i − m_i) I` when present.
///
/// The RT0 function of local edge `i` is `σ |E_i| / (2|T|) (x − a_i)` with
/// `a_i` the opposite vertex and `σ` the orientation sign; its normal component
/// on `E_i` is one.
pub fn eval_pseudostress_basis(space: &FeSpace, k: usize, geo: &ElementGeometry, xhat: Point) -> Vec<LocalFunction> {
    let x = geo.map(xhat);
    let mesh = space.mesh;
    let edges = mesh.element_edges(k);
    let mut out = Vec::with_capacity(9);
    for i in 0..3 {
        let sigma = mesh.edge_sign(k, i);
        let scale = sigma * geo.edge_lengths[i] / (2.0 * geo.area);
        let a = geo.vertices[i];
        let psi = [scale * (x[0] - a[0]), scale * (x[1] - a[1])];
        let div = 2.0 * scale;
        for row in 0..2 {
            let mut value = FieldValue::default();
            value.m[row] = psi;
            value.div_m[row] = div;
            out.push(LocalFunction {
                dof: LocalDof::Free(space.pseudostress.rt_dof(edges[i], row)),
                value,
            });
        }
    }
    if let Some(aug) = &space.pseudostress.augmented {
        let lambda = ElementGeometry::barycentric(xhat);
        let tri = mesh.triangles()[k];
        for i in 0..3 {
            let v = tri.v[i];
            let eta = lambda[i] - aug.hat_mean[v];
            let mut value = FieldValue::default();
            value.m = [[eta, 0.0], [0.0, eta]];
            value.div_m = geo.hat_gradients[i];
            let dof = aug.dof[v].map(LocalDof::Free).unwrap_or(LocalDof::Dropped);
            out.push(LocalFunction { dof, value });
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq)]
pub struct Coefficients {
    pub kind: SpaceKind,
    pub values: Vec<f64>,
}

impl Coefficients {
    pub fn zeros(space: &FeSpace) -> Self {
        Self {
            kind: space.kind,
            values: vec![0.0; space.dim()],
        }
    }

    pub fn check(&self, space: &FeSpace) -> Result<()> {
        if self.values.len() != space.dim() {
            return Err(Error::DimensionMismatch {
                expected: space.dim(),
                got: self.values.len(),
            });
        }
        if self.kind != space.kind {
            return Err(Error::InvalidConfig("coefficient kind does not match space".into()));
        }
        Ok(())
    }
}

/// Coefficients of `(0, I)`: edge flux of each constant row `e_r` is `n_E[r]`.
pub fn embed_identity(space: &FeSpace) -> Coefficients {
    let mut c = Coefficients::zeros(space);
    for e in 0..space.mesh.num_edges() {
        let n = space.mesh.edge_normal(e);
        for row in 0..2 {
            c.values[space.pseudostress.rt_dof(e, row)] = n[row];
        }
    }
    c
}

/// A discrete pair `(u_h, M_h)` stored per mesh entity, boundary values included.
#[derive(Clone, Debug, PartialEq)]
pub struct FeFunction {
    pub velocity: Vec<Vector>,
    /// RT0 coefficients of both tensor rows, per edge.
    pub rt: Vec<[f64; 2]>,
    /// Nodal values of the augmented scalar (zero for standard spaces).
    pub augmented: Vec<f64>,
    /// `Σ_v augmented[v] m_v`, subtracted to keep the augmented part zero-mean.
    pub augmented_shift: f64,
}

impl FeFunction {
    pub fn zero(mesh: &TriangleMesh) -> Self {
        Self {
            velocity: vec![[0.0; 2]; mesh.num_vertices()],
            rt: vec![[0.0; 2]; mesh.num_edges()],
            augmented: vec![0.0; mesh.num_vertices()],
            augmented_shift: 0.0,
        }
    }

    /// Expands `coeffs`; boundary velocities are taken from `lift` (zero if absent).
    pub fn from_coefficients(space: &FeSpace, coeffs: &Coefficients, lift: Option<&[Vector]>) -> Result<Self> {
        coeffs.check(space)?;
        let mesh = space.mesh;
        let mut f = Self::zero(mesh);
        if let Some(l) = lift {
            if l.len() != mesh.num_vertices() {
                return Err(Error::DimensionMismatch {
                    expected: mesh.num_vertices(),
                    got: l.len(),
                });
            }
        }
        let c = &coeffs.values;
        for v in 0..mesh.num_vertices() {
            match space.velocity.dof[v] {
                Some(base) => f.velocity[v] = [c[base], c[base + 1]],
                None => f.velocity[v] = lift.map(|l| l[v]).unwrap_or([0.0; 2]),
            }
        }
        for e in 0..mesh.num_edges() {
            f.rt[e] = [c[space.pseudostress.rt_dof(e, 0)], c[space.pseudostress.rt_dof(e, 1)]];
        }
        if let Some(aug) = &space.pseudostress.augmented {
            let mut shift = 0.0;
            for v in 0..mesh.num_vertices() {
                if let Some(d) = aug.dof[v] {
                    f.augmented[v] = c[d];
                    shift += c[d] * aug.hat_mean[v];
                }
            }
            f.augmented_shift = shift;
        }
        Ok(f)
    }

    /// Inverse of [`FeFunction::from_coefficients`] (boundary velocities dropped).
    pub fn to_coefficients(&self, space: &FeSpace) -> Coefficients {
        let mut c = Coefficients::zeros(space);
        for v in 0..space.mesh.num_vertices() {
            if let Some(base) = space.velocity.dof[v] {
                c.values[base] = self.velocity[v][0];
                c.values[base + 1] = self.velocity[v][1];
            }
            if let Some(d) = space.pseudostress.augmented_dof(v) {
                c.values[d] = self.augmented[v];
            }
        }
        for e in 0..space.mesh.num_edges() {
            for row in 0..2 {
                c.values[space.pseudostress.rt_dof(e, row)] = self.rt[e][row];
            }
        }
        c
    }

    pub fn eval(&self, mesh: &TriangleMesh, k: usize, geo: &ElementGeometry, xhat: Point) -> FieldValue {
        let tri = mesh.triangles()[k];
        let lambda = ElementGeometry::barycentric(xhat);
        let mut out = FieldValue::default();
        let mut eta = -self.augmented_shift;
        for i in 0..3 {
            let v = tri.v[i];
            let uv = self.velocity[v];
            let g = geo.hat_gradients[i];
            for c in 0..2 {
                out.u[c] += lambda[i] * uv[c];
                out.grad_u[c][0] += uv[c] * g[0];
                out.grad_u[c][1] += uv[c] * g[1];
            }
            eta += lambda[i] * self.augmented[v];
            out.div_m[0] += self.augmented[v] * g[0];
            out.div_m[1] += self.augmented[v] * g[1];
        }
        out.m = [[eta, 0.0], [0.0, eta]];
        let x = geo.map(xhat);
        let edges = mesh.element_edges(k);
        for i in 0..3 {
            let scale = mesh.edge_sign(k, i) * geo.edge_lengths[i] / (2.0 * geo.area);
            let a = geo.vertices[i];
            let psi = [scale * (x[0] - a[0]), scale * (x[1] - a[1])];
            let coef = self.rt[edges[i]];
            for row in 0..2 {
                out.m[row][0] += coef[row] * psi[0];
                out.m[row][1] += coef[row] * psi[1];
                out.div_m[row] += coef[row] * 2.0 * scale;
            }
        }
        out
    }
}

/// Anything that can be evaluated like a discrete pair `(u_h, M_h)` on the
/// elements of a mesh.
pub trait DiscreteField {
    fn value(&self, mesh: &TriangleMesh, k: usize, geo: &ElementGeometry, xhat: Point) -> FieldValue;
}

impl DiscreteField for FeFunction {
    fn value(&self, mesh: &TriangleMesh, k: usize, geo: &ElementGeometry, xhat: Point) -> FieldValue {
        self.eval(mesh, k, geo, xhat)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{make_unit_square_mesh, uniform_refine};
    use crate::tensor::ZERO_TENSOR;
    use crate::quadrature::quadrature_rule;
    use rand::{Rng, SeedableRng};

    #[test]
    fn dof_counts() {
        let m1 = make_unit_square_mesh(1);
        assert_eq!(build_space(&m1, SpaceKind::Standard).dim(), 10);
        assert_eq!(build_space(&m1, SpaceKind::Augmented).dim(), 13);
        let m2 = make_unit_square_mesh(2);
        let s = build_space(&m2, SpaceKind::Standard);
        assert_eq!(s.dim(), 34);
        assert_eq!(s.layout().velocity, 0..2);
        assert!(matches!(
            build_space_with_degree(&m2, SpaceKind::Standard, 1),
            Err(Error::UnsupportedDegree(1))
        ));
    }

    #[test]
    fn velocity_basis_values() {
        let m = make_unit_square_mesh(2);
        let s = build_space(&m, SpaceKind::Standard);
        let geo = m.geo(3);
        let b = eval_velocity_basis(&s, 3, &geo, [1.0 / 3.0, 1.0 / 3.0]);
        let mut gsum = [0.0; 2];
        for j in (0..6).step_by(2) {
            assert!((b[j].value.u[0] - 1.0 / 3.0).abs() < 1e-15);
            gsum[0] += b[j].value.grad_u[0][0];
            gsum[1] += b[j].value.grad_u[0][1];
            assert_eq!(b[j].value.div_u(), b[j].value.grad_u[0][0]);
        }
        assert!(gsum[0].abs() < 1e-14 && gsum[1].abs() < 1e-14);
    }

    #[test]
    fn partition_of_unity_random_points() {
        let m = uniform_refine(&make_unit_square_mesh(2));
        let s = build_space(&m, SpaceKind::Standard);
        let mut rng = rand::rngs::StdRng::seed_from_u64(1);
        for k in 0..m.num_elements() {
            let geo = m.geo(k);
            for _ in 0..50 {
                let (a, b): (f64, f64) = (rng.gen(), rng.gen());
                let xhat = if a + b > 1.0 { [1.0 - a, 1.0 - b] } else { [a, b] };
                let funcs = eval_velocity_basis(&s, k, &geo, xhat);
                let sum: f64 = funcs.iter().map(|f| f.value.u[0]).sum();
                assert!((sum - 1.0).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn rt_reference_divergence_and_flux() {
        let m = TriangleMesh::with_longest_edge_refinement(vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]], vec![[0, 1, 2]])
            .unwrap();
        let s = build_space(&m, SpaceKind::Standard);
        let geo = m.geo(0);
        // local edge 1 runs from (0,1) to (0,0): |E| = 1
        let funcs = eval_pseudostress_basis(&s, 0, &geo, [0.2, 0.3]);
        assert!((funcs[2].value.div_m[0].abs() - 2.0).abs() < 1e-15);
        // normal components at edge midpoints
        let mids = [[0.5, 0.5], [0.0, 0.5], [0.5, 0.0]];
        for i in 0..3 {
            let fi = eval_pseudostress_basis(&s, 0, &geo, mids[i]);
            for j in 0..3 {
                let psi = fi[2 * j].value.m[0];
                let n = geo.normals[i];
                let flux = m.edge_sign(0, i) * (psi[0] * n[0] + psi[1] * n[1]);
                let expected = if i == j { 1.0 } else { 0.0 };
                assert!((flux - expected).abs() < 1e-14, "edge {i} func {j}: {flux}");
            }
        }
    }

    #[test]
    fn rt_normal_continuity() {
        let m = uniform_refine(&make_unit_square_mesh(2));
        let s = build_space(&m, SpaceKind::Standard);
        for e in 0..m.num_edges() {
            let (k1, Some(k2)) = m.edge_elements(e) else { continue };
            let n = m.edge_normal(e);
            let [a, b] = m.edges()[e];
            let mid = [
                0.5 * (m.vertices()[a][0] + m.vertices()[b][0]),
                0.5 * (m.vertices()[a][1] + m.vertices()[b][1]),
            ];
            let flux = |k: usize| {
                let geo = m.geo(k);
                let xhat = to_reference(&geo, mid);
                let funcs = eval_pseudostress_basis(&s, k, &geo, xhat);
                funcs
                    .iter()
                    .find(|f| f.dof == LocalDof::Free(s.pseudostress().rt_dof(e, 0)))
                    .map(|f| f.value.m[0][0] * n[0] + f.value.m[0][1] * n[1])
                    .unwrap()
            };
            let (f1, f2) = (flux(k1), flux(k2));
            assert!((f1 - f2).abs() < 1e-12 && (f1 - 1.0).abs() < 1e-12);
        }
    }

    pub(crate) fn to_reference(geo: &ElementGeometry, x: Point) -> Point {
        let b = geo.jacobian;
        let d = [x[0] - geo.vertices[0][0], x[1] - geo.vertices[0][1]];
        [
            (b[1][1] * d[0] - b[0][1] * d[1]) / geo.det,
            (-b[1][0] * d[0] + b[0][0] * d[1]) / geo.det,
        ]
    }

    #[test]
    fn augmented_basis_algebra() {
        let m = make_unit_square_mesh(2);
        let s = build_space(&m, SpaceKind::Augmented);
        let geo = m.geo(1);
        let funcs = eval_pseudostress_basis(&s, 1, &geo, [0.25, 0.5]);
        assert_eq!(funcs.len(), 9);
        let lambda = ElementGeometry::barycentric([0.25, 0.5]);
        for (i, f) in funcs[6..].iter().enumerate() {
            let v = f.value;
            assert_eq!(v.dev_m(), ZERO_TENSOR);
            let eta = lambda[i] - s.pseudostress().hat_mean(m.triangles()[1].v[i]).unwrap();
            assert!((v.trace_m() - 2.0 * eta).abs() < 1e-15);
            assert_eq!(v.div_m, geo.hat_gradients[i]);
        }
    }

    #[test]
    fn augmented_zero_mean() {
        let m = uniform_refine(&make_unit_square_mesh(3));
        let s = build_space(&m, SpaceKind::Augmented);
        let q = quadrature_rule(2).unwrap();
        let mut integral = vec![0.0; s.dim()];
        for k in 0..m.num_elements() {
            let geo = m.geo(k);
            for (xhat, w) in q.iter() {
                for f in eval_pseudostress_basis(&s, k, &geo, xhat).iter().skip(6) {
                    if let LocalDof::Free(d) = f.dof {
                        integral[d] += w * geo.det * f.value.m[0][0];
                    }
                }
            }
        }
        // outside its patch the function is the constant −m_v
        let mut patch = vec![0.0; m.num_vertices()];
        for k in 0..m.num_elements() {
            for &v in &m.triangles()[k].v {
                patch[v] += m.geo(k).area;
            }
        }
        for v in 1..m.num_vertices() {
            let d = s.pseudostress().augmented_dof(v).unwrap();
            let outside = -s.pseudostress().hat_mean(v).unwrap() * (1.0 - patch[v]);
            assert!((integral[d] + outside).abs() < 1e-15, "{}", integral[d] + outside);
        }
    }

    #[test]
    fn identity_embedding() {
        let m = uniform_refine(&make_unit_square_mesh(2));
        for kind in [SpaceKind::Standard, SpaceKind::Augmented] {
            let s = build_space(&m, kind);
            let c = embed_identity(&s);
            let f = FeFunction::from_coefficients(&s, &c, None).unwrap();
            let q = quadrature_rule(6).unwrap();
            for k in 0..m.num_elements() {
                let geo = m.geo(k);
                for (xhat, _) in q.iter() {
                    let v = f.eval(&m, k, &geo, xhat);
                    for i in 0..2 {
                        for j in 0..2 {
                            let e = if i == j { 1.0 } else { 0.0 };
                            assert!((v.m[i][j] - e).abs() < 1e-12);
                        }
                    }
                    assert!(tensor::frobenius_sq(&v.dev_m()) < 1e-24);
                    assert!(v.div_m[0].abs() < 1e-12 && v.div_m[1].abs() < 1e-12);
                }
            }
            assert_eq!(f.to_coefficients(&s), c);
        }
    }

    #[test]
    fn coefficient_length_checked() {
        let m = make_unit_square_mesh(1);
        let s = build_space(&m, SpaceKind::Standard);
        let bad = Coefficients {
            kind: SpaceKind::Standard,
            values: vec![0.0; 3],
        };
        assert!(matches!(
            FeFunction::from_coefficients(&s, &bad, None),
            Err(Error::DimensionMismatch { .. })
        ));
    }
}
