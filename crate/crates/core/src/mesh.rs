//! Conforming triangle meshes with newest-vertex bisection.
//!
//! Local numbering: local edge `i` of a triangle is the edge opposite local
//! vertex `i`, running counter-clockwise from `v[i+1]` to `v[i+2]`. Global edges
//! are stored as `[lo, hi]` with `lo < hi`; that orientation fixes the sign of
//! every Raviart–Thomas degree of freedom.

use std::collections::{BTreeSet, VecDeque};
use std::io::{BufRead, Write};
use std::path::Path;

use crate::tensor::{Point, Tensor, Vector};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Triangle {
    pub v: [usize; 3],
    /// Local index of the newest vertex; the refinement edge is opposite it.
    pub refinement_edge: usize,
}

impl Triangle {
    pub fn new(v: [usize; 3], refinement_edge: usize) -> Self {
        Self { v, refinement_edge }
    }

    /// Endpoints of local edge `i` in counter-clockwise order.
    pub fn local_edge(&self, i: usize) -> (usize, usize) {
        (self.v[(i + 1) % 3], self.v[(i + 2) % 3])
    }
}

/// Affine data of one element. Edge quantities are indexed like local edges.
#[derive(Clone, Copy, Debug)]
pub struct ElementGeometry {
    pub vertices: [Point; 3],
    pub area: f64,
    pub diameter: f64,
    pub edge_lengths: [f64; 3],
    /// Unit outward normals.
    pub normals: [Vector; 3],
    /// Jacobian `B = [v1 − v0 | v2 − v0]` of `x = v0 + B x̂`.
    pub jacobian: Tensor,
    pub det: f64,
    /// Gradients of the barycentric coordinates (constant on the element).
    pub hat_gradients: [Vector; 3],
}

impl ElementGeometry {
    pub fn from_vertices(vertices: [Point; 3]) -> Option<Self> {
        let [p0, p1, p2] = vertices;
        let jacobian = [[p1[0] - p0[0], p2[0] - p0[0]], [p1[1] - p0[1], p2[1] - p0[1]]];
        let det = jacobian[0][0] * jacobian[1][1] - jacobian[0][1] * jacobian[1][0];
        if !(det > 0.0) || !det.is_finite() {
            return None;
        }
        let area = 0.5 * det;
        let mut edge_lengths = [0.0; 3];
        let mut normals = [[0.0; 2]; 3];
        let mut hat_gradients = [[0.0; 2]; 3];
        for i in 0..3 {
            let a = vertices[(i + 1) % 3];
            let b = vertices[(i + 2) % 3];
            let tx = b[0] - a[0];
            let ty = b[1] - a[1];
            let len = tx.hypot(ty);
            edge_lengths[i] = len;
            // CCW traversal: outward normal is the clockwise rotation of the tangent.
            normals[i] = [ty / len, -tx / len];
            // ∇λ_i points from edge i towards vertex i with magnitude 1/height.
            let s = -len / (2.0 * area);
            hat_gradients[i] = [s * normals[i][0], s * normals[i][1]];
        }
        let diameter = edge_lengths.iter().cloned().fold(0.0, f64::max);
        Some(Self {
            vertices,
            area,
            diameter,
            edge_lengths,
            normals,
            jacobian,
            det,
            hat_gradients,
        })
    }

    #[inline]
    pub fn map(&self, xhat: Point) -> Point {
        let p0 = self.vertices[0];
        let b = &self.jacobian;
        [
            p0[0] + b[0][0] * xhat[0] + b[0][1] * xhat[1],
            p0[1] + b[1][0] * xhat[0] + b[1][1] * xhat[1],
        ]
    }

    #[inline]
    pub fn barycentric(xhat: Point) -> [f64; 3] {
        [1.0 - xhat[0] - xhat[1], xhat[0], xhat[1]]
    }

    pub fn centroid(&self) -> Point {
        let v = &self.vertices;
        [(v[0][0] + v[1][0] + v[2][0]) / 3.0, (v[0][1] + v[1][1] + v[2][1]) / 3.0]
    }

    /// Smallest interior angle in radians.
    pub fn min_angle(&self) -> f64 {
        let l = self.edge_lengths;
        (0..3)
            .map(|i| {
                let (a, b, c) = (l[i], l[(i + 1) % 3], l[(i + 2) % 3]);
                ((b * b + c * c - a * a) / (2.0 * b * c)).clamp(-1.0, 1.0).acos()
            })
            .fold(f64::INFINITY, f64::min)
    }
}

#[derive(Clone, Debug)]
pub struct TriangleMesh {
    vertices: Vec<Point>,
    triangles: Vec<Triangle>,
    edges: Vec<[usize; 2]>,
    element_edges: Vec<[usize; 3]>,
    edge_elements: Vec<(usize, Option<usize>)>,
    boundary_vertex: Vec<bool>,
}

impl TriangleMesh {
    /// Builds a mesh from counter-clockwise triangles with given refinement edges.
    pub fn new(vertices: Vec<Point>, triangles: Vec<Triangle>) -> Result<Self> {
        if vertices.iter().any(|p| !p[0].is_finite() || !p[1].is_finite()) {
            return Err(Error::InvalidMesh("non-finite vertex coordinate".into()));
        }
        for (k, t) in triangles.iter().enumerate() {
            if t.v.iter().any(|&i| i >= vertices.len()) {
                return Err(Error::InvalidMesh(format!("triangle {k} references a missing vertex")));
            }
            if t.v[0] == t.v[1] || t.v[1] == t.v[2] || t.v[0] == t.v[2] {
                return Err(Error::InvalidMesh(format!("triangle {k} repeats a vertex")));
            }
            if t.refinement_edge > 2 {
                return Err(Error::InvalidMesh(format!("triangle {k} has refinement edge {}", t.refinement_edge)));
            }
            let verts = t.v.map(|i| vertices[i]);
            if ElementGeometry::from_vertices(verts).is_none() {
                return Err(Error::DegenerateElement(k));
            }
        }

        let mut incidences: Vec<(usize, usize, usize, usize)> = Vec::with_capacity(3 * triangles.len());
        for (k, t) in triangles.iter().enumerate() {
            for i in 0..3 {
                let (a, b) = t.local_edge(i);
                incidences.push((a.min(b), a.max(b), k, i));
            }
        }
        incidences.sort_unstable();

        let mut edges = Vec::new();
        let mut edge_elements = Vec::new();
        let mut element_edges = vec![[usize::MAX; 3]; triangles.len()];
        let mut idx = 0;
        while idx < incidences.len() {
            let (lo, hi, k, i) = incidences[idx];
            let e = edges.len();
            edges.push([lo, hi]);
            element_edges[k][i] = e;
            let mut second = None;
            let mut j = idx + 1;
            while j < incidences.len() && incidences[j].0 == lo && incidences[j].1 == hi {
                if second.is_some() {
                    return Err(Error::InvalidMesh(format!("edge ({lo},{hi}) shared by more than two triangles")));
                }
                let (_, _, k2, i2) = incidences[j];
                element_edges[k2][i2] = e;
                second = Some(k2);
                j += 1;
            }
            edge_elements.push((k, second));
            idx = j;
        }

        let mut boundary_vertex = vec![false; vertices.len()];
        for (e, &(_, second)) in edge_elements.iter().enumerate() {
            if second.is_none() {
                boundary_vertex[edges[e][0]] = true;
                boundary_vertex[edges[e][1]] = true;
            }
        }

        let mesh = Self {
            vertices,
            triangles,
            edges,
            element_edges,
            edge_elements,
            boundary_vertex,
        };
        mesh.check_no_hanging_nodes()?;
        Ok(mesh)
    }

    /// Orients every triangle counter-clockwise and uses its longest edge as
    /// refinement edge (ties go to the smallest global edge index).
    pub fn with_longest_edge_refinement(vertices: Vec<Point>, elements: Vec<[usize; 3]>) -> Result<Self> {
        let triangles = elements
            .into_iter()
            .map(|mut v| {
                let (a, b, c) = (vertices[v[0]], vertices[v[1]], vertices[v[2]]);
                let cross = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]);
                if cross < 0.0 {
                    v.swap(1, 2);
                }
                Triangle::new(v, 0)
            })
            .collect();
        let mut mesh = Self::new(vertices, triangles)?;
        for k in 0..mesh.triangles.len() {
            let geo = mesh.geometry(k)?;
            let edges = mesh.element_edges[k];
            let mut best = 0;
            for i in 1..3 {
                let (li, lb) = (geo.edge_lengths[i], geo.edge_lengths[best]);
                let tol = 1e-12 * lb;
                if li > lb + tol || ((li - lb).abs() <= tol && edges[i] < edges[best]) {
                    best = i;
                }
            }
            mesh.triangles[k].refinement_edge = best;
        }
        Ok(mesh)
    }

    /// A boundary edge carrying another boundary vertex in its interior is a
    /// hanging node.
    fn check_no_hanging_nodes(&self) -> Result<()> {
        let bverts: Vec<usize> = (0..self.vertices.len()).filter(|&i| self.boundary_vertex[i]).collect();
        for (e, &(_, second)) in self.edge_elements.iter().enumerate() {
            if second.is_some() {
                continue;
            }
            let [a, b] = self.edges[e];
            let (pa, pb) = (self.vertices[a], self.vertices[b]);
            let d = [pb[0] - pa[0], pb[1] - pa[1]];
            let len2 = d[0] * d[0] + d[1] * d[1];
            for &q in &bverts {
                if q == a || q == b {
                    continue;
                }
                let pq = self.vertices[q];
                let w = [pq[0] - pa[0], pq[1] - pa[1]];
                let s = (w[0] * d[0] + w[1] * d[1]) / len2;
                let cross = (w[0] * d[1] - w[1] * d[0]).abs() / len2.sqrt();
                if s > 1e-12 && s < 1.0 - 1e-12 && cross < 1e-12 * len2.sqrt() {
                    return Err(Error::InvalidMesh(format!("hanging node {q} on edge ({a},{b})")));
                }
            }
        }
        Ok(())
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[Triangle] {
        &self.triangles
    }

    pub fn edges(&self) -> &[[usize; 2]] {
        &self.edges
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_elements(&self) -> usize {
        self.triangles.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    /// Global edge indices of the local edges of element `k`.
    pub fn element_edges(&self, k: usize) -> [usize; 3] {
        self.element_edges[k]
    }

    /// The one or two elements adjacent to edge `e`.
    pub fn edge_elements(&self, e: usize) -> (usize, Option<usize>) {
        self.edge_elements[e]
    }

    pub fn is_boundary_edge(&self, e: usize) -> bool {
        self.edge_elements[e].1.is_none()
    }

    pub fn is_boundary_vertex(&self, v: usize) -> bool {
        self.boundary_vertex[v]
    }

    /// `+1` if the outward normal of local edge `i` of element `k` agrees with
    /// the global normal of that edge, `-1` otherwise.
    ///
    /// The global normal of `[lo, hi]` is the clockwise rotation of the tangent
    /// `lo → hi`, so the signs agree exactly when the counter-clockwise local
    /// traversal runs from low to high index.
    pub fn edge_sign(&self, k: usize, i: usize) -> f64 {
        let (a, b) = self.triangles[k].local_edge(i);
        if a < b {
            1.0
        } else {
            -1.0
        }
    }

    /// Unit normal of global edge `e` in the global orientation.
    pub fn edge_normal(&self, e: usize) -> Vector {
        let [a, b] = self.edges[e];
        let (pa, pb) = (self.vertices[a], self.vertices[b]);
        let (tx, ty) = (pb[0] - pa[0], pb[1] - pa[1]);
        let len = tx.hypot(ty);
        [ty / len, -tx / len]
    }

    pub fn edge_length(&self, e: usize) -> f64 {
        let [a, b] = self.edges[e];
        let (pa, pb) = (self.vertices[a], self.vertices[b]);
        (pb[0] - pa[0]).hypot(pb[1] - pa[1])
    }

    pub fn geometry(&self, k: usize) -> Result<ElementGeometry> {
        let t = self.triangles.get(k).ok_or(Error::ElementOutOfRange {
            index: k,
            len: self.triangles.len(),
        })?;
        ElementGeometry::from_vertices(t.v.map(|i| self.vertices[i])).ok_or(Error::DegenerateElement(k))
    }

    /// Geometry of an element already validated at construction.
    pub(crate) fn geo(&self, k: usize) -> ElementGeometry {
        self.geometry(k).expect("mesh elements are validated at construction")
    }

    pub fn area(&self) -> f64 {
        (0..self.num_elements()).map(|k| self.geo(k).area).sum()
    }

    pub fn max_diameter(&self) -> f64 {
        (0..self.num_elements()).map(|k| self.geo(k).diameter).fold(0.0, f64::max)
    }

    pub fn min_angle(&self) -> f64 {
        (0..self.num_elements()).map(|k| self.geo(k).min_angle()).fold(f64::INFINITY, f64::min)
    }

    /// `max_T diam(T)² / |T|`.
    pub fn shape_regularity(&self) -> f64 {
        (0..self.num_elements())
            .map(|k| {
                let g = self.geo(k);
                g.diameter * g.diameter / g.area
            })
            .fold(0.0, f64::max)
    }

    /// Index of the first element whose closure contains `p`.
    pub fn locate(&self, p: Point) -> Option<usize> {
        (0..self.num_elements()).find(|&k| {
            let g = self.geo(k);
            (0..3).all(|i| {
                let a = g.vertices[(i + 1) % 3];
                let n = g.normals[i];
                (p[0] - a[0]) * n[0] + (p[1] - a[1]) * n[1] <= 1e-12 * g.diameter
            })
        })
    }

    /// Writes `x y` per vertex, 17 significant digits.
    pub fn write_nodes<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        for p in &self.vertices {
            writeln!(w, "{:.16e} {:.16e}", p[0], p[1])?;
        }
        Ok(())
    }

    /// Writes `i j k refedge` per element (zero-based vertex indices).
    pub fn write_elements<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        for t in &self.triangles {
            writeln!(w, "{} {} {} {}", t.v[0], t.v[1], t.v[2], t.refinement_edge)?;
        }
        Ok(())
    }

    pub fn read<R1: BufRead, R2: BufRead>(nodes: R1, elements: R2) -> Result<Self> {
        let mut vertices = Vec::new();
        for line in nodes.lines() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let vals = parse_fields::<f64>(&line, 2)?;
            vertices.push([vals[0], vals[1]]);
        }
        let mut triangles = Vec::new();
        for line in elements.lines() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let vals = parse_fields::<usize>(&line, 4)?;
            triangles.push(Triangle::new([vals[0], vals[1], vals[2]], vals[3]));
        }
        Self::new(vertices, triangles)
    }

    pub fn save(&self, nodes: &Path, elements: &Path) -> Result<()> {
        self.write_nodes(std::io::BufWriter::new(std::fs::File::create(nodes)?))?;
        self.write_elements(std::io::BufWriter::new(std::fs::File::create(elements)?))?;
        Ok(())
    }

    pub fn load(nodes: &Path, elements: &Path) -> Result<Self> {
        let n = std::io::BufReader::new(std::fs::File::open(nodes)?);
        let e = std::io::BufReader::new(std::fs::File::open(elements)?);
        Self::read(n, e)
    }
}

pub(crate) fn parse_fields<T: std::str::FromStr>(line: &str, n: usize) -> Result<Vec<T>> {
    let vals: Vec<T> = line
        .split_whitespace()
        .map(|s| s.parse::<T>().map_err(|_| Error::Parse(format!("bad field `{s}` in `{line}`"))))
        .collect::<Result<_>>()?;
    if vals.len() != n {
        return Err(Error::Parse(format!("expected {n} fields, got {} in `{line}`", vals.len())));
    }
    Ok(vals)
}

/// Structured mesh of `(0,1)²` with `2n²` triangles; the cell diagonals
/// alternate in a checkerboard pattern.
pub fn make_unit_square_mesh(n: usize) -> TriangleMesh {
    assert!(n >= 1, "n_per_side must be positive");
    let id = |i: usize, j: usize| j * (n + 1) + i;
    let mut vertices = Vec::with_capacity((n + 1) * (n + 1));
    for j in 0..=n {
        for i in 0..=n {
            vertices.push([i as f64 / n as f64, j as f64 / n as f64]);
        }
    }
    let mut elements = Vec::with_capacity(2 * n * n);
    for j in 0..n {
        for i in 0..n {
            let (p00, p10, p01, p11) = (id(i, j), id(i + 1, j), id(i, j + 1), id(i + 1, j + 1));
            if (i + j) % 2 == 0 {
                elements.push([p00, p10, p11]);
                elements.push([p00, p11, p01]);
            } else {
                elements.push([p00, p10, p01]);
                elements.push([p10, p11, p01]);
            }
        }
    }
    TriangleMesh::with_longest_edge_refinement(vertices, elements).expect("structured square mesh is valid")
}

/// `(−1,1)² ∖ [−1,0]²` with six triangles; every diagonal passes through the
/// reentrant corner.
pub fn make_lshape_mesh() -> TriangleMesh {
    let vertices = vec![
        [0.0, -1.0],
        [1.0, -1.0],
        [-1.0, 0.0],
        [0.0, 0.0],
        [1.0, 0.0],
        [-1.0, 1.0],
        [0.0, 1.0],
        [1.0, 1.0],
    ];
    let elements = vec![[3, 0, 1], [3, 1, 4], [3, 4, 7], [3, 7, 6], [3, 6, 5], [3, 5, 2]];
    TriangleMesh::with_longest_edge_refinement(vertices, elements).expect("L-shape mesh is valid")
}

/// Bisects every marked element through its refinement edge and closes the
/// result to a conforming mesh.
pub fn refine_nvb(mesh: &TriangleMesh, marked: &[usize]) -> Result<TriangleMesh> {
    let mut edge_marks = vec![false; mesh.num_edges()];
    for &k in marked {
        if k >= mesh.num_elements() {
            return Err(Error::ElementOutOfRange {
                index: k,
                len: mesh.num_elements(),
            });
        }
        edge_marks[mesh.element_edges[k][mesh.triangles[k].refinement_edge]] = true;
    }
    Ok(refine_marked_edges(mesh, edge_marks))
}

/// Bisects every edge once: each triangle is split into four children
/// (two generations of newest-vertex bisection).
pub fn uniform_refine(mesh: &TriangleMesh) -> TriangleMesh {
    refine_marked_edges(mesh, vec![true; mesh.num_edges()])
}

fn refine_marked_edges(mesh: &TriangleMesh, mut edge_marks: Vec<bool>) -> TriangleMesh {
    // Closure: an element with any marked edge must have its refinement edge marked.
    let mut queue: VecDeque<usize> = (0..edge_marks.len()).filter(|&e| edge_marks[e]).collect();
    while let Some(e) = queue.pop_front() {
        let (k1, k2) = mesh.edge_elements[e];
        for k in std::iter::once(k1).chain(k2) {
            let re = mesh.element_edges[k][mesh.triangles[k].refinement_edge];
            if !edge_marks[re] {
                edge_marks[re] = true;
                queue.push_back(re);
            }
        }
    }

    let mut vertices = mesh.vertices.clone();
    let mut midpoint = vec![usize::MAX; mesh.num_edges()];
    for (e, &marked) in edge_marks.iter().enumerate() {
        if marked {
            let [a, b] = mesh.edges[e];
            let (pa, pb) = (mesh.vertices[a], mesh.vertices[b]);
            midpoint[e] = vertices.len();
            vertices.push([0.5 * (pa[0] + pb[0]), 0.5 * (pa[1] + pb[1])]);
        }
    }

    let mut triangles = Vec::with_capacity(mesh.num_elements() * 2);
    for (k, t) in mesh.triangles.iter().enumerate() {
        let r = t.refinement_edge;
        // Rotate so that a is the newest vertex and b–c the refinement edge.
        let (a, b, c) = (t.v[r], t.v[(r + 1) % 3], t.v[(r + 2) % 3]);
        let ee = mesh.element_edges[k];
        let (e_bc, e_ca, e_ab) = (ee[r], ee[(r + 1) % 3], ee[(r + 2) % 3]);
        if !edge_marks[e_bc] {
            triangles.push(*t);
            continue;
        }
        let m = midpoint[e_bc];
        // Children (m, a, b) and (m, c, a); refinement edges a–b and c–a.
        for (p, q, e) in [(a, b, e_ab), (c, a, e_ca)] {
            if edge_marks[e] {
                let mm = midpoint[e];
                triangles.push(Triangle::new([mm, m, p], 0));
                triangles.push(Triangle::new([mm, q, m], 0));
            } else {
                triangles.push(Triangle::new([m, p, q], 0));
            }
        }
    }

    TriangleMesh::new(vertices, triangles).expect("newest-vertex bisection preserves conformity")
}

/// Element indices in ascending order, deduplicated.
pub fn normalize_marks(marked: impl IntoIterator<Item = usize>) -> Vec<usize> {
    marked.into_iter().collect::<BTreeSet<_>>().into_iter().collect()
}
