//! Simplicial meshes of n-dimensional domains embedded in R^N.
//!
//! The same type carries codimension-0 domains (n = N) and embedded
//! submanifolds (n < N). Boundary faces are labeled relative (Σ) or free (Γ);
//! free faces can be checked against a declared convex support.

use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result, Violation};

/// Boundary label: relative (Dirichlet-type) or free (resting on the support).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Sigma,
    Gamma,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryFace {
    pub face: Vec<usize>,
    pub label: Label,
}

/// One piece of the boundary of the convex support body C.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SupportPiece {
    /// `{x : ⟨normal, x⟩ = offset}`, with `normal` the outward unit normal of C.
    Hyperplane { normal: Vec<f64>, offset: f64 },
    /// A round sphere bounding a ball-shaped C.
    Sphere { center: Vec<f64>, radius: f64 },
}

impl SupportPiece {
    pub fn distance(&self, x: &[f64]) -> f64 {
        match self {
            SupportPiece::Hyperplane { normal, offset } => {
                (crate::euclid::dot(normal, x) - offset).abs()
            }
            SupportPiece::Sphere { center, radius } => {
                (crate::euclid::norm(&crate::euclid::sub(x, center)) - radius).abs()
            }
        }
    }
}

/// Analytic reference values shipped with generated fixtures.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExactMeasures {
    pub volume: f64,
    pub sigma: f64,
    pub gamma: f64,
    /// |H| when it is constant on the fixture.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mean_curvature: Option<f64>,
}

/// Orthonormal tangent and normal vectors at one vertex.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Frame {
    pub tangent: Vec<Vec<f64>>,
    pub normal: Vec<Vec<f64>>,
}

/// On-disk JSON layout.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MeshFile {
    pub vertices: Vec<Vec<f64>>,
    pub cells: Vec<Vec<usize>>,
    pub boundary: Vec<BoundaryFace>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exact_measures: Option<ExactMeasures>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frames: Option<Vec<Frame>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub support: Vec<SupportPiece>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fixture: Option<serde_json::Value>,
}

/// Per-cell geometry of the affine simplex.
#[derive(Debug, Clone)]
pub struct CellGeometry {
    pub volume: f64,
    /// Gradients of the n + 1 barycentric coordinates, as ambient vectors
    /// lying in the cell's affine hull.
    pub bary_grads: Vec<Vec<f64>>,
    pub diameter: f64,
}

#[derive(Debug, Clone)]
pub struct SimplicialMesh {
    vertices: Vec<Vec<f64>>,
    cells: Vec<Vec<usize>>,
    boundary: Vec<BoundaryFace>,
    exact: Option<ExactMeasures>,
    frames: Option<Vec<Frame>>,
    support: Vec<SupportPiece>,
    fixture: Option<serde_json::Value>,
    geometry: Vec<CellGeometry>,
}

/// |Ω| (or |M|), |Σ|, |Γ|.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Measures {
    pub volume: f64,
    pub sigma: f64,
    pub gamma: f64,
}

/// Combinatorial summary computed during validation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeshSummary {
    pub vertices: usize,
    pub cells: usize,
    pub boundary_faces: usize,
    pub euler_characteristic: i64,
    pub components: usize,
    pub mesh_size: f64,
}

/// Tolerance for Γ faces lying on the declared support.
pub const SUPPORT_TOL: f64 = 1e-8;

fn sorted(face: &[usize]) -> Vec<usize> {
    let mut f = face.to_vec();
    f.sort_unstable();
    f
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// Edge matrix `[v1 − v0, …, vn − v0]` (N × n).
fn edge_matrix(pts: &[&[f64]]) -> DMatrix<f64> {
    let dim = pts[0].len();
    let n = pts.len() - 1;
    DMatrix::from_fn(dim, n, |r, c| pts[c + 1][r] - pts[0][r])
}

/// k-volume of the simplex spanned by `pts` (k = pts.len() − 1).
pub fn simplex_volume(pts: &[&[f64]]) -> f64 {
    let k = pts.len() - 1;
    if k == 0 {
        return 1.0;
    }
    let e = edge_matrix(pts);
    let g = e.transpose() * &e;
    g.determinant().max(0.0).sqrt() / factorial(k)
}

fn cell_geometry(pts: &[&[f64]]) -> Option<CellGeometry> {
    let n = pts.len() - 1;
    let e = edge_matrix(pts);
    let g = e.transpose() * &e;
    let det = g.determinant();
    let mut diameter: f64 = 0.0;
    for i in 0..pts.len() {
        for j in 0..i {
            diameter = diameter.max(crate::euclid::norm(&crate::euclid::sub(pts[i], pts[j])));
        }
    }
    if !(det > 0.0) {
        return None;
    }
    let ginv = g.try_inverse()?;
    // ∇λ_i = E G⁻¹ e_i for i ≥ 1 and ∇λ_0 = −Σ ∇λ_i
    let grads_mat = &e * ginv;
    let dim = pts[0].len();
    let mut grads = vec![vec![0.0; dim]; n + 1];
    for i in 0..n {
        for r in 0..dim {
            grads[i + 1][r] = grads_mat[(r, i)];
            grads[0][r] -= grads_mat[(r, i)];
        }
    }
    Some(CellGeometry {
        volume: det.sqrt() / factorial(n),
        bary_grads: grads,
        diameter,
    })
}

impl SimplicialMesh {
    /// Build and validate a mesh.
    pub fn new(
        vertices: Vec<Vec<f64>>,
        cells: Vec<Vec<usize>>,
        boundary: Vec<BoundaryFace>,
    ) -> Result<Self> {
        Self::from_file(MeshFile {
            vertices,
            cells,
            boundary,
            exact_measures: None,
            frames: None,
            support: vec![],
            fixture: None,
        })
    }

    pub fn from_file(file: MeshFile) -> Result<Self> {
        let mut violations = Vec::new();
        let dim = file.vertices.first().map(Vec::len).unwrap_or(0);
        if dim == 0 || file.cells.is_empty() {
            return Err(Error::Validation(vec![Violation::DimensionMismatch {
                expected: 1,
                found: 0,
            }]));
        }
        for (i, v) in file.vertices.iter().enumerate() {
            if v.len() != dim {
                violations.push(Violation::DimensionMismatch {
                    expected: dim,
                    found: v.len(),
                });
            }
            if v.iter().any(|c| !c.is_finite()) {
                violations.push(Violation::NonFiniteVertex { vertex: i });
            }
        }
        let k = file.cells[0].len();
        if k < 2 || k - 1 > dim {
            return Err(Error::Validation(vec![Violation::DimensionMismatch {
                expected: dim + 1,
                found: k,
            }]));
        }
        for (c, cell) in file.cells.iter().enumerate() {
            if cell.len() != k {
                violations.push(Violation::DimensionMismatch {
                    expected: k,
                    found: cell.len(),
                });
            }
            for &v in cell {
                if v >= file.vertices.len() {
                    violations.push(Violation::BadIndex { cell: c, vertex: v });
                }
            }
        }
        if !violations.is_empty() {
            return Err(Error::Validation(violations));
        }
        let n = k - 1;
        let mut geometry = Vec::with_capacity(file.cells.len());
        for (c, cell) in file.cells.iter().enumerate() {
            let pts: Vec<&[f64]> = cell.iter().map(|&v| file.vertices[v].as_slice()).collect();
            if n == dim {
                let det = edge_matrix(&pts).determinant();
                if det < 0.0 {
                    violations.push(Violation::InvertedCell { cell: c });
                    continue;
                }
            }
            match cell_geometry(&pts) {
                Some(g) if g.volume > 0.0 => geometry.push(g),
                _ => violations.push(Violation::DegenerateCell { cell: c }),
            }
        }
        let mesh = SimplicialMesh {
            vertices: file.vertices,
            cells: file.cells,
            boundary: file.boundary,
            exact: file.exact_measures,
            frames: file.frames,
            support: file.support,
            fixture: file.fixture,
            geometry,
        };
        if violations.is_empty() {
            violations.extend(mesh.topology_violations());
        }
        if let Some(frames) = &mesh.frames {
            if frames.len() != mesh.vertices.len() {
                violations.push(Violation::DimensionMismatch {
                    expected: mesh.vertices.len(),
                    found: frames.len(),
                });
            }
        }
        if violations.is_empty() {
            Ok(mesh)
        } else {
            Err(Error::Validation(violations))
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: MeshFile = serde_json::from_str(text)?;
        Self::from_file(file)
    }

    pub fn to_file(&self) -> MeshFile {
        MeshFile {
            vertices: self.vertices.clone(),
            cells: self.cells.clone(),
            boundary: self.boundary.clone(),
            exact_measures: self.exact,
            frames: self.frames.clone(),
            support: self.support.clone(),
            fixture: self.fixture.clone(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.to_file()).expect("mesh serializes")
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json())?;
        Ok(())
    }

    /// Map from sorted (n−1)-faces to the cells containing them.
    fn face_cells(&self) -> HashMap<Vec<usize>, Vec<usize>> {
        let mut map: HashMap<Vec<usize>, Vec<usize>> = HashMap::new();
        for (c, cell) in self.cells.iter().enumerate() {
            for skip in 0..cell.len() {
                let face: Vec<usize> = cell
                    .iter()
                    .enumerate()
                    .filter(|&(i, _)| i != skip)
                    .map(|(_, &v)| v)
                    .collect();
                map.entry(sorted(&face)).or_default().push(c);
            }
        }
        map
    }

    fn topology_violations(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        let faces = self.face_cells();
        let mut free: BTreeMap<Vec<usize>, usize> = BTreeMap::new();
        for (f, cs) in &faces {
            if cs.len() > 2 {
                out.push(Violation::NonManifoldFace {
                    face: f.clone(),
                    count: cs.len(),
                });
            } else if cs.len() == 1 {
                free.insert(f.clone(), 0);
            }
        }
        for bf in &self.boundary {
            let key = sorted(&bf.face);
            match free.get_mut(&key) {
                Some(count) => {
                    *count += 1;
                    if *count == 2 {
                        out.push(Violation::DuplicateLabel { face: key });
                    }
                }
                None => out.push(Violation::UnknownFace { face: key }),
            }
        }
        for (f, count) in &free {
            if *count == 0 {
                out.push(Violation::UnlabeledFace { face: f.clone() });
            }
        }
        // closure: every ridge of the boundary complex is shared by exactly two boundary faces
        if self.intrinsic_dim() >= 2 {
            let mut ridges: BTreeMap<Vec<usize>, usize> = BTreeMap::new();
            for f in free.keys() {
                for skip in 0..f.len() {
                    let r: Vec<usize> = f
                        .iter()
                        .enumerate()
                        .filter(|&(i, _)| i != skip)
                        .map(|(_, &v)| v)
                        .collect();
                    *ridges.entry(r).or_default() += 1;
                }
            }
            for (r, count) in ridges {
                if count != 2 {
                    out.push(Violation::OpenBoundary { vertex: r[0] });
                }
            }
        }
        if !self.support.is_empty() {
            for bf in &self.boundary {
                if bf.label != Label::Gamma {
                    continue;
                }
                let d = bf
                    .face
                    .iter()
                    .map(|&v| {
                        self.support
                            .iter()
                            .map(|s| s.distance(&self.vertices[v]))
                            .fold(f64::INFINITY, f64::min)
                    })
                    .fold(0.0, f64::max);
                if d > SUPPORT_TOL {
                    out.push(Violation::OffSupport {
                        face: bf.face.clone(),
                        distance: d,
                    });
                }
            }
        }
        out
    }

    /// Euler characteristic of the full simplicial complex.
    pub fn euler_characteristic(&self) -> i64 {
        let n = self.intrinsic_dim();
        let mut chi = 0i64;
        for k in 0..=n {
            let mut seen = std::collections::HashSet::new();
            for cell in &self.cells {
                for sub in subsets(cell, k + 1) {
                    seen.insert(sub);
                }
            }
            let count = seen.len() as i64;
            chi += if k % 2 == 0 { count } else { -count };
        }
        chi
    }

    pub fn summary(&self) -> MeshSummary {
        MeshSummary {
            vertices: self.vertex_count(),
            cells: self.cell_count(),
            boundary_faces: self.boundary.len(),
            euler_characteristic: self.euler_characteristic(),
            components: self.components().1,
            mesh_size: self.mesh_size(),
        }
    }

    pub fn ambient_dim(&self) -> usize {
        self.vertices[0].len()
    }

    pub fn intrinsic_dim(&self) -> usize {
        self.cells[0].len() - 1
    }

    pub fn codim(&self) -> usize {
        self.ambient_dim() - self.intrinsic_dim()
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn cell_count(&self) -> usize {
        self.cells.len()
    }

    pub fn vertex(&self, i: usize) -> &[f64] {
        &self.vertices[i]
    }

    pub fn vertices(&self) -> &[Vec<f64>] {
        &self.vertices
    }

    pub fn cells(&self) -> &[Vec<usize>] {
        &self.cells
    }

    pub fn cell(&self, c: usize) -> &[usize] {
        &self.cells[c]
    }

    pub fn geometry(&self, c: usize) -> &CellGeometry {
        &self.geometry[c]
    }

    pub fn boundary(&self) -> &[BoundaryFace] {
        &self.boundary
    }

    pub fn exact(&self) -> Option<&ExactMeasures> {
        self.exact.as_ref()
    }

    pub fn frames(&self) -> Option<&[Frame]> {
        self.frames.as_deref()
    }

    pub fn support(&self) -> &[SupportPiece] {
        &self.support
    }

    pub fn fixture(&self) -> Option<&serde_json::Value> {
        self.fixture.as_ref()
    }

    pub fn with_exact(mut self, exact: Option<ExactMeasures>) -> Self {
        self.exact = exact;
        self
    }

    pub fn with_frames(mut self, frames: Option<Vec<Frame>>) -> Self {
        self.frames = frames;
        self
    }

    pub fn with_support(mut self, support: Vec<SupportPiece>) -> Self {
        self.support = support;
        self
    }

    pub fn with_fixture(mut self, fixture: serde_json::Value) -> Self {
        self.fixture = Some(fixture);
        self
    }

    /// Max cell diameter.
    pub fn mesh_size(&self) -> f64 {
        self.geometry.iter().map(|g| g.diameter).fold(0.0, f64::max)
    }

    pub fn face_measure(&self, face: &[usize]) -> f64 {
        let pts: Vec<&[f64]> = face.iter().map(|&v| self.vertices[v].as_slice()).collect();
        simplex_volume(&pts)
    }

    pub fn measures(&self) -> Measures {
        let volume = self.geometry.iter().map(|g| g.volume).sum();
        let mut sigma = 0.0;
        let mut gamma = 0.0;
        for bf in &self.boundary {
            let a = self.face_measure(&bf.face);
            match bf.label {
                Label::Sigma => sigma += a,
                Label::Gamma => gamma += a,
            }
        }
        Measures {
            volume,
            sigma,
            gamma,
        }
    }

    /// Per-vertex label flags: (on Σ, on Γ).
    pub fn vertex_labels(&self) -> (Vec<bool>, Vec<bool>) {
        let mut on_sigma = vec![false; self.vertex_count()];
        let mut on_gamma = vec![false; self.vertex_count()];
        for bf in &self.boundary {
            for &v in &bf.face {
                match bf.label {
                    Label::Sigma => on_sigma[v] = true,
                    Label::Gamma => on_gamma[v] = true,
                }
            }
        }
        (on_sigma, on_gamma)
    }

    /// Lumped (barycentric) vertex masses: each cell gives vol/(n+1) to its vertices.
    pub fn lumped_mass(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.vertex_count()];
        let k = (self.intrinsic_dim() + 1) as f64;
        for (c, cell) in self.cells.iter().enumerate() {
            let share = self.geometry[c].volume / k;
            for &v in cell {
                m[v] += share;
            }
        }
        m
    }

    /// Cells incident to each vertex.
    pub fn vertex_cells(&self) -> Vec<Vec<usize>> {
        let mut vc = vec![Vec::new(); self.vertex_count()];
        for (c, cell) in self.cells.iter().enumerate() {
            for &v in cell {
                vc[v].push(c);
            }
        }
        vc
    }

    /// Sorted vertex neighbors (1-ring).
    pub fn vertex_neighbors(&self) -> Vec<Vec<usize>> {
        let mut nb = vec![Vec::new(); self.vertex_count()];
        for cell in &self.cells {
            for &a in cell {
                for &b in cell {
                    if a != b {
                        nb[a].push(b);
                    }
                }
            }
        }
        for l in &mut nb {
            l.sort_unstable();
            l.dedup();
        }
        nb
    }

    /// Component id per vertex (connected through cells) and component count.
    pub fn components(&self) -> (Vec<usize>, usize) {
        let n = self.vertex_count();
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(p: &mut [usize], mut x: usize) -> usize {
            while p[x] != x {
                p[x] = p[p[x]];
                x = p[x];
            }
            x
        }
        for cell in &self.cells {
            let r0 = find(&mut parent, cell[0]);
            for &v in &cell[1..] {
                let r = find(&mut parent, v);
                if r != r0 {
                    parent[r] = r0;
                }
            }
        }
        let mut ids = HashMap::new();
        let mut comp = vec![0; n];
        for (v, c) in comp.iter_mut().enumerate() {
            let r = find(&mut parent, v);
            let next = ids.len();
            *c = *ids.entry(r).or_insert(next);
        }
        let count = ids.len();
        (comp, count)
    }

    /// Outward unit conormal of a boundary face: in the plane of its cell,
    /// orthogonal to the face, pointing away from the cell's opposite vertex.
    pub fn face_conormal(&self, face: &[usize]) -> Option<Vec<f64>> {
        let key = sorted(face);
        let cell = self
            .cells
            .iter()
            .position(|c| key.iter().all(|v| c.contains(v)))?;
        let opposite = self.cells[cell]
            .iter()
            .copied()
            .find(|v| !key.contains(v))?;
        // ∇λ_opposite is normal to the face inside the cell and points toward `opposite`
        let idx = self.cells[cell].iter().position(|&v| v == opposite)?;
        let g = &self.geometry[cell].bary_grads[idx];
        let len = crate::euclid::norm(g);
        Some(g.iter().map(|c| -c / len).collect())
    }

    /// Same connectivity with every vertex mapped by `f`. Exact measures,
    /// frames and support are dropped; callers re-attach what still applies.
    pub fn map_vertices<F: Fn(&[f64]) -> Vec<f64>>(&self, f: F) -> Result<Self> {
        let vertices = self.vertices.iter().map(|v| f(v)).collect();
        Self::new(vertices, self.cells.clone(), self.boundary.clone())
    }

    /// Uniform scaling about the origin; exact values, frames and support follow.
    pub fn scaled(&self, s: f64) -> Result<Self> {
        let n = self.intrinsic_dim() as i32;
        let mut m = self.map_vertices(|v| v.iter().map(|c| c * s).collect())?;
        m.exact = self.exact.map(|e| ExactMeasures {
            volume: e.volume * s.powi(n),
            sigma: e.sigma * s.powi(n - 1),
            gamma: e.gamma * s.powi(n - 1),
            mean_curvature: e.mean_curvature.map(|h| h / s),
        });
        m.frames = self.frames.clone();
        m.support = self
            .support
            .iter()
            .map(|p| match p {
                SupportPiece::Hyperplane { normal, offset } => SupportPiece::Hyperplane {
                    normal: normal.clone(),
                    offset: offset * s,
                },
                SupportPiece::Sphere { center, radius } => SupportPiece::Sphere {
                    center: center.iter().map(|c| c * s).collect(),
                    radius: radius * s,
                },
            })
            .collect();
        m.fixture = self.fixture.clone();
        Ok(m)
    }

    /// Rigid motion `x ↦ R x + t` with `rotation` given row-major (N × N).
    pub fn rigid_motion(&self, rotation: &[Vec<f64>], translation: &[f64]) -> Result<Self> {
        let apply = |v: &[f64]| -> Vec<f64> {
            rotation
                .iter()
                .zip(translation)
                .map(|(row, t)| crate::euclid::dot(row, v) + t)
                .collect()
        };
        let rot = |v: &[f64]| -> Vec<f64> {
            rotation
                .iter()
                .map(|row| crate::euclid::dot(row, v))
                .collect()
        };
        let mut m = self.map_vertices(apply)?;
        m.exact = self.exact;
        m.frames = self.frames.as_ref().map(|fs| {
            fs.iter()
                .map(|f| Frame {
                    tangent: f.tangent.iter().map(|t| rot(t)).collect(),
                    normal: f.normal.iter().map(|t| rot(t)).collect(),
                })
                .collect()
        });
        m.support = self
            .support
            .iter()
            .map(|p| match p {
                SupportPiece::Hyperplane { normal, offset } => {
                    let nn = rot(normal);
                    SupportPiece::Hyperplane {
                        offset: offset + crate::euclid::dot(&nn, translation),
                        normal: nn,
                    }
                }
                SupportPiece::Sphere { center, radius } => SupportPiece::Sphere {
                    center: apply(center),
                    radius: *radius,
                },
            })
            .collect();
        m.fixture = self.fixture.clone();
        Ok(m)
    }

    /// Same geometry with vertices renumbered: new index `perm[old]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        let mut vertices = vec![Vec::new(); self.vertex_count()];
        for (old, v) in self.vertices.iter().enumerate() {
            vertices[perm[old]] = v.clone();
        }
        let cells = self
            .cells
            .iter()
            .map(|c| c.iter().map(|&v| perm[v]).collect())
            .collect();
        let boundary = self
            .boundary
            .iter()
            .map(|b| BoundaryFace {
                face: b.face.iter().map(|&v| perm[v]).collect(),
                label: b.label,
            })
            .collect();
        let mut m = SimplicialMesh::new(vertices, cells, boundary)?;
        m.exact = self.exact;
        m.support = self.support.clone();
        if let Some(fs) = &self.frames {
            let mut nf = fs.clone();
            for (old, f) in fs.iter().enumerate() {
                nf[perm[old]] = f.clone();
            }
            m.frames = Some(nf);
        }
        Ok(m)
    }

    /// The mesh lifted into R^{N+1} by appending a zero coordinate.
    pub fn lifted(&self) -> Result<Self> {
        let mut m = self.map_vertices(|v| {
            let mut w = v.to_vec();
            w.push(0.0);
            w
        })?;
        m.exact = self.exact;
        m.frames = self.frames.as_ref().map(|fs| {
            let dim = self.ambient_dim() + 1;
            fs.iter()
                .map(|f| {
                    let pad = |t: &Vec<f64>| {
                        let mut w = t.clone();
                        w.push(0.0);
                        w
                    };
                    let mut normal: Vec<Vec<f64>> = f.normal.iter().map(pad).collect();
                    let mut e = vec![0.0; dim];
                    e[dim - 1] = 1.0;
                    normal.push(e);
                    Frame {
                        tangent: f.tangent.iter().map(pad).collect(),
                        normal,
                    }
                })
                .collect()
        });
        m.support = self
            .support
            .iter()
            .map(|p| match p {
                SupportPiece::Hyperplane { normal, offset } => {
                    let mut nn = normal.clone();
                    nn.push(0.0);
                    SupportPiece::Hyperplane {
                        normal: nn,
                        offset: *offset,
                    }
                }
                SupportPiece::Sphere { .. } => p.clone(),
            })
            .collect();
        m.fixture = self.fixture.clone();
        Ok(m)
    }
}

fn subsets(cell: &[usize], k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let n = cell.len();
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        let mut s: Vec<usize> = idx.iter().map(|&i| cell[i]).collect();
        s.sort_unstable();
        out.push(s);
        let mut i = k;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if idx[i] != i + n - k {
                break;
            }
            if i == 0 && idx[0] == n - k {
                return out;
            }
        }
        idx[i] += 1;
        for j in i + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}
