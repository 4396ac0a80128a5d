//! P1 finite elements on simplicial meshes: fields, assembly, the Neumann
//! solve with its constant nullspace, and derivative recovery.

use faer::linalg::solvers::Solve;
use faer::sparse::{SparseColMat, Triplet};
use faer::{Mat, Side};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::euclid::{dot, sub};
use crate::mesh::{Frame, Label, SimplicialMesh};
use crate::montecarlo::map_indices;

/// One value per vertex.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ScalarField {
    values: Vec<f64>,
}

impl ScalarField {
    pub fn new(mesh: &SimplicialMesh, values: Vec<f64>) -> Result<Self> {
        if values.len() != mesh.vertex_count() {
            return Err(Error::Domain(format!(
                "field has {} values for {} vertices",
                values.len(),
                mesh.vertex_count()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Domain(format!(
                "field value at vertex {i} is not finite"
            )));
        }
        Ok(ScalarField { values })
    }

    pub fn from_fn<F: Fn(&[f64]) -> f64>(mesh: &SimplicialMesh, f: F) -> Result<Self> {
        Self::new(mesh, mesh.vertices().iter().map(|v| f(v)).collect())
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn max_abs_diff(&self, other: &ScalarField) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// Piecewise-constant gradient of the P1 interpolant, one ambient vector per cell.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientField {
    cells: Vec<Vec<f64>>,
}

impl GradientField {
    pub fn cell(&self, c: usize) -> &[f64] {
        &self.cells[c]
    }

    pub fn cells(&self) -> &[Vec<f64>] {
        &self.cells
    }

    /// Volume-weighted average of incident cell gradients at each vertex.
    pub fn vertex_average(&self, mesh: &SimplicialMesh) -> Vec<Vec<f64>> {
        let dim = mesh.ambient_dim();
        let mut acc = vec![vec![0.0; dim]; mesh.vertex_count()];
        let mut w = vec![0.0; mesh.vertex_count()];
        for (c, cell) in mesh.cells().iter().enumerate() {
            let vol = mesh.geometry(c).volume;
            for &v in cell {
                w[v] += vol;
                for (a, g) in acc[v].iter_mut().zip(&self.cells[c]) {
                    *a += vol * g;
                }
            }
        }
        for (a, wi) in acc.iter_mut().zip(w) {
            a.iter_mut().for_each(|x| *x /= wi);
        }
        acc
    }
}

pub fn gradient(mesh: &SimplicialMesh, field: &ScalarField) -> GradientField {
    let dim = mesh.ambient_dim();
    let cells = mesh
        .cells()
        .iter()
        .enumerate()
        .map(|(c, cell)| {
            let mut g = vec![0.0; dim];
            for (k, &v) in cell.iter().enumerate() {
                for (gi, bi) in g.iter_mut().zip(&mesh.geometry(c).bary_grads[k]) {
                    *gi += field.values[v] * bi;
                }
            }
            g
        })
        .collect();
    GradientField { cells }
}

/// Recovered second derivatives, one symmetric n × n matrix per vertex in
/// the coordinates of that vertex's tangent basis.
#[derive(Debug, Clone)]
pub struct HessianField {
    matrices: Vec<DMatrix<f64>>,
    bases: Vec<DMatrix<f64>>,
    fallback: Vec<bool>,
}

impl HessianField {
    pub fn at(&self, v: usize) -> &DMatrix<f64> {
        &self.matrices[v]
    }

    /// The tangent basis (N × n, orthonormal columns) used at vertex `v`.
    pub fn basis(&self, v: usize) -> &DMatrix<f64> {
        &self.bases[v]
    }

    /// The Hessian at `v` as an ambient N × N matrix `T A Tᵀ`.
    pub fn ambient(&self, v: usize) -> DMatrix<f64> {
        &self.bases[v] * &self.matrices[v] * self.bases[v].transpose()
    }

    pub fn fallback(&self) -> &[bool] {
        &self.fallback
    }

    pub fn fallback_count(&self) -> usize {
        self.fallback.iter().filter(|&&b| b).count()
    }
}

/// Result of a local quadratic fit in tangent coordinates.
#[derive(Debug, Clone)]
pub struct QuadraticFit {
    pub gradient: DVector<f64>,
    pub hessian: DMatrix<f64>,
    pub fallback: bool,
}

/// Vertex patches used for quadratic fits: the 2-ring of every vertex.
#[derive(Debug, Clone)]
pub struct Patches {
    rings: Vec<Vec<usize>>,
}

impl Patches {
    pub fn two_ring(mesh: &SimplicialMesh) -> Self {
        let nb = mesh.vertex_neighbors();
        let rings = (0..mesh.vertex_count())
            .map(|i| {
                let mut r: Vec<usize> = nb[i]
                    .iter()
                    .flat_map(|&j| nb[j].iter().copied())
                    .chain(nb[i].iter().copied())
                    .collect();
                r.sort_unstable();
                r.dedup();
                r.retain(|&j| j != i);
                r
            })
            .collect();
        Patches { rings }
    }

    /// The 2-ring enlarged by every vertex within Euclidean distance
    /// `radius`, collected by a breadth-first walk over mesh edges.
    pub fn with_radius(mesh: &SimplicialMesh, radius: f64) -> Self {
        let mut base = Self::two_ring(mesh);
        if radius <= 0.0 {
            return base;
        }
        let nb = mesh.vertex_neighbors();
        let grown = map_indices(mesh.vertex_count(), |i| {
            let xi = mesh.vertex(i);
            let mut seen = std::collections::HashSet::from([i]);
            let mut frontier = vec![i];
            let mut out = Vec::new();
            while let Some(v) = frontier.pop() {
                for &w in &nb[v] {
                    if seen.insert(w) && crate::euclid::norm(&sub(mesh.vertex(w), xi)) <= radius {
                        out.push(w);
                        frontier.push(w);
                    }
                }
            }
            out
        });
        for (r, g) in base.rings.iter_mut().zip(grown) {
            r.extend(g);
            r.sort_unstable();
            r.dedup();
        }
        base
    }

    pub fn ring(&self, i: usize) -> &[usize] {
        &self.rings[i]
    }
}

/// Least-squares fit of `value(j) − value(i) ≈ g·t + ½ tᵀ A t` over the
/// patch of `i`, with `t = Tᵀ(x_j − x_i)`. Patches with fewer than
/// n(n+3)/2 points get a small ridge on A and are flagged.
pub fn fit_quadratic<F: Fn(usize) -> f64>(
    mesh: &SimplicialMesh,
    patch: &[usize],
    i: usize,
    basis: &DMatrix<f64>,
    value: F,
) -> QuadraticFit {
    let n = basis.ncols();
    let nq = n * (n + 1) / 2;
    let unknowns = n + nq;
    let xi = mesh.vertex(i);
    let f0 = value(i);
    let ts: Vec<DVector<f64>> = patch
        .iter()
        .map(|&j| basis.transpose() * DVector::from_vec(sub(mesh.vertex(j), xi)))
        .collect();
    let scale = ts
        .iter()
        .map(|t| t.norm())
        .fold(0.0, f64::max)
        .max(f64::MIN_POSITIVE);
    let mut a = DMatrix::zeros(patch.len(), unknowns);
    let mut b = DVector::zeros(patch.len());
    for (r, (t, &j)) in ts.iter().zip(patch).enumerate() {
        let s = t / scale;
        for k in 0..n {
            a[(r, k)] = s[k];
        }
        let mut col = n;
        for p in 0..n {
            for q in p..n {
                a[(r, col)] = if p == q {
                    0.5 * s[p] * s[p]
                } else {
                    s[p] * s[q]
                };
                col += 1;
            }
        }
        b[r] = value(j) - f0;
    }
    let fallback = patch.len() < unknowns;
    let mut ata = a.transpose() * &a;
    let atb = a.transpose() * b;
    if fallback {
        let ridge = 1e-8 * ata.diagonal().max().max(1.0);
        for k in n..unknowns {
            ata[(k, k)] += ridge;
        }
    }
    let sol = ata
        .clone()
        .cholesky()
        .map(|c| c.solve(&atb))
        .unwrap_or_else(|| {
            ata.svd(true, true)
                .solve(&atb, 1e-14)
                .unwrap_or_else(|_| DVector::zeros(unknowns))
        });
    let gradient = DVector::from_fn(n, |k, _| sol[k] / scale);
    let mut hessian = DMatrix::zeros(n, n);
    let mut col = n;
    for p in 0..n {
        for q in p..n {
            hessian[(p, q)] = sol[col] / (scale * scale);
            hessian[(q, p)] = hessian[(p, q)];
            col += 1;
        }
    }
    QuadraticFit {
        gradient,
        hessian,
        fallback,
    }
}

/// Orthonormal tangent basis per vertex: the frame's tangent vectors when
/// given, otherwise the standard basis (codimension 0 only).
pub fn tangent_bases(mesh: &SimplicialMesh, frames: Option<&[Frame]>) -> Result<Vec<DMatrix<f64>>> {
    let dim = mesh.ambient_dim();
    let n = mesh.intrinsic_dim();
    match frames {
        Some(fs) => Ok(fs
            .iter()
            .map(|f| DMatrix::from_fn(dim, n, |r, c| f.tangent[c][r]))
            .collect()),
        None if n == dim => Ok(vec![DMatrix::identity(dim, dim); mesh.vertex_count()]),
        None => Err(Error::Precondition(
            "tangent frames are required for Hessian recovery on submanifolds".into(),
        )),
    }
}

/// Recover second derivatives of `field` by 2-ring quadratic fits.
pub fn hessian_recover(
    mesh: &SimplicialMesh,
    field: &ScalarField,
    frames: Option<&[Frame]>,
) -> Result<HessianField> {
    hessian_recover_with(mesh, field, frames, 0.0)
}

/// As [`hessian_recover`], with patches enlarged to at least `radius`.
/// Nodal errors of size ε perturb a fit over radius r by about ε/r², so a
/// radius shrinking slower than h keeps the recovered Hessian convergent.
pub fn hessian_recover_with(
    mesh: &SimplicialMesh,
    field: &ScalarField,
    frames: Option<&[Frame]>,
    radius: f64,
) -> Result<HessianField> {
    let bases = tangent_bases(mesh, frames)?;
    let patches = Patches::with_radius(mesh, radius);
    let fits = map_indices(mesh.vertex_count(), |i| {
        fit_quadratic(mesh, patches.ring(i), i, &bases[i], |j| field.values[j])
    });
    Ok(HessianField {
        fallback: fits.iter().map(|f| f.fallback).collect(),
        matrices: fits.into_iter().map(|f| f.hessian).collect(),
        bases,
    })
}

/// Symmetric stiffness matrix `∫ w ∇φ_i·∇φ_j` as merged triplets.
pub fn stiffness(mesh: &SimplicialMesh, cell_weight: Option<&[f64]>) -> Vec<(usize, usize, f64)> {
    let mut trip = Vec::new();
    for (c, cell) in mesh.cells().iter().enumerate() {
        let g = mesh.geometry(c);
        let w = cell_weight.map_or(1.0, |w| w[c]) * g.volume;
        for (a, &va) in cell.iter().enumerate() {
            for (b, &vb) in cell.iter().enumerate() {
                trip.push((va, vb, w * dot(&g.bary_grads[a], &g.bary_grads[b])));
            }
        }
    }
    merge(trip)
}

fn merge(mut trip: Vec<(usize, usize, f64)>) -> Vec<(usize, usize, f64)> {
    trip.sort_unstable_by_key(|&(i, j, _)| (j, i));
    let mut out: Vec<(usize, usize, f64)> = Vec::with_capacity(trip.len() / 4);
    for (i, j, v) in trip {
        match out.last_mut() {
            Some(last) if last.0 == i && last.1 == j => last.2 += v,
            _ => out.push((i, j, v)),
        }
    }
    out
}

pub fn apply(matrix: &[(usize, usize, f64)], x: &[f64]) -> Vec<f64> {
    let mut y = vec![0.0; x.len()];
    for &(i, j, v) in matrix {
        y[i] += v * x[j];
    }
    y
}

/// Load vector `∫_Σ φ_i` (exact for P1).
pub fn sigma_load(mesh: &SimplicialMesh) -> Vec<f64> {
    let mut b = vec![0.0; mesh.vertex_count()];
    for bf in mesh.boundary() {
        if bf.label == Label::Sigma {
            let share = mesh.face_measure(&bf.face) / bf.face.len() as f64;
            for &v in &bf.face {
                b[v] += share;
            }
        }
    }
    b
}

/// Outcome of a pure Neumann solve.
#[derive(Debug, Clone)]
pub struct NeumannSolution {
    pub field: ScalarField,
    /// ‖K u − b‖∞ / max(‖b‖∞, ‖K‖max ‖u‖∞) after the compatibility projection.
    pub residual: f64,
    /// Largest per-component |Σ b_i| before projection.
    pub compatibility_defect: f64,
}

/// Solve `K u = b` for the (weighted) stiffness K, whose kernel is the
/// constants on each connected component. The load is made compatible by
/// removing its per-component mass-weighted mean; the solution is returned
/// with lumped-mass mean zero on every component.
pub fn solve_neumann(
    mesh: &SimplicialMesh,
    cell_weight: Option<&[f64]>,
    load: &[f64],
) -> Result<NeumannSolution> {
    let nv = mesh.vertex_count();
    if load.len() != nv {
        return Err(Error::Domain(
            "load length does not match vertex count".into(),
        ));
    }
    let (comp, ncomp) = mesh.components();
    let mass = mesh.lumped_mass();
    let mut defect = vec![0.0; ncomp];
    let mut cmass = vec![0.0; ncomp];
    for v in 0..nv {
        defect[comp[v]] += load[v];
        cmass[comp[v]] += mass[v];
    }
    let b: Vec<f64> = (0..nv)
        .map(|v| load[v] - defect[comp[v]] * mass[v] / cmass[comp[v]])
        .collect();
    let mut pinned = vec![false; nv];
    let mut seen = vec![false; ncomp];
    for v in 0..nv {
        if !seen[comp[v]] {
            seen[comp[v]] = true;
            pinned[v] = true;
        }
    }
    let k = stiffness(mesh, cell_weight);
    let mut trip: Vec<Triplet<usize, usize, f64>> = k
        .iter()
        .filter(|&&(i, j, _)| !pinned[i] && !pinned[j])
        .map(|&(i, j, v)| Triplet::new(i, j, v))
        .collect();
    trip.extend(
        (0..nv)
            .filter(|&v| pinned[v])
            .map(|v| Triplet::new(v, v, 1.0)),
    );
    let a = SparseColMat::<usize, f64>::try_new_from_triplets(nv, nv, &trip)
        .map_err(|e| Error::Solver(format!("{e:?}")))?;
    let llt = a.sp_cholesky(Side::Lower).map_err(|e| {
        Error::Solver(format!(
            "stiffness is singular beyond its constant kernel: {e:?}"
        ))
    })?;
    let rhs = Mat::<f64>::from_fn(nv, 1, |i, _| if pinned[i] { 0.0 } else { b[i] });
    let x = llt.solve(&rhs);
    let mut u: Vec<f64> = (0..nv).map(|i| x[(i, 0)]).collect();
    let mut mean = vec![0.0; ncomp];
    for v in 0..nv {
        mean[comp[v]] += mass[v] * u[v];
    }
    for v in 0..nv {
        u[v] -= mean[comp[v]] / cmass[comp[v]];
    }
    let ku = apply(&k, &u);
    // relative to the larger of ‖b‖ and ‖K‖‖u‖ (u floored at 1e-12), so rounding in a vanishing load is not amplified
    let kmax = k.iter().map(|t| t.2.abs()).fold(0.0, f64::max);
    let umax = u.iter().map(|x| x.abs()).fold(0.0, f64::max);
    let scale = b
        .iter()
        .map(|x| x.abs())
        .fold(0.0, f64::max)
        .max(kmax * umax.max(1e-12))
        .max(f64::MIN_POSITIVE);
    let residual = ku
        .iter()
        .zip(&b)
        .map(|(a, c)| (a - c).abs())
        .fold(0.0, f64::max)
        / scale;
    if !(residual <= 1e-8) {
        return Err(Error::Solver(format!(
            "linear solve residual {residual:e} too large"
        )));
    }
    Ok(NeumannSolution {
        field: ScalarField::new(mesh, u)?,
        residual,
        compatibility_defect: defect.iter().map(|d| d.abs()).fold(0.0, f64::max),
    })
}

/// Integral of a P1 field with lumped (exact for P1) mass.
pub fn integrate(mesh: &SimplicialMesh, values: &[f64]) -> f64 {
    mesh.lumped_mass()
        .iter()
        .zip(values)
        .map(|(m, v)| m * v)
        .sum()
}
