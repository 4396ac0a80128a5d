//! Embedded submanifolds of codimension ≥ 1: frames, discrete curvature,
//! the Neumann problem `Δu = n − |H|`, quotient evaluation, the transport
//! map Φ(x, y) = ∇u(x) + y and its Jacobian, and the Michael–Simon
//! functional.
//!
//! Sign convention: H is the trace of the vector-valued second fundamental
//! form, so `Δ_M x = H` and the unit sphere has |H| = 2 with H pointing
//! inward.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::abp::Quotient;
use crate::error::{Error, Result};
use crate::euclid::{ball_volume, brendle_constant, dot, norm, sphere_area, sub, SampleStream};
use crate::fem::{
    apply, fit_quadratic, gradient, hessian_recover_with, sigma_load, solve_neumann, stiffness,
    HessianField, Patches, ScalarField,
};
use crate::mesh::{Frame, Label, SimplicialMesh};
use crate::montecarlo::{map_chunks, map_indices, MeasureEstimate};

/// Curvature convention stated in every report.
pub const MEAN_CURVATURE_CONVENTION: &str =
    "H = trace of the second fundamental form (sum of principal curvatures), Δx = H";

/// Per-vertex frames by PCA of the incident cells' tangent projectors.
pub fn estimate_frames(mesh: &SimplicialMesh) -> Vec<Frame> {
    let dim = mesh.ambient_dim();
    let n = mesh.intrinsic_dim();
    let vc = mesh.vertex_cells();
    map_indices(mesh.vertex_count(), |v| {
        let mut p = DMatrix::<f64>::zeros(dim, dim);
        for &c in &vc[v] {
            let cell = mesh.cell(c);
            let x0 = mesh.vertex(cell[0]);
            let e = DMatrix::from_fn(dim, n, |r, k| mesh.vertex(cell[k + 1])[r] - x0[r]);
            let q = e.qr().q();
            p += mesh.geometry(c).volume * &q * q.transpose();
        }
        let eig = SymmetricEigen::new(p);
        let mut order: Vec<usize> = (0..dim).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
        let col = |k: usize| {
            eig.eigenvectors
                .column(order[k])
                .iter()
                .copied()
                .collect::<Vec<f64>>()
        };
        Frame {
            tangent: (0..n).map(col).collect(),
            normal: (n..dim).map(col).collect(),
        }
    })
}

/// The mesh's own frames, or PCA frames when none are attached.
pub fn frames_of(mesh: &SimplicialMesh) -> Vec<Frame> {
    mesh.frames()
        .map(|f| f.to_vec())
        .unwrap_or_else(|| estimate_frames(mesh))
}

#[derive(Debug, Clone)]
pub struct CurvatureData {
    /// Mean curvature vector per vertex (ambient coordinates).
    pub mean_curvature: Vec<Vec<f64>>,
    /// Π^α per vertex and normal direction, in the vertex tangent frame.
    pub second_fundamental_form: Vec<Vec<DMatrix<f64>>>,
    pub frames: Vec<Frame>,
    pub fallback: Vec<bool>,
}

impl CurvatureData {
    /// Flat data (H = 0, Π = 0) with the given frames.
    pub fn flat(mesh: &SimplicialMesh, frames: Vec<Frame>) -> Self {
        let (n, m) = (mesh.intrinsic_dim(), mesh.codim());
        CurvatureData {
            mean_curvature: vec![vec![0.0; mesh.ambient_dim()]; mesh.vertex_count()],
            second_fundamental_form: vec![vec![DMatrix::zeros(n, n); m]; mesh.vertex_count()],
            frames,
            fallback: vec![false; mesh.vertex_count()],
        }
    }

    pub fn mean_curvature_norms(&self) -> Vec<f64> {
        self.mean_curvature.iter().map(|h| norm(h)).collect()
    }

    /// Curvature of the mesh scaled by `s`.
    pub fn scaled(&self, s: f64) -> Self {
        CurvatureData {
            mean_curvature: self
                .mean_curvature
                .iter()
                .map(|h| h.iter().map(|c| c / s).collect())
                .collect(),
            second_fundamental_form: self
                .second_fundamental_form
                .iter()
                .map(|v| v.iter().map(|p| p / s).collect())
                .collect(),
            frames: self.frames.clone(),
            fallback: self.fallback.clone(),
        }
    }

    /// max over vertices and normals of |tr Π^α − ⟨H, e_α⟩|, skipping `skip`.
    pub fn trace_defect(&self, skip: &[bool]) -> f64 {
        let mut worst = 0.0f64;
        for (v, pis) in self.second_fundamental_form.iter().enumerate() {
            if skip[v] {
                continue;
            }
            for (pi, e) in pis.iter().zip(&self.frames[v].normal) {
                worst = worst.max((pi.trace() - dot(&self.mean_curvature[v], e)).abs());
            }
        }
        worst
    }
}

fn tangent_matrix(f: &Frame, dim: usize) -> DMatrix<f64> {
    DMatrix::from_fn(dim, f.tangent.len(), |r, c| f.tangent[c][r])
}

fn project_tangent(f: &Frame, x: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; x.len()];
    for e in &f.tangent {
        let c = dot(e, x);
        out.iter_mut().zip(e).for_each(|(o, ei)| *o += c * ei);
    }
    out
}

/// Π from quadratic fits of the normal heights over 2-ring patches, and
/// H as its trace.
pub fn curvature(mesh: &SimplicialMesh) -> Result<CurvatureData> {
    curvature_with(mesh, frames_of(mesh), 0.0)
}

/// As [`curvature`] with explicit frames and patches enlarged to `radius`.
pub fn curvature_with(
    mesh: &SimplicialMesh,
    frames: Vec<Frame>,
    radius: f64,
) -> Result<CurvatureData> {
    let dim = mesh.ambient_dim();
    let nv = mesh.vertex_count();
    if frames.len() != nv {
        return Err(Error::Precondition(
            "one frame per vertex is required".into(),
        ));
    }
    if mesh.codim() == 0 {
        return Ok(CurvatureData::flat(mesh, frames));
    }
    let patches = Patches::with_radius(mesh, radius);
    let fits = map_indices(nv, |i| {
        let t = tangent_matrix(&frames[i], dim);
        let xi = mesh.vertex(i);
        frames[i]
            .normal
            .iter()
            .map(|e| {
                fit_quadratic(mesh, patches.ring(i), i, &t, |j| {
                    dot(&sub(mesh.vertex(j), xi), e)
                })
            })
            .collect::<Vec<_>>()
    });
    let mean_curvature = fits
        .iter()
        .zip(&frames)
        .map(|(fs, f)| {
            let mut h = vec![0.0; dim];
            for (q, e) in fs.iter().zip(&f.normal) {
                let tr = q.hessian.trace();
                h.iter_mut().zip(e).for_each(|(hi, ei)| *hi += tr * ei);
            }
            h
        })
        .collect();
    Ok(CurvatureData {
        fallback: fits.iter().map(|f| f.iter().any(|q| q.fallback)).collect(),
        second_fundamental_form: fits
            .into_iter()
            .map(|f| f.into_iter().map(|q| q.hessian).collect())
            .collect(),
        mean_curvature,
        frames,
    })
}

/// `Δ_M x` from the cotangent stiffness with lumped mass and the boundary
/// conormal flux restored. Consistent in the weak sense only: its integral
/// against test functions converges, its vertex values need not.
pub fn laplacian_mean_curvature(mesh: &SimplicialMesh) -> Vec<Vec<f64>> {
    let dim = mesh.ambient_dim();
    let nv = mesh.vertex_count();
    let k = stiffness(mesh, None);
    let mass = mesh.lumped_mass();
    let mut flux = vec![vec![0.0; dim]; nv];
    for bf in mesh.boundary() {
        let Some(nu) = mesh.face_conormal(&bf.face) else {
            continue;
        };
        let share = mesh.face_measure(&bf.face) / bf.face.len() as f64;
        for &v in &bf.face {
            flux[v]
                .iter_mut()
                .zip(&nu)
                .for_each(|(f, c)| *f += share * c);
        }
    }
    let mut hvec = vec![vec![0.0; dim]; nv];
    for d in 0..dim {
        let coord: Vec<f64> = mesh.vertices().iter().map(|x| x[d]).collect();
        let kx = apply(&k, &coord);
        for v in 0..nv {
            hvec[v][d] = (flux[v][d] - kx[v]) / mass[v];
        }
    }
    hvec
}

/// `∫_M |H|` with lumped mass.
pub fn total_mean_curvature(mesh: &SimplicialMesh, curv: &CurvatureData) -> f64 {
    mesh.lumped_mass()
        .iter()
        .zip(&curv.mean_curvature)
        .map(|(m, h)| m * norm(h))
        .sum()
}

/// Rescale so that `|Σ| + ∫|H| = n|M|`; returns the scaled mesh, its
/// curvature and `s = (|Σ| + ∫|H|)/(n|M|)`.
pub fn normalize_submanifold(
    mesh: &SimplicialMesh,
    curv: &CurvatureData,
) -> Result<(SimplicialMesh, CurvatureData, f64)> {
    let m = mesh.measures();
    let left = m.sigma + total_mean_curvature(mesh, curv);
    if !(left > 0.0) {
        return Err(Error::Precondition(
            "normalization needs |Σ| + ∫|H| > 0".into(),
        ));
    }
    let s = left / (mesh.intrinsic_dim() as f64 * m.volume);
    Ok((mesh.scaled(s)?, curv.scaled(s), s))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SubmanifoldSolution {
    pub field: ScalarField,
    pub residual: f64,
    /// `|n|M| − ∫|H| − |Σ||`.
    pub compatibility_residual: f64,
}

/// P1 solve of `Δu = n − |H|`, flux 1 on Σ and 0 on Γ, lumped mean zero.
pub fn solve_submanifold_neumann(
    mesh: &SimplicialMesh,
    curv: &CurvatureData,
) -> Result<SubmanifoldSolution> {
    let n = mesh.intrinsic_dim() as f64;
    let m = mesh.measures();
    let hint = total_mean_curvature(mesh, curv);
    let defect = n * m.volume - hint - m.sigma;
    if defect.abs() > 1e-8 * (m.sigma + hint).max(m.volume) {
        return Err(Error::Precondition(format!(
            "compatibility defect n|M| − ∫|H| − |Σ| = {defect:e}; normalize the submanifold first"
        )));
    }
    let mass = mesh.lumped_mass();
    let load: Vec<f64> = sigma_load(mesh)
        .iter()
        .zip(&mass)
        .zip(&curv.mean_curvature)
        .map(|((b, w), h)| b - (n - norm(h)) * w)
        .collect();
    let sol = solve_neumann(mesh, None, &load)?;
    if sol.residual > 1e-10 {
        return Err(Error::Solver(format!(
            "solver residual {:e} above 1e-10",
            sol.residual
        )));
    }
    Ok(SubmanifoldSolution {
        field: sol.field,
        residual: sol.residual,
        compatibility_residual: defect.abs(),
    })
}

fn quotient(
    lhs: f64,
    factor: f64,
    b: f64,
    volume: f64,
    n: usize,
    relative: bool,
) -> Result<Quotient> {
    let nf = n as f64;
    let rhs = factor * b * (volume / ball_volume(n)?).powf((nf - 1.0) / nf);
    Ok(Quotient {
        lhs,
        rhs,
        ratio: lhs / rhs,
        relative,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubmanifoldQuotient {
    /// `(|Σ| + ∫|H|)/|∂𝔹^n|` against `(½)^{1/n} b_{n,m} (|M|/|𝔹^n|)^{(n−1)/n}`.
    pub relative: Quotient,
    /// Without the factor ½, reported when Γ = ∅.
    pub closed: Option<Quotient>,
    /// `|Σ|` alone on the left, reported when H vanishes.
    pub minimal: Option<Quotient>,
    pub mean_curvature_integral: f64,
}

pub fn quotient_report(mesh: &SimplicialMesh, curv: &CurvatureData) -> Result<SubmanifoldQuotient> {
    let n = mesh.intrinsic_dim();
    let m = mesh.measures();
    let b = brendle_constant(n, mesh.codim().max(1))?;
    let hint = total_mean_curvature(mesh, curv);
    let lhs = (m.sigma + hint) / sphere_area(n)?;
    let half = 0.5f64.powf(1.0 / n as f64);
    let scale = m.volume.powf(1.0 / n as f64);
    let hmax = curv.mean_curvature_norms().into_iter().fold(0.0, f64::max);
    Ok(SubmanifoldQuotient {
        relative: quotient(lhs, half, b, m.volume, n, true)?,
        closed: if m.gamma == 0.0 {
            Some(quotient(lhs, 1.0, b, m.volume, n, false)?)
        } else {
            None
        },
        minimal: if hmax * scale <= 1e-9 {
            Some(quotient(
                m.sigma / sphere_area(n)?,
                half,
                b,
                m.volume,
                n,
                true,
            )?)
        } else {
            None
        },
        mean_curvature_integral: hint,
    })
}

/// Tolerances of the Φ checks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhiTolerances {
    /// Accept only if the tangential residual `|ξ^T − ∇u(q)|` is at most this.
    pub gradient: f64,
    /// Positivity gate `∇²u − ⟨Π, y⟩ ⪰ −delta`.
    pub delta: f64,
    pub recovery_radius: f64,
}

impl PhiTolerances {
    /// Defaults with h the largest cell diameter: gradient `0.6 h`,
    /// delta `10 h`, recovery radius `0.7 √(h ℓ)` with ℓ = |M|^{1/n}.
    pub fn for_mesh(mesh: &SimplicialMesh) -> Self {
        let h = mesh.mesh_size();
        let ell = mesh
            .measures()
            .volume
            .powf(1.0 / mesh.intrinsic_dim() as f64);
        PhiTolerances {
            gradient: 0.6 * h,
            delta: 10.0 * h,
            recovery_radius: 0.7 * (h * ell).sqrt(),
        }
    }
}

/// A normalized submanifold with its solution and the derived fields.
#[derive(Debug, Clone)]
pub struct SolvedSubmanifold {
    pub mesh: SimplicialMesh,
    pub curvature: CurvatureData,
    pub solution: SubmanifoldSolution,
    /// Tangential vertex gradients (ambient vectors).
    pub vertex_gradients: Vec<Vec<f64>>,
    pub hessian: HessianField,
    pub on_sigma: Vec<bool>,
    pub on_gamma: Vec<bool>,
    pub mass: Vec<f64>,
    pub tolerances: PhiTolerances,
    /// Scale factor applied by normalization.
    pub scale: f64,
}

impl SolvedSubmanifold {
    /// Normalize, solve and recover derivatives with default tolerances.
    pub fn solve(mesh: &SimplicialMesh) -> Result<Self> {
        let curv = curvature(mesh)?;
        let (scaled, curv, s) = normalize_submanifold(mesh, &curv)?;
        let tol = PhiTolerances::for_mesh(&scaled);
        Self::solve_normalized(scaled, curv, tol, s)
    }

    pub fn solve_normalized(
        mesh: SimplicialMesh,
        curvature: CurvatureData,
        tolerances: PhiTolerances,
        scale: f64,
    ) -> Result<Self> {
        let solution = solve_submanifold_neumann(&mesh, &curvature)?;
        Self::from_solution(mesh, curvature, solution, tolerances, scale)
    }

    /// Derived fields for an arbitrary solution on `mesh`.
    pub fn from_solution(
        mesh: SimplicialMesh,
        curvature: CurvatureData,
        solution: SubmanifoldSolution,
        tolerances: PhiTolerances,
        scale: f64,
    ) -> Result<Self> {
        let vertex_gradients = gradient(&mesh, &solution.field)
            .vertex_average(&mesh)
            .iter()
            .zip(&curvature.frames)
            .map(|(g, f)| project_tangent(f, g))
            .collect();
        let hessian = hessian_recover_with(
            &mesh,
            &solution.field,
            Some(&curvature.frames),
            tolerances.recovery_radius,
        )?;
        let (on_sigma, on_gamma) = mesh.vertex_labels();
        let mass = mesh.lumped_mass();
        Ok(SolvedSubmanifold {
            mesh,
            curvature,
            solution,
            vertex_gradients,
            hessian,
            on_sigma,
            on_gamma,
            mass,
            tolerances,
            scale,
        })
    }

    pub fn u(&self) -> &[f64] {
        self.solution.field.values()
    }

    /// `∇²u(x) − ⟨Π_x, y⟩` for y given by its normal-frame coordinates.
    pub fn jacobian_matrix(&self, x: usize, y: &[f64]) -> DMatrix<f64> {
        let mut a = self.hessian.at(x).clone();
        for (pi, c) in self.curvature.second_fundamental_form[x].iter().zip(y) {
            a -= pi * *c;
        }
        a
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum PhiStatus {
    InteriorContact,
    FreeBoundaryContact,
    RejectSigma,
    /// Minimizer at a vertex where Σ meets Γ.
    RejectCorner,
    RejectGradient,
    RejectPositivity,
}

impl PhiStatus {
    pub fn accepted(self) -> bool {
        matches!(
            self,
            PhiStatus::InteriorContact | PhiStatus::FreeBoundaryContact
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhiVerdict {
    pub status: PhiStatus,
    pub witness: usize,
    /// `|ξ^T − ∇u(q)|`.
    pub tangential_residual: f64,
    /// Normal part of ξ in the witness's normal frame.
    pub y: Vec<f64>,
    pub min_eigenvalue: f64,
}

/// Classify ξ (`t_gate ≤ |ξ| < 1`) by the vertex minimizer q of `u − ⟨ξ, ·⟩`.
pub fn phi_membership(xi: &[f64], solved: &SolvedSubmanifold, t_gate: f64) -> Result<PhiVerdict> {
    let mesh = &solved.mesh;
    if xi.len() != mesh.ambient_dim() {
        return Err(Error::Domain("ξ has the wrong dimension".into()));
    }
    let r = norm(xi);
    if !(r >= t_gate && r < 1.0) {
        return Err(Error::Precondition(format!(
            "|ξ| = {r} must lie in [{t_gate}, 1)"
        )));
    }
    Ok(classify_xi(xi, solved, solved.tolerances.gradient))
}

/// The membership verdict without the range precondition, with an explicit
/// tangential tolerance.
pub fn classify_xi(xi: &[f64], solved: &SolvedSubmanifold, gradient_tol: f64) -> PhiVerdict {
    let q = crate::abp::argmin_tilted(&solved.mesh, solved.u(), xi);
    let frame = &solved.curvature.frames[q];
    let xt = project_tangent(frame, xi);
    let residual = norm(&sub(&xt, &solved.vertex_gradients[q]));
    let y: Vec<f64> = frame.normal.iter().map(|e| dot(e, xi)).collect();
    let min_eigenvalue = SymmetricEigen::new(solved.jacobian_matrix(q, &y))
        .eigenvalues
        .min();
    let status = if solved.on_sigma[q] && solved.on_gamma[q] {
        PhiStatus::RejectCorner
    } else if solved.on_sigma[q] {
        PhiStatus::RejectSigma
    } else if residual > gradient_tol {
        PhiStatus::RejectGradient
    } else if min_eigenvalue < -solved.tolerances.delta {
        PhiStatus::RejectPositivity
    } else if solved.on_gamma[q] {
        PhiStatus::FreeBoundaryContact
    } else {
        PhiStatus::InteriorContact
    };
    PhiVerdict {
        status,
        witness: q,
        tangential_residual: residual,
        y,
        min_eigenvalue,
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct PhiCounts {
    pub interior_contact: usize,
    pub free_boundary_contact: usize,
    pub reject_sigma: usize,
    pub reject_corner: usize,
    pub reject_gradient: usize,
    pub reject_positivity: usize,
}

impl PhiCounts {
    pub fn record(&mut self, s: PhiStatus) {
        match s {
            PhiStatus::InteriorContact => self.interior_contact += 1,
            PhiStatus::FreeBoundaryContact => self.free_boundary_contact += 1,
            PhiStatus::RejectSigma => self.reject_sigma += 1,
            PhiStatus::RejectCorner => self.reject_corner += 1,
            PhiStatus::RejectGradient => self.reject_gradient += 1,
            PhiStatus::RejectPositivity => self.reject_positivity += 1,
        }
    }

    pub fn add(&mut self, o: &PhiCounts) {
        self.interior_contact += o.interior_contact;
        self.free_boundary_contact += o.free_boundary_contact;
        self.reject_sigma += o.reject_sigma;
        self.reject_corner += o.reject_corner;
        self.reject_gradient += o.reject_gradient;
        self.reject_positivity += o.reject_positivity;
    }

    pub fn accepted(&self) -> usize {
        self.interior_contact + self.free_boundary_contact
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VolumeBound {
    pub t: f64,
    /// Estimate of |Φ(∪_{ρ∈(t,1)} ∂A_ρ)|.
    pub shell_measure: MeasureEstimate,
    /// `½|𝔹^N|(1 − t^N)` (no ½ when Γ = ∅).
    pub lower: f64,
    /// `(m/2)(1 − t²)|𝔹^m||M|`.
    pub upper: f64,
    pub lower_margin: f64,
    pub upper_margin: f64,
    pub counts: PhiCounts,
    pub relative: bool,
}

/// Shell-sampled transport-image measure against both sides of the
/// sandwich. Needs codimension m ≥ 2 (lift m = 1 meshes first).
pub fn volume_bound_check(
    solved: &SolvedSubmanifold,
    samples: usize,
    stream: &SampleStream,
    t: f64,
) -> Result<VolumeBound> {
    let mesh = &solved.mesh;
    let (dim, m) = (mesh.ambient_dim(), mesh.codim());
    if m < 2 {
        return Err(Error::Precondition(
            "volume bound needs codimension ≥ 2; lift the mesh first".into(),
        ));
    }
    if !(0.0..1.0).contains(&t) {
        return Err(Error::Domain(format!(
            "shell parameter t = {t} must lie in [0, 1)"
        )));
    }
    let chunks = map_chunks(samples, stream, |s, count| -> Result<PhiCounts> {
        let mut c = PhiCounts::default();
        for _ in 0..count {
            let xi = s.shell_vector(dim, t);
            c.record(phi_membership(&xi, solved, t)?.status);
        }
        Ok(c)
    });
    let mut counts = PhiCounts::default();
    for c in chunks {
        counts.add(&c?);
    }
    let shell = ball_volume(dim)? * (1.0 - t.powi(dim as i32));
    let est = MeasureEstimate::from_hits(counts.accepted(), samples, shell, stream.seed());
    let relative = mesh.measures().gamma > 0.0;
    let lower = if relative { 0.5 * shell } else { shell };
    let upper = 0.5 * m as f64 * (1.0 - t * t) * ball_volume(m)? * mesh.measures().volume;
    Ok(VolumeBound {
        t,
        lower_margin: est.value - lower,
        upper_margin: upper - est.value,
        shell_measure: est,
        lower,
        upper,
        counts,
        relative,
    })
}

/// `|M| ≥ ½ N|𝔹^N| / (m|𝔹^m|)` (without ½ when `relative` is false).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MassBound {
    pub volume: f64,
    pub bound: f64,
    pub margin: f64,
}

pub fn mass_bound(volume: f64, n: usize, m: usize, relative: bool) -> Result<MassBound> {
    let dim = n + m;
    let full = dim as f64 * ball_volume(dim)? / (m as f64 * ball_volume(m)?);
    let bound = if relative { 0.5 * full } else { full };
    Ok(MassBound {
        volume,
        bound,
        margin: volume - bound,
    })
}

/// The mass bound evaluated on analytic fixture values after the exact
/// normalization `s = (|Σ| + |H||M|)/(n|M|)`; `None` without metadata.
pub fn analytic_mass_bound(mesh: &SimplicialMesh) -> Result<Option<MassBound>> {
    let Some(e) = mesh.exact() else {
        return Ok(None);
    };
    let Some(h) = e.mean_curvature else {
        return Ok(None);
    };
    let n = mesh.intrinsic_dim();
    let s = (e.sigma + h * e.volume) / (n as f64 * e.volume);
    let m = mesh.codim().max(2);
    mass_bound(e.volume * s.powi(n as i32), n, m, e.gamma > 0.0).map(Some)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JacobianReport {
    pub samples: usize,
    /// Samples passing the positivity gate.
    pub gated: usize,
    pub min_det: f64,
    pub max_det: f64,
    /// Fraction of gated samples outside `[−δ, 1 + δ]`.
    pub outside_fraction: f64,
    /// Fraction of gated samples with `|det − 1| ≤ 0.05`.
    pub near_one_fraction: f64,
    pub delta: f64,
}

/// Sample (x, y): x a non-Σ vertex drawn by lumped mass with |∇u(x)| < 1,
/// y uniform in the normal ball of radius `√(1 − |∇u(x)|²)`.
pub fn jacobian_bound_samples(
    solved: &SolvedSubmanifold,
    samples: usize,
    stream: &SampleStream,
) -> Result<JacobianReport> {
    let mesh = &solved.mesh;
    let m = mesh.codim();
    let delta = solved.tolerances.delta;
    let eligible: Vec<usize> = (0..mesh.vertex_count())
        .filter(|&v| !solved.on_sigma[v] && norm(&solved.vertex_gradients[v]) < 1.0)
        .collect();
    if eligible.is_empty() {
        return Err(Error::Precondition("no vertex with |∇u| < 1 off Σ".into()));
    }
    let mut cumulative = Vec::with_capacity(eligible.len());
    let mut acc = 0.0;
    for &v in &eligible {
        acc += solved.mass[v];
        cumulative.push(acc);
    }
    let chunks = map_chunks(samples, stream, |s, count| {
        let mut dets = Vec::with_capacity(count);
        for _ in 0..count {
            let r = s.uniform() * acc;
            let x = eligible[cumulative
                .partition_point(|&c| c < r)
                .min(eligible.len() - 1)];
            let radius = (1.0 - norm(&solved.vertex_gradients[x]).powi(2)).sqrt();
            let y: Vec<f64> = s.ball_vector(m).iter().map(|c| c * radius).collect();
            let a = solved.jacobian_matrix(x, &y);
            let eig = SymmetricEigen::new(a).eigenvalues;
            if eig.min() >= -delta {
                dets.push(eig.iter().product::<f64>());
            }
        }
        dets
    });
    let dets: Vec<f64> = chunks.into_iter().flatten().collect();
    let gated = dets.len();
    let frac = |p: &dyn Fn(f64) -> bool| {
        if gated == 0 {
            0.0
        } else {
            dets.iter().filter(|&&d| p(d)).count() as f64 / gated as f64
        }
    };
    Ok(JacobianReport {
        samples,
        gated,
        min_det: dets.iter().copied().fold(f64::INFINITY, f64::min),
        max_det: dets.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        outside_fraction: frac(&|d| d < -delta || d > 1.0 + delta),
        near_one_fraction: frac(&|d| (d - 1.0).abs() <= 0.05),
        delta,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MichaelSimon {
    pub lhs: f64,
    pub rhs: f64,
    /// lhs/rhs, or exactly 1 when both sides vanish.
    pub ratio: f64,
    pub degenerate: bool,
}

/// `∫(|∇f| + |H| f)/|∂𝔹^n|` against
/// `(½)^{1/n} b_{n,m} (∫ f^{n/(n−1)} / |𝔹^n|)^{(n−1)/n}` (no ½ when Γ = ∅).
pub fn michael_simon_eval(
    mesh: &SimplicialMesh,
    curv: &CurvatureData,
    f: &ScalarField,
) -> Result<MichaelSimon> {
    let n = mesh.intrinsic_dim();
    if n < 2 {
        return Err(Error::Domain(
            "the Michael–Simon functional needs n ≥ 2".into(),
        ));
    }
    let (on_sigma, _) = mesh.vertex_labels();
    for (v, &x) in f.values().iter().enumerate() {
        if x < 0.0 {
            return Err(Error::Precondition(format!(
                "f is negative at vertex {v} ({x})"
            )));
        }
        if on_sigma[v] && x > 1e-12 {
            return Err(Error::Precondition(format!(
                "f must vanish on Σ but is {x} at vertex {v}"
            )));
        }
    }
    let grad = gradient(mesh, f);
    let grad_int: f64 = (0..mesh.cell_count())
        .map(|c| mesh.geometry(c).volume * norm(grad.cell(c)))
        .sum();
    let mass = mesh.lumped_mass();
    let p = n as f64 / (n as f64 - 1.0);
    let mut h_int = 0.0;
    let mut fp = 0.0;
    for (v, &x) in f.values().iter().enumerate() {
        h_int += mass[v] * norm(&curv.mean_curvature[v]) * x;
        fp += mass[v] * x.powf(p);
    }
    let lhs = (grad_int + h_int) / sphere_area(n)?;
    let half = if mesh.measures().gamma > 0.0 {
        0.5f64.powf(1.0 / n as f64)
    } else {
        1.0
    };
    let rhs =
        half * brendle_constant(n, mesh.codim().max(1))? * (fp / ball_volume(n)?).powf(1.0 / p);
    let degenerate = lhs == 0.0 && rhs == 0.0;
    Ok(MichaelSimon {
        lhs,
        rhs,
        ratio: if degenerate { 1.0 } else { lhs / rhs },
        degenerate,
    })
}

/// Boundary faces labeled `label`, for reporting.
pub fn labeled_measure(mesh: &SimplicialMesh, label: Label) -> f64 {
    mesh.boundary()
        .iter()
        .filter(|b| b.label == label)
        .map(|b| mesh.face_measure(&b.face))
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::Fixture;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn interior(mesh: &SimplicialMesh) -> Vec<bool> {
        let (s, g) = mesh.vertex_labels();
        s.iter().zip(&g).map(|(a, b)| *a || *b).collect()
    }

    #[test]
    fn flat_disk_has_zero_curvature() {
        let m = Fixture::FlatHalfDiskEmbedded { ambient: 3 }
            .generate(0.1)
            .unwrap();
        let c = curvature(&m).unwrap();
        assert!(c.mean_curvature_norms().iter().all(|&h| h < 1e-10));
        for pis in &c.second_fundamental_form {
            assert!(pis.iter().all(|p| p.abs().max() < 1e-10));
        }
    }

    #[test]
    fn pca_frames_match_analytic_on_sphere() {
        let m = Fixture::SphereCap { theta0: PI / 4.0 }
            .generate(0.05)
            .unwrap();
        let est = estimate_frames(&m);
        for (f, x) in est.iter().zip(m.vertices()) {
            // normal of the unit sphere is the position
            assert!(dot(&f.normal[0], x).abs() > 0.998);
            assert!(dot(&f.tangent[0], &f.normal[0]).abs() < 1e-10);
        }
    }

    #[test]
    fn sphere_mean_curvature_converges() {
        let mut errs = Vec::new();
        for h in [0.1, 0.05] {
            let m = Fixture::Icosphere {
                level: if h > 0.07 { 3 } else { 4 },
            }
            .generate(h)
            .unwrap();
            let c = curvature_with(&m, estimate_frames(&m), 0.0).unwrap();
            let cot = laplacian_mean_curvature(&m);
            let mass = m.lumped_mass();
            let weak: f64 = cot
                .iter()
                .zip(m.vertices())
                .zip(&mass)
                .map(|((h, x), w)| -w * dot(h, x))
                .sum();
            assert!((weak - 8.0 * PI).abs() < 0.02 * 8.0 * PI);
            let mut worst = 0.0f64;
            for (v, x) in m.vertices().iter().enumerate() {
                let hv = &c.mean_curvature[v];
                assert!(dot(hv, x) < 0.0, "H must point inward");
                worst = worst.max((norm(hv) - 2.0).abs());
            }
            errs.push(worst);
        }
        assert!(errs[1] < errs[0] / 2.0 && errs[1] < 0.02, "{errs:?}");
    }

    #[test]
    fn cap_boundary_curvature_is_consistent() {
        let m = Fixture::SphereCap { theta0: PI / 4.0 }
            .generate(0.04)
            .unwrap();
        let c = curvature(&m).unwrap();
        let total = total_mean_curvature(&m, &c);
        let exact = 2.0 * m.exact().unwrap().volume;
        assert!((total - exact).abs() < 1e-2 * exact, "{total} vs {exact}");
        let skip = interior(&m);
        assert!(c.trace_defect(&skip) < 1e-12);
        let worst = c
            .mean_curvature_norms()
            .iter()
            .map(|h| (h - 2.0).abs())
            .fold(0.0, f64::max);
        assert!(worst < 0.02, "{worst}");
    }

    #[test]
    fn cylinder_principal_curvatures() {
        let r = 0.5;
        let m = Fixture::CylinderPatch { radius: r }.generate(0.03).unwrap();
        let c = curvature(&m).unwrap();
        let skip = interior(&m);
        for v in (0..m.vertex_count()).filter(|&v| !skip[v]) {
            let ev = SymmetricEigen::new(c.second_fundamental_form[v][0].clone()).eigenvalues;
            let (lo, hi) = (
                ev.min().abs().min(ev.max().abs()),
                ev.min().abs().max(ev.max().abs()),
            );
            assert!(lo < 0.05 && (hi - 1.0 / r).abs() < 0.05, "{ev:?}");
            assert!((norm(&c.mean_curvature[v]) - 1.0 / r).abs() < 0.1);
        }
    }

    #[test]
    fn normalization_examples() {
        let m = Fixture::FlatHalfDiskEmbedded { ambient: 4 }
            .generate(0.05)
            .unwrap();
        let c = curvature(&m).unwrap();
        let (_, _, s) = normalize_submanifold(&m, &c).unwrap();
        let meas = m.measures();
        assert!((s - meas.sigma / (2.0 * meas.volume)).abs() < 1e-12 && (s - 1.0).abs() < 5e-3);
        let big = m.scaled(2.0).unwrap();
        let (_, _, s2) = normalize_submanifold(&big, &curvature(&big).unwrap()).unwrap();
        assert!((2.0 * s2 - s).abs() < 1e-12);
        let cap = Fixture::SphereCap { theta0: PI / 4.0 }
            .generate(0.05)
            .unwrap();
        let (scaled, sc, _) = normalize_submanifold(&cap, &curvature(&cap).unwrap()).unwrap();
        let mm = scaled.measures();
        let left = mm.sigma + total_mean_curvature(&scaled, &sc);
        assert!((left - 2.0 * mm.volume).abs() < 1e-10 * left);
        // re-measured curvature agrees with the scaled one
        let again = total_mean_curvature(&scaled, &curvature(&scaled).unwrap());
        assert!((again - total_mean_curvature(&scaled, &sc)).abs() < 1e-10 * again);
    }

    #[test]
    fn flat_solution_matches_codim0() {
        let flat = Fixture::HalfDisk.generate(0.05).unwrap();
        let (m2, _) = crate::domain::normalize_codim0(&flat).unwrap();
        let u2 = crate::domain::solve_mixed_neumann(&m2).unwrap();
        let emb = Fixture::FlatHalfDiskEmbedded { ambient: 4 }
            .generate(0.05)
            .unwrap();
        let s = SolvedSubmanifold::solve(&emb).unwrap();
        assert!(s.solution.field.max_abs_diff(&u2.field) < 1e-10);
    }

    #[test]
    fn unnormalized_is_refused() {
        let m = Fixture::FlatHalfDiskEmbedded { ambient: 3 }
            .generate(0.1)
            .unwrap()
            .scaled(2.0)
            .unwrap();
        let c = curvature(&m).unwrap();
        let e = solve_submanifold_neumann(&m, &c).unwrap_err().to_string();
        assert!(e.contains("normalize"), "{e}");
    }

    #[test]
    fn cap_solve_contract() {
        let cap = Fixture::SphereCap { theta0: PI / 4.0 }
            .generate(0.05)
            .unwrap();
        let (m, c, _) = normalize_submanifold(&cap, &curvature(&cap).unwrap()).unwrap();
        let sol = solve_submanifold_neumann(&m, &c).unwrap();
        assert!(sol.compatibility_residual <= 1e-8 && sol.residual <= 1e-10);
    }

    #[test]
    fn quotient_examples() {
        let hd = Fixture::FlatHalfDiskEmbedded { ambient: 4 }
            .generate(0.02)
            .unwrap();
        let q = quotient_report(&hd, &curvature(&hd).unwrap()).unwrap();
        assert!((q.relative.ratio - 1.0).abs() < 0.01);
        assert!(q.closed.is_none());
        assert!((q.minimal.unwrap().ratio - q.relative.ratio).abs() < 1e-12);
        let fd = Fixture::FullDiskClosed { ambient: 3 }
            .generate(0.02)
            .unwrap();
        let q = quotient_report(&fd, &curvature(&fd).unwrap()).unwrap();
        assert!((q.closed.unwrap().ratio - 1.0).abs() < 0.01);
        let cap = Fixture::SphereCap { theta0: PI / 4.0 }
            .generate(0.04)
            .unwrap();
        let q = quotient_report(&cap, &curvature(&cap).unwrap()).unwrap();
        assert!(q.relative.ratio >= 0.99 && q.minimal.is_none());
    }

    #[test]
    fn phi_membership_examples() {
        let hd = Fixture::FlatHalfDiskEmbedded { ambient: 4 }
            .generate(0.04)
            .unwrap();
        let s = SolvedSubmanifold::solve(&hd).unwrap();
        let v = phi_membership(&[0.2, 0.4, 0.0, 0.0], &s, 0.0).unwrap();
        assert!(v.status.accepted() && v.y.iter().all(|c| c.abs() < 1e-12));
        let normal = [0.0, 0.0, 0.3, -0.4];
        let v = phi_membership(&normal, &s, 0.0).unwrap();
        assert!(v.status.accepted());
        assert!((v.y[0] - 0.3).abs() < 1e-12 && (v.y[1] + 0.4).abs() < 1e-12);
        let umin = (0..s.mesh.vertex_count())
            .min_by(|&a, &b| s.u()[a].total_cmp(&s.u()[b]))
            .unwrap();
        assert_eq!(v.witness, umin);
        assert!(phi_membership(&[0.6, 0.0, 0.8, 0.0], &s, 0.0).is_err());
        assert!(phi_membership(&[0.1, 0.1, 0.0, 0.0], &s, 0.5).is_err());
    }

    #[test]
    fn analytic_mass_bound_is_equality_for_flat_half_disk() {
        let hd = Fixture::FlatHalfDiskEmbedded { ambient: 4 }
            .generate(0.1)
            .unwrap();
        let b = analytic_mass_bound(&hd).unwrap().unwrap();
        assert!((b.volume - FRAC_PI_2).abs() < 1e-12 && b.margin.abs() < 1e-10);
        let fd = Fixture::FullDiskClosed { ambient: 4 }
            .generate(0.1)
            .unwrap();
        let b = analytic_mass_bound(&fd).unwrap().unwrap();
        assert!(b.margin.abs() < 1e-10);
    }

    #[test]
    fn michael_simon_zero_and_errors() {
        let hd = Fixture::FlatHalfDiskEmbedded { ambient: 3 }
            .generate(0.1)
            .unwrap();
        let c = curvature(&hd).unwrap();
        let zero = ScalarField::from_fn(&hd, |_| 0.0).unwrap();
        let r = michael_simon_eval(&hd, &c, &zero).unwrap();
        assert!(r.degenerate && r.ratio == 1.0);
        let one = ScalarField::from_fn(&hd, |_| 1.0).unwrap();
        assert!(michael_simon_eval(&hd, &c, &one)
            .unwrap_err()
            .to_string()
            .contains("vertex"));
        let neg =
            ScalarField::from_fn(&hd, |x| -(1.0 - x[0] * x[0] - x[1] * x[1]).max(0.0)).unwrap();
        assert!(michael_simon_eval(&hd, &c, &neg).is_err());
    }

    #[test]
    fn affine_field_has_zero_jacobian() {
        let hd = Fixture::FlatHalfDiskEmbedded { ambient: 4 }
            .generate(0.1)
            .unwrap();
        let mut s = SolvedSubmanifold::solve(&hd).unwrap();
        let f = ScalarField::from_fn(&s.mesh, |x| 0.3 * x[0] - 0.1 * x[1]).unwrap();
        s.hessian = hessian_recover_with(&s.mesh, &f, Some(&s.curvature.frames), 0.0).unwrap();
        assert!(s.jacobian_matrix(0, &[0.2, 0.1]).determinant().abs() < 1e-12);
    }
}
