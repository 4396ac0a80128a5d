//! The logarithmic Sobolev inequality on free boundary submanifolds: the
//! f-weighted Neumann problem, the inequality itself, its Gaussian-measure
//! form with the boundary term, and sampled Jacobian bounds.
//!
//! Integrals of densities use a collapsed Gauss rule on every cell (and
//! face), so analytic profiles are integrated to near machine precision.

use std::f64::consts::PI;

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::euclid::{ball_volume, dot, sub, SampleStream};
use crate::fem::{solve_neumann, ScalarField};
use crate::manifold::{
    classify_xi, CurvatureData, PhiCounts, PhiTolerances, SolvedSubmanifold, SubmanifoldSolution,
};
use crate::mesh::{Label, SimplicialMesh};
use crate::montecarlo::{map_chunks, MeasureEstimate};
use crate::quadrature::SimplexRule;

/// Points per axis of the cell and face rules.
pub const QUADRATURE_POINTS: usize = 6;

/// A positive density on the mesh.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Density {
    Constant {
        value: f64,
    },
    /// `amplitude · exp(−|x − center|² / (2 width²))`.
    Gaussian {
        amplitude: f64,
        center: Vec<f64>,
        width: f64,
    },
    /// P1 interpolation of vertex values; ∇log f is the cell gradient of
    /// the P1 interpolant of log f.
    Vertex {
        values: Vec<f64>,
    },
    Scaled {
        inner: Box<Density>,
        factor: f64,
    },
    /// `(4π)^{−n/2} exp(−|x − x₀|²/4) · φ`.
    GaussWeighted {
        phi: Box<Density>,
        x0: Vec<f64>,
    },
}

impl Density {
    pub fn scaled(self, factor: f64) -> Density {
        Density::Scaled {
            inner: Box::new(self),
            factor,
        }
    }

    /// f and the ambient gradient of log f at barycentric `lam` of `cell`.
    pub fn eval(
        &self,
        mesh: &SimplicialMesh,
        cell: usize,
        lam: &[f64],
        x: &[f64],
    ) -> (f64, Vec<f64>) {
        match self {
            Density::Constant { value } => (*value, vec![0.0; x.len()]),
            Density::Gaussian {
                amplitude,
                center,
                width,
            } => {
                let d = sub(x, center);
                let w2 = width * width;
                (
                    amplitude * (-dot(&d, &d) / (2.0 * w2)).exp(),
                    d.iter().map(|c| -c / w2).collect(),
                )
            }
            Density::Vertex { values } => {
                let verts = mesh.cell(cell);
                let f: f64 = verts.iter().zip(lam).map(|(&v, l)| l * values[v]).sum();
                let mut g = vec![0.0; x.len()];
                for (k, &v) in verts.iter().enumerate() {
                    let lf = values[v].ln();
                    g.iter_mut()
                        .zip(&mesh.geometry(cell).bary_grads[k])
                        .for_each(|(gi, b)| *gi += lf * b);
                }
                (f, g)
            }
            Density::Scaled { inner, factor } => {
                let (f, g) = inner.eval(mesh, cell, lam, x);
                (factor * f, g)
            }
            Density::GaussWeighted { phi, x0 } => {
                let (p, g) = phi.eval(mesh, cell, lam, x);
                let d = sub(x, x0);
                let w = gauss_weight(mesh.intrinsic_dim(), &d);
                (
                    w * p,
                    g.iter().zip(&d).map(|(gi, di)| gi - di / 2.0).collect(),
                )
            }
        }
    }

    /// Value at a vertex.
    pub fn at_vertex(&self, mesh: &SimplicialMesh, v: usize) -> f64 {
        let x = mesh.vertex(v);
        match self {
            Density::Constant { value } => *value,
            Density::Gaussian {
                amplitude,
                center,
                width,
            } => {
                let d = sub(x, center);
                amplitude * (-dot(&d, &d) / (2.0 * width * width)).exp()
            }
            Density::Vertex { values } => values[v],
            Density::Scaled { inner, factor } => factor * inner.at_vertex(mesh, v),
            Density::GaussWeighted { phi, x0 } => {
                gauss_weight(mesh.intrinsic_dim(), &sub(x, x0)) * phi.at_vertex(mesh, v)
            }
        }
    }
}

fn gauss_weight(n: usize, d: &[f64]) -> f64 {
    (4.0 * PI).powf(-(n as f64) / 2.0) * (-dot(d, d) / 4.0).exp()
}

/// Quadrature context: the cell and face rules and per-cell orthonormal
/// tangent bases.
struct Integrator<'a> {
    mesh: &'a SimplicialMesh,
    rule: SimplexRule,
    face_rule: SimplexRule,
    bases: Vec<DMatrix<f64>>,
    curvature: Option<&'a CurvatureData>,
}

/// One quadrature sample.
struct QPoint<'b> {
    cell: usize,
    weight: f64,
    lam: &'b [f64],
    x: Vec<f64>,
}

impl<'a> Integrator<'a> {
    fn new(mesh: &'a SimplicialMesh, curvature: Option<&'a CurvatureData>) -> Self {
        let n = mesh.intrinsic_dim();
        let dim = mesh.ambient_dim();
        let bases = (0..mesh.cell_count())
            .map(|c| {
                let cell = mesh.cell(c);
                let x0 = mesh.vertex(cell[0]);
                DMatrix::from_fn(dim, n, |r, k| mesh.vertex(cell[k + 1])[r] - x0[r])
                    .qr()
                    .q()
            })
            .collect();
        Integrator {
            mesh,
            rule: SimplexRule::collapsed(n, QUADRATURE_POINTS),
            face_rule: SimplexRule::collapsed(n - 1, QUADRATURE_POINTS),
            bases,
            curvature,
        }
    }

    fn points(&self, cell: usize) -> impl Iterator<Item = QPoint<'_>> + '_ {
        let verts: Vec<&[f64]> = self
            .mesh
            .cell(cell)
            .iter()
            .map(|&v| self.mesh.vertex(v))
            .collect();
        let vol = self.mesh.geometry(cell).volume;
        self.rule
            .points
            .iter()
            .zip(&self.rule.weights)
            .map(move |(lam, w)| QPoint {
                cell,
                weight: w * vol,
                lam,
                x: SimplexRule::map(lam, &verts),
            })
    }

    fn tangential(&self, cell: usize, g: &[f64]) -> Vec<f64> {
        let q = &self.bases[cell];
        let mut out = vec![0.0; g.len()];
        for k in 0..q.ncols() {
            let c: f64 = (0..g.len()).map(|r| q[(r, k)] * g[r]).sum();
            for r in 0..g.len() {
                out[r] += c * q[(r, k)];
            }
        }
        out
    }

    fn normal_part(&self, cell: usize, x: &[f64]) -> Vec<f64> {
        let t = self.tangential(cell, x);
        sub(x, &t)
    }

    /// P1 interpolation of the vertex mean curvature vectors.
    fn mean_curvature(&self, p: &QPoint) -> Vec<f64> {
        let dim = self.mesh.ambient_dim();
        let mut h = vec![0.0; dim];
        if let Some(c) = self.curvature {
            for (&v, l) in self.mesh.cell(p.cell).iter().zip(p.lam) {
                h.iter_mut()
                    .zip(&c.mean_curvature[v])
                    .for_each(|(hi, vi)| *hi += l * vi);
            }
        }
        h
    }

    /// Σ over cells and quadrature points of `weight · g(point)`, per component.
    fn integrate<G: Fn(&QPoint) -> f64>(&self, comp: &[usize], ncomp: usize, g: G) -> Vec<f64> {
        let mut out = vec![0.0; ncomp];
        for c in 0..self.mesh.cell_count() {
            let k = comp[self.mesh.cell(c)[0]];
            for p in self.points(c) {
                out[k] += p.weight * g(&p);
            }
        }
        out
    }
}

fn ensure_free_boundary(mesh: &SimplicialMesh) -> Result<()> {
    if mesh.boundary().iter().any(|b| b.label == Label::Sigma) {
        return Err(Error::Precondition(
            "the log-Sobolev inequality needs a free boundary submanifold (Σ = ∅)".into(),
        ));
    }
    Ok(())
}

fn ensure_positive(mesh: &SimplicialMesh, f: &Density) -> Result<()> {
    for v in 0..mesh.vertex_count() {
        let x = f.at_vertex(mesh, v);
        if !(x > 0.0) {
            return Err(Error::Precondition(format!(
                "f must be positive but is {x} at vertex {v}"
            )));
        }
    }
    Ok(())
}

/// Solution of the weighted problem `div(f∇u) = f (log f − |∇f|²/f² − |H|² + α)`
/// with zero Neumann data, f normalized to unit mass on every component.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LogSobProblem {
    /// The density as given.
    pub density: Density,
    /// ∫f per component before normalization.
    pub masses: Vec<f64>,
    /// α per component.
    pub alphas: Vec<f64>,
    pub u: ScalarField,
    pub residual: f64,
    /// |∫ f · rhs| summed over components.
    pub compatibility_residual: f64,
    pub component: Vec<usize>,
}

impl LogSobProblem {
    pub fn alpha(&self) -> f64 {
        self.alphas[0]
    }

    pub fn mass(&self) -> f64 {
        self.masses.iter().sum()
    }

    /// Normalized density value at a vertex.
    pub fn normalized_at(&self, mesh: &SimplicialMesh, v: usize) -> f64 {
        self.density.at_vertex(mesh, v) / self.masses[self.component[v]]
    }
}

pub fn solve_weighted(
    mesh: &SimplicialMesh,
    curvature: &CurvatureData,
    f: &Density,
) -> Result<LogSobProblem> {
    ensure_free_boundary(mesh)?;
    ensure_positive(mesh, f)?;
    let (comp, ncomp) = mesh.components();
    let q = Integrator::new(mesh, Some(curvature));
    let masses = q.integrate(&comp, ncomp, |p| f.eval(mesh, p.cell, p.lam, &p.x).0);
    // Integrand of −α (normalized f): f̂ (log f̂ − |∇log f|² − |H|²)
    let core = |p: &QPoint| -> (f64, f64) {
        let (val, g) = f.eval(mesh, p.cell, p.lam, &p.x);
        let fhat = val / masses[comp[mesh.cell(p.cell)[0]]];
        let gt = q.tangential(p.cell, &g);
        let h = q.mean_curvature(p);
        (fhat, fhat.ln() - dot(&gt, &gt) - dot(&h, &h))
    };
    let neg_alpha = q.integrate(&comp, ncomp, |p| {
        let (fh, r) = core(p);
        fh * r
    });
    let alphas: Vec<f64> = neg_alpha.iter().map(|a| -a).collect();
    let nv = mesh.vertex_count();
    let mut load = vec![0.0; nv];
    let mut weights = vec![0.0; mesh.cell_count()];
    let mut compat = vec![0.0; ncomp];
    for c in 0..mesh.cell_count() {
        let k = comp[mesh.cell(c)[0]];
        let vol = mesh.geometry(c).volume;
        for p in q.points(c) {
            let (fh, r) = core(&p);
            let s = fh * (r + alphas[k]);
            weights[c] += p.weight * fh / vol;
            compat[k] += p.weight * s;
            for (&v, l) in mesh.cell(c).iter().zip(p.lam) {
                // K_f u = −∫ f · rhs · φ
                load[v] -= p.weight * s * l;
            }
        }
    }
    let sol = solve_neumann(mesh, Some(&weights), &load)?;
    let compatibility_residual: f64 = compat.iter().map(|c| c.abs()).sum();
    if compatibility_residual > 1e-8 {
        return Err(Error::Solver(format!(
            "weighted compatibility residual {compatibility_residual:e}"
        )));
    }
    Ok(LogSobProblem {
        density: f.clone(),
        masses,
        alphas,
        u: sol.field,
        residual: sol.residual,
        compatibility_residual,
        component: comp,
    })
}

/// One side-by-side evaluation `lhs ≤ rhs`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogSobCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
    pub mass: f64,
}

/// `∫ f (log f + n + (n/2) log 4π − |∇f|²/f² − |H|²)` against
/// `(∫f) log(2∫f)`, with the density as given (not normalized).
pub fn logsob_check(
    mesh: &SimplicialMesh,
    curvature: &CurvatureData,
    f: &Density,
) -> Result<LogSobCheck> {
    ensure_free_boundary(mesh)?;
    ensure_positive(mesh, f)?;
    let n = mesh.intrinsic_dim() as f64;
    let q = Integrator::new(mesh, Some(curvature));
    let zero = vec![0; mesh.vertex_count()];
    let shift = n + 0.5 * n * (4.0 * PI).ln();
    let mut mass = 0.0;
    let lhs = q.integrate(&zero, 1, |p| {
        let (val, g) = f.eval(mesh, p.cell, p.lam, &p.x);
        let gt = q.tangential(p.cell, &g);
        let h = q.mean_curvature(p);
        val * (val.ln() + shift - dot(&gt, &gt) - dot(&h, &h))
    })[0];
    for m in q.integrate(&zero, 1, |p| f.eval(mesh, p.cell, p.lam, &p.x).0) {
        mass += m;
    }
    let rhs = mass * (2.0 * mass).ln();
    Ok(LogSobCheck {
        lhs,
        rhs,
        margin: rhs - lhs,
        mass,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianCorollary {
    pub lhs: f64,
    /// `(∫φ dμ) log(2∫φ dμ) + boundary_term`.
    pub rhs: f64,
    pub boundary_term: f64,
    pub margin: f64,
    pub mass: f64,
}

/// The Gaussian-measure form: `∫φ(log φ − |∇φ|²/φ² − |H + (x−x₀)^⊥/2|²) dμ`
/// against `(∫φdμ) log(2∫φdμ) + ∫_Γ φ⟨x − x₀, ν_S⟩ ds(μ)`, with
/// `ν_S = −ν` on Γ.
pub fn gaussian_corollary_eval(
    mesh: &SimplicialMesh,
    curvature: &CurvatureData,
    phi: &Density,
    x0: &[f64],
) -> Result<GaussianCorollary> {
    ensure_free_boundary(mesh)?;
    ensure_positive(mesh, phi)?;
    if x0.len() != mesh.ambient_dim() {
        return Err(Error::Domain("x₀ has the wrong dimension".into()));
    }
    let n = mesh.intrinsic_dim();
    let q = Integrator::new(mesh, Some(curvature));
    let zero = vec![0; mesh.vertex_count()];
    let lhs = q.integrate(&zero, 1, |p| {
        let (val, g) = phi.eval(mesh, p.cell, p.lam, &p.x);
        let d = sub(&p.x, x0);
        let w = gauss_weight(n, &d);
        let gt = q.tangential(p.cell, &g);
        let mut hv = q.mean_curvature(p);
        hv.iter_mut()
            .zip(q.normal_part(p.cell, &d))
            .for_each(|(h, dp)| *h += dp / 2.0);
        w * val * (val.ln() - dot(&gt, &gt) - dot(&hv, &hv))
    })[0];
    let mass = q.integrate(&zero, 1, |p| {
        let (val, _) = phi.eval(mesh, p.cell, p.lam, &p.x);
        gauss_weight(n, &sub(&p.x, x0)) * val
    })[0];
    let boundary_term = boundary_integral(mesh, &q, phi, x0)?;
    let rhs = mass * (2.0 * mass).ln() + boundary_term;
    Ok(GaussianCorollary {
        lhs,
        rhs,
        boundary_term,
        margin: rhs - lhs,
        mass,
    })
}

fn boundary_integral(
    mesh: &SimplicialMesh,
    q: &Integrator,
    phi: &Density,
    x0: &[f64],
) -> Result<f64> {
    let n = mesh.intrinsic_dim();
    let vc = mesh.vertex_cells();
    let mut total = 0.0;
    for bf in mesh.boundary() {
        let nu = mesh
            .face_conormal(&bf.face)
            .ok_or_else(|| Error::Domain("boundary face without a cell".into()))?;
        let cell = vc[bf.face[0]]
            .iter()
            .copied()
            .find(|&c| bf.face.iter().all(|v| mesh.cell(c).contains(v)))
            .ok_or_else(|| Error::Domain("boundary face without a cell".into()))?;
        let fverts: Vec<&[f64]> = bf.face.iter().map(|&v| mesh.vertex(v)).collect();
        let area = mesh.face_measure(&bf.face);
        for (lam_f, w) in q.face_rule.points.iter().zip(&q.face_rule.weights) {
            let x = SimplexRule::map(lam_f, &fverts);
            // barycentric coordinates of x in the owning cell
            let lam: Vec<f64> = mesh
                .cell(cell)
                .iter()
                .map(|v| {
                    bf.face
                        .iter()
                        .position(|u| u == v)
                        .map_or(0.0, |k| lam_f[k])
                })
                .collect();
            let (val, _) = phi.eval(mesh, cell, &lam, &x);
            let d = sub(&x, x0);
            total += w * area * val * gauss_weight(n, &d) * -dot(&d, &nu);
        }
    }
    Ok(total)
}

/// The weighted problem packaged for transport-map sampling.
pub fn transport_data(
    mesh: &SimplicialMesh,
    curvature: &CurvatureData,
    problem: &LogSobProblem,
    tolerances: PhiTolerances,
) -> Result<SolvedSubmanifold> {
    let solution = SubmanifoldSolution {
        field: problem.u.clone(),
        residual: problem.residual,
        compatibility_residual: problem.compatibility_residual,
    };
    SolvedSubmanifold::from_solution(mesh.clone(), curvature.clone(), solution, tolerances, 1.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lemma42Report {
    pub samples: usize,
    pub gated: usize,
    /// Gated samples with `log(e^{−|Φ|²/4} det) > log(f e^{−|2H+y|²/4+α−n}) + δ`
    /// or `det < −δ`.
    pub violations: usize,
    pub violation_fraction: f64,
    /// Largest log-form excess over gated samples with positive det.
    pub max_excess: f64,
    /// Every sample had a finite positive right side.
    pub rhs_positive: bool,
    pub normal_cutoff: f64,
    pub delta: f64,
}

/// Samples (x, y) with x drawn by lumped mass and y uniform in the normal
/// ball of radius `cutoff`; checks the two-sided bound on the gated set.
pub fn lemma42_bound_samples(
    transport: &SolvedSubmanifold,
    problem: &LogSobProblem,
    samples: usize,
    stream: &SampleStream,
) -> Result<Lemma42Report> {
    let mesh = &transport.mesh;
    let m = mesh.codim();
    let n = mesh.intrinsic_dim() as f64;
    let delta = transport.tolerances.delta;
    // e^{−R²/4} < 1e-12
    let cutoff = (4.0 * 1e12f64.ln()).sqrt();
    let mut cumulative = Vec::with_capacity(mesh.vertex_count());
    let mut acc = 0.0;
    for w in &transport.mass {
        acc += w;
        cumulative.push(acc);
    }
    let chunks = map_chunks(samples, stream, |s, count| {
        let mut out = (0usize, 0usize, f64::NEG_INFINITY, true);
        for _ in 0..count {
            let r = s.uniform() * acc;
            let x = cumulative
                .partition_point(|&c| c < r)
                .min(cumulative.len() - 1);
            let y: Vec<f64> = if m == 0 {
                Vec::new()
            } else {
                s.ball_vector(m).iter().map(|c| c * cutoff).collect()
            };
            let a = transport.jacobian_matrix(x, &y);
            let eig = SymmetricEigen::new(a).eigenvalues;
            let frame = &transport.curvature.frames[x];
            let mut y_amb = vec![0.0; mesh.ambient_dim()];
            for (e, c) in frame.normal.iter().zip(&y) {
                y_amb.iter_mut().zip(e).for_each(|(yi, ei)| *yi += c * ei);
            }
            let h = &transport.curvature.mean_curvature[x];
            let two_h_y: Vec<f64> = h.iter().zip(&y_amb).map(|(a, b)| 2.0 * a + b).collect();
            let k = problem.component[x];
            let fx = problem.normalized_at(mesh, x);
            let log_rhs = fx.ln() - dot(&two_h_y, &two_h_y) / 4.0 + problem.alphas[k] - n;
            if !log_rhs.is_finite() {
                out.3 = false;
            }
            if eig.min() < -delta {
                continue;
            }
            out.0 += 1;
            let det: f64 = eig.iter().product();
            let g = &transport.vertex_gradients[x];
            let phi2 = dot(g, g) + dot(&y, &y);
            if det < -delta {
                out.1 += 1;
            } else if det > 0.0 {
                let excess = -phi2 / 4.0 + det.ln() - log_rhs;
                out.2 = out.2.max(excess);
                if excess > delta {
                    out.1 += 1;
                }
            }
        }
        out
    });
    let (mut gated, mut violations, mut max_excess, mut rhs_positive) =
        (0, 0, f64::NEG_INFINITY, true);
    for c in chunks {
        gated += c.0;
        violations += c.1;
        max_excess = max_excess.max(c.2);
        rhs_positive &= c.3;
    }
    Ok(Lemma42Report {
        samples,
        gated,
        violations,
        violation_fraction: if gated == 0 {
            0.0
        } else {
            violations as f64 / gated as f64
        },
        max_excess,
        rhs_positive,
        normal_cutoff: cutoff,
        delta,
    })
}

/// Transport-image measure of one radial shell `a ≤ |ξ| < b` against
/// `½|𝔹^N|(b^N − a^N)`, with the Gaussian-weighted counterpart.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShellBin {
    pub rho_low: f64,
    pub rho_high: f64,
    pub measure: MeasureEstimate,
    pub half_shell: f64,
    /// `∫ e^{−|ξ|²/4}` over accepted ξ in the shell (Monte-Carlo).
    pub weighted: f64,
    pub weighted_half_shell: f64,
    pub counts: PhiCounts,
}

/// Shell estimates over ρ ∈ (0, ∞). The tangential tolerance is scaled by
/// max(1, ρ) since vertex quantization of the minimizer grows with |ξ|.
pub fn weighted_shell_bins(
    transport: &SolvedSubmanifold,
    edges: &[f64],
    samples_per_bin: usize,
    stream: &SampleStream,
) -> Result<Vec<ShellBin>> {
    let dim = transport.mesh.ambient_dim();
    let d = dim as f64;
    let vol = ball_volume(dim)?;
    let mut out = Vec::new();
    for (k, w) in edges.windows(2).enumerate() {
        let (a, b) = (w[0], w[1]);
        if !(a >= 0.0 && b > a) {
            return Err(Error::Domain(
                "shell edges must increase from a non-negative start".into(),
            ));
        }
        let sub_stream = stream.fork(k as u64);
        let shell = vol * (b.powi(dim as i32) - a.powi(dim as i32));
        let parts = map_chunks(samples_per_bin, &sub_stream, |s, count| {
            let mut c = PhiCounts::default();
            let mut wsum = 0.0;
            let mut wall = 0.0;
            for _ in 0..count {
                let r = (a.powf(d) + s.uniform() * (b.powf(d) - a.powf(d))).powf(1.0 / d);
                let xi: Vec<f64> = s.unit_vector(dim).iter().map(|x| x * r).collect();
                let weight = (-r * r / 4.0).exp();
                wall += weight;
                let v = classify_xi(&xi, transport, transport.tolerances.gradient * r.max(1.0));
                c.record(v.status);
                if v.status.accepted() {
                    wsum += weight;
                }
            }
            (c, wsum, wall)
        });
        let mut counts = PhiCounts::default();
        let (mut wsum, mut wall) = (0.0, 0.0);
        for (c, ws, wa) in parts {
            counts.add(&c);
            wsum += ws;
            wall += wa;
        }
        out.push(ShellBin {
            rho_low: a,
            rho_high: b,
            measure: MeasureEstimate::from_hits(
                counts.accepted(),
                samples_per_bin,
                shell,
                sub_stream.seed(),
            ),
            half_shell: 0.5 * shell,
            weighted: shell * wsum / samples_per_bin as f64,
            weighted_half_shell: 0.5 * shell * wall / samples_per_bin as f64,
            counts,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::Fixture;
    use crate::manifold::curvature;

    fn flat() -> (SimplicialMesh, CurvatureData) {
        let m = Fixture::FreeHalfDisk {
            radius: 11.0,
            ambient: 3,
        }
        .generate(0.5)
        .unwrap();
        let c = curvature(&m).unwrap();
        (m, c)
    }

    fn gaussian(center: [f64; 3], width: f64) -> Density {
        Density::Gaussian {
            amplitude: 1.0,
            center: center.to_vec(),
            width,
        }
    }

    #[test]
    fn constant_density_gives_zero_solution() {
        let (m, c) = flat();
        let area = m.measures().volume;
        let p = solve_weighted(&m, &c, &Density::Constant { value: 1.0 / area }).unwrap();
        assert!((p.alpha() - area.ln()).abs() < 1e-10);
        assert!(p.u.values().iter().all(|u| u.abs() < 1e-8));
    }

    #[test]
    fn constant_margin_matches_closed_form() {
        let (m, c) = flat();
        let area = m.measures().volume;
        let chk = logsob_check(&m, &c, &Density::Constant { value: 1.0 / area }).unwrap();
        // f = 1/|M|: lhs = log(1/|M|) + 2 + log 4π, rhs = log 2
        let lhs = (1.0 / area).ln() + 2.0 + (4.0 * PI).ln();
        assert!((chk.lhs - lhs).abs() < 1e-10 && (chk.rhs - 2f64.ln()).abs() < 1e-12);
        assert!(chk.margin > 0.0);
    }

    #[test]
    fn scaling_identity() {
        let (m, c) = flat();
        let f = gaussian([1.0, 2.0, 0.0], 1.2);
        let a = logsob_check(&m, &c, &f).unwrap();
        let k = 3.7;
        let b = logsob_check(&m, &c, &f.clone().scaled(k)).unwrap();
        assert!((b.lhs - (k * a.lhs + k * a.mass * k.ln())).abs() < 1e-10 * b.lhs.abs().max(1.0));
        assert!((b.margin - k * a.margin).abs() < 1e-10);
    }

    #[test]
    fn dual_path_agrees() {
        let (m, c) = flat();
        for (phi, x0) in [
            (Density::Constant { value: 1.0 }, [0.0, 0.0, 0.0]),
            (gaussian([0.5, 1.0, 0.0], 1.5), [0.3, 0.7, 0.0]),
            (gaussian([-1.0, 2.0, 0.0], 0.8), [0.0, 1.5, 0.0]),
        ] {
            let g = gaussian_corollary_eval(&m, &c, &phi, &x0).unwrap();
            let f = Density::GaussWeighted {
                phi: Box::new(phi),
                x0: x0.to_vec(),
            };
            let l = logsob_check(&m, &c, &f).unwrap();
            assert!(
                (g.lhs - (l.lhs + g.boundary_term)).abs() < 1e-6,
                "{g:?} {l:?}"
            );
            assert!((g.margin - l.margin).abs() < 1e-6);
        }
    }

    #[test]
    fn symmetric_center_drops_boundary_term() {
        let (m, c) = flat();
        let g =
            gaussian_corollary_eval(&m, &c, &Density::Constant { value: 1.0 }, &[0.0, 0.0, 0.0])
                .unwrap();
        assert!(g.boundary_term.abs() < 1e-10, "{}", g.boundary_term);
        // a center above the support face sees ⟨x − x₀, ν_S⟩ = x₀₂ > 0 on Γ
        let g =
            gaussian_corollary_eval(&m, &c, &Density::Constant { value: 1.0 }, &[0.0, -1.0, 0.0])
                .unwrap();
        assert!(g.boundary_term > 0.0);
    }

    #[test]
    fn preconditions() {
        let (m, c) = flat();
        let mut vals = vec![1.0; m.vertex_count()];
        vals[5] = 0.0;
        let e = solve_weighted(&m, &c, &Density::Vertex { values: vals })
            .unwrap_err()
            .to_string();
        assert!(e.contains("vertex 5"), "{e}");
        let hd = Fixture::FlatHalfDiskEmbedded { ambient: 3 }
            .generate(0.2)
            .unwrap();
        let hc = curvature(&hd).unwrap();
        assert!(matches!(
            logsob_check(&hd, &hc, &Density::Constant { value: 1.0 }),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn bump_is_compatible() {
        let (m, c) = flat();
        let p = solve_weighted(&m, &c, &gaussian([0.0, 1.0, 0.0], 1.0)).unwrap();
        assert!(p.compatibility_residual <= 1e-8 && p.residual <= 1e-8);
    }

    #[test]
    fn vertex_density_matches_analytic_for_constants() {
        let (m, c) = flat();
        let a = logsob_check(&m, &c, &Density::Constant { value: 0.01 }).unwrap();
        let b = logsob_check(
            &m,
            &c,
            &Density::Vertex {
                values: vec![0.01; m.vertex_count()],
            },
        )
        .unwrap();
        assert!((a.lhs - b.lhs).abs() < 1e-12 && (a.rhs - b.rhs).abs() < 1e-12);
    }
}
