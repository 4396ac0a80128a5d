//! The ABP argument in codimension 0: lower contact sets, gradient-image
//! membership and measure, the chain of integral inequalities, and
//! equality-case diagnostics.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::domain::{codim0_precondition, solve_mixed_neumann, MixedSolution};
use crate::error::{Error, Result};
use crate::euclid::{ball_volume, dot, norm, sphere_area, SampleStream};
use crate::fem::{gradient, hessian_recover_with, HessianField, ScalarField};
use crate::mesh::SimplicialMesh;
use crate::montecarlo::{map_chunks, map_indices, MeasureEstimate};

/// Tolerances of the discrete ABP checks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AbpTolerances {
    /// Contact admission: x ∈ Γ₊ iff slack(x) ≥ −contact.
    pub contact: f64,
    /// Accept ξ only if |∇u(q) − ξ| ≤ gradient at the minimizer q.
    pub gradient: f64,
    /// Minimum patch radius for Hessian recovery.
    pub recovery_radius: f64,
}

impl AbpTolerances {
    /// Defaults in terms of the mesh size h (largest cell diameter):
    /// contact `h²`, gradient `0.6 h`, recovery radius `0.7 √(h ℓ)` with
    /// ℓ = |Ω|^{1/N}.
    pub fn for_mesh(mesh: &SimplicialMesh) -> Self {
        let h = mesh.mesh_size();
        let ell = mesh
            .measures()
            .volume
            .powf(1.0 / mesh.intrinsic_dim() as f64);
        AbpTolerances {
            contact: h * h,
            gradient: 0.6 * h,
            recovery_radius: 0.7 * (h * ell).sqrt(),
        }
    }
}

/// A solved codimension-0 problem with the derived data every check needs.
#[derive(Debug, Clone)]
pub struct SolvedDomain {
    pub mesh: SimplicialMesh,
    pub solution: MixedSolution,
    pub vertex_gradients: Vec<Vec<f64>>,
    pub on_sigma: Vec<bool>,
    pub on_gamma: Vec<bool>,
    pub mass: Vec<f64>,
}

impl SolvedDomain {
    /// Solve the mixed problem on an already normalized mesh.
    pub fn solve(mesh: SimplicialMesh) -> Result<Self> {
        let solution = solve_mixed_neumann(&mesh)?;
        Ok(Self::from_field(mesh, solution))
    }

    /// Wrap an arbitrary field (used for synthetic checks).
    pub fn from_field(mesh: SimplicialMesh, solution: MixedSolution) -> Self {
        let vertex_gradients = gradient(&mesh, &solution.field).vertex_average(&mesh);
        let (on_sigma, on_gamma) = mesh.vertex_labels();
        let mass = mesh.lumped_mass();
        SolvedDomain {
            mesh,
            solution,
            vertex_gradients,
            on_sigma,
            on_gamma,
            mass,
        }
    }

    pub fn u(&self) -> &[f64] {
        self.solution.field.values()
    }

    pub fn field(&self) -> &ScalarField {
        &self.solution.field
    }

    pub fn hessian(&self, tol: &AbpTolerances) -> Result<HessianField> {
        hessian_recover_with(&self.mesh, &self.solution.field, None, tol.recovery_radius)
    }
}

/// Lower contact set Γ₊ of the vertex field.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ContactSet {
    pub members: Vec<bool>,
    /// `min_y u(y) − u(x) − ⟨∇u(x), y − x⟩` per vertex (≤ 0).
    pub slack: Vec<f64>,
    pub epsilon: f64,
}

impl ContactSet {
    pub fn len(&self) -> usize {
        self.members.iter().filter(|&&m| m).count()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn contains(&self, v: usize) -> bool {
        self.members[v]
    }
}

/// Brute-force supporting-plane test over all vertex pairs.
pub fn contact_set(
    mesh: &SimplicialMesh,
    u: &[f64],
    vertex_gradients: &[Vec<f64>],
    epsilon: f64,
) -> ContactSet {
    let xs = mesh.vertices();
    let slack = map_indices(mesh.vertex_count(), |x| {
        let g = &vertex_gradients[x];
        let gx = dot(g, &xs[x]);
        let mut worst = 0.0f64;
        for (y, xy) in xs.iter().enumerate() {
            worst = worst.min(u[y] - u[x] - (dot(g, xy) - gx));
        }
        worst
    });
    ContactSet {
        members: slack.iter().map(|&s| s >= -epsilon).collect(),
        slack,
        epsilon,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum MembershipStatus {
    InteriorContact,
    FreeBoundaryContact,
    RejectSigma,
    RejectGradient,
}

impl MembershipStatus {
    pub fn accepted(self) -> bool {
        matches!(
            self,
            MembershipStatus::InteriorContact | MembershipStatus::FreeBoundaryContact
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MembershipVerdict {
    pub xi: Vec<f64>,
    pub status: MembershipStatus,
    pub witness: usize,
    pub gradient_residual: f64,
}

/// Index minimizing `u(x) − ⟨x, ξ⟩` over the vertices.
pub fn argmin_tilted(mesh: &SimplicialMesh, u: &[f64], xi: &[f64]) -> usize {
    let mut best = (f64::INFINITY, 0);
    for (i, x) in mesh.vertices().iter().enumerate() {
        let f = u[i] - dot(x, xi);
        if f < best.0 {
            best = (f, i);
        }
    }
    best.1
}

/// Classify ξ (|ξ| < 1) by the minimizer of `u − ⟨·, ξ⟩`.
pub fn image_membership(
    xi: &[f64],
    solved: &SolvedDomain,
    contact: &ContactSet,
    tol: &AbpTolerances,
) -> Result<MembershipVerdict> {
    if xi.len() != solved.mesh.ambient_dim() {
        return Err(Error::Domain("ξ has the wrong dimension".into()));
    }
    if !(norm(xi) < 1.0) {
        return Err(Error::Precondition(format!(
            "|ξ| = {} must be < 1",
            norm(xi)
        )));
    }
    let q = argmin_tilted(&solved.mesh, solved.u(), xi);
    let r = norm(&crate::euclid::sub(&solved.vertex_gradients[q], xi));
    let status = if solved.on_sigma[q] {
        MembershipStatus::RejectSigma
    } else if r <= tol.gradient && contact.contains(q) {
        if solved.on_gamma[q] {
            MembershipStatus::FreeBoundaryContact
        } else {
            MembershipStatus::InteriorContact
        }
    } else {
        MembershipStatus::RejectGradient
    };
    Ok(MembershipVerdict {
        xi: xi.to_vec(),
        status,
        witness: q,
        gradient_residual: r,
    })
}

/// Per-status sample counts.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct StatusCounts {
    pub interior_contact: usize,
    pub free_boundary_contact: usize,
    pub reject_sigma: usize,
    pub reject_gradient: usize,
    /// Σ rejections with |ξ| ≤ 1 − 2h, where the continuum argument forbids them.
    pub reject_sigma_deep: usize,
}

impl StatusCounts {
    fn add(&mut self, o: &StatusCounts) {
        self.interior_contact += o.interior_contact;
        self.free_boundary_contact += o.free_boundary_contact;
        self.reject_sigma += o.reject_sigma;
        self.reject_gradient += o.reject_gradient;
        self.reject_sigma_deep += o.reject_sigma_deep;
    }

    pub fn accepted(&self) -> usize {
        self.interior_contact + self.free_boundary_contact
    }
}

/// Approximate co-area slice: accepted measure with |ξ| in one radial bin
/// against the half-shell volume `½|𝔹^N|(b^N − a^N)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadialBin {
    pub rho_low: f64,
    pub rho_high: f64,
    pub measure: f64,
    pub half_shell: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageMeasure {
    pub estimate: MeasureEstimate,
    pub counts: StatusCounts,
    pub bins: Vec<RadialBin>,
    pub tolerances: AbpTolerances,
}

/// Monte-Carlo estimate of |∇u(Γ₊¹)|: ξ uniform in the unit ball, accepted
/// when the membership verdict is a contact.
pub fn image_measure(
    solved: &SolvedDomain,
    contact: &ContactSet,
    tol: &AbpTolerances,
    samples: usize,
    stream: &SampleStream,
    bins: usize,
) -> Result<ImageMeasure> {
    let dim = solved.mesh.ambient_dim();
    let h = solved.mesh.mesh_size();
    let nb = bins.max(1);
    let chunks = map_chunks(
        samples,
        stream,
        |s, count| -> Result<(StatusCounts, Vec<usize>)> {
            let mut c = StatusCounts::default();
            let mut hist = vec![0usize; nb];
            for _ in 0..count {
                let xi = s.ball_vector(dim);
                let v = image_membership(&xi, solved, contact, tol)?;
                match v.status {
                    MembershipStatus::InteriorContact => c.interior_contact += 1,
                    MembershipStatus::FreeBoundaryContact => c.free_boundary_contact += 1,
                    MembershipStatus::RejectSigma => {
                        c.reject_sigma += 1;
                        if norm(&xi) <= 1.0 - 2.0 * h {
                            c.reject_sigma_deep += 1;
                        }
                    }
                    MembershipStatus::RejectGradient => c.reject_gradient += 1,
                }
                if v.status.accepted() {
                    hist[((norm(&xi) * nb as f64) as usize).min(nb - 1)] += 1;
                }
            }
            Ok((c, hist))
        },
    );
    let mut counts = StatusCounts::default();
    let mut hist = vec![0usize; nb];
    for ch in chunks {
        let (c, hh) = ch?;
        counts.add(&c);
        hist.iter_mut().zip(hh).for_each(|(a, b)| *a += b);
    }
    let vol = ball_volume(dim)?;
    let bins = hist
        .iter()
        .enumerate()
        .map(|(k, &n)| {
            let (a, b) = (k as f64 / nb as f64, (k + 1) as f64 / nb as f64);
            RadialBin {
                rho_low: a,
                rho_high: b,
                measure: vol * n as f64 / samples as f64,
                half_shell: 0.5 * vol * (b.powi(dim as i32) - a.powi(dim as i32)),
            }
        })
        .collect();
    Ok(ImageMeasure {
        estimate: MeasureEstimate::from_hits(counts.accepted(), samples, vol, stream.seed()),
        counts,
        bins,
        tolerances: *tol,
    })
}

/// One inequality `lhs ≤ rhs` of the chain, accepted within `slack`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Link {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
    pub slack: f64,
    pub pass: bool,
}

impl Link {
    pub fn new(name: &str, lhs: f64, rhs: f64, slack: f64) -> Self {
        let margin = rhs - lhs;
        Link {
            name: name.to_string(),
            lhs,
            rhs,
            margin,
            slack,
            pass: margin >= -slack,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AbpReport {
    pub image_measure: MeasureEstimate,
    pub half_ball: f64,
    pub det_integral: f64,
    pub amgm_integral: f64,
    pub domain_volume: f64,
    pub contact_volume: f64,
    pub quotient: Quotient,
    pub links: Vec<Link>,
    /// Γ₊¹ vertices whose recovered Hessian had a negative eigenvalue (det set to 0).
    pub clamped: usize,
    /// Largest pointwise `det ∇²u − (Δu/N)^N` over Γ₊¹.
    pub amgm_pointwise_excess: f64,
    pub recovery_fallbacks: usize,
    pub tolerances: AbpTolerances,
    pub seed: u64,
}

/// Evaluate `½|𝔹^N| ≤ |∇u(Γ₊¹)| ≤ ∫det ∇²u ≤ ∫(Δu/N)^N ≤ |Ω|` over
/// Γ₊¹ = contact vertices with |∇u| < 1, with vertex-lumped integrals.
/// Each link is accepted within `3·SE + rel_slack · rhs`.
pub fn abp_chain(
    solved: &SolvedDomain,
    contact: &ContactSet,
    hessian: &HessianField,
    image: &ImageMeasure,
    rel_slack: f64,
) -> Result<AbpReport> {
    let dim = solved.mesh.ambient_dim();
    let nf = dim as f64;
    let mut det_integral = 0.0;
    let mut amgm_integral = 0.0;
    let mut contact_volume = 0.0;
    let mut clamped = 0;
    let mut excess = f64::NEG_INFINITY;
    for v in 0..solved.mesh.vertex_count() {
        if !contact.contains(v) || norm(&solved.vertex_gradients[v]) >= 1.0 {
            continue;
        }
        let eig = SymmetricEigen::new(hessian.at(v).clone()).eigenvalues;
        let tr: f64 = eig.iter().sum();
        let det = if eig.iter().all(|&l| l >= 0.0) {
            eig.iter().product()
        } else {
            clamped += 1;
            0.0
        };
        let am = (tr.max(0.0) / nf).powi(dim as i32);
        excess = excess.max(det - am);
        det_integral += solved.mass[v] * det;
        amgm_integral += solved.mass[v] * am;
        contact_volume += solved.mass[v];
    }
    let half_ball = 0.5 * ball_volume(dim)?;
    let volume = solved.mesh.measures().volume;
    let se = image.estimate.standard_error;
    let links = vec![
        Link::new(
            "half_ball<=image_measure",
            half_ball,
            image.estimate.value,
            3.0 * se + rel_slack * half_ball,
        ),
        Link::new(
            "image_measure<=det_integral",
            image.estimate.value,
            det_integral,
            3.0 * se + rel_slack * det_integral,
        ),
        Link::new(
            "det_integral<=amgm_integral",
            det_integral,
            amgm_integral,
            rel_slack * amgm_integral,
        ),
        Link::new(
            "amgm_integral<=domain_volume",
            amgm_integral,
            volume,
            rel_slack * volume,
        ),
    ];
    Ok(AbpReport {
        image_measure: image.estimate,
        half_ball,
        det_integral,
        amgm_integral,
        domain_volume: volume,
        contact_volume,
        quotient: relative_quotient_codim0(&solved.mesh)?,
        links,
        clamped,
        amgm_pointwise_excess: if excess.is_finite() { excess } else { 0.0 },
        recovery_fallbacks: hessian.fallback_count(),
        tolerances: image.tolerances,
        seed: image.estimate.seed,
    })
}

/// `lhs/rhs` of the relative isoperimetric quotient, or of the classical
/// one when the mesh has no free boundary.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quotient {
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
    /// Whether the factor (½)^{1/n} was applied.
    pub relative: bool,
}

/// `|Σ|/|∂𝔹^N|` against `(½)^{1/N} (|Ω|/|𝔹^N|)^{(N−1)/N}`; without Γ the
/// factor ½ is dropped (classical isoperimetric inequality).
pub fn relative_quotient_codim0(mesh: &SimplicialMesh) -> Result<Quotient> {
    codim0_precondition(mesh)?;
    let n = mesh.ambient_dim();
    let nf = n as f64;
    let m = mesh.measures();
    let relative = m.gamma > 0.0;
    let lhs = m.sigma / sphere_area(n)?;
    let half = if relative { 0.5f64.powf(1.0 / nf) } else { 1.0 };
    let rhs = half * (m.volume / ball_volume(n)?).powf((nf - 1.0) / nf);
    Ok(Quotient {
        lhs,
        rhs,
        ratio: lhs / rhs,
        relative,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EqualityDiagnostics {
    /// max over Γ₊¹ of the spectral norm of ∇²u − I.
    pub hessian_deviation: f64,
    /// Vertex where that maximum is attained.
    pub worst_vertex: Option<usize>,
    /// |Γ₊¹| / |Ω| (lumped).
    pub contact_fraction: f64,
    /// Best-fit center of u ≈ |x − x₀|²/2 + c.
    pub center: Vec<f64>,
    /// Mass-weighted RMS of the fit residual.
    pub fit_residual: f64,
}

pub fn equality_diagnostics(
    solved: &SolvedDomain,
    contact: &ContactSet,
    hessian: &HessianField,
) -> Result<EqualityDiagnostics> {
    let dim = solved.mesh.ambient_dim();
    let mut dev = 0.0f64;
    let mut worst = None;
    let mut cvol = 0.0;
    for v in 0..solved.mesh.vertex_count() {
        if !contact.contains(v) || norm(&solved.vertex_gradients[v]) >= 1.0 {
            continue;
        }
        cvol += solved.mass[v];
        let d = hessian.at(v) - DMatrix::<f64>::identity(dim, dim);
        let s = SymmetricEigen::new(d).eigenvalues.abs().max();
        if s > dev {
            dev = s;
            worst = Some(v);
        }
    }
    // u − |x|²/2 = −⟨x, x₀⟩ + c' : weighted linear least squares in (x₀, c')
    let k = dim + 1;
    let mut ata = DMatrix::<f64>::zeros(k, k);
    let mut atb = DVector::<f64>::zeros(k);
    for (v, x) in solved.mesh.vertices().iter().enumerate() {
        let w = solved.mass[v];
        let mut row = DVector::<f64>::zeros(k);
        for i in 0..dim {
            row[i] = -x[i];
        }
        row[dim] = 1.0;
        let target = solved.u()[v] - 0.5 * dot(x, x);
        ata += w * &row * row.transpose();
        atb += w * target * &row;
    }
    let sol = ata
        .cholesky()
        .ok_or_else(|| Error::Solver("degenerate center fit".into()))?
        .solve(&atb);
    let mut res = 0.0;
    let mut tot = 0.0;
    for (v, x) in solved.mesh.vertices().iter().enumerate() {
        let fit: f64 = 0.5 * dot(x, x) - (0..dim).map(|i| x[i] * sol[i]).sum::<f64>() + sol[dim];
        res += solved.mass[v] * (solved.u()[v] - fit).powi(2);
        tot += solved.mass[v];
    }
    Ok(EqualityDiagnostics {
        hessian_deviation: dev,
        worst_vertex: worst,
        contact_fraction: cvol / solved.mesh.measures().volume,
        center: (0..dim).map(|i| sol[i]).collect(),
        fit_residual: (res / tot).sqrt(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::normalize_codim0;
    use crate::fixtures::Fixture;
    use std::f64::consts::PI;

    fn solved(h: f64) -> SolvedDomain {
        let (m, _) = normalize_codim0(&Fixture::HalfDisk.generate(h).unwrap()).unwrap();
        SolvedDomain::solve(m).unwrap()
    }

    #[test]
    fn convex_field_is_all_contact() {
        let s = solved(0.05);
        let tol = AbpTolerances::for_mesh(&s.mesh);
        let c = contact_set(&s.mesh, s.u(), &s.vertex_gradients, tol.contact);
        for v in 0..s.mesh.vertex_count() {
            if !s.on_sigma[v] {
                assert!(c.contains(v), "vertex {v} slack {}", c.slack[v]);
            }
        }
        let exact = contact_set(&s.mesh, s.u(), &s.vertex_gradients, 0.0);
        let loose = contact_set(&s.mesh, s.u(), &s.vertex_gradients, 1e-6);
        for v in 0..s.mesh.vertex_count() {
            if exact.contains(v) != loose.contains(v) {
                assert!(c.slack[v] >= -1e-6);
            }
        }
    }

    #[test]
    fn local_max_is_excluded() {
        let m = Fixture::UnitSquare.generate(0.1).unwrap();
        let u: Vec<f64> = m
            .vertices()
            .iter()
            .map(|x| -((x[0] - 0.5).powi(2) + (x[1] - 0.5).powi(2)))
            .collect();
        let g = gradient(&m, &ScalarField::new(&m, u.clone()).unwrap()).vertex_average(&m);
        let c = contact_set(&m, &u, &g, 1e-12);
        let center = m
            .vertices()
            .iter()
            .position(|x| (x[0] - 0.5).abs() < 1e-12 && (x[1] - 0.5).abs() < 1e-12)
            .unwrap();
        assert!(!c.contains(center));
    }

    #[test]
    fn membership_examples() {
        let s = solved(0.02);
        let tol = AbpTolerances::for_mesh(&s.mesh);
        let c = contact_set(&s.mesh, s.u(), &s.vertex_gradients, tol.contact);
        let v = image_membership(&[0.3, 0.4], &s, &c, &tol).unwrap();
        assert_eq!(v.status, MembershipStatus::InteriorContact);
        let q = s.mesh.vertex(v.witness);
        assert!((q[0] - 0.3).abs() < 0.05 && (q[1] - 0.4).abs() < 0.05);
        let below = image_membership(&[0.5, -0.2], &s, &c, &tol).unwrap();
        assert_eq!(below.status, MembershipStatus::RejectGradient);
        assert!(s.on_gamma[below.witness]);
        let zero = image_membership(&[0.0, 0.0], &s, &c, &tol).unwrap();
        assert!(zero.status.accepted());
        assert!(zero.gradient_residual < tol.gradient);
        assert!(matches!(
            image_membership(&[1.0, 0.0], &s, &c, &tol),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn quotient_examples() {
        let hd = Fixture::HalfDisk.generate(0.02).unwrap();
        let q = relative_quotient_codim0(&hd).unwrap();
        assert!((q.ratio - 1.0).abs() < 0.01);
        let q2 = relative_quotient_codim0(&hd.scaled(2.0).unwrap()).unwrap();
        assert!((q2.ratio - q.ratio).abs() < 1e-12);
        let sq = relative_quotient_codim0(&Fixture::UnitSquare.generate(0.1).unwrap()).unwrap();
        assert!(!sq.relative);
        // 4/(2π) against (1/π)^{1/2}
        assert!((sq.ratio - (4.0 / (2.0 * PI)) / (1.0 / PI).sqrt()).abs() < 1e-12);
    }
}
