//! Codimension-0 domains: normalization and the mixed Neumann problem
//! `Δu = N` in Ω, `∂_ν u = 1` on Σ, `∂_ν u = 0` on Γ.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::euclid::dot;
use crate::fem::{gradient, sigma_load, solve_neumann, ScalarField};
use crate::mesh::{Label, Measures, SimplicialMesh};

pub fn load_and_validate(path: &Path) -> Result<SimplicialMesh> {
    SimplicialMesh::load(path)
}

pub fn measures(mesh: &SimplicialMesh) -> Measures {
    mesh.measures()
}

/// Rescale so that `|Σ| / |Ω| = N`; returns the scaled mesh and the factor
/// `s = |Σ| / (N |Ω|)`.
pub fn normalize_codim0(mesh: &SimplicialMesh) -> Result<(SimplicialMesh, f64)> {
    let m = mesh.measures();
    if !(m.sigma > 0.0) {
        return Err(Error::Precondition(
            "normalization needs a nonempty relative boundary Σ".into(),
        ));
    }
    let s = m.sigma / (mesh.ambient_dim() as f64 * m.volume);
    Ok((mesh.scaled(s)?, s))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MixedSolution {
    pub field: ScalarField,
    /// Relative residual of the linear system.
    pub residual: f64,
    /// `|N |Ω| − |Σ||`.
    pub compatibility_residual: f64,
    /// Vertices where Σ meets Γ.
    pub corners: Vec<usize>,
    /// Largest `|⟨∇u, ν⟩ − 1|` over Σ faces touching a corner.
    pub corner_flux_error: f64,
}

pub fn codim0_precondition(mesh: &SimplicialMesh) -> Result<()> {
    if mesh.codim() != 0 {
        return Err(Error::Precondition(format!(
            "expected a codimension-0 domain, got an {}-dimensional mesh in R^{}",
            mesh.intrinsic_dim(),
            mesh.ambient_dim()
        )));
    }
    Ok(())
}

/// P1 solution of the mixed problem with lumped-mass mean zero. The mesh
/// must already satisfy `|Σ| = N |Ω|` (see [`normalize_codim0`]).
pub fn solve_mixed_neumann(mesh: &SimplicialMesh) -> Result<MixedSolution> {
    codim0_precondition(mesh)?;
    let n = mesh.ambient_dim() as f64;
    let m = mesh.measures();
    let defect = (n * m.volume - m.sigma).abs();
    if !(m.sigma > 0.0) || defect > 1e-10 * m.sigma {
        return Err(Error::Precondition(format!(
            "mesh is not normalized: N|Ω| − |Σ| = {:e}; call normalize_codim0 first",
            n * m.volume - m.sigma
        )));
    }
    let mass = mesh.lumped_mass();
    let load: Vec<f64> = sigma_load(mesh)
        .iter()
        .zip(&mass)
        .map(|(b, w)| b - n * w)
        .collect();
    let sol = solve_neumann(mesh, None, &load)?;
    let (on_sigma, on_gamma) = mesh.vertex_labels();
    let corners: Vec<usize> = (0..mesh.vertex_count())
        .filter(|&v| on_sigma[v] && on_gamma[v])
        .collect();
    let grad = gradient(mesh, &sol.field);
    let mut corner_flux_error: f64 = 0.0;
    for bf in mesh.boundary() {
        if bf.label != Label::Sigma || !bf.face.iter().any(|v| corners.contains(v)) {
            continue;
        }
        let Some(nu) = mesh.face_conormal(&bf.face) else {
            continue;
        };
        let cell = mesh
            .cells()
            .iter()
            .position(|c| bf.face.iter().all(|v| c.contains(v)))
            .expect("boundary face belongs to a cell");
        corner_flux_error = corner_flux_error.max((dot(grad.cell(cell), &nu) - 1.0).abs());
    }
    Ok(MixedSolution {
        field: sol.field,
        residual: sol.residual,
        compatibility_residual: defect,
        corners,
        corner_flux_error,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::integrate;
    use crate::fixtures::Fixture;
    use std::f64::consts::PI;

    #[test]
    fn normalization_examples() {
        let hd = Fixture::HalfDisk.generate(0.05).unwrap();
        let (_, s) = normalize_codim0(&hd).unwrap();
        let m = hd.measures();
        assert!((s - m.sigma / (2.0 * m.volume)).abs() < 1e-15);
        assert!((s - 1.0).abs() < 5e-3);
        let big = hd.scaled(3.0).unwrap();
        let (_, s3) = normalize_codim0(&big).unwrap();
        assert!((s3 * 3.0 - s).abs() < 1e-12);
        let sq = Fixture::UnitSquare.generate(0.1).unwrap();
        let (scaled, s) = normalize_codim0(&sq).unwrap();
        assert!((s - 2.0).abs() < 1e-12);
        let r = scaled.measures();
        assert!((r.sigma / r.volume - 2.0).abs() < 1e-12);
    }

    #[test]
    fn unnormalized_mesh_is_refused() {
        let sq = Fixture::UnitSquare.generate(0.1).unwrap();
        let err = solve_mixed_neumann(&sq).unwrap_err().to_string();
        assert!(err.contains("normalize"), "{err}");
    }

    #[test]
    fn half_disk_solution_is_quadratic() {
        let (m, _) = normalize_codim0(&Fixture::HalfDisk.generate(0.04).unwrap()).unwrap();
        let sol = solve_mixed_neumann(&m).unwrap();
        assert!(sol.residual < 1e-10);
        assert!(sol.compatibility_residual < 1e-10);
        assert_eq!(sol.corners.len(), 2);
        let q: Vec<f64> = m
            .vertices()
            .iter()
            .map(|x| 0.5 * (x[0] * x[0] + x[1] * x[1]))
            .collect();
        let mean = integrate(&m, &q) / m.measures().volume;
        let err = sol
            .field
            .values()
            .iter()
            .zip(&q)
            .map(|(u, e)| (u - e + mean).abs())
            .fold(0.0, f64::max);
        assert!(err < 2e-3, "max error {err}");
        assert!(mean > 0.0 && mean < PI);
    }
}
