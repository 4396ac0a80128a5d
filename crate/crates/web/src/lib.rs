//! Browser bindings: each export takes plain numbers or text and returns a
//! JSON string for the page to draw.

use abp_core::abp::{
    contact_set, image_membership, relative_quotient_codim0, AbpTolerances, MembershipStatus,
    SolvedDomain,
};
use abp_core::cones::{
    exact_restricted_union_measure, restricted_cone_arcs, sigma_validity, LabeledPointSet,
};
use abp_core::domain::normalize_codim0;
use abp_core::fixtures::Fixture;
use abp_core::manifold::{curvature, quotient_report};
use abp_core::{ball_volume, Label, MeasureEstimate, Result, SampleStream};
use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

/// Largest number of sample points sent back for drawing.
pub const MAX_DRAWN: usize = 4000;

pub const TWO_POINT: &str = "# x y u sigma_x sigma_y\n1 0 0 1 0\n-1 0 1 -1 0\n";

/// Restricted cones of a planar configuration on the circle of radius ρ.
pub fn cone_arcs(text: &str, rho: f64) -> Result<Value> {
    let set = LabeledPointSet::parse(text)?;
    let valid = sigma_validity(&set)?;
    let mut points = Vec::new();
    for (p, &ok) in valid.iter().enumerate() {
        let arcs = restricted_cone_arcs(&set, p, rho)?;
        points.push(json!({
            "x": set.point(p),
            "u": set.u(p),
            "sigma": set.sigma(p),
            "sigma_valid": ok,
            "arcs": arcs.intervals(),
            "measure": arcs.measure() * rho,
        }));
    }
    let union = exact_restricted_union_measure(&set, rho)?;
    let half = std::f64::consts::PI * rho;
    Ok(
        json!({ "rho": rho, "points": points, "union": union, "half_circle": half, "ratio": union / half }),
    )
}

fn status_code(s: MembershipStatus) -> u8 {
    match s {
        MembershipStatus::InteriorContact => 0,
        MembershipStatus::FreeBoundaryContact => 1,
        MembershipStatus::RejectSigma => 2,
        MembershipStatus::RejectGradient => 3,
    }
}

fn outline(mesh: &abp_core::SimplicialMesh) -> Vec<Value> {
    mesh.boundary()
        .iter()
        .map(|f| {
            json!({
                "a": mesh.vertex(f.face[0]),
                "b": mesh.vertex(f.face[1]),
                "sigma": f.label == Label::Sigma,
            })
        })
        .collect()
}

/// Gradient image of the mixed Neumann solution on a perturbed half-disk.
pub fn abp_image(amplitude: f64, h: f64, samples: usize, seed: u64) -> Result<Value> {
    let raw = Fixture::PerturbedHalfDisk { amplitude }.generate(h)?;
    let (mesh, scale) = normalize_codim0(&raw)?;
    let tol = AbpTolerances::for_mesh(&mesh);
    let solved = SolvedDomain::solve(mesh)?;
    let contact = contact_set(
        &solved.mesh,
        solved.u(),
        &solved.vertex_gradients,
        tol.contact,
    );
    let mut stream = SampleStream::new(seed);
    let mut counts = [0usize; 4];
    let mut drawn = Vec::with_capacity(samples.min(MAX_DRAWN));
    for k in 0..samples {
        let xi = stream.ball_vector(2);
        let code = status_code(image_membership(&xi, &solved, &contact, &tol)?.status);
        counts[code as usize] += 1;
        if k < MAX_DRAWN {
            drawn.push(json!([xi[0], xi[1], code]));
        }
    }
    let est = MeasureEstimate::from_hits(counts[0] + counts[1], samples, ball_volume(2)?, seed);
    let q = relative_quotient_codim0(&solved.mesh)?;
    Ok(json!({
        "scale": scale,
        "mesh_size": solved.mesh.mesh_size(),
        "outline": outline(&solved.mesh),
        "samples": drawn,
        "counts": counts,
        "estimate": est.value,
        "standard_error": est.standard_error,
        "half_ball": 0.5 * ball_volume(2)?,
        "quotient": q.ratio,
    }))
}

/// Measures and isoperimetric quotient of a named fixture.
pub fn fixture_quotient(spec: &str, h: f64) -> Result<Value> {
    let fixture: Fixture = spec.parse()?;
    let mesh = fixture.generate(h)?;
    let m = mesh.measures();
    let quotient = if mesh.codim() == 0 {
        let q = relative_quotient_codim0(&mesh)?;
        json!({ "lhs": q.lhs, "rhs": q.rhs, "ratio": q.ratio, "mean_curvature_integral": 0.0 })
    } else {
        let r = quotient_report(&mesh, &curvature(&mesh)?)?;
        json!({
            "lhs": r.relative.lhs,
            "rhs": r.relative.rhs,
            "ratio": r.relative.ratio,
            "mean_curvature_integral": r.mean_curvature_integral,
        })
    };
    let drawable = mesh.ambient_dim() >= 2 && mesh.intrinsic_dim() == 2;
    let triangles: Vec<Value> = if drawable {
        mesh.cells()
            .iter()
            .map(|c| {
                json!(c
                    .iter()
                    .map(|&v| [mesh.vertex(v)[0], mesh.vertex(v)[1]])
                    .collect::<Vec<_>>())
            })
            .collect()
    } else {
        Vec::new()
    };
    Ok(json!({
        "fixture": fixture.name(),
        "ambient_dim": mesh.ambient_dim(),
        "intrinsic_dim": mesh.intrinsic_dim(),
        "vertices": mesh.vertex_count(),
        "cells": mesh.cell_count(),
        "mesh_size": mesh.mesh_size(),
        "volume": m.volume,
        "sigma": m.sigma,
        "gamma": m.gamma,
        "quotient": quotient,
        "triangles": triangles,
    }))
}

fn to_js(v: Result<Value>) -> std::result::Result<String, JsError> {
    v.map(|v| v.to_string())
        .map_err(|e| JsError::new(&e.to_string()))
}

#[wasm_bindgen(js_name = coneArcs)]
pub fn cone_arcs_js(text: &str, rho: f64) -> std::result::Result<String, JsError> {
    to_js(cone_arcs(text, rho))
}

#[wasm_bindgen(js_name = abpImage)]
pub fn abp_image_js(
    amplitude: f64,
    h: f64,
    samples: u32,
    seed: u32,
) -> std::result::Result<String, JsError> {
    to_js(abp_image(amplitude, h, samples as usize, seed as u64))
}

#[wasm_bindgen(js_name = fixtureQuotient)]
pub fn fixture_quotient_js(spec: &str, h: f64) -> std::result::Result<String, JsError> {
    to_js(fixture_quotient(spec, h))
}

#[wasm_bindgen(js_name = twoPointConfiguration)]
pub fn two_point_js() -> String {
    TWO_POINT.to_string()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn two_point_union_is_five_thirds_pi() {
        let v = cone_arcs(TWO_POINT, 1.0).unwrap();
        assert!((v["union"].as_f64().unwrap() - 5.0 * PI / 3.0).abs() < 1e-10);
        assert_eq!(v["points"].as_array().unwrap().len(), 2);
    }

    #[test]
    fn half_disk_image_is_near_half_ball() {
        let v = abp_image(0.0, 0.08, 4000, 1).unwrap();
        let est = v["estimate"].as_f64().unwrap();
        assert!((est - PI / 2.0).abs() < 0.15, "{est}");
        assert_eq!(v["samples"].as_array().unwrap().len(), 4000);
    }

    #[test]
    fn perturbed_quotient_exceeds_one() {
        let v = fixture_quotient("perturbed_half_disk(0.2)", 0.06).unwrap();
        assert!(v["quotient"]["ratio"].as_f64().unwrap() > 1.0);
        assert!(!v["triangles"].as_array().unwrap().is_empty());
    }

    #[test]
    fn bad_input_is_an_error() {
        assert!(cone_arcs("1 2", 1.0).is_err());
        assert!(fixture_quotient("nonsense", 0.1).is_err());
    }
}
