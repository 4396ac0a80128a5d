//! Invariance and property tests across modules.

use std::f64::consts::PI;

use abp_core::abp::relative_quotient_codim0;
use abp_core::cones::{
    argmin_contact, generalized_cone_contains, random_convex_configuration, ConeQuery,
    LabeledPointSet,
};
use abp_core::domain::{normalize_codim0, solve_mixed_neumann};
use abp_core::fem::ScalarField;
use abp_core::fixtures::Fixture;
use abp_core::manifold::{curvature, michael_simon_eval, quotient_report};
use abp_core::{run, Point, RunConfig, SampleStream, Subcommand};
use proptest::prelude::*;

fn rotation(theta: f64) -> Vec<Vec<f64>> {
    vec![
        vec![theta.cos(), -theta.sin()],
        vec![theta.sin(), theta.cos()],
    ]
}

#[test]
fn codim0_quotient_is_invariant_under_rigid_motion_and_scale() {
    let mesh = Fixture::PerturbedHalfDisk { amplitude: 0.1 }
        .generate(0.05)
        .unwrap();
    let q = relative_quotient_codim0(&mesh).unwrap().ratio;
    let moved = mesh.rigid_motion(&rotation(0.7), &[3.0, -2.0]).unwrap();
    let scaled = mesh.scaled(4.5).unwrap();
    for other in [moved, scaled] {
        let r = relative_quotient_codim0(&other).unwrap().ratio;
        assert!((r - q).abs() < 1e-12, "{r} vs {q}");
    }
}

#[test]
fn submanifold_quotient_is_scale_invariant() {
    let mesh = Fixture::SphereCap { theta0: PI / 4.0 }
        .generate(0.06)
        .unwrap();
    let q = quotient_report(&mesh, &curvature(&mesh).unwrap())
        .unwrap()
        .relative
        .ratio;
    let big = mesh.scaled(3.0).unwrap();
    let r = quotient_report(&big, &curvature(&big).unwrap())
        .unwrap()
        .relative
        .ratio;
    assert!((r - q).abs() < 1e-9 * q, "{r} vs {q}");
}

#[test]
fn solution_follows_vertex_permutation() {
    let (mesh, _) = normalize_codim0(&Fixture::HalfDisk.generate(0.08).unwrap()).unwrap();
    let n = mesh.vertex_count();
    // a fixed-point-free shuffle: reverse order
    let perm: Vec<usize> = (0..n).map(|i| n - 1 - i).collect();
    let permuted = mesh.permuted(&perm).unwrap();
    let a = solve_mixed_neumann(&mesh).unwrap().field;
    let b = solve_mixed_neumann(&permuted).unwrap().field;
    for (old, &new) in perm.iter().enumerate() {
        assert!((a.values()[old] - b.values()[new]).abs() < 1e-9);
    }
}

#[test]
fn michael_simon_ratio_is_invariant_under_rotation() {
    let mesh = Fixture::FlatHalfDiskEmbedded { ambient: 3 }
        .generate(0.06)
        .unwrap();
    let f = |x: &[f64]| {
        (1.0 - (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]) / 0.81)
            .max(0.0)
            .powi(2)
    };
    let a = michael_simon_eval(
        &mesh,
        &curvature(&mesh).unwrap(),
        &ScalarField::from_fn(&mesh, f).unwrap(),
    )
    .unwrap();
    let (c, s) = (0.4f64.cos(), 0.4f64.sin());
    let rot = vec![vec![1.0, 0.0, 0.0], vec![0.0, c, -s], vec![0.0, s, c]];
    let moved = mesh.rigid_motion(&rot, &[0.0; 3]).unwrap();
    let b = michael_simon_eval(
        &moved,
        &curvature(&moved).unwrap(),
        &ScalarField::from_fn(&moved, f).unwrap(),
    )
    .unwrap();
    assert!(
        (a.ratio - b.ratio).abs() < 1e-9,
        "{} vs {}",
        a.ratio,
        b.ratio
    );
}

#[test]
fn fixture_files_round_trip_through_the_fixtures_run() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = RunConfig::new(Subcommand::Fixtures, 5);
    cfg.h = 0.1;
    cfg.out = Some(dir.path().to_path_buf());
    let report = run(&cfg).unwrap().report;
    assert!(report.passed(), "{}", report.summary());
    let path = dir.path().join("fixtures").join("00_half_disk.json");
    let mesh = abp_core::SimplicialMesh::load(&path).unwrap();
    let fresh = Fixture::HalfDisk.generate(0.1).unwrap();
    assert_eq!(mesh.vertices(), fresh.vertices());
    assert_eq!(mesh.exact(), fresh.exact());
    let json = std::fs::read_to_string(dir.path().join("report.json")).unwrap();
    let back = abp_core::VerificationReport::from_json(&json).unwrap();
    assert_eq!(back.schema_version, abp_core::report::SCHEMA_VERSION);
    assert!(back.checks.iter().all(|c| c.pass == c.recompute()));
    assert!(dir.path().join("fixtures.csv").exists());
}

#[test]
fn mesh_inputs_feed_the_quotient_stage() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("wedge.json");
    Fixture::QuarterWedge
        .generate(0.1)
        .unwrap()
        .save(&path)
        .unwrap();
    let mut cfg = RunConfig::new(Subcommand::Quotient, 1);
    cfg.h = 0.1;
    cfg.inputs = vec![path.clone()];
    let report = run(&cfg).unwrap().report;
    let name = format!("{}/quotient", path.display());
    assert!(report.check(&name).unwrap().pass);
}

#[test]
fn different_seeds_change_monte_carlo_only() {
    let mut cfg = RunConfig::new(Subcommand::Cones, 1);
    cfg.samples = 5000;
    let a = run(&cfg).unwrap().report;
    cfg.seed = 2;
    let b = run(&cfg).unwrap().report;
    let exact = |r: &abp_core::VerificationReport| r.check("two_point_exact").unwrap().lhs;
    assert_eq!(exact(&a), exact(&b));
    let mc = |r: &abp_core::VerificationReport| r.check("two_point_monte_carlo").unwrap().lhs;
    assert_ne!(mc(&a), mc(&b));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    /// With u ≡ 0, cone membership scales: ξ at ρ iff ρ'ξ/ρ at ρ'.
    #[test]
    fn cone_membership_scales(seed in 0u64..1000, angle in 0.0f64..(2.0 * PI), rho in 0.1f64..3.0, rho2 in 0.1f64..3.0) {
        let mut s = SampleStream::new(seed);
        let set = random_convex_configuration(2, 6, &mut s).unwrap();
        let flat = set.with_u(vec![0.0; set.len()]).unwrap();
        let dir = [angle.cos(), angle.sin()];
        for p in 0..flat.len() {
            let a = generalized_cone_contains(&flat, &ConeQuery::new(p, dir.iter().map(|c| c * rho).collect(), rho).unwrap()).unwrap();
            let b = generalized_cone_contains(&flat, &ConeQuery::new(p, dir.iter().map(|c| c * rho2).collect(), rho2).unwrap()).unwrap();
            prop_assert_eq!(a, b);
        }
    }

    /// The argmin point always contains ξ in its generalized cone.
    #[test]
    fn argmin_covers_the_sphere(seed in 0u64..1000, dim in 2usize..5, rho in 0.2f64..3.0) {
        let mut s = SampleStream::new(seed);
        let set = random_convex_configuration(dim, 8, &mut s).unwrap();
        let xi: Vec<f64> = s.unit_vector(dim).iter().map(|c| c * rho).collect();
        let c = argmin_contact(&set, &xi).unwrap();
        prop_assert!(c.tie || generalized_cone_contains(&set, &ConeQuery::new(c.index, xi, rho).unwrap()).unwrap());
    }

    /// Translating the configuration and shifting u by a linear function
    /// leaves the argmin index unchanged.
    #[test]
    fn argmin_is_affine_invariant(seed in 0u64..1000, shift in -2.0f64..2.0) {
        let mut s = SampleStream::new(seed);
        let set = random_convex_configuration(3, 10, &mut s).unwrap();
        let xi = s.unit_vector(3);
        let t = [shift, -shift, 0.5];
        let moved = LabeledPointSet::new(
            (0..set.len())
                .map(|i| Point::new(set.point(i).iter().zip(&t).map(|(a, b)| a + b).collect()).unwrap())
                .collect(),
            (0..set.len()).map(|i| set.u(i) + shift).collect(),
            None,
        )
        .unwrap();
        let a = argmin_contact(&set, &xi).unwrap();
        let b = argmin_contact(&moved, &xi).unwrap();
        prop_assume!(!a.tie);
        prop_assert_eq!(a.index, b.index);
    }
}
