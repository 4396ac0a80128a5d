//! Acceptance criteria 1–11, one PASS/FAIL line each.
//!
//! Reference values are computed here from closed forms, not taken from the
//! library.

use std::f64::consts::{FRAC_PI_2, PI};
use std::time::{Duration, Instant};

use abp_core::abp::{
    abp_chain, contact_set, equality_diagnostics, image_measure, AbpTolerances, SolvedDomain,
};
use abp_core::cones::{
    exact_restricted_union_measure, random_convex_configuration, restricted_union_measure,
    LabeledPointSet,
};
use abp_core::domain::{normalize_codim0, solve_mixed_neumann};
use abp_core::fem::ScalarField;
use abp_core::fixtures::Fixture;
use abp_core::logsob::{gaussian_corollary_eval, logsob_check, Density};
use abp_core::manifold::{
    analytic_mass_bound, curvature, jacobian_bound_samples, michael_simon_eval, volume_bound_check,
    SolvedSubmanifold,
};
use abp_core::{
    ball_volume, brendle_constant, run, Point, RunConfig, SampleStream, SimplicialMesh, Subcommand,
};

const SEED: u64 = 20_240_601;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

/// |𝔹^n| by the recurrence V_n = 2π/n · V_{n−2}.
fn ball(n: usize) -> f64 {
    match n {
        0 => 1.0,
        1 => 2.0,
        _ => 2.0 * PI / n as f64 * ball(n - 2),
    }
}

/// |𝕊^{n−1}| = n |𝔹^n|.
fn sphere(n: usize) -> f64 {
    n as f64 * ball(n)
}

fn half_disk(h: f64) -> SimplicialMesh {
    normalize_codim0(&Fixture::HalfDisk.generate(h).unwrap())
        .unwrap()
        .0
}

fn pde_error(h: f64) -> f64 {
    let mesh = half_disk(h);
    let u = solve_mixed_neumann(&mesh).unwrap().field;
    let mass = mesh.lumped_mass();
    let q: Vec<f64> = mesh
        .vertices()
        .iter()
        .map(|x| 0.5 * (x[0] * x[0] + x[1] * x[1]))
        .collect();
    let mean = q.iter().zip(&mass).map(|(a, b)| a * b).sum::<f64>() / mass.iter().sum::<f64>();
    u.values()
        .iter()
        .zip(&q)
        .map(|(a, b)| (a - b + mean).abs())
        .fold(0.0, f64::max)
}

/// |Σ|/|∂𝔹²| over (½)^{1/2} (|Ω|/|𝔹²|)^{1/2}.
fn planar_relative_ratio(mesh: &SimplicialMesh) -> f64 {
    let m = mesh.measures();
    (m.sigma / (2.0 * PI)) / (0.5f64.sqrt() * (m.volume / PI).sqrt())
}

fn ac1() -> Outcome {
    let mut exact = true;
    let mut identity = 0.0f64;
    let mut volumes = 0.0f64;
    for n in 1..=10 {
        exact &= brendle_constant(n, 1).unwrap() == 1.0 && brendle_constant(n, 2).unwrap() == 1.0;
        let (l, r) = (
            (n + 2) as f64 * ball_volume(n + 2).unwrap(),
            2.0 * ball_volume(n).unwrap() * ball_volume(2).unwrap(),
        );
        identity = identity.max((l - r).abs() / r);
        volumes = volumes.max((ball_volume(n).unwrap() - ball(n)).abs() / ball(n));
    }
    let b23 = (brendle_constant(2, 3).unwrap() - (2.0f64 / 3.0).sqrt()).abs();
    outcome(
        exact && identity <= 1e-12 && volumes <= 1e-12 && b23 <= 1e-12,
        format!("b(n,1)=b(n,2)=1 exactly: {exact}; identity rel err {identity:.1e}; |B^n| rel err {volumes:.1e}; b_2,3 err {b23:.1e}"),
    )
}

fn ac2() -> Outcome {
    let e = |s: f64| Point::new(vec![s, 0.0]).unwrap();
    let set = LabeledPointSet::new(
        vec![e(1.0), e(-1.0)],
        vec![0.0, 1.0],
        Some(vec![e(1.0), e(-1.0)]),
    )
    .unwrap();
    // p₊ = e₁ owns {cos θ ≥ −1/2}, an arc of 4π/3, cut by σ to the right half (π);
    // p₋ owns the rest (2π/3), all of it in its left half. Union: 5π/3.
    let oracle = PI + 2.0 * PI / 3.0;
    let exact = exact_restricted_union_measure(&set, 1.0).unwrap();
    let mc = restricted_union_measure(&set, 1.0, 100_000, &SampleStream::new(SEED))
        .unwrap()
        .estimate;
    let dev = (mc.value - oracle).abs();
    outcome(
        (exact - oracle).abs() <= 1e-10 && dev <= 3.0 * mc.standard_error,
        format!(
            "exact {exact:.12} vs 5π/3 {oracle:.12}; MC {:.5} ± {:.5} (|dev| {dev:.5})",
            mc.value, mc.standard_error
        ),
    )
}

fn ac3() -> Outcome {
    let mut gen = SampleStream::with_stream(SEED, 3);
    let mut worst = f64::INFINITY;
    let mut failures = 0;
    for c in 0..100 {
        let dim = 2 + c % 3;
        let count = 5 + gen.index(16);
        let set = random_convex_configuration(dim, count, &mut gen).unwrap();
        for (j, rho) in [0.3, 1.0, 2.0].into_iter().enumerate() {
            let stream = SampleStream::with_stream(SEED, 4).fork((3 * c + j) as u64);
            let m = restricted_union_measure(&set, rho, 20_000, &stream)
                .unwrap()
                .estimate;
            let half = 0.5 * sphere(dim) * rho.powi(dim as i32 - 1);
            let z = (m.value - half) / m.standard_error.max(f64::MIN_POSITIVE);
            worst = worst.min(z);
            if m.value < half - 3.0 * m.standard_error {
                failures += 1;
            }
        }
    }
    outcome(
        failures == 0,
        format!("300 (configuration, ρ) pairs, {failures} below ½|S| − 3SE; worst z = {worst:.2}"),
    )
}

fn ac4() -> Outcome {
    let (coarse, fine) = (pde_error(0.04), pde_error(0.02));
    let factor = coarse / fine;
    outcome(
        factor >= 3.0,
        format!("max error {coarse:.3e} → {fine:.3e}, factor {factor:.2}"),
    )
}

struct AbpRun {
    image: f64,
    se: f64,
    chain: [f64; 4],
    links_pass: bool,
    hessian_deviation: f64,
    ratio: f64,
}

fn abp_run(fixture: Fixture, h: f64, stream: u64) -> AbpRun {
    let mesh = normalize_codim0(&fixture.generate(h).unwrap()).unwrap().0;
    let tol = AbpTolerances::for_mesh(&mesh);
    let solved = SolvedDomain::solve(mesh).unwrap();
    let contact = contact_set(
        &solved.mesh,
        solved.u(),
        &solved.vertex_gradients,
        tol.contact,
    );
    let image = image_measure(
        &solved,
        &contact,
        &tol,
        100_000,
        &SampleStream::with_stream(SEED, stream),
        10,
    )
    .unwrap();
    let hess = solved.hessian(&tol).unwrap();
    let chain = abp_chain(&solved, &contact, &hess, &image, h).unwrap();
    let eq = equality_diagnostics(&solved, &contact, &hess).unwrap();
    AbpRun {
        image: image.estimate.value,
        se: image.estimate.standard_error,
        chain: [
            image.estimate.value,
            chain.det_integral,
            chain.amgm_integral,
            chain.domain_volume,
        ],
        links_pass: chain.links.iter().all(|l| l.pass),
        hessian_deviation: eq.hessian_deviation,
        ratio: planar_relative_ratio(&solved.mesh),
    }
}

fn ac5() -> Outcome {
    let h = 0.02;
    let half = FRAC_PI_2;
    let hd = abp_run(Fixture::HalfDisk, h, 5);
    let hd_ok = (hd.image - half).abs() <= (3.0 * hd.se).max(0.03 * half);
    let mut detail = format!("half-disk {:.4} ± {:.4} vs π/2", hd.image, hd.se);
    let mut ok = hd_ok;
    for (name, f, s) in [
        ("quarter-wedge", Fixture::QuarterWedge, 6),
        (
            "perturbed",
            Fixture::PerturbedHalfDisk { amplitude: 0.15 },
            7,
        ),
    ] {
        let r = abp_run(f, h, s);
        ok &= r.image >= half - 3.0 * r.se - h;
        detail.push_str(&format!("; {name} {:.4} ± {:.4}", r.image, r.se));
    }
    outcome(ok, detail)
}

fn ac6() -> Outcome {
    let a = abp_run(Fixture::HalfDisk, 0.02, 8);
    let hi = a.chain.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lo = a.chain.iter().copied().fold(f64::INFINITY, f64::min);
    let spread = hi / lo - 1.0;
    // refinement: Hessian deviation and quotient at h = 0.01
    let fine = half_disk(0.01);
    let tol = AbpTolerances::for_mesh(&fine);
    let solved = SolvedDomain::solve(fine).unwrap();
    let contact = contact_set(
        &solved.mesh,
        solved.u(),
        &solved.vertex_gradients,
        tol.contact,
    );
    let dev_fine = equality_diagnostics(&solved, &contact, &solved.hessian(&tol).unwrap())
        .unwrap()
        .hessian_deviation;
    let ratio_fine = planar_relative_ratio(&solved.mesh);
    let ok = a.links_pass
        && spread <= 0.05
        && (a.ratio - 1.0).abs() <= 0.02
        && (ratio_fine - 1.0).abs() <= (a.ratio - 1.0).abs()
        && a.hessian_deviation <= 0.1
        && dev_fine < a.hessian_deviation;
    outcome(
        ok,
        format!(
            "chain spread {:.2}%, links pass {}; ratio {:.6} → {:.6}; |∇²u − I| {:.4} → {:.4}",
            100.0 * spread,
            a.links_pass,
            a.ratio,
            ratio_fine,
            a.hessian_deviation,
            dev_fine
        ),
    )
}

fn flat_solved(h: f64) -> SolvedSubmanifold {
    SolvedSubmanifold::solve(
        &Fixture::FlatHalfDiskEmbedded { ambient: 4 }
            .generate(h)
            .unwrap(),
    )
    .unwrap()
}

fn ac7() -> Outcome {
    let raw = Fixture::FlatHalfDiskEmbedded { ambient: 4 }
        .generate(0.02)
        .unwrap();
    let solved = SolvedSubmanifold::solve(&raw).unwrap();
    let ratio = planar_relative_ratio(&solved.mesh);
    // ½ N|𝔹^N| / (m|𝔹^m|) with N = 4, m = 2
    let bound = 0.5 * 4.0 * ball(4) / (2.0 * ball(2));
    let mb = analytic_mass_bound(&raw).unwrap().unwrap();
    let analytic = (bound - FRAC_PI_2).abs() <= 1e-10
        && (mb.bound - bound).abs() <= 1e-10
        && (mb.volume - FRAC_PI_2).abs() <= 1e-10;
    let mut ok = (ratio - 1.0).abs() <= 0.02 && analytic;
    let mut detail = format!(
        "ratio {ratio:.5}; |M| = {:.12}, bound {:.12}",
        mb.volume, mb.bound
    );
    for (j, t) in [0.5f64, 0.9].into_iter().enumerate() {
        let v = volume_bound_check(
            &solved,
            100_000,
            &SampleStream::with_stream(SEED, 70 + j as u64),
            t,
        )
        .unwrap();
        let lower = 0.5 * ball(4) * (1.0 - t.powi(4));
        let upper = (1.0 - t * t) * ball(2) * FRAC_PI_2;
        let (est, se) = (v.shell_measure.value, v.shell_measure.standard_error);
        ok &= est >= lower - 3.0 * se && est <= upper + 3.0 * se;
        detail.push_str(&format!(
            "; t={t}: {lower:.4} ≤ {est:.4} ± {se:.4} ≤ {upper:.4}"
        ));
    }
    outcome(ok, detail)
}

fn ac8() -> Outcome {
    let flat = flat_solved(0.02);
    let jf = jacobian_bound_samples(&flat, 100_000, &SampleStream::with_stream(SEED, 80)).unwrap();
    let cap = SolvedSubmanifold::solve(
        &Fixture::SphereCap { theta0: PI / 4.0 }
            .generate(0.02)
            .unwrap()
            .lifted()
            .unwrap(),
    )
    .unwrap();
    let jc = jacobian_bound_samples(&cap, 100_000, &SampleStream::with_stream(SEED, 81)).unwrap();
    let delta_ok = (jc.delta - 10.0 * cap.mesh.mesh_size()).abs() < 1e-12;
    outcome(
        jf.near_one_fraction >= 0.95 && 1.0 - jc.outside_fraction >= 0.95 && delta_ok,
        format!(
            "flat: {:.2}% of {} gated within 1 ± 0.05; cap: {:.2}% of {} gated within [−δ, 1 + δ], δ = {:.3}, det range [{:.4}, {:.4}]",
            100.0 * jf.near_one_fraction,
            jf.gated,
            100.0 * (1.0 - jc.outside_fraction),
            jc.gated,
            jc.delta,
            jc.min_det,
            jc.max_det
        ),
    )
}

fn ac9() -> Outcome {
    let mesh = Fixture::FlatHalfDiskEmbedded { ambient: 4 }
        .generate(0.02)
        .unwrap();
    let curv = curvature(&mesh).unwrap();
    let r = |x: &[f64]| x.iter().map(|c| c * c).sum::<f64>().sqrt();
    type Profile<'a> = (&'a str, Box<dyn Fn(&[f64]) -> f64>);
    let profiles: [Profile; 3] = [
        (
            "plateau",
            Box::new(move |x| ((0.95 - r(x)) / 0.05).clamp(0.0, 1.0)),
        ),
        (
            "centered bump",
            Box::new(move |x| (1.0 - r(x).powi(2) / 0.81).max(0.0).powi(2)),
        ),
        (
            "off-center bump",
            Box::new(|x| {
                let d2 = (x[0] - 0.3).powi(2) + (x[1] - 0.2).powi(2) + x[2] * x[2] + x[3] * x[3];
                (1.0 - d2 / 0.25).max(0.0).powi(2)
            }),
        ),
    ];
    let mut ok = true;
    let mut detail = Vec::new();
    for (name, f) in profiles {
        let field = ScalarField::from_fn(&mesh, f).unwrap();
        let ms = michael_simon_eval(&mesh, &curv, &field).unwrap();
        ok &= ms.ratio >= 1.0 - 1e-2;
        detail.push(format!("{name} {:.4}", ms.ratio));
    }
    outcome(ok, detail.join(", "))
}

fn gaussian(c: [f64; 3], w: f64) -> Density {
    Density::Gaussian {
        amplitude: 1.0,
        center: c.to_vec(),
        width: w,
    }
}

fn ac10() -> Outcome {
    let mesh = Fixture::FreeHalfDisk {
        radius: 11.0,
        ambient: 3,
    }
    .generate(0.22)
    .unwrap();
    let curv = curvature(&mesh).unwrap();
    let mut worst = f64::INFINITY;
    for f in [
        Density::Constant { value: 1.0 },
        gaussian([0.0, 2.0, 0.0], 1.0),
        gaussian([1.0, 0.5, 0.0], 0.7),
        gaussian([-2.0, 3.0, 0.0], 2.0),
    ] {
        worst = worst.min(logsob_check(&mesh, &curv, &f).unwrap().margin);
    }
    let f = gaussian([1.0, 2.0, 0.0], 1.2);
    let c = 3.7;
    let a = logsob_check(&mesh, &curv, &f).unwrap();
    let b = logsob_check(&mesh, &curv, &f.clone().scaled(c)).unwrap();
    let scaling = (b.margin - c * a.margin).abs() / (c * a.margin).abs().max(1.0);
    let phi = gaussian([0.5, 1.0, 0.0], 1.5);
    let x0 = [0.3, 0.7, 0.0];
    let g = gaussian_corollary_eval(&mesh, &curv, &phi, &x0).unwrap();
    let l = logsob_check(
        &mesh,
        &curv,
        &Density::GaussWeighted {
            phi: Box::new(phi),
            x0: x0.to_vec(),
        },
    )
    .unwrap();
    let dual = (g.margin - l.margin).abs();
    let sym = gaussian_corollary_eval(&mesh, &curv, &Density::Constant { value: 1.0 }, &[0.0; 3])
        .unwrap()
        .boundary_term
        .abs();
    outcome(
        worst >= -1e-3 && scaling <= 1e-10 && dual <= 1e-6 && sym <= 1e-10,
        format!("worst margin {worst:.4}; scaling rel err {scaling:.1e}; dual path {dual:.1e}; symmetric boundary term {sym:.1e}"),
    )
}

fn ac11() -> Outcome {
    let mut cfg = RunConfig::new(Subcommand::All, SEED);
    cfg.samples = 20_000;
    cfg.h = 0.04;
    let a = run(&cfg).unwrap().report;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .unwrap();
    let b = pool.install(|| run(&cfg)).unwrap().report;
    let same = a.numerics().to_json().unwrap() == b.numerics().to_json().unwrap();
    outcome(
        same && !a.checks.is_empty(),
        format!(
            "{} checks, identical numerics across runs (default pool vs 1 thread): {same}",
            a.checks.len()
        ),
    )
}

fn main() {
    type Criterion = (&'static str, Duration, fn() -> Outcome);
    let criteria: [Criterion; 11] = [
        ("constants", Duration::from_secs(1), ac1),
        ("cone oracle 5π/3", Duration::from_secs(5), ac2),
        ("restricted union sweep", Duration::from_secs(120), ac3),
        ("PDE convergence", Duration::from_secs(30), ac4),
        ("ABP image measure", Duration::from_secs(120), ac5),
        ("ABP chain and equality", Duration::from_secs(300), ac6),
        ("flat half-disk in R^4", Duration::from_secs(120), ac7),
        ("Jacobian bounds", Duration::from_secs(300), ac8),
        ("Michael–Simon", Duration::from_secs(30), ac9),
        ("log-Sobolev", Duration::from_secs(300), ac10),
        ("determinism", Duration::from_secs(600), ac11),
    ];
    let mut failed = Vec::new();
    for (k, (name, budget, f)) in criteria.into_iter().enumerate() {
        let t0 = Instant::now();
        let o = f();
        let dt = t0.elapsed();
        let pass = o.pass && dt <= budget;
        println!(
            "AC{:<2} {} {name}: {} [{:.2}s, budget {}s]",
            k + 1,
            if pass { "PASS" } else { "FAIL" },
            o.detail,
            dt.as_secs_f64(),
            budget.as_secs()
        );
        if !pass {
            failed.push(k + 1);
        }
    }
    if failed.is_empty() {
        println!("acceptance: all 11 criteria passed");
    } else {
        eprintln!("acceptance: failed criteria {failed:?}");
        std::process::exit(1);
    }
}
