//! End-to-end verification runs driven by a [`RunConfig`].

use std::f64::consts::{FRAC_PI_2, PI};
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use serde_json::json;

use crate::abp::{
    abp_chain, contact_set, equality_diagnostics, image_measure, relative_quotient_codim0,
    AbpTolerances, SolvedDomain,
};
use crate::cones::{
    exact_restricted_union_measure, random_convex_configuration, restricted_union_measure,
    LabeledPointSet,
};
use crate::domain::{normalize_codim0, solve_mixed_neumann};
use crate::error::Result;
use crate::euclid::{ball_volume, brendle_constant, Point, SampleStream};
use crate::fem::{integrate, ScalarField};
use crate::fixtures::Fixture;
use crate::logsob::{
    gaussian_corollary_eval, lemma42_bound_samples, logsob_check, solve_weighted, transport_data,
    weighted_shell_bins, Density,
};
use crate::manifold::{
    analytic_mass_bound, curvature, jacobian_bound_samples, michael_simon_eval,
    normalize_submanifold, quotient_report, volume_bound_check, PhiTolerances, SolvedSubmanifold,
    MEAN_CURVATURE_CONVENTION,
};
use crate::mesh::SimplicialMesh;
use crate::plot::{Chart, Series};
use crate::report::{
    Check, Note, Relation, RunConfig, StageFailure, Subcommand, Table, VerificationReport,
    SCHEMA_VERSION,
};

/// Quoted phrases attached to the checks.
pub mod anchors {
    pub const CONSTANTS: &str = "where $b_{n,m}$ is defined by";
    pub const BALL_IDENTITY: &str =
        "$(n+2)|\\mathbb{B}^{n+2}|=2|\\mathbb{B}^n||\\mathbb{B}^2|$ holds";
    pub const UNION: &str = "$|N^uX/\\sigma| \\ge \\frac 12 |\\mathbb{S}^{N-1}(\\rho)|$";
    pub const PDE: &str = "we consider the following problem";
    pub const IMAGE: &str = "$|\\nabla u(\\Gamma^1_+)| \\ge \\frac 12 |\\mathbb{B}^N|$";
    pub const CHAIN: &str = "recalling that $\\frac{|\\Sigma|}{|\\Omega|}=N$";
    pub const CODIM0: &str =
        "$\\frac{|\\Sigma|}{|\\partial\\mathbb{B}^n|} \\ge \\big(\\frac 12\\big)^{\\frac 1n}\\big(\\frac{|\\Omega|}{|\\mathbb{B}^n|}\\big)^{\\frac{n-1}{n}}$";
    pub const EQUALITY: &str = "$\\nabla^2 u = I$ on $\\Gamma^1_+$";
    pub const SUBMANIFOLD: &str = "partially free boundary submanifold";
    pub const NORMALIZATION: &str = "$|\\Sigma|+\\int_M |H|dv=n|M|$";
    pub const VOLUME: &str = "Now we use a trick of Brendle";
    pub const JACOBIAN: &str = "the Jacobian determinant of $\\Phi$ satisfies";
    pub const MICHAEL_SIMON: &str = "vanishing on the relative boundary";
    pub const LOGSOB: &str = "for any positive function $f$ on $M$";
    pub const GAUSSIAN: &str = "Gaussian measure on $M$ centered at";
    pub const LEMMA_WEIGHTED: &str =
        "$0 \\le e^{-\\frac{|\\Phi(x,y)|^2}{4}}\\det\\,\\mbox{Jac}\\,\\Phi(x,y) \\le f(x)\\,e^{-\\frac{|2H(x)+y|^2}{4}+\\alpha-n}$";
    pub const SHELLS: &str = "$\\Phi(\\partial A_\\rho)\\supset N^u\\Gamma/\\nu_S$";
    pub const FIXTURES: &str = "M is a flat half n-ball";
}

/// Random configurations in the cone sweep.
pub const SWEEP_CONFIGS: usize = 100;
pub const SWEEP_RADII: [f64; 3] = [0.3, 1.0, 2.0];
/// Radius of the free-boundary half-disk used by the log-Sobolev stage.
pub const LOGSOB_RADIUS: f64 = 11.0;

/// The report plus the SVG charts requested with `plot`.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub report: VerificationReport,
    pub plots: Vec<(String, String)>,
}

impl RunOutput {
    /// Report, CSV tables and charts into `dir`.
    pub fn write(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        let mut files = self.report.write(dir)?;
        for (name, svg) in &self.plots {
            let p = dir.join(format!("{name}.svg"));
            fs::write(&p, svg)?;
            files.push(p);
        }
        Ok(files)
    }
}

struct Ctx<'a> {
    config: &'a RunConfig,
    stage: &'static str,
    checks: Vec<Check>,
    tables: Vec<Table>,
    notes: Vec<Note>,
    charts: Vec<(String, Chart)>,
}

impl Ctx<'_> {
    fn check(
        &mut self,
        name: &str,
        anchor: &str,
        rel: Relation,
        lhs: f64,
        rhs: f64,
        tol: f64,
    ) -> &mut Check {
        self.checks
            .push(Check::new(self.stage, name, anchor, rel, lhs, rhs, tol));
        self.checks.last_mut().unwrap()
    }

    fn note<T: Serialize>(&mut self, key: &str, value: &T) {
        self.notes.push(Note {
            stage: self.stage.to_string(),
            key: key.to_string(),
            value: serde_json::to_value(value).unwrap_or(serde_json::Value::Null),
        });
    }

    fn chart(&mut self, name: &str, chart: Chart) {
        if self.config.plot {
            self.charts.push((name.to_string(), chart));
        }
    }

    /// Stream of the current stage, independent of which other stages run.
    fn stream(&self, id: u64) -> SampleStream {
        let stage = STAGES
            .iter()
            .position(|(s, _)| *s == self.stage)
            .unwrap_or(0) as u64;
        SampleStream::with_stream(self.config.seed, 1 + stage).fork(id)
    }

    fn h(&self) -> f64 {
        self.config.h
    }

    fn abp_tolerances(&self, mesh: &SimplicialMesh) -> AbpTolerances {
        let mut t = AbpTolerances::for_mesh(mesh);
        if let Some(c) = self.config.tol_contact {
            t.contact = c;
        }
        if let Some(g) = self.config.tol_grad {
            t.gradient = g;
        }
        t
    }

    fn phi_tolerances(&self, mesh: &SimplicialMesh) -> PhiTolerances {
        let mut t = PhiTolerances::for_mesh(mesh);
        if let Some(g) = self.config.tol_grad {
            t.gradient = g;
        }
        if let Some(d) = self.config.delta_psd {
            t.delta = d;
        }
        t
    }

    fn input_meshes(&self) -> Result<Vec<(String, SimplicialMesh)>> {
        self.config
            .inputs
            .iter()
            .filter(|p| is_mesh_file(p))
            .map(|p| Ok((p.display().to_string(), SimplicialMesh::load(p)?)))
            .collect()
    }
}

fn is_mesh_file(p: &Path) -> bool {
    p.extension().is_some_and(|e| e == "json")
}

type Stage = fn(&mut Ctx) -> Result<()>;

const STAGES: [(&str, Stage); 6] = [
    ("cones", cones_stage),
    ("abp", abp_stage),
    ("quotient", quotient_stage),
    ("submanifold", submanifold_stage),
    ("logsob", logsob_stage),
    ("fixtures", fixtures_stage),
];

/// Execute the configured pipeline. Stage errors are recorded in the
/// report; only an invalid configuration or a failed write is an `Err`.
pub fn run(config: &RunConfig) -> Result<RunOutput> {
    config.validate()?;
    let start = Instant::now();
    let mut ctx = Ctx {
        config,
        stage: "",
        checks: Vec::new(),
        tables: Vec::new(),
        notes: Vec::new(),
        charts: Vec::new(),
    };
    let mut failures = Vec::new();
    for (name, stage) in STAGES {
        if config.subcommand != Subcommand::All && config.subcommand.name() != name {
            continue;
        }
        ctx.stage = name;
        if let Err(e) = stage(&mut ctx) {
            failures.push(StageFailure {
                stage: name.to_string(),
                message: e.to_string(),
            });
        }
    }
    let report = VerificationReport {
        schema_version: SCHEMA_VERSION,
        library_version: env!("CARGO_PKG_VERSION").to_string(),
        config: config.clone(),
        curvature_convention: MEAN_CURVATURE_CONVENTION.to_string(),
        checks: ctx.checks,
        tables: ctx.tables,
        notes: ctx.notes,
        failures,
        runtime_seconds: start.elapsed().as_secs_f64(),
    };
    let out = RunOutput {
        report,
        plots: ctx
            .charts
            .into_iter()
            .map(|(n, c)| (n, c.to_svg()))
            .collect(),
    };
    if let Some(dir) = &config.out {
        out.write(dir)?;
    }
    Ok(out)
}

/// Points ±e₁ with u = (0, 1) and σ the identity directions.
pub fn two_point_configuration() -> LabeledPointSet {
    let e = |s: f64| Point::new(vec![s, 0.0]).expect("finite");
    LabeledPointSet::new(
        vec![e(1.0), e(-1.0)],
        vec![0.0, 1.0],
        Some(vec![e(1.0), e(-1.0)]),
    )
    .expect("valid configuration")
}

fn cones_stage(ctx: &mut Ctx) -> Result<()> {
    let samples = ctx.config.samples;
    let two = two_point_configuration();
    let exact = exact_restricted_union_measure(&two, 1.0)?;
    let mc = restricted_union_measure(&two, 1.0, samples, &ctx.stream(0))?;
    let target = 5.0 * PI / 3.0;
    ctx.check(
        "two_point_exact",
        anchors::UNION,
        Relation::Approx,
        exact,
        target,
        1e-10,
    );
    let se = mc.estimate.standard_error;
    ctx.check(
        "two_point_monte_carlo",
        anchors::UNION,
        Relation::Approx,
        mc.estimate.value,
        target,
        3.0 * se,
    )
    .standard_error = Some(se);
    ctx.check(
        "two_point_coverage",
        anchors::UNION,
        Relation::Approx,
        mc.coverage,
        1.0,
        0.0,
    );

    for (k, path) in ctx
        .config
        .inputs
        .iter()
        .filter(|p| !is_mesh_file(p))
        .enumerate()
    {
        let set = LabeledPointSet::load(path)?;
        ctx.note(&format!("input_{k}"), &path.display().to_string());
        for (j, &rho) in SWEEP_RADII.iter().enumerate() {
            let m = restricted_union_measure(
                &set,
                rho,
                samples,
                &ctx.stream(10 + 3 * k as u64 + j as u64),
            )?;
            let half = 0.5 * m.sphere_measure;
            let se = m.estimate.standard_error;
            ctx.check(
                &format!("input_{k}_rho_{rho}"),
                anchors::UNION,
                Relation::Ge,
                m.estimate.value,
                half,
                3.0 * se,
            )
            .standard_error = Some(se);
            if set.dim() == 2 {
                let e = exact_restricted_union_measure(&set, rho)?;
                ctx.check(
                    &format!("input_{k}_rho_{rho}_exact"),
                    anchors::UNION,
                    Relation::Ge,
                    e,
                    half,
                    1e-10,
                );
            }
        }
    }

    let sweep_samples = (samples / 5).max(1000);
    let mut gen = ctx.stream(1);
    let mut table = Table::new(
        "cone_sweep",
        &[
            "config",
            "dim",
            "points",
            "rho",
            "estimate",
            "standard_error",
            "half_sphere",
            "tie_fraction",
        ],
    );
    // per ρ: (slack, estimate, half, se) of the configuration closest to failing
    let mut worst = [(f64::INFINITY, 0.0, 0.0, 0.0); SWEEP_RADII.len()];
    let mut exact_worst = f64::INFINITY;
    for c in 0..SWEEP_CONFIGS {
        let dim = 2 + c % 3;
        let count = 5 + gen.index(16);
        let set = random_convex_configuration(dim, count, &mut gen)?;
        for (j, &rho) in SWEEP_RADII.iter().enumerate() {
            let stream = ctx.stream(1000 + (c * SWEEP_RADII.len() + j) as u64);
            let m = restricted_union_measure(&set, rho, sweep_samples, &stream)?;
            let half = 0.5 * m.sphere_measure;
            let se = m.estimate.standard_error;
            table.push(vec![
                c as f64,
                dim as f64,
                count as f64,
                rho,
                m.estimate.value,
                se,
                half,
                m.tie_fraction,
            ]);
            let slack = m.estimate.value - half + 3.0 * se;
            if slack < worst[j].0 {
                worst[j] = (slack, m.estimate.value, half, se);
            }
            if dim == 2 {
                exact_worst = exact_worst.min(exact_restricted_union_measure(&set, rho)? - half);
            }
        }
    }
    for (j, &rho) in SWEEP_RADII.iter().enumerate() {
        let (_, est, half, se) = worst[j];
        ctx.check(
            &format!("sweep_worst_rho_{rho}"),
            anchors::UNION,
            Relation::Ge,
            est,
            half,
            3.0 * se,
        )
        .standard_error = Some(se);
    }
    ctx.check(
        "sweep_exact_planar_worst",
        anchors::UNION,
        Relation::Ge,
        exact_worst,
        0.0,
        1e-10,
    );
    ctx.note("sweep_samples_per_configuration", &sweep_samples);
    if ctx.config.plot {
        let ratio = |j: usize| -> Vec<(f64, f64)> {
            table
                .rows
                .iter()
                .filter(|r| r[3] == SWEEP_RADII[j])
                .map(|r| (r[0], r[4] / r[6]))
                .collect()
        };
        let mut chart = Chart::new(
            "Restricted union measure / half sphere",
            "configuration",
            "ratio",
        );
        for (j, rho) in SWEEP_RADII.iter().enumerate() {
            chart = chart.with(Series::scatter(&format!("rho = {rho}"), ratio(j)));
        }
        chart = chart.with(Series::line(
            "1",
            vec![(0.0, 1.0), (SWEEP_CONFIGS as f64 - 1.0, 1.0)],
        ));
        ctx.chart("cone_sweep", chart);
    }
    ctx.tables.push(table);
    Ok(())
}

/// Max-norm distance of `u` from `|x|²/2` after removing the mean.
fn quadratic_error(mesh: &SimplicialMesh, u: &[f64]) -> f64 {
    let q: Vec<f64> = mesh
        .vertices()
        .iter()
        .map(|x| 0.5 * x.iter().map(|c| c * c).sum::<f64>())
        .collect();
    let mean = integrate(mesh, &q) / mesh.measures().volume;
    u.iter()
        .zip(&q)
        .map(|(a, b)| (a - b + mean).abs())
        .fold(0.0, f64::max)
}

fn default_abp_fixtures() -> Vec<Fixture> {
    vec![
        Fixture::HalfDisk,
        Fixture::QuarterWedge,
        Fixture::PerturbedHalfDisk { amplitude: 0.15 },
    ]
}

fn abp_stage(ctx: &mut Ctx) -> Result<()> {
    let h = ctx.h();
    let mut meshes: Vec<(String, SimplicialMesh)> = ctx
        .input_meshes()?
        .into_iter()
        .filter(|(_, m)| m.codim() == 0)
        .collect();
    if meshes.is_empty() {
        for f in default_abp_fixtures() {
            meshes.push((f.name().to_string(), f.generate(h)?));
        }
    }
    for (k, (label, raw)) in meshes.into_iter().enumerate() {
        let is_half_disk = raw
            .fixture()
            .and_then(|f| f.get("kind"))
            .and_then(|k| k.as_str())
            == Some("half_disk");
        let (mesh, scale) = normalize_codim0(&raw)?;
        let tol = ctx.abp_tolerances(&mesh);
        let solved = SolvedDomain::solve(mesh)?;
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
            ctx.config.samples,
            &ctx.stream(k as u64),
            20,
        )?;
        let hessian = solved.hessian(&tol)?;
        let chain = abp_chain(&solved, &contact, &hessian, &image, h)?;
        let half = chain.half_ball;
        let est = image.estimate;
        let se = est.standard_error;
        if is_half_disk {
            ctx.check(
                &format!("{label}/image_measure"),
                anchors::IMAGE,
                Relation::Approx,
                est.value,
                half,
                (3.0 * se).max(0.03 * half),
            )
            .standard_error = Some(se);
        } else {
            ctx.check(
                &format!("{label}/image_measure"),
                anchors::IMAGE,
                Relation::Ge,
                est.value,
                half,
                3.0 * se + h,
            )
            .standard_error = Some(se);
        }
        for link in &chain.links {
            ctx.check(
                &format!("{label}/{}", link.name),
                anchors::CHAIN,
                Relation::Le,
                link.lhs,
                link.rhs,
                link.slack,
            );
        }
        let q = chain.quotient;
        if is_half_disk {
            let vals = [
                est.value,
                chain.det_integral,
                chain.amgm_integral,
                chain.domain_volume,
            ];
            let hi = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let lo = vals.iter().copied().fold(f64::INFINITY, f64::min);
            ctx.check(
                &format!("{label}/chain_agreement"),
                anchors::CHAIN,
                Relation::Approx,
                hi,
                lo,
                0.05 * lo,
            );
            ctx.check(
                &format!("{label}/quotient"),
                anchors::CODIM0,
                Relation::Approx,
                q.ratio,
                1.0,
                0.02,
            );
            let eq = equality_diagnostics(&solved, &contact, &hessian)?;
            ctx.check(
                &format!("{label}/hessian_deviation"),
                anchors::EQUALITY,
                Relation::Le,
                eq.hessian_deviation,
                0.1,
                0.0,
            );
            ctx.note(&format!("{label}/equality"), &eq);
        } else {
            ctx.check(
                &format!("{label}/quotient"),
                anchors::CODIM0,
                Relation::Ge,
                q.ratio,
                1.0,
                0.0,
            );
        }
        ctx.note(&format!("{label}/scale"), &scale);
        ctx.note(&format!("{label}/tolerances"), &tol);
        ctx.note(&format!("{label}/status_counts"), &image.counts);
        ctx.note(
            &format!("{label}/chain"),
            &json!({
                "det_integral": chain.det_integral,
                "amgm_integral": chain.amgm_integral,
                "domain_volume": chain.domain_volume,
                "contact_volume": chain.contact_volume,
                "clamped": chain.clamped,
                "amgm_pointwise_excess": chain.amgm_pointwise_excess,
                "recovery_fallbacks": chain.recovery_fallbacks,
                "solve_residual": solved.solution.residual,
                "corner_flux_error": solved.solution.corner_flux_error,
            }),
        );
        let mut bins = Table::new(
            &format!("abp_radial_bins_{k}"),
            &["rho_low", "rho_high", "measure", "half_shell"],
        );
        for b in &image.bins {
            bins.push(vec![b.rho_low, b.rho_high, b.measure, b.half_shell]);
        }
        let mid = |b: &crate::abp::RadialBin| 0.5 * (b.rho_low + b.rho_high);
        ctx.chart(
            &format!("abp_radial_bins_{k}"),
            Chart::new(
                &format!("Image measure per radial bin ({label})"),
                "|xi|",
                "measure",
            )
            .with(Series::line(
                "accepted",
                image.bins.iter().map(|b| (mid(b), b.measure)).collect(),
            ))
            .with(Series::line(
                "half shell",
                image.bins.iter().map(|b| (mid(b), b.half_shell)).collect(),
            )),
        );
        ctx.tables.push(bins);
    }
    refinement(ctx)
}

/// Half-disk at 2h, h, h/2: solve error, Hessian deviation and quotient.
fn refinement(ctx: &mut Ctx) -> Result<()> {
    let h = ctx.h();
    let mut table = Table::new(
        "abp_refinement",
        &[
            "h",
            "mesh_size",
            "vertices",
            "pde_error",
            "hessian_deviation",
            "quotient_ratio",
        ],
    );
    for hk in [2.0 * h, h, 0.5 * h] {
        let (mesh, _) = normalize_codim0(&Fixture::HalfDisk.generate(hk)?)?;
        let tol = ctx.abp_tolerances(&mesh);
        let solution = solve_mixed_neumann(&mesh)?;
        let err = quadratic_error(&mesh, solution.field.values());
        let solved = SolvedDomain::from_field(mesh, solution);
        let contact = contact_set(
            &solved.mesh,
            solved.u(),
            &solved.vertex_gradients,
            tol.contact,
        );
        let eq = equality_diagnostics(&solved, &contact, &solved.hessian(&tol)?)?;
        let q = relative_quotient_codim0(&solved.mesh)?;
        table.push(vec![
            hk,
            solved.mesh.mesh_size(),
            solved.mesh.vertex_count() as f64,
            err,
            eq.hessian_deviation,
            q.ratio,
        ]);
    }
    let col = |name: &str| table.column(name).expect("column");
    let (err, dev, ratio) = (
        col("pde_error"),
        col("hessian_deviation"),
        col("quotient_ratio"),
    );
    ctx.check(
        "pde_convergence_factor",
        anchors::PDE,
        Relation::Ge,
        err[0] / err[1],
        3.0,
        0.0,
    );
    ctx.check(
        "hessian_deviation_refined",
        anchors::EQUALITY,
        Relation::Le,
        dev[2],
        dev[1],
        0.0,
    );
    ctx.check(
        "quotient_refined",
        anchors::CODIM0,
        Relation::Le,
        (ratio[2] - 1.0).abs(),
        (ratio[1] - 1.0).abs(),
        1e-12,
    );
    let hs = col("h");
    ctx.chart(
        "abp_refinement",
        Chart::new("Half-disk refinement", "h", "error")
            .log_log()
            .with(Series::line(
                "max |u - |x|^2/2|",
                hs.iter().copied().zip(err.iter().copied()).collect(),
            ))
            .with(Series::line(
                "|Hess u - I|",
                hs.iter().copied().zip(dev.iter().copied()).collect(),
            )),
    );
    ctx.tables.push(table);
    Ok(())
}

fn constants(ctx: &mut Ctx) -> Result<()> {
    let mut brendle_dev = 0.0f64;
    let mut identity = 0.0f64;
    for n in 1..=10 {
        for m in [1, 2] {
            brendle_dev = brendle_dev.max((brendle_constant(n, m)? - 1.0).abs());
        }
        let lhs = (n + 2) as f64 * ball_volume(n + 2)?;
        let rhs = 2.0 * ball_volume(n)? * ball_volume(2)?;
        identity = identity.max((lhs - rhs).abs() / rhs);
    }
    ctx.check(
        "brendle_constant_m_le_2",
        anchors::CONSTANTS,
        Relation::Approx,
        brendle_dev,
        0.0,
        0.0,
    );
    ctx.check(
        "ball_identity_relative_error",
        anchors::BALL_IDENTITY,
        Relation::Le,
        identity,
        0.0,
        1e-12,
    );
    ctx.check(
        "brendle_constant_2_3",
        anchors::CONSTANTS,
        Relation::Approx,
        brendle_constant(2, 3)?,
        (2.0f64 / 3.0).sqrt(),
        1e-12,
    );
    Ok(())
}

fn quotient_stage(ctx: &mut Ctx) -> Result<()> {
    constants(ctx)?;
    let h = ctx.h();
    let mut meshes = Vec::new();
    for f in [
        Fixture::HalfDisk,
        Fixture::QuarterWedge,
        Fixture::PerturbedHalfDisk { amplitude: 0.15 },
        Fixture::AnnulusSector {
            inner: 1.0,
            outer: 2.0,
        },
        Fixture::UnitSquare,
        Fixture::FullDiskClosed { ambient: 2 },
        Fixture::FlatHalfDiskEmbedded { ambient: 4 },
        Fixture::SphereCap { theta0: PI / 4.0 },
        Fixture::CylinderPatch { radius: 1.0 },
        Fixture::Hemisphere,
    ] {
        meshes.push((f.name().to_string(), f.generate(h)?));
    }
    meshes.extend(ctx.input_meshes()?);
    let mut table = Table::new("quotients", &["index", "lhs", "rhs", "ratio"]);
    for (k, (label, mesh)) in meshes.iter().enumerate() {
        let equality = matches!(label.as_str(), "half_disk" | "flat_half_disk_embedded");
        let q = if mesh.codim() == 0 {
            relative_quotient_codim0(mesh)?
        } else {
            let curv = curvature(mesh)?;
            let r = quotient_report(mesh, &curv)?;
            if let Some(min) = r.minimal {
                ctx.check(
                    &format!("{label}/minimal_quotient"),
                    anchors::SUBMANIFOLD,
                    Relation::Ge,
                    min.ratio,
                    1.0,
                    0.0,
                );
            }
            ctx.note(
                &format!("{label}/mean_curvature_integral"),
                &r.mean_curvature_integral,
            );
            r.relative
        };
        let anchor = if mesh.codim() == 0 {
            anchors::CODIM0
        } else {
            anchors::SUBMANIFOLD
        };
        if equality {
            ctx.check(
                &format!("{label}/quotient"),
                anchor,
                Relation::Approx,
                q.ratio,
                1.0,
                0.02,
            );
        } else {
            ctx.check(
                &format!("{label}/quotient"),
                anchor,
                Relation::Ge,
                q.ratio,
                1.0,
                0.0,
            );
        }
        ctx.note(
            &format!("quotient_{k}"),
            &json!({ "mesh": label, "relative": q.relative }),
        );
        table.push(vec![k as f64, q.lhs, q.rhs, q.ratio]);
    }
    ctx.tables.push(table);
    Ok(())
}

/// Curvature, normalization and solve with the configured tolerances.
fn solve_submanifold(ctx: &Ctx, mesh: &SimplicialMesh) -> Result<SolvedSubmanifold> {
    let curv = curvature(mesh)?;
    let (scaled, curv, s) = normalize_submanifold(mesh, &curv)?;
    let tol = ctx.phi_tolerances(&scaled);
    SolvedSubmanifold::solve_normalized(scaled, curv, tol, s)
}

fn volume_checks(
    ctx: &mut Ctx,
    label: &str,
    solved: &SolvedSubmanifold,
    stream_base: u64,
    extra: f64,
    table: &mut Table,
) -> Result<()> {
    for (j, &t) in ctx.config.t_gates.clone().iter().enumerate() {
        let v = volume_bound_check(
            solved,
            ctx.config.samples,
            &ctx.stream(stream_base + j as u64),
            t,
        )?;
        let est = v.shell_measure;
        let se = est.standard_error;
        ctx.check(
            &format!("{label}/shell_lower_t{t}"),
            anchors::VOLUME,
            Relation::Ge,
            est.value,
            v.lower,
            3.0 * se + extra * v.lower,
        )
        .standard_error = Some(se);
        ctx.check(
            &format!("{label}/shell_upper_t{t}"),
            anchors::VOLUME,
            Relation::Le,
            est.value,
            v.upper,
            3.0 * se,
        )
        .standard_error = Some(se);
        ctx.note(&format!("{label}/shell_counts_t{t}"), &v.counts);
        table.push(vec![stream_base as f64, t, est.value, se, v.lower, v.upper]);
    }
    Ok(())
}

pub type Profile = (&'static str, fn(&[f64]) -> f64);

/// Test functions for the Michael–Simon check, all vanishing on the arc.
pub fn michael_simon_profiles() -> Vec<Profile> {
    fn r(x: &[f64]) -> f64 {
        x.iter().map(|c| c * c).sum::<f64>().sqrt()
    }
    vec![
        ("plateau", |x| ((0.95 - r(x)) / 0.05).clamp(0.0, 1.0)),
        ("centered_bump", |x| {
            (1.0 - r(x).powi(2) / 0.81).max(0.0).powi(2)
        }),
        ("offcenter_bump", |x| {
            let d2 = (x[0] - 0.3).powi(2)
                + (x[1] - 0.2).powi(2)
                + x[2..].iter().map(|c| c * c).sum::<f64>();
            (1.0 - d2 / 0.25).max(0.0).powi(2)
        }),
    ]
}

fn submanifold_stage(ctx: &mut Ctx) -> Result<()> {
    let h = ctx.h();
    let flat = Fixture::FlatHalfDiskEmbedded { ambient: 4 }.generate(h)?;
    let mut vol_table = Table::new(
        "volume_bounds",
        &[
            "fixture",
            "t",
            "estimate",
            "standard_error",
            "lower",
            "upper",
        ],
    );

    let solved = solve_submanifold(ctx, &flat)?;
    let q = quotient_report(&solved.mesh, &solved.curvature)?;
    ctx.check(
        "flat/quotient",
        anchors::SUBMANIFOLD,
        Relation::Approx,
        q.relative.ratio,
        1.0,
        0.02,
    );
    let (sigma, hint, vol) = {
        let m = solved.mesh.measures();
        (m.sigma, q.mean_curvature_integral, m.volume)
    };
    let n = solved.mesh.intrinsic_dim() as f64;
    ctx.check(
        "flat/normalization",
        anchors::NORMALIZATION,
        Relation::Approx,
        sigma + hint,
        n * vol,
        1e-9 * n * vol,
    );
    if let Some(mb) = analytic_mass_bound(&flat)? {
        ctx.check(
            "flat/analytic_mass_bound",
            anchors::VOLUME,
            Relation::Approx,
            mb.volume,
            mb.bound,
            1e-10,
        );
        ctx.check(
            "flat/analytic_mass_half_pi",
            anchors::VOLUME,
            Relation::Approx,
            mb.bound,
            FRAC_PI_2,
            1e-10,
        );
    }
    volume_checks(ctx, "flat", &solved, 0, 0.0, &mut vol_table)?;
    let jac = jacobian_bound_samples(&solved, ctx.config.samples, &ctx.stream(100))?;
    ctx.check(
        "flat/jacobian_near_one",
        anchors::JACOBIAN,
        Relation::Ge,
        jac.near_one_fraction,
        0.95,
        0.0,
    );
    ctx.note("flat/jacobian", &jac);
    ctx.note("flat/tolerances", &solved.tolerances);

    let cap = Fixture::SphereCap { theta0: PI / 4.0 }
        .generate(h)?
        .lifted()?;
    let cap_solved = solve_submanifold(ctx, &cap)?;
    let jac = jacobian_bound_samples(&cap_solved, ctx.config.samples, &ctx.stream(101))?;
    ctx.check(
        "sphere_cap/jacobian_in_range",
        anchors::JACOBIAN,
        Relation::Ge,
        1.0 - jac.outside_fraction,
        0.95,
        0.0,
    );
    ctx.note("sphere_cap/jacobian", &jac);
    ctx.note("sphere_cap/tolerances", &cap_solved.tolerances);
    volume_checks(ctx, "sphere_cap", &cap_solved, 10, h, &mut vol_table)?;

    let curv = curvature(&flat)?;
    for (name, f) in michael_simon_profiles() {
        let field = ScalarField::from_fn(&flat, f)?;
        let ms = michael_simon_eval(&flat, &curv, &field)?;
        ctx.check(
            &format!("flat/michael_simon_{name}"),
            anchors::MICHAEL_SIMON,
            Relation::Ge,
            ms.ratio,
            1.0,
            1e-2,
        );
    }

    if ctx.config.plot {
        let pts = |fixture: f64, col: usize| -> Vec<(f64, f64)> {
            vol_table
                .rows
                .iter()
                .filter(|r| r[0] == fixture)
                .map(|r| (r[1], r[col]))
                .collect()
        };
        ctx.chart(
            "volume_bounds",
            Chart::new("Transport image of the shells t < |xi| < 1", "t", "measure")
                .with(Series::scatter("flat estimate", pts(0.0, 2)))
                .with(Series::scatter("flat lower", pts(0.0, 4)))
                .with(Series::scatter("cap estimate", pts(10.0, 2)))
                .with(Series::scatter("cap lower", pts(10.0, 4))),
        );
    }
    ctx.tables.push(vol_table);
    for (k, (label, mesh)) in ctx.input_meshes()?.into_iter().enumerate() {
        if mesh.codim() == 0 {
            continue;
        }
        let mesh = if mesh.codim() < 2 {
            mesh.lifted()?
        } else {
            mesh
        };
        let s = solve_submanifold(ctx, &mesh)?;
        let q = quotient_report(&s.mesh, &s.curvature)?;
        ctx.check(
            &format!("{label}/quotient"),
            anchors::SUBMANIFOLD,
            Relation::Ge,
            q.relative.ratio,
            1.0,
            0.0,
        );
        let jac = jacobian_bound_samples(&s, ctx.config.samples, &ctx.stream(200 + k as u64))?;
        ctx.check(
            &format!("{label}/jacobian_in_range"),
            anchors::JACOBIAN,
            Relation::Ge,
            1.0 - jac.outside_fraction,
            0.95,
            0.0,
        );
    }
    Ok(())
}

fn gaussian(center: [f64; 3], width: f64) -> Density {
    Density::Gaussian {
        amplitude: 1.0,
        center: center.to_vec(),
        width,
    }
}

/// Densities of the log-Sobolev stage.
pub fn logsob_densities() -> Vec<(&'static str, Density)> {
    vec![
        ("constant", Density::Constant { value: 1.0 }),
        ("gaussian_a", gaussian([0.0, 2.0, 0.0], 1.0)),
        ("gaussian_b", gaussian([1.0, 0.5, 0.0], 0.7)),
        ("gaussian_c", gaussian([-2.0, 3.0, 0.0], 2.0)),
    ]
}

fn logsob_stage(ctx: &mut Ctx) -> Result<()> {
    let h = ctx.h();
    // absolute edge length h·R keeps the vertex density of the unit fixtures
    let mesh = Fixture::FreeHalfDisk {
        radius: LOGSOB_RADIUS,
        ambient: 3,
    }
    .generate(h * LOGSOB_RADIUS)?;
    let curv = curvature(&mesh)?;
    let lemma_samples = (ctx.config.samples / 5).max(1000);
    let mut lemma = Table::new(
        "lemma_weighted",
        &["density", "gated", "violation_fraction", "max_excess"],
    );
    for (k, (name, f)) in logsob_densities().into_iter().enumerate() {
        let c = logsob_check(&mesh, &curv, &f)?;
        ctx.check(
            &format!("logsob_{name}"),
            anchors::LOGSOB,
            Relation::Le,
            c.lhs,
            c.rhs,
            1e-3,
        );
        let p = solve_weighted(&mesh, &curv, &f)?;
        let tr = transport_data(&mesh, &curv, &p, ctx.phi_tolerances(&mesh))?;
        let l = lemma42_bound_samples(&tr, &p, lemma_samples, &ctx.stream(k as u64))?;
        ctx.check(
            &format!("lemma_weighted_{name}"),
            anchors::LEMMA_WEIGHTED,
            Relation::Le,
            l.violation_fraction,
            0.05,
            0.0,
        );
        lemma.push(vec![
            k as f64,
            l.gated as f64,
            l.violation_fraction,
            l.max_excess,
        ]);
        ctx.note(&format!("{name}/alpha"), &p.alpha());
    }
    ctx.tables.push(lemma);

    let f = gaussian([1.0, 2.0, 0.0], 1.2);
    let factor = 3.7;
    let a = logsob_check(&mesh, &curv, &f)?;
    let b = logsob_check(&mesh, &curv, &f.clone().scaled(factor))?;
    let expect = factor * a.margin;
    ctx.check(
        "scaling_identity",
        anchors::LOGSOB,
        Relation::Approx,
        b.margin,
        expect,
        1e-10 * expect.abs().max(1.0),
    );

    let phi = gaussian([0.5, 1.0, 0.0], 1.5);
    let x0 = [0.3, 0.7, 0.0];
    let g = gaussian_corollary_eval(&mesh, &curv, &phi, &x0)?;
    let weighted = Density::GaussWeighted {
        phi: Box::new(phi),
        x0: x0.to_vec(),
    };
    let l = logsob_check(&mesh, &curv, &weighted)?;
    ctx.check(
        "gaussian_corollary",
        anchors::GAUSSIAN,
        Relation::Le,
        g.lhs,
        g.rhs,
        1e-3,
    );
    ctx.check(
        "dual_path",
        anchors::GAUSSIAN,
        Relation::Approx,
        g.margin,
        l.margin,
        1e-6,
    );
    let sym = gaussian_corollary_eval(
        &mesh,
        &curv,
        &Density::Constant { value: 1.0 },
        &[0.0, 0.0, 0.0],
    )?;
    ctx.check(
        "symmetric_boundary_term",
        anchors::GAUSSIAN,
        Relation::Approx,
        sym.boundary_term,
        0.0,
        1e-10,
    );

    for (k, (label, m)) in ctx.input_meshes()?.into_iter().enumerate() {
        let c = curvature(&m)?;
        let chk = logsob_check(&m, &c, &Density::Constant { value: 1.0 })?;
        ctx.check(
            &format!("{label}/logsob_constant"),
            anchors::LOGSOB,
            Relation::Le,
            chk.lhs,
            chk.rhs,
            1e-3,
        );
        ctx.note(&format!("input_{k}"), &label);
    }
    shells(ctx)
}

/// Transport-image shells on the hemisphere against the half-shell volumes.
fn shells(ctx: &mut Ctx) -> Result<()> {
    let mesh = Fixture::Hemisphere.generate(2.0 * ctx.h())?;
    let curv = curvature(&mesh)?;
    let p = solve_weighted(&mesh, &curv, &Density::Constant { value: 1.0 })?;
    let tr = transport_data(&mesh, &curv, &p, ctx.phi_tolerances(&mesh))?;
    let edges = [0.0, 0.5, 1.0, 2.0, 4.0, 8.0];
    let bins = weighted_shell_bins(
        &tr,
        &edges,
        (ctx.config.samples / 5).max(1000),
        &ctx.stream(50),
    )?;
    let mut table = Table::new(
        "shell_bins",
        &[
            "rho_low",
            "rho_high",
            "estimate",
            "standard_error",
            "half_shell",
            "weighted",
            "weighted_half_shell",
        ],
    );
    for b in &bins {
        let se = b.measure.standard_error;
        ctx.check(
            &format!("shell_{}_{}", b.rho_low, b.rho_high),
            anchors::SHELLS,
            Relation::Ge,
            b.measure.value,
            b.half_shell,
            3.0 * se,
        )
        .standard_error = Some(se);
        table.push(vec![
            b.rho_low,
            b.rho_high,
            b.measure.value,
            se,
            b.half_shell,
            b.weighted,
            b.weighted_half_shell,
        ]);
    }
    let mid = |r: &Vec<f64>| 0.5 * (r[0] + r[1]);
    ctx.chart(
        "shell_bins",
        Chart::new(
            "Hemisphere transport image per shell (approximate)",
            "rho",
            "measure / half shell",
        )
        .with(Series::line(
            "estimate / half shell",
            table.rows.iter().map(|r| (mid(r), r[2] / r[4])).collect(),
        ))
        .with(Series::line(
            "weighted / weighted half shell",
            table.rows.iter().map(|r| (mid(r), r[5] / r[6])).collect(),
        )),
    );
    ctx.tables.push(table);
    Ok(())
}

/// Fixtures generated by the `fixtures` subcommand when none are requested.
pub fn canonical_fixtures() -> Vec<Fixture> {
    vec![
        Fixture::HalfDisk,
        Fixture::QuarterWedge,
        Fixture::FullDiskClosed { ambient: 2 },
        Fixture::FlatHalfDiskEmbedded { ambient: 4 },
        Fixture::SphereCap { theta0: PI / 4.0 },
        Fixture::CylinderPatch { radius: 1.0 },
        Fixture::PerturbedHalfDisk { amplitude: 0.15 },
    ]
}

fn fixtures_stage(ctx: &mut Ctx) -> Result<()> {
    let h = ctx.h();
    let kinds = if ctx.config.fixtures.is_empty() {
        canonical_fixtures()
    } else {
        ctx.config.fixtures.clone()
    };
    let dir = ctx.config.out.as_ref().map(|d| d.join("fixtures"));
    if let Some(d) = &dir {
        fs::create_dir_all(d)?;
    }
    let mut table = Table::new(
        "fixtures",
        &[
            "index",
            "vertices",
            "cells",
            "mesh_size",
            "volume",
            "sigma",
            "gamma",
        ],
    );
    for (k, f) in kinds.iter().enumerate() {
        let mesh = f.generate(h)?;
        let m = mesh.measures();
        let label = format!("{k:02}_{}", f.name());
        if let Some(e) = mesh.exact() {
            for (what, got, want) in [
                ("volume", m.volume, e.volume),
                ("sigma", m.sigma, e.sigma),
                ("gamma", m.gamma, e.gamma),
            ] {
                ctx.check(
                    &format!("{label}/{what}"),
                    anchors::FIXTURES,
                    Relation::Approx,
                    got,
                    want,
                    2.0 * h * h * want.abs().max(1.0),
                );
            }
        }
        if let Some(d) = &dir {
            mesh.save(&d.join(format!("{label}.json")))?;
        }
        table.push(vec![
            k as f64,
            mesh.vertex_count() as f64,
            mesh.cell_count() as f64,
            mesh.mesh_size(),
            m.volume,
            m.sigma,
            m.gamma,
        ]);
        ctx.note(&label, f);
    }
    let a = Fixture::PerturbedHalfDisk { amplitude: 0.0 }.generate(h)?;
    let b = Fixture::HalfDisk.generate(h)?;
    let same =
        a.vertices() == b.vertices() && a.cells() == b.cells() && a.boundary() == b.boundary();
    ctx.check(
        "perturbed_zero_is_half_disk",
        anchors::FIXTURES,
        Relation::Approx,
        same as u8 as f64,
        1.0,
        0.0,
    );
    let flat = Fixture::FlatHalfDiskEmbedded { ambient: 4 }.generate(h)?;
    let hmax = curvature(&flat)?
        .mean_curvature_norms()
        .into_iter()
        .fold(0.0, f64::max);
    ctx.check(
        "flat_embedded_mean_curvature",
        anchors::FIXTURES,
        Relation::Le,
        hmax,
        0.0,
        1e-10,
    );
    ctx.tables.push(table);
    Ok(())
}
