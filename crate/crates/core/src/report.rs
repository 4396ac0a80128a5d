//! Run configuration, verification records and their JSON/CSV emitters.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fixtures::Fixture;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Subcommand {
    Cones,
    Abp,
    Quotient,
    Submanifold,
    Logsob,
    Fixtures,
    All,
}

impl Subcommand {
    pub const ALL: [Subcommand; 7] = [
        Subcommand::Cones,
        Subcommand::Abp,
        Subcommand::Quotient,
        Subcommand::Submanifold,
        Subcommand::Logsob,
        Subcommand::Fixtures,
        Subcommand::All,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Subcommand::Cones => "cones",
            Subcommand::Abp => "abp",
            Subcommand::Quotient => "quotient",
            Subcommand::Submanifold => "submanifold",
            Subcommand::Logsob => "logsob",
            Subcommand::Fixtures => "fixtures",
            Subcommand::All => "all",
        }
    }
}

impl fmt::Display for Subcommand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Subcommand {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Subcommand::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::Parse(format!("unknown subcommand {s:?}")))
    }
}

/// Everything a run depends on. Tolerances left as `None` take the
/// mesh-derived defaults, which are echoed in the report notes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub subcommand: Subcommand,
    /// Point-set files for `cones`, mesh files for the mesh pipelines.
    #[serde(default)]
    pub inputs: Vec<PathBuf>,
    /// Fixtures to generate; empty means the canonical set.
    #[serde(default)]
    pub fixtures: Vec<Fixture>,
    pub seed: u64,
    pub samples: usize,
    /// Nominal edge length of the unit-scale fixtures.
    pub h: f64,
    #[serde(default)]
    pub tol_contact: Option<f64>,
    #[serde(default)]
    pub tol_grad: Option<f64>,
    #[serde(default)]
    pub delta_psd: Option<f64>,
    pub t_gates: Vec<f64>,
    #[serde(default)]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub plot: bool,
}

impl RunConfig {
    pub const DEFAULT_SAMPLES: usize = 100_000;
    pub const DEFAULT_H: f64 = 0.02;
    pub const DEFAULT_T_GATES: [f64; 2] = [0.5, 0.9];

    /// Defaults for everything but the seed.
    pub fn new(subcommand: Subcommand, seed: u64) -> Self {
        RunConfig {
            subcommand,
            inputs: Vec::new(),
            fixtures: Vec::new(),
            seed,
            samples: Self::DEFAULT_SAMPLES,
            h: Self::DEFAULT_H,
            tol_contact: None,
            tol_grad: None,
            delta_psd: None,
            t_gates: Self::DEFAULT_T_GATES.to_vec(),
            out: None,
            plot: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.samples == 0 {
            return Err(Error::Domain("samples must be positive".into()));
        }
        if !(self.h > 0.0 && self.h < 0.5) {
            return Err(Error::Domain(format!(
                "h must lie in (0, 0.5), got {}",
                self.h
            )));
        }
        for (name, v) in [
            ("contact tolerance", self.tol_contact),
            ("gradient tolerance", self.tol_grad),
            ("positivity delta", self.delta_psd),
        ] {
            if let Some(v) = v {
                if !(v > 0.0 && v.is_finite()) {
                    return Err(Error::Domain(format!("{name} must be positive, got {v}")));
                }
            }
        }
        if let Some(t) = self.t_gates.iter().find(|t| !(0.0..1.0).contains(*t)) {
            return Err(Error::Domain(format!(
                "t-gates must lie in [0, 1), got {t}"
            )));
        }
        Ok(())
    }
}

/// How `lhs` and `rhs` are compared.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    /// margin = rhs − lhs
    Le,
    /// margin = lhs − rhs
    Ge,
    /// margin = −|lhs − rhs|
    Approx,
}

/// One verified statement. `pass` is `margin ≥ −tolerance`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub stage: String,
    pub name: String,
    /// Quoted phrase locating the statement being checked.
    pub anchor: String,
    pub relation: Relation,
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub standard_error: Option<f64>,
    pub tolerance: f64,
    pub pass: bool,
}

impl Check {
    pub fn new(
        stage: &str,
        name: &str,
        anchor: &str,
        relation: Relation,
        lhs: f64,
        rhs: f64,
        tolerance: f64,
    ) -> Self {
        let margin = margin(relation, lhs, rhs);
        Check {
            stage: stage.to_string(),
            name: name.to_string(),
            anchor: anchor.to_string(),
            relation,
            lhs,
            rhs,
            margin,
            standard_error: None,
            tolerance,
            pass: margin >= -tolerance,
        }
    }

    pub fn with_se(mut self, se: f64) -> Self {
        self.standard_error = Some(se);
        self
    }

    /// Pass flag recomputed from the stored numbers.
    pub fn recompute(&self) -> bool {
        margin(self.relation, self.lhs, self.rhs) >= -self.tolerance
    }
}

fn margin(relation: Relation, lhs: f64, rhs: f64) -> f64 {
    match relation {
        Relation::Le => rhs - lhs,
        Relation::Ge => lhs - rhs,
        Relation::Approx => -(lhs - rhs).abs(),
    }
}

/// A numeric table, written as CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(name: &str, columns: &[&str]) -> Self {
        Table {
            name: name.to_string(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let k = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[k]).collect())
    }

    pub fn to_csv(&self) -> String {
        let mut s = self.columns.join(",");
        s.push('\n');
        for r in &self.rows {
            let cells: Vec<String> = r.iter().map(|v| format!("{v:e}")).collect();
            s.push_str(&cells.join(","));
            s.push('\n');
        }
        s
    }
}

/// Free-form diagnostic attached to a stage (resolved tolerances, counts).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Note {
    pub stage: String,
    pub key: String,
    pub value: serde_json::Value,
}

/// A stage that stopped with an error; the run fails but the report is kept.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageFailure {
    pub stage: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub schema_version: u32,
    pub library_version: String,
    pub config: RunConfig,
    pub curvature_convention: String,
    pub checks: Vec<Check>,
    pub tables: Vec<Table>,
    pub notes: Vec<Note>,
    pub failures: Vec<StageFailure>,
    /// Wall-clock seconds; the only field that differs between identical runs.
    pub runtime_seconds: f64,
}

impl VerificationReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty() && self.checks.iter().all(|c| c.pass)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn table(&self, name: &str) -> Option<&Table> {
        self.tables.iter().find(|t| t.name == name)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// The report with the runtime zeroed, for comparing runs.
    pub fn numerics(&self) -> Self {
        VerificationReport {
            runtime_seconds: 0.0,
            ..self.clone()
        }
    }

    /// `report.json` plus one CSV per table into `dir`; returns the paths.
    pub fn write(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        fs::create_dir_all(dir)?;
        let mut written = Vec::new();
        let path = dir.join("report.json");
        fs::write(&path, self.to_json()?)?;
        written.push(path);
        for t in &self.tables {
            let path = dir.join(format!("{}.csv", t.name));
            fs::write(&path, t.to_csv())?;
            written.push(path);
        }
        Ok(written)
    }

    /// One line per check, for terminals.
    pub fn summary(&self) -> String {
        let mut s = String::new();
        for c in &self.checks {
            s.push_str(&format!(
                "[{}] {}/{}: lhs={:.6} rhs={:.6} margin={:.3e} tol={:.3e}\n",
                if c.pass { "PASS" } else { "FAIL" },
                c.stage,
                c.name,
                c.lhs,
                c.rhs,
                c.margin,
                c.tolerance
            ));
        }
        for f in &self.failures {
            s.push_str(&format!("[FAIL] {}: {}\n", f.stage, f.message));
        }
        let passed = self.checks.iter().filter(|c| c.pass).count();
        s.push_str(&format!(
            "{} of {} checks passed, {} stage failures\n",
            passed,
            self.checks.len(),
            self.failures.len()
        ));
        s
    }
}
