//! Numerical machinery for ABP-style proofs of relative isoperimetric,
//! Michael–Simon and logarithmic Sobolev inequalities on meshes and finite
//! point configurations.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod abp;
pub mod cones;
pub mod domain;
pub mod error;
pub mod euclid;
pub mod fem;
pub mod fixtures;
pub mod logsob;
pub mod manifold;
pub mod mesh;
pub mod montecarlo;
pub mod pipeline;
pub mod plot;
pub mod quadrature;
pub mod report;

pub use error::{Error, Result, Violation};
pub use euclid::{
    ball_volume, brendle_constant, sample_ball, sample_sphere, sphere_area, BallConstants, Point,
    SampleStream,
};
pub use mesh::{Label, SimplicialMesh};
pub use montecarlo::MeasureEstimate;
pub use pipeline::{run, RunOutput};
pub use report::{Check, RunConfig, Subcommand, VerificationReport};
