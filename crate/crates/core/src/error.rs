use std::fmt;

use thiserror::Error;

/// A single failed mesh invariant, carrying the offending entity ids.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    InvertedCell { cell: usize },
    DegenerateCell { cell: usize },
    BadIndex { cell: usize, vertex: usize },
    NonFiniteVertex { vertex: usize },
    UnlabeledFace { face: Vec<usize> },
    DuplicateLabel { face: Vec<usize> },
    UnknownFace { face: Vec<usize> },
    NonManifoldFace { face: Vec<usize>, count: usize },
    OpenBoundary { vertex: usize },
    OffSupport { face: Vec<usize>, distance: f64 },
    DimensionMismatch { expected: usize, found: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::InvertedCell { cell } => write!(f, "cell {cell} is inverted"),
            Violation::DegenerateCell { cell } => write!(f, "cell {cell} has zero volume"),
            Violation::BadIndex { cell, vertex } => {
                write!(f, "cell {cell} references missing vertex {vertex}")
            }
            Violation::NonFiniteVertex { vertex } => {
                write!(f, "vertex {vertex} has a non-finite coordinate")
            }
            Violation::UnlabeledFace { face } => write!(f, "boundary face {face:?} is unlabeled"),
            Violation::DuplicateLabel { face } => {
                write!(f, "boundary face {face:?} is labeled more than once")
            }
            Violation::UnknownFace { face } => {
                write!(
                    f,
                    "labeled face {face:?} is not a boundary face of the complex"
                )
            }
            Violation::NonManifoldFace { face, count } => {
                write!(f, "face {face:?} is shared by {count} cells")
            }
            Violation::OpenBoundary { vertex } => {
                write!(f, "boundary is not closed at vertex {vertex}")
            }
            Violation::OffSupport { face, distance } => {
                write!(
                    f,
                    "gamma face {face:?} is {distance:e} away from the support"
                )
            }
            Violation::DimensionMismatch { expected, found } => {
                write!(f, "expected dimension {expected}, found {found}")
            }
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("mesh validation failed: {}", join(.0))]
    Validation(Vec<Violation>),
    #[error("solver error: {0}")]
    Solver(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

fn join(v: &[Violation]) -> String {
    v.iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join("; ")
}

pub type Result<T> = std::result::Result<T, Error>;
