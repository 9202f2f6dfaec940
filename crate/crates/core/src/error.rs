use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the geometry, unwrapping and classification routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("mask has no foreground component large enough to trace")]
    EmptyMask,
    #[error("mask has {0} foreground components after cleanup, expected one")]
    MultipleComponents(usize),
    #[error("contour could not be repaired: {0}")]
    Unrepairable(String),
    #[error("least-squares system is ill-conditioned (condition estimate {condition:.3e}); lower the degree")]
    IllConditioned { condition: f64 },
    #[error("not enough points for a degree {degree} fit: got {points}")]
    TooFewPoints { degree: usize, points: usize },
    #[error("curve speed vanishes at s = {0}")]
    SingularSpeed(f64),
    #[error("need at least two cross sections, found {0}")]
    TooFewSections(usize),
    #[error("no cross sections could be matched")]
    NoInteriorCandidate,
    #[error("reference curve is empty at the requested threshold")]
    EmptyReference,
    #[error("invalid template: {0}")]
    InvalidProfile(String),
    #[error("bend makes the body overlap itself: {0}")]
    SelfOverlap(String),
    #[error("reference curve ({reference}) is shorter than the query ({query})")]
    RefTooShort { reference: usize, query: usize },
    #[error("need at least two instances, got {0}")]
    TooFewInstances(usize),
    #[error("no model for label {0:?}")]
    UnknownLabel(String),
    #[error("invalid input: {0}")]
    Invalid(String),
}

/// Errors from file and format handling; carries the offending path.
#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
