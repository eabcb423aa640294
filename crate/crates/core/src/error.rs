use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("operator construction failed: {0}")]
    ConstructionFailure(String),

    #[error("degenerate mesh: element {element} has minimum Jacobian {min_jacobian:e}")]
    DegenerateMesh { element: usize, min_jacobian: f64 },

    /// Density or pressure is not positive.
    #[error("inadmissible state {state:?} (pressure {pressure:e}){}", fmt_location(.location))]
    Inadmissible {
        state: Vec<f64>,
        pressure: f64,
        location: Option<Location>,
    },

    #[error("invalid entropy variables: last component {beta_last:e} must be negative")]
    InvalidEntropyState { beta_last: f64 },

    #[error("entropy projection failed in element {element}")]
    EntropyProjection { element: usize },

    #[error("relaxation failed: {0}")]
    Relaxation(String),

    #[error("internal error: {0}")]
    Internal(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Element and quadrature node where a pointwise failure happened.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Location {
    pub element: usize,
    pub node: usize,
}

fn fmt_location(location: &Option<Location>) -> String {
    match location {
        Some(l) => format!(" at element {}, node {}", l.element, l.node),
        None => String::new(),
    }
}

impl Error {
    /// Attach an element/node location to admissibility failures.
    pub fn at(self, element: usize, node: usize) -> Self {
        match self {
            Error::Inadmissible {
                state,
                pressure,
                location: None,
            } => Error::Inadmissible {
                state,
                pressure,
                location: Some(Location { element, node }),
            },
            other => other,
        }
    }
}
