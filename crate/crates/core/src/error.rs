use thiserror::Error;

pub type Result<T> = std::result::Result<T, MieError>;

#[derive(Debug, Error)]
pub enum MieError {
    #[error("{name} = {value} outside the domain {domain}")]
    Domain {
        name: &'static str,
        value: f64,
        domain: &'static str,
    },

    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),

    #[error("infeasible layout: {0}")]
    InfeasibleLayout(String),

    #[error("quadrature did not converge (last refinement changed the result by {error_estimate:e})")]
    QuadratureNonConvergence { error_estimate: f64 },

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("Fermi level is degenerate in both boundary sectors for L = {0}")]
    DegenerateFermiLevel(usize),

    #[error("outcome {outcome} at site {site} has probability {probability:e}")]
    ForbiddenOutcome {
        site: usize,
        outcome: u8,
        probability: f64,
    },

    #[error("site {0} already measured")]
    AlreadyMeasured(usize),

    #[error("string expectation <(-1)^N> over the gap vanishes ({0:e}); use an even gap")]
    VanishingString(f64),

    #[error("region too large: {0}")]
    RegionTooLarge(String),

    #[error("eigensolver did not converge (residual {residual:e})")]
    EigenNonConvergence { residual: f64 },

    #[error("ground state is degenerate (gap {gap:e})")]
    DegenerateGroundState { gap: f64 },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("no overlapping zeta support between datasets")]
    NoOverlap,

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Toml(#[from] toml::de::Error),
}

pub(crate) fn domain(name: &'static str, value: f64, domain: &'static str) -> MieError {
    MieError::Domain {
        name,
        value,
        domain,
    }
}
