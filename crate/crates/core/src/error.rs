use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("no positive equilibrium density: {0}")]
    NoEquilibrium(String),

    #[error("noise factor diverges: condensate offset equals the reservoir chemical potential")]
    DivergentNoiseFactor,

    #[error("trajectory {trajectory} became non-finite at t = {t}")]
    NonFinite { trajectory: usize, t: f64 },

    #[error("phase undefined for trajectory {trajectory}: density {rho:e}")]
    DegeneratePhase { trajectory: usize, rho: f64 },

    #[error("need at least {required} trajectories, got {got}")]
    TooFewSamples { required: usize, got: usize },

    #[error("condensate is unstable: flux elasticity {0} is not positive")]
    Unstable(f64),

    #[error("threshold polynomial has no root in (0, 1]")]
    NoThreshold,

    #[error("initial state is already below the entanglement threshold")]
    NeverEntangled,

    #[error("malformed snapshot: {0}")]
    Snapshot(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
