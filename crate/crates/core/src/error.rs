use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A value violates a documented bound.
    #[error("domain error: {what} (bound: {bound})")]
    Domain { what: String, bound: String },

    #[error("synthesis error: {0}")]
    Synthesis(String),

    /// Harmonic `k` lands on (or within rounding of) DC, where the inductor
    /// admittance is singular.
    #[error("harmonic k={k} collides with DC at f={frequency} Hz")]
    HarmonicCollision { frequency: f64, k: i32 },

    #[error("singular pivot at index {index} (|pivot|={magnitude:e}) at f={frequency} Hz")]
    SingularPivot {
        frequency: f64,
        index: usize,
        magnitude: f64,
    },

    #[error("termination at f={frequency} Hz is not passive (Re Z = {resistance})")]
    NonPassiveTermination { frequency: f64, resistance: f64 },

    #[error("frequency {frequency} Hz lies outside the impedance table [{lo}, {hi}] Hz")]
    OutsideTable { frequency: f64, lo: f64, hi: f64 },

    #[error("state diverged at t={time:e} s")]
    Integration { time: f64 },

    #[error("steady state not reached: settling metric {metric:e} > {threshold:e}")]
    NotSettled { metric: f64, threshold: f64 },

    #[error("f={frequency} Hz and fm={modulation} Hz are not commensurate")]
    Incommensurate { frequency: f64, modulation: f64 },

    #[error("quadrature did not converge (estimated error {achieved:e})")]
    Quadrature { achieved: f64 },

    #[error("invalid geometry: {0}")]
    Geometry(String),
}

impl Error {
    pub(crate) fn domain(what: impl Into<String>, bound: impl Into<String>) -> Self {
        Error::Domain {
            what: what.into(),
            bound: bound.into(),
        }
    }
}
