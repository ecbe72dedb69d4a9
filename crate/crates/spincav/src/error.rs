use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("drive boundary at t = {time} ns does not fall on the time grid (dt = {dt} ns)")]
    Misaligned { time: f64, dt: f64 },

    #[error("frequency spacing {spacing:.3e} rad/ns too coarse for t_max = {t_max} ns (need spacing*t_max < pi/4)")]
    QuadratureResolution { spacing: f64, t_max: f64 },

    #[error("support half-width {required:.4e} rad/ns exceeds the cap {cap:.4e} rad/ns")]
    SupportTooWide { required: f64, cap: f64 },

    #[error("grid of {n} points exceeds the cap of {cap}")]
    GridTooLarge { n: usize, cap: usize },

    #[error("overdamped regime: no oscillation for these parameters")]
    Overdamped,

    #[error("degenerate pole: residue denominator {0:.3e} is numerically zero")]
    DegeneratePole(f64),

    #[error("decay-rate fit failed: {0}")]
    Fit(String),

    #[error("no sign change found while scanning for {0}")]
    NoSignChange(&'static str),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter { name, reason: reason.into() }
    }

    /// True for problems with the user's input rather than the numerics.
    pub fn is_config(&self) -> bool {
        matches!(
            self,
            Error::Config(_) | Error::InvalidParameter { .. } | Error::Misaligned { .. }
        )
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Config(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
