use num_complex::Complex64;
use thiserror::Error;

/// Crate-wide error type. Variants mirror the failure modes of the
/// individual subsystems so callers can match on the numeric cause.
#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("potential does not decay at grid ends: |u| = {observed:.3e} exceeds tol {tol:.3e}")]
    Decay { observed: f64, tol: f64 },

    #[error("potential does not decay; scattering is undefined")]
    NonDecayingPotential,

    #[error("ill-conditioned: {0}")]
    IllConditioned(String),

    #[error("second derivative of the potential is unavailable (grid too short)")]
    DerivativeUnavailable,

    #[error("spectral singularity: |a({k})| = {abs_a:.3e} below floor")]
    SpectralSingularity { k: Complex64, abs_a: f64 },

    #[error("contour range insufficient for asymptotic fits (need k_min <= {need_min}, k_max >= {need_max})")]
    InsufficientRange { need_min: f64, need_max: f64 },

    #[error("winding count {winding} does not match {found} zeros found")]
    WindingMismatch { winding: i64, found: usize },

    #[error("zero at {k} is not simple: |a'| = {abs_da:.3e}")]
    MultipleZero { k: Complex64, abs_da: f64 },

    #[error("trace formula evaluated at a pole k = {0}")]
    PoleHit(Complex64),

    #[error("evaluation point too close to the integration contour (dist = {dist:.3e})")]
    ContourProximity { dist: f64 },

    #[error("residue linear system is singular (coincident poles or overflowed gamma)")]
    SingularSystem,

    #[error("operation requires N = {expected} solitons, ensemble has {got}")]
    WrongSolitonCount { expected: usize, got: usize },

    #[error("phase is singular at k = 0")]
    OriginSingularity,

    #[error("degenerate cone: xi = {xi:.3e} leaves the four-point regime")]
    DegenerateCone { xi: f64 },

    #[error("gamma argument |nu| = {nu} outside supported range")]
    GammaOverflow { nu: f64 },

    #[error("(x, t) = ({x}, {t}) lies outside the cone")]
    OutsideCone { x: f64, t: f64 },

    #[error("need at least 4 samples for a rate fit, got {0}")]
    InsufficientSamples(usize),

    #[error("field norm {norm:.3e} exceeded blow-up threshold at t = {t}")]
    BlowUp { t: f64, norm: f64 },

    #[error("time step violates the stability guard: {0}")]
    StabilityViolation(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Stable short name of the failure kind, used in CLI diagnostics.
    pub fn name(&self) -> &'static str {
        match self {
            Error::Config(_) => "ConfigError",
            Error::Decay { .. } => "DecayError",
            Error::NonDecayingPotential => "NonDecayingPotential",
            Error::IllConditioned(_) => "IllConditioned",
            Error::DerivativeUnavailable => "DerivativeUnavailable",
            Error::SpectralSingularity { .. } => "SpectralSingularity",
            Error::InsufficientRange { .. } => "InsufficientRange",
            Error::WindingMismatch { .. } => "WindingMismatch",
            Error::MultipleZero { .. } => "MultipleZero",
            Error::PoleHit(_) => "PoleHit",
            Error::ContourProximity { .. } => "ContourProximity",
            Error::SingularSystem => "SingularSystem",
            Error::WrongSolitonCount { .. } => "WrongSolitonCount",
            Error::OriginSingularity => "OriginSingularity",
            Error::DegenerateCone { .. } => "DegenerateCone",
            Error::GammaOverflow { .. } => "GammaOverflow",
            Error::OutsideCone { .. } => "OutsideCone",
            Error::InsufficientSamples(_) => "InsufficientSamples",
            Error::BlowUp { .. } => "BlowUp",
            Error::StabilityViolation(_) => "StabilityViolation",
            Error::Io(_) => "IoError",
            Error::Json(_) => "JsonError",
        }
    }

    /// Whether the failure is a configuration problem (CLI exit 1) rather
    /// than a numeric one (exit 2).
    pub fn is_config(&self) -> bool {
        matches!(self, Error::Config(_) | Error::Io(_) | Error::Json(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
