use thiserror::Error;

/// Errors raised by the geometry toolkit.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("t = {t} outside the warping domain [0, {domain_max}]")]
    Domain { t: f64, domain_max: f64 },

    #[error("warping degenerate at t* = {t}")]
    DegenerateWarping { t: f64 },

    #[error("warping violates m(0) = 1, m'(0) = 0 (got m(0) = {m0}, m'(0) = {dm0})")]
    BadInitialData { m0: f64, dm0: f64 },

    #[error("geodesic exits truncation window at x = {x} (window {window})")]
    ExitsWindow { x: f64, window: f64 },

    #[error("turning point inside leg: m({at}) = {m} <= nu = {nu}")]
    TurningPointInsideLeg { at: f64, m: f64, nu: f64 },

    #[error("no geodesic found: {0}")]
    NoGeodesic(String),

    #[error("unrealizable in window: {0}")]
    Unrealizable(String),

    #[error("invalid triangle sides (a = {a}, b = {b}, c = {c}): {reason}")]
    InvalidSides { a: f64, b: f64, c: f64, reason: &'static str },

    #[error("side-matching violation: {0}")]
    SideMismatch(String),

    #[error("angle-condition violation: angle sum {sum} exceeds pi")]
    AngleCondition { sum: f64 },

    #[error("hypothesis regime exceeded: {0}")]
    HypothesisRegime(String),

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("ODE integration failed: {0}")]
    Integration(String),

    #[error("configuration error: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;
