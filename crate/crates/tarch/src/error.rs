use thiserror::Error;

/// Errors surfaced by model construction, moment integrals and solvers.
#[derive(Debug, Error)]
pub enum TarchError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("no regime coefficients for sign pattern {pattern:?}")]
    MissingRegime { pattern: Vec<i8> },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("moment of order {r} not declared finite (r0 = {r0})")]
    InfiniteMoment { r: f64, r0: f64 },

    #[error("bracket [{lo}, {hi}] does not straddle the root: g(lo) = {g_lo}, g(hi) = {g_hi}")]
    Bracket { lo: f64, hi: f64, g_lo: f64, g_hi: f64 },

    #[error("negative Lyapunov exponent required: log rho estimate {log_rho} >= 0")]
    NonContractive { log_rho: f64 },

    #[error("collapsed chain is stuck: {events} consecutive zero magnitude multipliers (the model violates the volatility assumptions)")]
    DegenerateChain { events: u64 },

    #[error("weight construction failed: {0}")]
    WeightConstruction(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, TarchError>;
