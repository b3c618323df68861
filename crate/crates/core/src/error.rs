use thiserror::Error;

/// Errors raised by validation of inputs and numerical guards.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: &'static str },

    #[error("non-finite value for `{0}`")]
    NonFinite(&'static str),

    #[error("time {t} is not before maturity {maturity}")]
    AtOrAfterExpiry { t: f64, maturity: f64 },

    #[error("grid mismatch: {0}")]
    GridMismatch(&'static str),

    #[error("simulation of {values} values exceeds the limit of {limit}")]
    TooLarge { values: u128, limit: u128 },

    #[error("lattice violates u > r* > d > 0 (u = {u}, r* = {r_star}, d = {d})")]
    Arbitrage { u: f64, r_star: f64, d: f64 },

    #[error("degenerate state: {0}")]
    Degenerate(&'static str),
}

pub type Result<T> = core::result::Result<T, Error>;

pub(crate) fn finite(name: &'static str, v: f64) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::NonFinite(name))
    }
}

pub(crate) fn positive(name: &'static str, v: f64) -> Result<f64> {
    finite(name, v)?;
    if v > 0.0 {
        Ok(v)
    } else {
        Err(Error::InvalidParameter { name, reason: "must be > 0" })
    }
}
