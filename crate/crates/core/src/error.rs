use std::fmt;

use crate::index::MultiIndex;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("singular matrix of size {size} (rank {rank})")]
    Singular { size: usize, rank: usize },

    #[error("insufficient moments: need order {needed}, table has order {available}")]
    InsufficientMoments { needed: usize, available: usize },

    #[error("divergent measure {measure}: t + kappa = {value} is not positive")]
    DivergentMeasure { measure: usize, value: String },

    #[error("multi-index {index} is not normal (tau = 0)")]
    Normality { index: MultiIndex, time: Option<usize> },

    #[error("lambda = {lambda} is a zero of P_{index}")]
    ForbiddenLambda { index: MultiIndex, lambda: String },

    #[error("zero divisor at site {site}, channel {}", channel + 1)]
    Degeneracy { site: MultiIndex, channel: usize },

    #[error("input violates the contiguous relations at {site}: {family} residual {residual}")]
    Consistency {
        site: MultiIndex,
        family: String,
        residual: String,
    },

    #[error("halo value missing at site {0}")]
    Halo(MultiIndex),

    #[error("closed form has a pole: t + kappa_{measure} = 0")]
    Pole { measure: usize },

    #[error("invalid specification: {0}")]
    InvalidSpec(String),

    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    /// Whether the error is a mathematical degeneracy (as opposed to bad input).
    pub fn is_degeneracy(&self) -> bool {
        matches!(
            self,
            Error::Singular { .. }
                | Error::Normality { .. }
                | Error::ForbiddenLambda { .. }
                | Error::Degeneracy { .. }
                | Error::Pole { .. }
        )
    }

    pub(crate) fn normality(index: &MultiIndex) -> Self {
        Error::Normality {
            index: index.clone(),
            time: None,
        }
    }

    pub(crate) fn normality_at(index: &MultiIndex, time: usize) -> Self {
        Error::Normality {
            index: index.clone(),
            time: Some(time),
        }
    }

    pub(crate) fn invalid(msg: impl fmt::Display) -> Self {
        Error::InvalidSpec(msg.to_string())
    }
}
