//! Seeded generators for the synthetic benchmark families. Every generator
//! is a pure function of its sizes and seed.

mod entropy;
mod huber;
mod multistage;
mod portfolio;
mod rng;

pub use entropy::{entropy, entropy_with, EntropyOptions};
pub use huber::{huber, huber_with, HuberOptions, HUBER_THRESHOLD};
pub use multistage::{
    multistage_instance, multistage_portfolio, multistage_row_count, MultistageInstance, MultistageLayout, MULTISTAGE_BOX,
};
pub use portfolio::{portfolio, portfolio_from_factors};
pub use rng::GenRng;

use crate::problem::ProblemData;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeneratorError {
    #[error("invalid size: {0}")]
    InvalidSize(String),
    #[error("budget {required} cannot fit in the box: 0.1·n = {capacity}")]
    InfeasibleBoxBudget { required: f64, capacity: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Family {
    PortfolioQp,
    HuberQp,
    EntropyExp,
    MultistagePortfolioSocp,
}

impl Family {
    pub fn as_str(self) -> &'static str {
        match self {
            Family::PortfolioQp => "portfolio",
            Family::HuberQp => "huber",
            Family::EntropyExp => "entropy",
            Family::MultistagePortfolioSocp => "multistage",
        }
    }
}

impl std::str::FromStr for Family {
    type Err = GeneratorError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "portfolio" => Ok(Family::PortfolioQp),
            "huber" => Ok(Family::HuberQp),
            "entropy" => Ok(Family::EntropyExp),
            "multistage" => Ok(Family::MultistagePortfolioSocp),
            other => Err(GeneratorError::InvalidSize(format!("unknown family '{other}'"))),
        }
    }
}

/// One instance request. `k` and `t` only matter for the multistage family.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GenSpec {
    pub family: Family,
    pub n: usize,
    pub k: usize,
    pub t: usize,
    pub seed: u64,
    /// Risk aversion for the single-period portfolio.
    pub gamma: f64,
}

impl GenSpec {
    pub fn new(family: Family, n: usize, seed: u64) -> Self {
        Self { family, n, k: 1, t: 1, seed, gamma: 1.0 }
    }

    pub fn generate(&self) -> Result<ProblemData, GeneratorError> {
        match self.family {
            Family::PortfolioQp => portfolio(self.n, self.gamma, self.seed),
            Family::HuberQp => huber(self.n, self.seed),
            Family::EntropyExp => entropy(self.n, self.seed),
            Family::MultistagePortfolioSocp => multistage_portfolio(self.n, self.k, self.t, self.seed),
        }
    }
}

/// Nearest integer, halves rounded away from zero.
pub fn round_count(x: f64) -> usize {
    x.round() as usize
}
