pub mod cartan;
pub mod hyper;
pub mod kzode;
pub mod linalg;
pub mod morphisms;
pub mod natcalc;
pub mod repr;
pub mod tensor;
pub mod twistbuild;
pub mod uqverify;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("resonance: {0}")]
    Resonance(String),
    #[error("ill-conditioned eigenbasis (condition number {0:.3e})")]
    IllConditioned(f64),
    #[error("singular matrix: {0}")]
    Singular(String),
    #[error("weight {0:?} lies outside the support")]
    OutOfSupport(Vec<i64>),
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("configuration error: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;
