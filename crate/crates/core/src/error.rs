use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("{0} is not prime")]
    NotPrime(i64),
    #[error("class number of Q(sqrt({d})) is {h}, not 1")]
    ClassNumberNotOne { d: i64, h: u64 },
    #[error("unsupported ring: {0}")]
    UnsupportedRing(String),
    #[error("modulus is zero")]
    ZeroModulus,
    #[error("no element of norm +-{norm} with |b| <= {bound}")]
    GeneratorSearchExhausted { norm: i64, bound: i64 },
    #[error("r is not integral: {0}")]
    NonIntegralR(String),
    #[error("d = {d} does not divide n = {n}")]
    DNotDividesN { d: String, n: String },
    #[error("lambda is not integral: {0}")]
    NonIntegralLambda(String),
    #[error("l = {0} is not coprime to D")]
    LNotCoprimeToD(String),
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("denominator {0:e} too close to a pole")]
    PoleProximity(f64),
    #[error("outside validated regime: {0}")]
    RegimeExceeded(String),
    #[error("quadrature failed: {0}")]
    QuadratureFailure(String),
    #[error("truncation budget exceeded: {0}")]
    TruncationBudgetExceeded(String),
    #[error("unknown suite `{0}`")]
    UnknownSuite(String),
    #[error("invalid configuration: {0}")]
    ConfigInvalid(String),
    #[error("i/o failure: {0}")]
    IoFailure(String),
}

pub type Result<T> = std::result::Result<T, Error>;
