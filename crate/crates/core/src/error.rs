use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unsupported field: d = {0} (class number one fields d = 1, 2, 3, 7, 11 only)")]
    UnsupportedField(u32),
    #[error("unknown field label `{0}`")]
    UnknownField(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("denominator is not invertible modulo {0}")]
    DenominatorNotInvertible(String),

    #[error("base point does not lie on the conic")]
    BasePointInvalid,
    #[error("degenerate conic point: X coordinate is zero")]
    DegeneratePoint,
    #[error("degenerate j-invariant {0}: family member is singular")]
    DegenerateJ(String),
    #[error("singular curve: discriminant vanishes")]
    SingularCurve,
    #[error("curve is not in the discriminant-6 family: {0}")]
    NotInFamily(String),

    #[error("bad reduction at {prime}: {reason}")]
    BadReduction { prime: String, reason: String },
    #[error("Euler factor at {prime} is not a square: {detail}")]
    NotQmShape { prime: String, detail: String },
    #[error("trace table contains no conjugate pair of split primes")]
    NoSplitPrimes,

    #[error("enumeration budget exceeded: {0}")]
    BudgetExceeded(String),
    #[error("prime {0} divides the modulus")]
    PrimeDividesModulus(String),
    #[error("no character matches the oracle: {0}")]
    Inconsistent(String),
    #[error("residual probe failed: {}", .0.join("; "))]
    ProbeFailure(Vec<String>),
    #[error("trace mismatch at {prime}: curve a = {curve}, form a = {form}")]
    TraceMismatch { prime: String, curve: i64, form: i64 },
    #[error("newform has no eigenvalue at {0}")]
    MissingEigenvalue(String),
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("prime {0} missing from trace table")]
    MissingPrime(String),
    #[error("field mismatch: expected {expected}, found {found}")]
    FieldMismatch { expected: String, found: String },

    #[error("schema error: {0}")]
    Schema(String),
    #[error("duplicate prime {0}")]
    DuplicatePrime(String),
    #[error("Hecke bound violated at {prime}: |{value}| > 2 sqrt({norm})")]
    HeckeBoundViolation { prime: String, value: i64, norm: u64 },
    #[error("network error: {0}")]
    Network(String),
    #[error("not found: {0}")]
    NotFound(String),
    #[error("conversion error: {0}")]
    Conversion(String),

    #[error("field {0} does not split the quaternion algebra of discriminant {1}")]
    FieldDoesNotSplit(String, u32),
    #[error("fixture missing: {0}")]
    FixtureMissing(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for failures of a mathematical check, as opposed to bad input.
    pub fn is_verification_failure(&self) -> bool {
        matches!(
            self,
            Error::TraceMismatch { .. }
                | Error::ProbeFailure(_)
                | Error::NotQmShape { .. }
                | Error::Inconsistent(_)
                | Error::NotInFamily(_)
        )
    }

    /// True when a check could not finish for want of eigenvalue or trace data.
    pub fn is_incomplete_data(&self) -> bool {
        matches!(self, Error::MissingEigenvalue(_) | Error::InsufficientData(_))
    }
}
