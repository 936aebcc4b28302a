use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("insufficient depth: need {needed} digits, schedule provides {available}")]
    InsufficientDepth { needed: String, available: String },

    #[error("exact expansion to depth {requested} refused: depth cap is {cap}")]
    DepthCapExceeded { requested: String, cap: u64 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("contract violation: {0}")]
    ContractViolation(String),

    #[error("insufficient precision: {0}")]
    InsufficientPrecision(String),

    #[error("out of range: {0}")]
    OutOfRange(String),

    #[error("plan infeasible at j = {j}: {detail}")]
    PlanInfeasible { j: usize, detail: String },

    #[error("digit cap exceeded: digit needs {required_bits} bits, cap is {cap_bits}")]
    DigitCapExceeded { required_bits: u64, cap_bits: u64 },

    #[error("time {0} is beyond the certificate horizon")]
    HorizonExceeded(String),

    #[error("invalid curve: {0}")]
    InvalidCurve(String),

    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),

    #[error("audit failed: {}", .0.join("; "))]
    AuditFailed(Vec<String>),

    #[error("parse error in {context}: {message}")]
    Parse { context: String, message: String },

    #[error("output directory is locked: {0}")]
    Locked(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
