use thiserror::Error;

/// Errors raised by the engine, the package builder and the file formats.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("field mismatch: {0}")]
    FieldMismatch(String),

    #[error("modulus {0} is not a prime in [2, 251]")]
    BadModulus(u32),

    #[error("singular matrix")]
    SingularMatrix,

    #[error("no power of the word up to {max} returns both anchors")]
    OrderOverflow { max: u32 },

    #[error("element of order {0} is not an involution")]
    NotInvolution(u32),

    #[error("involution signature {0} is not in the class table")]
    UnknownSignature(String),

    #[error("element with fingerprint {0} is not in the island")]
    NotInIsland(String),

    #[error("kernel exponent search exhausted ({0} combinations)")]
    KernelSearchExhausted(usize),

    #[error("elements are not conjugate in the island")]
    NotConjugate,

    #[error("involution is not in class {0}")]
    NotInClassK(String),

    #[error("shortening failed after {restarts} restarts of {samples} samples per step")]
    LasVegasFailure { restarts: u32, samples: u32 },

    #[error("invariant breach: {0}")]
    InvariantBreach(String),

    #[error("declared group order {0} exceeds the builder cap {1}")]
    GroupTooLarge(u64, u64),

    #[error("no anchor pair with trivial joint stabilizer after {0} candidates")]
    NoAnchorsFound(u32),

    #[error("no changing-post tail of the allowed shape for island class {0}")]
    PostTailNotFound(String),

    #[error("island has order {island} but the centralizer of z has order {centralizer}")]
    IslandNotCentralizer { island: u64, centralizer: u64 },

    #[error("probe candidates exhausted before involution classes separated")]
    ProbesInsufficient,

    #[error("build failed: {0}")]
    BuildFailure(String),

    #[error("verification failed: {0}")]
    VerificationFailure(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Stable machine-parsable code, used by the CLI error line.
    pub fn code(&self) -> &'static str {
        match self {
            Error::DimensionMismatch(_) => "dimension_mismatch",
            Error::FieldMismatch(_) => "field_mismatch",
            Error::BadModulus(_) => "bad_modulus",
            Error::SingularMatrix => "singular_matrix",
            Error::OrderOverflow { .. } => "order_overflow",
            Error::NotInvolution(_) => "not_involution",
            Error::UnknownSignature(_) => "unknown_signature",
            Error::NotInIsland(_) => "not_in_island",
            Error::KernelSearchExhausted(_) => "kernel_search_exhausted",
            Error::NotConjugate => "not_conjugate",
            Error::NotInClassK(_) => "not_in_class_k",
            Error::LasVegasFailure { .. } => "las_vegas_failure",
            Error::InvariantBreach(_) => "invariant_breach",
            Error::GroupTooLarge(_, _) => "group_too_large",
            Error::NoAnchorsFound(_) => "no_anchors_found",
            Error::PostTailNotFound(_) => "post_tail_not_found",
            Error::IslandNotCentralizer { .. } => "island_not_centralizer",
            Error::ProbesInsufficient => "probes_insufficient",
            Error::BuildFailure(_) => "build_failure",
            Error::VerificationFailure(_) => "verification_failure",
            Error::Parse(_) => "parse_error",
            Error::Io(_) => "io_error",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
