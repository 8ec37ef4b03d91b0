use thiserror::Error;

use crate::groups::PointError;
use crate::policy::PolicyError;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Policy(#[from] PolicyError),

    #[error("attribute set does not satisfy the access policy")]
    NotSatisfied,

    /// The undifferentiated rejection of verified decryption.
    #[error("verification failed")]
    VerificationFailed,

    #[error("attribute set must not be empty")]
    EmptyAttributes,

    #[error("ciphertext does not match its policy: {0}")]
    Inconsistent(&'static str),

    #[error("malformed encoding at {path}: {reason}")]
    MalformedEncoding { path: String, reason: String },

    #[error("unsupported curve id {0:#04x}")]
    WrongCurve(u8),

    #[error("expected a {expected} file, found {found}")]
    WrongRole { expected: &'static str, found: String },

    #[error("malformed envelope: {0}")]
    MalformedEnvelope(String),

    #[error("retrieve key does not belong to the transformation key used")]
    RetrieveKeyMismatch,

    #[error("payload authentication failed")]
    AeadFailure,

    #[error("payload of {0} bytes exceeds the envelope limit")]
    PayloadTooLarge(usize),
}

impl Error {
    pub(crate) fn malformed(path: impl Into<String>, reason: impl ToString) -> Self {
        Error::MalformedEncoding { path: path.into(), reason: reason.to_string() }
    }

    pub(crate) fn from_point(path: impl Into<String>, e: PointError) -> Self {
        match e {
            PointError::WrongCurve(id) => Error::WrongCurve(id),
            other => Error::malformed(path, other),
        }
    }
}
