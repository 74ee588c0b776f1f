use thiserror::Error;

/// Errors surfaced by the library.
///
/// Protocol-level rejections (a signature that does not verify, a transcript
/// that fails the norm check) are *not* errors; verification returns a bool.
/// Errors indicate contract violations, malformed inputs or the abort event.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("ring element is not invertible")]
    NotInvertible,

    #[error("aggregation inputs have mismatched lengths ({0} weights, {1} values)")]
    LengthMismatch(usize, usize),

    #[error("mixed scheme backends in one operation")]
    SchemeMismatch,

    #[error("duplicate public key in signer set")]
    DuplicateKey,

    #[error("signer public key is not a member of the signer set")]
    KeyNotInSet,

    #[error("session is in phase {0:?}, operation requires {1:?}")]
    InvalidPhase(crate::multisig::Phase, crate::multisig::Phase),

    #[error("missing round-{round} message from signer {index}")]
    MissingMessage { round: u8, index: usize },

    #[error("commitment from signer {index} does not match its round-1 digest")]
    CommitmentMismatch { index: usize },

    #[error("no response slot available (abort)")]
    Abort,

    #[error("challenge is outside the challenge set")]
    ChallengeOutOfSet,

    #[error("commit state already consumed")]
    StateReused,

    #[error("malformed {0}")]
    Malformed(&'static str),

    #[error("bad magic bytes in file header")]
    BadMagic,

    #[error("unsupported format version {0}")]
    BadVersion(u8),

    #[error("unknown scheme tag {0:#04x}")]
    BadSchemeTag(u8),

    #[error("unknown payload kind {0:#04x}")]
    BadPayloadKind(u8),

    #[error("checksum mismatch (file corrupted or truncated)")]
    BadChecksum,

    #[error("file truncated: expected {expected} more bytes")]
    Truncated { expected: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
