use alloc::string::String;

/// Errors raised by the core algorithms.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter {
        name: &'static str,
        reason: &'static str,
    },
    #[error("encoded value {value} does not fit in a modulus of {bits} bits")]
    EncodingOverflow { value: i128, bits: u32 },
    #[error("duplicate node id {0}")]
    DuplicateNode(u32),
    #[error("unknown node id {0}")]
    UnknownNode(u32),
    #[error("unknown appliance `{0}`")]
    UnknownAppliance(String),
    #[error("protocol failure: {0}")]
    Protocol(#[from] ProtocolFailure),
    #[error("a prior over start slots is required by the {0} adversary")]
    MissingPrior(&'static str),
    #[error("malformed message: {0}")]
    Malformed(&'static str),
}

/// Reasons a round cannot produce a released aggregate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
pub enum ProtocolFailure {
    /// A node that sent a ciphertext did not answer the recovery round, so its
    /// secret random key never leaves the aggregate.
    #[error("node {0} sent a ciphertext but no recovery response")]
    MissingResponse(u32),
    /// A recovery response arrived from a node that sent no ciphertext.
    #[error("node {0} answered the recovery round without a ciphertext")]
    UnexpectedResponse(u32),
    /// More nodes are missing than the noise shares were calibrated for;
    /// meters refuse the recovery round.
    #[error("{missing} missing nodes exceed the tolerated {tolerated}")]
    TooManyFailures { missing: usize, tolerated: usize },
    /// Messages from different slots were mixed in one aggregation.
    #[error("message for slot {found} in aggregation of slot {expected}")]
    SlotMismatch { expected: u32, found: u32 },
    /// The decrypted residue lies outside any plausible aggregate.
    #[error("decrypted residue {0} is outside the plausible aggregate range")]
    Implausible(i128),
}

pub type Result<T, E = Error> = core::result::Result<T, E>;

pub(crate) fn invalid(name: &'static str, reason: &'static str) -> Error {
    Error::InvalidParameter { name, reason }
}
