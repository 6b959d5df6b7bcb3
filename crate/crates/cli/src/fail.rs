//! Exit-code classification.

use std::fmt;

use stno::Error;

pub const EXIT_RUNTIME: u8 = 1;
pub const EXIT_USAGE: u8 = 2;

/// Bad flags, config or input files.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

pub fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

/// Precondition failures are usage errors; anything the physics or the
/// readout produced at run time is a runtime error.
fn is_usage(e: &Error) -> bool {
    matches!(
        e,
        Error::InvalidParameter { .. }
            | Error::AmplitudeOutOfRange(_)
            | Error::NodeOutOfRange { .. }
            | Error::StepTooLarge { .. }
            | Error::Syntax { .. }
            | Error::UnboundVariable(_)
            | Error::LayoutOverflow { .. }
            | Error::OverlappingContacts(..)
            | Error::EmptyContact(_)
    )
}

pub fn exit_code(e: &anyhow::Error) -> u8 {
    if e.downcast_ref::<UsageError>().is_some() {
        return EXIT_USAGE;
    }
    match e.downcast_ref::<Error>() {
        Some(inner) if is_usage(inner) => EXIT_USAGE,
        _ => EXIT_RUNTIME,
    }
}
