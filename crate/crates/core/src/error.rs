use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("amplitude {0} is too close to zero to carry a digit")]
    IndeterminateAmplitude(f64),

    #[error("amplitude {0} lies outside [-1, 1]")]
    AmplitudeOutOfRange(f64),

    #[error("gate argument evaluated to zero for inputs ({a}, {b})")]
    ZeroGateArgument { a: f64, b: f64 },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("node {node} is referenced but the network has {size} nodes")]
    NodeOutOfRange { node: usize, size: usize },

    #[error("input from node {node} has not settled (|v| = {value:e})")]
    UnresolvedReference { node: usize, value: f64 },

    #[error("carrier frequencies {low} and {high} are closer than the ratio {min_ratio}")]
    FrequencyCollision { low: f64, high: f64, min_ratio: f64 },

    #[error("time step {dt} exceeds the stability limit {limit}")]
    StepTooLarge { dt: f64, limit: f64 },

    #[error("node {node} blew up to |u| = {magnitude} at t = {t}")]
    BlowUp { node: usize, magnitude: f64, t: f64 },

    #[error("analysis window of {span} time units holds fewer than two carrier periods ({period})")]
    WindowTooShort { span: f64, period: f64 },

    #[error("readout is indeterminate (integral {integral:e}, threshold {threshold:e})")]
    IndeterminateReadout { integral: f64, threshold: f64 },

    #[error("cannot pair burst sequences of length {left} and {right}")]
    UnpairableEvents { left: usize, right: usize },

    #[error("syntax error at position {position}: expected {}, found {found}", expected.join(" or "))]
    Syntax {
        position: usize,
        expected: Vec<String>,
        found: String,
    },

    #[error("variable `{0}` is not bound")]
    UnboundVariable(String),

    #[error("node {node}: {source}")]
    NodeReadout {
        node: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("output node {node} has not settled by t = {t_end} (|v| = {value:e})")]
    UnsettledOutput { node: usize, t_end: f64, value: f64 },

    #[error("contact {id} does not fit inside the sponge-free interior")]
    LayoutOverflow { id: usize },

    #[error("contacts {0} and {1} overlap")]
    OverlappingContacts(usize, usize),

    #[error("contact {0} covers no grid cells")]
    EmptyContact(usize),

    #[error("film field grew from {before} to {after} in a single step at t = {t}")]
    Instability { before: f64, after: f64, t: f64 },
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
