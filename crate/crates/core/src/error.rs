use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("width {what}={value} outside the supported range 1..={max}")]
    WidthOutOfRange { what: &'static str, value: u32, max: u32 },

    #[error("truth table has {got} entries, expected {expected}")]
    TableLength { got: usize, expected: usize },

    #[error("table entry {index} = {value:#x} does not fit in {bits} output bits")]
    EntryTooWide { index: usize, value: u64, bits: u32 },

    #[error("component index {index} out of range 1..={n}")]
    ComponentIndex { index: usize, n: u32 },

    #[error("value {value:#x} does not fit in {bits} bits")]
    VectorTooWide { value: u64, bits: u32 },

    #[error("unknown fixture {0:?}")]
    UnknownFixture(String),

    #[error("run count p must be at least 1")]
    ZeroRuns,

    #[error("empty sample set")]
    EmptySamples,

    #[error("solution space of dimension {dim} exceeds the enumeration cap {cap}; increase p")]
    DimensionTooLarge { dim: u32, cap: u32 },

    #[error("{groups} active S-box groups exceed the guess limit {max}")]
    GuessSpaceTooLarge { groups: usize, max: usize },

    #[error("number of plaintext pairs must be at least 1")]
    ZeroPairs,

    #[error("candidate mask is empty")]
    EmptyMask,

    #[error("epsilon {0} must lie strictly between 0 and 1")]
    Epsilon(f64),

    #[error("invalid parameter: {0}")]
    InvalidParam(String),

    #[error("invalid SPN description: {0}")]
    InvalidSpn(String),
}

impl Error {
    /// Resource exhaustion rather than malformed input; the CLI maps these
    /// to a distinct exit code.
    pub fn is_resource(&self) -> bool {
        matches!(self, Error::DimensionTooLarge { .. } | Error::GuessSpaceTooLarge { .. })
    }

    pub fn hint(&self) -> Option<&'static str> {
        match self {
            Error::DimensionTooLarge { .. } => {
                Some("increase p (--p or --c) so the sampled system has higher rank")
            }
            Error::GuessSpaceTooLarge { .. } => {
                Some("pick a candidate touching fewer S-box groups or raise --max-groups")
            }
            _ => None,
        }
    }
}
