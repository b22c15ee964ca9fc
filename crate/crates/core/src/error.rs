use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("target index {index} out of range for {outputs} outputs")]
    TargetOutOfRange { index: usize, outputs: usize },

    #[error("invalid target: {0}")]
    InvalidTarget(String),

    #[error("invalid network: {0}")]
    InvalidNet(String),

    #[error("invalid model spec: {0}")]
    InvalidSpec(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("parse error at offset {offset}: {message}")]
    Parse { offset: usize, message: String },

    #[error("undeclared atom `{0}`")]
    UndeclaredAtom(String),

    #[error("input outside the declared support: {0}")]
    OutOfSupport(String),

    #[error("ground truth unavailable: {0}")]
    Unsupported(String),

    #[error("degenerate sampling: regression system is singular (raise the budget)")]
    DegenerateSampling,

    #[error("under-determined surrogate: {samples} samples for {features} features")]
    UnderDetermined { samples: usize, features: usize },

    #[error("too many features for exhaustive enumeration: {features} > {limit}")]
    TooManyFeatures { features: usize, limit: usize },

    #[error("training diverged at epoch {epoch}")]
    TrainingDiverged { epoch: usize },

    #[error("sample {index}: {source}")]
    Sample {
        index: usize,
        #[source]
        source: alloc::boxed::Box<Error>,
    },
}

impl Error {
    pub(crate) fn at_sample(self, index: usize) -> Self {
        Error::Sample {
            index,
            source: alloc::boxed::Box::new(self),
        }
    }
}

pub(crate) fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::Dimension { expected, got })
    }
}
