use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}` = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("negative loss {0} dB would be a gain")]
    NegativeLoss(f64),

    #[error("repetition rate must be positive")]
    ZeroRepRate,

    #[error("CAR is undefined with zero coincidences and zero dark counts")]
    UndefinedCar,

    #[error("no interior CAR maximum: both dark probabilities must be positive")]
    NoInteriorMaximum,

    #[error("target CAR {target} is unreachable; achievable range is ({lower}, {upper})")]
    UnreachableCar { target: f64, lower: f64, upper: f64 },

    #[error("at least one channel is required")]
    EmptyChannels,

    #[error("topology: {0}")]
    Topology(String),

    #[error("scenario: {0}")]
    Validation(String),

    #[error("tally counter overflow while merging shards")]
    CounterOverflow,

    #[error("calibration input is degenerate: {0}")]
    DegenerateCalibration(&'static str),

    #[error("scenario file: {0}")]
    Parse(String),

    #[error("io: {0}")]
    Io(String),
}

impl Error {
    /// Errors caused by the inputs rather than by the run itself.
    pub fn is_validation(&self) -> bool {
        !matches!(self, Error::CounterOverflow | Error::Io(_))
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub(crate) fn ensure(cond: bool, name: &'static str, value: f64, reason: &'static str) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::InvalidParameter { name, value, reason })
    }
}
