use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// The closed-form flow of `u' = (V + theta u^2) u` reached its singularity.
    #[error("finite-time blow-up of the nonlinear subflow at effective time {time}")]
    BlowUp { time: f64 },

    /// An explicit Runge-Kutta substep produced non-finite values.
    #[error("non-finite values in Runge-Kutta substep {substep}")]
    Unstable { substep: usize },

    /// A parabolic state picked up an imaginary part the real flows cannot carry.
    #[error("state lost realness (max imaginary part {max_imag:e})")]
    LostRealness { max_imag: f64 },

    #[error("splitting stage {stage}: {source}")]
    Stage {
        stage: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidArgument(msg.into()))
}
