use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("numerical instability at t = {time}: non-finite amplitudes (dt = {dt})")]
    Instability { time: f64, dt: f64 },

    #[error("unitarity violated at t = {time}: norm drifted by {drift:e}")]
    Unitarity { time: f64, drift: f64 },

    #[error("eigensolver did not converge after {iterations} iterations; worst residual {residual:e}")]
    EigenNonConvergence { iterations: usize, residual: f64 },

    #[error("no interior avoided crossing between the supplied curves")]
    NoCrossing,

    #[error("stationary solver stagnated after {iterations} iterations with residual {best_residual:e}")]
    NonConvergence { iterations: usize, best_residual: f64 },

    #[error("imaginary-time relaxation did not converge in {steps} steps (last chemical potentials {tail:?})")]
    ImaginaryTime { steps: usize, tail: Vec<f64> },

    #[error("at x0 = {x0}: {source}")]
    AtDipCenter {
        x0: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
