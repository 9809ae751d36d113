use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("perturbed map escapes the interval: {0}")]
    DomainEscape(String),
    #[error("critical orbit passes within {tol:e} of c at step {step}")]
    NearCriticalOrbit { step: usize, tol: f64 },
    #[error("code {0} is not realizable by a tent map in (1,2]")]
    CodeNotRealizable(String),
    #[error("no convergence: {0}")]
    NoConvergence(String),
    #[error("unsupported input: {0}")]
    UnsupportedInput(String),
    #[error("singular linear system: {0}")]
    SingularSystem(String),
    #[error("jump at orbit point {k} is below the noise floor ({estimate:e} < {floor:e})")]
    JumpBelowNoise { k: usize, estimate: f64, floor: f64 },
    #[error("critical orbit is not preperiodic within the searched depth")]
    NotMarkov,
    #[error("observable is not C1: {0}")]
    ObservableNotC1(String),
    #[error("extrapolation unstable: {0}")]
    FitUnstable(String),
    #[error("weighted total jump J(f,X) = {0:e} is not zero")]
    NonzeroJump(f64),
    #[error("resolvent argument has nonzero mean {0:e}")]
    NonZeroMean(f64),
    #[error("residue at z=1 is {0:e}, not zero")]
    ResidueNonzero(f64),
    #[error("invalid map: {0}")]
    InvalidMap(String),
    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    /// True for violated preconditions and bad inputs, false for numeric failures.
    pub fn is_precondition(&self) -> bool {
        !matches!(
            self,
            Error::NoConvergence(_)
                | Error::SingularSystem(_)
                | Error::FitUnstable(_)
                | Error::JumpBelowNoise { .. }
                | Error::NonZeroMean(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
