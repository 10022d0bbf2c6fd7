use std::fmt;

/// Which Gibbs/MH update of the sampler produced an error.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UpdateStep {
    States,
    Regimes,
    ObsVariance,
    Tau2,
    Ar,
    Transitions,
    Q,
}

impl fmt::Display for UpdateStep {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            UpdateStep::States => "state path (FFBS)",
            UpdateStep::Regimes => "regime sweep",
            UpdateStep::ObsVariance => "sigma2",
            UpdateStep::Tau2 => "tau2",
            UpdateStep::Ar => "phi",
            UpdateStep::Transitions => "transition probabilities",
            UpdateStep::Q => "Q",
        };
        f.write_str(name)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("parameter out of domain: {0}")]
    Domain(String),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("numerical degeneracy at t={t}: {what}")]
    Degenerate { t: usize, what: String },
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("{step} update failed: {source}")]
    Step {
        step: UpdateStep,
        #[source]
        source: Box<Error>,
    },
    #[error("iteration {iter}: {source}")]
    Iteration {
        iter: usize,
        #[source]
        source: Box<Error>,
    },
    #[error("configuration error: {0}")]
    Config(String),
    #[error("data error: {0}")]
    Data(String),
    #[error("cannot write output: {0}")]
    Output(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn at_step(self, step: UpdateStep) -> Self {
        Error::Step { step, source: Box::new(self) }
    }

    /// Process exit code used by the command-line tool.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Output(_) => 2,
            Error::Data(_) | Error::Io(_) | Error::Dimension(_) => 3,
            Error::Iteration { source, .. } | Error::Step { source, .. } => match **source {
                Error::Config(_) => 2,
                Error::Data(_) => 3,
                _ => 4,
            },
            Error::Domain(_) | Error::Degenerate { .. } | Error::Numerical(_) => 4,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
