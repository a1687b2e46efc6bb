use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    Tuner(String),
    #[error("{0}")]
    Solver(String),
    #[error("{0}")]
    Isolation(String),
    #[error("{0}")]
    Oracle(String),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Tuner(_) => 3,
            CliError::Solver(_) => 4,
            CliError::Isolation(_) => 5,
            CliError::Oracle(_) => 6,
            CliError::Io(_) => 1,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Validation(_) => "validation",
            CliError::Tuner(_) => "tuner",
            CliError::Solver(_) => "solver",
            CliError::Isolation(_) => "isolation",
            CliError::Oracle(_) => "oracle",
            CliError::Io(_) => "io",
        }
    }

    /// Single line for standard error.
    pub fn machine_line(&self) -> String {
        let msg = self.to_string().replace('\n', " ").replace('"', "'");
        format!("error code={} kind={} message=\"{}\"", self.exit_code(), self.kind(), msg)
    }
}

impl From<tmfa_core::Error> for CliError {
    fn from(e: tmfa_core::Error) -> Self {
        use tmfa_core::Error as E;
        match e {
            E::Domain { .. } | E::Geometry(_) | E::Incommensurate { .. } | E::Synthesis(_) => {
                CliError::Validation(e.to_string())
            }
            _ => CliError::Solver(e.to_string()),
        }
    }
}
