use thiserror::Error;

pub type SimResult<T> = Result<T, SimError>;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("config error: {0}")]
    Config(String),
    #[error("infeasible scenario: {0}")]
    Infeasible(String),
    #[error(transparent)]
    Core(ftn_slp_core::Error),
    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl From<ftn_slp_core::Error> for SimError {
    fn from(e: ftn_slp_core::Error) -> Self {
        match e {
            ftn_slp_core::Error::Infeasible { min_energy, budget } => {
                let need = min_energy.map_or("unknown".to_string(), |v| format!("{v:.6e}"));
                let have = budget.map_or("unknown".to_string(), |v| format!("{v:.6e}"));
                SimError::Infeasible(format!(
                    "constructive-interference constraints need energy {need}, budget is {have}"
                ))
            }
            other => SimError::Core(other),
        }
    }
}

impl SimError {
    pub fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        SimError::Io {
            context: context.into(),
            source,
        }
    }

    /// 2 for config errors, 3 for infeasible scenarios, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            SimError::Config(_) => 2,
            SimError::Infeasible(_) => 3,
            _ => 1,
        }
    }
}
