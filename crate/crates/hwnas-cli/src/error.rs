//! Error-to-exit-code mapping. The table is fixed: 0 success, 2 bad or
//! incomplete configuration, 3 missing or malformed data, 4 text service
//! unreachable in live mode.

use hwnas::coevolve::ServiceError;
use hwnas::engine::EngineError;
use hwnas::objectives::MetricError;
use hwnas::predictor::PredictorError;
use hwnas::report::ReportError;
use hwnas::store::StoreError;

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Data(String),
    Service(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Data(_) => 3,
            CliError::Service(_) => 4,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(msg) => write!(f, "configuration: {msg}"),
            CliError::Data(msg) => write!(f, "data: {msg}"),
            CliError::Service(msg) => write!(f, "service: {msg}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<StoreError> for CliError {
    fn from(e: StoreError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<ReportError> for CliError {
    fn from(e: ReportError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<PredictorError> for CliError {
    fn from(e: PredictorError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<MetricError> for CliError {
    fn from(e: MetricError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<EngineError> for CliError {
    fn from(e: EngineError) -> Self {
        match e {
            EngineError::Config(msg) => CliError::Config(msg),
            EngineError::MissingService => CliError::Config(e.to_string()),
            other => CliError::Data(other.to_string()),
        }
    }
}

impl From<ServiceError> for CliError {
    fn from(e: ServiceError) -> Self {
        match e {
            // The operator told us which variable holds the token; an unset
            // variable is a setup problem, not a network one.
            ServiceError::MissingAuth(_) => CliError::Config(e.to_string()),
            ServiceError::Transport(_)
            | ServiceError::Status { .. }
            | ServiceError::BadResponsePath(_) => CliError::Service(e.to_string()),
            other => CliError::Data(other.to_string()),
        }
    }
}
