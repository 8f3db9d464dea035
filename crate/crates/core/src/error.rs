//! Crate-wide error types.

/// Errors raised while loading or validating a workload description.
#[derive(Debug, thiserror::Error)]
pub enum WorkloadError {
    #[error("workload parse error: {0}")]
    Parse(String),
    #[error("model `{model}`, layer `{layer}`: {reason}")]
    Invariant {
        model: String,
        layer: String,
        reason: String,
    },
    #[error("model `{model}`: {reason}")]
    Model { model: String, reason: String },
    #[error("unknown fixture or workload file `{0}`")]
    NotFound(String),
    #[error("io error reading `{path}`: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

/// Errors raised while simulating a layer execution schedule.
#[derive(Debug, thiserror::Error)]
pub enum ScheduleError {
    #[error("deadlock: layer `{layer}` needs {needed} B of global buffer, capacity is {capacity} B")]
    Deadlock {
        layer: String,
        needed: u64,
        capacity: u64,
    },
    #[error("deadlock: no runnable layer (stuck at cycle {cycle})")]
    Stuck { cycle: u64 },
    #[error("assignment is not total: layer `{0}` has no sub-accelerator")]
    PartialAssignment(String),
    #[error("invalid order: {0}")]
    BadOrder(String),
}

/// Errors raised while parsing accelerator/search configuration.
#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("config parse error: {0}")]
    Parse(String),
    #[error("config error: {0}")]
    Invalid(String),
    #[error("io error reading `{path}`: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}
