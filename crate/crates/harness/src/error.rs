use conceptprobe_core::arc::concepts::ConceptError;
use conceptprobe_core::raven::GenerationError;

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("invalid configuration: {0}")]
    ConfigInvalid(String),
    #[error(transparent)]
    Generation(#[from] GenerationError),
    #[error(transparent)]
    Concept(#[from] ConceptError),
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error("bad dataset file {path}: {message}")]
    Manifest { path: String, message: String },
    #[error("manifest has no entries")]
    EmptyManifest,
    #[error("adapter could not be started: {0}")]
    AdapterUnavailable(String),
    #[error("adapter crashed twice on problem {id}: {detail}")]
    AdapterCrashed { id: String, detail: String },
    #[error("protocol violation ({reason}) in line: {line}")]
    ProtocolViolation { line: String, reason: String },
}
