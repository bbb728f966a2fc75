//! In-process protocol sessions, transcripts and experiment reports.

pub mod experiment;
pub mod session;
pub mod transcript;

pub use experiment::{run_experiment, ExperimentName, ExperimentReport};
pub use session::{run_session, run_session_against, SessionParams};
pub use transcript::{Message, MeasurementRecord, Party, ProtocolId, QuantumHandle, Transcript, TranscriptParams, Verdict, MAGIC};
