//! Core of the emotion-conditioned dialogue corpus: the dialogue model and
//! transcript format, readability metrics, word-list resources, curation
//! gates, the readability sampling experiment, and the append-only store.

pub mod curation;
pub mod lexicons;
pub mod model;
pub mod sampler;
pub mod store;
pub mod textmetrics;
pub mod transcript;

pub use model::{CefrLevel, Emotion, UnknownLabel};
pub use transcript::{
    extract_attitude_chain, parse_transcript, redact_brands, serialize_transcript, AttitudeChain, ChainLink,
    Dialogue, DialogueMeta, ParseOptions, Role, Turn,
};
