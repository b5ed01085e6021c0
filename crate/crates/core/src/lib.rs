//! Measurement apparatus for evaluating line-level code completion models.

pub mod analysis;
pub mod benchmark;
pub mod gateway;
pub mod language;
pub mod metrics;
pub mod telemetry;
pub mod trigger;

pub use language::{ExtensionMap, Language};
pub use trigger::{detect_trigger, is_mid_token, trigger_vocabulary, TriggerMatch, TriggerToken};
