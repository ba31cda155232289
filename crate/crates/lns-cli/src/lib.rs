//! Tooling around `lns-core`: dataset configurations, bundled assets, the
//! synthesis pipeline, prompt assembly, transcript scoring, and dataset
//! validation. The `lns` binary is a thin command-line front end over
//! these modules.

pub mod assets;
pub mod config;
pub mod llm;
pub mod pipeline;
pub mod prompt;
pub mod record;
pub mod report;
pub mod validate;
