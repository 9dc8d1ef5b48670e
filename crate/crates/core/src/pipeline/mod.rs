//! Run configuration, manifests, two-stage sampling and the CLI.

pub mod cli;
mod config;
mod manifest;
mod sample;

pub use cli::{run, run_args, EXIT_OK, EXIT_RUNTIME, EXIT_VALIDATION};
pub use config::{RunConfig, BATCH_CHOICES, LR_CHOICES, MAX_SEQUENCE_LEN};
pub use manifest::{manifest_path, ManifestBuilder, RunManifest};
pub use sample::{pad_representation, two_stage_sample, RepresentationSampler, SequenceSampler};
