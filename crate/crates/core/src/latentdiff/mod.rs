//! Conditional diffusion over representations, trained to predict the clean latent.

mod denoiser;
mod sample;
mod schedule;
mod train;

pub use denoiser::{time_embedding, Denoiser, DenoiserConfig};
pub use sample::{reverse_process, sample_representation};
pub use schedule::{forward_diffuse, make_schedule, NoiseSchedule, ScheduleKind};
pub use train::{diff_loss, diff_loss_with, train_diffusion, DiffusionDraw, DiffusionTrainConfig, LatentDiffusion, TrainedDiffusion};
pub(crate) use train::parse_vocab_meta;
