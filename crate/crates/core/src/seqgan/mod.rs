//! Conditional WGAN-GP over one-hot sequences with an auxiliary label classifier.

mod loss;
mod models;
mod sample;
mod train;

pub use loss::{
    class_log_likelihood, class_targets, critic_loss, generator_loss, gradient_penalty, gradient_penalty_with, CriticTerms, GanBatch,
    GanBound, GanDraw, LossWeights,
};
pub use models::{gumbel_noise, AuxClassifier, Critic, GanNets, GanShape, Generator};
pub use sample::sample_sequences;
pub use train::{train_gan, GanTrainConfig, SeqGan, StepKind, StepLog, TrainedGan};
