//! Dense tensors, define-by-run autodiff, Adam, and seeded sampling.

pub mod graph;
pub mod nn;
pub mod optim;
pub mod rng;
pub mod tensor;

pub use graph::{value_and_grad, Graph, Var};
pub use nn::{AttentionBlock, Bound, LayerNorm, Linear, ParamId, ParamSet};
pub use optim::{clip_global_norm, AdamConfig, AdamState};
pub use rng::{derive_seed, gaussian, sample_gaussian, seeded, SeededRng};
pub use tensor::{matmul, softmax, DType, Real, Tensor};
