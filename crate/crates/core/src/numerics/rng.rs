use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::tensor::{Real, Tensor};

/// The crate's single named generator: ChaCha8, portable across platforms.
pub type SeededRng = ChaCha8Rng;

pub fn seeded(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Mixes a stream index into a base seed (SplitMix64 finaliser).
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_add(0x9E37_79B9_7F4A_7C15).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn gaussian<F: Real>(shape: &[usize], rng: &mut SeededRng) -> Tensor<F> {
    Tensor::from_fn(shape, |_| F::lit(rng.sample::<f64, _>(StandardNormal)))
}

/// i.i.d. standard normal tensor; equal seeds give identical bytes.
pub fn sample_gaussian<F: Real>(shape: &[usize], seed: u64) -> Tensor<F> {
    gaussian(shape, &mut seeded(seed))
}

pub fn uniform<F: Real>(shape: &[usize], lo: f64, hi: f64, rng: &mut SeededRng) -> Tensor<F> {
    Tensor::from_fn(shape, |_| F::lit(rng.random_range(lo..hi)))
}
