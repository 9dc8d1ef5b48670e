//! Conditional latent diffusion on two Gaussian clusters, sampled with and without guidance.
//!
//! `cargo run --release --example diffusion_latents`

use seqregen::encoder::Embeddings;
use seqregen::latentdiff::{train_diffusion, DiffusionTrainConfig};
use seqregen::numerics::{derive_seed, gaussian, seeded};
use seqregen::seqdata::{LabelVector, LabelVocabulary};

const WIDTH: usize = 6;

fn centre(label: usize) -> Vec<f32> {
    (0..WIDTH).map(|j| if (j % 2 == 0) == (label == 0) { 2.0 } else { -2.0 }).collect()
}

fn main() {
    let vocab = LabelVocabulary::new(vec!["up".into(), "down".into()]).unwrap();
    let mut rng = seeded(5);
    let mut reps = Embeddings::new(WIDTH, WIDTH).unwrap();
    let mut labels = Vec::new();
    for i in 0..400 {
        let c = i % 2;
        let noise = gaussian::<f32>(&[WIDTH], &mut rng);
        let v: Vec<f32> = centre(c).iter().zip(noise.data()).map(|(m, e)| m + 0.3 * e).collect();
        let id = format!("r{i}");
        reps.insert(id.clone(), v).unwrap();
        labels.push((id, LabelVector::from_bits(vec![c == 0, c == 1])));
    }

    let cfg = DiffusionTrainConfig { steps: 50, iterations: 600, hidden: 32, blocks: 1, chunk: 2, seed: 1, ..Default::default() };
    let trained = train_diffusion(&reps, &labels, &vocab, &cfg).unwrap();
    let n = trained.losses.len();
    println!("loss: first {:.3}, last {:.3}", trained.losses[0], trained.losses[n - 1]);

    for (c, name) in vocab.terms().iter().enumerate() {
        let y = LabelVector::from_bits(vec![c == 0, c == 1]);
        for w in [None, Some(2.0)] {
            let seeds: Vec<u64> = (0..64).map(|i| derive_seed(9, i)).collect();
            let out = trained.diffusion.sample(&vec![y.clone(); 64], &seeds, w).unwrap();
            let mean: Vec<f32> = (0..WIDTH).map(|j| (0..64).map(|i| out.row(i)[j]).sum::<f32>() / 64.0).collect();
            println!("{name:>4} guidance {w:?}: mean {mean:.2?} (target {:?})", centre(c));
        }
    }
}
