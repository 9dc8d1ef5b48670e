//! Reverse-mode gradients of a small attention-style expression against central differences.
//!
//! `cargo run --example gradient_check`

use seqregen::numerics::{gaussian, seeded, value_and_grad, Graph, Tensor, Var};

fn loss<'g>(_g: &'g Graph<f64>, v: &[Var<'g, f64>]) -> Var<'g, f64> {
    let (q, k, x) = (v[0], v[1], v[2]);
    let scores = q.matmul_t(k, false, true).softmax();
    scores.matmul(x).tanh().square().mean()
}

fn main() {
    let mut rng = seeded(3);
    let inputs: Vec<Tensor<f64>> = vec![gaussian(&[4, 3], &mut rng), gaussian(&[5, 3], &mut rng), gaussian(&[5, 2], &mut rng)];
    let (value, grads) = value_and_grad(&inputs, loss).unwrap();
    println!("loss {value:.6}");

    let h = 1e-5;
    let eval = |ins: &[Tensor<f64>]| value_and_grad(ins, loss).unwrap().0;
    for (t, name) in ["q", "k", "x"].iter().enumerate() {
        let mut worst: f64 = 0.0;
        for i in 0..inputs[t].numel() {
            let mut up = inputs.clone();
            up[t].data_mut()[i] += h;
            let mut down = inputs.clone();
            down[t].data_mut()[i] -= h;
            let numeric = (eval(&up) - eval(&down)) / (2.0 * h);
            worst = worst.max((numeric - grads[t].data()[i]).abs());
        }
        println!("d loss / d {name}: shape {:?}, max |analytic - numeric| = {worst:.2e}", grads[t].shape());
    }

    // Gradients are themselves differentiable.
    let g = Graph::new();
    let x = g.var(Tensor::new(vec![3], vec![0.5, -1.0, 2.0]).unwrap());
    let y = x.tanh().sum();
    let dy = g.grad(y, &[x]).unwrap()[0];
    let d2 = g.grad(dy.sum(), &[x]).unwrap()[0];
    println!("tanh'' at {:?} = {:?}", x.value().data(), d2.value().data());
}
