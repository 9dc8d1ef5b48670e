//! Central finite differences against reverse-mode gradients, all in f64.

use rand::Rng;
use seqregen::encoder::{ce_loss, Encoder, EncoderConfig};
use seqregen::latentdiff::{make_schedule, Denoiser, DenoiserConfig, DiffusionDraw, ScheduleKind};
use seqregen::numerics::{
    derive_seed, gaussian, seeded, AttentionBlock, Graph, LayerNorm, Linear, ParamSet, SeededRng, Tensor, Var,
};
use seqregen::seqgan::{critic_loss, generator_loss, gradient_penalty_with, GanBatch, GanDraw, GanNets, GanShape, LossWeights};

pub const H: f64 = 1e-5;
pub const TOL: f64 = 1e-4;
pub const INSTANCES: usize = 20;
/// Coordinates probed per instance when a model has more parameters than this.
const MAX_COORDS: usize = 120;

/// `||a - n|| / max(||a||, ||n||)`, zero when both vanish.
pub fn rel_error(a: &[f64], n: &[f64]) -> f64 {
    let diff = a.iter().zip(n).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    let scale = a.iter().map(|x| x * x).sum::<f64>().sqrt().max(n.iter().map(|x| x * x).sum::<f64>().sqrt());
    if scale < 1e-12 {
        diff
    } else {
        diff / scale
    }
}

fn pick_coords(sizes: &[usize], rng: &mut SeededRng) -> Vec<(usize, usize)> {
    let total: usize = sizes.iter().sum();
    let all: Vec<(usize, usize)> = sizes.iter().enumerate().flat_map(|(t, &n)| (0..n).map(move |i| (t, i))).collect();
    if total <= MAX_COORDS {
        return all;
    }
    (0..MAX_COORDS).map(|_| all[rng.random_range(0..total)]).collect()
}

/// Checks `f` with respect to every input tensor.
pub fn check_fn(
    inputs: &[Tensor<f64>],
    f: impl for<'g> Fn(&'g Graph<f64>, &[Var<'g, f64>]) -> Var<'g, f64>,
    rng: &mut SeededRng,
) -> f64 {
    let g = Graph::new();
    let vars: Vec<_> = inputs.iter().map(|t| g.var(t.clone())).collect();
    let loss = f(&g, &vars);
    let grads: Vec<Tensor<f64>> = g.grad(loss, &vars).unwrap().iter().map(Var::value).collect();
    let eval = |ins: &[Tensor<f64>]| {
        let g = Graph::new();
        let vars: Vec<_> = ins.iter().map(|t| g.var(t.clone())).collect();
        f(&g, &vars).item()
    };
    let sizes: Vec<usize> = inputs.iter().map(Tensor::numel).collect();
    let coords = pick_coords(&sizes, rng);
    let mut work = inputs.to_vec();
    let (mut a, mut n) = (Vec::new(), Vec::new());
    for (t, i) in coords {
        let x0 = work[t].data()[i];
        work[t].data_mut()[i] = x0 + H;
        let up = eval(&work);
        work[t].data_mut()[i] = x0 - H;
        let down = eval(&work);
        work[t].data_mut()[i] = x0;
        n.push((up - down) / (2.0 * H));
        a.push(grads[t].data()[i]);
    }
    rel_error(&a, &n)
}

/// Checks a model loss with respect to the tensors returned by `params`.
pub fn check_model<M: Clone>(
    model: &M,
    params: fn(&mut M) -> Vec<&mut Tensor<f64>>,
    loss_and_grad: impl Fn(&M, bool) -> (f64, Vec<Tensor<f64>>),
    rng: &mut SeededRng,
) -> f64 {
    let (_, grads) = loss_and_grad(model, true);
    let mut work = model.clone();
    let sizes: Vec<usize> = params(&mut work).iter().map(|t| t.numel()).collect();
    assert_eq!(sizes.len(), grads.len());
    let coords = pick_coords(&sizes, rng);
    let (mut a, mut n) = (Vec::new(), Vec::new());
    for (t, i) in coords {
        let x0 = params(&mut work)[t].data()[i];
        params(&mut work)[t].data_mut()[i] = x0 + H;
        let up = loss_and_grad(&work, false).0;
        params(&mut work)[t].data_mut()[i] = x0 - H;
        let down = loss_and_grad(&work, false).0;
        params(&mut work)[t].data_mut()[i] = x0;
        n.push((up - down) / (2.0 * H));
        a.push(grads[t].data()[i]);
    }
    rel_error(&a, &n)
}

fn randn(shape: &[usize], rng: &mut SeededRng) -> Tensor<f64> {
    gaussian(shape, rng)
}

fn positive(shape: &[usize], rng: &mut SeededRng) -> Tensor<f64> {
    Tensor::from_fn(shape, |_| rng.random_range(0.2..2.0))
}

fn dim(rng: &mut SeededRng) -> usize {
    rng.random_range(1..=4)
}

/// Weighted sum so every output element gets a distinct cotangent.
fn project<'g>(out: Var<'g, f64>, rng: &mut SeededRng) -> Var<'g, f64> {
    let w = randn(&out.shape(), rng);
    (out * out.graph().var(w)).sum()
}

/// Named check: returns the worst relative error over [`INSTANCES`] random instances.
pub type Case = (&'static str, fn(&mut SeededRng) -> f64);

macro_rules! unary_case {
    ($name:literal, $gen:ident, |$x:ident| $body:expr) => {
        ($name, |rng: &mut SeededRng| {
            let shape = [dim(rng), dim(rng)];
            let x = $gen(&shape, rng);
            let w = randn(&shape, rng);
            check_fn(&[x], move |g, v| { let $x = v[0]; ($body * g.var(w.clone())).sum() }, rng)
        })
    };
}

pub fn primitive_cases() -> Vec<Case> {
    vec![
        ("add", |rng| {
            let s = [dim(rng), dim(rng)];
            let (a, b, w) = (randn(&s, rng), randn(&s, rng), randn(&s, rng));
            check_fn(&[a, b], move |g, v| ((v[0] + v[1]) * g.var(w.clone())).sum(), rng)
        }),
        ("sub", |rng| {
            let s = [dim(rng), dim(rng)];
            let (a, b, w) = (randn(&s, rng), randn(&s, rng), randn(&s, rng));
            check_fn(&[a, b], move |g, v| ((v[0] - v[1]) * g.var(w.clone())).sum(), rng)
        }),
        ("mul", |rng| {
            let s = [dim(rng), dim(rng)];
            let (a, b, w) = (randn(&s, rng), randn(&s, rng), randn(&s, rng));
            check_fn(&[a, b], move |g, v| ((v[0] * v[1]) * g.var(w.clone())).sum(), rng)
        }),
        ("div", |rng| {
            let s = [dim(rng), dim(rng)];
            let (a, b, w) = (randn(&s, rng), positive(&s, rng), randn(&s, rng));
            check_fn(&[a, b], move |g, v| ((v[0] / v[1]) * g.var(w.clone())).sum(), rng)
        }),
        unary_case!("neg", randn, |x| -x),
        unary_case!("scale", randn, |x| x.scale(-1.7)),
        unary_case!("add_scalar", randn, |x| x.add_scalar(0.3)),
        unary_case!("relu", randn, |x| x.relu()),
        unary_case!("leaky_relu", randn, |x| x.leaky_relu(0.2)),
        unary_case!("tanh", randn, |x| x.tanh()),
        unary_case!("sigmoid", randn, |x| x.sigmoid()),
        unary_case!("exp", randn, |x| x.exp()),
        unary_case!("ln", positive, |x| x.ln()),
        unary_case!("sqrt", positive, |x| x.sqrt()),
        unary_case!("square", randn, |x| x.square()),
        unary_case!("softplus", randn, |x| x.softplus()),
        unary_case!("softmax", randn, |x| x.softmax()),
        unary_case!("mean_last_expand", randn, |x| { let n = x.shape()[1]; x.mean_last().expand_last(n) }),
        unary_case!("sum_last_expand", randn, |x| { let n = x.shape()[1]; x.sum_last().expand_last(n) }),
        ("sum_mean_expand_scalar", |rng| {
            let s = [dim(rng), dim(rng)];
            let x = randn(&s, rng);
            let w = randn(&s, rng);
            check_fn(&[x], move |g, v| v[0].sum().square() + (v[0].mean().expand_scalar(&s) * g.var(w.clone())).sum(), rng)
        }),
        ("add_tiled_mul_tiled", |rng| {
            let (a, b, c) = (dim(rng), dim(rng), dim(rng));
            let x = randn(&[a, b, c], rng);
            let bias = randn(&[c], rng);
            let gain = randn(&[b, c], rng);
            let w = randn(&[a, b, c], rng);
            check_fn(&[x, bias, gain], move |g, v| (v[0].add_tiled(v[1]).mul_tiled(v[2]) * g.var(w.clone())).sum(), rng)
        }),
        ("tile_sum_tiles", |rng| {
            let x = randn(&[dim(rng), dim(rng)], rng);
            let lead = [dim(rng), 2];
            let s = x.shape().to_vec();
            let w = randn(&[lead[0], lead[1], s[0], s[1]], rng);
            let w2 = randn(&s, rng);
            check_fn(&[x], move |g, v| {
                let t = v[0].tile(&lead) * g.var(w.clone());
                (t.sum_tiles(&s) * g.var(w2.clone())).sum()
            }, rng)
        }),
        ("repeat_rows_sum_row_groups", |rng| {
            let (b, c, r) = (dim(rng), dim(rng), dim(rng));
            let x = randn(&[b, c], rng);
            let w = randn(&[b * r, c], rng);
            let w2 = randn(&[b, c], rng);
            check_fn(&[x], move |g, v| ((v[0].repeat_rows(r) * g.var(w.clone())).sum_row_groups(r) * g.var(w2.clone())).sum(), rng)
        }),
        ("matmul", |rng| {
            let (m, k, n) = (dim(rng), dim(rng), dim(rng));
            let (a, b) = (randn(&[m, k], rng), randn(&[k, n], rng));
            let w = randn(&[m, n], rng);
            check_fn(&[a, b], move |g, v| (v[0].matmul(v[1]) * g.var(w.clone())).sum(), rng)
        }),
        ("matmul_batched_transposed", |rng| {
            let (bt, m, k, n) = (dim(rng), dim(rng), dim(rng), dim(rng));
            let (ta, tb) = (rng.random_bool(0.5), rng.random_bool(0.5));
            let a = randn(&if ta { [bt, k, m] } else { [bt, m, k] }, rng);
            let b = randn(&if tb { [bt, n, k] } else { [bt, k, n] }, rng);
            let w = randn(&[bt, m, n], rng);
            check_fn(&[a, b], move |g, v| (v[0].matmul_t(v[1], ta, tb) * g.var(w.clone())).sum(), rng)
        }),
        ("reshape", |rng| {
            let (a, b) = (dim(rng), dim(rng));
            let x = randn(&[a, b], rng);
            let w = randn(&[b, a], rng);
            check_fn(&[x], move |g, v| (v[0].reshape(&[b, a]) * g.var(w.clone())).sum(), rng)
        }),
        ("concat_slice_pad", |rng| {
            let (r, a, b) = (dim(rng), dim(rng), dim(rng));
            let (x, y) = (randn(&[r, a], rng), randn(&[r, b], rng));
            let start = rng.random_range(0..a + b);
            let len = rng.random_range(1..=a + b - start);
            let w = randn(&[r, len + 3], rng);
            check_fn(&[x, y], move |g, v| (v[0].concat(v[1]).slice(start, len).pad(1, len + 3) * g.var(w.clone())).sum(), rng)
        }),
        ("unfold1d_fold1d", |rng| {
            let (b, l, c) = (dim(rng), dim(rng) + 1, dim(rng));
            let k = [1, 3, 5][rng.random_range(0..3)];
            let x = randn(&[b, l, c], rng);
            let w = randn(&[b * l, k * c], rng);
            let w2 = randn(&[b, l, c], rng);
            check_fn(&[x], move |g, v| {
                let u = v[0].unfold1d(k, k / 2) * g.var(w.clone());
                let folded = u.fold1d(l, k, k / 2);
                (folded * g.var(w2.clone())).sum() + u.sum()
            }, rng)
        }),
        ("linear", |rng| {
            let mut ps = ParamSet::<f64>::new();
            let (i, o) = (dim(rng), dim(rng));
            let lin = Linear::new(&mut ps, "l", i, o, rng);
            ps.values_mut()[1] = randn(&[o], rng);
            let x = randn(&[dim(rng), i], rng);
            let proj = randn(&[x.shape()[0], o], rng);
            check_model(
                &(ps, x),
                |(ps, x)| ps.values_mut().iter_mut().chain(std::iter::once(x)).collect(),
                move |(ps, x), _| {
                    let g = Graph::new();
                    let p = ps.bind(&g);
                    let xv = g.var(x.clone());
                    let loss = (lin.forward(&p, xv) * g.var(proj.clone())).sum();
                    let mut wrt = p.vars().to_vec();
                    wrt.push(xv);
                    (loss.item(), g.grad(loss, &wrt).unwrap().iter().map(Var::value).collect())
                },
                rng,
            )
        }),
        ("layer_norm", |rng| {
            let n = dim(rng) + 1;
            let mut ps = ParamSet::<f64>::new();
            let ln = LayerNorm::new(&mut ps, "ln", n);
            for t in ps.values_mut() {
                *t = randn(t.shape(), rng);
            }
            let x = randn(&[dim(rng), n], rng);
            let proj = randn(x.shape(), rng);
            let model = (ps, x);
            check_model(
                &model,
                |(ps, x)| ps.values_mut().iter_mut().chain(std::iter::once(x)).collect(),
                move |(ps, x), _| {
                    let g = Graph::new();
                    let p = ps.bind(&g);
                    let xv = g.var(x.clone());
                    let loss = (ln.forward(&p, xv) * g.var(proj.clone())).sum();
                    let mut wrt = p.vars().to_vec();
                    wrt.push(xv);
                    (loss.item(), g.grad(loss, &wrt).unwrap().iter().map(Var::value).collect())
                },
                rng,
            )
        }),
        ("attention_block_masked", |rng| {
            let (b, s, w) = (dim(rng), dim(rng) + 1, 2 * dim(rng));
            let mut ps = ParamSet::<f64>::new();
            let blk = AttentionBlock::new(&mut ps, "a", w, rng);
            for t in ps.values_mut() {
                *t = randn(t.shape(), rng).map(|v| v * 0.5);
            }
            let x = randn(&[b * s, w], rng);
            let mask = Tensor::from_fn(&[b, s, s], |i| if (i % s) > (i / s) % s { -1e9 } else { 0.0 });
            let proj = randn(&[b * s, w], rng);
            let model = (ps, x);
            check_model(
                &model,
                |(ps, x)| ps.values_mut().iter_mut().chain(std::iter::once(x)).collect(),
                move |(ps, x), _| {
                    let g = Graph::new();
                    let p = ps.bind(&g);
                    let xv = g.var(x.clone());
                    let out = blk.forward(&p, xv, b, s, Some(g.var(mask.clone())));
                    let loss = (out * g.var(proj.clone())).sum();
                    let mut wrt = p.vars().to_vec();
                    wrt.push(xv);
                    (loss.item(), g.grad(loss, &wrt).unwrap().iter().map(Var::value).collect())
                },
                rng,
            )
        }),
        ("double_backprop_grad_norm", |rng| {
            let (m, k) = (dim(rng), dim(rng));
            let w = randn(&[k, 1], rng);
            let x = randn(&[m, k], rng);
            check_fn(&[w, x], |g, v| {
                let h = v[1].matmul(v[0]).tanh().sum();
                let gx = g.grad(h, &[v[1]]).unwrap()[0];
                gx.square().sum().add_scalar(1e-3).sqrt()
            }, rng)
        }),
    ]
}

fn encoder_case(rng: &mut SeededRng) -> f64 {
    let mut cfg = EncoderConfig::new(5, 3, 4);
    cfg.width = 4;
    cfg.blocks = 1;
    let model = Encoder::<f64>::new(cfg, rng.random()).unwrap();
    let b = 3;
    let x = Tensor::from_fn(&[b, 5 * 21], |_| 0.0);
    let mut x = x;
    for row in 0..b {
        let len = rng.random_range(1..=5);
        for pos in 0..5 {
            let sym = if pos < len { rng.random_range(0..20) } else { 20 };
            x.data_mut()[row * 105 + pos * 21 + sym] = 1.0;
        }
    }
    let y = Tensor::from_fn(&[b, 3], |_| if rng.random_bool(0.5) { 1.0 } else { 0.0 });
    check_model(
        &model,
        |m| m.params_mut().values_mut().iter_mut().collect(),
        move |m, _| {
            let g = Graph::new();
            let p = m.params().bind(&g);
            let (logits, _) = m.forward(&p, &x).unwrap();
            let loss = ce_loss(logits, &y).unwrap();
            (loss.item(), p.grads(loss).unwrap())
        },
        rng,
    )
}

fn diffusion_case(rng: &mut SeededRng) -> f64 {
    let cfg = DenoiserConfig { width: 5, labels: 2, hidden: 4, blocks: 1, chunk: 2 };
    let model = Denoiser::<f64>::new(cfg, rng.random()).unwrap();
    let schedule = make_schedule(20, ScheduleKind::Linear).unwrap();
    let b = 3;
    let r = randn(&[b, 5], rng);
    let y = Tensor::from_fn(&[b, 2], |_| if rng.random_bool(0.5) { 1.0 } else { 0.0 });
    let draw = DiffusionDraw::<f64>::sample(b, 5, 20, 0.3, rng);
    check_model(
        &(model, r),
        |(m, r)| m.params_mut().values_mut().iter_mut().chain(std::iter::once(r)).collect(),
        move |(m, r), _| {
            let g = Graph::new();
            let p = m.params().bind(&g);
            let rv = g.var(r.clone());
            let loss = m.diff_loss(&p, rv, &y, &draw, &schedule).unwrap();
            let mut wrt = p.vars().to_vec();
            wrt.push(rv);
            (loss.item(), g.grad(loss, &wrt).unwrap().iter().map(Var::value).collect())
        },
        rng,
    )
}

fn gan_setup(rng: &mut SeededRng, gumbel: bool) -> (GanNets<f64>, GanBatch<f64>, GanDraw<f64>) {
    let mut shape = GanShape::new(4, 3, 2);
    shape.noise = 3;
    shape.hidden = 6;
    shape.channels = 3;
    shape.kernel = 3;
    let nets = GanNets::<f64>::new(shape, rng.random()).unwrap();
    let b = 3;
    let x = Tensor::from_fn(&[b, shape.seq_width()], |_| 0.0);
    let mut x = x;
    for row in 0..b {
        for pos in 0..shape.max_len {
            let sym = rng.random_range(0..shape.alphabet);
            x.data_mut()[row * shape.seq_width() + pos * shape.alphabet + sym] = 1.0;
        }
    }
    let y = Tensor::from_fn(&[b, 2], |_| if rng.random_bool(0.5) { 1.0 } else { 0.0 });
    let r = randn(&[b, 3], rng);
    let u = Tensor::from_fn(&[b, 5], |i| {
        let (row, col) = (i / 5, i % 5);
        if col < 3 { r.data()[row * 3 + col] } else { y.data()[row * 2 + col - 3] }
    });
    let draw = GanDraw::sample(b, &shape, gumbel, rng);
    (nets, GanBatch { x, u, y }, draw)
}

fn critic_case(rng: &mut SeededRng) -> f64 {
    let (nets, batch, draw) = gan_setup(rng, false);
    let w = LossWeights { lambda: 10.0, beta: 2.0, tau: None };
    check_model(
        &nets,
        |n| n.critic.params_mut().values_mut().iter_mut().chain(n.classifier.params_mut().values_mut().iter_mut()).collect(),
        move |n, _| {
            let g = Graph::new();
            let p = n.bind(&g);
            let terms = critic_loss(n, &p, &batch, &draw, &w).unwrap();
            let wrt: Vec<_> = p.critic.vars().iter().chain(p.classifier.vars()).copied().collect();
            (terms.loss.item(), g.grad(terms.loss, &wrt).unwrap().iter().map(Var::value).collect())
        },
        rng,
    )
}

fn generator_case(rng: &mut SeededRng) -> f64 {
    let gumbel = rng.random_bool(0.5);
    let (nets, batch, draw) = gan_setup(rng, gumbel);
    let w = LossWeights { lambda: 10.0, beta: 2.0, tau: gumbel.then_some(0.7) };
    check_model(
        &nets,
        |n| n.generator.params_mut().values_mut().iter_mut().collect(),
        move |n, _| {
            let g = Graph::new();
            let p = n.bind(&g);
            let loss = generator_loss(n, &p, &batch, &draw, &w).unwrap();
            (loss.item(), p.generator.grads(loss).unwrap())
        },
        rng,
    )
}

fn penalty_case(rng: &mut SeededRng) -> f64 {
    let (nets, batch, draw) = gan_setup(rng, false);
    let fake = Tensor::from_fn(batch.x.shape(), |_| rng.random_range(0.0..1.0));
    check_model(
        &(nets, fake),
        |(n, f)| n.critic.params_mut().values_mut().iter_mut().chain(std::iter::once(f)).collect(),
        move |(n, f), _| {
            let g = Graph::new();
            let p = n.bind(&g);
            let fv = g.var(f.clone());
            let u = g.var(batch.u.clone());
            let pen = gradient_penalty_with(g.var(batch.x.clone()), fv, &draw.eps, |xh| n.critic.forward(&p.critic, xh, u)).unwrap();
            let mut wrt = p.critic.vars().to_vec();
            wrt.push(fv);
            (pen.item(), g.grad(pen, &wrt).unwrap().iter().map(Var::value).collect())
        },
        rng,
    )
}

pub fn loss_cases() -> Vec<Case> {
    vec![
        ("L_CE", encoder_case),
        ("L_diff", diffusion_case),
        ("critic_loss", critic_case),
        ("generator_loss", generator_case),
        ("Pen(D)", penalty_case),
    ]
}

/// Worst error of one case over [`INSTANCES`] instances.
pub fn run_case(case: &Case, seed: u64) -> f64 {
    (0..INSTANCES)
        .map(|i| {
            let mut rng = seeded(derive_seed(seed, i as u64));
            (case.1)(&mut rng)
        })
        .fold(0.0, f64::max)
}
