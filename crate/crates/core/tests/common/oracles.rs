//! Slow, direct reference implementations used to cross-check the metrics.

use std::collections::HashMap;

use seqregen::numerics::{Graph, Tensor};
use seqregen::seqdata::CANONICAL;
use seqregen::seqgan::GanNets;

/// Dense k-mer counts by scanning every window, L2-normalised.
pub fn dense_kmer(s: &str, k: usize) -> Vec<f64> {
    let chars: Vec<char> = s.chars().collect();
    let mut v = vec![0.0; 20usize.pow(k as u32)];
    if chars.len() >= k {
        'win: for start in 0..=chars.len() - k {
            let mut idx = 0;
            for &c in &chars[start..start + k] {
                match CANONICAL.chars().position(|a| a == c) {
                    Some(p) => idx = idx * 20 + p,
                    None => continue 'win,
                }
            }
            v[idx] += 1.0;
        }
    }
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        v.iter_mut().for_each(|x| *x /= norm);
    }
    v
}

pub fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

pub fn median_sigma(points: &[&Vec<f64>]) -> f64 {
    let mut d = Vec::new();
    for i in 0..points.len() {
        for j in 0..i {
            d.push(sq_dist(points[i], points[j]).sqrt());
        }
    }
    if d.is_empty() {
        return 1.0;
    }
    d.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = d.len();
    let m = if n % 2 == 1 { d[n / 2] } else { (d[n / 2 - 1] + d[n / 2]) / 2.0 };
    if m > 0.0 {
        m
    } else {
        1.0
    }
}

fn k(a: &[f64], b: &[f64], sigma: f64) -> f64 {
    (-sq_dist(a, b) / (2.0 * sigma * sigma)).exp()
}

/// V-statistic MMD with the median bandwidth over the union.
pub fn dense_mmd(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    let pooled: Vec<&Vec<f64>> = a.iter().chain(b).collect();
    let sigma = median_sigma(&pooled);
    let mut xx = 0.0;
    for x in a {
        for y in a {
            xx += k(x, y, sigma);
        }
    }
    let mut yy = 0.0;
    for x in b {
        for y in b {
            yy += k(x, y, sigma);
        }
    }
    let mut xy = 0.0;
    for x in a {
        for y in b {
            xy += k(x, y, sigma);
        }
    }
    let n = a.len() as f64;
    let m = b.len() as f64;
    (xx / (n * n) + yy / (m * m) - 2.0 * xy / (n * m)).max(0.0).sqrt()
}

/// MRR by sorting every row of the cross-label MMD matrix (stable on label order).
pub fn brute_mrr(gen: &[Vec<Vec<f64>>], real: &[Vec<Vec<f64>>]) -> f64 {
    let c = gen.len();
    let mut total = 0.0;
    for i in 0..c {
        let mut row: Vec<(f64, usize)> = (0..c).map(|j| (dense_mmd(&gen[i], &real[j]), j)).collect();
        row.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
        let rank = row.iter().position(|&(_, j)| j == i).unwrap() + 1;
        total += 1.0 / rank as f64;
    }
    total / c as f64
}

/// Per-dimension 10-bin histogram entropy in bits, averaged over all dimensions.
pub fn dense_entropy(set: &[Vec<f64>]) -> f64 {
    let dim = set[0].len();
    let mut total = 0.0;
    for j in 0..dim {
        let col: Vec<f64> = set.iter().map(|v| v[j]).collect();
        let lo = col.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = col.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if hi <= lo {
            continue;
        }
        let width = (hi - lo) / 10.0;
        let mut counts = [0usize; 10];
        for &v in &col {
            let mut b = 0;
            while b < 9 && v >= lo + (b + 1) as f64 * width {
                b += 1;
            }
            counts[b] += 1;
        }
        for &n in &counts {
            if n > 0 {
                let p = n as f64 / col.len() as f64;
                total -= p * p.log2();
            }
        }
    }
    total / dim as f64
}

/// Mean RKHS distance over ordered pairs `i != j` with the given bandwidth.
pub fn dense_mean_distance(set: &[Vec<f64>], sigma: f64) -> f64 {
    let mut s = 0.0;
    let mut n = 0;
    for (i, a) in set.iter().enumerate() {
        for (j, b) in set.iter().enumerate() {
            if i != j {
                s += (2.0 - 2.0 * k(a, b, sigma)).max(0.0).sqrt();
                n += 1;
            }
        }
    }
    s / n as f64
}

pub fn dense_distance_delta(gen: &[Vec<f64>], real: &[Vec<f64>]) -> f64 {
    let pooled: Vec<&Vec<f64>> = gen.iter().chain(real).collect();
    let sigma = median_sigma(&pooled);
    (dense_mean_distance(gen, sigma) - dense_mean_distance(real, sigma)).abs()
}

/// `-Σ p log2 p` per column, gaps excluded; `None` for all-gap columns.
pub fn column_entropy(rows: &[&str]) -> Vec<Option<f64>> {
    let cols = rows[0].chars().count();
    (0..cols)
        .map(|c| {
            let mut counts: HashMap<char, usize> = HashMap::new();
            for r in rows {
                let ch = r.chars().nth(c).unwrap();
                if ch != '-' && ch != '.' {
                    *counts.entry(ch).or_default() += 1;
                }
            }
            let n: usize = counts.values().sum();
            if n == 0 {
                return None;
            }
            Some(-counts.values().map(|&k| k as f64 / n as f64).map(|p| p * p.log2()).sum::<f64>())
        })
        .collect()
}

/// Global alignment by memoised recursion; `(matches, length)` of the traceback
/// that prefers a diagonal step, then consuming only the first sequence, then only the second.
pub fn nw_identity(s1: &str, s2: &str) -> f64 {
    let (a, b) = if s1.len() < s2.len() || (s1.len() == s2.len() && s1 <= s2) { (s1, s2) } else { (s2, s1) };
    let a: Vec<u8> = a.bytes().collect();
    let b: Vec<u8> = b.bytes().collect();
    let mut memo = HashMap::new();
    fn best(i: usize, j: usize, a: &[u8], b: &[u8], memo: &mut HashMap<(usize, usize), i64>) -> i64 {
        if i == 0 {
            return -(j as i64);
        }
        if j == 0 {
            return -(i as i64);
        }
        if let Some(&v) = memo.get(&(i, j)) {
            return v;
        }
        let d = best(i - 1, j - 1, a, b, memo) + i64::from(a[i - 1] == b[j - 1]);
        let u = best(i - 1, j, a, b, memo) - 1;
        let l = best(i, j - 1, a, b, memo) - 1;
        let v = d.max(u).max(l);
        memo.insert((i, j), v);
        v
    }
    let (mut i, mut j) = (a.len(), b.len());
    let (mut matches, mut len) = (0, 0);
    while i > 0 || j > 0 {
        let here = best(i, j, &a, &b, &mut memo);
        if i > 0 && j > 0 && here == best(i - 1, j - 1, &a, &b, &mut memo) + i64::from(a[i - 1] == b[j - 1]) {
            matches += usize::from(a[i - 1] == b[j - 1]);
            i -= 1;
            j -= 1;
        } else if i > 0 && here == best(i - 1, j, &a, &b, &mut memo) - 1 {
            i -= 1;
        } else {
            j -= 1;
        }
        len += 1;
    }
    100.0 * matches as f64 / len as f64
}

/// Critic score of a single row, evaluated on its own graph.
pub fn critic_row(nets: &GanNets<f64>, x: &[f64], u: &[f64]) -> f64 {
    let g = Graph::new();
    let p = nets.critic.params().bind(&g);
    let xv = g.var(Tensor::new(vec![1, x.len()], x.to_vec()).unwrap());
    let uv = g.var(Tensor::new(vec![1, u.len()], u.to_vec()).unwrap());
    nets.critic.forward(&p, xv, uv).unwrap().sum().item()
}

/// Gradient penalty with input gradients from five-point central differences.
pub fn fd_penalty(nets: &GanNets<f64>, real: &Tensor<f64>, fake: &Tensor<f64>, u: &Tensor<f64>, eps: &[f64]) -> f64 {
    let h = 1e-4;
    let b = real.shape()[0];
    let mut total = 0.0;
    for i in 0..b {
        let mut x: Vec<f64> = real.row(i).iter().zip(fake.row(i)).map(|(r, f)| eps[i] * r + (1.0 - eps[i]) * f).collect();
        let mut sq = 0.0;
        for c in 0..x.len() {
            let x0 = x[c];
            let mut at = |d: f64| {
                x[c] = x0 + d;
                critic_row(nets, &x, u.row(i))
            };
            let gc = (-at(2.0 * h) + 8.0 * at(h) - 8.0 * at(-h) + at(-2.0 * h)) / (12.0 * h);
            x[c] = x0;
            sq += gc * gc;
        }
        total += (sq.sqrt() - 1.0).powi(2);
    }
    total / b as f64
}
