use std::collections::BTreeMap;

use super::features::FeatureVector;
use crate::error::{Error, Result};

/// Gaussian kernel bandwidth choice.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Bandwidth {
    /// Median of pooled pairwise distances (1 if that median is 0).
    Median,
    Fixed(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelConfig {
    pub bandwidth: Bandwidth,
    pub k: usize,
}

impl Default for KernelConfig {
    fn default() -> Self {
        KernelConfig { bandwidth: Bandwidth::Median, k: 3 }
    }
}

impl KernelConfig {
    /// σ for a comparison over `pooled`.
    pub fn sigma(&self, pooled: &[&FeatureVector]) -> Result<f64> {
        match self.bandwidth {
            Bandwidth::Fixed(s) if s > 0.0 && s.is_finite() => Ok(s),
            Bandwidth::Fixed(s) => Err(Error::Config(format!("kernel bandwidth {s} must be positive"))),
            Bandwidth::Median => Ok(median_distance(pooled)),
        }
    }
}

/// Median pairwise Euclidean distance over `i < j`; 1 when undefined or zero.
pub fn median_distance(points: &[&FeatureVector]) -> f64 {
    let mut d = Vec::with_capacity(points.len() * points.len().saturating_sub(1) / 2);
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            d.push(points[i].sq_dist(points[j]).sqrt());
        }
    }
    if d.is_empty() {
        return 1.0;
    }
    d.sort_by(f64::total_cmp);
    let n = d.len();
    let med = if n % 2 == 1 { d[n / 2] } else { 0.5 * (d[n / 2 - 1] + d[n / 2]) };
    if med > 0.0 {
        med
    } else {
        1.0
    }
}

fn gauss(sq: f64, sigma: f64) -> f64 {
    (-sq / (2.0 * sigma * sigma)).exp()
}

fn mean_kernel(a: &[FeatureVector], b: &[FeatureVector], sigma: f64) -> f64 {
    let mut s = 0.0;
    for x in a {
        for y in b {
            s += gauss(x.sq_dist(y), sigma);
        }
    }
    s / (a.len() * b.len()) as f64
}

/// Biased (V-statistic) MMD with a fixed bandwidth.
pub fn mmd_with_sigma(a: &[FeatureVector], b: &[FeatureVector], sigma: f64) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::Contract("mmd needs two non-empty sets".into()));
    }
    let v = mean_kernel(a, a, sigma) + mean_kernel(b, b, sigma) - 2.0 * mean_kernel(a, b, sigma);
    Ok(v.max(0.0).sqrt())
}

/// Biased MMD; the median bandwidth is computed over `a ∪ b`.
pub fn mmd(a: &[FeatureVector], b: &[FeatureVector], kernel: &KernelConfig) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::Contract("mmd needs two non-empty sets".into()));
    }
    let pooled: Vec<&FeatureVector> = a.iter().chain(b).collect();
    mmd_with_sigma(a, b, kernel.sigma(&pooled)?)
}

/// Rank of each label under ascending MMD, with full MMD rows.
#[derive(Debug, Clone, PartialEq)]
pub struct RankOutcome {
    pub label: String,
    /// 1-based rank of the true label.
    pub rank: usize,
    pub mmd: BTreeMap<String, f64>,
}

/// Per-label ranking used by [`mrr`]; ties go to the earlier label.
pub fn rank_labels(
    gen_sets: &BTreeMap<String, Vec<FeatureVector>>,
    real_sets: &BTreeMap<String, Vec<FeatureVector>>,
    kernel: &KernelConfig,
) -> Result<Vec<RankOutcome>> {
    if !gen_sets.keys().eq(real_sets.keys()) {
        let g: Vec<_> = gen_sets.keys().collect();
        let r: Vec<_> = real_sets.keys().collect();
        return Err(Error::Contract(format!("label sets differ: generated {g:?}, real {r:?}")));
    }
    if gen_sets.len() < 2 {
        return Err(Error::Contract(format!("mrr needs at least 2 labels, got {}", gen_sets.len())));
    }
    let labels: Vec<&String> = gen_sets.keys().collect();
    let mut out = Vec::with_capacity(labels.len());
    for &c in &labels {
        let row: Vec<f64> = labels
            .iter()
            .map(|&c2| mmd(&gen_sets[c], &real_sets[c2], kernel))
            .collect::<Result<_>>()?;
        let ci = labels.iter().position(|l| *l == c).expect("label present");
        let own = row[ci];
        let rank = 1 + row.iter().enumerate().filter(|&(j, &v)| v < own || (v == own && j < ci)).count();
        out.push(RankOutcome {
            label: c.clone(),
            rank,
            mmd: labels.iter().map(|l| (*l).clone()).zip(row).collect(),
        });
    }
    Ok(out)
}

/// Mean reciprocal rank of each label among all labels ordered by `mmd(gen[c], real[c'])`.
pub fn mrr(
    gen_sets: &BTreeMap<String, Vec<FeatureVector>>,
    real_sets: &BTreeMap<String, Vec<FeatureVector>>,
    kernel: &KernelConfig,
) -> Result<f64> {
    let ranks = rank_labels(gen_sets, real_sets, kernel)?;
    Ok(ranks.iter().map(|r| 1.0 / r.rank as f64).sum::<f64>() / ranks.len() as f64)
}

/// Shannon entropy (bits) of a 10-bin histogram over `values`' observed range.
pub fn histogram_entropy(values: &[f64]) -> f64 {
    const BINS: usize = 10;
    let (lo, hi) = values.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &v| (l.min(v), h.max(v)));
    if values.is_empty() || hi <= lo {
        return 0.0;
    }
    let mut counts = [0usize; BINS];
    for &v in values {
        let b = (((v - lo) / (hi - lo)) * BINS as f64).floor() as usize;
        counts[b.min(BINS - 1)] += 1;
    }
    let n = values.len() as f64;
    -counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            p * p.log2()
        })
        .sum::<f64>()
}

/// Mean over all feature dimensions of the per-dimension histogram entropy.
pub fn mean_dimension_entropy(set: &[FeatureVector]) -> Result<f64> {
    let first = set.first().ok_or_else(|| Error::Contract("entropy of an empty set".into()))?;
    let dim = first.dim();
    if set.iter().any(|f| f.dim() != dim) {
        return Err(Error::shape("diversity_entropy", "feature dimensions differ"));
    }
    let mut columns: BTreeMap<u32, Vec<f64>> = BTreeMap::new();
    for f in set {
        for &(i, v) in f.entries() {
            columns.entry(i).or_default().push(v);
        }
    }
    let n = set.len();
    let mut total = 0.0;
    for (_, mut vals) in columns {
        vals.resize(n, 0.0);
        total += histogram_entropy(&vals);
    }
    Ok(total / dim.max(1) as f64)
}

/// Signed difference of mean per-dimension entropy, generated minus real.
pub fn diversity_entropy(gen: &[FeatureVector], real: &[FeatureVector]) -> Result<f64> {
    Ok(mean_dimension_entropy(gen)? - mean_dimension_entropy(real)?)
}

/// Mean RKHS distance `sqrt(2 - 2 k(x, y))` over pairs `i < j` of one set.
pub fn mean_rkhs_distance(set: &[FeatureVector], sigma: f64) -> Result<f64> {
    if set.len() < 2 {
        return Err(Error::Contract(format!("pairwise distance needs at least 2 members, got {}", set.len())));
    }
    let mut s = 0.0;
    let mut pairs = 0usize;
    for i in 0..set.len() {
        for j in i + 1..set.len() {
            s += (2.0 - 2.0 * gauss(set[i].sq_dist(&set[j]), sigma)).max(0.0).sqrt();
            pairs += 1;
        }
    }
    Ok(s / pairs as f64)
}

/// `|avg distance(gen) - avg distance(real)|` with a bandwidth shared by both sets.
pub fn diversity_distance(gen: &[FeatureVector], real: &[FeatureVector], kernel: &KernelConfig) -> Result<f64> {
    let pooled: Vec<&FeatureVector> = gen.iter().chain(real).collect();
    let sigma = kernel.sigma(&pooled)?;
    Ok((mean_rkhs_distance(gen, sigma)? - mean_rkhs_distance(real, sigma)?).abs())
}
