use std::collections::BTreeMap;

use rand::Rng;
use serde::Serialize;

use super::alignment::mean_nearest_identity;
use super::features::{kmer_features, FeatureVector};
use super::kernel::{diversity_distance, diversity_entropy, mmd, rank_labels, Bandwidth, KernelConfig};
use crate::error::{Error, Result};
use crate::numerics::{derive_seed, seeded};
use crate::seqdata::{LabelVocabulary, SequenceRecord, CANONICAL};

/// Per-label part of an [`EvalReport`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LabelBreakdown {
    pub label: String,
    pub n_gen: usize,
    pub n_real: usize,
    /// `mmd(gen[label], real[c])` for every evaluated label `c`.
    pub mmd: BTreeMap<String, f64>,
    pub rank: Option<usize>,
    /// `mmd(uniform random sequences, real[label])`, same count and lengths as `gen[label]`.
    pub random_mmd: f64,
    /// Mean identity (percent) of each generated sequence to its closest real one.
    pub nearest_identity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportMeta {
    pub kmer: usize,
    pub bandwidth: String,
    pub seed: u64,
    pub n_gen: usize,
    pub n_real: usize,
    pub labels: Vec<String>,
}

/// Evaluation summary; fields serialise in declaration order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub mmd: f64,
    /// `None` when fewer than two labels have both generated and real members.
    pub mrr: Option<f64>,
    pub entropy_delta: f64,
    pub distance_delta: f64,
    pub per_label: Vec<LabelBreakdown>,
    pub metadata: ReportMeta,
}

impl EvalReport {
    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn label(&self, term: &str) -> Option<&LabelBreakdown> {
        self.per_label.iter().find(|l| l.label == term)
    }
}

fn features(recs: &[&SequenceRecord], k: usize) -> Result<Vec<FeatureVector>> {
    recs.iter().map(|r| kmer_features(&r.residues, k)).collect()
}

fn random_like(gen: &[&SequenceRecord], seed: u64) -> Vec<String> {
    let letters = CANONICAL.as_bytes();
    let mut rng = seeded(seed);
    gen.iter()
        .map(|r| (0..r.residues.len()).map(|_| letters[rng.random_range(0..letters.len())] as char).collect())
        .collect()
}

/// Full metric battery of `gen` against `real`. Records are grouped by their active labels.
pub fn evaluate_sets(
    real: &[SequenceRecord],
    gen: &[SequenceRecord],
    vocab: &LabelVocabulary,
    kernel: &KernelConfig,
    seed: u64,
) -> Result<EvalReport> {
    if real.is_empty() || gen.is_empty() {
        return Err(Error::Contract("evaluation needs non-empty real and generated sets".into()));
    }
    for r in real.iter().chain(gen) {
        if r.labels.len() != vocab.len() {
            return Err(Error::shape("evaluate", format!("`{}` has {} labels, vocabulary has {}", r.id, r.labels.len(), vocab.len())));
        }
    }
    let k = kernel.k;
    let all_real: Vec<&SequenceRecord> = real.iter().collect();
    let all_gen: Vec<&SequenceRecord> = gen.iter().collect();
    let fr = features(&all_real, k)?;
    let fg = features(&all_gen, k)?;
    let overall = mmd(&fg, &fr, kernel)?;
    let entropy_delta = diversity_entropy(&fg, &fr)?;
    let distance_delta = if fg.len() >= 2 && fr.len() >= 2 { diversity_distance(&fg, &fr, kernel)? } else { 0.0 };

    let mut gen_groups: BTreeMap<String, Vec<&SequenceRecord>> = BTreeMap::new();
    let mut real_groups: BTreeMap<String, Vec<&SequenceRecord>> = BTreeMap::new();
    for (ti, term) in vocab.terms().iter().enumerate() {
        let g: Vec<&SequenceRecord> = gen.iter().filter(|r| r.labels.get(ti)).collect();
        let r: Vec<&SequenceRecord> = real.iter().filter(|r| r.labels.get(ti)).collect();
        if g.is_empty() || r.is_empty() {
            if !g.is_empty() || !r.is_empty() {
                log::warn!("label {term}: {} generated / {} real members, skipped", g.len(), r.len());
            }
            continue;
        }
        gen_groups.insert(term.clone(), g);
        real_groups.insert(term.clone(), r);
    }
    let gen_feats: BTreeMap<String, Vec<FeatureVector>> =
        gen_groups.iter().map(|(t, v)| Ok((t.clone(), features(v, k)?))).collect::<Result<_>>()?;
    let real_feats: BTreeMap<String, Vec<FeatureVector>> =
        real_groups.iter().map(|(t, v)| Ok((t.clone(), features(v, k)?))).collect::<Result<_>>()?;

    let ranks = if gen_feats.len() >= 2 { Some(rank_labels(&gen_feats, &real_feats, kernel)?) } else { None };
    let mrr = ranks.as_ref().map(|rs| rs.iter().map(|r| 1.0 / r.rank as f64).sum::<f64>() / rs.len() as f64);

    let mut per_label = Vec::with_capacity(gen_groups.len());
    for (li, (term, g)) in gen_groups.iter().enumerate() {
        let r = &real_groups[term];
        let row = match &ranks {
            Some(rs) => rs[li].mmd.clone(),
            None => [(term.clone(), mmd(&gen_feats[term], &real_feats[term], kernel)?)].into(),
        };
        let random: Vec<FeatureVector> =
            random_like(g, derive_seed(seed, li as u64)).iter().map(|s| kmer_features(s, k)).collect::<Result<_>>()?;
        let gs: Vec<&str> = g.iter().map(|x| x.residues.as_str()).collect();
        let rs: Vec<&str> = r.iter().map(|x| x.residues.as_str()).collect();
        per_label.push(LabelBreakdown {
            label: term.clone(),
            n_gen: g.len(),
            n_real: r.len(),
            mmd: row,
            rank: ranks.as_ref().map(|rs| rs[li].rank),
            random_mmd: mmd(&random, &real_feats[term], kernel)?,
            nearest_identity: mean_nearest_identity(&gs, &rs)?,
        });
    }
    let bandwidth = match kernel.bandwidth {
        Bandwidth::Median => "median".to_string(),
        Bandwidth::Fixed(s) => s.to_string(),
    };
    let report = EvalReport {
        mmd: overall,
        mrr,
        entropy_delta,
        distance_delta,
        per_label,
        metadata: ReportMeta {
            kmer: k,
            bandwidth,
            seed,
            n_gen: gen.len(),
            n_real: real.len(),
            labels: gen_groups.keys().cloned().collect(),
        },
    };
    let finite = [report.mmd, report.entropy_delta, report.distance_delta].iter().all(|v| v.is_finite());
    if !finite {
        return Err(Error::NonFinite("evaluation report".into()));
    }
    Ok(report)
}
