//! Distribution and sequence-level metrics for generated sequences.

mod alignment;
mod export;
mod features;
mod kernel;
mod report;

pub use alignment::{column_entropy, column_entropy_tsv, mean_nearest_identity, pairwise_identity, ColumnEntropy};
pub use export::{export_features, fmt_sig9, parse_feature_tsv, FeatureRow};
pub use features::{kmer_features, FeatureVector};
pub use kernel::{
    diversity_distance, diversity_entropy, histogram_entropy, mean_dimension_entropy, mean_rkhs_distance,
    median_distance, mmd, mmd_with_sigma, mrr, rank_labels, Bandwidth, KernelConfig, RankOutcome,
};
pub use report::{evaluate_sets, EvalReport, LabelBreakdown, ReportMeta};
