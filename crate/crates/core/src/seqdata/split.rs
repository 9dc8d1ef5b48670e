use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::Rng;

use super::labels::LabelVector;
use crate::error::{Error, Result};
use crate::numerics::seeded;

/// Indices assigned to each side of a train/validation split.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Split {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
}

/// Stratified split keyed on each record's full label combination.
///
/// Each stratum sends `round(n * val_fraction)` shuffled members to
/// validation. Strata with fewer than two members cannot be stratified;
/// their records go to validation with probability `val_fraction`.
pub fn split_indices(labels: &[&LabelVector], val_fraction: f64, seed: u64) -> Result<Split> {
    if !(val_fraction > 0.0 && val_fraction < 1.0) {
        return Err(Error::Config(format!("val_fraction must lie in (0, 1), got {val_fraction}")));
    }
    let mut strata: BTreeMap<&LabelVector, Vec<usize>> = BTreeMap::new();
    for (i, l) in labels.iter().enumerate() {
        strata.entry(*l).or_default().push(i);
    }
    let mut rng = seeded(seed);
    let (mut train, mut val) = (Vec::new(), Vec::new());
    for (key, mut members) in strata {
        if members.len() < 2 {
            log::warn!(
                "label stratum {:?} has {} record(s); assigning at random",
                key.active().collect::<Vec<_>>(),
                members.len()
            );
            for i in members {
                if rng.random_bool(val_fraction) {
                    val.push(i);
                } else {
                    train.push(i);
                }
            }
            continue;
        }
        members.shuffle(&mut rng);
        let n_val = ((members.len() as f64) * val_fraction).round() as usize;
        val.extend_from_slice(&members[..n_val]);
        train.extend_from_slice(&members[n_val..]);
    }
    train.sort_unstable();
    val.sort_unstable();
    Ok(Split { train, val })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lv(bits: &[bool]) -> LabelVector {
        LabelVector::from_bits(bits.to_vec())
    }

    #[test]
    fn ten_records_eight_two() {
        let labels: Vec<LabelVector> = (0..10).map(|_| lv(&[true])).collect();
        let refs: Vec<&LabelVector> = labels.iter().collect();
        let s = split_indices(&refs, 0.2, 1).unwrap();
        assert_eq!((s.train.len(), s.val.len()), (8, 2));
        assert!(s.train.iter().all(|i| !s.val.contains(i)));
    }

    #[test]
    fn lysozyme_proportions() {
        // 1097 + 1668 records at the validation ratio 516 / 2765.
        let mut labels = vec![lv(&[true, false]); 1097];
        labels.extend(vec![lv(&[false, true]); 1668]);
        let refs: Vec<&LabelVector> = labels.iter().collect();
        let s = split_indices(&refs, 516.0 / 2765.0, 7).unwrap();
        assert_eq!(s.val.len(), 516);
        assert_eq!(s.train.len(), 2249);
        let val_c = s.val.iter().filter(|&&i| i < 1097).count();
        assert!((val_c as f64 - 1097.0 * 516.0 / 2765.0).abs() <= 1.0);
    }

    #[test]
    fn deterministic_and_rejects_bad_fraction() {
        let labels: Vec<LabelVector> = (0..30).map(|i| lv(&[i % 3 == 0, i % 2 == 0])).collect();
        let refs: Vec<&LabelVector> = labels.iter().collect();
        assert_eq!(split_indices(&refs, 0.3, 5).unwrap(), split_indices(&refs, 0.3, 5).unwrap());
        assert!(split_indices(&refs, 0.0, 5).is_err());
        assert!(split_indices(&refs, 1.0, 5).is_err());
    }

    #[test]
    fn singleton_strata_still_partition() {
        let labels: Vec<LabelVector> = (0..6).map(|i| lv(&[i == 0, i == 1, i >= 2])).collect();
        let refs: Vec<&LabelVector> = labels.iter().collect();
        let s = split_indices(&refs, 0.5, 3).unwrap();
        let mut all: Vec<usize> = s.train.iter().chain(&s.val).copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..6).collect::<Vec<_>>());
    }
}
