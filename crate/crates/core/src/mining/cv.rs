use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::dataset::{Class, Dataset};
use super::measures::{ConfusionCounts, EvalMeasures};
use super::ripper::learn_ruleset;
use super::MiningError;

pub const DEFAULT_FOLDS: usize = 10;

/// Stratified fold index for every record. Within each class records are
/// shuffled, then dealt round-robin, continuing across classes so fold
/// sizes differ by at most one.
pub fn stratified_folds(ds: &Dataset, k: usize, seed: u64) -> Result<Vec<usize>, MiningError> {
    if k < 2 {
        return Err(MiningError::InvalidFolds { k });
    }
    if ds.len() < k {
        return Err(MiningError::TooFewRecords { records: ds.len(), k });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut folds = vec![0; ds.len()];
    let mut next = 0;
    for class in [Class::Active, Class::Inactive] {
        let mut members: Vec<usize> = (0..ds.len()).filter(|&i| ds.rows()[i].class == class).collect();
        members.shuffle(&mut rng);
        for i in members {
            folds[i] = next % k;
            next += 1;
        }
    }
    Ok(folds)
}

/// Per-fold confusion counts on the held-out records.
pub fn cross_validate_counts(ds: &Dataset, k: usize, seed: u64) -> Result<Vec<ConfusionCounts>, MiningError> {
    let folds = stratified_folds(ds, k, seed)?;
    let mut out = Vec::with_capacity(k);
    for fold in 0..k {
        let train: Vec<usize> = (0..ds.len()).filter(|&i| folds[i] != fold).collect();
        let rules = learn_ruleset(&ds.subset(&train), seed.wrapping_add(fold as u64));
        let mut counts = ConfusionCounts::default();
        for (_, row) in ds.rows().iter().enumerate().filter(|(i, _)| folds[*i] == fold) {
            counts.record(row.class.is_active(), rules.classify(ds, row).is_active());
        }
        out.push(counts);
    }
    Ok(out)
}

/// Micro-averaged measures over `k` stratified folds.
pub fn cross_validate(ds: &Dataset, k: usize, seed: u64) -> Result<EvalMeasures, MiningError> {
    let mut total = ConfusionCounts::default();
    for counts in cross_validate_counts(ds, k, seed)? {
        total += counts;
    }
    Ok(total.measures())
}
