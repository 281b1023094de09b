use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{evaluate, standardize_split, train_model, Result, TrainConfig, TrainError};
use crate::data::Dataset;
use crate::nn::Network;

/// Splits indices into `k` test folds, stratified by label.
///
/// Each class's indices are shuffled and dealt round-robin, continuing from
/// the fold where the previous class stopped. Per-class counts in any two
/// folds therefore differ by at most one, as do fold sizes.
pub fn stratified_kfold(labels: &[usize], k: usize, seed: u64) -> Result<Vec<(Vec<usize>, Vec<usize>)>> {
    if k < 2 || k > labels.len() {
        return Err(TrainError::Folds { k, n: labels.len() });
    }
    let n_classes = labels.iter().max().map_or(0, |m| m + 1);
    let mut by_class = vec![Vec::new(); n_classes];
    for (i, &l) in labels.iter().enumerate() {
        by_class[l].push(i);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut test = vec![Vec::new(); k];
    let mut next = 0;
    for mut members in by_class {
        members.shuffle(&mut rng);
        for i in members {
            test[next].push(i);
            next = (next + 1) % k;
        }
    }
    Ok(test
        .into_iter()
        .map(|mut t| {
            t.sort_unstable();
            let mut in_test = vec![false; labels.len()];
            t.iter().for_each(|&i| in_test[i] = true);
            let train = (0..labels.len()).filter(|&i| !in_test[i]).collect();
            (train, t)
        })
        .collect())
}

/// Result of fitting one fold.
#[derive(Debug, Clone, PartialEq)]
pub struct FoldOutcome {
    pub test_accuracy: f64,
    pub epochs_run: usize,
    pub final_loss: Option<f64>,
}

/// Fits a model on a standardized training split and scores the test split.
pub trait FoldTrainer {
    fn fit_and_score(&mut self, fold: usize, train: &Dataset, test: &Dataset, config: &TrainConfig) -> Result<FoldOutcome>;
}

/// One LAU hidden layer and an affine output, trained from a fold-specific
/// seed.
#[derive(Debug, Clone, Copy, Default)]
pub struct LauTrainer;

impl FoldTrainer for LauTrainer {
    fn fit_and_score(&mut self, fold: usize, train: &Dataset, test: &Dataset, config: &TrainConfig) -> Result<FoldOutcome> {
        let fold_config = TrainConfig { seed: fold_seed(config.seed, fold), ..config.clone() };
        let mut net = Network::tabular(
            train.sample_len(),
            train.n_classes(),
            config.lau_kind,
            config.lau_units,
            fold_config.seed,
        )?;
        let trace = train_model(&mut net, train, &fold_config)?;
        Ok(FoldOutcome {
            test_accuracy: evaluate(&mut net, test)?,
            epochs_run: trace.len(),
            final_loss: trace.last().copied(),
        })
    }
}

/// Predicts the most frequent training label (lowest index on ties).
#[derive(Debug, Clone, Copy, Default)]
pub struct MajorityClass;

impl FoldTrainer for MajorityClass {
    fn fit_and_score(&mut self, _fold: usize, train: &Dataset, test: &Dataset, _config: &TrainConfig) -> Result<FoldOutcome> {
        if test.is_empty() {
            return Err(TrainError::EmptyEvaluation);
        }
        let counts = train.class_counts();
        let majority = (0..counts.len()).fold(0, |best, c| if counts[c] > counts[best] { c } else { best });
        let hits = test.labels.iter().filter(|&&l| l == majority).count();
        Ok(FoldOutcome { test_accuracy: hits as f64 / test.len() as f64, epochs_run: 0, final_loss: None })
    }
}

fn fold_seed(seed: u64, fold: usize) -> u64 {
    seed.wrapping_mul(0x9e37_79b9_7f4a_7c15).wrapping_add(fold as u64 + 1)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldReport {
    pub fold_index: usize,
    pub train_size: usize,
    pub test_size: usize,
    pub test_accuracy: f64,
    pub epochs_run: usize,
    pub final_loss: Option<f64>,
    /// Seconds; excluded from reproducibility comparisons.
    pub wall_time: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetrics {
    pub dataset: String,
    pub config: TrainConfig,
    pub seed: u64,
    pub folds: Vec<FoldReport>,
    pub mean_accuracy: f64,
    /// Population standard deviation of the fold accuracies.
    pub std_accuracy: f64,
}

impl RunMetrics {
    pub fn from_folds(dataset: impl Into<String>, config: &TrainConfig, folds: Vec<FoldReport>) -> Self {
        let n = folds.len() as f64;
        let mean = folds.iter().map(|f| f.test_accuracy).sum::<f64>() / n;
        let var = folds.iter().map(|f| (f.test_accuracy - mean).powi(2)).sum::<f64>() / n;
        Self {
            dataset: dataset.into(),
            config: config.clone(),
            seed: config.seed,
            folds,
            mean_accuracy: mean,
            std_accuracy: var.sqrt(),
        }
    }

    /// `"95.33% (4.27%)"`: mean and fold standard deviation in percent.
    pub fn summary(&self) -> String {
        format!("{:.2}% ({:.2}%)", 100.0 * self.mean_accuracy, 100.0 * self.std_accuracy)
    }
}

/// Stratified k-fold cross-validation with `config.folds` folds.
pub fn cross_validate(dataset: &Dataset, config: &TrainConfig, trainer: &mut dyn FoldTrainer) -> Result<RunMetrics> {
    cross_validate_observed(dataset, config, trainer, &mut |_, _| {})
}

/// As [`cross_validate`]; `on_fit(fold, rows)` reports the rows that each
/// standardization fit consumed.
pub fn cross_validate_observed(
    dataset: &Dataset,
    config: &TrainConfig,
    trainer: &mut dyn FoldTrainer,
    on_fit: &mut dyn FnMut(usize, &[usize]),
) -> Result<RunMetrics> {
    config.validate()?;
    let splits = stratified_kfold(&dataset.labels, config.folds, config.seed)?;
    let mut reports = Vec::with_capacity(splits.len());
    for (fold_index, (train_idx, test_idx)) in splits.iter().enumerate() {
        let start = Instant::now();
        on_fit(fold_index, train_idx);
        let (train, test, _) = standardize_split(&dataset.subset(train_idx), &dataset.subset(test_idx))?;
        let outcome = trainer.fit_and_score(fold_index, &train, &test, config)?;
        reports.push(FoldReport {
            fold_index,
            train_size: train.len(),
            test_size: test.len(),
            test_accuracy: outcome.test_accuracy,
            epochs_run: outcome.epochs_run,
            final_loss: outcome.final_loss,
            wall_time: start.elapsed().as_secs_f64(),
        });
    }
    Ok(RunMetrics::from_folds(dataset.name.clone(), config, reports))
}
