//! Optimizers, the mini-batch training loop, stratified k-fold
//! cross-validation and metric aggregation.

mod cv;
pub mod metrics;
mod optim;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::{DataError, Dataset};
use crate::lehmer::{standardize_apply, standardize_fit, LehmerError, RangeStats};
use crate::nn::{argmax, flatten_grads, softmax_cross_entropy, LauKind, Mode, Network, NnError};

pub use cv::{
    cross_validate, cross_validate_observed, stratified_kfold, FoldOutcome, FoldReport, FoldTrainer,
    LauTrainer, MajorityClass, RunMetrics,
};
pub use optim::{optimizer_step, Optimizer, OptimizerState};

/// Rows per forward pass during evaluation.
const EVAL_CHUNK: usize = 256;

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("training diverged at epoch {epoch}, batch {batch}: {what}")]
    Divergence { epoch: usize, batch: usize, what: String },
    #[error("cannot evaluate on an empty dataset")]
    EmptyEvaluation,
    #[error("cannot split {n} samples into {k} folds")]
    Folds { k: usize, n: usize },
    #[error("gradient array {index}: {params} parameter values but {grads} gradient values")]
    GradientShape { index: usize, params: usize, grads: usize },
    #[error(transparent)]
    Nn(#[from] NnError),
    #[error(transparent)]
    Domain(#[from] LehmerError),
    #[error(transparent)]
    Data(#[from] DataError),
}

pub type Result<T> = std::result::Result<T, TrainError>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub optimizer: Optimizer,
    pub momentum: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub seed: u64,
    pub folds: usize,
    pub lau_kind: LauKind,
    pub lau_units: usize,
    /// When set, real suddency `s` and complex real part `a` are clamped to
    /// `[−bound, bound]` after every step.
    pub suddency_bound: Option<f64>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self::tabular(LauKind::Real)
    }
}

impl TrainConfig {
    /// Defaults for the small tabular datasets. At a learning rate of 1e-3
    /// the 200 epochs end far from convergence on Iris and Wine.
    pub fn tabular(lau_kind: LauKind) -> Self {
        Self {
            epochs: 200,
            batch_size: 16,
            learning_rate: 3e-2,
            optimizer: Optimizer::Adam,
            momentum: 0.9,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            seed: 0,
            folds: 10,
            lau_kind,
            lau_units: 3,
            suddency_bound: None,
        }
    }

    /// Defaults for the convolutional MNIST model. The LAU weights start
    /// uniform, and at 1e-3 they stay near a plain average for the first
    /// epochs.
    pub fn mnist(lau_kind: LauKind) -> Self {
        Self { epochs: 10, batch_size: 64, learning_rate: 3e-2, folds: 1, lau_units: 32, ..Self::tabular(lau_kind) }
    }

    /// Zero epochs is accepted and leaves the model untouched.
    pub fn validate(&self) -> Result<()> {
        let fail = |m: &str| Err(TrainError::Config(m.to_string()));
        if self.batch_size == 0 {
            return fail("batch_size must be at least 1");
        }
        if self.folds == 0 {
            return fail("folds must be at least 1");
        }
        if self.lau_units == 0 {
            return fail("lau_units must be at least 1");
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return fail("learning_rate must be positive and finite");
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) || !(0.0..1.0).contains(&self.momentum) {
            return fail("momentum, beta1 and beta2 must lie in [0, 1)");
        }
        if !(self.epsilon > 0.0) {
            return fail("epsilon must be positive");
        }
        if let Some(b) = self.suddency_bound {
            if !(b > 0.0) {
                return fail("suddency_bound must be positive");
            }
        }
        Ok(())
    }
}

/// Trains `net` in place and returns the mean loss of every epoch.
pub fn train_model(net: &mut Network, train: &Dataset, config: &TrainConfig) -> Result<Vec<f64>> {
    train_model_observed(net, train, config, |_, _| {})
}

/// As [`train_model`], calling `on_epoch(epoch, mean_loss)` after each epoch.
pub fn train_model_observed(
    net: &mut Network,
    train: &Dataset,
    config: &TrainConfig,
    mut on_epoch: impl FnMut(usize, f64),
) -> Result<Vec<f64>> {
    config.validate()?;
    if train.is_empty() && config.epochs > 0 {
        return Err(TrainError::Config("training set is empty".into()));
    }
    let bounded: Vec<usize> = match config.suddency_bound {
        Some(_) => net
            .param_labels()
            .iter()
            .enumerate()
            .filter(|(_, l)| l.ends_with(".s") || l.ends_with(".a"))
            .map(|(i, _)| i)
            .collect(),
        None => Vec::new(),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut state = OptimizerState::default();
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut trace = Vec::with_capacity(config.epochs);
    for epoch in 0..config.epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for (batch, rows) in order.chunks(config.batch_size).enumerate() {
            let x = train.batch(rows);
            let labels: Vec<usize> = rows.iter().map(|&i| train.labels[i]).collect();
            let logits = net.forward(&x, Mode::Train)?;
            let (loss, d_logits) = softmax_cross_entropy(&logits, &labels)?;
            if !loss.is_finite() {
                return Err(TrainError::Divergence { epoch, batch, what: format!("loss is {loss}") });
            }
            total += loss * rows.len() as f64;
            let grads = net.backward(&d_logits)?;
            let grads = flatten_grads(&grads);
            let mut params = net.params_mut();
            optimizer_step(&mut params, &grads, &mut state, config)?;
            if let Some(bound) = config.suddency_bound {
                for &i in &bounded {
                    for v in params[i].iter_mut() {
                        *v = v.clamp(-bound, bound);
                    }
                }
            }
            if let Some(label) = params.iter().position(|p| p.iter().any(|v| !v.is_finite())) {
                return Err(TrainError::Divergence {
                    epoch,
                    batch,
                    what: format!("parameter {} became non-finite", net.param_labels()[label]),
                });
            }
        }
        let mean = total / train.len() as f64;
        on_epoch(epoch, mean);
        trace.push(mean);
    }
    Ok(trace)
}

/// Fraction of rows whose largest logit (lowest index on ties) matches the
/// label.
pub fn evaluate(net: &mut Network, data: &Dataset) -> Result<f64> {
    if data.is_empty() {
        return Err(TrainError::EmptyEvaluation);
    }
    let rows: Vec<usize> = (0..data.len()).collect();
    let mut correct = 0usize;
    for chunk in rows.chunks(EVAL_CHUNK) {
        let logits = net.forward(&data.batch(chunk), Mode::Inference)?;
        for (r, &i) in chunk.iter().enumerate() {
            correct += usize::from(argmax(logits.sample(r)) == data.labels[i]);
        }
    }
    Ok(correct as f64 / data.len() as f64)
}

/// Fits the LAU-range standardization on `train` and applies it to both
/// splits.
pub fn standardize_split(train: &Dataset, test: &Dataset) -> Result<(Dataset, Dataset, RangeStats)> {
    let stats = standardize_fit((0..train.len()).map(|i| train.sample(i)));
    let mut train = train.clone();
    let mut test = test.clone();
    train.features = standardize_apply(&stats, &train.features)?;
    test.features = standardize_apply(&stats, &test.features)?;
    Ok((train, test, stats))
}

#[derive(Debug)]
pub struct MnistOutcome {
    pub net: Network,
    pub loss_trace: Vec<f64>,
    pub test_accuracy: f64,
}

/// Trains the convolutional LAU model on `train` and scores it on `test`.
pub fn train_mnist(
    train: &Dataset,
    test: &Dataset,
    config: &TrainConfig,
    on_epoch: impl FnMut(usize, f64),
) -> Result<MnistOutcome> {
    let mut net = Network::mnist(config.lau_kind, config.lau_units, config.seed)?;
    let loss_trace = train_model_observed(&mut net, train, config, on_epoch)?;
    let test_accuracy = evaluate(&mut net, test)?;
    Ok(MnistOutcome { net, loss_trace, test_accuracy })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::make_synthetic_blobs;

    fn blobs_net(kind: LauKind, seed: u64) -> (Network, Dataset) {
        let ds = make_synthetic_blobs(40, 2, 6.0, 3);
        let (train, _, _) = standardize_split(&ds, &ds).unwrap();
        (Network::tabular(2, 2, kind, 3, seed).unwrap(), train)
    }

    #[test]
    fn zero_epochs_leave_parameters() {
        let (mut net, train) = blobs_net(LauKind::Real, 1);
        let before: Vec<Vec<f64>> = net.params().iter().map(|p| p.to_vec()).collect();
        let config = TrainConfig { epochs: 0, ..TrainConfig::default() };
        assert!(train_model(&mut net, &train, &config).unwrap().is_empty());
        let after: Vec<Vec<f64>> = net.params().iter().map(|p| p.to_vec()).collect();
        assert_eq!(before, after);
    }

    #[test]
    fn separable_blobs_are_learned() {
        for kind in [LauKind::Real, LauKind::Complex] {
            let (mut net, train) = blobs_net(kind, 2);
            let config = TrainConfig { lau_kind: kind, learning_rate: 1e-2, ..TrainConfig::default() };
            let trace = train_model(&mut net, &train, &config).unwrap();
            assert!(trace.last().unwrap() <= &trace[0]);
            let acc = evaluate(&mut net, &train).unwrap();
            assert!(acc >= 0.95, "{kind}: {acc}");
        }
    }

    #[test]
    fn training_is_deterministic() {
        let run = || {
            let (mut net, train) = blobs_net(LauKind::Complex, 5);
            train_model(&mut net, &train, &TrainConfig { epochs: 5, ..TrainConfig::default() }).unwrap();
            net.params().iter().flat_map(|p| p.iter().map(|v| v.to_bits())).collect::<Vec<_>>()
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn suddency_bound_is_enforced() {
        let (mut net, train) = blobs_net(LauKind::Real, 1);
        let config = TrainConfig { epochs: 3, learning_rate: 5.0, suddency_bound: Some(0.5), ..TrainConfig::default() };
        let _ = train_model(&mut net, &train, &config);
        let labels = net.param_labels();
        let s = labels.iter().position(|l| l.ends_with(".s")).unwrap();
        assert!(net.params()[s].iter().all(|v| v.abs() <= 0.5));
    }

    #[test]
    fn divergence_is_reported() {
        let (mut net, mut train) = blobs_net(LauKind::Real, 1);
        // push inputs far outside the standardized range so the logits overflow
        train.features.iter_mut().for_each(|v| *v *= 1e300);
        let config = TrainConfig { epochs: 2, learning_rate: 1e300, optimizer: Optimizer::SgdMomentum, ..TrainConfig::default() };
        let err = train_model(&mut net, &train, &config).unwrap_err();
        assert!(matches!(err, TrainError::Divergence { .. } | TrainError::Domain(_) | TrainError::Nn(_)), "{err}");
    }

    #[test]
    fn uniform_logits_score_chance() {
        let ds = make_synthetic_blobs(300, 3, 0.0, 1);
        let mut net = Network::tabular(2, 3, LauKind::Real, 3, 0).unwrap();
        for p in net.params_mut() {
            p.iter_mut().for_each(|v| *v = 0.0);
        }
        let (_, test, _) = standardize_split(&ds, &ds).unwrap();
        // all logits tie, lowest class wins
        assert!((evaluate(&mut net, &test).unwrap() - 1.0 / 3.0).abs() < 1e-12);
        assert!(matches!(evaluate(&mut net, &ds.subset(&[])), Err(TrainError::EmptyEvaluation)));
    }

    #[test]
    fn config_validation() {
        assert!(TrainConfig::default().validate().is_ok());
        assert!(TrainConfig { batch_size: 0, ..TrainConfig::default() }.validate().is_err());
        assert!(TrainConfig { learning_rate: 0.0, ..TrainConfig::default() }.validate().is_err());
        assert!(TrainConfig { folds: 0, ..TrainConfig::default() }.validate().is_err());
        assert_eq!(TrainConfig::mnist(LauKind::Complex).batch_size, 64);
    }
}
