use serde::{Deserialize, Serialize};

use super::{TrainConfig, TrainError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Optimizer {
    SgdMomentum,
    Adam,
}

impl std::fmt::Display for Optimizer {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Optimizer::SgdMomentum => "sgd-momentum",
            Optimizer::Adam => "adam",
        })
    }
}

impl std::str::FromStr for Optimizer {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "sgd-momentum" | "sgd" => Ok(Optimizer::SgdMomentum),
            "adam" => Ok(Optimizer::Adam),
            other => Err(format!("unknown optimizer {other:?} (expected sgd-momentum or adam)")),
        }
    }
}

/// Per-array moment estimates. SGD uses `first` as its velocity.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct OptimizerState {
    pub step: u64,
    pub first: Vec<Vec<f64>>,
    pub second: Vec<Vec<f64>>,
}

/// Applies one update to every trainable array.
///
/// SGD with momentum: `u ← μu + g`, `θ ← θ − ηu`.
/// Adam: bias-corrected first and second moments, `θ ← θ − η m̂ / (√v̂ + ε)`.
pub fn optimizer_step(
    params: &mut [&mut [f64]],
    grads: &[&[f64]],
    state: &mut OptimizerState,
    config: &TrainConfig,
) -> Result<(), TrainError> {
    if params.len() != grads.len() {
        return Err(TrainError::GradientShape { index: params.len().min(grads.len()), params: params.len(), grads: grads.len() });
    }
    for (index, (p, g)) in params.iter().zip(grads).enumerate() {
        if p.len() != g.len() {
            return Err(TrainError::GradientShape { index, params: p.len(), grads: g.len() });
        }
    }
    if state.first.is_empty() {
        state.first = params.iter().map(|p| vec![0.0; p.len()]).collect();
        state.second = params.iter().map(|p| vec![0.0; p.len()]).collect();
    }
    state.step += 1;
    let lr = config.learning_rate;
    match config.optimizer {
        Optimizer::SgdMomentum => {
            for ((p, g), u) in params.iter_mut().zip(grads).zip(&mut state.first) {
                for ((p, g), u) in p.iter_mut().zip(*g).zip(u.iter_mut()) {
                    *u = config.momentum * *u + g;
                    *p -= lr * *u;
                }
            }
        }
        Optimizer::Adam => {
            let t = state.step as i32;
            let c1 = 1.0 - config.beta1.powi(t);
            let c2 = 1.0 - config.beta2.powi(t);
            for (((p, g), m), v) in params.iter_mut().zip(grads).zip(&mut state.first).zip(&mut state.second) {
                for (((p, g), m), v) in p.iter_mut().zip(*g).zip(m.iter_mut()).zip(v.iter_mut()) {
                    *m = config.beta1 * *m + (1.0 - config.beta1) * g;
                    *v = config.beta2 * *v + (1.0 - config.beta2) * g * g;
                    *p -= lr * (*m / c1) / ((*v / c2).sqrt() + config.epsilon);
                }
            }
        }
    }
    Ok(())
}
