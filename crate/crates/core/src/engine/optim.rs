use serde::{Deserialize, Serialize};

use super::params::{Gradients, ParameterSet};
use crate::error::{Error, Result};

/// SGD with momentum, L2 weight decay and a step learning-rate schedule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizerConfig {
    pub learning_rate: f64,
    #[serde(default)]
    pub momentum: f64,
    #[serde(default)]
    pub weight_decay: f64,
    /// `(iteration, learning_rate)` pairs; each takes effect from its iteration on.
    #[serde(default)]
    pub lr_schedule: Vec<(usize, f64)>,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig {
            learning_rate: 0.01,
            momentum: 0.9,
            weight_decay: 0.0,
            lr_schedule: Vec::new(),
        }
    }
}

impl OptimizerConfig {
    pub fn plain(learning_rate: f64) -> Self {
        OptimizerConfig {
            learning_rate,
            momentum: 0.0,
            weight_decay: 0.0,
            lr_schedule: Vec::new(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64| v.is_finite() && v > 0.0;
        if !positive(self.learning_rate) {
            return Err(Error::InvalidConfig(format!(
                "learning rate must be positive, got {}",
                self.learning_rate
            )));
        }
        if !(self.momentum.is_finite() && (0.0..1.0).contains(&self.momentum)) {
            return Err(Error::InvalidConfig(format!(
                "momentum must be in [0,1), got {}",
                self.momentum
            )));
        }
        if !(self.weight_decay.is_finite() && self.weight_decay >= 0.0) {
            return Err(Error::InvalidConfig(format!(
                "weight decay must be non-negative, got {}",
                self.weight_decay
            )));
        }
        if self.lr_schedule.windows(2).any(|w| w[0].0 >= w[1].0) {
            return Err(Error::InvalidConfig(
                "lr_schedule iterations must be strictly increasing".into(),
            ));
        }
        if let Some((_, lr)) = self.lr_schedule.iter().find(|(_, lr)| !positive(*lr)) {
            return Err(Error::InvalidConfig(format!(
                "scheduled learning rate must be positive, got {lr}"
            )));
        }
        Ok(())
    }

    /// Learning rate in effect at `iteration`.
    pub fn lr_at(&self, iteration: usize) -> f64 {
        self.lr_schedule
            .iter()
            .take_while(|(at, _)| *at <= iteration)
            .last()
            .map_or(self.learning_rate, |&(_, lr)| lr)
    }
}

/// `v ← μ·v + g + wd·θ;  θ ← θ − λ(t)·v`
pub fn sgd_step(
    params: &mut ParameterSet,
    grads: &Gradients,
    opt: &OptimizerConfig,
    iteration: usize,
) -> Result<()> {
    if grads.tensors().len() != params.tensors().len()
        || grads
            .tensors()
            .iter()
            .zip(params.tensors())
            .any(|(g, p)| g.shape() != p.shape())
    {
        return Err(Error::Shape("gradients do not match parameters".into()));
    }
    if !grads.all_finite() {
        return Err(Error::NonFinite("gradient passed to sgd_step".into()));
    }
    let lr = opt.lr_at(iteration);
    let (tensors, momentum) = params.parts_mut();
    for ((theta, v), g) in tensors.iter_mut().zip(momentum.iter_mut()).zip(grads.tensors()) {
        for ((t, v), &g) in theta
            .data_mut()
            .iter_mut()
            .zip(v.data_mut().iter_mut())
            .zip(g.data())
        {
            *v = opt.momentum * *v + g + opt.weight_decay * *t;
            *t -= lr * *v;
        }
    }
    if tensors.iter().any(|t| !t.all_finite()) {
        return Err(Error::NonFinite("parameters after update".into()));
    }
    Ok(())
}
