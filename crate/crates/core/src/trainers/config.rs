use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::engine::{OptimizerConfig, Reduction};
use crate::error::{Error, Result};

/// Ensemble training procedure.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Winner-take-gradient SGD over all members at once.
    Smcl,
    /// Alternating train-on-partition / reassign coordinate descent.
    Mcl,
    /// Members trained side by side with no interaction.
    Independent,
    /// Members trained one after another on reweighted examples.
    Dey,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Smcl, Method::Mcl, Method::Independent, Method::Dey];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Smcl => "smcl",
            Method::Mcl => "mcl",
            Method::Independent => "independent",
            Method::Dey => "dey",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown method {s:?}")))
    }
}

/// Full optimization recipe for one ensemble.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub method: Method,
    pub member_count: usize,
    /// Members penalized per example (the `k` of the k-relaxed assignment).
    pub winners_per_example: usize,
    pub batch_size: usize,
    /// SGD steps per member.
    pub total_iterations: usize,
    pub optimizer: OptimizerConfig,
    pub seed: u64,
    /// Hidden ReLU layer widths of every member.
    pub hidden_layers: Vec<usize>,
    pub mcl_meta_iterations: usize,
    /// Steps per member per meta-iteration; defaults to `total_iterations / mcl_meta_iterations`.
    pub mcl_inner_iterations: Option<usize>,
    pub dey_weight_floor: f64,
    pub loss_reduction: Reduction,
    /// Iterations between probe-set evaluations in the history.
    pub log_interval: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            method: Method::Smcl,
            member_count: 4,
            winners_per_example: 1,
            batch_size: 64,
            total_iterations: 1000,
            optimizer: OptimizerConfig::default(),
            seed: 0,
            hidden_layers: vec![32],
            mcl_meta_iterations: 5,
            mcl_inner_iterations: None,
            dey_weight_floor: 0.01,
            loss_reduction: Reduction::Mean,
            log_interval: 50,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: usize| {
            if v == 0 {
                Err(Error::InvalidConfig(format!("{name} must be positive")))
            } else {
                Ok(())
            }
        };
        positive("member_count", self.member_count)?;
        positive("batch_size", self.batch_size)?;
        positive("total_iterations", self.total_iterations)?;
        positive("mcl_meta_iterations", self.mcl_meta_iterations)?;
        positive("log_interval", self.log_interval)?;
        if self.winners_per_example == 0 || self.winners_per_example > self.member_count {
            return Err(Error::InvalidConfig(format!(
                "winners per example k={} must satisfy 1 <= k <= members M={}",
                self.winners_per_example, self.member_count
            )));
        }
        if self.mcl_inner_iterations == Some(0) {
            return Err(Error::InvalidConfig("mcl_inner_iterations must be positive".into()));
        }
        if !(self.dey_weight_floor > 0.0 && self.dey_weight_floor <= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "dey_weight_floor must be in (0,1], got {}",
                self.dey_weight_floor
            )));
        }
        if self.hidden_layers.contains(&0) {
            return Err(Error::InvalidConfig("hidden layer widths must be positive".into()));
        }
        self.optimizer.validate()
    }

    pub fn mcl_inner(&self) -> usize {
        self.mcl_inner_iterations
            .unwrap_or_else(|| (self.total_iterations / self.mcl_meta_iterations).max(1))
    }
}
