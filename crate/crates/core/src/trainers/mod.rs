//! Ensemble training procedures over the shared engine.

mod common;
mod config;
mod dey;
mod evaluate;
mod history;
mod independent;
mod mcl;
mod smcl;

pub use config::{Method, TrainConfig};
pub use dey::{dey_weights, train_dey};
pub use evaluate::{evaluate, EVAL_BATCH};
pub use history::{HistoryRecord, TrainHistory};
pub use independent::{train_independent, train_independent_from};
pub use mcl::{round_robin_partition, train_mcl, train_mcl_from};
pub use smcl::{train_smcl, train_smcl_from};

use crate::datasets::Dataset;
use crate::ensemble::Ensemble;
use crate::error::{Error, Result};

/// Dispatches on `config.method`. `init` seeds the members' parameters
/// (fine-tuning); sequential reweighting always starts fresh and rejects it.
pub fn train(
    config: &TrainConfig,
    train_set: &Dataset,
    probe_set: &Dataset,
    init: Option<Ensemble>,
) -> Result<(Ensemble, TrainHistory)> {
    match config.method {
        Method::Smcl => train_smcl_from(config, init, train_set, probe_set),
        Method::Mcl => train_mcl_from(config, init, train_set, probe_set),
        Method::Independent => train_independent_from(config, init, train_set, probe_set),
        Method::Dey if init.is_some() => Err(Error::InvalidConfig(
            "dey trains members sequentially from scratch; an initial ensemble is not supported".into(),
        )),
        Method::Dey => train_dey(config, train_set, probe_set),
    }
}
