//! Classical ensembles: every member sees every example.

use super::common::{at, check_inputs, initial_ensemble, log_probe, member_spec, should_log, update_member};
use super::config::{Method, TrainConfig};
use super::history::TrainHistory;
use crate::datasets::{next_batch, BatchPlan, Dataset};
use crate::engine::forward;
use crate::ensemble::Ensemble;
use crate::error::{Error, Result};
use crate::parallel;

pub fn train_independent(
    config: &TrainConfig,
    train_set: &Dataset,
    probe_set: &Dataset,
) -> Result<(Ensemble, TrainHistory)> {
    train_independent_from(config, None, train_set, probe_set)
}

/// Members seeded `seed + m` step in lockstep over one shared batch schedule
/// without interacting; the result equals `M` separate single-model runs.
pub fn train_independent_from(
    config: &TrainConfig,
    init: Option<Ensemble>,
    train_set: &Dataset,
    probe_set: &Dataset,
) -> Result<(Ensemble, TrainHistory)> {
    if config.method != Method::Independent {
        return Err(Error::InvalidConfig(format!(
            "train_independent called with method {}",
            config.method
        )));
    }
    check_inputs(config, train_set, probe_set)?;
    let spec = member_spec(config, train_set)?;
    let mut ensemble = initial_ensemble(config, &spec, init)?;
    let mut plan = BatchPlan::new(config.seed, config.batch_size, train_set.len());
    let mut history = TrainHistory::default();
    let total = config.total_iterations;

    log_probe(&mut history, ensemble.members(), probe_set, 0, config.optimizer.lr_at(0))?;
    for t in 0..total {
        let (inputs, labels) = next_batch(&mut plan, train_set, t);
        let weights = vec![1.0; labels.len()];
        parallel::map_mut(ensemble.members_mut(), |m, member| {
            let (_, trace) = forward(&member.spec, &member.params, &inputs).map_err(at(t, m))?;
            update_member(config, member, &trace, &labels, &weights, t).map_err(at(t, m))
        })
        .into_iter()
        .collect::<Result<Vec<bool>>>()?;
        let done = t + 1;
        if should_log(config, done, total) {
            log_probe(&mut history, ensemble.members(), probe_set, done, config.optimizer.lr_at(t))?;
        }
    }
    Ok((ensemble, history))
}
