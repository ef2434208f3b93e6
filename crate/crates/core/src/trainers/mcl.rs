//! Coordinate-descent multiple choice learning.

use super::common::{at, check_inputs, initial_ensemble, log_probe, member_spec, update_member};
use super::config::{Method, TrainConfig};
use super::history::TrainHistory;
use crate::datasets::{next_batch, BatchPlan, Dataset};
use crate::engine::forward;
use crate::ensemble::{assign_winners, per_member_losses, Ensemble};
use crate::error::{Error, Result};
use crate::parallel;

/// Round-robin partition by example index.
pub fn round_robin_partition(example_count: usize, members: usize) -> Vec<Vec<usize>> {
    (0..members)
        .map(|m| (m..example_count).step_by(members).collect())
        .collect()
}

pub fn train_mcl(config: &TrainConfig, train_set: &Dataset, probe_set: &Dataset) -> Result<(Ensemble, TrainHistory)> {
    train_mcl_from(config, None, train_set, probe_set)
}

/// Alternates between training every member for `mcl_inner()` steps on its own
/// partition and reassigning each training example to its lowest-loss member.
///
/// Step counters run on across meta-iterations, so a member's batch schedule,
/// learning-rate schedule and momentum are continuous. A member left with an
/// empty partition skips that meta-iteration.
pub fn train_mcl_from(
    config: &TrainConfig,
    init: Option<Ensemble>,
    train_set: &Dataset,
    probe_set: &Dataset,
) -> Result<(Ensemble, TrainHistory)> {
    if config.method != Method::Mcl {
        return Err(Error::InvalidConfig(format!("train_mcl called with method {}", config.method)));
    }
    check_inputs(config, train_set, probe_set)?;
    let spec = member_spec(config, train_set)?;
    let mut ensemble = initial_ensemble(config, &spec, init)?;
    let mut history = TrainHistory::default();
    let inner = config.mcl_inner();
    let meta = config.mcl_meta_iterations;
    let mut partition = round_robin_partition(train_set.len(), config.member_count);

    log_probe(&mut history, ensemble.members(), probe_set, 0, config.optimizer.lr_at(0))?;
    for round in 0..meta {
        let parts = &partition;
        parallel::map_mut(ensemble.members_mut(), |m, member| -> Result<()> {
            if parts[m].is_empty() {
                log::warn!("member {m} has no assigned examples in meta-iteration {round}");
                return Ok(());
            }
            let subset = train_set.select(&parts[m])?;
            let mut plan = BatchPlan::new(config.seed, config.batch_size, subset.len());
            let weights_full = vec![1.0; config.batch_size];
            for s in 0..inner {
                let t = round * inner + s;
                let (inputs, labels) = next_batch(&mut plan, &subset, t);
                let (_, trace) = forward(&member.spec, &member.params, &inputs).map_err(at(t, m))?;
                update_member(config, member, &trace, &labels, &weights_full[..labels.len()], t).map_err(at(t, m))?;
            }
            Ok(())
        })
        .into_iter()
        .collect::<Result<Vec<()>>>()?;

        let done = (round + 1) * inner;
        log_probe(&mut history, ensemble.members(), probe_set, done, config.optimizer.lr_at(done - 1))?;
        if round + 1 < meta {
            let losses = per_member_losses(&ensemble, train_set.inputs(), train_set.labels())?;
            let winners = assign_winners(&losses, 1)?.winners().expect("k = 1");
            partition = vec![Vec::new(); config.member_count];
            for (i, w) in winners.into_iter().enumerate() {
                partition[w].push(i);
            }
            log::debug!(
                "meta-iteration {round}: partition sizes {:?}",
                partition.iter().map(Vec::len).collect::<Vec<_>>()
            );
        }
    }
    Ok((ensemble, history))
}
