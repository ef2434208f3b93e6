//! Stochastic multiple choice learning.

use super::common::{at, check_inputs, initial_ensemble, log_probe, member_spec, should_log, update_member};
use super::config::{Method, TrainConfig};
use super::history::TrainHistory;
use crate::datasets::{next_batch, BatchPlan, Dataset};
use crate::engine::{forward, loss_softmax_xent};
use crate::ensemble::{assign_winners, Ensemble, LossMatrix};
use crate::error::{Error, Result};
use crate::parallel;

pub fn train_smcl(config: &TrainConfig, train_set: &Dataset, probe_set: &Dataset) -> Result<(Ensemble, TrainHistory)> {
    train_smcl_from(config, None, train_set, probe_set)
}

/// sMCL starting from `init` (fine-tuning) or, if `None`, from fresh members.
///
/// Each iteration forwards one batch through every member, assigns each
/// example to its `k` lowest-loss members, and gives each member one SGD step
/// on the examples it won. Members that won nothing are not stepped at all.
pub fn train_smcl_from(
    config: &TrainConfig,
    init: Option<Ensemble>,
    train_set: &Dataset,
    probe_set: &Dataset,
) -> Result<(Ensemble, TrainHistory)> {
    if config.method != Method::Smcl {
        return Err(Error::InvalidConfig(format!("train_smcl called with method {}", config.method)));
    }
    check_inputs(config, train_set, probe_set)?;
    let spec = member_spec(config, train_set)?;
    let mut ensemble = initial_ensemble(config, &spec, init)?;
    let mut plan = BatchPlan::new(config.seed, config.batch_size, train_set.len());
    let mut history = TrainHistory::default();
    let total = config.total_iterations;
    let members = config.member_count;

    log_probe(&mut history, ensemble.members(), probe_set, 0, config.optimizer.lr_at(0))?;
    let mut epoch_wins = vec![0usize; members];
    for t in 0..total {
        let (inputs, labels) = next_batch(&mut plan, train_set, t);

        let passes = parallel::map_range(members, |m| -> Result<_> {
            let member = &ensemble.members()[m];
            let (logits, trace) = forward(&member.spec, &member.params, &inputs).map_err(at(t, m))?;
            let losses = loss_softmax_xent(&logits, &labels)?;
            Ok((trace, losses))
        })
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
        let (traces, columns): (Vec<_>, Vec<_>) = passes.into_iter().unzip();
        let assignment = assign_winners(&LossMatrix::from_columns(&columns).map_err(at(t, 0))?, config.winners_per_example)?;

        parallel::map_mut(ensemble.members_mut(), |m, member| {
            update_member(config, member, &traces[m], &labels, &assignment.member_mask(m), t).map_err(at(t, m))
        })
        .into_iter()
        .collect::<Result<Vec<bool>>>()?;

        for (w, n) in epoch_wins.iter_mut().zip(assignment.win_counts()) {
            *w += n;
        }
        let done = t + 1;
        if done % plan.batches_per_epoch() == 0 {
            let epoch = t / plan.batches_per_epoch();
            for (m, _) in epoch_wins.iter().enumerate().filter(|(_, &w)| w == 0) {
                log::warn!("member {m} won no examples in epoch {epoch}");
                history.starved.push((epoch, m));
            }
            epoch_wins.fill(0);
        }
        if should_log(config, done, total) {
            log_probe(&mut history, ensemble.members(), probe_set, done, config.optimizer.lr_at(t))?;
        }
    }
    Ok((ensemble, history))
}
