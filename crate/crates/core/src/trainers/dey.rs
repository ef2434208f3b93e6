//! Sequential reweighting baseline.

use super::common::{at, check_inputs, log_probe, member_spec, should_log, update_member};
use super::config::{Method, TrainConfig};
use super::history::TrainHistory;
use crate::datasets::{BatchPlan, Dataset};
use crate::engine::{argmax_rows, forward, init_params};
use crate::ensemble::{Ensemble, Member};
use crate::error::{Error, Result};

/// `max(floor, 1 − s_i)` with `s_i` whether example `i` is already covered.
pub fn dey_weights(covered: &[bool], floor: f64) -> Vec<f64> {
    covered.iter().map(|&c| if c { floor } else { 1.0 }.max(floor)).collect()
}

/// Trains members one at a time. Member `m + 1` sees every training example
/// weighted by whether some earlier member already classifies it correctly
/// (accuracy being the bounded gain measure), and optimizes the weighted mean
/// loss over each batch.
///
/// History iterations count steps across all members, so member `m`'s records
/// lie in `(m·T, (m+1)·T]`.
pub fn train_dey(config: &TrainConfig, train_set: &Dataset, probe_set: &Dataset) -> Result<(Ensemble, TrainHistory)> {
    if config.method != Method::Dey {
        return Err(Error::InvalidConfig(format!("train_dey called with method {}", config.method)));
    }
    check_inputs(config, train_set, probe_set)?;
    let spec = member_spec(config, train_set)?;
    let total = config.total_iterations;
    let mut history = TrainHistory::default();
    let mut members: Vec<Member> = Vec::with_capacity(config.member_count);
    let mut covered = vec![false; train_set.len()];

    for m in 0..config.member_count {
        let weights = dey_weights(&covered, config.dey_weight_floor);
        let mut member = Member {
            params: init_params(&spec, config.seed.wrapping_add(m as u64)),
            spec: spec.clone(),
        };
        let mut plan = BatchPlan::new(config.seed, config.batch_size, train_set.len());
        let offset = m * total;
        members.push(member.clone());
        if m == 0 {
            log_probe(&mut history, &members, probe_set, 0, config.optimizer.lr_at(0))?;
        }
        for t in 0..total {
            let idx = plan.indices(t);
            let inputs = train_set.inputs().select_rows(&idx);
            let labels: Vec<usize> = idx.iter().map(|&i| train_set.labels()[i]).collect();
            let batch_weights: Vec<f64> = idx.iter().map(|&i| weights[i]).collect();
            let (_, trace) = forward(&member.spec, &member.params, &inputs).map_err(at(t, m))?;
            update_member(config, &mut member, &trace, &labels, &batch_weights, t).map_err(at(t, m))?;
            let done = t + 1;
            if should_log(config, done, total) {
                members[m] = member.clone();
                log_probe(&mut history, &members, probe_set, offset + done, config.optimizer.lr_at(t))?;
            }
        }
        let (logits, _) = forward(&member.spec, &member.params, train_set.inputs()).map_err(at(total, m))?;
        for ((c, p), &y) in covered.iter_mut().zip(argmax_rows(&logits)).zip(train_set.labels()) {
            *c |= p == y;
        }
        log::debug!(
            "dey member {m}: ensemble covers {}/{} training examples",
            covered.iter().filter(|&&c| c).count(),
            covered.len()
        );
        members[m] = member;
    }
    Ok((Ensemble::new(members)?, history))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weight_rule() {
        assert_eq!(dey_weights(&[false, true], 0.01), vec![1.0, 0.01]);
        assert_eq!(dey_weights(&[true; 3], 0.2), vec![0.2; 3]);
    }
}
