use super::config::TrainConfig;
use super::history::{HistoryRecord, TrainHistory};
use crate::datasets::Dataset;
use crate::engine::{backward, sgd_step, ForwardTrace, NetworkSpec};
use crate::ensemble::{member_losses, oracle_loss, Ensemble, Member};
use crate::error::{Error, Result};

pub(crate) fn member_spec(config: &TrainConfig, train: &Dataset) -> Result<NetworkSpec> {
    NetworkSpec::mlp(train.input_dim(), &config.hidden_layers, train.class_count())
}

pub(crate) fn check_inputs(config: &TrainConfig, train: &Dataset, probe: &Dataset) -> Result<()> {
    config.validate()?;
    if train.is_empty() {
        return Err(Error::EmptyDataset("training set".into()));
    }
    if probe.input_dim() != train.input_dim() {
        return Err(Error::Shape(format!(
            "probe set has {} features, training set {}",
            probe.input_dim(),
            train.input_dim()
        )));
    }
    Ok(())
}

/// Fresh members seeded `seed + m`, or a validated copy of `init` with momentum cleared.
pub(crate) fn initial_ensemble(config: &TrainConfig, spec: &NetworkSpec, init: Option<Ensemble>) -> Result<Ensemble> {
    match init {
        None => Ensemble::init(spec, config.member_count, config.seed),
        Some(mut e) => {
            if e.len() != config.member_count {
                return Err(Error::InvalidConfig(format!(
                    "initial ensemble has {} members, config asks for {}",
                    e.len(),
                    config.member_count
                )));
            }
            if e.input_dim() != spec.input_dim() || e.class_count() != spec.class_count() {
                return Err(Error::Shape(format!(
                    "initial ensemble maps {}→{}, data needs {}→{}",
                    e.input_dim(),
                    e.class_count(),
                    spec.input_dim(),
                    spec.class_count()
                )));
            }
            for m in e.members_mut() {
                m.params.reset_momentum();
            }
            Ok(e)
        }
    }
}

/// Tags engine failures with where they happened.
pub(crate) fn at(iteration: usize, member: usize) -> impl Fn(Error) -> Error {
    move |e| match e {
        Error::NonFinite(detail) => Error::NumericalAbort {
            iteration,
            member,
            detail: format!("non-finite {detail}"),
        },
        other => other,
    }
}

/// Backward with `weights` through a fresh trace, then one SGD step.
/// Returns `false` (and leaves the member untouched) if every weight is zero.
pub(crate) fn update_member(
    config: &TrainConfig,
    member: &mut Member,
    trace: &ForwardTrace,
    labels: &[usize],
    weights: &[f64],
    iteration: usize,
) -> Result<bool> {
    if weights.iter().all(|&w| w == 0.0) {
        return Ok(false);
    }
    let grads = backward(&member.spec, &member.params, trace, labels, weights, config.loss_reduction)?;
    sgd_step(&mut member.params, &grads, &config.optimizer, iteration)?;
    Ok(true)
}

/// Appends a probe evaluation of `members` after `iteration` steps.
pub(crate) fn log_probe(
    history: &mut TrainHistory,
    members: &[Member],
    probe: &Dataset,
    iteration: usize,
    learning_rate: f64,
) -> Result<()> {
    let losses = member_losses(members, probe.inputs(), probe.labels())?;
    history.push(HistoryRecord {
        iteration,
        oracle_loss: oracle_loss(&losses),
        member_losses: losses.column_means(),
        learning_rate,
    });
    log::debug!(
        "iteration {iteration}: probe oracle loss {:.5}",
        history.last().expect("just pushed").oracle_loss
    );
    Ok(())
}

pub(crate) fn should_log(config: &TrainConfig, done: usize, total: usize) -> bool {
    done.is_multiple_of(config.log_interval) || done == total
}
