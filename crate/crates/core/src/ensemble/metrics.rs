use super::assignment::{AssignmentMatrix, LossMatrix};
use super::members::{Ensemble, Member};
use crate::engine::{argmax_rows, forward, loss_softmax_xent, Tensor};
use crate::error::{Error, Result};
use crate::parallel;

/// Entry `(i, m)` is the cross-entropy of member `m` on example `i`.
pub fn per_member_losses(ensemble: &Ensemble, inputs: &Tensor, labels: &[usize]) -> Result<LossMatrix> {
    member_losses(ensemble.members(), inputs, labels)
}

/// [`per_member_losses`] over a bare slice of members.
pub fn member_losses(members: &[Member], inputs: &Tensor, labels: &[usize]) -> Result<LossMatrix> {
    let columns = parallel::map(members, |m| {
        let (logits, _) = forward(&m.spec, &m.params, inputs)?;
        loss_softmax_xent(&logits, labels)
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    LossMatrix::from_columns(&columns)
}

/// Mean over examples of the smallest member loss. Multiply by `B` for the summed form.
pub fn oracle_loss(losses: &LossMatrix) -> f64 {
    let total: f64 = (0..losses.rows())
        .map(|i| losses.row(i).iter().copied().fold(f64::INFINITY, f64::min))
        .sum();
    total / losses.rows() as f64
}

/// Fraction of examples on which at least one prediction vector is right.
pub fn oracle_accuracy_from_predictions(predictions: &[Vec<usize>], labels: &[usize]) -> f64 {
    if labels.is_empty() {
        return 0.0;
    }
    let hits = labels
        .iter()
        .enumerate()
        .filter(|&(i, y)| predictions.iter().any(|p| p[i] == *y))
        .count();
    hits as f64 / labels.len() as f64
}

pub fn oracle_accuracy(ensemble: &Ensemble, inputs: &Tensor, labels: &[usize]) -> Result<f64> {
    let predictions: Vec<Vec<usize>> = ensemble.logits(inputs)?.iter().map(argmax_rows).collect();
    Ok(oracle_accuracy_from_predictions(&predictions, labels))
}

pub fn per_member_accuracy(ensemble: &Ensemble, inputs: &Tensor, labels: &[usize]) -> Result<Vec<f64>> {
    Ok(ensemble
        .logits(inputs)?
        .iter()
        .map(|z| oracle_accuracy_from_predictions(&[argmax_rows(z)], labels))
        .collect())
}

/// Per-class share (percent) of oracle wins held by each member.
#[derive(Debug, Clone, PartialEq)]
pub struct WinnerDistribution {
    /// `C×M`; rows of classes absent from the evaluated set are all NaN.
    pub percentages: Vec<Vec<f64>>,
    pub missing_classes: Vec<usize>,
}

/// Requires a `k = 1` assignment over a labeled set.
pub fn winner_distribution(
    assignment: &AssignmentMatrix,
    labels: &[usize],
    class_count: usize,
) -> Result<WinnerDistribution> {
    let winners = assignment.winners().ok_or_else(|| {
        Error::InvalidConfig(format!(
            "winner distribution needs a k=1 assignment, got k={}",
            assignment.k()
        ))
    })?;
    if labels.len() != assignment.rows() {
        return Err(Error::Shape(format!(
            "{} labels for {} assigned examples",
            labels.len(),
            assignment.rows()
        )));
    }
    let members = assignment.cols();
    let mut counts = vec![vec![0usize; members]; class_count];
    for (&y, &w) in labels.iter().zip(&winners) {
        if y >= class_count {
            return Err(Error::LabelOutOfRange {
                label: y,
                classes: class_count,
                index: 0,
            });
        }
        counts[y][w] += 1;
    }
    let mut missing_classes = Vec::new();
    let percentages = counts
        .iter()
        .enumerate()
        .map(|(c, row)| {
            let total: usize = row.iter().sum();
            if total == 0 {
                missing_classes.push(c);
                vec![f64::NAN; members]
            } else {
                row.iter().map(|&n| 100.0 * n as f64 / total as f64).collect()
            }
        })
        .collect();
    Ok(WinnerDistribution {
        percentages,
        missing_classes,
    })
}

/// Mean over classes of the natural-log Shannon entropy of each row. Rows
/// containing NaN (absent classes) are skipped; NaN if no row remains.
pub fn specialization_entropy(distribution: &[Vec<f64>]) -> f64 {
    let entropies: Vec<f64> = distribution
        .iter()
        .filter(|row| row.iter().all(|v| v.is_finite()))
        .map(|row| {
            let total: f64 = row.iter().sum();
            row.iter()
                .filter(|&&v| v > 0.0)
                .map(|&v| {
                    let p = v / total;
                    -p * p.ln()
                })
                .sum::<f64>()
                + 0.0
        })
        .collect();
    if entropies.is_empty() {
        f64::NAN
    } else {
        entropies.iter().sum::<f64>() / entropies.len() as f64
    }
}
