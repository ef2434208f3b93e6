use crate::datasets::Dataset;
use crate::engine::{argmax_rows, forward, loss_softmax_xent};
use crate::ensemble::{
    assign_winners, oracle_accuracy_from_predictions, oracle_loss, specialization_entropy,
    winner_distribution, Ensemble, LossMatrix, OracleReport,
};
use crate::error::Result;
use crate::parallel;

/// Rows per forward pass during evaluation.
pub const EVAL_BATCH: usize = 1024;

/// Oracle metrics of `ensemble` over all of `test_set`.
///
/// Winner shares come from a `k = 1` min-loss assignment on this set; the
/// set's split tag is recorded in the report.
pub fn evaluate(ensemble: &Ensemble, test_set: &Dataset) -> Result<OracleReport> {
    let n = test_set.len();
    let starts: Vec<usize> = (0..n).step_by(EVAL_BATCH).collect();
    let per_member = parallel::map(ensemble.members(), |member| -> Result<(Vec<f64>, Vec<usize>)> {
        let mut losses = Vec::with_capacity(n);
        let mut predictions = Vec::with_capacity(n);
        for &start in &starts {
            let end = (start + EVAL_BATCH).min(n);
            let idx: Vec<usize> = (start..end).collect();
            let (logits, _) = forward(&member.spec, &member.params, &test_set.inputs().select_rows(&idx))?;
            losses.extend(loss_softmax_xent(&logits, &test_set.labels()[start..end])?);
            predictions.extend(argmax_rows(&logits));
        }
        Ok((losses, predictions))
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let (columns, predictions): (Vec<_>, Vec<_>) = per_member.into_iter().unzip();

    let losses = LossMatrix::from_columns(&columns)?;
    let labels = test_set.labels();
    let assignment = assign_winners(&losses, 1)?;
    let distribution = winner_distribution(&assignment, labels, test_set.class_count().max(ensemble.class_count()))?;
    Ok(OracleReport {
        oracle_loss: oracle_loss(&losses),
        oracle_accuracy: oracle_accuracy_from_predictions(&predictions, labels),
        per_member_accuracy: predictions
            .iter()
            .map(|p| oracle_accuracy_from_predictions(std::slice::from_ref(p), labels))
            .collect(),
        specialization_entropy: specialization_entropy(&distribution.percentages),
        winner_distribution: distribution.percentages,
        missing_classes: distribution.missing_classes,
        split: test_set.split_tag().to_string(),
        example_count: n,
    })
}
