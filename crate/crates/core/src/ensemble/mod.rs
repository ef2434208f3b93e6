//! Ensembles, per-member loss matrices, winner assignment and oracle metrics.

mod assignment;
mod members;
mod metrics;
mod report;

pub use assignment::{assign_winners, AssignmentMatrix, LossMatrix};
pub use members::{Ensemble, Member};
pub use metrics::{
    member_losses, oracle_accuracy, oracle_accuracy_from_predictions, oracle_loss, per_member_accuracy,
    per_member_losses, specialization_entropy, winner_distribution, WinnerDistribution,
};
pub use report::OracleReport;
