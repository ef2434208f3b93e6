use std::collections::BTreeMap;
use std::fmt::Write;

use serde::{Deserialize, Serialize};

use super::config::Cell;
use super::run::RunRecord;
use crate::ensemble::OracleReport;
use crate::error::{Error, Result};
use crate::trainers::Method;

/// Published CIFAR-10 oracle accuracies (percent) by ensemble size 1..=6, for
/// orientation only. Desk-scale runs use far smaller data and networks.
pub mod reference {
    pub const CIFAR10_SMCL: [f64; 6] = [77.11, 85.47, 88.65, 93.1, 94.29, 96.2];
    pub const CIFAR10_MCL: [f64; 6] = [77.22, 84.69, 88.44, 92.09, 94.64, 95.53];
    pub const CIFAR10_DEY: [f64; 6] = [77.11, 83.3, 86.04, 87.35, 88.25, 88.84];
    pub const CIFAR10_INDEPENDENT: [f64; 6] = [77.11, 83.03, 86.58, 88.51, 90.09, 92.33];
}

pub const SWEEP_COLUMNS: [&str; 7] = [
    "method",
    "M",
    "k",
    "seed",
    "oracle_accuracy",
    "oracle_loss",
    "wall_clock_seconds",
];

pub const SUMMARY_COLUMNS: [&str; 7] = [
    "method",
    "M",
    "k",
    "seeds",
    "mean_oracle_accuracy",
    "mean_oracle_loss",
    "mean_wall_clock_seconds",
];

/// One row per record in the given order, then a blank line, `# summary`, and
/// means over seeds per `(method, M, k)` in sorted order.
pub fn emit_sweep_table(records: &[&RunRecord]) -> String {
    let mut out = SWEEP_COLUMNS.join(",");
    out.push('\n');
    let mut groups: BTreeMap<(Method, usize, usize), Vec<&RunRecord>> = BTreeMap::new();
    for r in records {
        let _ = writeln!(
            out,
            "{},{},{},{},{:.6},{:.6},{:.6}",
            r.cell.method, r.cell.members, r.cell.k, r.cell.seed,
            r.report.oracle_accuracy, r.report.oracle_loss, r.wall_clock_seconds
        );
        groups.entry((r.cell.method, r.cell.members, r.cell.k)).or_default().push(r);
    }
    out.push_str("\n# summary\n");
    out.push_str(&SUMMARY_COLUMNS.join(","));
    out.push('\n');
    for ((method, m, k), rs) in groups {
        let n = rs.len() as f64;
        let mean = |f: fn(&RunRecord) -> f64| rs.iter().map(|r| f(r)).sum::<f64>() / n;
        let _ = writeln!(
            out,
            "{method},{m},{k},{},{:.6},{:.6},{:.6}",
            rs.len(),
            mean(|r| r.report.oracle_accuracy),
            mean(|r| r.report.oracle_loss),
            mean(|r| r.wall_clock_seconds)
        );
    }
    out
}

/// Which class a member wins most often, and its share of that class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MemberMajority {
    pub member: usize,
    pub majority_class: Option<usize>,
    pub share_percent: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpecializationReport {
    pub label: String,
    pub cell: Option<Cell>,
    pub split: String,
    pub winner_distribution: Vec<Vec<Option<f64>>>,
    pub specialization_entropy: Option<f64>,
    pub missing_classes: Vec<usize>,
    pub member_majority: Vec<MemberMajority>,
}

/// Per-class winner shares of a `k = 1` record plus a per-member summary.
pub fn emit_specialization_report(record: &RunRecord) -> Result<SpecializationReport> {
    if record.cell.k != 1 {
        return Err(Error::InvalidConfig(format!(
            "specialization reports need a k=1 record, {} has k={}",
            record.cell.id(),
            record.cell.k
        )));
    }
    specialization_report(record.cell.id(), Some(record.cell), &record.report)
}

/// Specialization view of any report; `label` names the source.
pub fn specialization_report(label: String, cell: Option<Cell>, report: &OracleReport) -> Result<SpecializationReport> {
    let dist = &report.winner_distribution;
    if dist.is_empty() || dist[0].is_empty() {
        return Err(Error::InvalidConfig(format!("{label} has no class-wise winner distribution")));
    }
    let members = dist[0].len();
    let member_majority = (0..members)
        .map(|m| {
            let best = dist
                .iter()
                .enumerate()
                .filter(|(_, row)| row[m].is_finite() && row[m] > 0.0)
                .max_by(|a, b| a.1[m].total_cmp(&b.1[m]).then(b.0.cmp(&a.0)));
            MemberMajority {
                member: m,
                majority_class: best.map(|(c, _)| c),
                share_percent: best.map_or(0.0, |(_, row)| row[m]),
            }
        })
        .collect();
    let finite = |v: f64| v.is_finite().then_some(v);
    Ok(SpecializationReport {
        label,
        cell,
        split: report.split.clone(),
        winner_distribution: dist.iter().map(|r| r.iter().copied().map(finite).collect()).collect(),
        specialization_entropy: finite(report.specialization_entropy),
        missing_classes: report.missing_classes.clone(),
        member_majority,
    })
}

/// MCL versus sMCL training time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingComparison {
    pub smcl_seconds: f64,
    pub mcl_seconds: f64,
    /// `mcl_seconds / smcl_seconds`
    pub ratio: f64,
}

pub fn compare_timing(smcl: &RunRecord, mcl: &RunRecord) -> Result<TimingComparison> {
    if smcl.cell.method != Method::Smcl || mcl.cell.method != Method::Mcl {
        return Err(Error::InvalidConfig(format!(
            "timing comparison needs an smcl and an mcl record, got {} and {}",
            smcl.cell.method, mcl.cell.method
        )));
    }
    if smcl.wall_clock_seconds <= 0.0 {
        return Err(Error::InvalidConfig("smcl record has no measured time".into()));
    }
    Ok(TimingComparison {
        smcl_seconds: smcl.wall_clock_seconds,
        mcl_seconds: mcl.wall_clock_seconds,
        ratio: mcl.wall_clock_seconds / smcl.wall_clock_seconds,
    })
}

/// Pairs every sMCL record with the MCL record of the same `(M, k, seed)`.
pub fn compare_sweep_timing(records: &[&RunRecord]) -> Result<Vec<(Cell, TimingComparison)>> {
    records
        .iter()
        .filter(|r| r.cell.method == Method::Smcl)
        .map(|s| {
            let mcl = records
                .iter()
                .find(|r| {
                    r.cell.method == Method::Mcl
                        && (r.cell.members, r.cell.k, r.cell.seed) == (s.cell.members, s.cell.k, s.cell.seed)
                })
                .ok_or_else(|| Error::InvalidConfig(format!("no mcl counterpart for {}", s.cell.id())))?;
            Ok((s.cell, compare_timing(s, mcl)?))
        })
        .collect()
}
