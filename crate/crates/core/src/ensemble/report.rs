use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Oracle metrics of an ensemble on one labeled set.
///
/// `winner_distribution` is `C×M` in percent; classes absent from the set are
/// listed in `missing_classes` and their rows serialize as JSON `null`s.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub oracle_loss: f64,
    pub oracle_accuracy: f64,
    pub per_member_accuracy: Vec<f64>,
    #[serde(serialize_with = "nan_as_null", deserialize_with = "null_as_nan")]
    pub winner_distribution: Vec<Vec<f64>>,
    #[serde(serialize_with = "scalar_nan_as_null", deserialize_with = "scalar_null_as_nan")]
    pub specialization_entropy: f64,
    #[serde(default)]
    pub missing_classes: Vec<usize>,
    /// Split tag of the evaluated data, e.g. `"test"`.
    #[serde(default)]
    pub split: String,
    #[serde(default)]
    pub example_count: usize,
}

fn to_option(v: f64) -> Option<f64> {
    v.is_finite().then_some(v)
}

fn nan_as_null<S: Serializer>(rows: &[Vec<f64>], s: S) -> Result<S::Ok, S::Error> {
    let rows: Vec<Vec<Option<f64>>> = rows.iter().map(|r| r.iter().copied().map(to_option).collect()).collect();
    rows.serialize(s)
}

fn null_as_nan<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Vec<f64>>, D::Error> {
    let rows: Vec<Vec<Option<f64>>> = Vec::deserialize(d)?;
    Ok(rows
        .into_iter()
        .map(|r| r.into_iter().map(|v| v.unwrap_or(f64::NAN)).collect())
        .collect())
}

fn scalar_nan_as_null<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
    to_option(*v).serialize(s)
}

fn scalar_null_as_nan<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
    Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::NAN))
}

impl OracleReport {
    /// Checks the report's structural contract, returning a description of the first violation.
    pub fn check_invariants(&self) -> Result<(), String> {
        if !(0.0..=1.0).contains(&self.oracle_accuracy) {
            return Err(format!("oracle accuracy {} outside [0,1]", self.oracle_accuracy));
        }
        let best = self.per_member_accuracy.iter().copied().fold(0.0, f64::max);
        if self.oracle_accuracy < best {
            return Err(format!(
                "oracle accuracy {} below best member {best}",
                self.oracle_accuracy
            ));
        }
        for (c, row) in self.winner_distribution.iter().enumerate() {
            if self.missing_classes.contains(&c) {
                continue;
            }
            let total: f64 = row.iter().sum();
            if (total - 100.0).abs() > 1e-9 {
                return Err(format!("winner distribution row {c} sums to {total}"));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nan_rows_survive_json() {
        let report = OracleReport {
            oracle_loss: 0.25,
            oracle_accuracy: 0.9,
            per_member_accuracy: vec![0.5, 0.6],
            winner_distribution: vec![vec![40.0, 60.0], vec![f64::NAN, f64::NAN]],
            specialization_entropy: 0.67,
            missing_classes: vec![1],
            split: "test".into(),
            example_count: 10,
        };
        let json = serde_json::to_string(&report).unwrap();
        assert!(json.contains("[null,null]"));
        let back: OracleReport = serde_json::from_str(&json).unwrap();
        assert!(back.winner_distribution[1][0].is_nan());
        assert_eq!(back.winner_distribution[0], vec![40.0, 60.0]);
        report.check_invariants().unwrap();
    }
}
