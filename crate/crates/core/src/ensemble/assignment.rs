use crate::error::{Error, Result};

/// `B×M` matrix of per-example, per-member losses. Entries are finite and non-negative.
#[derive(Debug, Clone, PartialEq)]
pub struct LossMatrix {
    rows: usize,
    cols: usize,
    values: Vec<f64>,
}

impl LossMatrix {
    pub fn new(rows: usize, cols: usize, values: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 || values.len() != rows * cols {
            return Err(Error::Shape(format!(
                "loss matrix {rows}×{cols} with {} values",
                values.len()
            )));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(Error::NonFinite(format!("loss matrix entry {v}")));
        }
        Ok(LossMatrix { rows, cols, values })
    }

    /// Builds the matrix from one loss vector per member.
    pub fn from_columns(columns: &[Vec<f64>]) -> Result<Self> {
        let rows = columns.first().map_or(0, Vec::len);
        if columns.iter().any(|c| c.len() != rows) {
            return Err(Error::Shape("loss columns differ in length".into()));
        }
        let mut values = Vec::with_capacity(rows * columns.len());
        for i in 0..rows {
            values.extend(columns.iter().map(|c| c[i]));
        }
        LossMatrix::new(rows, columns.len(), values)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, m: usize) -> f64 {
        self.values[i * self.cols + m]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, m: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.get(i, m)).collect()
    }

    pub fn columns(&self) -> Vec<Vec<f64>> {
        (0..self.cols).map(|m| self.column(m)).collect()
    }

    /// Mean of each column.
    pub fn column_means(&self) -> Vec<f64> {
        (0..self.cols)
            .map(|m| (0..self.rows).map(|i| self.get(i, m)).sum::<f64>() / self.rows as f64)
            .collect()
    }
}

/// Binary `B×M` indicator matrix with exactly `k` ones per row.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AssignmentMatrix {
    rows: usize,
    cols: usize,
    k: usize,
    indicators: Vec<u8>,
}

impl AssignmentMatrix {
    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn get(&self, i: usize, m: usize) -> u8 {
        self.indicators[i * self.cols + m]
    }

    pub fn row(&self, i: usize) -> &[u8] {
        &self.indicators[i * self.cols..(i + 1) * self.cols]
    }

    /// 0/1 example weights routing gradients to member `m`.
    pub fn member_mask(&self, m: usize) -> Vec<f64> {
        (0..self.rows).map(|i| f64::from(self.get(i, m))).collect()
    }

    /// Number of examples assigned to each member.
    pub fn win_counts(&self) -> Vec<usize> {
        (0..self.cols)
            .map(|m| (0..self.rows).filter(|&i| self.get(i, m) == 1).count())
            .collect()
    }

    /// The single winner of each row; `None` unless `k == 1`.
    pub fn winners(&self) -> Option<Vec<usize>> {
        (self.k == 1).then(|| {
            (0..self.rows)
                .map(|i| self.row(i).iter().position(|&p| p == 1).expect("one winner per row"))
                .collect()
        })
    }

    /// `Σ_{i,m} p_{i,m} · ℓ_{i,m}`.
    pub fn assigned_loss(&self, losses: &LossMatrix) -> f64 {
        (0..self.rows)
            .map(|i| {
                self.row(i)
                    .iter()
                    .zip(losses.row(i))
                    .filter(|(&p, _)| p == 1)
                    .map(|(_, &l)| l)
                    .sum::<f64>()
            })
            .sum()
    }
}

/// Marks the `k` lowest-loss members of every row; ties go to the lower member index.
pub fn assign_winners(losses: &LossMatrix, k: usize) -> Result<AssignmentMatrix> {
    let cols = losses.cols();
    if k == 0 || k > cols {
        return Err(Error::InvalidConfig(format!(
            "winners per example k={k} must satisfy 1 ≤ k ≤ M={cols}"
        )));
    }
    let mut indicators = vec![0u8; losses.rows() * cols];
    let mut order: Vec<usize> = (0..cols).collect();
    for i in 0..losses.rows() {
        let row = losses.row(i);
        order.sort_by(|&a, &b| row[a].total_cmp(&row[b]).then(a.cmp(&b)));
        for &m in &order[..k] {
            indicators[i * cols + m] = 1;
        }
        order.sort_unstable();
    }
    Ok(AssignmentMatrix {
        rows: losses.rows(),
        cols,
        k,
        indicators,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn matrix(rows: &[&[f64]]) -> LossMatrix {
        let cols = rows[0].len();
        LossMatrix::new(rows.len(), cols, rows.concat()).unwrap()
    }

    #[test]
    fn argmin_assignment() {
        let a = assign_winners(&matrix(&[&[1.0, 2.0], &[3.0, 0.0]]), 1).unwrap();
        assert_eq!(a.row(0), &[1, 0]);
        assert_eq!(a.row(1), &[0, 1]);
        assert_eq!(a.winners(), Some(vec![0, 1]));
    }

    #[test]
    fn ties_go_to_lowest_index() {
        let a = assign_winners(&matrix(&[&[2.0, 2.0, 5.0]]), 1).unwrap();
        assert_eq!(a.row(0), &[1, 0, 0]);
        let b = assign_winners(&matrix(&[&[4.0, 1.0, 1.0, 1.0]]), 2).unwrap();
        assert_eq!(b.row(0), &[0, 1, 1, 0]);
    }

    #[test]
    fn k_smallest() {
        let a = assign_winners(&matrix(&[&[3.0, 1.0, 2.0]]), 2).unwrap();
        assert_eq!(a.row(0), &[0, 1, 1]);
        assert_eq!(a.winners(), None);
    }

    #[test]
    fn k_out_of_range() {
        let m = matrix(&[&[1.0, 2.0]]);
        assert!(matches!(assign_winners(&m, 0), Err(Error::InvalidConfig(_))));
        assert!(matches!(assign_winners(&m, 3), Err(Error::InvalidConfig(_))));
    }

    #[test]
    fn loss_matrix_rejects_negative_and_nan() {
        assert!(LossMatrix::new(1, 2, vec![1.0, -0.5]).is_err());
        assert!(LossMatrix::new(1, 2, vec![f64::NAN, 0.5]).is_err());
        assert!(LossMatrix::new(1, 2, vec![1.0]).is_err());
    }

    #[test]
    fn columns_round_trip() {
        let cols = vec![vec![1.0, 2.0, 3.0], vec![4.0, 5.0, 6.0]];
        let m = LossMatrix::from_columns(&cols).unwrap();
        assert_eq!(m.row(1), &[2.0, 5.0]);
        assert_eq!(m.columns(), cols);
    }
}
