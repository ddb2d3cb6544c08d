//! Prior-draw datasets and their CSV persistence.

use crate::error::CoreError;
use crate::Result;
use ndarray::{Array1, Array2, Axis};
use std::fmt::Write as _;
use std::path::Path;

/// A matrix of prior draws (one row per draw over the grid) paired with the
/// condition vector that generated each row. `k = 0` means unconditioned.
#[derive(Debug, Clone, PartialEq)]
pub struct PriorDataset {
    conditions: Array2<f64>,
    draws: Array2<f64>,
}

impl PriorDataset {
    pub fn new(conditions: Array2<f64>, draws: Array2<f64>) -> Result<Self> {
        if conditions.nrows() != draws.nrows() {
            return Err(CoreError::ShapeMismatch(format!(
                "conditions have {} rows, draws have {}",
                conditions.nrows(),
                draws.nrows()
            )));
        }
        Ok(PriorDataset { conditions, draws })
    }

    /// Dataset with no condition columns.
    pub fn unconditioned(draws: Array2<f64>) -> Self {
        let rows = draws.nrows();
        PriorDataset {
            conditions: Array2::zeros((rows, 0)),
            draws,
        }
    }

    pub fn rows(&self) -> usize {
        self.draws.nrows()
    }

    /// Grid length n (columns of the draw block).
    pub fn n(&self) -> usize {
        self.draws.ncols()
    }

    /// Condition dimensionality k.
    pub fn k(&self) -> usize {
        self.conditions.ncols()
    }

    pub fn draws(&self) -> &Array2<f64> {
        &self.draws
    }

    pub fn conditions(&self) -> &Array2<f64> {
        &self.conditions
    }

    pub fn draw_row(&self, i: usize) -> Array1<f64> {
        self.draws.row(i).to_owned()
    }

    pub fn condition_row(&self, i: usize) -> Array1<f64> {
        self.conditions.row(i).to_owned()
    }

    /// Drops the condition columns (PriorVAE-style training data).
    pub fn strip_conditions(&self) -> PriorDataset {
        PriorDataset::unconditioned(self.draws.clone())
    }

    /// Splits off the first `n_head` rows; the remainder becomes the second
    /// dataset.
    pub fn split_at(&self, n_head: usize) -> Result<(PriorDataset, PriorDataset)> {
        if n_head == 0 || n_head >= self.rows() {
            return Err(CoreError::InvalidParameter(format!(
                "split point {n_head} outside (0, {})",
                self.rows()
            )));
        }
        let (ch, ct) = self.conditions.view().split_at(Axis(0), n_head);
        let (dh, dt) = self.draws.view().split_at(Axis(0), n_head);
        Ok((
            PriorDataset {
                conditions: ch.to_owned(),
                draws: dh.to_owned(),
            },
            PriorDataset {
                conditions: ct.to_owned(),
                draws: dt.to_owned(),
            },
        ))
    }

    /// Writes `c_0,...,c_{k-1},f_0,...,f_{n-1}` rows at full (shortest
    /// round-trip) float precision.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut out = String::new();
        let header: Vec<String> = (0..self.k())
            .map(|j| format!("c_{j}"))
            .chain((0..self.n()).map(|j| format!("f_{j}")))
            .collect();
        out.push_str(&header.join(","));
        out.push('\n');
        for i in 0..self.rows() {
            let mut first = true;
            for &v in self.conditions.row(i).iter().chain(self.draws.row(i).iter()) {
                if !first {
                    out.push(',');
                }
                let _ = write!(out, "{v}");
                first = false;
            }
            out.push('\n');
        }
        std::fs::write(path, out).map_err(|e| CoreError::io(path.display().to_string(), e))
    }

    /// Reads a dataset written by [`PriorDataset::write_csv`].
    pub fn read_csv(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CoreError::io(path.display().to_string(), e))?;
        let p = path.display().to_string();
        let mut lines = text.lines().enumerate();
        let (_, header) = lines
            .next()
            .ok_or_else(|| CoreError::parse(&p, "line 1", "empty file"))?;
        let mut k = 0usize;
        let mut n = 0usize;
        for name in header.split(',') {
            if let Some(idx) = name.strip_prefix("c_") {
                if idx.parse::<usize>().is_ok() {
                    k += 1;
                    continue;
                }
            }
            if let Some(idx) = name.strip_prefix("f_") {
                if idx.parse::<usize>().is_ok() {
                    n += 1;
                    continue;
                }
            }
            return Err(CoreError::parse(
                &p,
                "line 1",
                format!("unexpected column name {name:?}"),
            ));
        }
        if n == 0 {
            return Err(CoreError::parse(&p, "line 1", "no f_* columns"));
        }
        let mut cond = Vec::new();
        let mut draw = Vec::new();
        let mut rows = 0usize;
        for (lineno, line) in lines {
            if line.is_empty() {
                continue;
            }
            let mut fields = line.split(',');
            for j in 0..(k + n) {
                let field = fields.next().ok_or_else(|| {
                    CoreError::parse(
                        &p,
                        format!("line {}", lineno + 1),
                        format!("expected {} fields, found {j}", k + n),
                    )
                })?;
                let v: f64 = field.parse().map_err(|_| {
                    CoreError::parse(
                        &p,
                        format!("line {}, field {}", lineno + 1, j + 1),
                        format!("not a float: {field:?}"),
                    )
                })?;
                if j < k {
                    cond.push(v);
                } else {
                    draw.push(v);
                }
            }
            if fields.next().is_some() {
                return Err(CoreError::parse(
                    &p,
                    format!("line {}", lineno + 1),
                    format!("more than {} fields", k + n),
                ));
            }
            rows += 1;
        }
        let conditions = Array2::from_shape_vec((rows, k), cond)
            .map_err(|e| CoreError::parse(&p, "body", e.to_string()))?;
        let draws = Array2::from_shape_vec((rows, n), draw)
            .map_err(|e| CoreError::parse(&p, "body", e.to_string()))?;
        PriorDataset::new(conditions, draws)
    }
}
