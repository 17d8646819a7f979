use std::io::Read;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;

/// Symmetric, unit-diagonal correlation matrix with item labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationMatrix {
    pub item_ids: Vec<String>,
    #[serde(with = "crate::serde_matrix")]
    pub values: DMatrix<f64>,
    /// Cases behind the estimate, when known.
    pub n: Option<usize>,
}

const EXACT_TOL: f64 = 1e-12;
const PSD_TOL: f64 = 1e-8;
/// Tolerance for reference matrices rounded to two decimals.
pub const FILE_TOL: f64 = 5e-3;

impl CorrelationMatrix {
    pub fn new(item_ids: Vec<String>, values: DMatrix<f64>, n: Option<usize>) -> Result<Self> {
        let m = CorrelationMatrix {
            item_ids,
            values,
            n,
        };
        m.validate(EXACT_TOL)?;
        Ok(m)
    }

    pub fn p(&self) -> usize {
        self.values.nrows()
    }

    pub fn with_n(mut self, n: usize) -> Self {
        self.n = Some(n);
        self
    }

    fn validate(&self, tol: f64) -> Result<()> {
        let p = self.values.nrows();
        if p == 0 || self.values.ncols() != p {
            return Err(Error::InvalidInput(
                "correlation matrix must be square and nonempty".into(),
            ));
        }
        if self.item_ids.len() != p {
            return Err(Error::InvalidInput(format!(
                "{p} rows but {} item ids",
                self.item_ids.len()
            )));
        }
        if self
            .values
            .iter()
            .any(|v| !v.is_finite() || v.abs() > 1.0 + tol)
        {
            return Err(Error::InvalidInput(
                "entries must be finite and within [-1, 1]".into(),
            ));
        }
        if linalg::max_abs_asymmetry(&self.values) > tol {
            return Err(Error::InvalidInput("matrix is not symmetric".into()));
        }
        for i in 0..p {
            if (self.values[(i, i)] - 1.0).abs() > tol {
                return Err(Error::InvalidInput(format!(
                    "diagonal entry for `{}` is {}, not 1",
                    self.item_ids[i],
                    self.values[(i, i)]
                )));
            }
        }
        let min_eig = linalg::sym_eigenvalues_desc(&self.values)
            .last()
            .copied()
            .unwrap_or(0.0);
        if min_eig < -PSD_TOL {
            return Err(Error::InvalidInput(format!(
                "matrix is not positive semidefinite (smallest eigenvalue {min_eig:.3e})"
            )));
        }
        Ok(())
    }

    /// Restrict to a subset of items, in the given order.
    pub fn subset(&self, keep: &[usize]) -> CorrelationMatrix {
        CorrelationMatrix {
            item_ids: keep.iter().map(|&i| self.item_ids[i].clone()).collect(),
            values: linalg::principal_submatrix(&self.values, keep),
            n: self.n,
        }
    }

    /// Restrict to the named items, in the given order.
    pub fn select(&self, ids: &[String]) -> Result<CorrelationMatrix> {
        let pos = ids
            .iter()
            .map(|id| {
                self.position(id)
                    .ok_or_else(|| Error::InvalidInput(format!("unknown item `{id}`")))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(self.subset(&pos))
    }

    pub fn position(&self, id: &str) -> Option<usize> {
        self.item_ids.iter().position(|x| x == id)
    }

    /// Load a square CSV with an item-id header row and first column.
    ///
    /// Blank cells are filled from the mirrored entry, so lower-triangular
    /// files are accepted. Symmetry and the unit diagonal are checked at
    /// [`FILE_TOL`]; the result is symmetrized by averaging and its diagonal
    /// set to exactly one.
    pub fn from_csv<R: Read>(source: R) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_reader(source);
        let header = reader.headers()?.clone();
        let ids: Vec<String> = header.iter().skip(1).map(str::to_string).collect();
        let p = ids.len();
        let mut cells: Vec<Vec<Option<f64>>> = Vec::with_capacity(p);
        for (r, row) in reader.records().enumerate() {
            let row = row?;
            if row.len() != p + 1 {
                return Err(Error::Row {
                    line: r + 2,
                    message: format!("expected {} fields, found {}", p + 1, row.len()),
                });
            }
            if row[0] != ids[r.min(p.saturating_sub(1))] {
                return Err(Error::Schema(format!(
                    "row {} is labelled `{}`, expected `{}`",
                    r + 1,
                    &row[0],
                    ids.get(r).map_or("", String::as_str)
                )));
            }
            let parsed = row
                .iter()
                .skip(1)
                .map(|c| {
                    if c.is_empty() {
                        Ok(None)
                    } else {
                        c.parse::<f64>().map(Some).map_err(|_| Error::Row {
                            line: r + 2,
                            message: format!("`{c}` is not a number"),
                        })
                    }
                })
                .collect::<Result<Vec<_>>>()?;
            cells.push(parsed);
        }
        if cells.len() != p {
            return Err(Error::Schema(format!(
                "{} header items but {} rows",
                p,
                cells.len()
            )));
        }
        let mut values = DMatrix::zeros(p, p);
        for i in 0..p {
            for j in 0..p {
                let v = match (cells[i][j], cells[j][i]) {
                    (Some(a), Some(b)) => {
                        if (a - b).abs() > FILE_TOL {
                            return Err(Error::InvalidInput(format!(
                                "entries ({},{}) and ({},{}) differ by more than {FILE_TOL}",
                                ids[i], ids[j], ids[j], ids[i]
                            )));
                        }
                        0.5 * (a + b)
                    }
                    (Some(a), None) | (None, Some(a)) => a,
                    (None, None) if i == j => 1.0,
                    (None, None) => {
                        return Err(Error::InvalidInput(format!(
                            "missing entry ({}, {})",
                            ids[i], ids[j]
                        )))
                    }
                };
                values[(i, j)] = v;
            }
        }
        for i in 0..p {
            if (values[(i, i)] - 1.0).abs() > FILE_TOL {
                return Err(Error::InvalidInput(format!(
                    "diagonal entry for `{}` is not 1",
                    ids[i]
                )));
            }
            values[(i, i)] = 1.0;
        }
        let m = CorrelationMatrix {
            item_ids: ids,
            values,
            n: None,
        };
        m.validate(EXACT_TOL)?;
        Ok(m)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("item");
        for id in &self.item_ids {
            out.push(',');
            out.push_str(id);
        }
        out.push('\n');
        for i in 0..self.p() {
            out.push_str(&self.item_ids[i]);
            for j in 0..self.p() {
                out.push_str(&format!(",{}", self.values[(i, j)]));
            }
            out.push('\n');
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lower_triangular_file() {
        let text = "item,a,b,c\na,1,,\nb,0.5,1,\nc,0.25,0.4,1\n";
        let m = CorrelationMatrix::from_csv(text.as_bytes()).unwrap();
        assert_eq!(m.values[(0, 2)], 0.25);
        assert_eq!(m.values[(2, 0)], 0.25);
    }

    #[test]
    fn symmetrizes_rounding_noise() {
        let text = "item,a,b\na,1,0.502\nb,0.498,1\n";
        let m = CorrelationMatrix::from_csv(text.as_bytes()).unwrap();
        assert!((m.values[(0, 1)] - 0.5).abs() < 1e-15);
        let bad = "item,a,b\na,1,0.51\nb,0.49,1\n";
        assert!(CorrelationMatrix::from_csv(bad.as_bytes()).is_err());
    }

    #[test]
    fn rejects_non_psd() {
        let v = DMatrix::from_row_slice(3, 3, &[1.0, 0.9, -0.9, 0.9, 1.0, 0.9, -0.9, 0.9, 1.0]);
        assert!(CorrelationMatrix::new(vec!["a".into(), "b".into(), "c".into()], v, None).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let text = "item,a,b\na,1,0.3\nb,0.3,1\n";
        let m = CorrelationMatrix::from_csv(text.as_bytes()).unwrap();
        assert_eq!(
            CorrelationMatrix::from_csv(m.to_csv().as_bytes()).unwrap(),
            m
        );
    }
}
