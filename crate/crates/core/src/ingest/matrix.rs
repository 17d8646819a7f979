use nalgebra::DMatrix;
use serde::Serialize;

use super::instrument::InstrumentDefinition;
use super::record::RatingRecord;
use crate::error::{Error, Result};

/// Complete cases × items data matrix. Cells hold Likert integers for
/// response data; simulated continuous data can be wrapped as well.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RatingMatrix {
    /// `(respondent_id, feature_id)` per row.
    pub rows: Vec<(String, String)>,
    pub item_ids: Vec<String>,
    #[serde(skip)]
    pub values: DMatrix<f64>,
}

impl RatingMatrix {
    pub fn from_values(values: DMatrix<f64>, item_ids: Vec<String>) -> Result<Self> {
        if values.ncols() != item_ids.len() {
            return Err(Error::InvalidInput(format!(
                "{} columns but {} item ids",
                values.ncols(),
                item_ids.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(
                "data matrix has missing or non-finite cells".into(),
            ));
        }
        let rows = (0..values.nrows())
            .map(|i| (format!("row{i}"), String::new()))
            .collect();
        Ok(RatingMatrix {
            rows,
            item_ids,
            values,
        })
    }

    pub fn n(&self) -> usize {
        self.values.nrows()
    }

    pub fn p(&self) -> usize {
        self.values.ncols()
    }

    pub fn column_means(&self) -> Vec<f64> {
        (0..self.p())
            .map(|j| self.values.column(j).mean())
            .collect()
    }

    /// Keep only the given columns, in the given order.
    pub fn select_columns(&self, cols: &[usize]) -> RatingMatrix {
        RatingMatrix {
            rows: self.rows.clone(),
            item_ids: cols.iter().map(|&c| self.item_ids[c].clone()).collect(),
            values: self.values.select_columns(cols.iter()),
        }
    }
}

/// Build the data matrix for one instrument. Incomplete records are
/// excluded (listwise) and their keys returned alongside.
pub fn to_matrix(
    records: &[RatingRecord],
    instrument: &InstrumentDefinition,
) -> Result<(RatingMatrix, Vec<String>)> {
    if let Some(other) = records.iter().find(|r| r.instrument != instrument.name) {
        return Err(Error::InvalidInput(format!(
            "mixed instruments: expected `{}`, found `{}` for {}",
            instrument.name,
            other.instrument,
            other.key()
        )));
    }
    let mut rows: Vec<&RatingRecord> = Vec::with_capacity(records.len());
    let mut excluded = Vec::new();
    for r in records {
        if r.responses.len() == instrument.len() && r.is_complete() {
            rows.push(r);
        } else {
            excluded.push(r.key());
        }
    }
    rows.sort_by(|a, b| {
        (a.respondent_id.as_str(), a.feature_id.as_str())
            .cmp(&(b.respondent_id.as_str(), b.feature_id.as_str()))
    });
    let p = instrument.len();
    let values = DMatrix::from_fn(rows.len(), p, |i, j| rows[i].responses[j].unwrap() as f64);
    Ok((
        RatingMatrix {
            rows: rows
                .iter()
                .map(|r| (r.respondent_id.clone(), r.feature_id.clone()))
                .collect(),
            item_ids: instrument.item_labels(),
            values,
        },
        excluded,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::record::Split;

    fn rec(resp: &str, vals: Vec<Option<u8>>) -> RatingRecord {
        RatingRecord {
            respondent_id: resp.into(),
            feature_id: "bmi".into(),
            instrument: "fus-numerical".into(),
            kind: crate::ingest::InstrumentKind::Numerical,
            responses: vals,
            attention_response: 3,
            duration_seconds: 1.0,
            split: Split::Unassigned,
        }
    }

    #[test]
    fn shape_and_order() {
        let inst = InstrumentDefinition::numerical();
        let recs = vec![
            rec("c", vec![Some(1); 8]),
            rec("a", vec![Some(2); 8]),
            rec("b", vec![Some(3); 8]),
        ];
        let (m, excluded) = to_matrix(&recs, &inst).unwrap();
        assert_eq!((m.n(), m.p()), (3, 8));
        assert!(excluded.is_empty());
        assert_eq!(m.rows[0].0, "a");
        assert_eq!(m.values[(0, 0)], 2.0);
        assert_eq!(m.column_means()[0], 2.0);
    }

    #[test]
    fn listwise_exclusion() {
        let inst = InstrumentDefinition::numerical();
        let mut partial = vec![Some(4); 8];
        partial[5] = None;
        let recs = vec![rec("a", vec![Some(2); 8]), rec("b", partial)];
        let (m, excluded) = to_matrix(&recs, &inst).unwrap();
        assert_eq!(m.n(), 1);
        assert_eq!(excluded, vec!["b/bmi".to_string()]);
    }

    #[test]
    fn mixed_instruments_rejected() {
        let inst = InstrumentDefinition::numerical();
        let mut other = rec("a", vec![Some(2); 9]);
        other.instrument = "fus-categorical".into();
        assert!(to_matrix(&[other], &inst).is_err());
    }
}
