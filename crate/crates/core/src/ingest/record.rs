//! Rating records and the response CSV format.
//!
//! Header: `respondent_id,feature_id,instrument,i1..iN,attention,duration_s`.
//! A file may mix instruments of different lengths; `N` is then the longest
//! instrument and cells past a shorter instrument's last item stay empty.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::instrument::{InstrumentDefinition, InstrumentKind};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Efa,
    Cfa,
    #[default]
    Unassigned,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatingRecord {
    pub respondent_id: String,
    pub feature_id: String,
    pub instrument: String,
    pub kind: InstrumentKind,
    /// One slot per instrument item, in instrument order; `None` is missing.
    pub responses: Vec<Option<u8>>,
    pub attention_response: u8,
    pub duration_seconds: f64,
    #[serde(default)]
    pub split: Split,
}

impl RatingRecord {
    pub fn key(&self) -> String {
        format!("{}/{}", self.respondent_id, self.feature_id)
    }

    pub fn is_complete(&self) -> bool {
        self.responses.iter().all(Option::is_some)
    }
}

/// A rejected data row.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RowError {
    pub line: usize,
    pub column: Option<String>,
    pub message: String,
}

impl std::fmt::Display for RowError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match &self.column {
            Some(c) => write!(f, "line {}: column {}: {}", self.line, c, self.message),
            None => write!(f, "line {}: {}", self.line, self.message),
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct ParsedResponses {
    pub records: Vec<RatingRecord>,
    pub errors: Vec<RowError>,
}

const LEADING: [&str; 3] = ["respondent_id", "feature_id", "instrument"];
const TRAILING: [&str; 2] = ["attention", "duration_s"];

/// Parse a response CSV. Rows naming an instrument absent from `instruments`
/// or carrying invalid cells become [`RowError`]s; header problems are fatal.
pub fn parse_responses<R: Read>(
    source: R,
    instruments: &[InstrumentDefinition],
) -> Result<ParsedResponses> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(source);
    let header = reader.headers()?.clone();
    let n_items = check_header(&header, instruments)?;

    let mut out = ParsedResponses::default();
    for (row_no, row) in reader.records().enumerate() {
        // header is line 1
        let line = row_no + 2;
        let row = match row {
            Ok(r) => r,
            Err(e) => {
                out.errors.push(RowError {
                    line,
                    column: None,
                    message: e.to_string(),
                });
                continue;
            }
        };
        match parse_row(&row, n_items, instruments, line) {
            Ok(rec) => out.records.push(rec),
            Err(e) => out.errors.push(e),
        }
    }
    Ok(out)
}

fn check_header(header: &csv::StringRecord, instruments: &[InstrumentDefinition]) -> Result<usize> {
    let cols: Vec<&str> = header.iter().collect();
    if cols.len() < LEADING.len() + TRAILING.len() + 1 {
        return Err(Error::Schema(format!(
            "header has only {} columns",
            cols.len()
        )));
    }
    for (i, expected) in LEADING.iter().enumerate() {
        if cols[i] != *expected {
            return Err(Error::Schema(format!(
                "column {} must be `{}`, found `{}`",
                i + 1,
                expected,
                cols[i]
            )));
        }
    }
    let tail = &cols[cols.len() - TRAILING.len()..];
    if tail != TRAILING {
        return Err(Error::Schema(format!(
            "last columns must be `attention,duration_s`, found `{}`",
            tail.join(",")
        )));
    }
    let item_cols = &cols[LEADING.len()..cols.len() - TRAILING.len()];
    let max_items = instruments.iter().map(|i| i.len()).max().unwrap_or(0);
    for (k, name) in item_cols.iter().enumerate() {
        let expected = format!("i{}", k + 1);
        if *name != expected {
            return Err(Error::Schema(format!(
                "unknown item column `{name}` (expected `{expected}`)"
            )));
        }
        if k + 1 > max_items {
            return Err(Error::Schema(format!(
                "unknown item column `{name}`: no instrument has {} items",
                k + 1
            )));
        }
    }
    Ok(item_cols.len())
}

fn parse_row(
    row: &csv::StringRecord,
    n_items: usize,
    instruments: &[InstrumentDefinition],
    line: usize,
) -> std::result::Result<RatingRecord, RowError> {
    let err = |column: Option<&str>, message: String| RowError {
        line,
        column: column.map(str::to_string),
        message,
    };
    let expected = LEADING.len() + n_items + TRAILING.len();
    if row.len() != expected {
        return Err(err(
            None,
            format!("expected {expected} fields, found {}", row.len()),
        ));
    }
    let respondent_id = row[0].to_string();
    let feature_id = row[1].to_string();
    if respondent_id.is_empty() || feature_id.is_empty() {
        return Err(err(None, "empty respondent_id or feature_id".into()));
    }
    let name = &row[2];
    let inst = instruments
        .iter()
        .find(|i| i.name == name)
        .ok_or_else(|| err(Some("instrument"), format!("unknown instrument `{name}`")))?;
    if inst.len() > n_items {
        return Err(err(
            Some("instrument"),
            format!(
                "`{name}` has {} items but the file has {n_items} item columns",
                inst.len()
            ),
        ));
    }

    let mut responses = Vec::with_capacity(inst.len());
    for k in 0..n_items {
        let cell = &row[LEADING.len() + k];
        let col = format!("i{}", k + 1);
        if k >= inst.len() {
            if !cell.is_empty() {
                return Err(err(
                    Some(&col),
                    format!("`{name}` defines no item {}", k + 1),
                ));
            }
            continue;
        }
        if cell.is_empty() || cell.eq_ignore_ascii_case("na") {
            responses.push(None);
            continue;
        }
        let v = parse_likert(cell, inst).map_err(|m| err(Some(&col), m))?;
        responses.push(Some(v));
    }

    let att_cell = &row[LEADING.len() + n_items];
    let attention_response = parse_likert(att_cell, inst).map_err(|m| err(Some("attention"), m))?;
    let dur_cell = &row[LEADING.len() + n_items + 1];
    let duration_seconds: f64 = dur_cell
        .parse()
        .map_err(|_| err(Some("duration_s"), format!("`{dur_cell}` is not a number")))?;
    if !(duration_seconds >= 0.0 && duration_seconds.is_finite()) {
        return Err(err(
            Some("duration_s"),
            format!("duration {duration_seconds} must be nonnegative"),
        ));
    }

    Ok(RatingRecord {
        respondent_id,
        feature_id,
        instrument: inst.name.clone(),
        kind: inst.kind,
        responses,
        attention_response,
        duration_seconds,
        split: Split::Unassigned,
    })
}

fn parse_likert(cell: &str, inst: &InstrumentDefinition) -> std::result::Result<u8, String> {
    let v: i64 = cell
        .parse()
        .map_err(|_| format!("`{cell}` is not an integer"))?;
    if v < inst.likert_min as i64 || v > inst.likert_max as i64 {
        return Err(format!(
            "value {v} outside [{}, {}]",
            inst.likert_min, inst.likert_max
        ));
    }
    Ok(v as u8)
}

/// Write records in the response CSV format. Item columns span the longest
/// record.
pub fn write_responses<W: Write>(sink: W, records: &[RatingRecord]) -> Result<()> {
    let n_items = records.iter().map(|r| r.responses.len()).max().unwrap_or(0);
    let mut w = csv::Writer::from_writer(sink);
    let mut header: Vec<String> = LEADING.iter().map(|s| s.to_string()).collect();
    header.extend((1..=n_items).map(|k| format!("i{k}")));
    header.extend(TRAILING.iter().map(|s| s.to_string()));
    w.write_record(&header)?;
    for r in records {
        let mut row = vec![
            r.respondent_id.clone(),
            r.feature_id.clone(),
            r.instrument.clone(),
        ];
        for k in 0..n_items {
            row.push(match r.responses.get(k).copied().flatten() {
                Some(v) => v.to_string(),
                None => String::new(),
            });
        }
        row.push(r.attention_response.to_string());
        row.push(format!("{:.1}", r.duration_seconds));
        w.write_record(&row)?;
    }
    w.flush().map_err(|e| Error::io("<response sink>", e))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn insts() -> Vec<InstrumentDefinition> {
        vec![
            InstrumentDefinition::numerical(),
            InstrumentDefinition::categorical(),
        ]
    }

    const HEADER: &str =
        "respondent_id,feature_id,instrument,i1,i2,i3,i4,i5,i6,i7,i8,i9,attention,duration_s\n";

    #[test]
    fn all_neutral_row_parses() {
        let csv = format!("{HEADER}R1,bmi,fus-numerical,3,3,3,3,3,3,3,3,,3,120.5\n");
        let parsed = parse_responses(csv.as_bytes(), &insts()).unwrap();
        assert!(parsed.errors.is_empty());
        let rec = &parsed.records[0];
        assert!(rec.is_complete());
        assert_eq!(rec.responses, vec![Some(3); 8]);
        assert_eq!(rec.kind, InstrumentKind::Numerical);
    }

    #[test]
    fn out_of_range_rejected_with_column() {
        let csv = format!("{HEADER}R1,degree,fus-categorical,3,3,6,3,3,3,3,3,3,3,120\n");
        let parsed = parse_responses(csv.as_bytes(), &insts()).unwrap();
        assert!(parsed.records.is_empty());
        let e = &parsed.errors[0];
        assert_eq!(e.line, 2);
        assert_eq!(e.column.as_deref(), Some("i3"));
        assert!(e.message.contains('6'));
    }

    #[test]
    fn value_past_instrument_length_rejected() {
        let csv = format!("{HEADER}R1,bmi,fus-numerical,3,3,3,3,3,3,3,3,4,3,120\n");
        let parsed = parse_responses(csv.as_bytes(), &insts()).unwrap();
        assert_eq!(parsed.errors[0].column.as_deref(), Some("i9"));
    }

    #[test]
    fn missing_cells_kept_as_none() {
        let csv = format!("{HEADER}R1,bmi,fus-numerical,3,,3,3,NA,3,3,3,,3,120\n");
        let parsed = parse_responses(csv.as_bytes(), &insts()).unwrap();
        let rec = &parsed.records[0];
        assert_eq!(rec.responses[1], None);
        assert_eq!(rec.responses[4], None);
        assert!(!rec.is_complete());
    }

    #[test]
    fn unknown_item_column_is_fatal() {
        let csv = "respondent_id,feature_id,instrument,i1,i2,i3,i4,i5,i6,i7,i8,i9,i10,attention,duration_s\n";
        assert!(matches!(
            parse_responses(csv.as_bytes(), &insts()),
            Err(Error::Schema(m)) if m.contains("i10")
        ));
        let csv = "respondent_id,feature_id,instrument,i1,q2,attention,duration_s\n";
        assert!(matches!(
            parse_responses(csv.as_bytes(), &insts()),
            Err(Error::Schema(_))
        ));
    }

    #[test]
    fn malformed_row_reports_line() {
        let csv = format!(
            "{HEADER}R1,bmi,fus-numerical,3,3,3,3,3,3,3,3,,3,120\nR2,bmi,fus-numerical,3,3\n"
        );
        let parsed = parse_responses(csv.as_bytes(), &insts()).unwrap();
        assert_eq!(parsed.records.len(), 1);
        assert_eq!(parsed.errors[0].line, 3);
    }

    #[test]
    fn write_then_parse() {
        let csv = format!(
            "{HEADER}R1,bmi,fus-numerical,1,2,3,4,5,4,3,2,,3,99.5\nR1,degree,fus-categorical,5,4,3,2,1,2,3,4,5,4,12.0\n"
        );
        let parsed = parse_responses(csv.as_bytes(), &insts()).unwrap();
        let mut buf = Vec::new();
        write_responses(&mut buf, &parsed.records).unwrap();
        let again = parse_responses(buf.as_slice(), &insts()).unwrap();
        assert_eq!(again.records, parsed.records);
    }
}
