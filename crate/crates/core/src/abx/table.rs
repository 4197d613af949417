use std::io::{Read, Write};

use super::{AbxError, AccuracyReport, DeltaRecord, ReweightedAccuracy};
use crate::fmt::format_sig;

pub const DELTA_HEADER: [&str; 6] = ["model_id", "language", "triplet_id", "delta", "d_ax", "d_bx"];
pub const ACCURACY_HEADER: [&str; 5] = ["scope", "language", "key", "accuracy", "n_items"];

const SIG_DIGITS: usize = 12;

/// Writes deltas sorted by triplet id, values to 12 significant digits.
pub fn write_delta_table<W: Write>(records: &[DeltaRecord], writer: W) -> csv::Result<()> {
    let mut sorted: Vec<&DeltaRecord> = records.iter().collect();
    sorted.sort_by(|a, b| a.triplet_id.cmp(&b.triplet_id));
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(DELTA_HEADER)?;
    for r in sorted {
        w.write_record([
            r.model_id.as_str(),
            r.language.as_str(),
            r.triplet_id.as_str(),
            &format_sig(r.delta, SIG_DIGITS),
            &format_sig(r.d_ax, SIG_DIGITS),
            &format_sig(r.d_bx, SIG_DIGITS),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_delta_table<R: Read>(reader: R, name: &str) -> Result<Vec<DeltaRecord>, AbxError> {
    let err = |message: String| AbxError::Table {
        file: name.to_string(),
        message,
    };
    let mut rdr = csv::Reader::from_reader(reader);
    let headers = rdr.headers().map_err(|e| err(e.to_string()))?;
    if headers.iter().ne(DELTA_HEADER) {
        return Err(err(format!(
            "expected header `{}`",
            DELTA_HEADER.join(",")
        )));
    }
    let mut out = Vec::new();
    for (i, rec) in rdr.deserialize::<DeltaRecord>().enumerate() {
        let rec = rec.map_err(|e| err(format!("row {}: {e}", i + 1)))?;
        if !rec.delta.is_finite() {
            return Err(err(format!("row {}: non-finite delta", i + 1)));
        }
        out.push(rec);
    }
    Ok(out)
}

pub fn write_accuracy_csv<W: Write>(report: &AccuracyReport, writer: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(ACCURACY_HEADER)?;
    for row in &report.rows {
        w.write_record([
            report.scope.as_str(),
            row.language.as_str(),
            &row.key(),
            &format_sig(row.accuracy(), SIG_DIGITS),
            &row.n_items.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_reweighted_csv<W: Write>(rows: &[ReweightedAccuracy], writer: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(ACCURACY_HEADER)?;
    for row in rows {
        w.write_record([
            "reweighted",
            row.language.as_str(),
            "all",
            &format_sig(row.accuracy(), SIG_DIGITS),
            &row.n_items.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
