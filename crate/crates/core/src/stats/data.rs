//! CSV input for the statistics pipeline and the bundled reading-study
//! summary table.

use std::io::Read;

use serde::Deserialize;

use super::{RawGroup, SampleSummary, StatsError};

/// Mean and SD of reading accuracy at each of the seven character gaps
/// (`gap_ms,mean,sd,n`, `#` comments).
pub const READING_STUDY_CSV: &str = include_str!("../../data/reading_study_v1.csv");

#[derive(Deserialize)]
struct SummaryRow {
    gap_ms: u64,
    mean: f64,
    sd: f64,
    n: usize,
}

#[derive(Deserialize)]
struct RawRow {
    #[allow(dead_code)]
    subject: String,
    gap_ms: u64,
    accuracy_pct: f64,
}

fn reader<R: Read>(input: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(input)
}

fn csv_err(e: csv::Error) -> StatsError {
    StatsError::Csv(e.to_string())
}

/// Rows of `gap_ms,mean,sd,n`, in file order.
pub fn read_summary_csv<R: Read>(input: R) -> Result<Vec<SampleSummary>, StatsError> {
    let mut out = Vec::new();
    for row in reader(input).deserialize::<SummaryRow>() {
        let row = row.map_err(csv_err)?;
        let s = SampleSummary {
            treatment_ms: row.gap_ms,
            mean: row.mean,
            sd: row.sd,
            n: row.n,
        };
        s.validate()?;
        out.push(s);
    }
    Ok(out)
}

/// Rows of `subject,gap_ms,accuracy_pct`, grouped by gap in order of first
/// appearance.
pub fn read_raw_csv<R: Read>(input: R) -> Result<Vec<RawGroup>, StatsError> {
    let mut groups: Vec<RawGroup> = Vec::new();
    for row in reader(input).deserialize::<RawRow>() {
        let row = row.map_err(csv_err)?;
        match groups.iter_mut().find(|g| g.treatment_ms == row.gap_ms) {
            Some(g) => g.values.push(row.accuracy_pct),
            None => groups.push(RawGroup::new(row.gap_ms, vec![row.accuracy_pct])),
        }
    }
    Ok(groups)
}

pub fn reading_study_summaries() -> Vec<SampleSummary> {
    read_summary_csv(READING_STUDY_CSV.as_bytes()).expect("bundled dataset parses")
}
