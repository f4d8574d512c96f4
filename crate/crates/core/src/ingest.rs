//! Monthly claims and premium records: CSV loading, validation, summaries.

use std::collections::HashSet;
use std::fmt;
use std::io::Read;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Column header every input file must carry, in this order.
pub const CSV_HEADER: [&str; 5] = ["period", "product", "premium", "claims_paid", "claim_count"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Product {
    Motor,
    Householders,
    FireAllied,
}

impl Product {
    pub const ALL: [Product; 3] = [Product::Motor, Product::Householders, Product::FireAllied];

    pub fn as_str(self) -> &'static str {
        match self {
            Product::Motor => "Motor",
            Product::Householders => "Householders",
            Product::FireAllied => "FireAllied",
        }
    }
}

impl fmt::Display for Product {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Product {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "Motor" => Ok(Product::Motor),
            "Householders" => Ok(Product::Householders),
            "FireAllied" => Ok(Product::FireAllied),
            other => Err(format!("unknown product `{other}`")),
        }
    }
}

/// One product-month of business.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonthlyRecord {
    /// Month index counted from the start of the study, 0-based.
    pub period: u32,
    pub product: Product,
    pub premium: f64,
    pub claims_paid: f64,
    pub claim_count: u64,
}

impl MonthlyRecord {
    /// Checks the per-row invariants. Returns the offending column and reason.
    pub fn validate(&self) -> Result<(), (&'static str, String)> {
        if !(self.premium.is_finite() && self.premium >= 0.0) {
            return Err((
                "premium",
                format!("must be a finite amount >= 0, got {}", self.premium),
            ));
        }
        if !(self.claims_paid.is_finite() && self.claims_paid >= 0.0) {
            return Err((
                "claims_paid",
                format!("must be a finite amount >= 0, got {}", self.claims_paid),
            ));
        }
        if self.claim_count == 0 && self.claims_paid != 0.0 {
            return Err((
                "claims_paid",
                format!("{} paid in a month with no claims", self.claims_paid),
            ));
        }
        Ok(())
    }

    /// Average claim size for the month, if any claims were reported.
    pub fn mean_claim(&self) -> Option<f64> {
        (self.claim_count > 0).then(|| self.claims_paid / self.claim_count as f64)
    }
}

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("cannot open {path}: {source}")]
    Open {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("header must be `{}`, found `{found}`", CSV_HEADER.join(","))]
    Header { found: String },
    #[error("row {row}, column `{column}`: {reason}")]
    Row {
        row: usize,
        column: &'static str,
        reason: String,
    },
    #[error("row {row}: duplicate record for ({product}, period {period})")]
    Duplicate {
        row: usize,
        product: Product,
        period: u32,
    },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

/// Loads and validates a claims file.
pub fn load_claims_csv(path: impl AsRef<Path>) -> Result<Vec<MonthlyRecord>, IngestError> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|source| IngestError::Open {
        path: path.display().to_string(),
        source,
    })?;
    read_claims_csv(file)
}

/// Same as [`load_claims_csv`] over any reader. Row numbers count data rows
/// from 1 (the header is row 0).
pub fn read_claims_csv<R: Read>(reader: R) -> Result<Vec<MonthlyRecord>, IngestError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::None)
        .from_reader(reader);

    let header = rdr.headers()?.clone();
    if header.iter().ne(CSV_HEADER.iter().copied()) {
        return Err(IngestError::Header {
            found: header.iter().collect::<Vec<_>>().join(","),
        });
    }

    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for (i, row) in rdr.records().enumerate() {
        let row_no = i + 1;
        let row = row?;
        if row.len() != CSV_HEADER.len() {
            return Err(IngestError::Row {
                row: row_no,
                column: "period",
                reason: format!("expected {} fields, found {}", CSV_HEADER.len(), row.len()),
            });
        }
        let rec = parse_row(&row, row_no)?;
        rec.validate()
            .map_err(|(column, reason)| IngestError::Row {
                row: row_no,
                column,
                reason,
            })?;
        if !seen.insert((rec.product, rec.period)) {
            return Err(IngestError::Duplicate {
                row: row_no,
                product: rec.product,
                period: rec.period,
            });
        }
        out.push(rec);
    }
    Ok(out)
}

fn parse_row(row: &csv::StringRecord, row_no: usize) -> Result<MonthlyRecord, IngestError> {
    fn field<T: FromStr>(
        row: &csv::StringRecord,
        idx: usize,
        row_no: usize,
    ) -> Result<T, IngestError>
    where
        T::Err: fmt::Display,
    {
        let raw = &row[idx];
        raw.parse::<T>().map_err(|e| IngestError::Row {
            row: row_no,
            column: CSV_HEADER[idx],
            reason: format!("cannot parse `{raw}`: {e}"),
        })
    }

    Ok(MonthlyRecord {
        period: field(row, 0, row_no)?,
        product: field(row, 1, row_no)?,
        premium: field(row, 2, row_no)?,
        claims_paid: field(row, 3, row_no)?,
        claim_count: field(row, 4, row_no)?,
    })
}

/// Writes records in the input schema. Used by the synthetic data generator.
pub fn write_claims_csv<W: std::io::Write>(
    writer: W,
    records: &[MonthlyRecord],
) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(CSV_HEADER)?;
    for r in records {
        w.write_record([
            r.period.to_string(),
            r.product.to_string(),
            r.premium.to_string(),
            r.claims_paid.to_string(),
            r.claim_count.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Column selector for [`summarize`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Field {
    Premium,
    ClaimsPaid,
    ClaimCount,
}

impl Field {
    pub const ALL: [Field; 3] = [Field::Premium, Field::ClaimsPaid, Field::ClaimCount];

    pub fn get(self, r: &MonthlyRecord) -> f64 {
        match self {
            Field::Premium => r.premium,
            Field::ClaimsPaid => r.claims_paid,
            Field::ClaimCount => r.claim_count as f64,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Field::Premium => "premium",
            Field::ClaimsPaid => "claims_paid",
            Field::ClaimCount => "claim_count",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SummaryStats {
    pub minimum: f64,
    pub maximum: f64,
    pub mean: f64,
    /// Sample standard deviation (n - 1 denominator).
    pub std_dev: f64,
}

#[derive(Debug, Error, PartialEq)]
pub enum SummaryError {
    #[error("cannot summarize an empty column")]
    Empty,
    #[error("standard deviation needs at least two observations")]
    SingleObservation,
}

pub fn summarize(records: &[MonthlyRecord], field: Field) -> Result<SummaryStats, SummaryError> {
    let values: Vec<f64> = records.iter().map(|r| field.get(r)).collect();
    summarize_values(&values)
}

pub fn summarize_values(values: &[f64]) -> Result<SummaryStats, SummaryError> {
    match values.len() {
        0 => return Err(SummaryError::Empty),
        1 => return Err(SummaryError::SingleObservation),
        _ => {}
    }
    let n = values.len() as f64;
    // Sorting makes the sums independent of input order.
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mean = sorted.iter().sum::<f64>() / n;
    let ss: f64 = sorted.iter().map(|v| (v - mean) * (v - mean)).sum();
    Ok(SummaryStats {
        minimum: sorted[0],
        maximum: sorted[sorted.len() - 1],
        mean: mean.clamp(sorted[0], sorted[sorted.len() - 1]),
        std_dev: (ss / (n - 1.0)).sqrt(),
    })
}
