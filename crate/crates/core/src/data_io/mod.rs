//! Portfolio CSV files, covariate coding and synthetic portfolios.
//!
//! A portfolio file has one row per policyholder-year with the header
//! `policy_id,gender,age_class,price_class,area_class,year,count,severities`.
//! Gender is 0 for a woman and 1 for a man; the three class columns take
//! levels 1 to 4. Claim sizes are joined with `;` and the cell is empty
//! exactly when the count is 0.

pub mod fixtures;
mod simulate;

use std::collections::HashMap;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model_selection::FrequencyTable;
use crate::premium::ClaimHistory;
use crate::regression::{CountData, SeverityData};

pub use simulate::{simulate_portfolio, CovariateLaw, PortfolioSpec};

/// Column names of a portfolio file, in order.
pub const HEADER: [&str; 8] = [
    "policy_id",
    "gender",
    "age_class",
    "price_class",
    "area_class",
    "year",
    "count",
    "severities",
];

/// Names of the design-row columns produced by [`encode_design_row`].
pub const DESIGN_COLUMNS: [&str; 5] = ["intercept", "gender", "age", "price", "area"];

/// Coded covariates of one policyholder.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Profile {
    pub gender: u8,
    pub age_class: u8,
    pub price_class: u8,
    pub area_class: u8,
}

impl Profile {
    pub fn new(gender: u8, age_class: u8, price_class: u8, area_class: u8) -> Result<Self> {
        let p = Profile { gender, age_class, price_class, area_class };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.gender > 1 {
            return Err(Error::Domain(format!("gender must be 0 or 1, got {}", self.gender)));
        }
        for (name, v) in [
            ("age_class", self.age_class),
            ("price_class", self.price_class),
            ("area_class", self.area_class),
        ] {
            if !(1..=4).contains(&v) {
                return Err(Error::Domain(format!("{name} must lie in 1..=4, got {v}")));
            }
        }
        Ok(())
    }
}

/// One year of a policyholder's experience.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyYear {
    pub year: i64,
    pub count: u64,
    pub severities: Vec<f64>,
}

/// A policyholder with its years in increasing order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyRecord {
    pub policy_id: String,
    pub profile: Profile,
    pub years: Vec<PolicyYear>,
}

impl PolicyRecord {
    pub fn total_claims(&self) -> u64 {
        self.years.iter().map(|y| y.count).sum()
    }

    /// The claim history over all recorded years.
    pub fn history(&self) -> Result<ClaimHistory> {
        ClaimHistory::new(
            self.years.iter().map(|y| y.count).collect(),
            self.years.iter().map(|y| y.severities.clone()).collect(),
        )
    }
}

/// Design row `(1, gender, age, price, area)` with classes as numeric levels.
pub fn encode_design_row(profile: &Profile) -> Vec<f64> {
    vec![
        1.0,
        f64::from(profile.gender),
        f64::from(profile.age_class),
        f64::from(profile.price_class),
        f64::from(profile.area_class),
    ]
}

/// The design row restricted to `columns`, which index [`DESIGN_COLUMNS`]
/// and must start with the intercept. `None` keeps every column.
pub fn design_row(profile: &Profile, columns: Option<&[usize]>) -> Result<Vec<f64>> {
    let full = encode_design_row(profile);
    let Some(cols) = columns else {
        return Ok(full);
    };
    check_columns(cols)?;
    Ok(cols.iter().map(|&c| full[c]).collect())
}

pub(crate) fn check_columns(cols: &[usize]) -> Result<()> {
    if cols.first() != Some(&0) {
        return Err(Error::InvalidParams("design columns must start with the intercept 0".into()));
    }
    if let Some(c) = cols.iter().find(|&&c| c >= DESIGN_COLUMNS.len()) {
        return Err(Error::InvalidParams(format!(
            "design column {c} out of range (0..{})",
            DESIGN_COLUMNS.len()
        )));
    }
    let mut seen = [false; DESIGN_COLUMNS.len()];
    for &c in cols {
        if std::mem::replace(&mut seen[c], true) {
            return Err(Error::InvalidParams(format!("design column {c} repeated")));
        }
    }
    Ok(())
}

/// Every policyholder-year as one count observation.
pub fn count_data(records: &[PolicyRecord], columns: Option<&[usize]>) -> Result<CountData> {
    let mut y = Vec::new();
    let mut rows = Vec::new();
    for r in records {
        let row = design_row(&r.profile, columns)?;
        for year in &r.years {
            y.push(year.count);
            rows.push(row.clone());
        }
    }
    if y.is_empty() {
        return Err(Error::EmptyInput("portfolio holds no policy years".into()));
    }
    CountData::new(y, rows)
}

/// Every reported claim as one severity observation.
pub fn severity_data(records: &[PolicyRecord], columns: Option<&[usize]>) -> Result<SeverityData> {
    let mut z = Vec::new();
    let mut rows = Vec::new();
    for r in records {
        let row = design_row(&r.profile, columns)?;
        for v in r.years.iter().flat_map(|y| &y.severities) {
            z.push(*v);
            rows.push(row.clone());
        }
    }
    if z.is_empty() {
        return Err(Error::EmptyInput("portfolio holds no claims".into()));
    }
    SeverityData::new(z, rows)
}

/// Binned counts of every policyholder-year.
pub fn observed_frequencies(records: &[PolicyRecord]) -> FrequencyTable {
    let counts: Vec<u64> = records.iter().flat_map(|r| r.years.iter().map(|y| y.count)).collect();
    FrequencyTable::from_counts(&counts)
}

pub fn parse_portfolio(path: &Path) -> Result<Vec<PolicyRecord>> {
    parse_portfolio_from(File::open(path)?)
}

pub fn parse_portfolio_str(text: &str) -> Result<Vec<PolicyRecord>> {
    parse_portfolio_from(text.as_bytes())
}

fn parse_err(line: u64, message: impl Into<String>) -> Error {
    Error::Parse { line, message: message.into() }
}

fn field<T: std::str::FromStr>(rec: &csv::StringRecord, i: usize, line: u64) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    let raw = rec.get(i).unwrap_or("").trim();
    raw.parse::<T>()
        .map_err(|e| parse_err(line, format!("column {}: cannot read {raw:?}: {e}", HEADER[i])))
}

/// Reads a portfolio, grouping rows by policy in order of first appearance.
pub fn parse_portfolio_from<R: Read>(reader: R) -> Result<Vec<PolicyRecord>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(false).flexible(true).from_reader(reader);
    let mut rows = rdr.records();
    let header = match rows.next() {
        Some(h) => h?,
        None => return Err(parse_err(1, "missing header row")),
    };
    let names: Vec<&str> = header.iter().map(str::trim).collect();
    if names != HEADER {
        return Err(parse_err(1, format!("header must be {}", HEADER.join(","))));
    }
    let mut records: Vec<PolicyRecord> = Vec::new();
    let mut index: HashMap<String, usize> = HashMap::new();
    for rec in rows {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.len() != HEADER.len() {
            return Err(parse_err(
                line,
                format!("expected {} fields, found {}", HEADER.len(), rec.len()),
            ));
        }
        let id = rec[0].trim().to_string();
        if id.is_empty() {
            return Err(parse_err(line, "empty policy_id"));
        }
        let profile = Profile {
            gender: field(&rec, 1, line)?,
            age_class: field(&rec, 2, line)?,
            price_class: field(&rec, 3, line)?,
            area_class: field(&rec, 4, line)?,
        };
        profile.validate().map_err(|e| parse_err(line, e.to_string()))?;
        let year: i64 = field(&rec, 5, line)?;
        let count: u64 = field(&rec, 6, line)?;
        let cell = rec[7].trim();
        let severities: Vec<f64> = if cell.is_empty() {
            Vec::new()
        } else {
            cell.split(';')
                .map(|s| {
                    let v: f64 = s.trim().parse().map_err(|e| {
                        parse_err(line, format!("column severities: cannot read {s:?}: {e}"))
                    })?;
                    if !(v.is_finite() && v > 0.0) {
                        return Err(parse_err(line, format!("claim size {v} must be positive")));
                    }
                    Ok(v)
                })
                .collect::<Result<_>>()?
        };
        if severities.len() as u64 != count {
            return Err(parse_err(
                line,
                format!("count {count} but {} claim sizes", severities.len()),
            ));
        }
        let entry = PolicyYear { year, count, severities };
        match index.get(&id) {
            Some(&i) => {
                let r = &mut records[i];
                if r.profile != profile {
                    return Err(parse_err(line, format!("covariates of policy {id} change")));
                }
                if r.years.iter().any(|y| y.year == year) {
                    return Err(parse_err(line, format!("policy {id} repeats year {year}")));
                }
                r.years.push(entry);
            }
            None => {
                index.insert(id.clone(), records.len());
                records.push(PolicyRecord { policy_id: id, profile, years: vec![entry] });
            }
        }
    }
    for r in &mut records {
        r.years.sort_by_key(|y| y.year);
    }
    Ok(records)
}

pub fn write_portfolio(path: &Path, records: &[PolicyRecord]) -> Result<()> {
    let file = File::create(path)?;
    write_portfolio_to(std::io::BufWriter::new(file), records)
}

pub fn portfolio_to_string(records: &[PolicyRecord]) -> Result<String> {
    let mut buf = Vec::new();
    write_portfolio_to(&mut buf, records)?;
    String::from_utf8(buf).map_err(|e| Error::InvalidParams(e.to_string()))
}

/// Writes one row per policyholder-year. Claim sizes use the shortest
/// decimal that reads back to the same value.
pub fn write_portfolio_to<W: Write>(writer: W, records: &[PolicyRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(HEADER)?;
    for r in records {
        for y in &r.years {
            let sev: Vec<String> = y.severities.iter().map(|v| v.to_string()).collect();
            w.write_record([
                r.policy_id.clone(),
                r.profile.gender.to_string(),
                r.profile.age_class.to_string(),
                r.profile.price_class.to_string(),
                r.profile.area_class.to_string(),
                y.year.to_string(),
                y.count.to_string(),
                sev.join(";"),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}
