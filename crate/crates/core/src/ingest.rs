//! Trade and nutritive-factor ingestion.
//!
//! Trade rows are reporter-declared exports in the five-column schema
//! `year,reporter,partner,item,quantity_tonnes`. Each accepted row is
//! converted to kilocalories with a [`FactorTable`]; items tagged
//! `secondary` are dropped, and items with no factor are skipped and
//! counted.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::io::Read;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::netgraph::CalorieMatrix;

pub const TRADE_HEADER: [&str; 5] = ["year", "reporter", "partner", "item", "quantity_tonnes"];
pub const FACTOR_HEADER: [&str; 3] = ["item", "kcal_per_100g", "category"];

/// Row issues kept for diagnostics; counting continues past this.
const MAX_ISSUES: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MassUnit {
    /// Quantities are metric tonnes (10^4 hundred-gram units each).
    #[default]
    Tonnes,
    /// Quantities are kilograms (10 hundred-gram units each).
    Kilograms,
}

impl MassUnit {
    /// Number of 100 g units in one unit of traded mass.
    pub fn hundred_gram_units(self) -> f64 {
        match self {
            MassUnit::Tonnes => 1e4,
            MassUnit::Kilograms => 10.0,
        }
    }
}

impl FromStr for MassUnit {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tonnes" => Ok(MassUnit::Tonnes),
            "kilograms" => Ok(MassUnit::Kilograms),
            other => Err(Error::Config(format!(
                "unknown mass unit `{other}` (expected tonnes or kilograms)"
            ))),
        }
    }
}

impl fmt::Display for MassUnit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MassUnit::Tonnes => "tonnes",
            MassUnit::Kilograms => "kilograms",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IngestConfig {
    pub year_from: i32,
    pub year_to: i32,
    pub mass_unit: MassUnit,
}

impl Default for IngestConfig {
    fn default() -> Self {
        IngestConfig {
            year_from: 1986,
            year_to: 2022,
            mass_unit: MassUnit::Tonnes,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TradeRecord {
    pub year: i32,
    /// Exporting country.
    pub reporter: String,
    /// Importing country.
    pub partner: String,
    pub item: String,
    pub quantity: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Category {
    Primary,
    Secondary,
    Animal,
}

impl FromStr for Category {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "primary" => Ok(Category::Primary),
            "secondary" => Ok(Category::Secondary),
            "animal" => Ok(Category::Animal),
            other => Err(format!("unknown category `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Factor {
    pub kcal_per_100g: f64,
    pub category: Category,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct FactorTable {
    entries: HashMap<String, Factor>,
}

impl FactorTable {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds an entry, rejecting duplicates and negative or non-finite factors.
    pub fn insert(&mut self, item: impl Into<String>, factor: Factor) -> Result<()> {
        let item = item.into();
        if !(factor.kcal_per_100g.is_finite() && factor.kcal_per_100g >= 0.0) {
            return Err(Error::Config(format!(
                "item {item}: factor {} is not a non-negative number",
                factor.kcal_per_100g
            )));
        }
        if self.entries.contains_key(&item) {
            return Err(Error::Config(format!("duplicate item {item}")));
        }
        self.entries.insert(item, factor);
        Ok(())
    }

    pub fn get(&self, item: &str) -> Option<&Factor> {
        self.entries.get(item)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CalorieFlowRecord {
    pub year: i32,
    pub exporter: String,
    pub importer: String,
    pub item: String,
    pub kcal: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RejectReason {
    BadYear,
    NonPositiveQuantity,
    SelfTrade,
    Malformed,
}

impl fmt::Display for RejectReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RejectReason::BadYear => "year outside the configured range",
            RejectReason::NonPositiveQuantity => "non-positive quantity",
            RejectReason::SelfTrade => "reporter equals partner",
            RejectReason::Malformed => "malformed row",
        })
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RejectCounts {
    #[serde(rename = "bad-year")]
    pub bad_year: u64,
    #[serde(rename = "non-positive-quantity")]
    pub non_positive: u64,
    #[serde(rename = "self-trade")]
    pub self_trade: u64,
    pub malformed: u64,
}

impl RejectCounts {
    pub fn total(&self) -> u64 {
        self.bad_year + self.non_positive + self.self_trade + self.malformed
    }

    fn bump(&mut self, reason: RejectReason) {
        match reason {
            RejectReason::BadYear => self.bad_year += 1,
            RejectReason::NonPositiveQuantity => self.non_positive += 1,
            RejectReason::SelfTrade => self.self_trade += 1,
            RejectReason::Malformed => self.malformed += 1,
        }
    }
}

/// Counters filled by parsing and conversion.
///
/// Only the five documented keys are serialized; the remaining counters
/// are in-memory diagnostics.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct IngestStats {
    pub rows_read: u64,
    pub rows_accepted: u64,
    pub rows_rejected: RejectCounts,
    pub records_missing_factor: u64,
    pub kcal_total: f64,
    #[serde(skip)]
    pub records_converted: u64,
    #[serde(skip)]
    pub records_excluded: u64,
    #[serde(skip)]
    pub bytes_read: u64,
}

impl IngestStats {
    /// Share of conversion attempts that found a nutritive factor
    /// (excluded secondary items count as covered). 1.0 when nothing was
    /// converted.
    pub fn coverage(&self) -> f64 {
        let attempted =
            self.records_converted + self.records_excluded + self.records_missing_factor;
        if attempted == 0 {
            1.0
        } else {
            1.0 - self.records_missing_factor as f64 / attempted as f64
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RowIssue {
    /// 1-based line number in the input.
    pub line: u64,
    pub reason: RejectReason,
}

#[derive(Debug, Clone, Default)]
pub struct ParsedTrade {
    pub records: Vec<TradeRecord>,
    pub stats: IngestStats,
    /// First rejected rows, capped.
    pub issues: Vec<RowIssue>,
}

struct CountingReader<R> {
    inner: R,
    count: u64,
}

impl<R: Read> Read for CountingReader<R> {
    fn read(&mut self, buf: &mut [u8]) -> std::io::Result<usize> {
        let n = self.inner.read(buf)?;
        self.count += n as u64;
        Ok(n)
    }
}

fn csv_reader<R: Read>(input: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(input)
}

fn check_header(found: &csv::ByteRecord, expected: &[&str]) -> Result<()> {
    let fields: Vec<String> = found
        .iter()
        .enumerate()
        .map(|(i, f)| {
            let f = String::from_utf8_lossy(f).into_owned();
            if i == 0 {
                f.trim_start_matches('\u{feff}').to_string()
            } else {
                f
            }
        })
        .collect();
    if fields.len() != expected.len() || fields.iter().zip(expected).any(|(a, b)| a != b) {
        return Err(Error::Header {
            expected: expected.join(","),
            found: fields.join(","),
        });
    }
    Ok(())
}

fn field_str(rec: &csv::ByteRecord, i: usize) -> Option<&str> {
    let s = std::str::from_utf8(rec.get(i)?).ok()?;
    (!s.is_empty()).then_some(s)
}

fn classify_row(
    rec: &csv::ByteRecord,
    config: &IngestConfig,
) -> std::result::Result<TradeRecord, RejectReason> {
    if rec.len() != TRADE_HEADER.len() {
        return Err(RejectReason::Malformed);
    }
    let parse = || -> Option<TradeRecord> {
        Some(TradeRecord {
            year: field_str(rec, 0)?.parse().ok()?,
            reporter: field_str(rec, 1)?.to_string(),
            partner: field_str(rec, 2)?.to_string(),
            item: field_str(rec, 3)?.to_string(),
            quantity: field_str(rec, 4)?
                .parse::<f64>()
                .ok()
                .filter(|q| q.is_finite())?,
        })
    };
    let row = parse().ok_or(RejectReason::Malformed)?;
    if row.year < config.year_from || row.year > config.year_to {
        return Err(RejectReason::BadYear);
    }
    if row.reporter == row.partner {
        return Err(RejectReason::SelfTrade);
    }
    if row.quantity <= 0.0 {
        return Err(RejectReason::NonPositiveQuantity);
    }
    Ok(row)
}

/// Streams a trade CSV. A wrong header is fatal; bad rows are counted and
/// skipped. Output order follows input order.
pub fn parse_trade_records<R: Read>(input: R, config: &IngestConfig) -> Result<ParsedTrade> {
    let mut rdr = csv_reader(CountingReader {
        inner: input,
        count: 0,
    });
    check_header(rdr.byte_headers()?, &TRADE_HEADER)?;

    let mut out = ParsedTrade::default();
    let mut rec = csv::ByteRecord::new();
    loop {
        match rdr.read_byte_record(&mut rec) {
            Ok(false) => break,
            Ok(true) => {
                out.stats.rows_read += 1;
                match classify_row(&rec, config) {
                    Ok(row) => {
                        out.stats.rows_accepted += 1;
                        out.records.push(row);
                    }
                    Err(reason) => {
                        out.stats.rows_rejected.bump(reason);
                        if out.issues.len() < MAX_ISSUES {
                            let line = rec.position().map_or(0, |p| p.line());
                            out.issues.push(RowIssue { line, reason });
                        }
                    }
                }
            }
            // Invalid UTF-8 and the like land here; I/O errors stay fatal.
            Err(e) if !matches!(e.kind(), csv::ErrorKind::Io(_)) => {
                out.stats.rows_read += 1;
                out.stats.rows_rejected.bump(RejectReason::Malformed);
                if out.issues.len() < MAX_ISSUES {
                    let line = e.position().map_or(0, |p| p.line());
                    out.issues.push(RowIssue {
                        line,
                        reason: RejectReason::Malformed,
                    });
                }
            }
            Err(e) => return Err(e.into()),
        }
    }
    out.stats.bytes_read = rdr.into_inner().count;
    Ok(out)
}

/// Parses a nutritive-factor CSV. Every problem here is fatal, since an
/// ambiguous or invalid factor would silently distort all totals.
pub fn parse_nutritive_factors<R: Read>(input: R) -> Result<FactorTable> {
    let mut rdr = csv_reader(input);
    check_header(rdr.byte_headers()?, &FACTOR_HEADER)?;

    let mut table = FactorTable::new();
    for rec in rdr.byte_records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        let bad = |message: String| Error::Schema { line, message };
        if rec.len() != FACTOR_HEADER.len() {
            return Err(bad(format!("expected 3 fields, found {}", rec.len())));
        }
        let item = field_str(&rec, 0).ok_or_else(|| bad("empty item code".into()))?;
        let raw_kcal = field_str(&rec, 1).ok_or_else(|| bad("empty kcal_per_100g".into()))?;
        let kcal: f64 = raw_kcal
            .parse()
            .map_err(|_| bad(format!("kcal_per_100g `{raw_kcal}` is not a number")))?;
        if !kcal.is_finite() || kcal < 0.0 {
            return Err(bad(format!(
                "kcal_per_100g must be non-negative, got {raw_kcal}"
            )));
        }
        let category = field_str(&rec, 2)
            .unwrap_or("")
            .parse::<Category>()
            .map_err(bad)?;
        if table.get(item).is_some() {
            return Err(bad(format!("duplicate item {item}")));
        }
        table.entries.insert(
            item.to_string(),
            Factor {
                kcal_per_100g: kcal,
                category,
            },
        );
    }
    Ok(table)
}

/// Converts one record to kilocalories.
///
/// Returns `None` for secondary items and for items without a factor; the
/// latter also increments `stats.records_missing_factor`.
pub fn to_calories(
    record: &TradeRecord,
    factors: &FactorTable,
    mass_unit: MassUnit,
    stats: &mut IngestStats,
) -> Option<CalorieFlowRecord> {
    let Some(factor) = factors.get(&record.item) else {
        stats.records_missing_factor += 1;
        return None;
    };
    if factor.category == Category::Secondary {
        stats.records_excluded += 1;
        return None;
    }
    let kcal = record.quantity * mass_unit.hundred_gram_units() * factor.kcal_per_100g;
    stats.records_converted += 1;
    stats.kcal_total += kcal;
    Some(CalorieFlowRecord {
        year: record.year,
        exporter: record.reporter.clone(),
        importer: record.partner.clone(),
        item: record.item.clone(),
        kcal,
    })
}

pub fn convert_all(
    records: &[TradeRecord],
    factors: &FactorTable,
    mass_unit: MassUnit,
    stats: &mut IngestStats,
) -> Vec<CalorieFlowRecord> {
    records
        .iter()
        .filter_map(|r| to_calories(r, factors, mass_unit, stats))
        .collect()
}

/// Sums kcal per ordered (importer, exporter) pair for one year.
pub fn aggregate_flows(records: &[CalorieFlowRecord], year: i32) -> Result<CalorieMatrix> {
    if let Some(r) = records.iter().find(|r| r.year != year) {
        return Err(Error::MixedYears {
            first: year,
            other: r.year,
        });
    }
    CalorieMatrix::from_flows(
        year,
        records
            .iter()
            .map(|r| (r.importer.as_str(), r.exporter.as_str(), r.kcal)),
    )
}

/// Splits records by year and aggregates each year independently.
pub fn aggregate_by_year(records: &[CalorieFlowRecord]) -> Result<BTreeMap<i32, CalorieMatrix>> {
    let mut by_year: BTreeMap<i32, Vec<CalorieFlowRecord>> = BTreeMap::new();
    for r in records {
        by_year.entry(r.year).or_default().push(r.clone());
    }
    by_year
        .into_par_iter()
        .map(|(year, recs)| aggregate_flows(&recs, year).map(|m| (year, m)))
        .collect()
}
