//! Yearly analyses built on the metrics: rankings, export shares,
//! peripheral countries, zero-export fractions and the metric time series.

use std::collections::BTreeSet;
use std::fmt;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::community::{detect_communities, modularity, Partition};
use crate::error::{Error, Result};
use crate::metrics::{
    connectivity, defined, degree_correlation, degrees, heterogeneity, node_correlation_similarity,
    CorrelationVariant, NetworkSummary,
};
use crate::netgraph::NetTradeNetwork;

/// Zero-export stage boundaries (inclusive).
pub const STAGES: [(i32, i32); 3] = [(1986, 1996), (2001, 2013), (2014, 2022)];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Export,
    Import,
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Direction::Export => "export",
            Direction::Import => "import",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankingTable {
    pub year: i32,
    pub direction: Direction,
    /// Descending by strength, ties by country code ascending.
    pub entries: Vec<(String, f64)>,
}

/// Top `k` countries by out-strength (export) or in-strength (import).
/// Countries with zero strength never appear.
pub fn rank_top(g: &NetTradeNetwork, direction: Direction, k: usize) -> RankingTable {
    let d = degrees(g);
    let strength = match direction {
        Direction::Export => &d.s_out,
        Direction::Import => &d.s_in,
    };
    let mut entries: Vec<(String, f64)> = g
        .nodes()
        .iter()
        .zip(strength)
        .filter(|(_, &s)| s > 0.0)
        .map(|(c, &s)| (c.clone(), s))
        .collect();
    entries.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    entries.truncate(k);
    RankingTable {
        year: g.year(),
        direction,
        entries,
    }
}

/// Share of total net flow exported by `countries`.
pub fn export_share(g: &NetTradeNetwork, countries: &BTreeSet<String>) -> Result<f64> {
    let w = g.total_weight();
    if w == 0.0 {
        return Err(Error::Undefined(
            "export share of a network without edges".into(),
        ));
    }
    let d = degrees(g);
    let mut exported = 0.0;
    for code in countries {
        let i = g.index_of(code).ok_or_else(|| {
            Error::InvalidNetwork(format!("{code} is not a node of {}", g.year()))
        })?;
        exported += d.s_out[i];
    }
    Ok((exported / w).min(1.0))
}

/// Countries with zero out-strength, isolated ones included.
pub fn peripheral_nodes(g: &NetTradeNetwork) -> BTreeSet<String> {
    let d = degrees(g);
    g.nodes()
        .iter()
        .zip(&d.s_out)
        .filter(|(_, &s)| s == 0.0)
        .map(|(c, _)| c.clone())
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageMean {
    pub from: i32,
    pub to: i32,
    /// Number of years in the stage that contributed.
    pub years: usize,
    pub mean: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ZeroExportReport {
    /// `(year, fraction)`; `None` for a year without nodes.
    pub per_year: Vec<(i32, Option<f64>)>,
    pub stage_means: Vec<StageMean>,
}

/// Fraction of peripheral countries per year, plus stage averages.
pub fn zero_export_fraction(networks: &[NetTradeNetwork]) -> ZeroExportReport {
    let mut per_year: Vec<(i32, Option<f64>)> = networks
        .iter()
        .map(|g| {
            let n = g.node_count();
            let f = (n > 0).then(|| peripheral_nodes(g).len() as f64 / n as f64);
            (g.year(), f)
        })
        .collect();
    per_year.sort_by_key(|&(y, _)| y);

    let stage_means = STAGES
        .iter()
        .map(|&(from, to)| {
            let values: Vec<f64> = per_year
                .iter()
                .filter(|(y, _)| (from..=to).contains(y))
                .filter_map(|&(_, f)| f)
                .collect();
            StageMean {
                from,
                to,
                years: values.len(),
                mean: (!values.is_empty())
                    .then(|| values.iter().sum::<f64>() / values.len() as f64),
            }
        })
        .collect();
    ZeroExportReport {
        per_year,
        stage_means,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnalysisParams {
    pub seed: u64,
    pub resolution: f64,
    pub correlation_variant: CorrelationVariant,
}

impl Default for AnalysisParams {
    fn default() -> Self {
        AnalysisParams {
            seed: 42,
            resolution: 1.0,
            correlation_variant: CorrelationVariant::RowRow,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NodeRow {
    pub country: String,
    pub k_in: usize,
    pub k_out: usize,
    pub s_in: f64,
    pub s_out: f64,
    /// Zero out-strength.
    pub peripheral: bool,
    /// Zero out- and in-strength.
    pub isolated: bool,
}

/// Node correlation similarity under both variants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CorrelationValues {
    pub row_row_unweighted: Option<f64>,
    pub row_row_weighted: Option<f64>,
    pub in_out_self_unweighted: Option<f64>,
    pub in_out_self_weighted: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct YearAnalysis {
    pub summary: NetworkSummary,
    pub correlations: CorrelationValues,
    /// Sorted by country code.
    pub nodes: Vec<NodeRow>,
    pub partition_unweighted: Option<Partition>,
    pub partition_weighted: Option<Partition>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    pub params: AnalysisParams,
    /// Strictly increasing years.
    pub rows: Vec<YearAnalysis>,
}

impl TimeSeries {
    pub fn summaries(&self) -> Vec<&NetworkSummary> {
        self.rows.iter().map(|r| &r.summary).collect()
    }
}

fn node_table(g: &NetTradeNetwork) -> Vec<NodeRow> {
    let d = degrees(g);
    let mut rows: Vec<NodeRow> = g
        .nodes()
        .iter()
        .enumerate()
        .map(|(i, c)| NodeRow {
            country: c.clone(),
            k_in: d.k_in[i],
            k_out: d.k_out[i],
            s_in: d.s_in[i],
            s_out: d.s_out[i],
            peripheral: d.s_out[i] == 0.0,
            isolated: d.s_out[i] == 0.0 && d.s_in[i] == 0.0,
        })
        .collect();
    rows.sort_by(|a, b| a.country.cmp(&b.country));
    rows
}

fn detect(
    g: &NetTradeNetwork,
    weighted: bool,
    params: &AnalysisParams,
) -> Result<(Option<Partition>, Option<f64>)> {
    match detect_communities(g, weighted, params.seed, params.resolution) {
        Ok(p) => {
            let q = modularity(g, &p, weighted)?;
            Ok((Some(p), Some(q)))
        }
        Err(e) if e.is_undefined() => Ok((None, None)),
        Err(e) => Err(e),
    }
}

/// Every metric for one network.
pub fn analyze_year(g: &NetTradeNetwork, params: &AnalysisParams) -> Result<YearAnalysis> {
    let correlations = CorrelationValues {
        row_row_unweighted: defined(node_correlation_similarity(
            g,
            false,
            CorrelationVariant::RowRow,
        ))?,
        row_row_weighted: defined(node_correlation_similarity(
            g,
            true,
            CorrelationVariant::RowRow,
        ))?,
        in_out_self_unweighted: defined(node_correlation_similarity(
            g,
            false,
            CorrelationVariant::InOutSelf,
        ))?,
        in_out_self_weighted: defined(node_correlation_similarity(
            g,
            true,
            CorrelationVariant::InOutSelf,
        ))?,
    };
    let (r_unweighted, r_weighted) = match params.correlation_variant {
        CorrelationVariant::RowRow => (
            correlations.row_row_unweighted,
            correlations.row_row_weighted,
        ),
        CorrelationVariant::InOutSelf => (
            correlations.in_out_self_unweighted,
            correlations.in_out_self_weighted,
        ),
    };
    let (partition_unweighted, q_unweighted) = detect(g, false, params)?;
    let (partition_weighted, q_weighted) = detect(g, true, params)?;
    Ok(YearAnalysis {
        summary: NetworkSummary {
            year: g.year(),
            n: g.node_count(),
            l: g.edge_count(),
            connectivity: defined(connectivity(g))?,
            h: defined(heterogeneity(g, false))?,
            h_w: defined(heterogeneity(g, true))?,
            r_unweighted,
            r_weighted,
            degree_corr: defined(degree_correlation(g))?,
            q_unweighted,
            q_weighted,
        },
        correlations,
        nodes: node_table(g),
        partition_unweighted,
        partition_weighted,
    })
}

/// Analyzes each year independently (in parallel) and assembles the rows
/// in year order. Duplicate years are rejected.
pub fn metric_series(networks: &[NetTradeNetwork], params: &AnalysisParams) -> Result<TimeSeries> {
    let mut order: Vec<usize> = (0..networks.len()).collect();
    order.sort_by_key(|&i| networks[i].year());
    if let Some(w) = order
        .windows(2)
        .find(|w| networks[w[0]].year() == networks[w[1]].year())
    {
        return Err(Error::InvalidNetwork(format!(
            "year {} appears more than once",
            networks[w[0]].year()
        )));
    }
    let rows = order
        .par_iter()
        .map(|&i| analyze_year(&networks[i], params))
        .collect::<Result<Vec<_>>>()?;
    Ok(TimeSeries {
        params: *params,
        rows,
    })
}

pub fn write_nodes_csv<W: Write>(rows: &[NodeRow], sink: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(sink);
    w.write_record([
        "country",
        "k_in",
        "k_out",
        "s_in",
        "s_out",
        "peripheral",
        "isolated",
    ])?;
    for r in rows {
        w.write_record([
            r.country.clone(),
            r.k_in.to_string(),
            r.k_out.to_string(),
            r.s_in.to_string(),
            r.s_out.to_string(),
            r.peripheral.to_string(),
            r.isolated.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_rankings_csv<W: Write>(tables: &[RankingTable], sink: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(["year", "direction", "rank", "country", "kcal"])?;
    for t in tables {
        for (rank, (country, kcal)) in t.entries.iter().enumerate() {
            w.write_record([
                t.year.to_string(),
                t.direction.to_string(),
                (rank + 1).to_string(),
                country.clone(),
                kcal.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// `year,fraction`; an undefined fraction is written as an empty field.
pub fn write_zero_export_csv<W: Write>(report: &ZeroExportReport, sink: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(["year", "fraction"])?;
    for (year, f) in &report.per_year {
        w.write_record([
            year.to_string(),
            f.map(|v| v.to_string()).unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_correlations_csv<W: Write>(series: &TimeSeries, sink: W) -> Result<()> {
    let cell = |v: Option<f64>| v.map(|v| v.to_string()).unwrap_or_default();
    let mut w = csv::Writer::from_writer(sink);
    w.write_record([
        "year",
        "row_row_unweighted",
        "row_row_weighted",
        "in_out_self_unweighted",
        "in_out_self_weighted",
    ])?;
    for row in &series.rows {
        let c = &row.correlations;
        w.write_record([
            row.summary.year.to_string(),
            cell(c.row_row_unweighted),
            cell(c.row_row_weighted),
            cell(c.in_out_self_unweighted),
            cell(c.in_out_self_weighted),
        ])?;
    }
    w.flush()?;
    Ok(())
}
