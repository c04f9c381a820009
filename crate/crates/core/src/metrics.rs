//! Degree, connectivity, heterogeneity and correlation measures on a
//! [`NetTradeNetwork`].
//!
//! Every function is pure. Metrics that are 0/0 on degenerate input return
//! [`Error::Undefined`] instead of a made-up number.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::netgraph::NetTradeNetwork;

#[derive(Debug, Clone, PartialEq)]
pub struct NodeDegrees {
    pub k_in: Vec<usize>,
    pub k_out: Vec<usize>,
    pub s_in: Vec<f64>,
    pub s_out: Vec<f64>,
}

impl NodeDegrees {
    pub fn len(&self) -> usize {
        self.k_in.len()
    }

    pub fn is_empty(&self) -> bool {
        self.k_in.is_empty()
    }
}

pub fn degrees(g: &NetTradeNetwork) -> NodeDegrees {
    let n = g.node_count();
    let mut d = NodeDegrees {
        k_in: vec![0; n],
        k_out: vec![0; n],
        s_in: vec![0.0; n],
        s_out: vec![0.0; n],
    };
    for e in g.edges() {
        d.k_out[e.source] += 1;
        d.s_out[e.source] += e.weight;
        d.k_in[e.target] += 1;
        d.s_in[e.target] += e.weight;
    }
    d
}

/// `L / (N (N - 1))`; at most 0.5 on a net network.
pub fn connectivity(g: &NetTradeNetwork) -> Result<f64> {
    let n = g.node_count();
    if n < 2 {
        return Err(Error::Undefined(format!(
            "connectivity needs N >= 2, got {n}"
        )));
    }
    Ok(g.edge_count() as f64 / (n as f64 * (n - 1) as f64))
}

/// Mean in/out imbalance over mean total degree (strength when `weighted`).
///
/// With `<k> = 2L/N` the two means share the factor `1/N`, so the ratio is
/// computed as `sum |in - out| / sum (in + out)`; this keeps pure
/// exporter/importer splits at exactly 1.
pub fn heterogeneity(g: &NetTradeNetwork, weighted: bool) -> Result<f64> {
    if g.edge_count() == 0 {
        return Err(Error::Undefined(
            "heterogeneity of a network without edges".into(),
        ));
    }
    let d = degrees(g);
    let (imbalance, total) = if weighted {
        d.s_in
            .iter()
            .zip(&d.s_out)
            .fold((0.0, 0.0), |(a, b), (&i, &o)| {
                (a + (i - o).abs(), b + (i + o))
            })
    } else {
        let (a, b) = d
            .k_in
            .iter()
            .zip(&d.k_out)
            .fold((0usize, 0usize), |(a, b), (&i, &o)| {
                (a + i.abs_diff(o), b + i + o)
            });
        (a as f64, b as f64)
    };
    Ok(imbalance / total)
}

/// Pearson correlation, or `None` when either series is constant.
pub fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    assert_eq!(x.len(), y.len(), "pearson: length mismatch");
    let (cx, sxx) = center(x)?;
    let (cy, syy) = center(y)?;
    let sxy: f64 = cx.iter().zip(&cy).map(|(a, b)| a * b).sum();
    Some(clamp_unit(sxy / (sxx * syy).sqrt()))
}

fn clamp_unit(r: f64) -> f64 {
    r.clamp(-1.0, 1.0)
}

/// Mean-centered copy and its sum of squares; `None` for constant input.
fn center(x: &[f64]) -> Option<(Vec<f64>, f64)> {
    let first = *x.first()?;
    if x.iter().all(|&v| v == first) {
        return None;
    }
    let mean = x.iter().sum::<f64>() / x.len() as f64;
    let c: Vec<f64> = x.iter().map(|&v| v - mean).collect();
    let ss = c.iter().map(|v| v * v).sum();
    Some((c, ss))
}

/// Pearson correlation between weighted out- and in-strength across nodes.
pub fn degree_correlation(g: &NetTradeNetwork) -> Result<f64> {
    if g.node_count() < 2 {
        return Err(Error::Undefined("degree correlation needs N >= 2".into()));
    }
    let d = degrees(g);
    pearson(&d.s_out, &d.s_in)
        .ok_or_else(|| Error::Undefined("in- or out-strength has zero variance".into()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum CorrelationVariant {
    /// Pairwise correlation of in-profile rows, averaged over ordered pairs.
    #[default]
    #[serde(rename = "row-row")]
    RowRow,
    /// Per-node correlation of its in-profile with its out-profile.
    #[serde(rename = "in-out-self")]
    InOutSelf,
}

impl FromStr for CorrelationVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "row-row" => Ok(CorrelationVariant::RowRow),
            "in-out-self" => Ok(CorrelationVariant::InOutSelf),
            other => Err(Error::Config(format!(
                "unknown correlation variant `{other}` (expected row-row or in-out-self)"
            ))),
        }
    }
}

impl fmt::Display for CorrelationVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CorrelationVariant::RowRow => "row-row",
            CorrelationVariant::InOutSelf => "in-out-self",
        })
    }
}

/// Node correlation similarity.
///
/// Rows are in-profiles over all N columns, diagonal included. Constant rows
/// contribute 0 to every pair they take part in.
pub fn node_correlation_similarity(
    g: &NetTradeNetwork,
    weighted: bool,
    variant: CorrelationVariant,
) -> Result<f64> {
    let n = g.node_count();
    if n < 2 {
        return Err(Error::Undefined(format!(
            "node correlation similarity needs N >= 2, got {n}"
        )));
    }
    let m = g.dense_in_matrix(weighted);
    Ok(match variant {
        CorrelationVariant::RowRow => mean_pairwise_row_correlation(&m, n),
        CorrelationVariant::InOutSelf => {
            let total: f64 = (0..n)
                .map(|i| {
                    let row = &m[i * n..(i + 1) * n];
                    let col: Vec<f64> = (0..n).map(|k| m[k * n + i]).collect();
                    pearson(row, &col).unwrap_or(0.0)
                })
                .sum();
            total / n as f64
        }
    })
}

/// Mean Pearson correlation over all ordered pairs of distinct rows of a
/// row-major `rows x cols` matrix; pairs involving a constant row count as 0.
///
/// Per-row partial sums run in parallel but are combined in row order, so
/// the result does not depend on the thread count.
pub fn mean_pairwise_row_correlation(m: &[f64], cols: usize) -> f64 {
    let rows = m.len().checked_div(cols).unwrap_or(0);
    if rows < 2 {
        return 0.0;
    }
    let centered: Vec<Option<(Vec<f64>, f64)>> = m.chunks(cols).map(center).collect();
    let partial: Vec<f64> = (0..rows)
        .into_par_iter()
        .map(|i| {
            let Some((ci, si)) = &centered[i] else {
                return 0.0;
            };
            centered[i + 1..]
                .iter()
                .map(|other| match other {
                    Some((cj, sj)) => {
                        let dot: f64 = ci.iter().zip(cj).map(|(a, b)| a * b).sum();
                        clamp_unit(dot / (si * sj).sqrt())
                    }
                    None => 0.0,
                })
                .sum()
        })
        .collect();
    let upper: f64 = partial.iter().sum();
    2.0 * upper / (rows as f64 * (rows - 1) as f64)
}

/// One year of whole-network measures. `None` marks an undefined value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkSummary {
    pub year: i32,
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "L")]
    pub l: usize,
    pub connectivity: Option<f64>,
    pub h: Option<f64>,
    pub h_w: Option<f64>,
    pub r_unweighted: Option<f64>,
    pub r_weighted: Option<f64>,
    pub degree_corr: Option<f64>,
    #[serde(rename = "Q_unweighted")]
    pub q_unweighted: Option<f64>,
    #[serde(rename = "Q_weighted")]
    pub q_weighted: Option<f64>,
}

/// Maps undefined-input errors to `None` and keeps every other error.
pub fn defined(r: Result<f64>) -> Result<Option<f64>> {
    match r {
        Ok(v) => Ok(Some(v)),
        Err(e) if e.is_undefined() => Ok(None),
        Err(e) => Err(e),
    }
}
