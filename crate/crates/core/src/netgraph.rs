//! Gross caloric flow matrices and the net-flow networks built from them.
//!
//! Index convention: `c_ij` / `w_ij` is the flow *from* `j` *into* `i`.
//! [`Edge`] spells this out as `source` (exporter) and `target` (importer).

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::Write;

use crate::error::{Error, Result};

/// Per-year gross flows `c[importer][exporter]`, sparse.
#[derive(Debug, Clone, PartialEq)]
pub struct CalorieMatrix {
    year: i32,
    nodes: Vec<String>,
    flows: BTreeMap<(usize, usize), f64>,
}

impl CalorieMatrix {
    /// Builds a matrix from `(importer, exporter, kcal)` triples, summing
    /// repeated pairs in input order. Nodes are every code seen, sorted.
    pub fn from_flows<'a, I>(year: i32, flows: I) -> Result<Self>
    where
        I: IntoIterator<Item = (&'a str, &'a str, f64)>,
    {
        let flows: Vec<_> = flows.into_iter().collect();
        let nodes: BTreeSet<&str> = flows.iter().flat_map(|&(i, j, _)| [i, j]).collect();
        Self::with_nodes(year, nodes, flows)
    }

    /// Like [`from_flows`](Self::from_flows) with an explicit node list, so
    /// countries without any flow can be kept.
    pub fn with_nodes<'a, N, I>(year: i32, nodes: N, flows: I) -> Result<Self>
    where
        N: IntoIterator<Item = &'a str>,
        I: IntoIterator<Item = (&'a str, &'a str, f64)>,
    {
        let nodes: Vec<String> = nodes.into_iter().map(str::to_string).collect();
        let index = index_nodes(&nodes)?;
        let mut map = BTreeMap::new();
        for (importer, exporter, kcal) in flows {
            if !(kcal.is_finite() && kcal >= 0.0) {
                return Err(Error::InvalidNetwork(format!(
                    "flow {exporter}->{importer} has invalid kcal {kcal}"
                )));
            }
            if importer == exporter {
                return Err(Error::InvalidNetwork(format!("self-flow on {importer}")));
            }
            let lookup = |code: &str| {
                index
                    .get(code)
                    .copied()
                    .ok_or_else(|| Error::InvalidNetwork(format!("unknown node {code}")))
            };
            *map.entry((lookup(importer)?, lookup(exporter)?))
                .or_insert(0.0) += kcal;
        }
        Ok(CalorieMatrix {
            year,
            nodes,
            flows: map,
        })
    }

    pub fn year(&self) -> i32 {
        self.year
    }

    pub fn nodes(&self) -> &[String] {
        &self.nodes
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    /// Number of stored ordered pairs.
    pub fn entry_count(&self) -> usize {
        self.flows.len()
    }

    /// Gross flow into `importer` from `exporter`; zero when absent.
    pub fn get(&self, importer: &str, exporter: &str) -> f64 {
        let pos = |c: &str| self.nodes.iter().position(|n| n == c);
        match (pos(importer), pos(exporter)) {
            (Some(i), Some(j)) => self.get_index(i, j),
            _ => 0.0,
        }
    }

    pub fn get_index(&self, importer: usize, exporter: usize) -> f64 {
        self.flows
            .get(&(importer, exporter))
            .copied()
            .unwrap_or(0.0)
    }

    /// `((importer, exporter), kcal)` in index order.
    pub fn entries(&self) -> impl Iterator<Item = ((usize, usize), f64)> + '_ {
        self.flows.iter().map(|(&k, &v)| (k, v))
    }

    pub fn total(&self) -> f64 {
        self.flows.values().sum()
    }
}

fn index_nodes(nodes: &[String]) -> Result<HashMap<String, usize>> {
    let mut index = HashMap::with_capacity(nodes.len());
    for (i, n) in nodes.iter().enumerate() {
        if index.insert(n.clone(), i).is_some() {
            return Err(Error::InvalidNetwork(format!("duplicate node {n}")));
        }
    }
    Ok(index)
}

/// A directed net-flow edge: `source` exports `weight` kcal net to `target`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub source: usize,
    pub target: usize,
    pub weight: f64,
}

/// Directed, weighted, antisymmetric net-flow network for one year.
#[derive(Debug, Clone, PartialEq)]
pub struct NetTradeNetwork {
    year: i32,
    nodes: Vec<String>,
    index: HashMap<String, usize>,
    /// Sorted by `(source, target)`.
    edges: Vec<Edge>,
}

impl NetTradeNetwork {
    /// Validates and stores a network. Rejects duplicate nodes, self loops,
    /// non-positive weights, repeated pairs and reciprocal edges.
    pub fn from_edges(year: i32, nodes: Vec<String>, mut edges: Vec<Edge>) -> Result<Self> {
        let index = index_nodes(&nodes)?;
        let n = nodes.len();
        let mut pairs = BTreeSet::new();
        for e in &edges {
            if e.source >= n || e.target >= n {
                return Err(Error::InvalidNetwork(format!(
                    "edge {}->{} out of range for {n} nodes",
                    e.source, e.target
                )));
            }
            if e.source == e.target {
                return Err(Error::InvalidNetwork(format!(
                    "self loop on {}",
                    nodes[e.source]
                )));
            }
            if !(e.weight.is_finite() && e.weight > 0.0) {
                return Err(Error::InvalidNetwork(format!(
                    "edge {}->{} has non-positive weight {}",
                    nodes[e.source], nodes[e.target], e.weight
                )));
            }
            let key = (e.source.min(e.target), e.source.max(e.target));
            if !pairs.insert(key) {
                return Err(Error::InvalidNetwork(format!(
                    "pair {}-{} carries more than one edge",
                    nodes[key.0], nodes[key.1]
                )));
            }
        }
        edges.sort_by_key(|e| (e.source, e.target));
        Ok(NetTradeNetwork {
            year,
            nodes,
            index,
            edges,
        })
    }

    /// Convenience constructor from `(source, target, weight)` code triples.
    pub fn from_named_edges<'a, N, E>(year: i32, nodes: N, edges: E) -> Result<Self>
    where
        N: IntoIterator<Item = &'a str>,
        E: IntoIterator<Item = (&'a str, &'a str, f64)>,
    {
        let nodes: Vec<String> = nodes.into_iter().map(str::to_string).collect();
        let index = index_nodes(&nodes)?;
        let lookup = |c: &str| {
            index
                .get(c)
                .copied()
                .ok_or_else(|| Error::InvalidNetwork(format!("unknown node {c}")))
        };
        let edges = edges
            .into_iter()
            .map(|(s, t, w)| {
                Ok(Edge {
                    source: lookup(s)?,
                    target: lookup(t)?,
                    weight: w,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_edges(year, nodes, edges)
    }

    pub fn year(&self) -> i32 {
        self.year
    }

    pub fn nodes(&self) -> &[String] {
        &self.nodes
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    /// L (the number of directed edges).
    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// W, summed in edge order.
    pub fn total_weight(&self) -> f64 {
        self.edges.iter().map(|e| e.weight).sum()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn index_of(&self, code: &str) -> Option<usize> {
        self.index.get(code).copied()
    }

    /// `w_ij`: net flow from `j` into `i` (zero when there is no such edge).
    pub fn weight(&self, importer: usize, exporter: usize) -> f64 {
        self.edges
            .binary_search_by_key(&(exporter, importer), |e| (e.source, e.target))
            .map_or(0.0, |k| self.edges[k].weight)
    }

    /// Dense row-major in-profile matrix: entry `[i * N + j]` is `w_ij`
    /// (or `a_ij` when `weighted` is false).
    pub fn dense_in_matrix(&self, weighted: bool) -> Vec<f64> {
        let n = self.nodes.len();
        let mut m = vec![0.0; n * n];
        for e in &self.edges {
            m[e.target * n + e.source] = if weighted { e.weight } else { 1.0 };
        }
        m
    }

    /// Same network with every weight multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        let edges = self
            .edges
            .iter()
            .map(|e| Edge {
                weight: e.weight * factor,
                ..*e
            })
            .collect();
        Self::from_edges(self.year, self.nodes.clone(), edges)
    }

    /// Reads the net weights back as a gross matrix (one direction per pair).
    pub fn to_calorie_matrix(&self) -> CalorieMatrix {
        CalorieMatrix {
            year: self.year,
            nodes: self.nodes.clone(),
            flows: self
                .edges
                .iter()
                .map(|e| ((e.target, e.source), e.weight))
                .collect(),
        }
    }
}

/// Nets both directions of every pair into at most one edge.
///
/// Exact ties (including both zero) produce no edge. All nodes of `m` are
/// kept, even those left without edges.
pub fn build_net_network(m: &CalorieMatrix) -> NetTradeNetwork {
    let mut edges = Vec::new();
    for (&(i, j), &c_ij) in &m.flows {
        let c_ji = match m.flows.get(&(j, i)) {
            // the mirror entry handles this pair
            Some(_) if (j, i) < (i, j) => continue,
            Some(&v) => v,
            None => 0.0,
        };
        let net = c_ij - c_ji;
        if net > 0.0 {
            edges.push(Edge {
                source: j,
                target: i,
                weight: net,
            });
        } else if net < 0.0 {
            edges.push(Edge {
                source: i,
                target: j,
                weight: -net,
            });
        }
    }
    edges.sort_by_key(|e| (e.source, e.target));
    NetTradeNetwork {
        year: m.year,
        nodes: m.nodes.clone(),
        index: m
            .nodes
            .iter()
            .enumerate()
            .map(|(i, n)| (n.clone(), i))
            .collect(),
        edges,
    }
}

/// Undirected weighted view; each directed edge becomes one undirected edge.
#[derive(Debug, Clone, PartialEq)]
pub struct UndirectedView {
    /// Neighbors of each node, ascending by index.
    adjacency: Vec<Vec<(usize, f64)>>,
    edge_count: usize,
}

impl UndirectedView {
    pub fn node_count(&self) -> usize {
        self.adjacency.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    pub fn neighbors(&self, node: usize) -> &[(usize, f64)] {
        &self.adjacency[node]
    }

    pub fn degree(&self, node: usize) -> usize {
        self.adjacency[node].len()
    }

    /// Sum of incident weights, accumulated in neighbor order.
    pub fn strength(&self, node: usize) -> f64 {
        self.adjacency[node].iter().map(|&(_, w)| w).sum()
    }

    /// Same topology with all weights set to 1.
    pub fn unweighted(&self) -> UndirectedView {
        UndirectedView {
            adjacency: self
                .adjacency
                .iter()
                .map(|nbrs| nbrs.iter().map(|&(j, _)| (j, 1.0)).collect())
                .collect(),
            edge_count: self.edge_count,
        }
    }
}

pub fn symmetrize(g: &NetTradeNetwork) -> UndirectedView {
    let mut adjacency = vec![Vec::new(); g.node_count()];
    for e in &g.edges {
        adjacency[e.source].push((e.target, e.weight));
        adjacency[e.target].push((e.source, e.weight));
    }
    for nbrs in &mut adjacency {
        nbrs.sort_by_key(|&(j, _)| j);
    }
    UndirectedView {
        adjacency,
        edge_count: g.edge_count(),
    }
}

/// Writes `year,source,target,kcal`, one row per edge, sorted by the
/// (source, target) country codes. Weights use the shortest decimal form
/// that parses back to the same `f64`.
pub fn export_edge_list<W: Write>(g: &NetTradeNetwork, sink: W) -> Result<()> {
    let mut rows: Vec<(&str, &str, f64)> = g
        .edges
        .iter()
        .map(|e| {
            (
                g.nodes[e.source].as_str(),
                g.nodes[e.target].as_str(),
                e.weight,
            )
        })
        .collect();
    rows.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));

    let mut w = csv::Writer::from_writer(sink);
    w.write_record(["year", "source", "target", "kcal"])?;
    let year = g.year.to_string();
    for (s, t, kcal) in rows {
        w.write_record([year.as_str(), s, t, &kcal.to_string()])?;
    }
    w.flush()?;
    Ok(())
}
