//! Modularity of a partition, Louvain-style community detection, and an
//! exhaustive search used as a test oracle.
//!
//! Everything is evaluated on the undirected view of the net network
//! ([`symmetrize`]). Net networks have no reciprocal edges, so nothing is
//! lost. Degrees are total degrees `k_in + k_out` (strengths when weighted).

use std::collections::HashMap;
use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::netgraph::{symmetrize, NetTradeNetwork, UndirectedView};

/// Node-count limit for [`brute_force_best_partition`] unless overridden.
pub const DEFAULT_BRUTE_FORCE_LIMIT: usize = 10;

/// Normalized gains closer than this are treated as equal.
const GAIN_TIE_EPS: f64 = 1e-12;

/// Upper bound on local-moving sweeps per level; each sweep that moves a
/// node raises modularity by more than `GAIN_TIE_EPS`, so this is never hit
/// on sane input.
const MAX_SWEEPS: usize = 10_000;

/// Community of every node, canonically numbered by first appearance in
/// node order (0-based internally, 1-based when written out).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Partition {
    assignment: Vec<usize>,
    communities: usize,
}

impl Partition {
    /// Canonicalizes arbitrary labels.
    pub fn from_labels<L: Eq + std::hash::Hash>(labels: impl IntoIterator<Item = L>) -> Self {
        let mut seen: HashMap<L, usize> = HashMap::new();
        let assignment = labels
            .into_iter()
            .map(|l| {
                let next = seen.len();
                *seen.entry(l).or_insert(next)
            })
            .collect();
        Partition {
            assignment,
            communities: seen.len(),
        }
    }

    /// Labels keyed by country code; every node of `g` must be present.
    pub fn from_named<L: Eq + std::hash::Hash + Clone>(
        g: &NetTradeNetwork,
        labels: &HashMap<String, L>,
    ) -> Result<Self> {
        let ordered = g
            .nodes()
            .iter()
            .map(|code| {
                labels
                    .get(code)
                    .cloned()
                    .ok_or_else(|| Error::Partition(format!("node {code} has no community")))
            })
            .collect::<Result<Vec<L>>>()?;
        Ok(Self::from_labels(ordered))
    }

    pub fn single(n: usize) -> Self {
        Self::from_labels(std::iter::repeat_n(0, n))
    }

    pub fn singletons(n: usize) -> Self {
        Self::from_labels(0..n)
    }

    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    pub fn community_of(&self, node: usize) -> usize {
        self.assignment[node]
    }

    pub fn community_count(&self) -> usize {
        self.communities
    }

    pub fn len(&self) -> usize {
        self.assignment.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignment.is_empty()
    }

    /// Writes `node,community` in node-code order with 1-based communities.
    pub fn write_csv<W: Write>(&self, g: &NetTradeNetwork, sink: W) -> Result<()> {
        self.check(g)?;
        let mut rows: Vec<(&str, usize)> = g
            .nodes()
            .iter()
            .map(String::as_str)
            .zip(self.assignment.iter().map(|c| c + 1))
            .collect();
        rows.sort_unstable();
        let mut w = csv::Writer::from_writer(sink);
        w.write_record(["node", "community"])?;
        for (node, c) in rows {
            w.write_record([node, &c.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }

    fn check(&self, g: &NetTradeNetwork) -> Result<()> {
        if self.len() != g.node_count() {
            return Err(Error::Partition(format!(
                "partition covers {} nodes, network has {}",
                self.len(),
                g.node_count()
            )));
        }
        Ok(())
    }
}

fn view(g: &NetTradeNetwork, weighted: bool) -> Result<UndirectedView> {
    if g.edge_count() == 0 {
        return Err(Error::Undefined(
            "modularity of a network without edges".into(),
        ));
    }
    let v = symmetrize(g);
    Ok(if weighted { v } else { v.unweighted() })
}

/// Generalized modularity with resolution `gamma` on an undirected view.
///
/// The total `2m` is the node-order sum of strengths and each node's
/// internal weight is summed in the same neighbor order, so the
/// single-community partition scores exactly 0 at `gamma = 1`.
fn quality(v: &UndirectedView, assignment: &[usize], communities: usize, gamma: f64) -> f64 {
    let strengths: Vec<f64> = (0..v.node_count()).map(|i| v.strength(i)).collect();
    let two_m: f64 = strengths.iter().sum();
    let mut internal = vec![0.0; communities];
    let mut total = vec![0.0; communities];
    for (i, &c) in assignment.iter().enumerate() {
        let inner: f64 = v
            .neighbors(i)
            .iter()
            .filter(|&&(j, _)| assignment[j] == c)
            .map(|&(_, w)| w)
            .sum();
        internal[c] += inner;
        total[c] += strengths[i];
    }
    internal
        .iter()
        .zip(&total)
        .map(|(&inside, &tot)| {
            let share = tot / two_m;
            inside / two_m - gamma * share * share
        })
        .sum()
}

/// Newman-Girvan modularity `Q` (or `Q^w` when `weighted`).
pub fn modularity(g: &NetTradeNetwork, p: &Partition, weighted: bool) -> Result<f64> {
    p.check(g)?;
    let v = view(g, weighted)?;
    Ok(quality(&v, &p.assignment, p.communities, 1.0))
}

/// Aggregated graph used by the multi-level optimizer. `loops[i]` is the
/// weight of all (ordered) pairs collapsed into node `i`.
struct LevelGraph {
    adjacency: Vec<Vec<(usize, f64)>>,
    loops: Vec<f64>,
}

impl LevelGraph {
    fn from_view(v: &UndirectedView) -> Self {
        LevelGraph {
            adjacency: (0..v.node_count())
                .map(|i| v.neighbors(i).to_vec())
                .collect(),
            loops: vec![0.0; v.node_count()],
        }
    }

    fn len(&self) -> usize {
        self.adjacency.len()
    }

    fn strength(&self, i: usize) -> f64 {
        self.loops[i] + self.adjacency[i].iter().map(|&(_, w)| w).sum::<f64>()
    }

    fn aggregate(&self, community: &[usize], count: usize) -> LevelGraph {
        let mut loops = vec![0.0; count];
        let mut links: Vec<std::collections::BTreeMap<usize, f64>> =
            vec![Default::default(); count];
        for i in 0..self.len() {
            let ci = community[i];
            loops[ci] += self.loops[i];
            for &(j, w) in &self.adjacency[i] {
                let cj = community[j];
                if ci == cj {
                    loops[ci] += w;
                } else {
                    *links[ci].entry(cj).or_insert(0.0) += w;
                }
            }
        }
        LevelGraph {
            adjacency: links.into_iter().map(|m| m.into_iter().collect()).collect(),
            loops,
        }
    }
}

/// One level of greedy node moves. Returns the (non-canonical) community
/// of each level node and whether anything moved.
fn local_moving<R: Rng>(g: &LevelGraph, gamma: f64, rng: &mut R) -> (Vec<usize>, bool) {
    let n = g.len();
    let strength: Vec<f64> = (0..n).map(|i| g.strength(i)).collect();
    let two_m: f64 = strength.iter().sum();
    let mut community: Vec<usize> = (0..n).collect();
    let mut total = strength.clone();

    let mut link_weight = vec![0.0; n];
    let mut is_touched = vec![false; n];
    let mut touched: Vec<usize> = Vec::new();
    let mut candidates: Vec<usize> = Vec::new();
    let mut any_moved = false;

    for _ in 0..MAX_SWEEPS {
        let mut moved = false;
        for i in 0..n {
            let own = community[i];
            let k_i = strength[i];
            for &(j, w) in &g.adjacency[i] {
                let c = community[j];
                if !is_touched[c] {
                    is_touched[c] = true;
                    touched.push(c);
                }
                link_weight[c] += w;
            }
            total[own] -= k_i;

            let gain = |c: usize, links: f64| (links - gamma * total[c] * k_i / two_m) / two_m;
            let stay = gain(own, link_weight[own]);
            let best = touched
                .iter()
                .filter(|&&c| c != own)
                .map(|&c| gain(c, link_weight[c]))
                .fold(f64::NEG_INFINITY, f64::max);

            let mut target = own;
            if best > stay + GAIN_TIE_EPS {
                candidates.clear();
                candidates.extend(
                    touched
                        .iter()
                        .copied()
                        .filter(|&c| c != own && gain(c, link_weight[c]) >= best - GAIN_TIE_EPS),
                );
                candidates.sort_unstable();
                target = if candidates.len() == 1 {
                    candidates[0]
                } else {
                    candidates[rng.random_range(0..candidates.len())]
                };
            }

            total[target] += k_i;
            if target != own {
                community[i] = target;
                moved = true;
            }
            for &c in &touched {
                link_weight[c] = 0.0;
                is_touched[c] = false;
            }
            touched.clear();
        }
        if !moved {
            break;
        }
        any_moved = true;
    }
    (community, any_moved)
}

/// Greedy multi-level modularity maximization (Louvain scheme).
///
/// Nodes are visited in ascending index order; `seed` only decides between
/// moves of equal gain. The single-community partition is returned unless
/// the search beats it by more than the tie tolerance.
pub fn detect_communities(
    g: &NetTradeNetwork,
    weighted: bool,
    seed: u64,
    resolution: f64,
) -> Result<Partition> {
    if !(resolution.is_finite() && resolution > 0.0) {
        return Err(Error::Config(format!(
            "resolution must be positive, got {resolution}"
        )));
    }
    let v = view(g, weighted)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut membership: Vec<usize> = (0..g.node_count()).collect();
    let mut level = LevelGraph::from_view(&v);
    loop {
        let (community, moved) = local_moving(&level, resolution, &mut rng);
        if !moved {
            break;
        }
        let canon = Partition::from_labels(community);
        for m in &mut membership {
            *m = canon.assignment[*m];
        }
        level = level.aggregate(&canon.assignment, canon.communities);
    }

    let found = Partition::from_labels(membership);
    let single = Partition::single(g.node_count());
    let q_found = quality(&v, &found.assignment, found.communities, 1.0);
    let q_single = quality(&v, &single.assignment, single.communities, 1.0);
    // Within the tie tolerance the coarser answer wins, so rounding noise
    // from rescaled weights cannot flip the result.
    Ok(if q_found > q_single + GAIN_TIE_EPS {
        found
    } else {
        single
    })
}

/// Exhaustive search over every set partition (restricted growth strings,
/// visited in lexicographic order). Returns the first partition whose
/// modularity is not beaten by more than 1e-12.
pub fn brute_force_best_partition(
    g: &NetTradeNetwork,
    weighted: bool,
    max_n: usize,
) -> Result<(Partition, f64)> {
    let n = g.node_count();
    if n > max_n {
        return Err(Error::TooLarge {
            nodes: n,
            limit: max_n,
        });
    }
    let v = view(g, weighted)?;
    let mut labels = vec![0usize; n];
    let mut best: Option<(Vec<usize>, usize, f64)> = None;
    enumerate_rgs(&mut labels, 0, 0, &mut |rgs, blocks| {
        let q = quality(&v, rgs, blocks, 1.0);
        if best.as_ref().is_none_or(|&(_, _, b)| q > b + 1e-12) {
            best = Some((rgs.to_vec(), blocks, q));
        }
    });
    let (assignment, communities, q) = best.expect("a network with edges has at least one node");
    Ok((
        Partition {
            assignment,
            communities,
        },
        q,
    ))
}

fn enumerate_rgs(
    labels: &mut [usize],
    pos: usize,
    blocks: usize,
    visit: &mut impl FnMut(&[usize], usize),
) {
    if pos == labels.len() {
        visit(labels, blocks);
        return;
    }
    for b in 0..=blocks {
        labels[pos] = b;
        enumerate_rgs(labels, pos + 1, blocks.max(b + 1), visit);
    }
}

/// Parameters recorded next to written partitions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectionParams {
    pub seed: u64,
    pub resolution: f64,
    pub weighted: bool,
}

/// Per-community diagnostics (1-based `community`).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CommunityStats {
    pub community: usize,
    pub size: usize,
    pub internal_edges: usize,
    pub internal_weight: f64,
    /// `internal_edges / (size (size - 1))`; absent for single-node groups.
    pub internal_connectivity: Option<f64>,
}

pub fn community_report(g: &NetTradeNetwork, p: &Partition) -> Result<Vec<CommunityStats>> {
    p.check(g)?;
    let mut stats: Vec<CommunityStats> = (0..p.communities)
        .map(|c| CommunityStats {
            community: c + 1,
            size: 0,
            internal_edges: 0,
            internal_weight: 0.0,
            internal_connectivity: None,
        })
        .collect();
    for &c in &p.assignment {
        stats[c].size += 1;
    }
    for e in g.edges() {
        let c = p.assignment[e.source];
        if c == p.assignment[e.target] {
            stats[c].internal_edges += 1;
            stats[c].internal_weight += e.weight;
        }
    }
    for s in &mut stats {
        if s.size >= 2 {
            s.internal_connectivity =
                Some(s.internal_edges as f64 / (s.size * (s.size - 1)) as f64);
        }
    }
    Ok(stats)
}
