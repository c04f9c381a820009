//! Seeded synthetic networks for tests and benchmarks.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::netgraph::{CalorieMatrix, Edge, NetTradeNetwork};

fn names(prefix: &str, n: usize) -> Vec<String> {
    (0..n).map(|i| format!("{prefix}{i:03}")).collect()
}

/// Positive weight spread over several orders of magnitude.
fn random_weight<R: Rng>(rng: &mut R) -> f64 {
    (0.5 + rng.random::<f64>()) * 10f64.powi(rng.random_range(0..10))
}

/// `exporters` nodes each sending `weight` to every one of `importers` nodes.
pub fn complete_bipartite(exporters: usize, importers: usize, weight: f64) -> NetTradeNetwork {
    let mut nodes = names("E", exporters);
    nodes.extend(names("I", importers));
    let edges = (0..exporters)
        .flat_map(|s| {
            (0..importers).map(move |t| Edge {
                source: s,
                target: exporters + t,
                weight,
            })
        })
        .collect();
    NetTradeNetwork::from_edges(0, nodes, edges).expect("bipartite network is valid")
}

/// Directed cycle `0 -> 1 -> ... -> n-1 -> 0` (n >= 3).
pub fn cycle(n: usize, weight: f64) -> NetTradeNetwork {
    assert!(n >= 3, "a net-flow cycle needs at least 3 nodes");
    let edges = (0..n)
        .map(|i| Edge {
            source: i,
            target: (i + 1) % n,
            weight,
        })
        .collect();
    NetTradeNetwork::from_edges(0, names("C", n), edges).expect("cycle is valid")
}

/// `A -> B` and `C -> D` with unit weights.
pub fn disjoint_dyads() -> NetTradeNetwork {
    NetTradeNetwork::from_named_edges(0, ["A", "B", "C", "D"], [("A", "B", 1.0), ("C", "D", 1.0)])
        .expect("dyads are valid")
}

/// Each unordered pair gets an edge with probability `density`, in a random
/// direction and with a random positive weight.
pub fn random_net_network<R: Rng>(rng: &mut R, n: usize, density: f64) -> NetTradeNetwork {
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if rng.random_bool(density) {
                let (source, target) = if rng.random_bool(0.5) { (i, j) } else { (j, i) };
                edges.push(Edge {
                    source,
                    target,
                    weight: random_weight(rng),
                });
            }
        }
    }
    NetTradeNetwork::from_edges(0, names("N", n), edges).expect("generated network is valid")
}

/// Random gross-flow matrix. About a tenth of the reciprocal pairs are
/// exact ties, so netting produces no edge for them.
pub fn random_calorie_matrix<R: Rng>(rng: &mut R, n: usize, density: f64) -> CalorieMatrix {
    let nodes = names("N", n);
    let mut flows: Vec<(&str, &str, f64)> = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            let forward = rng.random_bool(density).then(|| random_weight(rng));
            let backward = match forward {
                Some(w) if rng.random_bool(0.1) => Some(w),
                _ => rng.random_bool(density).then(|| random_weight(rng)),
            };
            if let Some(w) = forward {
                flows.push((&nodes[i], &nodes[j], w));
            }
            if let Some(w) = backward {
                flows.push((&nodes[j], &nodes[i], w));
            }
        }
    }
    CalorieMatrix::with_nodes(0, nodes.iter().map(String::as_str), flows)
        .expect("generated matrix is valid")
}

/// Two groups of `group_size` nodes, in-group pairs linked with probability
/// `p_in` (random direction, weights in [1, 10)), joined by one unit edge.
/// Returns the network and the planted group of each node.
pub fn planted_partition<R: Rng>(
    rng: &mut R,
    group_size: usize,
    p_in: f64,
) -> (NetTradeNetwork, Vec<usize>) {
    let n = 2 * group_size;
    let group = |i: usize| i / group_size;
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if group(i) == group(j) && rng.random_bool(p_in) {
                let (source, target) = if rng.random_bool(0.5) { (i, j) } else { (j, i) };
                edges.push(Edge {
                    source,
                    target,
                    weight: rng.random_range(1.0..10.0),
                });
            }
        }
    }
    edges.push(Edge {
        source: group_size - 1,
        target: group_size,
        weight: 1.0,
    });
    let g = NetTradeNetwork::from_edges(0, names("P", n), edges).expect("planted network is valid");
    (g, (0..n).map(group).collect())
}

/// Same network with node codes and indices shuffled.
pub fn permuted<R: Rng>(g: &NetTradeNetwork, rng: &mut R) -> NetTradeNetwork {
    let n = g.node_count();
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(rng);
    let mut nodes = vec![String::new(); n];
    for (old, &new) in perm.iter().enumerate() {
        nodes[new] = g.nodes()[old].clone();
    }
    let mut edges: Vec<Edge> = g
        .edges()
        .iter()
        .map(|e| Edge {
            source: perm[e.source],
            target: perm[e.target],
            weight: e.weight,
        })
        .collect();
    edges.shuffle(rng);
    NetTradeNetwork::from_edges(g.year(), nodes, edges).expect("permutation keeps validity")
}
