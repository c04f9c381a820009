//! Net food-calorie trade networks.
//!
//! Bilateral export records are converted to kilocalories, netted per
//! country pair into a directed antisymmetric network for each year, and
//! measured: degrees and strengths, connectivity, in/out heterogeneity,
//! node correlation similarity, and (weighted) modularity of detected
//! communities.
//!
//! ```
//! use calnet_core::{build_net_network, metrics, CalorieMatrix};
//!
//! // 5000 kcal BRA -> CHN and 2000 kcal back nets to one 3000 kcal edge
//! let m = CalorieMatrix::from_flows(1986, [("CHN", "BRA", 5000.0), ("BRA", "CHN", 2000.0)]).unwrap();
//! let g = build_net_network(&m);
//! assert_eq!(g.edge_count(), 1);
//! assert_eq!(metrics::connectivity(&g).unwrap(), 0.5);
//! ```

pub mod community;
pub mod config;
pub mod error;
pub mod ingest;
pub mod metrics;
pub mod netgraph;
pub mod pipeline;
pub mod report;
pub mod synth;

pub use community::{brute_force_best_partition, detect_communities, modularity, Partition};
pub use config::RunConfig;
pub use error::{Error, Result};
pub use ingest::{
    aggregate_flows, parse_nutritive_factors, parse_trade_records, to_calories, CalorieFlowRecord,
    Category, FactorTable, IngestConfig, IngestStats, MassUnit, TradeRecord,
};
pub use metrics::{CorrelationVariant, NetworkSummary, NodeDegrees};
pub use netgraph::{
    build_net_network, export_edge_list, symmetrize, CalorieMatrix, Edge, NetTradeNetwork,
};
pub use report::{AnalysisParams, Direction, RankingTable, TimeSeries};
