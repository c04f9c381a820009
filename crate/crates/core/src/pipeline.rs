//! End-to-end commands: `build`, `analyze` and `validate`.
//!
//! Every output file is written to a temporary file in the output directory
//! and renamed into place.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::community::{community_report, CommunityStats, DetectionParams};
use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::ingest::{
    aggregate_by_year, convert_all, parse_nutritive_factors, parse_trade_records, FactorTable,
    IngestStats, RowIssue,
};
use crate::netgraph::{build_net_network, export_edge_list, NetTradeNetwork};
use crate::report::{
    metric_series, rank_top, write_correlations_csv, write_nodes_csv, write_rankings_csv,
    write_zero_export_csv, zero_export_fraction, Direction, StageMean, TimeSeries,
};

struct HashingReader<R> {
    inner: R,
    hasher: Sha256,
    bytes: u64,
}

impl<R: Read> Read for HashingReader<R> {
    fn read(&mut self, buf: &mut [u8]) -> std::io::Result<usize> {
        let n = self.inner.read(buf)?;
        self.hasher.update(&buf[..n]);
        self.bytes += n as u64;
        Ok(n)
    }
}

impl<R: Read> HashingReader<R> {
    fn new(inner: R) -> Self {
        HashingReader {
            inner,
            hasher: Sha256::new(),
            bytes: 0,
        }
    }

    /// Drains whatever the parser left unread and returns the checksum.
    fn finish(mut self, role: &str, path: &Path) -> Result<InputDigest> {
        std::io::copy(&mut self, &mut std::io::sink()).map_err(|e| Error::path(path, e))?;
        Ok(InputDigest {
            role: role.to_string(),
            path: path.display().to_string(),
            bytes: self.bytes,
            sha256: hex::encode(self.hasher.finalize()),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct InputDigest {
    pub role: String,
    pub path: String,
    pub bytes: u64,
    pub sha256: String,
}

fn open(path: &Path) -> Result<HashingReader<BufReader<File>>> {
    let f = File::open(path).map_err(|e| Error::path(path, e))?;
    Ok(HashingReader::new(BufReader::with_capacity(1 << 20, f)))
}

/// Everything ingestion produces before anything is written.
#[derive(Debug, Clone)]
pub struct Built {
    pub stats: IngestStats,
    pub issues: Vec<RowIssue>,
    pub inputs: Vec<InputDigest>,
    /// One network per year, ascending.
    pub networks: Vec<NetTradeNetwork>,
}

pub fn load_factors(config: &RunConfig) -> Result<(FactorTable, InputDigest)> {
    let mut reader = open(&config.factors_path)?;
    let factors = parse_nutritive_factors(&mut reader)?;
    Ok((factors, reader.finish("factors", &config.factors_path)?))
}

/// Reads both inputs and builds every year's net network in memory.
pub fn build_networks(config: &RunConfig) -> Result<Built> {
    config.validate()?;
    let (factors, factor_digest) = load_factors(config)?;
    let mut reader = open(&config.trade_path)?;
    let parsed = parse_trade_records(&mut reader, &config.ingest())?;
    let trade_digest = reader.finish("trade", &config.trade_path)?;

    let mut stats = parsed.stats;
    let flows = convert_all(&parsed.records, &factors, config.mass_unit, &mut stats);
    drop(parsed.records);
    let matrices = aggregate_by_year(&flows)?;
    let networks = matrices.values().map(build_net_network).collect();
    Ok(Built {
        stats,
        issues: parsed.issues,
        inputs: vec![trade_digest, factor_digest],
        networks,
    })
}

/// Writes `dir/name` via a temporary file and rename.
pub fn write_atomic<F>(dir: &Path, name: &str, write: F) -> Result<PathBuf>
where
    F: FnOnce(&mut dyn Write) -> Result<()>,
{
    let target = dir.join(name);
    let tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::path(dir, e))?;
    {
        let mut w = BufWriter::new(tmp.as_file());
        write(&mut w)?;
        w.flush().map_err(|e| Error::path(&target, e))?;
    }
    tmp.persist(&target)
        .map_err(|e| Error::path(&target, e.error))?;
    Ok(target)
}

fn write_json<T: Serialize + ?Sized>(dir: &Path, name: &str, value: &T) -> Result<PathBuf> {
    write_atomic(dir, name, |w| {
        serde_json::to_writer_pretty(&mut *w, value)?;
        w.write_all(b"\n")?;
        Ok(())
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub inputs: Vec<InputDigest>,
    pub config: RunConfig,
    pub years: Vec<i32>,
    pub outputs: Vec<String>,
}

fn file_names(paths: &[PathBuf]) -> Vec<String> {
    let mut names: Vec<String> = paths
        .iter()
        .filter_map(|p| p.file_name())
        .map(|n| n.to_string_lossy().into_owned())
        .collect();
    names.sort();
    names
}

fn prepare_output(config: &RunConfig) -> Result<()> {
    config.validate_for_output()?;
    std::fs::create_dir_all(&config.output_dir).map_err(|e| Error::path(&config.output_dir, e))
}

fn write_build_outputs(config: &RunConfig, built: &Built) -> Result<Vec<PathBuf>> {
    let dir = &config.output_dir;
    let mut written = Vec::new();
    for g in &built.networks {
        written.push(write_atomic(
            dir,
            &format!("edges_{}.csv", g.year()),
            |w| export_edge_list(g, w),
        )?);
    }
    written.push(write_json(dir, "ingest_stats.json", &built.stats)?);
    Ok(written)
}

fn write_manifest(config: &RunConfig, built: &Built, written: &[PathBuf]) -> Result<Manifest> {
    let manifest = Manifest {
        tool: "calnet".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        inputs: built.inputs.clone(),
        config: config.clone(),
        years: built.networks.iter().map(|g| g.year()).collect(),
        outputs: file_names(written),
    };
    write_json(&config.output_dir, "manifest.json", &manifest)?;
    Ok(manifest)
}

/// Ingests, builds every year's network, and writes the edge lists,
/// `ingest_stats.json` and `manifest.json`.
pub fn cmd_build(config: &RunConfig) -> Result<(Built, Manifest)> {
    prepare_output(config)?;
    let built = build_networks(config)?;
    let written = write_build_outputs(config, &built)?;
    let manifest = write_manifest(config, &built, &written)?;
    Ok((built, manifest))
}

#[derive(Debug, Serialize)]
struct ZeroExportStages<'a> {
    stage_means: &'a [StageMean],
}

#[derive(Debug, Serialize)]
struct YearCommunities {
    year: i32,
    unweighted: Vec<CommunityStats>,
    weighted: Vec<CommunityStats>,
}

#[derive(Debug, Serialize)]
struct PartitionSidecar {
    unweighted: DetectionParams,
    weighted: DetectionParams,
}

/// Runs the build, then every analysis, writing:
/// `summary.json`, `nodes_<year>.csv`, `rankings.csv`, `zero_export.csv`,
/// `zero_export_stages.json`, `correlations.csv`,
/// `partition_<year>_{unweighted,weighted}.csv`, `partition_params.json`
/// and `communities.json`.
pub fn cmd_analyze(config: &RunConfig) -> Result<(TimeSeries, Manifest)> {
    prepare_output(config)?;
    let built = build_networks(config)?;
    let dir = config.output_dir.as_path();
    let mut written = write_build_outputs(config, &built)?;

    let series = metric_series(&built.networks, &config.analysis())?;
    written.push(write_json(dir, "summary.json", &series.summaries())?);

    let mut communities = Vec::new();
    for (g, row) in built.networks.iter().zip(&series.rows) {
        let year = g.year();
        written.push(write_atomic(dir, &format!("nodes_{year}.csv"), |w| {
            write_nodes_csv(&row.nodes, w)
        })?);
        let mut report = YearCommunities {
            year,
            unweighted: Vec::new(),
            weighted: Vec::new(),
        };
        for (label, partition) in [
            ("unweighted", &row.partition_unweighted),
            ("weighted", &row.partition_weighted),
        ] {
            let Some(p) = partition else { continue };
            written.push(write_atomic(
                dir,
                &format!("partition_{year}_{label}.csv"),
                |w| p.write_csv(g, w),
            )?);
            let stats = community_report(g, p)?;
            if label == "weighted" {
                report.weighted = stats;
            } else {
                report.unweighted = stats;
            }
        }
        communities.push(report);
    }
    written.push(write_json(dir, "communities.json", &communities)?);
    written.push(write_json(
        dir,
        "partition_params.json",
        &PartitionSidecar {
            unweighted: DetectionParams {
                seed: config.seed,
                resolution: config.resolution,
                weighted: false,
            },
            weighted: DetectionParams {
                seed: config.seed,
                resolution: config.resolution,
                weighted: true,
            },
        },
    )?);

    let tables: Vec<_> = built
        .networks
        .iter()
        .flat_map(|g| {
            [
                rank_top(g, Direction::Export, config.top_k),
                rank_top(g, Direction::Import, config.top_k),
            ]
        })
        .collect();
    written.push(write_atomic(dir, "rankings.csv", |w| {
        write_rankings_csv(&tables, w)
    })?);

    let zero = zero_export_fraction(&built.networks);
    written.push(write_atomic(dir, "zero_export.csv", |w| {
        write_zero_export_csv(&zero, w)
    })?);
    written.push(write_json(
        dir,
        "zero_export_stages.json",
        &ZeroExportStages {
            stage_means: &zero.stage_means,
        },
    )?);
    written.push(write_atomic(dir, "correlations.csv", |w| {
        write_correlations_csv(&series, w)
    })?);

    let manifest = write_manifest(config, &built, &written)?;
    Ok((series, manifest))
}

#[derive(Debug, Clone)]
pub struct ValidationReport {
    pub stats: IngestStats,
    pub issues: Vec<RowIssue>,
    pub factor_items: usize,
    /// Traded items without a factor, with the number of records each.
    pub missing_items: BTreeMap<String, u64>,
}

impl ValidationReport {
    pub fn coverage(&self) -> f64 {
        self.stats.coverage()
    }
}

/// Dry run: parses both inputs and measures factor coverage. Fatal schema
/// problems come back as errors; bad trade rows are listed as issues.
pub fn cmd_validate(config: &RunConfig) -> Result<ValidationReport> {
    config.validate()?;
    let (factors, _) = load_factors(config)?;
    let mut reader = open(&config.trade_path)?;
    let parsed = parse_trade_records(&mut reader, &config.ingest())?;
    let mut stats = parsed.stats;
    let mut missing_items = BTreeMap::new();
    for r in &parsed.records {
        if factors.get(&r.item).is_none() {
            *missing_items.entry(r.item.clone()).or_insert(0) += 1;
        }
    }
    convert_all(&parsed.records, &factors, config.mass_unit, &mut stats);
    Ok(ValidationReport {
        stats,
        issues: parsed.issues,
        factor_items: factors.len(),
        missing_items,
    })
}
