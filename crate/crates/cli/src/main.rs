use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use calnet_core::pipeline::{cmd_analyze, cmd_build, cmd_validate};
use calnet_core::{CorrelationVariant, MassUnit, RunConfig};
use clap::{Args, Parser, Subcommand};

/// Net caloric trade networks from bilateral trade records.
#[derive(Parser)]
#[command(name = "calnet", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Ingest inputs and write per-year edge lists plus a manifest.
    Build(InputArgs),
    /// Build, then compute metrics, partitions and reports.
    Analyze {
        #[command(flatten)]
        inputs: InputArgs,
        #[command(flatten)]
        analysis: AnalysisArgs,
    },
    /// Check inputs and factor coverage without writing anything.
    Validate(InputArgs),
}

/// Flags override the config file.
#[derive(Args)]
struct InputArgs {
    /// Config file (key = value)
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    trade: Option<PathBuf>,
    #[arg(long)]
    factors: Option<PathBuf>,
    /// Output directory
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    from: Option<i32>,
    #[arg(long)]
    to: Option<i32>,
    #[arg(long, value_name = "tonnes|kilograms")]
    mass_unit: Option<MassUnit>,
}

#[derive(Args)]
struct AnalysisArgs {
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    resolution: Option<f64>,
    #[arg(long)]
    top_k: Option<usize>,
    #[arg(long, value_name = "row-row|in-out-self")]
    correlation_variant: Option<CorrelationVariant>,
}

impl InputArgs {
    fn load(&self) -> Result<RunConfig> {
        let mut c = match &self.config {
            Some(path) => RunConfig::from_file(path)
                .with_context(|| format!("reading config {}", path.display()))?,
            None => RunConfig::default(),
        };
        // Flag paths are relative to the working directory, not the config.
        if let Some(p) = &self.trade {
            c.trade_path = p.clone();
        }
        if let Some(p) = &self.factors {
            c.factors_path = p.clone();
        }
        if let Some(p) = &self.out {
            c.output_dir = p.clone();
        }
        if let Some(y) = self.from {
            c.year_from = y;
        }
        if let Some(y) = self.to {
            c.year_to = y;
        }
        if let Some(u) = self.mass_unit {
            c.mass_unit = u;
        }
        Ok(c)
    }
}

impl AnalysisArgs {
    fn apply(&self, c: &mut RunConfig) {
        if let Some(s) = self.seed {
            c.seed = s;
        }
        if let Some(r) = self.resolution {
            c.resolution = r;
        }
        if let Some(k) = self.top_k {
            c.top_k = k;
        }
        if let Some(v) = self.correlation_variant {
            c.correlation_variant = v;
        }
    }
}

fn configure_threads() -> Result<()> {
    let Ok(value) = std::env::var("CALNET_THREADS") else {
        return Ok(());
    };
    let n: usize = value
        .trim()
        .parse()
        .with_context(|| format!("CALNET_THREADS must be a non-negative integer, got `{value}`"))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .context("configuring the thread pool")
}

fn run(cli: Cli) -> Result<()> {
    configure_threads()?;
    match cli.command {
        Command::Build(inputs) => {
            let config = inputs.load()?;
            let (built, manifest) = cmd_build(&config)?;
            eprintln!(
                "built {} year(s) from {} accepted row(s) into {}",
                manifest.years.len(),
                built.stats.rows_accepted,
                config.output_dir.display()
            );
            report_skips(&built.stats);
        }
        Command::Analyze { inputs, analysis } => {
            let mut config = inputs.load()?;
            analysis.apply(&mut config);
            let (series, manifest) = cmd_analyze(&config)?;
            eprintln!(
                "analyzed {} year(s); {} file(s) in {}",
                series.rows.len(),
                manifest.outputs.len() + 1,
                config.output_dir.display()
            );
        }
        Command::Validate(inputs) => {
            let config = inputs.load()?;
            let report = cmd_validate(&config)?;
            for issue in &report.issues {
                eprintln!("line {}: {}", issue.line, issue.reason);
            }
            if report.issues.len() < report.stats.rows_rejected.total() as usize {
                eprintln!(
                    "(only the first {} rejected rows are listed)",
                    report.issues.len()
                );
            }
            let s = &report.stats;
            eprintln!(
                "rows read {}, accepted {}, rejected {}; {} factor item(s)",
                s.rows_read,
                s.rows_accepted,
                s.rows_rejected.total(),
                report.factor_items
            );
            let coverage = report.coverage();
            eprintln!("coverage {coverage}");
            if coverage < 1.0 {
                eprintln!("warning: factor coverage below 1");
                for (item, count) in &report.missing_items {
                    eprintln!("warning: item {item} has no factor ({count} record(s))");
                }
            }
        }
    }
    Ok(())
}

fn report_skips(stats: &calnet_core::IngestStats) {
    if stats.records_missing_factor > 0 {
        eprintln!(
            "warning: {} record(s) skipped for a missing factor",
            stats.records_missing_factor
        );
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
