//! Acceptance suite. Prints one PASS/FAIL/SKIP line per criterion and exits
//! non-zero if any criterion fails.
//!
//! Criteria 1-6 are self-contained. Criteria 7-11 need a full FAOSTAT-derived
//! input and run only when `CALNET_TRADE` and `CALNET_FACTORS` point at it.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use calnet_core::community::{
    brute_force_best_partition, detect_communities, modularity, Partition,
};
use calnet_core::metrics::{self, CorrelationVariant};
use calnet_core::pipeline::{cmd_analyze, cmd_build};
use calnet_core::report::{export_share, rank_top, zero_export_fraction, Direction};
use calnet_core::{build_net_network, synth, NetTradeNetwork, RunConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

const REL_TOL: f64 = 1e-9;
const SCALE_TOL: f64 = 1e-12;
const ORACLE_TOL: f64 = 1e-12;
const SELF_CONTAINED_BUDGET: Duration = Duration::from_secs(60);

type Check = Result<String, String>;
type Criterion<F> = (&'static str, &'static str, F);
type DataCheck = fn(&FullRun) -> Check;

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

fn fixture_config(out: &Path) -> RunConfig {
    let mut c = RunConfig::from_file(&fixtures().join("calnet.ini")).expect("fixture config");
    c.output_dir = out.to_path_buf();
    c
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn close_rel(a: f64, b: f64) -> bool {
    a == b || (a - b).abs() <= REL_TOL * a.abs().max(b.abs())
}

fn num(v: &Value) -> f64 {
    v.as_f64().expect("number in expected.json")
}

// 1 -------------------------------------------------------------------------

fn fixture_end_to_end() -> Check {
    let expected: Value = serde_json::from_str(
        &std::fs::read_to_string(fixtures().join("expected.json")).map_err(|e| e.to_string())?,
    )
    .map_err(|e| e.to_string())?;
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let (built, manifest) = cmd_build(&fixture_config(tmp.path())).map_err(|e| e.to_string())?;

    // ingest statistics, via the written JSON
    let stats: Value = serde_json::from_str(
        &std::fs::read_to_string(tmp.path().join("ingest_stats.json"))
            .map_err(|e| e.to_string())?,
    )
    .map_err(|e| e.to_string())?;
    let want = &expected["ingest_stats"];
    for key in ["rows_read", "rows_accepted", "records_missing_factor"] {
        ensure(stats[key] == want[key], || {
            format!("ingest {key}: {} vs {}", stats[key], want[key])
        })?;
    }
    ensure(stats["rows_rejected"] == want["rows_rejected"], || {
        format!(
            "rejections {} vs {}",
            stats["rows_rejected"], want["rows_rejected"]
        )
    })?;
    ensure(
        close_rel(num(&stats["kcal_total"]), num(&want["kcal_total"])),
        || "kcal_total".into(),
    )?;

    let partition_labels: HashMap<String, String> =
        csv::Reader::from_path(fixtures().join("partition.csv"))
            .map_err(|e| e.to_string())?
            .records()
            .map(|r| {
                let r = r.unwrap();
                (r[0].to_string(), r[1].to_string())
            })
            .collect();

    let years = expected["years"].as_object().unwrap();
    ensure(manifest.years.len() == years.len(), || {
        format!("years {:?}", manifest.years)
    })?;
    let mut checked = 0usize;
    for g in &built.networks {
        let want = &years[&g.year().to_string()];
        ensure(g.node_count() as u64 == want["N"].as_u64().unwrap(), || {
            format!("{} N", g.year())
        })?;
        ensure(g.edge_count() as u64 == want["L"].as_u64().unwrap(), || {
            format!("{} L", g.year())
        })?;

        // edge list file
        let mut rdr = csv::Reader::from_path(tmp.path().join(format!("edges_{}.csv", g.year())))
            .map_err(|e| e.to_string())?;
        let rows: Vec<csv::StringRecord> = rdr
            .records()
            .collect::<Result<_, _>>()
            .map_err(|e| e.to_string())?;
        let want_edges = want["edges"].as_array().unwrap();
        ensure(rows.len() == want_edges.len(), || {
            format!("{} edge rows", g.year())
        })?;
        for (row, e) in rows.iter().zip(want_edges) {
            let kcal: f64 = row[3].parse().map_err(|_| "kcal parse")?;
            ensure(
                row[0] == g.year().to_string()
                    && row[1] == *e[0].as_str().unwrap()
                    && row[2] == *e[1].as_str().unwrap()
                    && close_rel(kcal, num(&e[2])),
                || format!("edge row {row:?} vs {e}"),
            )?;
        }

        // degrees and strengths
        let d = metrics::degrees(g);
        for (i, code) in g.nodes().iter().enumerate() {
            let w = &want["degrees"][code];
            ensure(
                d.k_in[i] as u64 == w[0].as_u64().unwrap()
                    && d.k_out[i] as u64 == w[1].as_u64().unwrap()
                    && close_rel(d.s_in[i], num(&w[2]))
                    && close_rel(d.s_out[i], num(&w[3])),
                || format!("{} degrees of {code}: {w}", g.year()),
            )?;
        }

        let p = Partition::from_named(g, &partition_labels).map_err(|e| e.to_string())?;
        let reals = [
            ("connectivity", metrics::connectivity(g)),
            ("h", metrics::heterogeneity(g, false)),
            ("h_w", metrics::heterogeneity(g, true)),
            ("Q_unweighted", modularity(g, &p, false)),
            ("Q_weighted", modularity(g, &p, true)),
        ];
        for (key, got) in reals {
            let got = got.map_err(|e| e.to_string())?;
            ensure(close_rel(got, num(&want[key])), || {
                format!("{} {key}: {got} vs {}", g.year(), want[key])
            })?;
            checked += 1;
        }

        for (key, dir) in [
            ("top_export", Direction::Export),
            ("top_import", Direction::Import),
        ] {
            let t = rank_top(g, dir, 3);
            let w = want[key].as_array().unwrap();
            ensure(t.entries.len() == w.len(), || {
                format!("{} {key} length", g.year())
            })?;
            for ((c, s), e) in t.entries.iter().zip(w) {
                ensure(
                    c == e[0].as_str().unwrap() && close_rel(*s, num(&e[1])),
                    || format!("{} {key}: {c} {s} vs {e}", g.year()),
                )?;
            }
        }
    }
    Ok(format!(
        "{} years, {checked} real-valued metrics match the recomputation",
        built.networks.len()
    ))
}

// 2 -------------------------------------------------------------------------

fn antisymmetry_and_bound() -> Check {
    let mut edges = 0usize;
    for seed in 0..1000u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = 2 + (seed as usize % 29);
        let m = synth::random_calorie_matrix(&mut rng, n, 0.4);
        let g = build_net_network(&m);
        edges += g.edge_count();
        for i in 0..n {
            for j in 0..n {
                let (w_ij, w_ji) = (g.weight(i, j), g.weight(j, i));
                ensure(w_ij * w_ji == 0.0, || {
                    format!("seed {seed}: w_ij * w_ji != 0 at ({i},{j})")
                })?;
                let diff = (m.get_index(i, j) - m.get_index(j, i)).abs();
                ensure(w_ij.max(w_ji) == diff, || {
                    format!("seed {seed}: |c_ij - c_ji| mismatch")
                })?;
            }
        }
        let c = metrics::connectivity(&g).map_err(|e| e.to_string())?;
        ensure(c <= 0.5, || format!("seed {seed}: connectivity {c}"))?;
    }
    Ok(format!(
        "1000 matrices, {edges} edges, all antisymmetric, connectivity <= 0.5"
    ))
}

// 3 -------------------------------------------------------------------------

fn heterogeneity_extremes() -> Check {
    for n in 3..=12 {
        let g = synth::cycle(n, 1.0 + n as f64);
        for weighted in [false, true] {
            let h = metrics::heterogeneity(&g, weighted).map_err(|e| e.to_string())?;
            ensure(h == 0.0, || {
                format!("cycle {n} weighted={weighted}: h = {h}")
            })?;
        }
    }
    for (a, b) in [(1, 1), (2, 2), (3, 5)] {
        let g = synth::complete_bipartite(a, b, 3.7);
        for weighted in [false, true] {
            let h = metrics::heterogeneity(&g, weighted).map_err(|e| e.to_string())?;
            ensure(h == 1.0, || {
                format!("bipartite ({a},{b}) weighted={weighted}: h = {h}")
            })?;
        }
    }
    Ok("h = 0 on cycles 3..12, h = 1 on bipartite (1,1), (2,2), (3,5)".into())
}

// 4 -------------------------------------------------------------------------

fn modularity_oracle() -> Check {
    for seed in 0..100u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + seed);
        let g = loop {
            let g = synth::random_net_network(&mut rng, 2 + (seed as usize % 40), 0.3);
            if g.edge_count() > 0 {
                break g;
            }
        };
        for weighted in [false, true] {
            let q = modularity(&g, &Partition::single(g.node_count()), weighted)
                .map_err(|e| e.to_string())?;
            ensure(q == 0.0, || {
                format!("seed {seed}: single-community Q = {q}")
            })?;
        }
    }

    let dyads = synth::disjoint_dyads();
    let split = Partition::from_labels([0, 0, 1, 1]);
    let q = modularity(&dyads, &split, false).map_err(|e| e.to_string())?;
    ensure(q == 0.5, || format!("dyads Q = {q}"))?;
    let (best_p, best) =
        brute_force_best_partition(&dyads, false, 10).map_err(|e| e.to_string())?;
    ensure(best == 0.5 && best_p == split, || {
        format!("dyads brute force {best} {best_p:?}")
    })?;

    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (planted, groups) = synth::planted_partition(&mut rng, 5, 0.8);
    let planted_split = Partition::from_labels(groups);
    let mut detail = Vec::new();
    for (name, g) in [("dyads", &dyads), ("planted N=10", &planted)] {
        for weighted in [false, true] {
            let (oracle_p, oracle_q) =
                brute_force_best_partition(g, weighted, 10).map_err(|e| e.to_string())?;
            let found = detect_communities(g, weighted, 42, 1.0).map_err(|e| e.to_string())?;
            let q = modularity(g, &found, weighted).map_err(|e| e.to_string())?;
            ensure((q - oracle_q).abs() <= ORACLE_TOL, || {
                format!("{name} weighted={weighted}: detected {q} vs optimum {oracle_q}")
            })?;
            if name.starts_with("planted") {
                ensure(found == planted_split && oracle_p == planted_split, || {
                    format!("{name} weighted={weighted}: planted split not recovered")
                })?;
            }
            detail.push(format!("{name}{}={q:.6}", if weighted { " w" } else { "" }));
        }
    }
    Ok(format!(
        "single-community Q exact 0 on 100 networks; {}",
        detail.join(", ")
    ))
}

// 5 -------------------------------------------------------------------------

fn scale_invariance() -> Check {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let (built, _) = cmd_build(&fixture_config(tmp.path())).map_err(|e| e.to_string())?;
    let mut compared = 0usize;
    for g in &built.networks {
        let measure = |g: &NetTradeNetwork| -> Result<(Vec<f64>, Vec<Vec<String>>), String> {
            let e = |r: calnet_core::Result<f64>| r.map_err(|e| e.to_string());
            let p = detect_communities(g, true, 42, 1.0).map_err(|e| e.to_string())?;
            let values = vec![
                e(metrics::heterogeneity(g, true))?,
                e(metrics::node_correlation_similarity(
                    g,
                    true,
                    CorrelationVariant::RowRow,
                ))?,
                e(metrics::node_correlation_similarity(
                    g,
                    true,
                    CorrelationVariant::InOutSelf,
                ))?,
                e(metrics::degree_correlation(g))?,
                e(modularity(g, &p, true))?,
                e(metrics::connectivity(g))?,
            ];
            let rankings = [Direction::Export, Direction::Import]
                .into_iter()
                .map(|d| {
                    rank_top(g, d, g.node_count())
                        .entries
                        .into_iter()
                        .map(|(c, _)| c)
                        .collect()
                })
                .collect();
            Ok((values, rankings))
        };
        let (base_values, base_rank) = measure(g)?;
        for lambda in [1e-3, 1.0, 1e3] {
            let (values, rank) = measure(&g.scaled(lambda).map_err(|e| e.to_string())?)?;
            for (a, b) in base_values.iter().zip(&values) {
                ensure((a - b).abs() <= SCALE_TOL, || {
                    format!("{} lambda={lambda}: {a} vs {b}", g.year())
                })?;
                compared += 1;
            }
            ensure(rank == base_rank, || {
                format!("{} lambda={lambda}: rankings changed", g.year())
            })?;
        }
    }
    Ok(format!(
        "{compared} metric comparisons and all rankings stable for lambda in {{1e-3, 1, 1e3}}"
    ))
}

// 6 -------------------------------------------------------------------------

fn snapshot(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .map(|p| {
            (
                p.file_name().unwrap().to_string_lossy().into_owned(),
                std::fs::read(&p).unwrap(),
            )
        })
        .collect()
}

fn determinism() -> Check {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let config = fixture_config(tmp.path());
    cmd_analyze(&config).map_err(|e| e.to_string())?;
    let first = snapshot(tmp.path());
    cmd_analyze(&config).map_err(|e| e.to_string())?;
    let second = snapshot(tmp.path());
    ensure(first.keys().eq(second.keys()), || "file sets differ".into())?;
    for (name, bytes) in &first {
        ensure(second[name] == *bytes, || {
            format!("{name} differs between runs")
        })?;
    }
    Ok(format!(
        "{} output files byte-identical across two runs",
        first.len()
    ))
}

// 7-11 ----------------------------------------------------------------------

const TOP_EXPORTERS: [&str; 10] = [
    "BRA", "USA", "ARG", "UKR", "IDN", "AUS", "CAN", "FRA", "RUS", "MYS",
];

struct FullRun {
    networks: Vec<NetTradeNetwork>,
    summaries: Vec<calnet_core::NetworkSummary>,
}

fn full_dataset() -> Option<Result<FullRun, String>> {
    let trade = std::env::var_os("CALNET_TRADE")?;
    let factors = std::env::var_os("CALNET_FACTORS")?;
    Some((|| {
        let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
        let config = RunConfig {
            trade_path: trade.into(),
            factors_path: factors.into(),
            output_dir: std::env::var_os("CALNET_OUT")
                .map_or_else(|| tmp.path().to_path_buf(), PathBuf::from),
            ..RunConfig::default()
        };
        let (series, _) = cmd_analyze(&config).map_err(|e| e.to_string())?;
        let built = calnet_core::pipeline::build_networks(&config).map_err(|e| e.to_string())?;
        Ok(FullRun {
            networks: built.networks,
            summaries: series.rows.into_iter().map(|r| r.summary).collect(),
        })
    })())
}

fn series(run: &FullRun, f: impl Fn(&calnet_core::NetworkSummary) -> Option<f64>) -> Vec<f64> {
    run.summaries.iter().filter_map(f).collect()
}

fn in_range(v: f64, lo: f64, hi: f64) -> bool {
    (lo..=hi).contains(&v)
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn connectivity_trend(run: &FullRun) -> Check {
    let c = series(run, |s| s.connectivity);
    let (first, last) = (*c.first().ok_or("no years")?, *c.last().ok_or("no years")?);
    ensure(
        in_range(first, 0.07, 0.13) && in_range(last, 0.16, 0.25) && last > first,
        || format!("connectivity {first:.4} -> {last:.4}"),
    )?;
    Ok(format!("connectivity {first:.4} -> {last:.4}"))
}

fn heterogeneity_level(run: &FullRun) -> Check {
    let hw = mean(&series(run, |s| s.h_w));
    let h = mean(&series(run, |s| s.h));
    ensure(in_range(hw, 0.7, 0.9) && in_range(h, 0.5, 0.7), || {
        format!("mean h_w {hw:.4}, h {h:.4}")
    })?;
    Ok(format!("mean h_w {hw:.4}, h {h:.4}"))
}

fn modularity_trend(run: &FullRun) -> Check {
    let q = series(run, |s| s.q_weighted);
    let (first, last) = (*q.first().ok_or("no years")?, *q.last().ok_or("no years")?);
    ensure(
        in_range(first, 0.23, 0.33) && in_range(last, 0.31, 0.41),
        || format!("Q_w {first:.4} -> {last:.4}"),
    )?;
    Ok(format!("Q_w {first:.4} -> {last:.4}"))
}

fn zero_export_stages(run: &FullRun) -> Check {
    let report = zero_export_fraction(&run.networks);
    let targets = [0.55, 0.30, 0.10];
    let mut parts = Vec::new();
    for (stage, target) in report.stage_means.iter().zip(targets) {
        let m = stage
            .mean
            .ok_or_else(|| format!("no years in {}-{}", stage.from, stage.to))?;
        ensure((m - target).abs() <= 0.10, || {
            format!("{}-{}: {m:.3} vs {target}", stage.from, stage.to)
        })?;
        parts.push(format!("{}-{} {m:.3}", stage.from, stage.to));
    }
    Ok(parts.join(", "))
}

fn top_exporters(run: &FullRun) -> Check {
    let years = run.networks.len();
    let with_both = run
        .networks
        .iter()
        .filter(|g| {
            let top: BTreeSet<String> = rank_top(g, Direction::Export, 5)
                .entries
                .into_iter()
                .map(|e| e.0)
                .collect();
            top.contains("BRA") && top.contains("USA")
        })
        .count();
    let shares: Vec<f64> = run
        .networks
        .iter()
        .filter_map(|g| {
            let present: BTreeSet<String> = TOP_EXPORTERS
                .iter()
                .filter(|c| g.index_of(c).is_some())
                .map(|c| c.to_string())
                .collect();
            export_share(g, &present).ok()
        })
        .collect();
    let share = mean(&shares);
    let frac = with_both as f64 / years.max(1) as f64;
    ensure(frac >= 0.8 && (share - 0.6).abs() <= 0.1, || {
        format!("BRA+USA in top 5 in {with_both}/{years} years, top-10 share {share:.3}")
    })?;
    Ok(format!(
        "BRA+USA in top 5 in {with_both}/{years} years, top-10 share {share:.3}"
    ))
}

fn main() -> ExitCode {
    let started = Instant::now();
    let mut failed = 0usize;
    let mut report = |id: &str, name: &str, outcome: Option<Check>| {
        let (tag, detail) = match outcome {
            Some(Ok(d)) => ("PASS", d),
            Some(Err(d)) => {
                failed += 1;
                ("FAIL", d)
            }
            None => ("SKIP", "set CALNET_TRADE and CALNET_FACTORS to run".into()),
        };
        println!("[{tag}] criterion {id:>2}: {name} -- {detail}");
    };

    let self_contained: [Criterion<fn() -> Check>; 6] = [
        ("1", "fixture end-to-end", fixture_end_to_end),
        (
            "2",
            "antisymmetry and connectivity bound",
            antisymmetry_and_bound,
        ),
        ("3", "heterogeneity extremes", heterogeneity_extremes),
        ("4", "modularity oracle", modularity_oracle),
        ("5", "scale invariance", scale_invariance),
        ("6", "determinism", determinism),
    ];
    for (id, name, check) in self_contained {
        report(id, name, Some(check()));
    }
    let elapsed = started.elapsed();
    report(
        "A",
        "self-contained runtime",
        Some(if elapsed < SELF_CONTAINED_BUDGET {
            Ok(format!("{:.2}s < 60s", elapsed.as_secs_f64()))
        } else {
            Err(format!("{:.2}s exceeds 60s", elapsed.as_secs_f64()))
        }),
    );

    let data_dependent: [Criterion<DataCheck>; 5] = [
        ("7", "connectivity rises 0.1 -> 0.2", connectivity_trend),
        (
            "8",
            "heterogeneity near 0.8 (weighted) / 0.6",
            heterogeneity_level,
        ),
        ("9", "weighted modularity 0.28 -> 0.36", modularity_trend),
        ("10", "zero-export stage means", zero_export_stages),
        ("11", "top exporters and top-10 share", top_exporters),
    ];
    match full_dataset() {
        None => {
            for (id, name, _) in data_dependent {
                report(id, name, None);
            }
        }
        Some(Err(e)) => {
            for (id, name, _) in data_dependent {
                report(id, name, Some(Err(format!("full run failed: {e}"))));
            }
        }
        Some(Ok(run)) => {
            for (id, name, check) in data_dependent {
                report(id, name, Some(check(&run)));
            }
        }
    }

    if failed == 0 {
        println!("acceptance: all evaluated criteria passed");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: {failed} criterion/criteria failed");
        ExitCode::FAILURE
    }
}
