//! Replicated scenario runs: simulate, estimate with each requested method,
//! and stream scored rows to disk.
//!
//! Replications are distributed over a bounded worker pool; every random
//! stream is keyed by `(seed, replication, method)`, so the emitted bytes do
//! not depend on the worker count. A completed output directory can be
//! extended: replications already present in a checksum-verified results
//! file are reused rather than recomputed.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use datekit_core::config::ScenarioConfig;
use datekit_core::date::DatePath;
use datekit_core::dgp::simulate_scenario;

use crate::error::CliError;
use crate::io::{bounds_at_levels, results_header, ResultRow};
use crate::manifest::RunManifest;
use crate::methods::{method_seed, run_method, Method, MethodOptions};

pub const RESULTS_FILE: &str = "results.csv";
pub const TRUTH_FILE: &str = "truth.csv";
pub const FAILURES_FILE: &str = "failures.csv";
pub const CONFIG_FILE: &str = "config.json";
pub const MANIFEST_FILE: &str = "manifest.json";

/// Knobs of one scenario run.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub methods: Vec<Method>,
    /// Replication count; defaults to the scenario's.
    pub replications: Option<usize>,
    /// Worker cap; further capped by `DATEKIT_THREADS`.
    pub threads: Option<usize>,
    /// DLM posterior draws.
    pub draws: usize,
    /// Free-text command line recorded in the manifest.
    pub command: String,
}

impl RunConfig {
    pub fn new(methods: Vec<Method>) -> Self {
        Self {
            methods,
            replications: None,
            threads: None,
            draws: 5000,
            command: String::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunSummary {
    pub replications: usize,
    pub reused: usize,
    pub failures: usize,
}

#[derive(Debug, Clone)]
struct RepOutcome {
    rows: Vec<ResultRow>,
    failures: Vec<(u64, String, String)>,
}

fn worker_pool(requested: Option<usize>) -> Result<rayon::ThreadPool, CliError> {
    let mut threads = requested.unwrap_or_else(num_default_threads);
    if let Ok(cap) = std::env::var("DATEKIT_THREADS") {
        if let Ok(cap) = cap.parse::<usize>() {
            if cap >= 1 {
                threads = threads.min(cap);
            }
        }
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .map_err(|e| CliError::Invalid(format!("cannot build worker pool: {e}")))
}

fn num_default_threads() -> usize {
    std::thread::available_parallelism()
        .map(|n| n.get())
        .unwrap_or(1)
}

fn compute_replication(
    cfg: &ScenarioConfig,
    rc: &RunConfig,
    rep: u64,
) -> Result<RepOutcome, CliError> {
    let sim = simulate_scenario(cfg, rep).map_err(|e| CliError::Estimation(e.to_string()))?;
    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for &method in &rc.methods {
        let opts = MethodOptions {
            draws: rc.draws,
            seed: method_seed(cfg.seed, rep, method),
            ..MethodOptions::new(0)
        };
        match run_method(method, &sim.panel, &opts) {
            Ok(output) => {
                let bounds = output
                    .intervals
                    .as_ref()
                    .map(|family| bounds_at_levels(&output.estimate, family));
                for h in 0..output.estimate.len() {
                    rows.push(ResultRow {
                        rep,
                        method: method.name().to_string(),
                        h,
                        estimate: output.estimate[h],
                        bounds: bounds.as_ref().map(|b| b[h].clone()),
                    });
                }
            }
            Err(error) => {
                failures.push((rep, method.name().to_string(), error.to_string()));
            }
        }
    }
    Ok(RepOutcome { rows, failures })
}

/// Loads reusable outcomes from a previous run of the same directory.
///
/// Rows are trusted only when the existing results and failures files match
/// the manifest's checksums; a replication is reused when every requested
/// method contributed either rows or a recorded failure.
fn reusable_outcomes(
    dir: &Path,
    rc: &RunConfig,
    n_horizons: usize,
) -> BTreeMap<u64, RepOutcome> {
    let mut reusable = BTreeMap::new();
    let manifest = match RunManifest::read(&dir.join(MANIFEST_FILE)) {
        Ok(m) => m,
        Err(_) => return reusable,
    };
    for file in [RESULTS_FILE, FAILURES_FILE] {
        match manifest.verify_output(dir, file) {
            Ok(true) => {}
            _ => return reusable,
        }
    }
    let results_text = match fs::read_to_string(dir.join(RESULTS_FILE)) {
        Ok(t) => t,
        Err(_) => return reusable,
    };
    let mut rows_by_rep: BTreeMap<u64, Vec<ResultRow>> = BTreeMap::new();
    for (idx, line) in results_text.lines().enumerate().skip(1) {
        if line.is_empty() {
            continue;
        }
        match ResultRow::parse(line, idx + 1) {
            Ok(row) => rows_by_rep.entry(row.rep).or_default().push(row),
            Err(_) => return reusable,
        }
    }
    let failures_text = fs::read_to_string(dir.join(FAILURES_FILE)).unwrap_or_default();
    let mut failures_by_rep: BTreeMap<u64, Vec<(u64, String, String)>> = BTreeMap::new();
    for line in failures_text.lines().skip(1) {
        let fields: Vec<&str> = line.splitn(3, ',').collect();
        if fields.len() == 3 {
            if let Ok(rep) = fields[0].parse::<u64>() {
                failures_by_rep.entry(rep).or_default().push((
                    rep,
                    fields[1].to_string(),
                    fields[2].to_string(),
                ));
            }
        }
    }

    let reps: Vec<u64> = rows_by_rep
        .keys()
        .chain(failures_by_rep.keys())
        .copied()
        .collect();
    for rep in reps {
        let rows = rows_by_rep.remove(&rep).unwrap_or_default();
        let failures = failures_by_rep.remove(&rep).unwrap_or_default();
        let complete = rc.methods.iter().all(|method| {
            let n_rows = rows
                .iter()
                .filter(|r| r.method == method.name())
                .count();
            n_rows == n_horizons || failures.iter().any(|(_, m, _)| m == method.name())
        });
        if complete {
            reusable.insert(rep, RepOutcome { rows, failures });
        }
    }
    reusable
}

/// Runs (or resumes) a full scenario and writes the result files.
pub fn run_scenario(
    cfg: &ScenarioConfig,
    rc: &RunConfig,
    out_dir: &Path,
) -> Result<RunSummary, CliError> {
    cfg.validate()?;
    for method in &rc.methods {
        method.ensure_compatible(cfg.kind)?;
    }
    if rc.methods.is_empty() {
        return Err(CliError::Invalid("no methods requested".to_string()));
    }
    fs::create_dir_all(out_dir).map_err(|e| CliError::io(out_dir, e))?;
    let replications = rc.replications.unwrap_or(cfg.replications);
    let truth = datekit_core::oracle::true_date_oracle(cfg)?;

    let reusable = reusable_outcomes(out_dir, rc, truth.n_horizons());
    let missing: Vec<u64> = (0..replications as u64)
        .filter(|rep| !reusable.contains_key(rep))
        .collect();
    let reused = replications - missing.len();

    let pool = worker_pool(rc.threads)?;
    let computed: Vec<(u64, Result<RepOutcome, CliError>)> = pool.install(|| {
        missing
            .par_iter()
            .map(|&rep| (rep, compute_replication(cfg, rc, rep)))
            .collect()
    });

    let mut outcomes: BTreeMap<u64, RepOutcome> = reusable
        .into_iter()
        .filter(|(rep, _)| (*rep as usize) < replications)
        .collect();
    for (rep, outcome) in computed {
        outcomes.insert(rep, outcome?);
    }

    let n_failures = write_outputs(cfg, rc, out_dir, &truth, &outcomes)?;
    Ok(RunSummary {
        replications: outcomes.len(),
        reused,
        failures: n_failures,
    })
}

fn write_outputs(
    cfg: &ScenarioConfig,
    rc: &RunConfig,
    out_dir: &Path,
    truth: &DatePath,
    outcomes: &BTreeMap<u64, RepOutcome>,
) -> Result<usize, CliError> {
    let method_order: BTreeMap<&str, usize> = rc
        .methods
        .iter()
        .enumerate()
        .map(|(i, m)| (m.name(), i))
        .collect();

    let mut results = results_header();
    results.push('\n');
    let mut n_failures = 0usize;
    let mut failures = String::from("rep,method,error\n");
    for outcome in outcomes.values() {
        let mut rows = outcome.rows.clone();
        rows.sort_by_key(|r| (method_order.get(r.method.as_str()).copied(), r.h));
        for row in rows {
            results.push_str(&row.to_csv_line());
            results.push('\n');
        }
        for (rep, method, error) in &outcome.failures {
            let _ = writeln!(failures, "{rep},{method},{}", error.replace(',', ";"));
            n_failures += 1;
        }
    }
    let results_path = out_dir.join(RESULTS_FILE);
    fs::write(&results_path, results).map_err(|e| CliError::io(&results_path, e))?;
    let failures_path = out_dir.join(FAILURES_FILE);
    fs::write(&failures_path, failures).map_err(|e| CliError::io(&failures_path, e))?;

    let mut truth_csv = String::from("h,estimate\n");
    for (h, value) in truth.estimate.iter().enumerate() {
        let _ = writeln!(truth_csv, "{h},{value}");
    }
    let truth_path = out_dir.join(TRUTH_FILE);
    fs::write(&truth_path, truth_csv).map_err(|e| CliError::io(&truth_path, e))?;

    let config_json = serde_json::to_string_pretty(cfg).expect("config serializes");
    let config_path = out_dir.join(CONFIG_FILE);
    fs::write(&config_path, &config_json).map_err(|e| CliError::io(&config_path, e))?;

    let manifest = RunManifest::build(
        rc.command.clone(),
        &config_json,
        cfg.seed,
        out_dir,
        &[RESULTS_FILE, TRUTH_FILE, FAILURES_FILE, CONFIG_FILE],
    )?;
    manifest.write(&out_dir.join(MANIFEST_FILE))?;

    Ok(n_failures)
}

/// Convenience wrapper: simulate one replication and write the panel with
/// its JSON sidecar.
pub fn simulate_to_dir(
    cfg: &ScenarioConfig,
    rep: u64,
    out_dir: &Path,
) -> Result<PathBuf, CliError> {
    cfg.validate()?;
    fs::create_dir_all(out_dir).map_err(|e| CliError::io(out_dir, e))?;
    let sim = simulate_scenario(cfg, rep).map_err(|e| CliError::Estimation(e.to_string()))?;
    let panel_path = out_dir.join("panel.csv");
    crate::io::write_panel_csv(&panel_path, &sim.panel)?;
    let sidecar = serde_json::json!({
        "config": cfg,
        "rep_index": rep,
        "truth": sim.truth.estimate,
    });
    let sidecar_path = out_dir.join("panel.json");
    fs::write(
        &sidecar_path,
        serde_json::to_string_pretty(&sidecar).expect("sidecar serializes"),
    )
    .map_err(|e| CliError::io(&sidecar_path, e))?;
    Ok(panel_path)
}
