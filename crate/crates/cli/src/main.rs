//! `datekit` — dynamic treatment effect estimation for time series
//! interventions.

use std::fs;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use datekit_cli::ingest::ingest_csv;
use datekit_cli::io::{read_panel_csv, write_date_csv, write_decomposition_csv};
use datekit_cli::methods::{Method, MethodOptions, PropensitySource};
use datekit_cli::placebo::{placebo_test, PlaceboOptions, PlaceboRule};
use datekit_cli::report::{build_report, load_run, write_report};
use datekit_cli::runner::{run_scenario, simulate_to_dir, RunConfig};
use datekit_core::config::{ScenarioConfig, ScenarioKind};
use datekit_core::eval::CellKey;
use datekit_core::panel::SeriesPanel;

#[derive(Parser)]
#[command(
    name = "datekit",
    about = "Dynamic average treatment effects for time series interventions",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one replication of a scenario and write the panel CSV.
    Simulate(SimulateArgs),
    /// Estimate the effect path of a panel with one method.
    Estimate(EstimateArgs),
    /// Run a replicated Monte Carlo scenario with several methods.
    RunScenario(RunScenarioArgs),
    /// Re-estimate with placebo intervention times strictly before t_c.
    Placebo(PlaceboArgs),
    /// Aggregate run directories into metric tables.
    Report(ReportArgs),
}

#[derive(Args)]
struct ConfigArgs {
    /// Scenario configuration JSON file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Scenario kind (many-many, one-many, one-one, one-none) when no file
    /// is given; flags always override the file.
    #[arg(long)]
    kind: Option<String>,
    #[arg(long)]
    horizon: Option<usize>,
    #[arg(long = "t-c")]
    t_c: Option<usize>,
    /// AR(1) coefficient.
    #[arg(long)]
    theta: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Replication count.
    #[arg(long)]
    reps: Option<usize>,
}

impl ConfigArgs {
    fn resolve(&self) -> Result<ScenarioConfig> {
        let mut cfg = match &self.config {
            Some(path) => {
                let text = fs::read_to_string(path)
                    .with_context(|| format!("reading {}", path.display()))?;
                serde_json::from_str::<ScenarioConfig>(&text)
                    .with_context(|| format!("parsing {}", path.display()))?
            }
            None => {
                let kind = parse_kind(self.kind.as_deref().unwrap_or("one-none"))?;
                let horizon = self.horizon.unwrap_or(72);
                ScenarioConfig::preset(kind, horizon, self.seed.unwrap_or(1))
            }
        };
        if let Some(kind) = &self.kind {
            cfg.kind = parse_kind(kind)?;
            let preset = ScenarioConfig::preset(cfg.kind, cfg.horizon, cfg.seed);
            cfg.n_treated = preset.n_treated;
            cfg.n_control = preset.n_control;
        }
        if let Some(horizon) = self.horizon {
            cfg.horizon = horizon;
            cfg.t_c = horizon / 2 + 1;
        }
        if let Some(t_c) = self.t_c {
            cfg.t_c = t_c;
        }
        if let Some(theta) = self.theta {
            cfg.ar_coef = theta;
        }
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if let Some(reps) = self.reps {
            cfg.replications = reps;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn parse_kind(name: &str) -> Result<ScenarioKind> {
    Ok(match name {
        "many-many" | "many_many" => ScenarioKind::ManyMany,
        "one-many" | "one_many" => ScenarioKind::OneMany,
        "one-one" | "one_one" => ScenarioKind::OneOne,
        "one-none" | "one_none" => ScenarioKind::OneNone,
        other => bail!("unknown scenario kind `{other}`"),
    })
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    config: ConfigArgs,
    /// Replication index to simulate.
    #[arg(long, default_value_t = 0)]
    rep: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct PanelInput {
    /// Panel CSV (unit-per-row) as written by `simulate`.
    #[arg(long)]
    panel: Option<PathBuf>,
    /// Raw CSV (time-per-row, one column per series) to ingest.
    #[arg(long)]
    raw: Option<PathBuf>,
    /// First post-treatment time index.
    #[arg(long = "t-c")]
    t_c: usize,
    /// Treated column names for `--raw`, comma separated.
    #[arg(long, value_delimiter = ',')]
    treated: Vec<String>,
    /// Columns to skip for `--raw` (dates, labels), comma separated.
    #[arg(long, value_delimiter = ',')]
    ignore: Vec<String>,
}

impl PanelInput {
    fn load(&self) -> Result<SeriesPanel> {
        match (&self.panel, &self.raw) {
            (Some(path), None) => Ok(read_panel_csv(path, self.t_c)?),
            (None, Some(path)) => Ok(ingest_csv(path, self.t_c, &self.treated, &self.ignore)?),
            _ => bail!("exactly one of --panel or --raw is required"),
        }
    }
}

#[derive(Args)]
struct EstimateArgs {
    #[command(flatten)]
    input: PanelInput,
    /// One of: mean, dipw, dipw-known, dipw-stab, dipw-stab-known, dlm, lm,
    /// lm-ar1, arimax, y, scm, did.
    #[arg(long)]
    method: String,
    /// Self-normalize the weighted estimator.
    #[arg(long)]
    stabilized: bool,
    /// Propensity source for dipw: known | logistic.
    #[arg(long, default_value = "logistic")]
    propensity: String,
    /// Posterior draws for the DLM.
    #[arg(long, default_value_t = 5000)]
    draws: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Output effect path CSV.
    #[arg(long)]
    out: PathBuf,
    /// Optional spot/persistent/trend CSV (DLM only).
    #[arg(long)]
    components: Option<PathBuf>,
}

fn parse_method(args: &EstimateArgs) -> Result<Method> {
    let method = Method::parse(&args.method)?;
    Ok(match method {
        Method::Dipw { .. } => {
            let propensity = match args.propensity.as_str() {
                "known" => PropensitySource::Known,
                "logistic" => PropensitySource::Logistic,
                other => bail!("unknown propensity source `{other}`"),
            };
            Method::Dipw {
                stabilized: args.stabilized
                    || matches!(method, Method::Dipw { stabilized: true, .. }),
                propensity,
            }
        }
        other => other,
    })
}

#[derive(Args)]
struct RunScenarioArgs {
    #[command(flatten)]
    config: ConfigArgs,
    /// Comma-separated method names.
    #[arg(long, value_delimiter = ',', required = true)]
    methods: Vec<String>,
    /// Worker cap (also capped by DATEKIT_THREADS).
    #[arg(long)]
    threads: Option<usize>,
    /// Posterior draws for the DLM.
    #[arg(long, default_value_t = 5000)]
    draws: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct PlaceboArgs {
    #[command(flatten)]
    input: PanelInput,
    #[arg(long, default_value = "dlm")]
    method: String,
    /// Number of placebo re-estimations.
    #[arg(long, default_value_t = 20)]
    runs: usize,
    /// Fixed placebo time instead of the uniform rule.
    #[arg(long)]
    at: Option<usize>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 2000)]
    draws: usize,
    /// Output CSV of per-run placebo summaries.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ReportArgs {
    /// Run directories produced by run-scenario.
    #[arg(long, value_delimiter = ',', required = true)]
    inputs: Vec<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value = "many_many")]
    reference_scenario: String,
    #[arg(long, default_value_t = 72)]
    reference_horizon: usize,
    #[arg(long, default_value = "mean")]
    reference_method: String,
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Simulate(args) => {
            let cfg = args.config.resolve()?;
            let path = simulate_to_dir(&cfg, args.rep, &args.out)?;
            println!("wrote {}", path.display());
        }
        Command::Estimate(args) => {
            let panel = args.input.load()?;
            let method = parse_method(&args)?;
            let opts = MethodOptions {
                draws: args.draws,
                ..MethodOptions::new(args.seed)
            };
            let output = datekit_cli::methods::run_method(method, &panel, &opts)?;
            write_date_csv(&args.out, &output.date_path())?;
            println!("wrote {}", args.out.display());
            if let Some(components_path) = &args.components {
                match &output.decomposition {
                    Some(decomposition) => {
                        write_decomposition_csv(components_path, decomposition)?;
                        println!("wrote {}", components_path.display());
                    }
                    None => bail!("--components requires --method dlm"),
                }
            }
        }
        Command::RunScenario(args) => {
            let cfg = args.config.resolve()?;
            let methods = args
                .methods
                .iter()
                .map(|name| Method::parse(name))
                .collect::<Result<Vec<_>, _>>()?;
            let rc = RunConfig {
                methods,
                replications: None,
                threads: args.threads,
                draws: args.draws,
                command: std::env::args().collect::<Vec<_>>().join(" "),
            };
            let summary = run_scenario(&cfg, &rc, &args.out)?;
            println!(
                "completed {} replications ({} reused, {} failures) in {}",
                summary.replications,
                summary.reused,
                summary.failures,
                args.out.display()
            );
        }
        Command::Placebo(args) => {
            let panel = args.input.load()?;
            let method = Method::parse(&args.method)?;
            let mut opts = PlaceboOptions::new(method, args.runs, args.seed);
            opts.draws = args.draws;
            if let Some(at) = args.at {
                opts.rule = PlaceboRule::Fixed(at);
            }
            let summary = placebo_test(&panel, &opts)?;
            let mut csv = String::from("run,placebo_t_c,frac_zero,max_abs\n");
            for (i, run) in summary.runs.iter().enumerate() {
                csv.push_str(&format!(
                    "{i},{},{},{}\n",
                    run.placebo_t_c, run.frac_zero, run.max_abs
                ));
            }
            fs::write(&args.out, csv)
                .with_context(|| format!("writing {}", args.out.display()))?;
            println!(
                "mean fraction of horizons covering zero: {:.3}; runs mostly null: {:.3}",
                summary.mean_frac_zero, summary.share_mostly_null
            );
        }
        Command::Report(args) => {
            let runs = args
                .inputs
                .iter()
                .map(|dir| load_run(dir))
                .collect::<Result<Vec<_>, _>>()?;
            let reference = CellKey {
                scenario: args.reference_scenario.clone(),
                horizon: args.reference_horizon,
                method: args.reference_method.clone(),
            };
            let tables = build_report(&runs, &reference)?;
            write_report(&tables, &args.out)?;
            println!("wrote tables to {}", args.out.display());
        }
    }
    Ok(())
}
