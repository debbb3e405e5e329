//! Command-line workflow: synthetic dataset generation, plan computation,
//! DQN training, model comparison and plan validation.
//!
//! Exit codes: 0 on success, 1 when validation fails, 2 on usage errors
//! (bad flags, unknown algorithms, unreadable files).

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context};
use clap::{Args, Parser, Subcommand};

use chargeplan::agent::{self, Policy, TrainConfig};
use chargeplan::baselines;
use chargeplan::netdata::{
    demand_from_trips, generate_synthetic, load_existing_stations, load_network, load_trips,
    write_network_csv, write_stations_csv, DemandProfile,
};
use chargeplan::report::{self, evaluate_metrics, relative_table, PlanMetrics};
use chargeplan::utility::{check_constraints, plan_fee_eur, score};
use chargeplan::{ChargingPlan, Environment, RoadNetwork, Settings};

const SEED_ENV_VAR: &str = "CHARGEPLAN_SEED";

#[derive(Parser)]
#[command(
    name = "chargeplan",
    version,
    about = "Charging-station placement: utility model, greedy baselines and a DQN planner"
)]
struct Cli {
    /// TOML parameter file; missing keys take the built-in defaults
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// RNG seed; falls back to CHARGEPLAN_SEED, then 0
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct DatasetArgs {
    /// Nodes CSV (id,lat,lon,demand,home_share,estate_cost)
    #[arg(long)]
    nodes: PathBuf,
    /// Edges CSV (src,dst)
    #[arg(long)]
    edges: PathBuf,
    /// Existing stations CSV (node_id,t1,...,tm), used as the initial plan
    #[arg(long)]
    stations: Option<PathBuf>,
    /// Trip endpoints CSV (lat,lon); when given, per-node demand is
    /// re-derived from the trips on a grid over their bounding box
    #[arg(long)]
    trips: Option<PathBuf>,
    /// Grid resolution for --trips binning
    #[arg(long, default_value_t = 32)]
    trips_grid: usize,
    /// Divide the demand column by its maximum after loading
    #[arg(long)]
    normalize_demand: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic lattice dataset (nodes.csv + edges.csv)
    Synth {
        #[arg(long)]
        rows: usize,
        #[arg(long)]
        cols: usize,
        /// uniform | hotspot | gradient
        #[arg(long, default_value = "uniform")]
        demand_profile: DemandProfile,
        /// Output directory for nodes.csv and edges.csv
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
    },
    /// Run one algorithm (or a saved policy) and export the resulting plan
    Plan {
        #[command(flatten)]
        dataset: DatasetArgs,
        /// existing | best_benefit | highest_demand |
        /// bounding_optimising_plus | score_greedy | policy
        #[arg(long)]
        algo: String,
        /// Policy checkpoint (required for --algo policy)
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        /// Construction budget override, EUR
        #[arg(long)]
        budget: Option<f64>,
        /// Output stations CSV
        #[arg(long, default_value = "plan.csv")]
        out_plan: PathBuf,
        /// Optional GeoJSON export of the final plan
        #[arg(long)]
        out_geojson: Option<PathBuf>,
    },
    /// Train the DQN agent; emits a checkpoint and a training log
    Train {
        #[command(flatten)]
        dataset: DatasetArgs,
        /// Episode count override
        #[arg(long)]
        episodes: Option<usize>,
        #[arg(long, default_value = "checkpoint.json")]
        out_checkpoint: PathBuf,
        #[arg(long, default_value = "training_log.csv")]
        out_log: PathBuf,
    },
    /// Run several algorithms and print their metrics relative to a reference
    Compare {
        #[command(flatten)]
        dataset: DatasetArgs,
        /// Comma-separated algorithm names; `policy` needs --checkpoint
        #[arg(
            long,
            default_value = "existing,best_benefit,highest_demand,bounding_optimising_plus,score_greedy"
        )]
        algos: String,
        #[arg(long, default_value = "existing")]
        reference: String,
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        /// Construction budget override, EUR
        #[arg(long)]
        budget: Option<f64>,
        /// Write the comparison table as CSV here
        #[arg(long)]
        out_table: Option<PathBuf>,
    },
    /// Check a plan file against the budget, charger-bound and stability
    /// constraints
    Validate {
        #[command(flatten)]
        dataset: DatasetArgs,
        /// Stations CSV to validate
        #[arg(long)]
        plan: PathBuf,
        /// Spend to check against the budget; defaults to the plan fee
        #[arg(long)]
        budget_spent: Option<f64>,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(2)
        }
    }
}

fn resolve_seed(flag: Option<u64>) -> anyhow::Result<u64> {
    if let Some(seed) = flag {
        return Ok(seed);
    }
    match std::env::var(SEED_ENV_VAR) {
        Ok(text) => text
            .parse::<u64>()
            .map_err(|_| anyhow!("{SEED_ENV_VAR} must be an unsigned integer, got `{text}`")),
        Err(_) => Ok(0),
    }
}

fn load_settings(config: Option<&Path>) -> anyhow::Result<Settings> {
    match config {
        Some(path) => {
            Settings::load(path).with_context(|| format!("loading {}", path.display()))
        }
        None => Ok(Settings::default()),
    }
}

/// Loads the network (plus optional trips re-derivation) and the initial
/// plan of a dataset.
fn load_dataset(
    args: &DatasetArgs,
    settings: &Settings,
) -> anyhow::Result<(RoadNetwork, ChargingPlan)> {
    let mut network = load_network(&args.nodes, &args.edges, args.normalize_demand)?;
    if let Some(trips_path) = &args.trips {
        let trips = load_trips(trips_path, None)?;
        network = demand_from_trips(&trips, &network, args.trips_grid)?;
    }
    let initial = match &args.stations {
        Some(path) => load_existing_stations(
            path,
            &network,
            settings.catalog.type_count(),
            settings.params.max_chargers,
        )?,
        None => ChargingPlan::new(),
    };
    Ok((network, initial))
}

struct AlgoRun {
    plan: ChargingPlan,
    metrics: PlanMetrics,
}

fn run_algorithm(
    name: &str,
    network: &RoadNetwork,
    initial: &ChargingPlan,
    settings: &Settings,
    budget: f64,
    checkpoint: Option<&Path>,
) -> anyhow::Result<AlgoRun> {
    let params = &settings.params;
    let catalog = &settings.catalog;
    let rho_target = settings.rho_target;
    let plan = match name {
        "existing" => baselines::existing_charging(initial),
        "best_benefit" => {
            baselines::best_benefit(initial, budget, network, catalog, params, rho_target)
        }
        "highest_demand" => {
            baselines::highest_demand(initial, budget, network, catalog, params, rho_target)
        }
        "bounding_optimising_plus" => baselines::bounding_optimising_plus(
            initial, budget, network, catalog, params, rho_target,
        ),
        "score_greedy" => baselines::score_greedy(initial, budget, network, catalog, params),
        "policy" => {
            let path = checkpoint
                .ok_or_else(|| anyhow!("--algo policy requires --checkpoint <file>"))?;
            let policy = Policy::load(path)?;
            let mut params = params.clone();
            params.budget_eur = budget;
            let mut env =
                Environment::new(network, catalog, &params, rho_target, initial.clone())?;
            if policy.observation_len() != env.observation_len() {
                bail!(
                    "checkpoint expects observations of length {}, network needs {}",
                    policy.observation_len(),
                    env.observation_len()
                );
            }
            let (plan, _) = agent::evaluate_policy(&policy, &mut env)?;
            plan
        }
        other => bail!("unknown algorithm `{other}`"),
    };
    let metrics = evaluate_metrics(&plan, network, catalog, params)?;
    Ok(AlgoRun { plan, metrics })
}

fn run(cli: Cli) -> anyhow::Result<ExitCode> {
    let settings = load_settings(cli.config.as_deref())?;
    let seed = resolve_seed(cli.seed)?;
    match cli.command {
        Command::Synth { rows, cols, demand_profile, out_dir } => {
            let network = generate_synthetic(rows, cols, seed, demand_profile)?;
            std::fs::create_dir_all(&out_dir)
                .with_context(|| format!("creating {}", out_dir.display()))?;
            let nodes = out_dir.join("nodes.csv");
            let edges = out_dir.join("edges.csv");
            write_network_csv(&network, &nodes, &edges)?;
            println!(
                "wrote {} ({} nodes) and {} ({} edges)",
                nodes.display(),
                network.node_count(),
                edges.display(),
                network.edges().len()
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Plan { dataset, algo, checkpoint, budget, out_plan, out_geojson } => {
            let (network, initial) = load_dataset(&dataset, &settings)?;
            let budget = budget.unwrap_or(settings.params.budget_eur);
            let run =
                run_algorithm(&algo, &network, &initial, &settings, budget, checkpoint.as_deref())?;
            write_stations_csv(&run.plan, settings.catalog.type_count(), &out_plan)?;
            if let Some(path) = &out_geojson {
                report::export_plan(&run.plan, &network, &settings.catalog, path)?;
            }
            println!(
                "{algo}: score {:.6}, benefit {:.6}, {} stations, {} chargers, fee {:.2} EUR",
                run.metrics.score,
                run.metrics.benefit,
                run.metrics.station_count,
                run.metrics.charger_count,
                run.metrics.fee_spent_eur
            );
            println!("plan written to {}", out_plan.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::Train { dataset, episodes, out_checkpoint, out_log } => {
            let (network, initial) = load_dataset(&dataset, &settings)?;
            let mut train_config: TrainConfig = settings.train.clone();
            train_config.seed = seed;
            if let Some(episodes) = episodes {
                train_config.episodes_max = episodes;
            }
            let mut env = Environment::new(
                &network,
                &settings.catalog,
                &settings.params,
                settings.rho_target,
                initial,
            )?;
            let outcome = agent::train(&mut env, &train_config)?;
            outcome.policy.save(&out_checkpoint)?;
            agent::write_log_csv(&outcome.log, &out_log)?;
            println!(
                "trained {} episodes; best score {:.6} at episode {}",
                outcome.log.len(),
                outcome.best_score,
                outcome.best_episode
            );
            println!(
                "checkpoint written to {}, log to {}",
                out_checkpoint.display(),
                out_log.display()
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Compare { dataset, algos, reference, checkpoint, budget, out_table } => {
            let (network, initial) = load_dataset(&dataset, &settings)?;
            let budget = budget.unwrap_or(settings.params.budget_eur);
            let names: Vec<String> =
                algos.split(',').map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect();
            if names.is_empty() {
                bail!("--algos must name at least one algorithm");
            }
            let mut models = Vec::with_capacity(names.len());
            for name in &names {
                let run = run_algorithm(
                    name,
                    &network,
                    &initial,
                    &settings,
                    budget,
                    checkpoint.as_deref(),
                )?;
                models.push((name.clone(), run.metrics));
            }
            let table = relative_table(&models, &reference)?;
            print!("{}", table.to_text());
            if let Some(path) = &out_table {
                std::fs::write(path, table.to_csv())
                    .with_context(|| format!("writing {}", path.display()))?;
                println!("table written to {}", path.display());
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Validate { dataset, plan, budget_spent } => {
            let (network, _) = load_dataset(&dataset, &settings)?;
            let plan = load_existing_stations(
                &plan,
                &network,
                settings.catalog.type_count(),
                settings.params.max_chargers,
            )?;
            let spent = budget_spent
                .unwrap_or_else(|| plan_fee_eur(&plan, &network, &settings.catalog));
            let report =
                check_constraints(&plan, &network, &settings.catalog, &settings.params, spent);
            println!(
                "budget: {} | charger bounds: {} | stability: {}",
                if report.within_budget { "ok" } else { "VIOLATED" },
                if report.charger_bounds_ok { "ok" } else { "VIOLATED" },
                if report.stable { "ok" } else { "VIOLATED" },
            );
            if report.is_feasible() {
                let s = score(&plan, &network, &settings.catalog, &settings.params)?;
                println!("feasible; score {s:.6}, fee {spent:.2} EUR");
                Ok(ExitCode::SUCCESS)
            } else {
                println!("infeasible: {}", report.summary());
                Ok(ExitCode::from(1))
            }
        }
    }
}
