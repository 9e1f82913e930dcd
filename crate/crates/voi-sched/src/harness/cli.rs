//! The `voi-sched` command line: `run`, `train`, `toy`, `bench`.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::dqn::{self, CheckpointHeader, DqnPolicy, ObservationScaler, TrainConfig};
use crate::error::{Error, Result};
use crate::policies::{GreedyVoi, MaxAgeFirst, Policy};
use crate::queries::{QueryKind, VoiParams};
use crate::query_process::ClientProcess;
use crate::toy::{self, ToyModel, ToyQuery};

use super::metrics::{
    aggregate, write_aggregate_csv, write_queries_csv, write_slots_csv, write_training_curve_csv,
};
use super::scenario::{build_scenario, load_scenario_file, Scenario};
use super::{evaluate_policy, train_dqn};

#[derive(Parser)]
#[command(
    name = "voi-sched",
    version,
    about = "Query-aware sensor polling: simulator, benchmark policies and DQN scheduler"
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one policy on a scenario and write slot/query/aggregate CSVs
    Run(RunArgs),
    /// Train the DQN scheduler and write a checkpoint plus training curve
    Train(TrainArgs),
    /// Solve the two-chain example exactly and write the policy grid CSV
    Toy(ToyArgs),
    /// Compare the benchmark policies on one scenario in a single CSV
    Bench(BenchArgs),
}

#[derive(Args)]
struct ScenarioArgs {
    /// Built-in scenario name (periodic, memoryless, mixed, periodic4)
    #[arg(long)]
    scenario: Option<String>,
    /// TOML scenario file (alternative to --scenario)
    #[arg(long)]
    config: Option<PathBuf>,
}

impl ScenarioArgs {
    fn load(&self) -> Result<Scenario> {
        match (&self.scenario, &self.config) {
            (Some(name), None) => build_scenario(name),
            (None, Some(path)) => load_scenario_file(path),
            (None, None) => Err(Error::Config(
                "pass --scenario <name> or --config <file> (names: periodic, memoryless, mixed, periodic4)"
                    .into(),
            )),
            (Some(_), Some(_)) => {
                Err(Error::Config("--scenario and --config are mutually exclusive".into()))
            }
        }
    }
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,
    /// Policy: maf, greedy-cnt, greedy-max, greedy-state, greedy-mean,
    /// greedy-var, or dqn (with --checkpoint)
    #[arg(long)]
    policy: String,
    /// Trained-network checkpoint for --policy dqn
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    episodes: Option<usize>,
    /// Output directory (default: $VOI_SCHED_OUT_DIR or ./out)
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

#[derive(Args)]
struct TrainArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,
    /// Training hyperparameter TOML (missing keys take the defaults)
    #[arg(long)]
    train_config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Training episodes (overrides the config)
    #[arg(long)]
    episodes: Option<usize>,
    /// Optimize for one client's query only (zeroes the other weights):
    /// all, cnt, max, state, mean, var
    #[arg(long, default_value = "all")]
    target: String,
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

#[derive(Args)]
struct ToyArgs {
    #[arg(long, default_value_t = 0.1)]
    p1: f64,
    #[arg(long, default_value_t = 0.2)]
    p2: f64,
    /// Query solved for: max or cnt
    #[arg(long, default_value = "max")]
    query: String,
    #[arg(long, default_value_t = 0.9)]
    gamma: f64,
    #[arg(long, default_value_t = 20)]
    delta_max: usize,
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,
    /// Adds the DQN policy to the comparison
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    episodes: Option<usize>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

fn resolve_out_dir(arg: Option<PathBuf>) -> PathBuf {
    arg.or_else(|| std::env::var_os("VOI_SCHED_OUT_DIR").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"))
}

fn create_file(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    fs::create_dir_all(dir)?;
    Ok(BufWriter::new(File::create(dir.join(name))?))
}

fn greedy_policy(scenario: &Scenario, kind: QueryKind) -> GreedyVoi {
    GreedyVoi::new(scenario.model.clone(), kind, VoiParams::default())
}

const POLICY_NAMES: &str =
    "maf, greedy-cnt, greedy-max, greedy-state, greedy-mean, greedy-var, dqn";

fn build_policy(
    name: &str,
    scenario: &Scenario,
    checkpoint: Option<&Path>,
) -> Result<Box<dyn Policy>> {
    match name {
        "maf" => Ok(Box::new(MaxAgeFirst)),
        "greedy-cnt" => {
            let kind = scenario.count_range_kind().ok_or_else(|| {
                Error::Config("greedy-cnt needs a count-range client in the scenario".into())
            })?;
            Ok(Box::new(greedy_policy(scenario, kind)))
        }
        "greedy-max" => Ok(Box::new(greedy_policy(scenario, QueryKind::Max))),
        "greedy-state" => Ok(Box::new(greedy_policy(scenario, QueryKind::State))),
        "greedy-mean" => Ok(Box::new(greedy_policy(scenario, QueryKind::Mean))),
        "greedy-var" => Ok(Box::new(greedy_policy(scenario, QueryKind::Variance))),
        "dqn" => {
            let path = checkpoint
                .ok_or_else(|| Error::Config("--policy dqn needs --checkpoint <file>".into()))?;
            let (net, _header) = dqn::load(path)?;
            let snapshots: Vec<_> = scenario
                .clients
                .iter()
                .map(ClientProcess::snapshot)
                .collect();
            let scaler = ObservationScaler::new(&scenario.model, &snapshots)?;
            Ok(Box::new(DqnPolicy::new(net, scaler)))
        }
        other => Err(Error::Config(format!(
            "unknown policy '{other}'; valid policies: {POLICY_NAMES}"
        ))),
    }
}

fn print_report(report: &super::metrics::AggregateReport) {
    println!(
        "policy {:>12} | overall cost {:>9.4} | state MSE trace {:>9.3}",
        report.policy, report.overall_cost_mean, report.state_mse_trace_mean
    );
    for client in &report.clients {
        println!(
            "  client {} ({:>11}): {} queries, MSE mean {:.4}, median {:.4}, p95 {:.4}",
            client.client + 1,
            client.kind,
            client.query_count,
            client.mse_mean,
            client.mse_p50,
            client.mse_p95
        );
    }
}

fn cmd_run(args: RunArgs) -> Result<()> {
    let scenario = args.scenario.load()?;
    let seed = args.seed.unwrap_or(scenario.seed);
    let episodes = args.episodes.unwrap_or(scenario.episodes);
    let out_dir = resolve_out_dir(args.out_dir);
    let mut policy = build_policy(&args.policy, &scenario, args.checkpoint.as_deref())?;
    let logs = evaluate_policy(&scenario, policy.as_mut(), episodes, seed)?;
    let report = aggregate(policy.name(), &scenario.name, &logs)?;

    write_slots_csv(&logs, create_file(&out_dir, "slots.csv")?)?;
    write_queries_csv(&logs, create_file(&out_dir, "queries.csv")?)?;
    write_aggregate_csv(
        std::slice::from_ref(&report),
        create_file(&out_dir, "aggregate.csv")?,
    )?;

    println!(
        "ran {episodes} episodes of '{}' with seed {seed}; CSVs in {}",
        scenario.name,
        out_dir.display()
    );
    print_report(&report);
    Ok(())
}

fn load_train_config(path: Option<&Path>) -> Result<TrainConfig> {
    match path {
        None => Ok(TrainConfig::default()),
        Some(p) => {
            let text = fs::read_to_string(p)?;
            toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", p.display())))
        }
    }
}

fn apply_target(scenario: &mut Scenario, target: &str) -> Result<()> {
    let keep = |kind: &QueryKind| match target {
        "all" => true,
        "cnt" => matches!(kind, QueryKind::CountRange { .. }),
        "max" => matches!(kind, QueryKind::Max),
        "state" => matches!(kind, QueryKind::State),
        "mean" => matches!(kind, QueryKind::Mean),
        "var" => matches!(kind, QueryKind::Variance),
        _ => true,
    };
    if !["all", "cnt", "max", "state", "mean", "var"].contains(&target) {
        return Err(Error::Config(format!(
            "unknown target '{target}'; valid targets: all, cnt, max, state, mean, var"
        )));
    }
    if target != "all" {
        if !scenario.clients.iter().any(|c| keep(&c.kind)) {
            return Err(Error::Config(format!(
                "no client matches target '{target}'"
            )));
        }
        for client in scenario.clients.iter_mut() {
            if !keep(&client.kind) {
                client.alpha = 0.0;
            }
        }
    }
    Ok(())
}

fn cmd_train(args: TrainArgs) -> Result<()> {
    let mut scenario = args.scenario.load()?;
    apply_target(&mut scenario, &args.target)?;
    let mut config = load_train_config(args.train_config.as_deref())?;
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    if let Some(episodes) = args.episodes {
        config.train_episodes = episodes;
    }
    let out_dir = resolve_out_dir(args.out_dir);

    let sizes = dqn::scheduler_layer_sizes(
        scenario.model.state_dim(),
        scenario.clients.len(),
        scenario.model.sensor_count(),
    );
    let forward_ops = dqn::count_operations(&sizes, 1);
    let train_ops = dqn::count_train(&sizes, 1, config.batch_size);
    println!(
        "network layers {:?}: forward pass C_f = {forward_ops} basic ops (k = 1), \
         one training step C_b = {train_ops} (B = {})",
        sizes, config.batch_size
    );
    if sizes == [422, 50, 20, 20] {
        println!(
            "note: the op-count formula gives C_f = {forward_ops} for this architecture, \
             which differs from the previously published figure of 96570 for the same layer sizes"
        );
    }

    let output = train_dqn(&scenario, &config)?;
    fs::create_dir_all(&out_dir)?;
    let checkpoint_path = out_dir.join("checkpoint.txt");
    dqn::save(
        &output.net,
        &CheckpointHeader {
            seed: config.seed,
            config_hash: output.config_hash.clone(),
        },
        &checkpoint_path,
    )?;
    write_training_curve_csv(&output.curve, create_file(&out_dir, "training_curve.csv")?)?;

    let tail = output
        .curve
        .iter()
        .rev()
        .take(10)
        .map(|p| p.total_reward)
        .collect::<Vec<_>>();
    let tail_mean = tail.iter().sum::<f64>() / tail.len().max(1) as f64;
    println!(
        "trained {} episodes (seed {}); last-10-episode mean return {tail_mean:.3}; \
         checkpoint at {}",
        output.curve.len(),
        config.seed,
        checkpoint_path.display()
    );
    Ok(())
}

fn cmd_toy(args: ToyArgs) -> Result<()> {
    let query = match args.query.as_str() {
        "max" => ToyQuery::Max,
        "cnt" => ToyQuery::Count,
        other => {
            return Err(Error::Config(format!(
                "unknown toy query '{other}'; valid queries: max, cnt"
            )))
        }
    };
    let model = ToyModel::new(args.p1, args.p2, args.delta_max, args.gamma)?;
    let mdp = toy::build_mdp(&model, query);
    let solution = toy::policy_iteration(&mdp, model.gamma)?;
    let out_dir = resolve_out_dir(args.out_dir);
    let file_name = format!("toy_policy_{}.csv", args.query);
    toy::write_policy_csv(&mdp, &solution, create_file(&out_dir, &file_name)?)?;
    println!(
        "solved {} states in {} policy-iteration rounds; policy grid in {}",
        mdp.states.len(),
        solution.iterations,
        out_dir.join(&file_name).display()
    );
    Ok(())
}

fn cmd_bench(args: BenchArgs) -> Result<()> {
    let scenario = args.scenario.load()?;
    let seed = args.seed.unwrap_or(scenario.seed);
    let episodes = args.episodes.unwrap_or(scenario.episodes);
    let out_dir = resolve_out_dir(args.out_dir);

    let mut policies: Vec<Box<dyn Policy>> = vec![Box::new(MaxAgeFirst)];
    let mut seen = Vec::new();
    for client in &scenario.clients {
        if !seen.contains(&client.kind) {
            seen.push(client.kind.clone());
            policies.push(Box::new(greedy_policy(&scenario, client.kind.clone())));
        }
    }
    if let Some(path) = &args.checkpoint {
        policies.push(build_policy("dqn", &scenario, Some(path))?);
    }

    let mut reports = Vec::with_capacity(policies.len());
    for policy in policies.iter_mut() {
        let logs = evaluate_policy(&scenario, policy.as_mut(), episodes, seed)?;
        let report = aggregate(policy.name(), &scenario.name, &logs)?;
        print_report(&report);
        reports.push(report);
    }
    let mut out = create_file(&out_dir, "bench_aggregate.csv")?;
    write_aggregate_csv(&reports, &mut out)?;
    out.flush()?;
    println!(
        "benchmarked {} policies over {episodes} episodes (seed {seed}); CSV at {}",
        reports.len(),
        out_dir.join("bench_aggregate.csv").display()
    );
    Ok(())
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Train(args) => cmd_train(args),
        Command::Toy(args) => cmd_toy(args),
        Command::Bench(args) => cmd_bench(args),
    }
}

/// Entry point for the thin binary: parse, dispatch, one-line diagnostics.
pub fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_policy_names_the_valid_options() {
        let scenario = build_scenario("periodic").unwrap();
        let Err(err) = build_policy("frobnicate", &scenario, None) else {
            panic!("unknown policy accepted");
        };
        let msg = err.to_string();
        assert!(msg.contains("frobnicate"));
        assert!(msg.contains("maf"));
        assert!(msg.contains("greedy-max"));
        assert!(msg.contains("dqn"));
    }

    #[test]
    fn dqn_policy_requires_checkpoint() {
        let scenario = build_scenario("periodic").unwrap();
        assert!(build_policy("dqn", &scenario, None).is_err());
    }

    #[test]
    fn target_zeroes_other_clients() {
        let mut scenario = build_scenario("periodic").unwrap();
        apply_target(&mut scenario, "max").unwrap();
        assert_eq!(scenario.clients[0].alpha, 0.0); // count-range client
        assert_eq!(scenario.clients[1].alpha, 1.0);
        assert!(apply_target(&mut scenario, "bogus").is_err());
    }
}
