//! Command-line front end: scenario runs, fairness optimization, replicator
//! trajectories, and baseline comparisons.
//!
//! Exit codes: 0 on success, 2 when a static scenario fails to converge,
//! 3 on invalid configuration or input files.

mod plot;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use netassoc::dynamics::{integrate_until_converged, LimitClass};
use netassoc::fairness::{
    exhaustive_optimum, local_opt_check, multistart_local_search, objective, OptimizationResult,
};
use netassoc::game::{parse_game_toml, repercussion_transform, MixedProfile};
use netassoc::sim::policies::compare_policies;
use netassoc::sim::{run_scenario, ScenarioConfig};
use netassoc::{presets, CellModels, Topology};

#[derive(Parser)]
#[command(name = "netassoc", version, about = "User-network association simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario from a TOML config file.
    Run(RunArgs),
    /// Find an efficient or fair assignment for a topology.
    Optimize(OptimizeArgs),
    /// Integrate the replicator dynamics of a matrix game's companion.
    Dynamics(DynamicsArgs),
    /// Run the scenario under every association policy and compare.
    Compare(CompareArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Scenario config (TOML); defaults apply to missing fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override the config's master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory for reports, CSV, and plots.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Write the per-iteration CSV log.
    #[arg(long)]
    csv: bool,
    /// Write SVG plots of the throughput series.
    #[arg(long)]
    plots: bool,
}

#[derive(Args)]
struct OptimizeArgs {
    /// Topology file (TOML); omit to use the bundled 20-user reference.
    #[arg(long)]
    topology: Option<PathBuf>,
    /// Fairness parameter (0 = total throughput).
    #[arg(long, default_value_t = 0.0)]
    alpha: f64,
    /// Exhaustive-enumeration limit on the allocation-space size.
    #[arg(long, default_value_t = 10_000_000)]
    limit: u128,
    /// Random restarts for the local search fallback.
    #[arg(long, default_value_t = 100)]
    starts: usize,
    /// Seed for the local search.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Force local search even when enumeration would fit.
    #[arg(long)]
    local: bool,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Args)]
struct DynamicsArgs {
    /// Matrix game file (TOML); omit to use the bundled two-by-three game.
    #[arg(long)]
    game: Option<PathBuf>,
    /// Integrate the raw game instead of its repercussion companion.
    #[arg(long)]
    raw: bool,
    /// Initial probabilities, rows separated by ';', entries by ','
    /// (default: uniform).
    #[arg(long)]
    start: Option<String>,
    /// Time horizon.
    #[arg(long, default_value_t = 2_000.0)]
    horizon: f64,
    /// Integrator step.
    #[arg(long, default_value_t = 0.01)]
    step: f64,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Write the trajectory CSV (time, probabilities, potential).
    #[arg(long)]
    csv: bool,
    /// Write SVG plots of probabilities and potential.
    #[arg(long)]
    plots: bool,
}

#[derive(Args)]
struct CompareArgs {
    /// Scenario config (TOML) shared by all policies.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Number of seeds to sweep (seed, seed+1, ...).
    #[arg(long, default_value_t = 10)]
    seeds: u64,
    /// First seed of the sweep (defaults to the config's seed).
    #[arg(long)]
    seed: Option<u64>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Usage problems are invalid input.
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(3)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result = match cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Optimize(args) => cmd_optimize(args),
        Command::Dynamics(args) => cmd_dynamics(args),
        Command::Compare(args) => cmd_compare(args),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(3)
        }
    }
}

fn load_scenario(path: &Option<PathBuf>) -> anyhow::Result<ScenarioConfig> {
    match path {
        Some(p) => {
            let text = fs::read_to_string(p)
                .map_err(|e| anyhow::anyhow!("reading {}: {e}", p.display()))?;
            Ok(ScenarioConfig::from_toml_str(&text)?)
        }
        None => Ok(ScenarioConfig::default()),
    }
}

fn ensure_out(dir: &Path) -> anyhow::Result<()> {
    fs::create_dir_all(dir)?;
    Ok(())
}

fn cmd_run(args: RunArgs) -> anyhow::Result<ExitCode> {
    let mut config = load_scenario(&args.config)?;
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    if args.csv {
        config.record_log = true;
    }
    config.validate()?;
    let metrics = run_scenario(&config)?;

    println!(
        "iterations: {} (converged: {})",
        metrics.iterations_run, metrics.converged
    );
    println!("mean global throughput: {:.3} Mb/s", metrics.mean_throughput());
    println!(
        "steady-state throughput: {:.3} Mb/s",
        metrics.steady_state_mean()
    );
    println!(
        "episodes (iterations to convergence): {:?}",
        metrics.episode_iterations
    );
    println!(
        "handovers: total {}, mean per user {:.2}",
        metrics.total_handovers(),
        metrics.mean_handovers()
    );
    if let Some(alloc) = &metrics.final_allocation {
        println!("final allocation (choice index per user): {alloc:?}");
    }

    ensure_out(&args.out)?;
    let summary = args.out.join("run_summary.txt");
    fs::write(
        &summary,
        format!(
            "seed: {}\niterations: {}\nconverged: {}\nmean_throughput_mbps: {:.6}\nsteady_state_mbps: {:.6}\nepisodes: {:?}\nhandovers_total: {}\nhandovers_mean: {:.3}\nfinal_allocation: {:?}\n",
            config.seed,
            metrics.iterations_run,
            metrics.converged,
            metrics.mean_throughput(),
            metrics.steady_state_mean(),
            metrics.episode_iterations,
            metrics.total_handovers(),
            metrics.mean_handovers(),
            metrics.final_allocation,
        ),
    )?;
    println!("wrote {}", summary.display());

    if args.csv {
        let path = args.out.join("run_log.csv");
        let mut buf = Vec::new();
        metrics.write_log_csv(&mut buf)?;
        fs::write(&path, buf)?;
        println!("wrote {}", path.display());
    }
    if args.plots {
        let path = args.out.join("throughput.svg");
        let points: Vec<(f64, f64)> = metrics
            .throughput_series
            .iter()
            .enumerate()
            .map(|(i, &y)| (i as f64 + 1.0, y))
            .collect();
        let svg = plot::line_chart(
            "Global throughput",
            "iteration",
            "Mb/s",
            &[plot::Series {
                name: "throughput",
                points,
            }],
        );
        fs::write(&path, svg)?;
        println!("wrote {}", path.display());
    }

    if !metrics.converged {
        eprintln!("scenario did not converge within the iteration budget");
        return Ok(ExitCode::from(2));
    }
    Ok(ExitCode::SUCCESS)
}

fn load_topology(path: &Option<PathBuf>) -> anyhow::Result<Topology> {
    match path {
        Some(p) => {
            let text = fs::read_to_string(p)
                .map_err(|e| anyhow::anyhow!("reading {}: {e}", p.display()))?;
            Ok(Topology::from_toml_str(&text)?)
        }
        None => Ok(presets::fairness_topology()?),
    }
}

fn cmd_optimize(args: OptimizeArgs) -> anyhow::Result<ExitCode> {
    let topology = load_topology(&args.topology)?;
    let models = CellModels::default();
    let space: u128 = (0..topology.n_users())
        .map(|u| topology.choice_set(u).len() as u128)
        .product();
    let result: OptimizationResult = if !args.local && space <= args.limit {
        exhaustive_optimum(&topology, &models, args.alpha, args.limit)?
    } else {
        multistart_local_search(&topology, &models, args.alpha, args.starts, args.seed)?
    };
    let report = result.report(&topology, &models, args.alpha)?;
    print!("{report}");
    let check = local_opt_check(&topology, &models, &result.allocation, args.alpha)?;
    println!("locally optimal: {}", check.is_local_opt);

    ensure_out(&args.out)?;
    let path = args.out.join("optimize_report.txt");
    fs::write(&path, report)?;
    println!("wrote {}", path.display());
    Ok(ExitCode::SUCCESS)
}

fn parse_start(game_rows: &[usize], text: &str) -> anyhow::Result<Vec<Vec<f64>>> {
    let rows: Vec<Vec<f64>> = text
        .split(';')
        .map(|row| {
            row.split(',')
                .map(|v| v.trim().parse::<f64>())
                .collect::<Result<Vec<f64>, _>>()
        })
        .collect::<Result<_, _>>()
        .map_err(|e| anyhow::anyhow!("parsing --start: {e}"))?;
    anyhow::ensure!(
        rows.len() == game_rows.len()
            && rows.iter().zip(game_rows).all(|(r, &n)| r.len() == n),
        "--start shape must match the game's action sets {game_rows:?}"
    );
    Ok(rows)
}

fn cmd_dynamics(args: DynamicsArgs) -> anyhow::Result<ExitCode> {
    let game = match &args.game {
        Some(p) => {
            let text = fs::read_to_string(p)
                .map_err(|e| anyhow::anyhow!("reading {}: {e}", p.display()))?;
            parse_game_toml(&text)?.0
        }
        None => presets::two_by_three_game(),
    };
    let sizes: Vec<usize> = game.action_sets().iter().map(|s| s.len()).collect();
    let q0 = match &args.start {
        Some(text) => MixedProfile::new(&game, parse_start(&sizes, text)?)?,
        None => MixedProfile::uniform(&game),
    };

    let (traj, converged) = if args.raw {
        netassoc::dynamics::integrate_raw_until_converged(&game, &q0, args.horizon, args.step)?
    } else {
        let companion = repercussion_transform(&game)?;
        integrate_until_converged(&companion, &q0, args.horizon, args.step)?
    };

    let last = traj.last_state();
    println!(
        "integrated {} samples to t = {:.2}; converged: {converged}",
        traj.len(),
        traj.times().last().copied().unwrap_or(0.0)
    );
    match netassoc::dynamics::classify_limit(&game, &traj, 1e-4)? {
        LimitClass::Pure(p) => println!("limit: pure profile {:?}", p.choices()),
        LimitClass::MixedStationary { support } => {
            println!("limit: stationary face with supports {support:?}")
        }
        LimitClass::Undecided => println!("limit: undecided (still moving)"),
    }
    println!("final state: {:?}", last.rows());

    ensure_out(&args.out)?;
    if args.csv {
        let path = args.out.join("trajectory.csv");
        let mut buf = Vec::new();
        traj.write_csv(&mut buf)?;
        fs::write(&path, buf)?;
        println!("wrote {}", path.display());
    }
    if args.plots {
        let mut prob_series = Vec::new();
        let mut names = Vec::new();
        for (n, row) in traj.states()[0].rows().iter().enumerate() {
            for i in 0..row.len() {
                names.push(format!("q[{n}][{i}]"));
            }
        }
        let mut k = 0;
        for (n, row) in traj.states()[0].rows().iter().enumerate() {
            for i in 0..row.len() {
                let points: Vec<(f64, f64)> = traj
                    .times()
                    .iter()
                    .zip(traj.states())
                    .map(|(&t, s)| (t, s.row(n)[i]))
                    .collect();
                prob_series.push(plot::Series {
                    name: &names[k],
                    points,
                });
                k += 1;
            }
        }
        let svg = plot::line_chart("Strategy probabilities", "time", "probability", &prob_series);
        let path = args.out.join("probabilities.svg");
        fs::write(&path, svg)?;
        println!("wrote {}", path.display());

        let points: Vec<(f64, f64)> = traj
            .times()
            .iter()
            .zip(traj.potential())
            .map(|(&t, &f)| (t, f))
            .collect();
        let svg = plot::line_chart(
            "Potential along the trajectory",
            "time",
            "potential",
            &[plot::Series {
                name: "potential",
                points,
            }],
        );
        let path = args.out.join("potential.svg");
        fs::write(&path, svg)?;
        println!("wrote {}", path.display());
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_compare(args: CompareArgs) -> anyhow::Result<ExitCode> {
    let mut config = load_scenario(&args.config)?;
    config.validate()?;
    let first_seed = args.seed.unwrap_or(config.seed);
    let mut wins = [0u64; 3];
    println!("seed, algorithm, selfish_best, gan_wifi_first, throughput_payoff");
    let mut sums = [0.0f64; 4];
    for k in 0..args.seeds {
        config.seed = first_seed + k;
        let cmp = compare_policies(&config)?;
        println!(
            "{}, {:.3}, {:.3}, {:.3}, {:.3}",
            config.seed, cmp.algorithm, cmp.selfish_best, cmp.gan_wifi_first, cmp.throughput_payoff
        );
        if cmp.algorithm >= cmp.selfish_best {
            wins[0] += 1;
        }
        if cmp.algorithm >= cmp.gan_wifi_first {
            wins[1] += 1;
        }
        if cmp.algorithm >= cmp.throughput_payoff {
            wins[2] += 1;
        }
        sums[0] += cmp.algorithm;
        sums[1] += cmp.selfish_best;
        sums[2] += cmp.gan_wifi_first;
        sums[3] += cmp.throughput_payoff;
    }
    let n = args.seeds.max(1) as f64;
    println!(
        "means: algorithm {:.3}, selfish {:.3}, gan {:.3}, throughput-payoff {:.3}",
        sums[0] / n,
        sums[1] / n,
        sums[2] / n,
        sums[3] / n
    );
    println!(
        "algorithm >= selfish in {}/{} seeds, >= gan in {}/{}, >= throughput-payoff in {}/{}",
        wins[0], args.seeds, wins[1], args.seeds, wins[2], args.seeds
    );

    // Reference quality: local-search optimum on the static topology.
    if config.arrivals.rate == 0.0 {
        let topo = config.load_topology()?;
        let models = config.models.build()?;
        let opt = multistart_local_search(&topo, &models, config.alpha, 100, first_seed)?;
        let base = objective(&topo, &models, &opt.allocation, config.alpha)?;
        println!("local-search optimum objective: {base:.3}");
    }
    Ok(ExitCode::SUCCESS)
}
