use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use robex_core::experiments::{plot_svg, records_to_csv, run_sweep, RunOptions, SweepSpec};
use robex_core::milp::{encode, write_model};
use robex_core::plan::Plan;
use robex_core::solver::{solve_exact_with, solve_greedy, SolveResult, DEFAULT_NODE_BUDGET};
use robex_core::{replay, Mode, ScenarioConfig, SolveOptions, SolveStatus, TxIndex};

#[derive(Parser)]
#[command(name = "robex", version, about = "Energy-aware multi-robot exploration planner")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// Battery model to plan with, overriding the scenario file.
    #[arg(long, global = true, value_enum)]
    mode: Option<ModeArg>,
    /// Use the greedy heuristic instead of the exact search.
    #[arg(long, global = true)]
    greedy: bool,
    /// Node budget of the exact search.
    #[arg(long, global = true, default_value_t = DEFAULT_NODE_BUDGET)]
    node_budget: u64,
    /// Which cell uplink energy is charged against.
    #[arg(long, global = true, value_enum)]
    tx_index: Option<TxIndexArg>,
    /// Clamp charging at the battery capacity instead of rejecting overflow.
    #[arg(long, global = true)]
    clamp_charge: bool,
    /// Output file, or directory for `solve`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Accepted for compatibility; nothing is ever randomized.
    #[arg(long, global = true)]
    seedless: bool,
    /// Search threads, also used for concurrent sweep rows; 0 uses every core.
    #[arg(long, global = true, default_value_t = 1)]
    workers: usize,
    /// Print solver statistics as key=value lines.
    #[arg(long, global = true)]
    stats: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Oros,
    Slam,
}

#[derive(Clone, Copy, ValueEnum)]
enum TxIndexArg {
    AsPrinted,
    NewCell,
}

#[derive(Subcommand)]
enum Command {
    /// Plan a scenario; writes the plan, its trace CSV and prints a summary.
    Solve { scenario: PathBuf },
    /// Run a parameter sweep and write the experiments CSV.
    Sweep { spec: PathBuf },
    /// Write the linear model of a scenario in MPS format.
    Export { scenario: PathBuf },
    /// Chart a sweep CSV or a trace CSV as SVG.
    Plot { csv: PathBuf },
    /// Re-simulate a plan file and write its trace CSV.
    Replay { scenario: PathBuf, plan: PathBuf },
}

impl Global {
    fn apply(&self, config: &mut ScenarioConfig) {
        if let Some(m) = self.mode {
            config.mode = match m {
                ModeArg::Oros => Mode::Oros,
                ModeArg::Slam => Mode::Slam,
            };
        }
        if let Some(t) = self.tx_index {
            config.options.tx_index = match t {
                TxIndexArg::AsPrinted => TxIndex::AsPrinted,
                TxIndexArg::NewCell => TxIndex::NewCell,
            };
        }
        if self.clamp_charge {
            config.options.clamp_charge = true;
        }
    }

    fn solve_options(&self) -> SolveOptions {
        SolveOptions { node_budget: self.node_budget, workers: self.workers, ..SolveOptions::default() }
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
}

fn load_scenario(path: &Path, global: &Global) -> Result<ScenarioConfig> {
    let mut config = ScenarioConfig::load(&read(path)?).with_context(|| format!("invalid scenario {}", path.display()))?;
    global.apply(&mut config);
    config.validate()?;
    Ok(config)
}

fn stem(path: &Path) -> String {
    path.file_stem().map_or_else(|| "out".to_string(), |s| s.to_string_lossy().into_owned())
}

fn summary(config: &ScenarioConfig, r: &SolveResult) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "status={}", r.status);
    let _ = writeln!(s, "mode={}", config.mode);
    let _ = writeln!(s, "objective={}", r.objective);
    let _ = writeln!(s, "explored={:.2}%", r.explored_fraction * 100.0);
    let _ = writeln!(s, "explored_cells={}/{}", r.trace.final_explored(), config.cell_count());
    let _ = writeln!(s, "completion_epoch={}", r.completion_epoch);
    let _ = writeln!(s, "feasible_epochs={}/{}", r.feasible_epochs, config.horizon_epochs);
    for (i, b) in r.final_batteries_j().iter().enumerate() {
        let _ = writeln!(s, "battery_r{}_j={b:.2}", i + 1);
    }
    s
}

fn cmd_solve(path: &Path, g: &Global) -> Result<ExitCode> {
    let config = load_scenario(path, g)?;
    let result = if g.greedy { solve_greedy(&config)? } else { solve_exact_with(&config, &g.solve_options())? };
    let dir = g.out.clone().unwrap_or_else(|| PathBuf::from("."));
    fs::create_dir_all(&dir).with_context(|| format!("cannot create {}", dir.display()))?;
    let name = stem(path);
    write(&dir.join(format!("{name}.plan")), &result.plan.to_text())?;
    write(&dir.join(format!("{name}.trace.csv")), &result.trace.to_csv())?;
    print!("{}", summary(&config, &result));
    if g.stats {
        print!("{}", result.stats.to_key_values());
    }
    Ok(match result.status {
        SolveStatus::BudgetExceeded => ExitCode::from(2),
        SolveStatus::Optimal | SolveStatus::Heuristic => ExitCode::SUCCESS,
    })
}

fn cmd_sweep(path: &Path, g: &Global) -> Result<ExitCode> {
    let mut spec = SweepSpec::load(path)?;
    g.apply(&mut spec.base);
    if let Some(m) = g.mode {
        let only = match m {
            ModeArg::Oros => Mode::Oros,
            ModeArg::Slam => Mode::Slam,
        };
        spec.modes.retain(|&x| x == only);
        if spec.modes.is_empty() {
            spec.modes.push(only);
        }
    }
    let options = RunOptions { solve: g.solve_options(), greedy: g.greedy, parallel_rows: g.workers };
    let records = run_sweep(&spec, &options)?;
    let csv = records_to_csv(&records);
    match &g.out {
        Some(out) => write(out, &csv)?,
        None => print!("{csv}"),
    }
    if g.stats {
        for r in &records {
            eprint!("# {} {}={}\n{}", r.mode, r.swept_key, r.swept_value, r.stats.to_key_values());
        }
    }
    let degraded = records.iter().any(|r| r.status.starts_with(SolveStatus::BudgetExceeded.name()));
    Ok(if degraded { ExitCode::from(2) } else { ExitCode::SUCCESS })
}

fn cmd_export(path: &Path, g: &Global) -> Result<ExitCode> {
    let config = load_scenario(path, g)?;
    let model = encode(&config)?;
    let out = g.out.clone().unwrap_or_else(|| PathBuf::from(format!("{}.mps", stem(path))));
    write(&out, &write_model(&model))?;
    println!("{}", model.counts_line());
    Ok(ExitCode::SUCCESS)
}

fn cmd_plot(path: &Path, g: &Global) -> Result<ExitCode> {
    let svg = plot_svg(&read(path)?).with_context(|| format!("cannot plot {}", path.display()))?;
    let out = g.out.clone().unwrap_or_else(|| path.with_extension("svg"));
    write(&out, &svg)?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_replay(scenario: &Path, plan_path: &Path, g: &Global) -> Result<ExitCode> {
    let config = load_scenario(scenario, g)?;
    let plan = Plan::parse(&read(plan_path)?).with_context(|| format!("invalid plan {}", plan_path.display()))?;
    let outcome = replay(&plan, &config)?;
    let csv = outcome.trace.to_csv();
    match &g.out {
        Some(out) => write(out, &csv)?,
        None => print!("{csv}"),
    }
    if let Some(v) = outcome.violation {
        bail!("plan violates the model at {v}");
    }
    eprintln!("objective={}", outcome.trace.objective);
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let g = &cli.global;
    let result = match &cli.command {
        Command::Solve { scenario } => cmd_solve(scenario, g),
        Command::Sweep { spec } => cmd_sweep(spec, g),
        Command::Export { scenario } => cmd_export(scenario, g),
        Command::Plot { csv } => cmd_plot(csv, g),
        Command::Replay { scenario, plan } => cmd_replay(scenario, plan, g),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
