use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use log::error;

use pcbsp::constraint_eval::Form;
use pcbsp::experiment::{compare_runs, run_experiment};
use pcbsp::planners::Algorithm;
use pcbsp::scenario::{load_scenario, Scenario};

/// Plan an information-gathering path under a chance constraint and write
/// a run directory, or compare two finished runs.
#[derive(Debug, Parser)]
#[command(version)]
struct Cli {
    /// Scenario TOML; defaults apply when omitted.
    #[arg(long)]
    scenario: Option<PathBuf>,
    #[arg(long, value_parser = parse_algorithm)]
    algorithm: Option<Algorithm>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    delta: Option<f64>,
    /// Laces per candidate path.
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_parser = parse_form)]
    form: Option<Form>,
    /// Bisection precision relative to the largest threshold.
    #[arg(long)]
    precision: Option<f64>,
    /// Directory under which the run directory is created.
    #[arg(long, default_value = "runs")]
    out: PathBuf,
    /// Planning repeats for timing.
    #[arg(long)]
    repeats: Option<usize>,
    /// Compare two run directories (ours, baseline) instead of running.
    #[arg(long, num_args = 2, value_names = ["RUN_A", "RUN_B"])]
    compare: Option<Vec<PathBuf>>,
}

fn parse_algorithm(s: &str) -> Result<Algorithm, String> {
    s.parse().map_err(|e: pcbsp::PlanError| e.to_string())
}

fn parse_form(s: &str) -> Result<Form, String> {
    s.parse().map_err(|e: pcbsp::PlanError| e.to_string())
}

fn apply_overrides(cli: &Cli, s: &mut Scenario) {
    let p = &mut s.planner;
    if let Some(a) = cli.algorithm {
        p.algorithm = a;
    }
    if let Some(v) = cli.epsilon {
        p.epsilon = v;
    }
    if let Some(v) = cli.delta {
        p.delta = v;
    }
    if let Some(v) = cli.m {
        p.m = v;
    }
    if let Some(v) = cli.form {
        p.form = v;
    }
    if let Some(v) = cli.precision {
        p.precision = v;
    }
    if let Some(v) = cli.repeats {
        p.repeats = v;
    }
    if let Some(v) = cli.seed {
        s.seed = v;
    }
}

fn run(cli: &Cli) -> pcbsp::Result<u8> {
    if let Some(dirs) = &cli.compare {
        let c = compare_runs(&dirs[0], &dirs[1])?;
        println!("{}", serde_json::to_string_pretty(&c)?);
        return Ok(0);
    }
    let mut scenario = match &cli.scenario {
        Some(p) => load_scenario(p)?,
        None => Scenario::default(),
    };
    apply_overrides(cli, &mut scenario);
    let out = run_experiment(&scenario, &cli.out)?;
    let r = &out.results;
    println!("run directory: {}", out.run_dir.display());
    match r.chosen_path_id {
        Some(id) => println!("chosen path: {id}"),
        None => println!("chosen path: none (all candidates discarded)"),
    }
    if let Some(d) = r.delta_star {
        println!("delta*: {d:.9}");
    }
    println!(
        "laces expanded: {} of {} (fraction skipped {:.3})",
        r.n_expanded, r.n_total, r.laces_fraction
    );
    println!("mean planning time: {:.3} s", out.metrics.runtime_mean_s);
    Ok(out.exit_code as u8)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            error!("{e}");
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
