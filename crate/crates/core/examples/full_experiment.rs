// Writes run directories for the adaptive and baseline planners and
// compares them. Runs go under `$PCBSP_RUNS`, or a temporary directory.

use std::path::{Path, PathBuf};

use pcbsp::experiment::{compare_runs, run_experiment};
use pcbsp::planners::Algorithm;
use pcbsp::scenario::load_scenario;

fn main() -> pcbsp::Result<()> {
    let out: PathBuf = std::env::var_os("PCBSP_RUNS")
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("pcbsp-runs"));
    let file = Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios/desk_scale.toml");
    let mut scenario = load_scenario(file)?;
    scenario.planner.m = 60;

    scenario.planner.algorithm = Algorithm::Alg1;
    let ours = run_experiment(&scenario, &out)?;
    scenario.planner.algorithm = Algorithm::Alg2;
    let baseline = run_experiment(&scenario, &out)?;
    println!("{}\n{}", ours.run_dir.display(), baseline.run_dir.display());

    let c = compare_runs(&ours.run_dir, &baseline.run_dir)?;
    println!(
        "speedup {:+.1}%, laces fraction {:.3}, same choice: {}",
        100.0 * c.speedup,
        c.laces_fraction,
        c.same_choice
    );
    if let Some(err) = ours.results.final_pose_error {
        println!("final position error after executing path {:?}: {err:.3}", ours.results.chosen_path_id);
    }
    Ok(())
}
