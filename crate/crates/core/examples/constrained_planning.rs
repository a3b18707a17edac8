// Adaptive constrained planner against the full-expansion baseline.

use std::path::Path;

use pcbsp::experiment::{plan, prepare};
use pcbsp::planners::Algorithm;
use pcbsp::scenario::load_scenario;

fn main() -> pcbsp::Result<()> {
    let file = Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios/desk_scale.toml");
    let scenario = load_scenario(file)?;
    let prepared = prepare(&scenario)?;
    let belief = &prepared.session.belief;
    for algorithm in [Algorithm::Alg1, Algorithm::Alg2] {
        let (r, _) = plan(&scenario, belief, &prepared.paths, algorithm)?;
        println!(
            "{algorithm}: chose {:?}, feasible {:?}, laces {}/{} ({:.3} skipped), {:.3} s",
            r.chosen_path_id,
            r.feasible_set(),
            r.n_expanded,
            r.n_total,
            r.laces_fraction(),
            r.runtime_s
        );
    }
    Ok(())
}
