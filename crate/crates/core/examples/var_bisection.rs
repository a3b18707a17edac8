// Maximizing the value-at-risk by threshold bisection and by brute force.

use std::path::Path;

use pcbsp::experiment::{plan, prepare};
use pcbsp::planners::Algorithm;
use pcbsp::scenario::load_scenario;

fn main() -> pcbsp::Result<()> {
    let file = Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios/desk_scale.toml");
    let scenario = load_scenario(file)?;
    let prepared = prepare(&scenario)?;
    let belief = &prepared.session.belief;

    let (bisect, _) = plan(&scenario, belief, &prepared.paths, Algorithm::Alg3)?;
    let b = bisect.bisection.as_ref().expect("bisection report");
    println!("alg3 range [{:.6e}, {:.6e}], precision {:.1e}", b.delta_min, b.delta_max, b.precision);
    for step in &b.steps {
        println!(
            "  {:>2}: delta {:.9} {} ({} left)",
            step.iteration,
            step.delta,
            if step.feasible { "feasible" } else { "infeasible" },
            step.survivors
        );
    }
    println!(
        "alg3: chose {:?} at delta* {:?}, {:.3} of laces skipped",
        bisect.chosen_path_id,
        bisect.delta_star,
        bisect.laces_fraction()
    );

    let (brute, _) = plan(&scenario, belief, &prepared.paths, Algorithm::Alg4)?;
    for a in &brute.per_action {
        println!("  path {:>2}: VaR {:.9}", a.path_id, a.var.unwrap_or(f64::NAN));
    }
    println!("alg4: chose {:?}", brute.chosen_path_id);
    Ok(())
}
