// Sampled belief tree of one candidate path and its lace bounds.

use std::path::Path;

use pcbsp::belief_tree::{BeliefTree, LaceSource};
use pcbsp::experiment::{prepare, tree_config};
use pcbsp::scenario::load_scenario;

fn main() -> pcbsp::Result<()> {
    let file = Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios/desk_scale.toml");
    let mut scenario = load_scenario(file)?;
    scenario.planner.m = 12;
    let prepared = prepare(&scenario)?;
    let path = &prepared.paths[0];
    let mut tree = BeliefTree::new(&prepared.session.belief, path, tree_config(&scenario))?;
    println!("path {} with horizon {}, exact level {}", path.id, tree.horizon(), tree.top_level());

    for _ in 0..4 {
        tree.expand_next()?;
    }
    for level in 0..=tree.top_level() {
        tree.refine(0, level)?;
        let (lo, up) = tree.laces()[0].s_bounds();
        println!("lace 1 at level {level}: return in [{lo:.6}, {up:.6}]");
    }
    tree.complete()?;
    let returns: Vec<f64> = (0..tree.budget())
        .map(|l| tree.exact_steps(l).map(|s| s.iter().sum()))
        .collect::<pcbsp::Result<_>>()?;
    println!("{} laces over {} nodes, returns {:.5?}", tree.budget(), tree.node_count(), returns);
    Ok(())
}
