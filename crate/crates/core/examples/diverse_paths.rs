// Probabilistic roadmap and a set of diverse start-to-goal paths.

use nalgebra::Vector2;
use pcbsp::path_gen::{build_prm, diverse_paths, Bounds, PrmParams, GOAL, START};

fn main() -> pcbsp::Result<()> {
    let map = build_prm(
        &Bounds::default(),
        &PrmParams::default(),
        3,
        Vector2::new(0.2, 0.2),
        Vector2::new(4.5, 4.5),
    )?;
    println!("roadmap: {} vertices, {} edges", map.vertices.len(), map.edges.len());
    for p in diverse_paths(&map, START, GOAL, 8)? {
        println!(
            "path {:>2}: {} actions, length {:.2}, vertices {:?}",
            p.id,
            p.horizon(),
            p.length(),
            p.vertex_seq
        );
    }
    Ok(())
}
