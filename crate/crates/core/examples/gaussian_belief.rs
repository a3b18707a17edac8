// Filtering a pose-and-landmark belief and bounding its determinant root.

use nalgebra::{Matrix3, Vector2, Vector3};
use pcbsp::gaussian_belief::GaussianBelief;
use pcbsp::sim_world::{NoiseSpec, Observation, SensorModel};

fn main() -> pcbsp::Result<()> {
    let noise = NoiseSpec::default();
    let sensor = SensorModel::RobotFrame;
    let mut belief = GaussianBelief::prior(&Vector3::zeros(), &Matrix3::from_diagonal_element(0.001))?;

    let first = Observation {
        entries: vec![(1, Vector2::new(0.6, 0.3)), (2, Vector2::new(0.4, -0.5)), (3, Vector2::new(0.9, 0.0))],
    };
    belief = belief.update_mapping(&first, &noise, sensor)?;
    for k in 0..3 {
        belief = belief.predict(&Vector2::new(0.3, 0.0), &noise)?;
        let z = 0.6 - 0.3 * (k + 1) as f64;
        let obs = Observation {
            entries: vec![(1, Vector2::new(z, 0.3))],
        };
        belief = belief.update(&obs, &noise, sensor)?;
    }
    println!("state dimension {}, {} poses", belief.dim(), belief.index().num_poses());

    let marginal = belief.subset_marginal()?;
    println!(
        "latest pose + landmarks {:?}: det root {:.6e}, entropy {:.3}",
        marginal.landmark_ids(),
        marginal.det_root(),
        marginal.entropy()
    );
    for level in 0..=marginal.top_level() {
        let b = marginal.det_root_bounds(level)?;
        println!("  level {level}: [{:.6e}, {:.6e}]", b.lower, b.upper);
    }
    Ok(())
}
