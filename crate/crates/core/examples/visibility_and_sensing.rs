// Radius visibility, noisy motion and relative-position measurements.

use nalgebra::Vector2;
use pcbsp::sim_world::{
    landmarks_from_positions, sample_motion, sample_observation, stream_rng, visible_config, NoiseSpec, Pose,
    SensorModel,
};

fn main() -> pcbsp::Result<()> {
    let landmarks = landmarks_from_positions(&[[1.0, 0.2], [0.5, 1.5], [3.0, 3.0]]);
    let noise = NoiseSpec::default();
    let mut rng = stream_rng(7, 0, 0);
    let mut pose = Pose::new(0.0, 0.0, 0.0);

    for step in 0..4 {
        let action = Vector2::new(0.5, 0.25);
        pose = sample_motion(&pose, &action, &noise, &mut rng);
        let config = visible_config(&pose, &landmarks, 1.0);
        let obs = sample_observation(&pose, &landmarks, &config, &noise, SensorModel::RobotFrame, &mut rng)?;
        println!(
            "step {step}: pose ({:.3}, {:.3}, {:.3}) sees {} landmark(s)",
            pose.x,
            pose.y,
            pose.theta,
            config.count()
        );
        for (id, z) in &obs.entries {
            println!("  landmark {id}: z = ({:.3}, {:.3})", z[0], z[1]);
        }
    }
    Ok(())
}
