//! Independent oracles and scenario generators shared by the integration
//! tests. Nothing here calls into the code under test for the value it is
//! checking.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector, SymmetricEigen, Vector2, Vector3};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use pcbsp::constraint_eval::Form;
use pcbsp::gaussian_belief::{GaussianBelief, VarKey};
use pcbsp::planners::Algorithm;
use pcbsp::scenario::Scenario;
use pcbsp::sim_world::{Landmark, NoiseSpec, Observation, SensorModel};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// SPD matrix with eigenvalues spread over roughly `[scale * 0.05, scale * 3]`
/// and random coupling between all entries.
pub fn random_spd<R: Rng>(rng: &mut R, n: usize, scale: f64) -> DMatrix<f64> {
    let a = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
    let m = &a * a.transpose() / n as f64 + DMatrix::identity(n, n) * 0.05;
    m * scale
}

/// Block sizes of a subset marginal with `landmarks` landmark blocks.
pub fn slam_blocks(landmarks: usize) -> Vec<usize> {
    let mut b = vec![3];
    b.extend(std::iter::repeat_n(2, landmarks));
    b
}

/// `det(m)^(1/n)` from the product of eigenvalues, accumulated in log space.
pub fn eig_det_root(m: &DMatrix<f64>) -> f64 {
    let n = m.nrows() as f64;
    let eig = SymmetricEigen::new(m.clone());
    (eig.eigenvalues.iter().map(|l| l.ln()).sum::<f64>() / n).exp()
}

/// Sample value-at-risk by its definition: the largest threshold `v` such
/// that at least a `1 - p/q` share of samples is strictly above every
/// threshold below `v`. Integer arithmetic only.
pub fn var_by_enumeration(samples: &[f64], p: u64, q: u64) -> f64 {
    let m = samples.len() as u64;
    let mut best = f64::NEG_INFINITY;
    for &v in samples {
        let at_least = samples.iter().filter(|&&s| s >= v).count() as u64;
        if q * at_least >= (q - p) * m && v > best {
            best = v;
        }
    }
    best
}

/// One linear-Gaussian measurement row block: `J x ~ N(b, cov)`.
pub struct Factor {
    pub cols: Vec<VarKey>,
    pub jac: Vec<DMatrix<f64>>,
    pub b: DVector<f64>,
    pub var: DVector<f64>,
}

/// Weighted least squares over all factors, solved through a QR of the
/// whitened stacked system. Returns the estimate and its covariance in the
/// column order given by `layout` (key, offset, width).
pub fn batch_least_squares(
    factors: &[Factor],
    layout: &[(VarKey, usize, usize)],
    dim: usize,
) -> (DVector<f64>, DMatrix<f64>) {
    let rows: usize = factors.iter().map(|f| f.b.len()).sum();
    let mut a = DMatrix::zeros(rows, dim);
    let mut rhs = DVector::zeros(rows);
    let mut r0 = 0;
    for f in factors {
        let h = f.b.len();
        for (key, j) in f.cols.iter().zip(&f.jac) {
            let &(_, off, w) = layout.iter().find(|(k, _, _)| k == key).expect("layout");
            for i in 0..h {
                let s = 1.0 / f.var[i].sqrt();
                for c in 0..w {
                    a[(r0 + i, off + c)] += s * j[(i, c)];
                }
            }
        }
        for i in 0..h {
            rhs[r0 + i] = f.b[i] / f.var[i].sqrt();
        }
        r0 += h;
    }
    let qr = a.qr();
    let r = qr.r();
    let qtb = qr.q().transpose() * rhs;
    let x = r.solve_upper_triangular(&qtb).expect("full rank");
    let rinv = r.solve_upper_triangular(&DMatrix::identity(dim, dim)).expect("full rank");
    let cov = &rinv * rinv.transpose();
    (x, cov)
}

/// Linear SLAM run: world-frame sensor, straight-line actions and every
/// landmark observed at every step. Returns the filtered belief and the
/// factors it was built from.
pub fn linear_slam_run(seed: u64, steps: usize) -> (GaussianBelief, Vec<Factor>) {
    let mut r = rng(seed);
    let noise = NoiseSpec::default();
    let sensor = SensorModel::WorldFrame;
    let prior_mean = Vector3::new(0.1, -0.2, 0.3);
    let prior_var = Vector3::new(0.002, 0.003, 0.001);
    let landmarks: Vec<Landmark> = (0..4)
        .map(|i| Landmark::new(i + 1, r.random_range(0.0..4.0), r.random_range(0.0..4.0)))
        .collect();
    let mut belief =
        GaussianBelief::prior(&prior_mean, &nalgebra::Matrix3::from_diagonal(&prior_var)).unwrap();
    let mut factors = vec![Factor {
        cols: vec![VarKey::Pose(0)],
        jac: vec![DMatrix::identity(3, 3)],
        b: DVector::from_column_slice(prior_mean.as_slice()),
        var: DVector::from_column_slice(prior_var.as_slice()),
    }];
    let mut truth = prior_mean;
    for t in 1..=steps {
        let heading: f64 = r.random_range(-3.0..3.0);
        let a = Vector2::new(heading.cos(), heading.sin()) * r.random_range(0.1..0.5);
        let t_idx = belief.latest_pose_time() + 1;
        belief = belief.predict(&a, &noise).unwrap();
        let mv = noise.motion_variances(&a);
        truth = Vector3::new(truth[0] + a[0], truth[1] + a[1], a[1].atan2(a[0]));
        let mut jp = DMatrix::zeros(3, 3);
        jp[(0, 0)] = -1.0;
        jp[(1, 1)] = -1.0;
        factors.push(Factor {
            cols: vec![VarKey::Pose(t_idx - 1), VarKey::Pose(t_idx)],
            jac: vec![jp, DMatrix::identity(3, 3)],
            b: DVector::from_vec(vec![a[0], a[1], a[1].atan2(a[0])]),
            var: DVector::from_column_slice(mv.as_slice()),
        });
        let mut entries = Vec::new();
        for l in &landmarks {
            if (t + l.id) % 3 == 0 {
                continue;
            }
            let z = l.position - Vector2::new(truth[0], truth[1])
                + Vector2::new(r.random_range(-0.03..0.03), r.random_range(-0.03..0.03));
            entries.push((l.id, z));
            let mut jp = DMatrix::zeros(2, 3);
            jp[(0, 0)] = -1.0;
            jp[(1, 1)] = -1.0;
            factors.push(Factor {
                cols: vec![VarKey::Pose(t_idx), VarKey::Landmark(l.id)],
                jac: vec![jp, DMatrix::identity(2, 2)],
                b: DVector::from_column_slice(z.as_slice()),
                var: DVector::from_column_slice(noise.obs_cov.as_slice()),
            });
        }
        belief = belief
            .update_mapping(&Observation { entries }, &noise, sensor)
            .unwrap();
    }
    (belief, factors)
}

/// Random scenario in the acceptance family: 4 to 10 landmarks, 5 to 15
/// candidate paths, `m` alternating between 50 and 300.
pub fn random_scenario(index: u64) -> Scenario {
    let mut r = rng(0x5eed_0000 + index);
    let mut s = Scenario::default();
    s.name = format!("random_{index}");
    s.seed = 100 + index;
    s.landmarks.random.count = r.random_range(0..=6);
    s.landmarks.random.region_min = [0.5, 0.5];
    s.landmarks.random.region_max = [4.0, 4.0];
    s.prm.goal = [r.random_range(2.0..4.5), r.random_range(2.0..4.5)];
    s.prm.path_count = r.random_range(5..=15);
    s.map.visibility_radius = [0.8, 1.0, 1.2][r.random_range(0..3)];
    s.planner.m = if index % 2 == 0 { 50 } else { 300 };
    s.planner.epsilon = [0.05, 0.1, 0.25, 0.5][r.random_range(0..4)];
    s.planner.form = if index % 3 == 2 {
        Form::Multiplicative
    } else {
        Form::Cumulative
    };
    s.planner.delta = 0.0;
    s.planner.algorithm = Algorithm::Alg1;
    s
}
