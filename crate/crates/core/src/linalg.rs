//! Small dense linear-algebra helpers shared by the belief code.

use std::f64::consts::PI;

use nalgebra::{Cholesky, DMatrix, Dyn};

use crate::error::{PlanError, Result};

/// Cholesky factor of a symmetric positive definite matrix, or a
/// `NotPositiveDefinite` error naming `what`.
pub fn cholesky(m: &DMatrix<f64>, what: &str) -> Result<Cholesky<f64, Dyn>> {
    if m.nrows() != m.ncols() {
        return Err(PlanError::DimensionMismatch {
            expected: m.nrows(),
            actual: m.ncols(),
        });
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(PlanError::NotPositiveDefinite { what: what.into() });
    }
    Cholesky::new(m.clone()).ok_or_else(|| PlanError::NotPositiveDefinite { what: what.into() })
}

/// `ln det` from a Cholesky factor.
pub fn log_det_from_cholesky(chol: &Cholesky<f64, Dyn>) -> f64 {
    let l = chol.l_dirty();
    2.0 * (0..l.nrows()).map(|i| l[(i, i)].ln()).sum::<f64>()
}

pub fn log_det_spd(m: &DMatrix<f64>, what: &str) -> Result<f64> {
    Ok(log_det_from_cholesky(&cholesky(m, what)?))
}

/// Wraps an angle into (-pi, pi].
pub fn wrap_angle(theta: f64) -> f64 {
    let a = (theta + PI).rem_euclid(2.0 * PI) - PI;
    if a <= -PI {
        a + 2.0 * PI
    } else {
        a
    }
}

pub fn symmetrize(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wrap_angle_half_open_interval() {
        assert!((wrap_angle(PI) - PI).abs() < 1e-15);
        assert!((wrap_angle(-PI) - PI).abs() < 1e-15);
        assert!((wrap_angle(3.0 * PI / 2.0) + PI / 2.0).abs() < 1e-12);
        assert_eq!(wrap_angle(0.25), 0.25);
    }

    #[test]
    fn log_det_matches_diagonal() {
        let m = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![2.0, 3.0, 0.5]));
        assert!((log_det_spd(&m, "m").unwrap() - 3.0f64.ln()).abs() < 1e-14);
    }

    #[test]
    fn cholesky_rejects_singular() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        assert!(matches!(
            cholesky(&m, "m"),
            Err(PlanError::NotPositiveDefinite { .. })
        ));
    }
}
