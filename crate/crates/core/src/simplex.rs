//! Euclidean projection onto the probability simplex and the regularized
//! proximal step used by every player update.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Tolerance on the coordinate sum for a vector to count as already feasible.
const FEASIBLE_SUM_TOL: f64 = 1e-12;

/// A probability vector: nonnegative entries summing to one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SimplexVector(Vec<f64>);

impl SimplexVector {
    /// Wraps `values` after checking they are a probability vector within `1e-9`.
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::DimMismatch {
                expected: 1,
                got: 0,
            });
        }
        if !is_on_simplex(&values, 1e-9) {
            return Err(Error::InvalidGame(format!(
                "vector {values:?} is not a probability vector"
            )));
        }
        Ok(Self(values))
    }

    pub fn uniform(dim: usize) -> Self {
        Self(vec![1.0 / dim as f64; dim])
    }

    /// The pure strategy concentrated on `action`.
    pub fn vertex(dim: usize, action: usize) -> Self {
        let mut v = vec![0.0; dim];
        v[action] = 1.0;
        Self(v)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }
}

impl AsRef<[f64]> for SimplexVector {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

/// True when every entry is `>= -tol` and the entries sum to one within `tol`.
pub fn is_on_simplex(v: &[f64], tol: f64) -> bool {
    !v.is_empty()
        && v.iter().all(|x| x.is_finite() && *x >= -tol)
        && (v.iter().sum::<f64>() - 1.0).abs() <= tol
}

fn clamp_tiny(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        x
    }
}

/// `argmin_{x in simplex} ||x - v||^2` via the sort-and-threshold method.
///
/// Feasible inputs come back unchanged (up to clamping of negative zeros), which
/// makes the projection idempotent bit for bit.
pub fn project_simplex(v: &[f64]) -> Result<SimplexVector> {
    if v.is_empty() {
        return Err(Error::DimMismatch {
            expected: 1,
            got: 0,
        });
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFiniteInput);
    }
    if v.iter().all(|x| *x >= 0.0) && (v.iter().sum::<f64>() - 1.0).abs() <= FEASIBLE_SUM_TOL {
        return Ok(SimplexVector(v.iter().copied().map(clamp_tiny).collect()));
    }

    let mut sorted = v.to_vec();
    sorted.sort_unstable_by(|a, b| b.total_cmp(a));
    let mut cumulative = 0.0;
    let mut theta = 0.0;
    for (k, &u) in sorted.iter().enumerate() {
        cumulative += u;
        let candidate = (cumulative - 1.0) / (k + 1) as f64;
        if u - candidate > 0.0 {
            theta = candidate;
        } else {
            break;
        }
    }
    Ok(SimplexVector(
        v.iter().map(|x| clamp_tiny(x - theta)).collect(),
    ))
}

/// One regularized proximal update: `Proj[(pi_bar - eta * g) / (1 + eta * tau)]`.
pub fn proximal_step(pi_bar: &[f64], g: &[f64], eta: f64, tau: f64) -> Result<SimplexVector> {
    if pi_bar.len() != g.len() {
        return Err(Error::DimMismatch {
            expected: pi_bar.len(),
            got: g.len(),
        });
    }
    if eta <= 0.0 || !eta.is_finite() {
        return Err(Error::NonPositiveEta(eta));
    }
    if tau < 0.0 || !tau.is_finite() {
        return Err(Error::InvalidConfig(format!(
            "regularization must be finite and nonnegative, got {tau}"
        )));
    }
    let scale = 1.0 + eta * tau;
    let point: Vec<f64> = pi_bar
        .iter()
        .zip(g)
        .map(|(p, gi)| (p - eta * gi) / scale)
        .collect();
    project_simplex(&point)
}

pub fn l2_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Brute-force minimizer of ||x - v||^2 over a grid on the 2-simplex.
    fn grid_projection_2d(v: &[f64; 2]) -> [f64; 2] {
        let steps = 100_000;
        let mut best = [0.0, 1.0];
        let mut best_d = f64::INFINITY;
        for k in 0..=steps {
            let x0 = k as f64 / steps as f64;
            let x = [x0, 1.0 - x0];
            let d = (x[0] - v[0]).powi(2) + (x[1] - v[1]).powi(2);
            if d < best_d {
                best_d = d;
                best = x;
            }
        }
        best
    }

    #[test]
    fn feasible_input_is_returned() {
        let p = project_simplex(&[0.3, 0.3, 0.4]).unwrap();
        assert_eq!(p.as_slice(), &[0.3, 0.3, 0.4]);
    }

    #[test]
    fn zero_vector_goes_to_uniform() {
        let p = project_simplex(&[0.0, 0.0]).unwrap();
        assert_eq!(p.as_slice(), &[0.5, 0.5]);
    }

    #[test]
    fn outside_point_matches_grid_oracle() {
        let oracle = grid_projection_2d(&[1.2, -0.2]);
        assert!((oracle[0] - 1.0).abs() < 1e-9 && oracle[1].abs() < 1e-9);
        let p = project_simplex(&[1.2, -0.2]).unwrap();
        assert_eq!(p.as_slice(), &[1.0, 0.0]);
    }

    #[test]
    fn rejects_non_finite() {
        assert_eq!(
            project_simplex(&[f64::NAN, 0.0]).unwrap_err(),
            Error::NonFiniteInput
        );
        assert_eq!(
            project_simplex(&[f64::INFINITY]).unwrap_err(),
            Error::NonFiniteInput
        );
    }

    #[test]
    fn proximal_fixed_point_and_plain_step() {
        let p = proximal_step(&[0.5, 0.5], &[0.0, 0.0], 0.3, 0.0).unwrap();
        assert_eq!(p.as_slice(), &[0.5, 0.5]);

        let p = proximal_step(&[0.5, 0.5], &[1.0, -1.0], 0.1, 0.0).unwrap();
        let oracle = grid_projection_2d(&[0.4, 0.6]);
        assert!((p.as_slice()[0] - 0.4).abs() < 1e-12);
        assert!((p.as_slice()[1] - 0.6).abs() < 1e-12);
        assert!((oracle[0] - 0.4).abs() < 1e-9);

        let p = proximal_step(&[0.5, 0.5], &[0.0, 0.0], 1.0, 1.0).unwrap();
        assert_eq!(p.as_slice(), &[0.5, 0.5]);
    }

    #[test]
    fn proximal_errors() {
        assert!(matches!(
            proximal_step(&[0.5, 0.5], &[0.0], 0.1, 0.0),
            Err(Error::DimMismatch { .. })
        ));
        assert_eq!(
            proximal_step(&[0.5, 0.5], &[0.0, 0.0], 0.0, 0.0).unwrap_err(),
            Error::NonPositiveEta(0.0)
        );
        assert!(proximal_step(&[1.0], &[0.0], -1.0, 0.0).is_err());
    }

    #[test]
    fn single_coordinate_always_one() {
        assert_eq!(project_simplex(&[-7.0]).unwrap().as_slice(), &[1.0]);
        assert_eq!(project_simplex(&[42.0]).unwrap().as_slice(), &[1.0]);
    }
}
