//! Extreme singular value estimates by power and inverse iteration.

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::sparse::{CscMatrix, SparseLu};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConditionEstimate {
    pub sigma_max: f64,
    pub sigma_min: f64,
    pub condition: f64,
    /// True when an iteration hit its cap before meeting the tolerance.
    pub approximate: bool,
}

const MAX_ITERATIONS: usize = 300;
const TOLERANCE: f64 = 1e-4;

fn start_vector(n: usize) -> DVector<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let v = DVector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0));
    let norm = v.norm();
    v / norm
}

/// Largest eigenvalue of a symmetric positive operator by power iteration.
fn power_iteration(n: usize, op: impl Fn(&DVector<f64>) -> DVector<f64>) -> (f64, bool) {
    let mut v = start_vector(n);
    let mut lambda = 0.0;
    for _ in 0..MAX_ITERATIONS {
        let w = op(&v);
        let next = v.dot(&w);
        let norm = w.norm();
        if norm == 0.0 || !norm.is_finite() {
            return (next, false);
        }
        v = w / norm;
        if (next - lambda).abs() <= TOLERANCE * next.abs() {
            return (next, true);
        }
        lambda = next;
    }
    (lambda, false)
}

/// Estimates sigma_max / sigma_min of `a` using A^T A and its inverse through an LU factorisation.
pub fn condition_estimate(a: &CscMatrix) -> Result<ConditionEstimate> {
    let n = a.n;
    if n == 0 {
        return Err(Error::Numeric("empty matrix".into()));
    }
    let lu = SparseLu::factor(a).map_err(Error::Numeric)?;
    let (max2, ok1) = power_iteration(n, |v| a.transpose_mul_vec(&a.mul_vec(v)));
    let (inv2, ok2) = power_iteration(n, |v| lu.solve(&lu.solve_transpose(v)));
    let sigma_max = max2.sqrt();
    let sigma_min = 1.0 / inv2.sqrt();
    Ok(ConditionEstimate { sigma_max, sigma_min, condition: sigma_max / sigma_min, approximate: !(ok1 && ok2) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::sparse::TripletBuilder;

    #[test]
    fn identity_is_perfectly_conditioned() {
        let c = condition_estimate(&CscMatrix::identity(7)).unwrap();
        assert!((c.condition - 1.0).abs() < 1e-12);
        assert!(!c.approximate);
    }

    #[test]
    fn tridiagonal_laplacian_matches_analytic_eigenvalues() {
        let n = 4;
        let mut t = TripletBuilder::new(n);
        for i in 0..n {
            t.push(i, i, 2.0);
            if i + 1 < n {
                t.push(i, i + 1, -1.0);
                t.push(i + 1, i, -1.0);
            }
        }
        let c = condition_estimate(&t.build()).unwrap();
        let eig = |j: f64| 2.0 - 2.0 * (j * std::f64::consts::PI / (n as f64 + 1.0)).cos();
        let exact = eig(4.0) / eig(1.0);
        assert!((c.condition - exact).abs() <= 0.1 * exact, "{} vs {exact}", c.condition);
    }
}
