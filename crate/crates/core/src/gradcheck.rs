//! Finite-difference gradient checking.
//!
//! Every hand-derived backward pass in this crate is validated against
//! central finite differences through this harness. The scalar function is
//! evaluated on a flattened parameter vector; callers flatten model
//! parameters with [`crate::model::ModelParams::flatten`].

use crate::error::{Error, Result};
use crate::rng::Rng;

/// Central-difference step size.
pub const FD_STEP: f64 = 1e-5;

/// Above this parameter count, a random coordinate subsample is checked
/// instead of every coordinate.
const FULL_CHECK_LIMIT: usize = 64;

/// Number of coordinates sampled for large parameter vectors.
const SAMPLE_SIZE: usize = 64;

/// Compares an analytic gradient against central finite differences.
///
/// Returns the maximum over checked coordinates of
/// `|g_analytic - g_fd| / max(1, |g_analytic|, |g_fd|)`.
///
/// All coordinates are checked when there are at most 64; otherwise a
/// seeded random subsample of 64 distinct coordinates is used. The scalar
/// function must stay finite at every perturbed point.
pub fn grad_check(
    f: &mut dyn FnMut(&[f64]) -> Result<f64>,
    theta: &[f64],
    analytic: &[f64],
    rng: &mut Rng,
) -> Result<f64> {
    if theta.len() != analytic.len() {
        return Err(Error::Shape(format!(
            "gradient length {} does not match parameter length {}",
            analytic.len(),
            theta.len()
        )));
    }
    if theta.is_empty() {
        return Err(Error::Invalid("no parameters to check".into()));
    }

    let coords: Vec<usize> = if theta.len() <= FULL_CHECK_LIMIT {
        (0..theta.len()).collect()
    } else {
        let mut all: Vec<usize> = (0..theta.len()).collect();
        rng.shuffle(&mut all);
        all.truncate(SAMPLE_SIZE);
        all
    };

    let mut perturbed = theta.to_vec();
    let mut worst = 0.0f64;
    for &i in &coords {
        let orig = theta[i];
        perturbed[i] = orig + FD_STEP;
        let up = f(&perturbed)?;
        perturbed[i] = orig - FD_STEP;
        let down = f(&perturbed)?;
        perturbed[i] = orig;
        if !up.is_finite() || !down.is_finite() {
            return Err(Error::Numeric(format!(
                "objective is non-finite at a perturbed point (coordinate {i})"
            )));
        }
        let fd = (up - down) / (2.0 * FD_STEP);
        let ga = analytic[i];
        let err = (ga - fd).abs() / ga.abs().max(fd.abs()).max(1.0);
        if err > worst {
            worst = err;
        }
    }
    Ok(worst)
}
