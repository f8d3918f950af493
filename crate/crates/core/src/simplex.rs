//! Symmetric Dirichlet draws on the probability simplex.

use rand::Rng;
use rand_distr::{Distribution, Gamma};

use crate::error::{Error, Result};

/// One draw from `Dirichlet(alpha, ..., alpha)` over `n` components,
/// obtained by normalizing independent `Gamma(alpha, 1)` variates.
pub fn symmetric_dirichlet<R: Rng + ?Sized>(rng: &mut R, n: usize, alpha: f64) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(Error::InvalidArgument("simplex needs at least one component".into()));
    }
    let gamma = Gamma::new(alpha, 1.0)
        .map_err(|e| Error::InvalidArgument(format!("alpha {alpha}: {e}")))?;
    if n == 1 {
        return Ok(vec![1.0]);
    }
    let mut draw: Vec<f64> = (0..n).map(|_| gamma.sample(rng)).collect();
    let sum: f64 = draw.iter().sum();
    if sum > 0.0 && sum.is_finite() {
        draw.iter_mut().for_each(|v| *v /= sum);
    } else {
        // Every variate underflowed (tiny alpha): the limit is a random vertex.
        let vertex = rng.random_range(0..n);
        draw = (0..n).map(|i| if i == vertex { 1.0 } else { 0.0 }).collect();
    }
    Ok(draw)
}
