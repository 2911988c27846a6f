use rand::Rng;
use rand_distr::{Binomial, Distribution};

use super::SimError;

/// Number of successful queries out of `queries`, each succeeding with
/// probability `base_rate / difficulty`.
pub fn attempt_mine<R: Rng + ?Sized>(
    rng: &mut R,
    difficulty: f64,
    queries: u64,
    base_rate: f64,
) -> Result<u64, SimError> {
    let p = base_rate / difficulty;
    if !(0.0..=1.0).contains(&p) {
        return Err(SimError::ProbabilityOutOfRange(p));
    }
    if queries == 0 || p == 0.0 {
        return Ok(0);
    }
    if p == 1.0 {
        return Ok(queries);
    }
    let b = Binomial::new(queries, p).map_err(|_| SimError::ProbabilityOutOfRange(p))?;
    Ok(b.sample(rng))
}
