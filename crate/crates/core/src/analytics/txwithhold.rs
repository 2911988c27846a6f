use serde::Serialize;

use super::{check_fraction, AnalyticsError};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TwUtilities {
    pub u_follow: f64,
    pub u_withhold: f64,
    /// `sum_{t=1}^{H} delta^t p (1-p)^{n t}`.
    pub discount_sum: f64,
    /// Mass beyond the horizon.
    pub tail: f64,
}

/// Infinite-horizon value of `sum_{t>=1} delta^t p (1-p)^{n t}`.
pub fn tw_discount_closed_form(delta: f64, p_su: f64, n: u64) -> f64 {
    let x = delta * (1.0 - p_su).powi(n as i32);
    p_su * x / (1.0 - x)
}

/// Utilities of gossiping every heard fee versus keeping one's own.
pub fn tw_utilities(
    fees: &[f64],
    own_index: usize,
    delta: f64,
    p_su: f64,
    n: u64,
    horizon: u64,
) -> Result<TwUtilities, AnalyticsError> {
    if own_index >= fees.len() {
        return Err(AnalyticsError::OutOfRange(format!(
            "own_index {own_index} outside {} fees",
            fees.len()
        )));
    }
    if !(0.0..1.0).contains(&delta) {
        return Err(AnalyticsError::OutOfRange(format!(
            "delta = {delta} is not in [0, 1)"
        )));
    }
    check_fraction("p_su", p_su)?;
    if p_su == 0.0 {
        return Err(AnalyticsError::DegenerateInput("p_su is zero".into()));
    }
    if fees.iter().any(|f| !(*f >= 0.0)) {
        return Err(AnalyticsError::OutOfRange(
            "fees must be non-negative".into(),
        ));
    }
    let x = delta * (1.0 - p_su).powi(n as i32);
    let mut term = 1.0;
    let mut discount_sum = 0.0;
    for _ in 0..horizon {
        term *= x;
        discount_sum += p_su * term;
        if term == 0.0 {
            break;
        }
    }
    // Geometric remainder after `horizon` terms.
    let tail = if x == 0.0 {
        0.0
    } else {
        p_su * x.powf(horizon as f64 + 1.0) / (1.0 - x)
    };
    if tail >= 1e-12 {
        return Err(AnalyticsError::TailNotConverged { tail, horizon });
    }
    let total: f64 = fees.iter().sum();
    let others = total - fees[own_index];
    Ok(TwUtilities {
        u_follow: total * discount_sum,
        u_withhold: others * discount_sum + fees[own_index] / p_su,
        discount_sum,
        tail,
    })
}
