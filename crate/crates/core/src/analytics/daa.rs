use serde::Serialize;

use super::{check_fraction, AnalyticsError};

/// Smallest adversarial share for which the optimal two-epoch timestamp
/// attack wins: the lower root of `b^2 - (3 + tau) b + (1 + tau) = 0`.
pub fn daa_beta_lower(tau_min: f64) -> f64 {
    let s = 3.0 + tau_min;
    (s - (s * s - 4.0 * (tau_min + 1.0)).sqrt()) / 2.0
}

/// Retarget factors seen by the private fork and by the honest chain.
pub fn daa_tau_pair(r1: f64, alpha: f64, beta_a: f64, tau_min: f64) -> (f64, f64) {
    let tau_adv = (1.0 / (r1 + alpha * (1.0 - r1) / beta_a)).max(tau_min);
    let tau_hon = (1.0 / (r1 + (1.0 - r1) / (1.0 - beta_a))).max(tau_min);
    (tau_adv, tau_hon)
}

/// Both sides of the race, in epochs of nominal length.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DaaTiming {
    /// Time the honest chain needs for the rest of epoch i plus r2 of epoch i+1.
    pub honest: f64,
    /// Time the private fork needs for the same stretch.
    pub adversary: f64,
}

pub fn daa_timing(beta_a: f64, tau_min: f64, r1: f64, r2: f64, alpha: f64) -> DaaTiming {
    let (tau_adv, tau_hon) = daa_tau_pair(r1, alpha, beta_a, tau_min);
    DaaTiming {
        honest: tau_hon * r2 / (1.0 - beta_a) + (1.0 - r1) / (1.0 - beta_a),
        adversary: (1.0 - r1) / beta_a + r2 * tau_adv / beta_a,
    }
}

/// Strict race condition: the fork finishes first.
///
/// A relative slack of 1e-12 keeps the exact boundary (where both sides agree
/// up to rounding) on the infeasible side.
pub fn daa_feasible(beta_a: f64, tau_min: f64, r1: f64, r2: f64, alpha: f64) -> bool {
    let t = daa_timing(beta_a, tau_min, r1, r2, alpha);
    t.honest - t.adversary > 1e-12 * t.honest.abs().max(1.0)
}

/// Chernoff-style concentration summary for the race.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Concentration {
    /// Expected rounds per block at full participation (`interval * n * q`).
    pub theta: f64,
    pub epsilon: f64,
    /// `exp(-theta * epsilon^2 / 3)`.
    pub tail_bound: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DaaAnalysis {
    pub beta_lower: f64,
    pub tau_adv: f64,
    pub tau_hon: f64,
    pub timing: DaaTiming,
    pub feasible: bool,
    pub concentration: Concentration,
}

#[allow(clippy::too_many_arguments)]
pub fn daa_analyze(
    beta_a: f64,
    tau_min: f64,
    r1: f64,
    r2: f64,
    alpha: f64,
    theta: f64,
    epsilon: f64,
) -> Result<DaaAnalysis, AnalyticsError> {
    check_fraction("beta_adv", beta_a)?;
    check_fraction("r1", r1)?;
    check_fraction("r2", r2)?;
    if !(tau_min > 0.0) {
        return Err(AnalyticsError::OutOfRange(format!(
            "tau_min = {tau_min} must be positive"
        )));
    }
    if !(alpha > 0.0) {
        return Err(AnalyticsError::OutOfRange(format!(
            "alpha = {alpha} must be positive"
        )));
    }
    let (tau_adv, tau_hon) = daa_tau_pair(r1, alpha, beta_a, tau_min);
    Ok(DaaAnalysis {
        beta_lower: daa_beta_lower(tau_min),
        tau_adv,
        tau_hon,
        timing: daa_timing(beta_a, tau_min, r1, r2, alpha),
        feasible: daa_feasible(beta_a, tau_min, r1, r2, alpha),
        concentration: Concentration {
            theta,
            epsilon,
            tail_bound: (-theta * epsilon * epsilon / 3.0).exp(),
        },
    })
}
