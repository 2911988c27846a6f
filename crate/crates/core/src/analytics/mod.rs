//! Closed-form bounds and payoffs, plus brute-force oracles that check them.
//!
//! Every function here is pure. Most return a small struct rather than a bare
//! number so callers can log intermediate quantities.

mod daa;
mod horizon;
mod oracle;
mod quickfork;
mod smb;
mod txwithhold;
mod utility;

pub use daa::{
    daa_analyze, daa_beta_lower, daa_feasible, daa_tau_pair, daa_timing, Concentration,
    DaaAnalysis, DaaTiming,
};
pub use horizon::{ahp_check, alpha_opt, alpha_th, deflationary_payoff_gap};
pub use oracle::{
    bisect_root, gamblers_ruin_closed_form, gamblers_ruin_monte_carlo, gamblers_ruin_oracle,
};
pub use quickfork::{
    m_min, qf_analyze, qf_deviation_payoff, qf_deviation_payoff_pcmod, qf_eta_bound,
    qf_eta_bound_flat, QfAnalysis, QfParams, QfPayoffInput,
};
pub use smb::{smb_beta_lower, SmbAnalysis};
pub use txwithhold::{tw_discount_closed_form, tw_utilities, TwUtilities};
pub use utility::{utility_aggregate, utility_from_payoffs, UtilityAggregate};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalyticsError {
    #[error("beta_hon = {0} must be below 1/2")]
    DegenerateBetaHon(f64),
    #[error("need at least 2 miners, got {0}")]
    NMinersTooSmall(u64),
    #[error("beta_h and beta_r are both zero")]
    BothZero,
    #[error("truncated tail {tail:e} is not below 1e-12 at horizon {horizon}")]
    TailNotConverged { tail: f64, horizon: u64 },
    #[error("degenerate input: {0}")]
    DegenerateInput(String),
    #[error("input out of range: {0}")]
    OutOfRange(String),
}

pub(crate) fn check_fraction(name: &str, v: f64) -> Result<(), AnalyticsError> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(AnalyticsError::OutOfRange(format!(
            "{name} = {v} is not in [0, 1]"
        )))
    }
}

/// `log_base(x)`.
pub(crate) fn log_base(base: f64, x: f64) -> f64 {
    x.ln() / base.ln()
}
