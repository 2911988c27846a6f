use serde::Serialize;

use super::{check_fraction, gamblers_ruin_closed_form, log_base, AnalyticsError};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct QfParams {
    pub n: u64,
    pub beta_hon: f64,
    pub beta_rat: f64,
    pub beta_adv: f64,
    /// Block reward over per-block mining cost.
    pub eta: f64,
    /// Next-phase reward ratio.
    pub vartheta: f64,
    pub rho: u32,
    pub k: u32,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct QfAnalysis {
    pub eta: f64,
    /// Smallest reward/cost ratio at which deviating pays (general form).
    pub eta_bound: f64,
    /// The same bound with `vartheta = 1`.
    pub eta_bound_flat: f64,
    pub phi: f64,
    pub varpi: f64,
    pub k_limit: i64,
    pub m_min: u64,
    pub success_prob: f64,
    /// `(n - 1) / n`.
    pub success_target: f64,
    /// `beta_hon > chi1 / r_block`, reported but not enforced.
    pub cost_condition: bool,
}

fn check_population(
    n: u64,
    beta_hon: f64,
    beta_rat: f64,
    beta_adv: f64,
) -> Result<(), AnalyticsError> {
    if n < 2 {
        return Err(AnalyticsError::NMinersTooSmall(n));
    }
    check_fraction("beta_hon", beta_hon)?;
    check_fraction("beta_rat", beta_rat)?;
    check_fraction("beta_adv", beta_adv)?;
    if !(beta_hon > 0.0 && beta_hon < 0.5) {
        return Err(AnalyticsError::DegenerateBetaHon(beta_hon));
    }
    if beta_rat + beta_adv <= 0.0 {
        return Err(AnalyticsError::DegenerateInput(
            "beta_rat + beta_adv is zero".into(),
        ));
    }
    Ok(())
}

/// Smallest integer extension past the fork point that outpaces the honest
/// chain in expectation: `ceil(k b / (1 - 2b))`.
pub fn m_min(k: u32, beta_hon: f64) -> u64 {
    let x = k as f64 * beta_hon / (1.0 - 2.0 * beta_hon);
    // Absorb rounding so exact integers (3 * 0.4 / 0.2) stay put.
    (x - 1e-9).ceil().max(0.0) as u64
}

/// Reward/cost ratio above which joining the fork beats following,
/// for a general next-phase ratio `vartheta`.
pub fn qf_eta_bound(n: u64, beta_hon: f64, vartheta: f64) -> f64 {
    let nb = n as f64 * beta_hon;
    if nb <= 1.0 {
        return f64::INFINITY;
    }
    let denom = (nb - 1.0) * (1.0 - (2.0 - vartheta) * beta_hon);
    if denom <= 0.0 {
        return f64::INFINITY;
    }
    (1.0 - beta_hon) * (n as f64 - nb - 1.0) / denom
}

/// `(n - b n - 1) / (n b - 1)`: the general bound with a flat reward (`vartheta = 1`).
pub fn qf_eta_bound_flat(n: u64, beta_hon: f64) -> f64 {
    let nb = n as f64 * beta_hon;
    if nb <= 1.0 {
        return f64::INFINITY;
    }
    (n as f64 - nb - 1.0) / (nb - 1.0)
}

pub fn qf_analyze(p: &QfParams) -> Result<QfAnalysis, AnalyticsError> {
    check_population(p.n, p.beta_hon, p.beta_rat, p.beta_adv)?;
    let phi = p.beta_hon / (p.beta_rat + p.beta_adv);
    let n = p.n as f64;
    let varpi = log_base(phi, (1.0 + (n - 1.0) * phi.powi(p.rho as i32)) / n);
    let success_prob = if p.k > p.rho {
        0.0
    } else {
        gamblers_ruin_closed_form(phi, p.rho, p.k)
    };
    Ok(QfAnalysis {
        eta: p.eta,
        eta_bound: qf_eta_bound(p.n, p.beta_hon, p.vartheta),
        eta_bound_flat: qf_eta_bound_flat(p.n, p.beta_hon),
        phi,
        varpi,
        k_limit: (p.rho as f64 - varpi).floor() as i64,
        m_min: m_min(p.k, p.beta_hon),
        success_prob,
        success_target: (n - 1.0) / n,
        cost_condition: p.beta_hon * p.eta > 1.0,
    })
}

/// Inputs for the join-or-follow comparison of one party.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct QfPayoffInput {
    pub n: u64,
    pub beta_hon: f64,
    pub beta_rat: f64,
    pub beta_adv: f64,
    /// Share of the party doing the comparison.
    pub beta_par: f64,
    pub r_block: f64,
    pub chi1: f64,
    pub vartheta: f64,
    pub k: u32,
    pub m: u64,
}

/// `(v_deviate, v_follow)` for a party of share `beta_par`.
pub fn qf_deviation_payoff(x: &QfPayoffInput) -> Result<(f64, f64), AnalyticsError> {
    let (reward, cost) = payoff_terms(x)?;
    let n = x.n as f64;
    let v_dev = (n - 1.0) / n * (x.beta_par / (x.beta_rat + x.beta_adv)) * (reward - cost)
        - x.k as f64 * x.beta_par * x.chi1;
    let v_follow = x.beta_par * (reward - cost);
    Ok((v_dev, v_follow))
}

/// Join-or-follow comparison when honest miners run the proof-of-invalidity
/// defence.
///
/// Honest miners move onto the fork to plant their commitment, so a joining
/// party earns only its own share `beta_par` of the fork's blocks. With
/// probability `p_poi` the fork is later proven to be an attack and its coins
/// are worth `e_security`.
pub fn qf_deviation_payoff_pcmod(
    x: &QfPayoffInput,
    p_poi: f64,
    e_security: f64,
) -> Result<(f64, f64), AnalyticsError> {
    check_fraction("p_poi", p_poi)?;
    check_fraction("e_security", e_security)?;
    let (reward, cost) = payoff_terms(x)?;
    let n = x.n as f64;
    let theta_eff = 1.0 - p_poi * (1.0 - e_security);
    let v_dev =
        (n - 1.0) / n * x.beta_par * (theta_eff * reward - cost) - x.k as f64 * x.beta_par * x.chi1;
    let v_follow = x.beta_par * (reward - cost);
    Ok((v_dev, v_follow))
}

fn payoff_terms(x: &QfPayoffInput) -> Result<(f64, f64), AnalyticsError> {
    check_population(x.n, x.beta_hon, x.beta_rat, x.beta_adv)?;
    check_fraction("beta_par", x.beta_par)?;
    let need = m_min(x.k, x.beta_hon);
    if x.m < need {
        return Err(AnalyticsError::OutOfRange(format!(
            "m = {} is below m_min = {need}",
            x.m
        )));
    }
    let (k, m) = (x.k as f64, x.m as f64);
    Ok((x.r_block * (k + m * x.vartheta), x.chi1 * (k + m)))
}
