use serde::Serialize;

use crate::mining::{MinerPopulation, ScenarioResult};
use crate::party::PerParty;

/// Per-capita difference utility of one run.
///
/// A term whose denominator share is zero is left out and named in
/// `omitted`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct UtilityAggregate {
    pub u_d: Option<f64>,
    pub u_a: Option<f64>,
    pub omitted: Vec<String>,
}

/// `U_A = v_A / beta_adv`, `U_D = (v_H + v_R) / (beta_hon + beta_rat) - U_A`.
pub fn utility_from_payoffs(payoffs: &PerParty<f64>, betas: &PerParty<f64>) -> UtilityAggregate {
    let mut omitted = Vec::new();
    let u_a = if betas.adversary > 0.0 {
        Some(payoffs.adversary / betas.adversary)
    } else {
        omitted.push("beta_adv = 0: U_A undefined".to_string());
        None
    };
    let defenders = betas.honest + betas.rational;
    let u_d = if defenders > 0.0 {
        let d = (payoffs.honest + payoffs.rational) / defenders;
        // With no adversary the difference reduces to the defenders' term.
        Some(d - u_a.unwrap_or(0.0))
    } else {
        omitted.push("beta_hon + beta_rat = 0: U_D undefined".to_string());
        None
    };
    UtilityAggregate { u_d, u_a, omitted }
}

/// Difference utility from a finished run. The adversary's value includes a
/// short position when the overlay is active.
pub fn utility_aggregate(
    result: &ScenarioResult,
    population: &MinerPopulation,
) -> UtilityAggregate {
    let mut v = result.per_party_payoff;
    if let Some(g) = result.goldfinger_value {
        v.adversary = g;
    }
    utility_from_payoffs(&v, &population.betas())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pp(h: f64, r: f64, a: f64) -> PerParty<f64> {
        PerParty {
            honest: h,
            rational: r,
            adversary: a,
        }
    }

    #[test]
    fn equal_per_capita_gives_zero() {
        let u = utility_from_payoffs(&pp(50.0, 30.0, 20.0), &pp(0.5, 0.3, 0.2));
        assert!(u.u_d.unwrap().abs() < 1e-12);
        assert!((u.u_a.unwrap() - 100.0).abs() < 1e-12);
    }

    #[test]
    fn idle_adversary() {
        let u = utility_from_payoffs(&pp(60.0, 40.0, 0.0), &pp(0.6, 0.3, 0.1));
        assert_eq!(u.u_a, Some(0.0));
    }

    #[test]
    fn zero_share_is_flagged() {
        let u = utility_from_payoffs(&pp(100.0, 0.0, 0.0), &pp(1.0, 0.0, 0.0));
        assert_eq!(u.u_a, None);
        assert_eq!(u.u_d, Some(100.0));
        assert_eq!(u.omitted.len(), 1);
    }
}
