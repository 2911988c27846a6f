//! Phase-count horizons for attacks on deflationary reward schemes.

use super::AnalyticsError;

fn open_unit(name: &str, v: f64) -> Result<(), AnalyticsError> {
    if v > 0.0 && v < 1.0 {
        Ok(())
    } else {
        Err(AnalyticsError::DegenerateInput(format!(
            "{name} = {v} must lie strictly inside (0, 1)"
        )))
    }
}

/// Smallest `a >= 1` with `vartheta^a < target <= vartheta^(a-1)`.
///
/// Starts from the logarithmic formula, then nudges by one until the
/// defining inequality holds in floating point too.
fn floor_horizon(target: f64, vartheta: f64) -> u64 {
    let mut a = 1 + (target.ln() / vartheta.ln()).floor().max(0.0) as u64;
    let pow = |e: u64| vartheta.powi(e as i32);
    while pow(a) >= target {
        a += 1;
    }
    while a > 1 && pow(a - 1) < target {
        a -= 1;
    }
    a
}

/// `1 + floor(log(1 - p_fr) / log(vartheta))`.
pub fn alpha_th(p_fr: f64, vartheta: f64) -> Result<u64, AnalyticsError> {
    open_unit("p_fr", p_fr)?;
    open_unit("vartheta", vartheta)?;
    Ok(floor_horizon(1.0 - p_fr, vartheta))
}

/// `1 + floor(log(delta / (p_fr + delta)) / log(vartheta))`.
pub fn alpha_opt(p_fr: f64, delta_adv: f64, vartheta: f64) -> Result<u64, AnalyticsError> {
    open_unit("vartheta", vartheta)?;
    if !(0.0..1.0).contains(&p_fr) {
        return Err(AnalyticsError::DegenerateInput(format!(
            "p_fr = {p_fr} must lie in [0, 1)"
        )));
    }
    if !(delta_adv > 0.0 && delta_adv.is_finite()) {
        return Err(AnalyticsError::DegenerateInput(format!(
            "delta = {delta_adv} must be positive"
        )));
    }
    Ok(floor_horizon(delta_adv / (p_fr + delta_adv), vartheta))
}

/// Worst-case payoff difference between attacking after `alpha_2` phases and
/// front-running, for an unbounded attack length.
#[allow(clippy::too_many_arguments)]
pub fn deflationary_payoff_gap(
    p_fr: f64,
    delta_adv: f64,
    vartheta: f64,
    capital_lambda: f64,
    r_block: f64,
    theta: f64,
    alpha_2: u64,
) -> f64 {
    let va = vartheta.powi(alpha_2 as i32);
    let geo = 1.0 / (1.0 - vartheta);
    capital_lambda * theta * r_block * ((1.0 - va) * geo * delta_adv - va * p_fr * geo)
}

/// All-honest participation pays: `theta * r_block * p_h > chi`.
pub fn ahp_check(theta: f64, r_block: f64, p_h: f64, chi: f64) -> bool {
    theta * r_block * p_h > chi
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn alpha_th_examples() {
        assert_eq!(alpha_th(0.5, 0.5).unwrap(), 2);
        assert_eq!(alpha_th(0.75, 0.5).unwrap(), 3);
        assert_eq!(alpha_th(0.1, 0.9).unwrap(), 2);
        assert!(alpha_th(0.0, 0.5).is_err());
        assert!(alpha_th(0.5, 1.0).is_err());
    }

    #[test]
    fn alpha_opt_examples() {
        assert_eq!(alpha_opt(0.3, 0.3, 0.5).unwrap(), 2);
        assert_eq!(alpha_opt(0.3, 1e9, 0.5).unwrap(), 1);
        assert_eq!(alpha_opt(0.3, 0.1, 0.5).unwrap(), 3);
        assert!(alpha_opt(0.3, 0.0, 0.5).is_err());
    }

    #[test]
    fn alpha_th_monotone_in_p() {
        for v in [0.3, 0.5, 0.7, 0.9, 0.99] {
            let mut prev = 0;
            for i in 1..100 {
                let a = alpha_th(i as f64 / 100.0, v).unwrap();
                assert!(a >= prev);
                prev = a;
            }
        }
    }

    #[test]
    fn gap_sign_examples() {
        let a = alpha_opt(0.3, 0.1, 0.5).unwrap();
        assert!(deflationary_payoff_gap(0.3, 0.1, 0.5, 10.0, 50.0, 1.0, a) >= 0.0);
        // 0.5^2 equals the target exactly here, so the gap one phase earlier is zero;
        // a slightly smaller advantage makes it strictly negative.
        let a = alpha_opt(0.3, 0.09, 0.5).unwrap();
        assert!(deflationary_payoff_gap(0.3, 0.09, 0.5, 10.0, 50.0, 1.0, a - 1) < 0.0);
        for a2 in 1..60 {
            assert!(deflationary_payoff_gap(0.3, 0.0, 0.5, 10.0, 50.0, 1.0, a2) < 0.0);
        }
    }

    #[test]
    fn ahp_examples() {
        assert!(ahp_check(1.0, 50.0, 0.01, 0.0));
        assert!(!ahp_check(1e-3, 50.0, 0.01, 0.01));
        assert!(!ahp_check(1.0, 1.0, 0.5, 0.5));
    }
}
