use serde::Serialize;

use super::{check_fraction, AnalyticsError};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SmbAnalysis {
    /// Share of non-adversarial power that extends the adversarial block in a tie.
    pub gamma: f64,
    /// `beta_h / (2 beta_r + 4 beta_h)`.
    pub beta_lower: f64,
    /// `(1 - gamma) / (3 - 2 gamma)`; equal to `beta_lower`.
    pub selfish_threshold: f64,
    /// `(1 - gamma) / (3 - gamma)`, the alternative denominator, for comparison only.
    pub alt_denominator_threshold: f64,
}

/// Adversarial share above which selfish mining with bribes beats honest mining.
pub fn smb_beta_lower(beta_h: f64, beta_r: f64) -> Result<SmbAnalysis, AnalyticsError> {
    check_fraction("beta_h", beta_h)?;
    check_fraction("beta_r", beta_r)?;
    if beta_h + beta_r > 1.0 + 1e-12 {
        return Err(AnalyticsError::OutOfRange(format!(
            "beta_h + beta_r = {} exceeds 1",
            beta_h + beta_r
        )));
    }
    if beta_h == 0.0 && beta_r == 0.0 {
        return Err(AnalyticsError::BothZero);
    }
    let gamma = (beta_h / 2.0 + beta_r) / (beta_h + beta_r);
    let beta_lower = beta_h / (2.0 * beta_r + 4.0 * beta_h);
    let selfish_threshold = (1.0 - gamma) / (3.0 - 2.0 * gamma);
    debug_assert!((beta_lower - selfish_threshold).abs() < 1e-12);
    Ok(SmbAnalysis {
        gamma,
        beta_lower,
        selfish_threshold,
        alt_denominator_threshold: (1.0 - gamma) / (3.0 - gamma),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn examples() {
        assert_eq!(smb_beta_lower(0.7, 0.0).unwrap().beta_lower, 0.25);
        assert_eq!(smb_beta_lower(0.0, 0.4).unwrap().beta_lower, 0.0);
        let a = smb_beta_lower(0.5, 0.25).unwrap();
        assert!((a.gamma - 2.0 / 3.0).abs() < 1e-15);
        assert!((a.beta_lower - 0.2).abs() < 1e-15);
        assert!((a.selfish_threshold - 0.2).abs() < 1e-12);
        assert_eq!(smb_beta_lower(0.0, 0.0), Err(AnalyticsError::BothZero));
    }

    #[test]
    fn two_forms_agree_on_grid() {
        for i in 0..=50 {
            for j in 0..=50 {
                let (h, r) = (i as f64 / 50.0, j as f64 / 50.0);
                if h + r > 1.0 || (i == 0 && j == 0) {
                    continue;
                }
                let a = smb_beta_lower(h, r).unwrap();
                assert!((a.beta_lower - a.selfish_threshold).abs() < 1e-12);
            }
        }
    }
}
