use serde::{Deserialize, Serialize};

use super::ChainError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum RewardFamily {
    Constant,
    Geometric { vartheta: f64 },
    Harmonic,
    CustomSeries { values: Vec<f64> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RewardSchedule {
    pub r0: f64,
    /// Blocks per phase.
    pub capital_lambda: u64,
    pub family: RewardFamily,
}

impl RewardSchedule {
    pub fn constant(r0: f64) -> Self {
        Self {
            r0,
            capital_lambda: u64::MAX,
            family: RewardFamily::Constant,
        }
    }

    pub fn validate(&self) -> Result<(), ChainError> {
        let bad = |m: String| Err(ChainError::InvalidRewardSchedule(m));
        if !(self.r0 >= 0.0 && self.r0.is_finite()) {
            return bad(format!("r0 must be non-negative, got {}", self.r0));
        }
        if self.capital_lambda == 0 {
            return bad("capital_lambda must be at least 1".into());
        }
        match &self.family {
            RewardFamily::Geometric { vartheta } if !(*vartheta > 0.0 && *vartheta <= 1.0) => {
                bad(format!("vartheta must be in (0, 1], got {vartheta}"))
            }
            RewardFamily::CustomSeries { values } if values.is_empty() => {
                bad("custom series needs at least one value".into())
            }
            RewardFamily::CustomSeries { values } if values.iter().any(|v| !(*v > 0.0)) => {
                bad("custom series values must be positive".into())
            }
            _ => Ok(()),
        }
    }

    /// Multiplier applied to `r0` in `phase`.
    pub fn factor(&self, phase: u64) -> Result<f64, ChainError> {
        Ok(match &self.family {
            RewardFamily::Constant => 1.0,
            RewardFamily::Geometric { vartheta } => vartheta.powf(phase as f64),
            RewardFamily::Harmonic => 1.0 / (phase as f64 + 1.0),
            RewardFamily::CustomSeries { values } => {
                *values
                    .get(phase as usize)
                    .ok_or(ChainError::CustomSeriesExhausted {
                        phase,
                        len: values.len(),
                    })?
            }
        })
    }

    pub fn phase_of(&self, height: u64) -> u64 {
        height / self.capital_lambda
    }

    /// Reward ratio between the phase after `height`'s and `height`'s own.
    pub fn next_phase_ratio(&self, height: u64) -> Result<f64, ChainError> {
        let p = self.phase_of(height);
        let now = self.factor(p)?;
        let next = self.factor(p + 1)?;
        Ok(if now > 0.0 { next / now } else { 1.0 })
    }
}

/// `r0 * factor(height / capital_lambda)`.
pub fn block_reward_at(schedule: &RewardSchedule, height: u64) -> Result<f64, ChainError> {
    Ok(schedule.r0 * schedule.factor(schedule.phase_of(height))?)
}

#[derive(Clone, Debug, PartialEq)]
pub struct InflationReport {
    pub inflationary: bool,
    /// `partial_sums[i]` is the sum of per-phase rewards over phases `0..=i`.
    pub partial_sums: Vec<f64>,
    /// Set when the verdict rests on a finite prefix only (custom series).
    pub inconclusive: Option<String>,
}

/// Classifies a reward series as diverging (inflationary) or converging.
pub fn is_inflationary(schedule: &RewardSchedule, horizon: u64) -> InflationReport {
    let horizon = horizon.max(1);
    let terms: u64 = match &schedule.family {
        RewardFamily::CustomSeries { values } => horizon.min(values.len() as u64),
        _ => horizon,
    };
    let mut partial_sums = Vec::with_capacity(terms as usize);
    let mut acc = 0.0;
    for i in 0..terms {
        acc += schedule.r0 * schedule.factor(i).unwrap_or(0.0);
        partial_sums.push(acc);
    }
    let (inflationary, inconclusive) = match &schedule.family {
        RewardFamily::Constant | RewardFamily::Harmonic => (true, None),
        RewardFamily::Geometric { vartheta } => (*vartheta >= 1.0, None),
        RewardFamily::CustomSeries { .. } => {
            // Share of the total contributed by the second half of the prefix:
            // it tends to zero for convergent series and stays bounded away
            // from zero for the usual divergent ones.
            let n = partial_sums.len();
            let verdict = if n < 2 {
                false
            } else {
                let total = partial_sums[n - 1];
                let half = partial_sums[n / 2 - 1];
                total > 0.0 && (total - half) / total > 0.01
            };
            (
                verdict,
                Some(format!(
                    "judged from a {n}-phase prefix; a finite prefix cannot prove divergence"
                )),
            )
        }
    };
    InflationReport {
        inflationary,
        partial_sums,
        inconclusive,
    }
}
