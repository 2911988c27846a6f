use serde::{Deserialize, Serialize};

use super::{Block, ChainError};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochParams {
    /// Blocks per epoch.
    pub lambda: u64,
    pub tau_min: f64,
    pub tau_max: f64,
    /// Rounds per block the retarget aims for.
    pub target_block_interval: f64,
}

impl EpochParams {
    pub fn validate(&self) -> Result<(), ChainError> {
        let bad = |m: String| Err(ChainError::InvalidEpochParams(m));
        if self.lambda == 0 {
            return bad("lambda must be at least 1".into());
        }
        if !(self.tau_min > 0.0 && self.tau_min <= 1.0) {
            return bad(format!("tau_min must be in (0, 1], got {}", self.tau_min));
        }
        if !(self.tau_max >= 1.0 && self.tau_max.is_finite()) {
            return bad(format!("tau_max must be >= 1, got {}", self.tau_max));
        }
        if !(self.target_block_interval > 0.0 && self.target_block_interval.is_finite()) {
            return bad(format!(
                "target_block_interval must be positive, got {}",
                self.target_block_interval
            ));
        }
        Ok(())
    }

    /// Declared rounds one epoch should take.
    pub fn schedule(&self) -> f64 {
        self.lambda as f64 * self.target_block_interval
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Retarget {
    pub new_difficulty: f64,
    pub tau_raw: f64,
    pub tau_applied: f64,
    pub declared_duration: u64,
}

/// Rescales difficulty after an epoch of `params.lambda` blocks.
///
/// `boundary_timestamp` is the declared timestamp of the block closing the
/// previous epoch (genesis for the first). A longer declared duration gives a
/// smaller factor, i.e. an easier next epoch.
pub fn recalc_difficulty(
    boundary_timestamp: u64,
    epoch_blocks: &[Block],
    params: &EpochParams,
    old_difficulty: f64,
) -> Result<Retarget, ChainError> {
    if epoch_blocks.len() as u64 != params.lambda {
        return Err(ChainError::WrongEpochLength {
            got: epoch_blocks.len(),
            expected: params.lambda,
        });
    }
    let mut prev = boundary_timestamp;
    for (index, b) in epoch_blocks.iter().enumerate() {
        if b.declared_timestamp < prev {
            return Err(ChainError::NonMonotoneTimestamps { index });
        }
        prev = b.declared_timestamp;
    }
    let declared_duration = prev - boundary_timestamp;
    let tau_raw = if declared_duration == 0 {
        f64::INFINITY
    } else {
        params.schedule() / declared_duration as f64
    };
    let tau_applied = tau_raw.clamp(params.tau_min, params.tau_max);
    Ok(Retarget {
        new_difficulty: old_difficulty * tau_applied,
        tau_raw,
        tau_applied,
        declared_duration,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::{BlockId, MinerId};

    fn params() -> EpochParams {
        EpochParams {
            lambda: 4,
            tau_min: 0.25,
            tau_max: 4.0,
            target_block_interval: 10.0,
        }
    }

    fn epoch(stamps: &[u64]) -> Vec<Block> {
        stamps
            .iter()
            .enumerate()
            .map(|(i, &t)| Block {
                id: BlockId([i as u8 + 1; 32]),
                parent: BlockId::GENESIS,
                height: i as u64 + 1,
                miner: MinerId(0),
                declared_timestamp: t,
                actual_round: t,
                difficulty_target: 1.0,
                txs: vec![],
                nonce: 0,
            })
            .collect()
    }

    #[test]
    fn on_schedule_keeps_difficulty() {
        let r = recalc_difficulty(0, &epoch(&[10, 20, 30, 40]), &params(), 3.0).unwrap();
        assert_eq!(r.tau_applied, 1.0);
        assert_eq!(r.new_difficulty, 3.0);
    }

    #[test]
    fn stretched_epoch_hits_lower_clamp() {
        let r = recalc_difficulty(0, &epoch(&[80, 160, 240, 320]), &params(), 1.0).unwrap();
        assert_eq!(r.tau_raw, 0.125);
        assert_eq!(r.tau_applied, 0.25);
    }

    #[test]
    fn compressed_epoch_hits_upper_clamp() {
        let r = recalc_difficulty(100, &epoch(&[101, 102, 103, 104]), &params(), 1.0).unwrap();
        assert_eq!(r.tau_applied, 4.0);
        let zero = recalc_difficulty(5, &epoch(&[5, 5, 5, 5]), &params(), 1.0).unwrap();
        assert_eq!(zero.tau_applied, 4.0);
    }

    #[test]
    fn rejects_bad_epochs() {
        assert!(matches!(
            recalc_difficulty(0, &epoch(&[1, 2, 3]), &params(), 1.0),
            Err(ChainError::WrongEpochLength { got: 3, .. })
        ));
        assert!(matches!(
            recalc_difficulty(0, &epoch(&[1, 5, 4, 6]), &params(), 1.0),
            Err(ChainError::NonMonotoneTimestamps { index: 2 })
        ));
        assert!(matches!(
            recalc_difficulty(9, &epoch(&[1, 5, 6, 7]), &params(), 1.0),
            Err(ChainError::NonMonotoneTimestamps { index: 0 })
        ));
    }
}
