use rand::Rng;
use serde::{Deserialize, Serialize};

use super::PragthosError;
use crate::chain::{BlockId, ChainTree, MinerId, Transaction, TxId};
use crate::hash::{Digest32, KeyedHash};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct KThreshold {
    pub phi: f64,
    pub value: f64,
    /// `value` rounded down; the gap that actually triggers placement.
    pub floor: u64,
}

/// Fork deficit beyond which the fork coalition still overtakes with
/// probability at least `1 - mu`: `rho - log_phi(mu + phi^rho (1 - mu))`.
pub fn k_th_compute(beta_hon: f64, rho: u32, mu: f64) -> Result<KThreshold, PragthosError> {
    if !(beta_hon > 0.0 && beta_hon < 0.5) {
        return Err(PragthosError::DegeneratePhi(beta_hon));
    }
    if !(mu > 0.0 && mu <= 1.0) {
        return Err(PragthosError::OutOfRange(format!(
            "mu = {mu} must lie in (0, 1]"
        )));
    }
    let phi = beta_hon / (1.0 - beta_hon);
    let arg = mu + phi.powi(rho as i32) * (1.0 - mu);
    let value = rho as f64 - arg.ln() / phi.ln();
    // Values like 1.9999999999 are 2 up to rounding.
    let floor = (value + 1e-9).floor().max(0.0) as u64;
    Ok(KThreshold { phi, value, floor })
}

/// A commitment to an honest block, hidden in an ordinary-looking payload.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PoICommit {
    pub commitment: Digest32,
    /// Simulator bookkeeping only.
    pub creator: MinerId,
    pub committed_height: u64,
}

impl PoICommit {
    pub fn tx_id(&self, hasher: &KeyedHash) -> TxId {
        TxId(hasher.hash(&[b"tx", &self.commitment]))
    }

    pub fn to_transaction(&self, hasher: &KeyedHash) -> Transaction {
        Transaction::poi_commit(self.tx_id(hasher), self.commitment)
    }
}

/// Where a commitment landed: the accused branch (by tip) and the height.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PoiLocation {
    pub chain_tip: BlockId,
    pub height: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PoIReveal {
    pub m_secret: [u8; 32],
    pub referenced_block: BlockId,
    pub poi_tx_location: PoiLocation,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PoiVerdict {
    ValidInvalidation,
    Invalid,
}

fn commitment_of(hasher: &KeyedHash, block: &BlockId, secret: &[u8; 32]) -> Digest32 {
    hasher.hash(&[b"poi", &block.0, secret])
}

/// Commits to `honest_tip` under a fresh 256-bit secret.
pub fn make_poi<R: Rng + ?Sized>(
    rng: &mut R,
    hasher: &KeyedHash,
    honest_tip: BlockId,
    height: u64,
    creator: MinerId,
) -> (PoICommit, [u8; 32]) {
    let mut secret = [0u8; 32];
    rng.fill(&mut secret);
    let commit = PoICommit {
        commitment: commitment_of(hasher, &honest_tip, &secret),
        creator,
        committed_height: height,
    };
    (commit, secret)
}

/// Checks a reveal against the public tree.
///
/// Valid only if the commitment sits on the accused branch at the stated
/// height, opens to a block that is not on that branch, and was placed at
/// least `k_th` blocks below the referenced block's height.
pub fn verify_poi_reveal(
    hasher: &KeyedHash,
    commit: &PoICommit,
    reveal: &PoIReveal,
    tree: &ChainTree,
    k_th: u64,
) -> Result<PoiVerdict, PragthosError> {
    let loc = reveal.poi_tx_location;
    let holder = tree
        .ancestor_at(loc.chain_tip, loc.height)
        .ok_or(PragthosError::UnknownCommit)?;
    let carried = tree
        .block(&holder)
        .txs
        .iter()
        .any(|t| t.payload.as_slice() == commit.commitment.as_slice());
    if !carried {
        return Err(PragthosError::UnknownCommit);
    }
    let Some(referenced) = tree.get(&reveal.referenced_block) else {
        return Ok(PoiVerdict::Invalid);
    };
    if tree.is_ancestor(reveal.referenced_block, loc.chain_tip) {
        return Ok(PoiVerdict::Invalid);
    }
    if commitment_of(hasher, &reveal.referenced_block, &reveal.m_secret) != commit.commitment {
        return Ok(PoiVerdict::Invalid);
    }
    if loc.height + k_th > referenced.height {
        return Ok(PoiVerdict::Invalid);
    }
    Ok(PoiVerdict::ValidInvalidation)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PoiInclusion {
    /// `1 - (1 - beta_hon)^k_th`.
    pub exact: f64,
    /// `1 - exp(-beta_hon k_th)`.
    pub bound: f64,
}

/// Chance that honest miners land at least one of `k_th` fork blocks.
pub fn poi_inclusion_probability(beta_hon: f64, k_th: f64) -> PoiInclusion {
    PoiInclusion {
        exact: 1.0 - (1.0 - beta_hon).powf(k_th),
        bound: 1.0 - (-beta_hon * k_th).exp(),
    }
}

/// Monte Carlo over windows of `k_th` fork blocks, each honest-mined with
/// probability `beta_hon`; returns the share of windows with an honest block.
pub fn simulate_poi_windows<R: Rng + ?Sized>(
    rng: &mut R,
    beta_hon: f64,
    k_th: u64,
    windows: u64,
) -> f64 {
    let hits = (0..windows)
        .filter(|_| (0..k_th).any(|_| rng.random::<f64>() < beta_hon))
        .count();
    hits as f64 / windows as f64
}
