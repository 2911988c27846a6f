//! Countermeasures: proof-of-invalidity commitments, the retarget clamp and
//! the transaction-inclusion filter.

mod filter;
mod poi;

pub use filter::{c1_filter, epsilon_g_bound, miner_dest};
pub use poi::{
    k_th_compute, make_poi, poi_inclusion_probability, simulate_poi_windows, verify_poi_reveal,
    KThreshold, PoICommit, PoIReveal, PoiInclusion, PoiLocation, PoiVerdict,
};

use thiserror::Error;

/// Smallest tau_min the clamp allows.
pub const TAU_CLAMP: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PragthosError {
    #[error("beta_hon = {0} gives phi >= 1; the fork coalition cannot be assumed to overtake")]
    DegeneratePhi(f64),
    #[error("input out of range: {0}")]
    OutOfRange(String),
    #[error("commitment is not in a block of the accused chain")]
    UnknownCommit,
}
