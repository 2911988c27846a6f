//! The round engine: mining lottery, message delivery, the external observer
//! and the run loop that ties strategies to the chain.

mod config;
mod engine;
mod lottery;
mod network;
mod observer;
mod result;

pub use config::{
    ExternalityConfig, MinerPopulation, NetworkMode, PragthosConfig, SimConfig, StrategyBindings,
    TimestampRule, TxWorkload,
};
pub use engine::{run, Simulation};
pub use lottery::attempt_mine;
pub use network::NetworkModel;
pub use observer::{
    observer_update, Evidence, ExternalObserver, ExternalitySignal, FlagEvent, FlagKind,
};
pub use result::{AttackOutcome, FilterStats, PoiStats, RpDecision, ScenarioResult};

use thiserror::Error;

use crate::chain::ChainError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("invalid configuration: {0}")]
    ConfigInvalid(String),
    #[error("success probability {0} is outside [0, 1]")]
    ProbabilityOutOfRange(f64),
    #[error("chain fault in round {round}: {source}")]
    Chain { round: u64, source: ChainError },
    #[error("strategy fault in round {round}: {message}")]
    Strategy { round: u64, message: String },
    #[error("cannot write chain export: {0}")]
    Export(String),
}
