//! Blocks, the fork tree, difficulty epochs and phased block rewards.

mod block;
mod difficulty;
mod reward;
mod tree;

pub use block::{Block, BlockId, MinerId, Transaction, TxId, TxKind};
pub use difficulty::{recalc_difficulty, EpochParams, Retarget};
pub use reward::{block_reward_at, is_inflationary, InflationReport, RewardFamily, RewardSchedule};
pub use tree::{ChainTree, ExportRecord, RetargetRecord};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ChainError {
    #[error("parent {parent} of block {block} is not in the tree")]
    UnknownParent { block: BlockId, parent: BlockId },
    #[error("block {0} is already in the tree")]
    DuplicateBlock(BlockId),
    #[error("block {block} has height {got}, expected {expected}")]
    HeightMismatch {
        block: BlockId,
        got: u64,
        expected: u64,
    },
    #[error("epoch has {got} blocks, expected {expected}")]
    WrongEpochLength { got: usize, expected: u64 },
    #[error("declared timestamps decrease inside the epoch (at index {index})")]
    NonMonotoneTimestamps { index: usize },
    #[error("custom reward series has {len} phases, phase {phase} requested")]
    CustomSeriesExhausted { phase: u64, len: usize },
    #[error("invalid epoch parameters: {0}")]
    InvalidEpochParams(String),
    #[error("invalid reward schedule: {0}")]
    InvalidRewardSchedule(String),
    #[error("invalid transaction: {0}")]
    InvalidTransaction(String),
}
