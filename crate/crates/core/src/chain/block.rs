use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::ChainError;
use crate::hash::Digest32;

/// 256-bit block identifier. Genesis uses the all-zero id.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BlockId(pub Digest32);

impl BlockId {
    pub const GENESIS: BlockId = BlockId([0; 32]);

    pub fn to_hex(&self) -> String {
        hex::encode(self.0)
    }

    pub fn from_hex(s: &str) -> Result<Self, hex::FromHexError> {
        let mut out = [0u8; 32];
        hex::decode_to_slice(s, &mut out)?;
        Ok(BlockId(out))
    }
}

impl fmt::Display for BlockId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&hex::encode(&self.0[..6]))
    }
}

impl fmt::Debug for BlockId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BlockId({self})")
    }
}

impl Serialize for BlockId {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_hex())
    }
}

impl<'de> Deserialize<'de> for BlockId {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        BlockId::from_hex(&s).map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MinerId(pub u32);

impl fmt::Display for MinerId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "m{}", self.0)
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TxId(pub Digest32);

impl fmt::Debug for TxId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "TxId({})", hex::encode(&self.0[..6]))
    }
}

/// Simulator-side classification of a transaction.
///
/// Never part of [`Transaction::wire_bytes`]: a proof-of-invalidity commit
/// must look exactly like any other payment once it is in a block.
#[derive(Clone, Debug, PartialEq)]
pub enum TxKind {
    Normal,
    Bribe { amount: f64 },
    PoiCommit { commitment: Digest32 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct Transaction {
    pub id: TxId,
    pub fee: f64,
    pub kind: TxKind,
    pub payload: Vec<u8>,
}

impl Transaction {
    pub fn normal(id: TxId, fee: f64, payload: Vec<u8>) -> Result<Self, ChainError> {
        check_fee(fee)?;
        Ok(Self {
            id,
            fee,
            kind: TxKind::Normal,
            payload,
        })
    }

    /// An anyone-can-claim payment to whoever extends the carrying block.
    pub fn bribe(id: TxId, amount: f64) -> Result<Self, ChainError> {
        if !(amount > 0.0 && amount.is_finite()) {
            return Err(ChainError::InvalidTransaction(format!(
                "bribe amount must be positive, got {amount}"
            )));
        }
        Ok(Self {
            id,
            fee: 0.0,
            kind: TxKind::Bribe { amount },
            payload: amount.to_le_bytes().to_vec(),
        })
    }

    /// A commitment carried as an ordinary 32-byte payload.
    pub fn poi_commit(id: TxId, commitment: Digest32) -> Self {
        Self {
            id,
            fee: 0.0,
            kind: TxKind::PoiCommit { commitment },
            payload: commitment.to_vec(),
        }
    }

    /// Bribe amount visible to anyone reading the block.
    pub fn public_bribe(&self) -> Option<f64> {
        match self.kind {
            TxKind::Bribe { amount } => Some(amount),
            _ => None,
        }
    }

    /// Block-body encoding: id, fee, payload. `kind` is deliberately absent.
    pub fn wire_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(32 + 8 + 8 + self.payload.len());
        out.extend_from_slice(&self.id.0);
        out.extend_from_slice(&self.fee.to_le_bytes());
        out.extend_from_slice(&(self.payload.len() as u64).to_le_bytes());
        out.extend_from_slice(&self.payload);
        out
    }
}

fn check_fee(fee: f64) -> Result<(), ChainError> {
    if fee >= 0.0 && fee.is_finite() {
        Ok(())
    } else {
        Err(ChainError::InvalidTransaction(format!(
            "fee must be non-negative, got {fee}"
        )))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Block {
    pub id: BlockId,
    pub parent: BlockId,
    pub height: u64,
    pub miner: MinerId,
    /// Round the miner claims; only this enters difficulty retargeting.
    pub declared_timestamp: u64,
    /// Round the block was actually found. Simulator ground truth.
    pub actual_round: u64,
    pub difficulty_target: f64,
    pub txs: Vec<Transaction>,
    pub nonce: u64,
}

impl Block {
    pub fn genesis() -> Self {
        Self {
            id: BlockId::GENESIS,
            parent: BlockId::GENESIS,
            height: 0,
            miner: MinerId(u32::MAX),
            declared_timestamp: 0,
            actual_round: 0,
            difficulty_target: 1.0,
            txs: Vec::new(),
            nonce: 0,
        }
    }

    pub fn is_genesis(&self) -> bool {
        self.id == BlockId::GENESIS
    }

    pub fn bribe_total(&self) -> f64 {
        self.txs.iter().filter_map(Transaction::public_bribe).sum()
    }

    pub fn fee_total(&self) -> f64 {
        self.txs.iter().map(|t| t.fee).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wire_form_hides_poi_kind() {
        let c = [7u8; 32];
        let poi = Transaction::poi_commit(TxId([1; 32]), c);
        let plain = Transaction::normal(TxId([1; 32]), 0.0, c.to_vec()).unwrap();
        assert_eq!(poi.wire_bytes(), plain.wire_bytes());
    }

    #[test]
    fn bribe_must_be_positive() {
        assert!(Transaction::bribe(TxId([0; 32]), 0.0).is_err());
        assert!(Transaction::bribe(TxId([0; 32]), -1.0).is_err());
        assert_eq!(
            Transaction::bribe(TxId([0; 32]), 2.5)
                .unwrap()
                .public_bribe(),
            Some(2.5)
        );
    }

    #[test]
    fn block_id_hex_round_trip() {
        let id = BlockId([0xab; 32]);
        assert_eq!(BlockId::from_hex(&id.to_hex()).unwrap(), id);
    }
}
