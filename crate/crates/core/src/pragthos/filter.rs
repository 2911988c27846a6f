use crate::chain::{BlockId, MinerId, Transaction};
use crate::hash::{low_bits, Digest32, KeyedHash};

/// Payout address digest of a miner, fixed for a run.
pub fn miner_dest(hasher: &KeyedHash, miner: MinerId) -> Digest32 {
    hasher.hash(&[b"dest", &miner.0.to_le_bytes()])
}

/// A transaction may enter a block on `parent` only if the last `l` bits of
/// `H(tx || parent)` equal those of `H(dest || parent)`.
pub fn c1_filter(
    hasher: &KeyedHash,
    tx: &Transaction,
    dest: &Digest32,
    parent: &BlockId,
    l: u32,
) -> bool {
    if l == 0 {
        return true;
    }
    let a = hasher.hash(&[b"c1-tx", &tx.wire_bytes(), &parent.0]);
    let b = hasher.hash(&[b"c1-dest", dest, &parent.0]);
    low_bits(&a, l) == low_bits(&b, l)
}

/// Largest expected gain from withholding `total_withheld_fee` under the filter.
pub fn epsilon_g_bound(total_withheld_fee: f64, l: u32) -> f64 {
    total_withheld_fee / 2f64.powi(l as i32)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::TxId;

    #[test]
    fn vacuous_filter() {
        let h = KeyedHash::new(1);
        let tx = Transaction::normal(TxId([1; 32]), 1.0, vec![]).unwrap();
        assert!(c1_filter(&h, &tx, &[0; 32], &BlockId::GENESIS, 0));
    }

    #[test]
    fn bound_arithmetic() {
        assert_eq!(epsilon_g_bound(1024.0, 10), 1.0);
        assert_eq!(epsilon_g_bound(7.5, 0), 7.5);
        assert!((epsilon_g_bound(50.0, 20) - 4.768_371_582e-5).abs() < 1e-12);
    }

    #[test]
    fn acceptance_rate_matches_two_to_minus_l() {
        let h = KeyedHash::new(9);
        let tx = Transaction::normal(TxId([3; 32]), 1.0, b"pay".to_vec()).unwrap();
        let parent = BlockId([5; 32]);
        let n = 1u32 << 16;
        let hits = (0..n)
            .filter(|i| c1_filter(&h, &tx, &miner_dest(&h, MinerId(*i)), &parent, 8))
            .count() as f64;
        let p = 1.0 / 256.0;
        let sigma = (n as f64 * p * (1.0 - p)).sqrt();
        assert!((hits - n as f64 * p).abs() < 3.0 * sigma, "{hits}");
    }

    #[test]
    fn new_parent_redraws() {
        let h = KeyedHash::new(2);
        let tx = Transaction::normal(TxId([8; 32]), 1.0, vec![]).unwrap();
        let dest = miner_dest(&h, MinerId(0));
        let trials = 4096u32;
        let (mut a_hits, mut both) = (0u32, 0u32);
        for i in 0..trials {
            let p1 = BlockId(h.hash(&[b"p1", &i.to_le_bytes()]));
            let p2 = BlockId(h.hash(&[b"p2", &i.to_le_bytes()]));
            let a = c1_filter(&h, &tx, &dest, &p1, 2);
            let b = c1_filter(&h, &tx, &dest, &p2, 2);
            a_hits += a as u32;
            both += (a && b) as u32;
        }
        // Independent draws: P(both) ~ 1/16, P(a) ~ 1/4.
        let pa = a_hits as f64 / trials as f64;
        let pb = both as f64 / trials as f64;
        assert!((pa - 0.25).abs() < 0.03);
        assert!((pb - 0.0625).abs() < 0.02);
    }
}
