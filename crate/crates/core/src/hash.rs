//! Seeded, domain-separated SHA-256.
//!
//! Every digest in a run goes through a [`KeyedHash`] so that two runs with
//! different seeds never share block ids, while a fixed seed replays exactly.

use sha2::{Digest, Sha256};

/// A 256-bit digest.
pub type Digest32 = [u8; 32];

/// SHA-256 keyed by a 32-byte prefix derived from a run seed.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct KeyedHash {
    key: Digest32,
}

impl KeyedHash {
    pub fn new(seed: u64) -> Self {
        let mut h = Sha256::new();
        h.update(b"powsec/key");
        h.update(seed.to_le_bytes());
        Self {
            key: h.finalize().into(),
        }
    }

    /// Hashes the concatenation of `parts`, each length-prefixed so that
    /// `("ab", "c")` and `("a", "bc")` never collide.
    pub fn hash(&self, parts: &[&[u8]]) -> Digest32 {
        let mut h = Sha256::new();
        h.update(self.key);
        for p in parts {
            h.update((p.len() as u64).to_le_bytes());
            h.update(p);
        }
        h.finalize().into()
    }
}

impl Default for KeyedHash {
    fn default() -> Self {
        Self::new(0)
    }
}

/// Last `l` bits of a digest, read as a big-endian integer. `l` is capped at 64.
pub fn low_bits(d: &Digest32, l: u32) -> u64 {
    let l = l.min(64);
    if l == 0 {
        return 0;
    }
    let mut tail = [0u8; 8];
    tail.copy_from_slice(&d[24..]);
    let v = u64::from_be_bytes(tail);
    if l == 64 {
        v
    } else {
        v & ((1u64 << l) - 1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn key_separates_runs() {
        let a = KeyedHash::new(1).hash(&[b"x"]);
        let b = KeyedHash::new(2).hash(&[b"x"]);
        assert_ne!(a, b);
        assert_eq!(a, KeyedHash::new(1).hash(&[b"x"]));
    }

    #[test]
    fn length_prefix_prevents_concat_collisions() {
        let h = KeyedHash::new(0);
        assert_ne!(h.hash(&[b"ab", b"c"]), h.hash(&[b"a", b"bc"]));
    }

    #[test]
    fn low_bits_masks() {
        let mut d = [0u8; 32];
        d[31] = 0b1011_0110;
        assert_eq!(low_bits(&d, 0), 0);
        assert_eq!(low_bits(&d, 3), 0b110);
        assert_eq!(low_bits(&d, 8), 0b1011_0110);
    }
}
