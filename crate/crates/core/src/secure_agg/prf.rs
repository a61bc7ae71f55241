use hmac::{Hmac, KeyInit, Mac};
use sha2::Sha256;

/// Domain-separation tag prepended to every PRF input.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u8)]
pub enum PrfTag {
    Selection = 1,
    DummyKey = 2,
    Keystream = 3,
}

/// HMAC-SHA256 keyed once; evaluates `HMAC(K, tag || nonce_le)`.
#[derive(Clone)]
pub struct Prf {
    mac: Hmac<Sha256>,
}

impl core::fmt::Debug for Prf {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str("Prf(..)")
    }
}

impl Prf {
    pub fn new(key: &[u8; 32]) -> Self {
        let mac = <Hmac<Sha256> as KeyInit>::new_from_slice(key).expect("HMAC accepts any key length");
        Prf { mac }
    }

    pub fn eval(&self, tag: PrfTag, nonce: u64) -> [u8; 32] {
        let mut mac = self.mac.clone();
        mac.update(&[tag as u8]);
        mac.update(&nonce.to_le_bytes());
        let mut out = [0u8; 32];
        out.copy_from_slice(&mac.finalize().into_bytes());
        out
    }

    /// First 64 output bits, little endian.
    pub fn eval_u64(&self, tag: PrfTag, nonce: u64) -> u64 {
        let out = self.eval(tag, nonce);
        u64::from_le_bytes(out[..8].try_into().expect("8 bytes"))
    }
}
