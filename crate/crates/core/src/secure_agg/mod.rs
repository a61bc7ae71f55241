//! Masking cryptosystem: encoding, modulus choice, participant selection,
//! dummy keys, keystreams, encryption, recovery responses and decryption.

mod codec;
mod keys;
mod prf;
pub mod wire;

use alloc::collections::BTreeSet;
use alloc::vec::Vec;

pub use codec::{choose_modulus, FixedPointCodec, Modulus, DEFAULT_SCALE};
pub use keys::{establish_pairwise_keys, KeyTable, KeystreamTable, PairwiseKey};
pub use prf::{Prf, PrfTag};

use crate::error::{invalid, Error, ProtocolFailure, Result};

/// Public per-slot nonce for participant selection.
pub fn selection_nonce(slot: u32) -> u64 {
    2 * slot as u64
}

/// Public per-slot nonce for dummy keys; never equal to a selection nonce.
pub fn dummy_nonce(slot: u32) -> u64 {
    2 * slot as u64 + 1
}

/// Maps `w/(N−1)` to a threshold on 64-bit PRF outputs. `None` means
/// every peer is selected.
fn selection_threshold(w: f64, n: u32) -> Result<Option<u64>> {
    if n < 2 {
        return Err(invalid("n", "selection needs at least two nodes"));
    }
    let peers = (n - 1) as f64;
    if !(w > 0.0 && w <= peers) {
        return Err(invalid("w", "must satisfy 0 < w <= N-1"));
    }
    let p = w / peers;
    if p >= 1.0 {
        return Ok(None);
    }
    // 2^64 · p, saturating on the float -> int cast.
    Ok(Some((p * 18_446_744_073_709_551_616.0) as u64))
}

/// Whether the pair sharing `key` is selected in the round with nonce `r1`.
/// Both endpoints evaluate the same PRF, so the relation is symmetric.
pub fn pair_selected(key: &PairwiseKey, r1: u64, w: f64, n: u32) -> Result<bool> {
    Ok(match selection_threshold(w, n)? {
        None => true,
        Some(t) => key.prf().eval_u64(PrfTag::Selection, r1) < t,
    })
}

/// Participants of node `i` for nonce `r1`, in increasing id order.
pub fn select_participants(i: u32, keys: &KeyTable, r1: u64, w: f64, n: u32) -> Result<Vec<u32>> {
    if !keys.contains(i) {
        return Err(Error::UnknownNode(i));
    }
    let threshold = selection_threshold(w, n)?;
    Ok(keys
        .keys_of(i)
        .filter(|k| match threshold {
            None => true,
            Some(t) => k.prf().eval_u64(PrfTag::Selection, r1) < t,
        })
        .map(|k| k.other(i))
        .collect())
}

/// A dummy key residue.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DummyKey {
    pub value: u64,
}

/// `sign(i−j)·PRF(K_ij, r2) mod m`.
pub fn dummy_key(i: u32, j: u32, key: &PairwiseKey, r2: u64, m: Modulus) -> Result<DummyKey> {
    if i == j {
        return Err(invalid("j", "a node has no dummy key with itself"));
    }
    let raw = m.reduce(key.prf().eval_u64(PrfTag::DummyKey, r2));
    let value = if i > j { raw } else { m.neg(raw) };
    Ok(DummyKey { value })
}

/// Dummy keys of node `i` towards each of `peers`.
pub fn dummy_keys(i: u32, peers: &[u32], keys: &KeyTable, r2: u64, m: Modulus) -> Result<Vec<DummyKey>> {
    peers
        .iter()
        .map(|&j| {
            let key = keys.key(i, j).ok_or(Error::UnknownNode(j))?;
            dummy_key(i, j, key, r2, m)
        })
        .collect()
}

fn sum_dummies(dummies: &[DummyKey], m: Modulus) -> u64 {
    dummies.iter().fold(0, |acc, d| m.add(acc, d.value))
}

/// Keystream residue `K'_i` for one slot.
pub fn keystream(prf: &Prf, slot: u32, m: Modulus) -> u64 {
    m.reduce(prf.eval_u64(PrfTag::Keystream, slot as u64))
}

/// Ciphertext sent by a meter in round 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MeterCiphertext {
    pub sender: u32,
    pub slot: u32,
    pub value: u64,
}

/// Round-2 reply of a live meter.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RecoveryResponse {
    pub sender: u32,
    pub slot: u32,
    pub value: u64,
}

/// `encode(x̂) + K'_i + Σ dkey + C_i mod m`. The simple single-round variant
/// passes `c_i = 0`.
#[allow(clippy::too_many_arguments)]
pub fn encrypt_share(
    sender: u32,
    slot: u32,
    noisy_value: f64,
    keystream: u64,
    dummies: &[DummyKey],
    c_i: u64,
    codec: &FixedPointCodec,
    m: Modulus,
) -> Result<MeterCiphertext> {
    let encoded = codec.encode(noisy_value)?;
    if !m.fits_signed(encoded) {
        return Err(Error::EncodingOverflow {
            value: encoded as i128,
            bits: m.bits(),
        });
    }
    let mut value = m.from_signed(encoded);
    value = m.add(value, keystream);
    value = m.add(value, sum_dummies(dummies, m));
    value = m.add(value, c_i);
    Ok(MeterCiphertext { sender, slot, value })
}

/// `Σ_{j∈S} dkey_{i,j} + C_i mod m` with `S = missing ∩ participants`.
#[allow(clippy::too_many_arguments)]
pub fn recovery_response(
    i: u32,
    slot: u32,
    missing: &BTreeSet<u32>,
    participants: &[u32],
    keys: &KeyTable,
    r2: u64,
    c_i: u64,
    m: Modulus,
) -> Result<RecoveryResponse> {
    let exposed: Vec<u32> = participants.iter().copied().filter(|j| missing.contains(j)).collect();
    let dummies = dummy_keys(i, &exposed, keys, r2, m)?;
    let value = m.add(sum_dummies(&dummies, m), m.reduce(c_i));
    Ok(RecoveryResponse { sender: i, slot, value })
}

/// Recovered aggregate in encoded units and in watts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Decryption {
    pub encoded: i128,
    pub value: f64,
}

/// `Σ cts − Σ responses − Σ K' mod m`, lifted to a signed value and checked
/// against the codec's plaintext bound. Does not check who answered.
pub fn unmask_sum(
    ciphertexts: &[MeterCiphertext],
    responses: &[RecoveryResponse],
    keystream_sum: u64,
    codec: &FixedPointCodec,
    m: Modulus,
) -> Result<Decryption> {
    let mut acc = ciphertexts.iter().fold(0, |acc, c| m.add(acc, c.value));
    acc = responses.iter().fold(acc, |acc, r| m.sub(acc, r.value));
    acc = m.sub(acc, keystream_sum);
    let encoded = m.to_signed(acc);
    if encoded.unsigned_abs() > codec.max_plain() as u128 {
        return Err(ProtocolFailure::Implausible(encoded).into());
    }
    Ok(Decryption {
        encoded,
        value: codec.decode(encoded),
    })
}

fn check_slot(slot: &mut Option<u32>, found: u32) -> Result<()> {
    match *slot {
        None => *slot = Some(found),
        Some(expected) if expected != found => {
            return Err(ProtocolFailure::SlotMismatch { expected, found }.into());
        }
        Some(_) => {}
    }
    Ok(())
}

/// Aggregator decryption for the robust protocol: every node that sent a
/// ciphertext must also have answered round 2, and nobody else.
pub fn aggregate_decrypt(
    ciphertexts: &[MeterCiphertext],
    responses: &[RecoveryResponse],
    keystream_sum: u64,
    codec: &FixedPointCodec,
    m: Modulus,
) -> Result<Decryption> {
    let mut slot = None;
    let mut senders = BTreeSet::new();
    for c in ciphertexts {
        check_slot(&mut slot, c.slot)?;
        if !senders.insert(c.sender) {
            return Err(Error::DuplicateNode(c.sender));
        }
    }
    let mut responders = BTreeSet::new();
    for r in responses {
        check_slot(&mut slot, r.slot)?;
        if !senders.contains(&r.sender) {
            return Err(ProtocolFailure::UnexpectedResponse(r.sender).into());
        }
        if !responders.insert(r.sender) {
            return Err(Error::DuplicateNode(r.sender));
        }
    }
    if let Some(&missing) = senders.difference(&responders).next() {
        return Err(ProtocolFailure::MissingResponse(missing).into());
    }
    unmask_sum(ciphertexts, responses, keystream_sum, codec, m)
}

/// Single-round decryption for the simple variant without failures.
pub fn aggregate_simple(
    ciphertexts: &[MeterCiphertext],
    keystream_sum: u64,
    codec: &FixedPointCodec,
    m: Modulus,
) -> Result<Decryption> {
    let mut slot = None;
    let mut senders = BTreeSet::new();
    for c in ciphertexts {
        check_slot(&mut slot, c.slot)?;
        if !senders.insert(c.sender) {
            return Err(Error::DuplicateNode(c.sender));
        }
    }
    unmask_sum(ciphertexts, &[], keystream_sum, codec, m)
}
