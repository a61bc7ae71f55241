//! Byte layout of protocol transcripts.
//!
//! A transcript starts with an 8-byte header:
//!
//! | offset | size | field                         |
//! |--------|------|-------------------------------|
//! | 0      | 4    | magic `DPMT`                  |
//! | 4      | 1    | version, currently 1          |
//! | 5      | 1    | modulus bit width (1..=64)    |
//! | 6      | 2    | reserved, zero                |
//!
//! followed by records. Ciphertexts (kind 1) and recovery responses (kind 2)
//! are 17 bytes: `kind u8 | sender u32 | slot u32 | residue u64`. A broadcast
//! of non-responders (kind 3) is `kind u8 | slot u32 | count u32 | count × id u32`.
//! All integers are little endian.

use alloc::vec::Vec;

use super::{MeterCiphertext, Modulus, RecoveryResponse};
use crate::error::{Error, Result};

pub const MAGIC: [u8; 4] = *b"DPMT";
pub const VERSION: u8 = 1;
pub const HEADER_LEN: usize = 8;
pub const MESSAGE_LEN: usize = 17;

const KIND_CIPHERTEXT: u8 = 1;
const KIND_RESPONSE: u8 = 2;
const KIND_BROADCAST: u8 = 3;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Record {
    Ciphertext(MeterCiphertext),
    Response(RecoveryResponse),
    Broadcast { slot: u32, missing: Vec<u32> },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Transcript {
    pub modulus: Modulus,
    pub records: Vec<Record>,
}

fn put_message(out: &mut Vec<u8>, kind: u8, sender: u32, slot: u32, value: u64) {
    out.push(kind);
    out.extend_from_slice(&sender.to_le_bytes());
    out.extend_from_slice(&slot.to_le_bytes());
    out.extend_from_slice(&value.to_le_bytes());
}

struct Reader<'a> {
    buf: &'a [u8],
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.buf.len() < n {
            return Err(Error::Malformed("truncated record"));
        }
        let (head, rest) = self.buf.split_at(n);
        self.buf = rest;
        Ok(head)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }
}

impl Transcript {
    pub fn new(modulus: Modulus) -> Self {
        Transcript {
            modulus,
            records: Vec::new(),
        }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(HEADER_LEN + self.records.len() * MESSAGE_LEN);
        out.extend_from_slice(&MAGIC);
        out.push(VERSION);
        out.push(self.modulus.bits() as u8);
        out.extend_from_slice(&[0, 0]);
        for r in &self.records {
            match r {
                Record::Ciphertext(c) => put_message(&mut out, KIND_CIPHERTEXT, c.sender, c.slot, c.value),
                Record::Response(c) => put_message(&mut out, KIND_RESPONSE, c.sender, c.slot, c.value),
                Record::Broadcast { slot, missing } => {
                    out.push(KIND_BROADCAST);
                    out.extend_from_slice(&slot.to_le_bytes());
                    out.extend_from_slice(&(missing.len() as u32).to_le_bytes());
                    for id in missing {
                        out.extend_from_slice(&id.to_le_bytes());
                    }
                }
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut rd = Reader { buf: bytes };
        let header = rd.take(HEADER_LEN).map_err(|_| Error::Malformed("missing transcript header"))?;
        if header[..4] != MAGIC {
            return Err(Error::Malformed("bad magic"));
        }
        if header[4] != VERSION {
            return Err(Error::Malformed("unsupported version"));
        }
        let modulus = Modulus::from_bits(header[5] as u32).map_err(|_| Error::Malformed("bad modulus width"))?;
        let mut records = Vec::new();
        while !rd.buf.is_empty() {
            let kind = rd.take(1)?[0];
            match kind {
                KIND_CIPHERTEXT | KIND_RESPONSE => {
                    let sender = rd.u32()?;
                    let slot = rd.u32()?;
                    let value = rd.u64()?;
                    if value > modulus.mask() {
                        return Err(Error::Malformed("residue exceeds modulus"));
                    }
                    records.push(if kind == KIND_CIPHERTEXT {
                        Record::Ciphertext(MeterCiphertext { sender, slot, value })
                    } else {
                        Record::Response(RecoveryResponse { sender, slot, value })
                    });
                }
                KIND_BROADCAST => {
                    let slot = rd.u32()?;
                    let count = rd.u32()? as usize;
                    if rd.buf.len() < count.saturating_mul(4) {
                        return Err(Error::Malformed("truncated broadcast"));
                    }
                    let missing = (0..count).map(|_| rd.u32()).collect::<Result<Vec<_>>>()?;
                    records.push(Record::Broadcast { slot, missing });
                }
                _ => return Err(Error::Malformed("unknown record kind")),
            }
        }
        Ok(Transcript { modulus, records })
    }
}
