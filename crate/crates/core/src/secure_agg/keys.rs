use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use sha2::{Digest, Sha256};

use super::prf::Prf;
use crate::error::{Error, Result};

/// Secret shared by two meters of a cluster.
#[derive(Debug, Clone)]
pub struct PairwiseKey {
    node_a: u32,
    node_b: u32,
    secret: [u8; 32],
    prf: Prf,
}

impl PairwiseKey {
    fn new(a: u32, b: u32, secret: [u8; 32]) -> Self {
        let (node_a, node_b) = if a < b { (a, b) } else { (b, a) };
        PairwiseKey {
            node_a,
            node_b,
            secret,
            prf: Prf::new(&secret),
        }
    }

    pub fn node_a(&self) -> u32 {
        self.node_a
    }

    pub fn node_b(&self) -> u32 {
        self.node_b
    }

    pub fn secret(&self) -> &[u8; 32] {
        &self.secret
    }

    pub fn prf(&self) -> &Prf {
        &self.prf
    }

    /// The endpoint that is not `me`.
    pub fn other(&self, me: u32) -> u32 {
        if me == self.node_a {
            self.node_b
        } else {
            self.node_a
        }
    }
}

fn derive(label: &[u8], master_secret: &[u8], a: u32, b: u32) -> [u8; 32] {
    let mut h = Sha256::new();
    h.update(label);
    h.update((master_secret.len() as u64).to_le_bytes());
    h.update(master_secret);
    h.update(a.to_le_bytes());
    h.update(b.to_le_bytes());
    let mut out = [0u8; 32];
    out.copy_from_slice(&h.finalize());
    out
}

/// All pairwise keys of one cluster. Stands in for the Diffie–Hellman setup:
/// `K_{i,j} = SHA256("dpmeter/pairwise" ‖ master ‖ min(i,j) ‖ max(i,j))`.
#[derive(Debug, Clone)]
pub struct KeyTable {
    nodes: Vec<u32>,
    keys: BTreeMap<(u32, u32), PairwiseKey>,
}

pub fn establish_pairwise_keys(cluster: &[u32], master_secret: &[u8]) -> Result<KeyTable> {
    let mut nodes = cluster.to_vec();
    nodes.sort_unstable();
    if let Some(w) = nodes.windows(2).find(|w| w[0] == w[1]) {
        return Err(Error::DuplicateNode(w[0]));
    }
    let mut keys = BTreeMap::new();
    for (idx, &a) in nodes.iter().enumerate() {
        for &b in &nodes[idx + 1..] {
            let secret = derive(b"dpmeter/pairwise", master_secret, a, b);
            keys.insert((a, b), PairwiseKey::new(a, b, secret));
        }
    }
    Ok(KeyTable { nodes, keys })
}

impl KeyTable {
    pub fn nodes(&self) -> &[u32] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }

    pub fn contains(&self, node: u32) -> bool {
        self.nodes.binary_search(&node).is_ok()
    }

    /// Key shared by `i` and `j`, looked up from either side.
    pub fn key(&self, i: u32, j: u32) -> Option<&PairwiseKey> {
        let k = if i < j { (i, j) } else { (j, i) };
        self.keys.get(&k)
    }

    /// Keys held by node `i`, ordered by the other endpoint.
    pub fn keys_of(&self, i: u32) -> impl Iterator<Item = &PairwiseKey> + '_ {
        self.nodes
            .iter()
            .filter(move |&&j| j != i)
            .filter_map(move |&j| self.key(i, j))
    }
}

/// Secrets each meter shares with the aggregator, from which the per-slot
/// keystream `K'_i` is derived.
#[derive(Debug, Clone)]
pub struct KeystreamTable {
    nodes: Vec<u32>,
    prfs: Vec<Prf>,
}

impl KeystreamTable {
    pub fn new(cluster: &[u32], master_secret: &[u8]) -> Result<Self> {
        let mut nodes = cluster.to_vec();
        nodes.sort_unstable();
        if let Some(w) = nodes.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::DuplicateNode(w[0]));
        }
        let prfs = nodes
            .iter()
            .map(|&i| Prf::new(&derive(b"dpmeter/keystream", master_secret, i, u32::MAX)))
            .collect();
        Ok(KeystreamTable { nodes, prfs })
    }

    pub fn prf(&self, node: u32) -> Result<&Prf> {
        self.nodes
            .binary_search(&node)
            .map(|i| &self.prfs[i])
            .map_err(|_| Error::UnknownNode(node))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn three_nodes_symmetric() {
        let t = establish_pairwise_keys(&[5, 1, 9], b"m").unwrap();
        assert_eq!(t.len(), 3);
        for (i, j) in [(1, 5), (1, 9), (5, 9)] {
            assert_eq!(t.key(i, j).unwrap().secret(), t.key(j, i).unwrap().secret());
        }
        assert_ne!(t.key(1, 5).unwrap().secret(), t.key(1, 9).unwrap().secret());
        assert!(t.key(1, 1).is_none());
    }

    #[test]
    fn single_node_has_no_keys() {
        assert!(establish_pairwise_keys(&[3], b"m").unwrap().is_empty());
    }

    #[test]
    fn duplicate_ids_rejected() {
        assert_eq!(
            establish_pairwise_keys(&[1, 2, 1], b"m").unwrap_err(),
            Error::DuplicateNode(1)
        );
    }

    #[test]
    fn hundred_nodes_storage() {
        let ids: Vec<u32> = (0..100).collect();
        let t = establish_pairwise_keys(&ids, b"seed").unwrap();
        assert_eq!(t.len(), 4950);
        for i in [0, 42, 99] {
            assert_eq!(t.keys_of(i).count(), 99);
        }
        let mut secrets: Vec<[u8; 32]> = t.keys.values().map(|k| *k.secret()).collect();
        secrets.sort_unstable();
        secrets.dedup();
        assert_eq!(secrets.len(), 4950);
    }

    #[test]
    fn master_secret_changes_keys() {
        let a = establish_pairwise_keys(&[0, 1], b"a").unwrap();
        let b = establish_pairwise_keys(&[0, 1], b"b").unwrap();
        assert_ne!(a.key(0, 1).unwrap().secret(), b.key(0, 1).unwrap().secret());
    }
}
