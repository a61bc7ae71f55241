//! Cluster rounds between meters and the aggregator, failure injection, and
//! the success probabilities of the collusion and lying-supplier attacks.

use alloc::collections::BTreeSet;
use alloc::vec::Vec;

use rand::{Rng, RngCore};

use crate::error::{invalid, Error, ProtocolFailure, Result};
use crate::math::pow;
use crate::noise::{calibrate_lambda, GammaShareParams, LaplaceScale, ShareSampler};
use crate::rng::{stream, Domain};
use crate::secure_agg::wire::{Record, Transcript};
use crate::secure_agg::{
    aggregate_decrypt, aggregate_simple, dummy_keys, dummy_nonce, encrypt_share, establish_pairwise_keys,
    keystream, recovery_response, select_participants, selection_nonce, unmask_sum, FixedPointCodec, KeyTable,
    KeystreamTable, MeterCiphertext, Modulus, RecoveryResponse,
};

/// Which encryption the meters run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    /// Secret random key `C_i` in every ciphertext and a recovery round in
    /// every slot.
    Robust,
    /// No `C_i`; a second round only happens when somebody is missing, and
    /// then participants answer with bare dummy keys.
    Simple,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClusterConfig {
    size: u32,
    tolerated: u32,
    w: f64,
    epsilon: f64,
    slot_minutes: u32,
    codec: FixedPointCodec,
    modulus: Modulus,
    variant: Variant,
}

impl ClusterConfig {
    pub fn new(
        size: u32,
        tolerated: u32,
        w: f64,
        epsilon: f64,
        slot_minutes: u32,
        codec: FixedPointCodec,
        variant: Variant,
    ) -> Result<Self> {
        if size < 2 {
            return Err(invalid("size", "a cluster needs at least two meters"));
        }
        if tolerated >= size {
            return Err(invalid("tolerated", "must be smaller than the cluster size"));
        }
        if !(w > 0.0 && w <= (size - 1) as f64) {
            return Err(invalid("w", "must satisfy 0 < w <= N-1"));
        }
        if !(epsilon.is_finite() && epsilon > 0.0) {
            return Err(invalid("epsilon", "must be positive and finite"));
        }
        if slot_minutes == 0 {
            return Err(invalid("slot_minutes", "must be at least 1"));
        }
        let modulus = codec.modulus(size)?;
        Ok(ClusterConfig {
            size,
            tolerated,
            w,
            epsilon,
            slot_minutes,
            codec,
            modulus,
            variant,
        })
    }

    pub fn size(&self) -> u32 {
        self.size
    }

    pub fn tolerated(&self) -> u32 {
        self.tolerated
    }

    pub fn alpha(&self) -> f64 {
        self.tolerated as f64 / self.size as f64
    }

    /// Number of pieces the Laplace noise is split into, `N - M`.
    pub fn shares(&self) -> u32 {
        self.size - self.tolerated
    }

    pub fn w(&self) -> f64 {
        self.w
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn slot_minutes(&self) -> u32 {
        self.slot_minutes
    }

    pub fn codec(&self) -> &FixedPointCodec {
        &self.codec
    }

    pub fn modulus(&self) -> Modulus {
        self.modulus
    }

    pub fn variant(&self) -> Variant {
        self.variant
    }

    /// `λ = S/ε` for a slot whose largest single contribution is `sensitivity`.
    pub fn lambda_for(&self, sensitivity: f64) -> Result<LaplaceScale> {
        calibrate_lambda(sensitivity, self.epsilon)
    }
}

/// Everything that varies from one slot to the next.
#[derive(Debug, Clone, Default)]
pub struct RoundInput {
    pub slot: u32,
    /// Reading of node `i` at index `i`.
    pub measurements: Vec<f64>,
    /// `None` disables the noise shares.
    pub lambda: Option<LaplaceScale>,
    /// Nodes that send nothing in this slot.
    pub failures: BTreeSet<u32>,
    /// Nodes that send a ciphertext but die before the recovery round.
    pub inter_round_deaths: BTreeSet<u32>,
    /// Live nodes the aggregator falsely announces as missing.
    pub claimed_missing: BTreeSet<u32>,
}

/// What one meter did in a round.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NodeReading {
    pub node: u32,
    pub measurement: f64,
    pub noisy: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoundResult {
    pub slot: u32,
    /// Decoded aggregate, `NaN` when the round failed.
    pub recovered_noisy_sum: f64,
    pub recovered_encoded: Option<i128>,
    /// Sum of the true readings of the nodes that sent a ciphertext.
    pub true_sum: f64,
    pub live_count: u32,
    pub messages_round1: u32,
    pub messages_round2: u32,
    pub broadcasts: u32,
    pub failure: Option<ProtocolFailure>,
    /// Readings of the nodes that sent a ciphertext, in id order.
    pub readings: Vec<NodeReading>,
}

impl RoundResult {
    pub fn failed(&self) -> bool {
        self.failure.is_some()
    }

    /// `recovered - true`, `NaN` when the round failed.
    pub fn error(&self) -> f64 {
        self.recovered_noisy_sum - self.true_sum
    }
}

/// A cluster with node ids `0..N` and its keys, reusable across slots.
#[derive(Debug, Clone)]
pub struct ClusterSession {
    config: ClusterConfig,
    master_seed: u64,
    nodes: Vec<u32>,
    keys: KeyTable,
    keystreams: KeystreamTable,
}

impl ClusterSession {
    pub fn new(config: ClusterConfig, master_seed: u64) -> Result<Self> {
        let nodes: Vec<u32> = (0..config.size).collect();
        let secret = master_seed.to_le_bytes();
        let keys = establish_pairwise_keys(&nodes, &secret)?;
        let keystreams = KeystreamTable::new(&nodes, &secret)?;
        Ok(ClusterSession {
            config,
            master_seed,
            nodes,
            keys,
            keystreams,
        })
    }

    pub fn config(&self) -> &ClusterConfig {
        &self.config
    }

    pub fn keys(&self) -> &KeyTable {
        &self.keys
    }

    pub fn keystreams(&self) -> &KeystreamTable {
        &self.keystreams
    }

    /// Participants of node `i` in `slot`.
    pub fn participants(&self, i: u32, slot: u32) -> Result<Vec<u32>> {
        select_participants(i, &self.keys, selection_nonce(slot), self.config.w, self.config.size)
    }

    /// `K'_i` for `slot`, known to node `i` and the aggregator.
    pub fn keystream(&self, i: u32, slot: u32) -> Result<u64> {
        Ok(keystream(self.keystreams.prf(i)?, slot, self.config.modulus))
    }

    /// Secret random key `C_i` and noisy reading of node `i`, both drawn from
    /// the node's private stream for `slot`.
    fn node_draws(&self, i: u32, slot: u32, x: f64, sampler: Option<&ShareSampler>) -> (f64, u64) {
        let mut rng = stream(self.master_seed, Domain::Node, slot as u64, i as u64);
        let share = sampler.map_or(0.0, |s| s.share(&mut rng));
        let c = rng.next_u64() & self.config.modulus.mask();
        (x + share, c)
    }

    fn check_ids(&self, set: &BTreeSet<u32>) -> Result<()> {
        match set.iter().find(|&&i| i >= self.config.size) {
            Some(&i) => Err(Error::UnknownNode(i)),
            None => Ok(()),
        }
    }

    pub fn run_round(&self, input: &RoundInput) -> Result<RoundResult> {
        self.run_round_recorded(input, None)
    }

    /// Runs one slot. Messages are appended to `transcript` in the order they
    /// are sent.
    pub fn run_round_recorded(&self, input: &RoundInput, mut transcript: Option<&mut Transcript>) -> Result<RoundResult> {
        let cfg = &self.config;
        let m = cfg.modulus;
        if input.measurements.len() != cfg.size as usize {
            return Err(invalid("measurements", "need one reading per cluster member"));
        }
        self.check_ids(&input.failures)?;
        self.check_ids(&input.inter_round_deaths)?;
        self.check_ids(&input.claimed_missing)?;
        let sampler = match input.lambda {
            Some(l) => Some(ShareSampler::new(GammaShareParams::new(cfg.shares(), l)?)),
            None => None,
        };
        let slot = input.slot;
        let r1 = selection_nonce(slot);
        let r2 = dummy_nonce(slot);

        // Round 1: every live meter encrypts its noisy reading.
        let mut cts = Vec::new();
        let mut readings = Vec::new();
        let mut secret_keys = Vec::new();
        let mut participants = Vec::new();
        let mut keystream_sum = 0u64;
        for &i in &self.nodes {
            if input.failures.contains(&i) {
                continue;
            }
            let x = input.measurements[i as usize];
            let (noisy, c) = self.node_draws(i, slot, x, sampler.as_ref());
            let c = if cfg.variant == Variant::Robust { c } else { 0 };
            let peers = select_participants(i, &self.keys, r1, cfg.w, cfg.size)?;
            let dummies = dummy_keys(i, &peers, &self.keys, r2, m)?;
            let ks = self.keystream(i, slot)?;
            let ct = encrypt_share(i, slot, noisy, ks, &dummies, c, &cfg.codec, m)?;
            if let Some(t) = transcript.as_deref_mut() {
                t.records.push(Record::Ciphertext(ct));
            }
            keystream_sum = m.add(keystream_sum, ks);
            cts.push(ct);
            readings.push(NodeReading {
                node: i,
                measurement: x,
                noisy,
            });
            secret_keys.push(c);
            participants.push(peers);
        }
        let true_sum = readings.iter().map(|r| r.measurement).sum();
        let live_count = cts.len() as u32;
        let mut result = RoundResult {
            slot,
            recovered_noisy_sum: f64::NAN,
            recovered_encoded: None,
            true_sum,
            live_count,
            messages_round1: live_count,
            messages_round2: 0,
            broadcasts: 0,
            failure: None,
            readings,
        };

        let announced: BTreeSet<u32> = input.failures.union(&input.claimed_missing).copied().collect();
        if cfg.variant == Variant::Simple && announced.is_empty() {
            match aggregate_simple(&cts, keystream_sum, &cfg.codec, m) {
                Ok(d) => {
                    result.recovered_encoded = Some(d.encoded);
                    result.recovered_noisy_sum = d.value;
                }
                Err(e) => result.failure = Some(protocol_failure(e)?),
            }
            return Ok(result);
        }

        // The aggregator announces who it considers missing.
        result.broadcasts = 1;
        if let Some(t) = transcript.as_deref_mut() {
            t.records.push(Record::Broadcast {
                slot,
                missing: announced.iter().copied().collect(),
            });
        }
        if cfg.variant == Variant::Robust && announced.len() > cfg.tolerated as usize {
            // Meters refuse: the surviving shares would carry too little noise.
            result.failure = Some(ProtocolFailure::TooManyFailures {
                missing: announced.len(),
                tolerated: cfg.tolerated as usize,
            });
            return Ok(result);
        }

        // Round 2: recovery responses from every node still alive and not
        // announced as missing.
        let mut responses = Vec::new();
        for (idx, ct) in cts.iter().enumerate() {
            let i = ct.sender;
            if input.inter_round_deaths.contains(&i) || announced.contains(&i) {
                continue;
            }
            let r = recovery_response(i, slot, &announced, &participants[idx], &self.keys, r2, secret_keys[idx], m)?;
            if let Some(t) = transcript.as_deref_mut() {
                t.records.push(Record::Response(r));
            }
            responses.push(r);
        }
        result.messages_round2 = responses.len() as u32;

        let decrypted = match cfg.variant {
            Variant::Robust => {
                let counted: Vec<MeterCiphertext> =
                    cts.iter().copied().filter(|c| !input.claimed_missing.contains(&c.sender)).collect();
                let ks_sum = counted
                    .iter()
                    .try_fold(0u64, |acc, c| Ok::<_, Error>(m.add(acc, self.keystream(c.sender, slot)?)))?;
                aggregate_decrypt(&counted, &responses, ks_sum, &cfg.codec, m)
            }
            Variant::Simple => simple_recovery(&cts, &responses, &input.claimed_missing, slot, self, m),
        };
        match decrypted {
            Ok(d) => {
                result.recovered_encoded = Some(d.encoded);
                result.recovered_noisy_sum = d.value;
            }
            Err(e) => result.failure = Some(protocol_failure(e)?),
        }
        Ok(result)
    }
}

impl ClusterSession {
    /// Decrypts a recorded slot from its messages alone, as the aggregator
    /// would: ciphertexts of announced nodes are dropped and the keystreams
    /// of the remaining senders removed.
    pub fn replay(&self, transcript: &Transcript) -> Result<crate::secure_agg::Decryption> {
        let m = self.config.modulus;
        if transcript.modulus != m {
            return Err(invalid("transcript", "recorded under a different modulus"));
        }
        let mut cts = Vec::new();
        let mut responses = Vec::new();
        let mut announced: Option<BTreeSet<u32>> = None;
        for r in &transcript.records {
            match r {
                Record::Ciphertext(c) => cts.push(*c),
                Record::Response(r) => responses.push(*r),
                Record::Broadcast { missing, .. } => {
                    if announced.replace(missing.iter().copied().collect()).is_some() {
                        return Err(Error::Malformed("more than one broadcast in a slot"));
                    }
                }
            }
        }
        let slot = cts.first().ok_or(Error::Malformed("transcript holds no ciphertext"))?.slot;
        let missing = announced.clone().unwrap_or_default();
        let counted: Vec<MeterCiphertext> = cts.into_iter().filter(|c| !missing.contains(&c.sender)).collect();
        let mut ks_sum = 0;
        for c in &counted {
            ks_sum = m.add(ks_sum, self.keystream(c.sender, slot)?);
        }
        let codec = &self.config.codec;
        match (self.config.variant, announced) {
            (Variant::Robust, _) => aggregate_decrypt(&counted, &responses, ks_sum, codec, m),
            (Variant::Simple, None) => aggregate_simple(&counted, ks_sum, codec, m),
            (Variant::Simple, Some(_)) => unmask_sum(&counted, &responses, ks_sum, codec, m),
        }
    }
}

fn protocol_failure(e: Error) -> Result<ProtocolFailure> {
    match e {
        Error::Protocol(p) => Ok(p),
        other => Err(other),
    }
}

fn simple_recovery(
    cts: &[MeterCiphertext],
    responses: &[RecoveryResponse],
    claimed: &BTreeSet<u32>,
    slot: u32,
    session: &ClusterSession,
    m: Modulus,
) -> Result<crate::secure_agg::Decryption> {
    let counted: Vec<MeterCiphertext> = cts.iter().copied().filter(|c| !claimed.contains(&c.sender)).collect();
    let mut ks_sum = 0;
    for c in &counted {
        ks_sum = m.add(ks_sum, session.keystream(c.sender, slot)?);
    }
    unmask_sum(&counted, responses, ks_sum, session.config.codec(), m)
}

/// Convenience wrapper: a fresh session for `master_seed` and one round.
pub fn run_round(
    config: ClusterConfig,
    measurements: &[f64],
    failures: &BTreeSet<u32>,
    lambda: Option<LaplaceScale>,
    master_seed: u64,
) -> Result<RoundResult> {
    let session = ClusterSession::new(config, master_seed)?;
    session.run_round(&RoundInput {
        slot: 0,
        measurements: measurements.to_vec(),
        lambda,
        failures: failures.clone(),
        ..RoundInput::default()
    })
}

fn selection_base(n: u32, w: f64) -> Result<f64> {
    if n < 2 {
        return Err(invalid("n", "needs at least two nodes"));
    }
    if !(w > 0.0 && w <= (n - 1) as f64) {
        return Err(invalid("w", "must satisfy 0 < w <= N-1"));
    }
    Ok((1.0 - w / (n - 1) as f64).max(0.0))
}

/// Probability that all participants of an honest node are among `T`
/// colluders: `(1 - w/(N-1))^{N-T-1}`.
pub fn collusion_success_prob(n: u32, t: u32, w: f64) -> Result<f64> {
    if t >= n {
        return Err(invalid("t", "must be smaller than the cluster size"));
    }
    Ok(pow(selection_base(n, w)?, (n - t - 1) as f64))
}

/// Probability of compromising one node in `k` given slots,
/// `(1 - w/(N-1))^{k(N-T-1)}`.
pub fn k_slot_compromise_prob(n: u32, t: u32, w: f64, k: u32) -> Result<f64> {
    if k == 0 {
        return Err(invalid("k", "must be at least 1"));
    }
    if t >= n {
        return Err(invalid("t", "must be smaller than the cluster size"));
    }
    Ok(pow(selection_base(n, w)?, k as f64 * (n - t - 1) as f64))
}

/// Upper bound on the success of a supplier that colludes with `T` nodes and
/// falsely claims `M` nodes missing: `(1 - w/(N-1))^{N-(T+M)-1}`.
pub fn lying_supplier_success_prob(n: u32, t: u32, m: u32, w: f64) -> Result<f64> {
    if t as u64 + m as u64 >= n as u64 {
        return Err(invalid("m", "T + M must be smaller than the cluster size"));
    }
    Ok(pow(selection_base(n, w)?, (n - t - m - 1) as f64))
}

/// The same bound with `α = (T+M)/N` and `β = w/N`:
/// `(1 - β/(1 - 1/N))^{N(1-α)-1}`.
pub fn lying_supplier_success_prob_reparam(n: u32, alpha: f64, beta: f64) -> Result<f64> {
    if n < 2 {
        return Err(invalid("n", "needs at least two nodes"));
    }
    if !(0.0..1.0).contains(&alpha) {
        return Err(invalid("alpha", "must lie in [0, 1)"));
    }
    let nf = n as f64;
    if !(beta > 0.0 && beta * nf <= nf - 1.0 + 1e-9) {
        return Err(invalid("beta", "must satisfy 0 < beta*N <= N-1"));
    }
    let base = (1.0 - beta / (1.0 - 1.0 / nf)).max(0.0);
    Ok(pow(base, nf * (1.0 - alpha) - 1.0))
}

/// Number of slots of `slot_minutes` in a 365-day year.
pub fn slots_per_year(slot_minutes: u32) -> f64 {
    365.0 * 24.0 * 60.0 / slot_minutes as f64
}

/// Expected years until the first compromised slot when each slot succeeds
/// independently with probability `p`.
pub fn expected_years_to_compromise(p: f64, slot_minutes: u32) -> f64 {
    1.0 / (p * slots_per_year(slot_minutes))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AdversaryMode {
    HonestButCurious,
    DishonestNonIntrusive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AdversaryConfig {
    malicious: u32,
    claimable: u32,
    mode: AdversaryMode,
}

impl AdversaryConfig {
    /// An honest-but-curious supplier never lies about failures, so its
    /// claimable budget is forced to zero.
    pub fn new(malicious: u32, claimable: u32, mode: AdversaryMode) -> Self {
        let claimable = match mode {
            AdversaryMode::HonestButCurious => 0,
            AdversaryMode::DishonestNonIntrusive => claimable,
        };
        AdversaryConfig {
            malicious,
            claimable,
            mode,
        }
    }

    pub fn malicious(&self) -> u32 {
        self.malicious
    }

    pub fn claimable(&self) -> u32 {
        self.claimable
    }

    pub fn mode(&self) -> AdversaryMode {
        self.mode
    }
}

/// Result of an attack simulation.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct AttackEstimate {
    pub trials: u64,
    pub successes: u64,
}

impl AttackEstimate {
    pub fn rate(&self) -> f64 {
        self.successes as f64 / self.trials as f64
    }

    /// Binomial standard error of `rate`, using `p` as the true rate.
    pub fn std_error(&self, p: f64) -> f64 {
        crate::math::sqrt(p * (1.0 - p) / self.trials as f64)
    }

    pub fn merge(self, other: AttackEstimate) -> AttackEstimate {
        AttackEstimate {
            trials: self.trials + other.trials,
            successes: self.successes + other.successes,
        }
    }
}

fn check_adversary(n: u32, w: f64, adversary: &AdversaryConfig) -> Result<()> {
    selection_base(n, w)?;
    if adversary.malicious >= n {
        return Err(invalid("malicious", "must be smaller than the cluster size"));
    }
    if adversary.malicious as u64 + adversary.claimable as u64 >= n as u64 {
        return Err(invalid("claimable", "T + M must be smaller than the cluster size"));
    }
    Ok(())
}

/// Selection-only attack simulation. In each trial the target draws its
/// participants independently with probability `w/(N-1)`; the supplier wins
/// when every participant is malicious or claimed missing, i.e. when none of
/// the `N - T - M - 1` remaining honest nodes is drawn.
///
/// The supplier cannot see the selection, so which honest nodes it claims
/// missing is independent of it and labels can be fixed without changing the
/// distribution. A trial stops at the first honest participant.
pub fn simulate_attack<R: Rng + ?Sized>(
    n: u32,
    w: f64,
    adversary: &AdversaryConfig,
    trials: u64,
    rng: &mut R,
) -> Result<AttackEstimate> {
    check_adversary(n, w, adversary)?;
    if trials == 0 {
        return Err(invalid("trials", "must be at least 1"));
    }
    let honest_unclaimed = n - adversary.malicious - adversary.claimable - 1;
    let p = w / (n - 1) as f64;
    let threshold = if p >= 1.0 {
        None
    } else {
        Some((p * 18_446_744_073_709_551_616.0) as u64)
    };
    let mut successes = 0;
    for _ in 0..trials {
        let exposed = match threshold {
            None => honest_unclaimed == 0,
            Some(t) => (0..honest_unclaimed).all(|_| rng.next_u64() >= t),
        };
        successes += exposed as u64;
    }
    Ok(AttackEstimate { trials, successes })
}

/// Attack simulation against the real selection PRF of `session`: for each
/// slot in `slots`, the target is node 0, nodes `1..=T` are malicious and the
/// next `M` nodes are the ones claimed missing.
pub fn simulate_attack_protocol(
    session: &ClusterSession,
    adversary: &AdversaryConfig,
    slots: core::ops::Range<u32>,
) -> Result<AttackEstimate> {
    let n = session.config.size;
    check_adversary(n, session.config.w, adversary)?;
    let covered = adversary.malicious + adversary.claimable;
    let mut est = AttackEstimate {
        trials: 0,
        successes: 0,
    };
    for slot in slots {
        let parts = session.participants(0, slot)?;
        est.trials += 1;
        est.successes += parts.iter().all(|&j| j <= covered) as u64;
    }
    if est.trials == 0 {
        return Err(invalid("slots", "must not be empty"));
    }
    Ok(est)
}
