use std::collections::BTreeSet;
use std::fs;
use std::path::PathBuf;

use rand::seq::index::sample;
use rand::Rng;
use rayon::prelude::*;

use dpmeter_core::clustering::tolerated_failures;
use dpmeter_core::error::ProtocolFailure;
use dpmeter_core::noise::calibrate_lambda;
use dpmeter_core::protocol::{
    collusion_success_prob, expected_years_to_compromise, lying_supplier_success_prob, simulate_attack,
    AdversaryConfig, AdversaryMode, AttackEstimate, ClusterConfig, ClusterSession, RoundInput, RoundResult, Variant,
};
use dpmeter_core::rng::{splitmix64, stream, Domain};
use dpmeter_core::secure_agg::wire::Transcript;
use dpmeter_core::secure_agg::{FixedPointCodec, DEFAULT_SCALE};

use crate::config::{AttackCase, ExperimentConfig, VariantName};
use crate::error::{CliError, Result};
use crate::report::{num, CsvReport, Meta};

/// Success probability the original analysis reports for `(N, T, w) =
/// (100, 50, 30)`; the formula gives about 2.08e-8.
pub const REPORTED_COLLUSION_100_50_30: f64 = 1.8e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct RoundRow {
    pub n: u32,
    pub tolerated: u32,
    pub failures: u32,
    pub deaths: u32,
    pub result: RoundResult,
    /// Σ of the live meters' encoded noisy readings.
    pub expected_encoded: i128,
}

impl RoundRow {
    /// Whether the round kept its guarantee: decrypted exactly, or failed
    /// only because a meter died between the two rounds.
    pub fn exact(&self) -> bool {
        self.result.recovered_encoded == Some(self.expected_encoded)
    }

    pub fn outcome(&self) -> &'static str {
        match &self.result.failure {
            None if self.exact() => "exact",
            None => "wrong_sum",
            Some(ProtocolFailure::MissingResponse(_)) => "missing_response",
            Some(ProtocolFailure::TooManyFailures { .. }) => "too_many_failures",
            Some(ProtocolFailure::UnexpectedResponse(_)) => "unexpected_response",
            Some(ProtocolFailure::SlotMismatch { .. }) => "slot_mismatch",
            Some(ProtocolFailure::Implausible(_)) => "implausible",
        }
    }

    /// A round without deaths that did not decrypt to the expected sum.
    pub fn violation(&self) -> bool {
        self.deaths == 0 && !self.exact()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AttackRow {
    pub case: AttackCase,
    pub mode: AdversaryMode,
    pub closed_form: f64,
    pub estimate: AttackEstimate,
    pub reported: Option<f64>,
    pub years: f64,
}

impl AttackRow {
    pub fn std_error(&self) -> f64 {
        self.estimate.std_error(self.closed_form)
    }

    /// Distance between estimate and closed form in standard errors; zero
    /// when both are exactly zero.
    pub fn z(&self) -> f64 {
        let d = self.estimate.rate() - self.closed_form;
        let se = self.std_error();
        if se == 0.0 {
            if d == 0.0 {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            d / se
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct ProtocolCheck {
    pub rounds: Vec<RoundRow>,
    pub attacks: Vec<AttackRow>,
    pub transcripts: Vec<(u32, PathBuf, bool)>,
}

impl ProtocolCheck {
    pub fn violations(&self) -> usize {
        self.rounds.iter().filter(|r| r.violation()).count()
    }
}

pub fn cluster_config(cfg: &ExperimentConfig, n: u32) -> Result<ClusterConfig> {
    let p = &cfg.protocol;
    let m = tolerated_failures(n, p.alpha)?;
    let lambda_max = p.max_watts / cfg.epsilon;
    let codec = FixedPointCodec::with_headroom(DEFAULT_SCALE, n, p.max_watts, lambda_max)?;
    let variant = match p.variant {
        VariantName::Robust => Variant::Robust,
        VariantName::Simple => Variant::Simple,
    };
    Ok(ClusterConfig::new(n, m, p.w.min((n - 1) as f64), cfg.epsilon, cfg.slot_minutes, codec, variant)?)
}

/// One random slot: readings uniform in `[0, max_watts)`, a uniform number
/// of failures up to `M`, and with probability `death_rate` one meter lost
/// between the rounds.
pub fn random_input(cfg: &ExperimentConfig, session: &ClusterSession, slot: u32) -> Result<RoundInput> {
    let c = session.config();
    let (n, m) = (c.size(), c.tolerated());
    let mut rng = stream(cfg.seed, Domain::Scenario, n as u64, slot as u64);
    let measurements: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..cfg.protocol.max_watts)).collect();
    let sensitivity = measurements.iter().copied().fold(0.0, f64::max);
    let lambda = calibrate_lambda(sensitivity.max(1.0), cfg.epsilon)?;
    let k = rng.random_range(0..=m) as usize;
    let failures: BTreeSet<u32> = sample(&mut rng, n as usize, k).iter().map(|i| i as u32).collect();
    let mut deaths = BTreeSet::new();
    if rng.random::<f64>() < cfg.protocol.death_rate {
        let live: Vec<u32> = (0..n).filter(|i| !failures.contains(i)).collect();
        deaths.insert(live[rng.random_range(0..live.len())]);
    }
    Ok(RoundInput {
        slot,
        measurements,
        lambda: Some(lambda),
        failures,
        inter_round_deaths: deaths,
        ..Default::default()
    })
}

fn evaluate(session: &ClusterSession, input: &RoundInput, result: RoundResult) -> Result<RoundRow> {
    let c = session.config();
    let expected_encoded = result
        .readings
        .iter()
        .map(|r| c.codec().encode(r.noisy).map(i128::from))
        .sum::<dpmeter_core::Result<i128>>()?;
    Ok(RoundRow {
        n: c.size(),
        tolerated: c.tolerated(),
        failures: input.failures.len() as u32,
        deaths: input.inter_round_deaths.len() as u32,
        result,
        expected_encoded,
    })
}

fn random_round(cfg: &ExperimentConfig, session: &ClusterSession, slot: u32) -> Result<RoundRow> {
    let input = random_input(cfg, session, slot)?;
    let result = session.run_round(&input)?;
    evaluate(session, &input, result)
}

/// Session keys for cluster size `n`.
pub fn session_for(cfg: &ExperimentConfig, n: u32) -> Result<ClusterSession> {
    Ok(ClusterSession::new(cluster_config(cfg, n)?, splitmix64(cfg.seed ^ ((n as u64) << 32)))?)
}

pub fn rounds(cfg: &ExperimentConfig, n: u32, count: u32) -> Result<Vec<RoundRow>> {
    let session = session_for(cfg, n)?;
    (0..count).into_par_iter().map(|slot| random_round(cfg, &session, slot)).collect()
}

pub fn attack(cfg: &ExperimentConfig, case: AttackCase, index: usize) -> Result<AttackRow> {
    let mode = if case.claimable == 0 {
        AdversaryMode::HonestButCurious
    } else {
        AdversaryMode::DishonestNonIntrusive
    };
    let adv = AdversaryConfig::new(case.t, case.claimable, mode);
    let closed_form = match mode {
        AdversaryMode::HonestButCurious => collusion_success_prob(case.n, case.t, case.w)?,
        AdversaryMode::DishonestNonIntrusive => lying_supplier_success_prob(case.n, case.t, case.claimable, case.w)?,
    };
    // Independent chunks so the estimate does not depend on thread count.
    const CHUNK: u64 = 1 << 16;
    let chunks = cfg.trials.div_ceil(CHUNK);
    let estimate = (0..chunks)
        .into_par_iter()
        .map(|k| {
            let trials = CHUNK.min(cfg.trials - k * CHUNK);
            let mut rng = stream(cfg.seed, Domain::Attack, 1 << 40 | index as u64, k);
            simulate_attack(case.n, case.w, &adv, trials, &mut rng)
        })
        .collect::<dpmeter_core::Result<Vec<_>>>()?
        .into_iter()
        .reduce(AttackEstimate::merge)
        .unwrap_or_default();
    let reported = (case.n == 100 && case.t == 50 && case.w == 30.0 && case.claimable == 0).then_some(REPORTED_COLLUSION_100_50_30);
    Ok(AttackRow {
        case,
        mode,
        closed_form,
        estimate,
        reported,
        years: expected_years_to_compromise(closed_form, cfg.attack.slot_minutes),
    })
}

pub fn check(cfg: &ExperimentConfig) -> Result<ProtocolCheck> {
    let mut out = ProtocolCheck::default();
    for &n in &cfg.protocol.sizes {
        out.rounds.extend(rounds(cfg, n, cfg.protocol.rounds)?);
    }
    for (i, &case) in cfg.attack.cases.iter().enumerate() {
        out.attacks.push(attack(cfg, case, i)?);
    }
    Ok(out)
}

/// Records slot 0 for cluster size `n`, writes it and checks that the
/// replayed file decrypts to what the live run produced.
pub fn record_transcript(cfg: &ExperimentConfig, n: u32) -> Result<(PathBuf, bool)> {
    let session = session_for(cfg, n)?;
    let input = random_input(cfg, &session, 0)?;
    let mut t = Transcript::new(session.config().modulus());
    let live = session.run_round_recorded(&input, Some(&mut t))?;
    let path = cfg.out.join("transcripts").join(format!("cluster_{n}_slot_0.dpmt"));
    crate::report::create_parent(&path)?;
    fs::write(&path, t.to_bytes()).map_err(CliError::io(&path))?;
    let back = Transcript::from_bytes(&fs::read(&path).map_err(CliError::io(&path))?)?;
    let replayed = session.replay(&back).ok().map(|d| d.encoded);
    Ok((path, replayed == live.recovered_encoded))
}

fn mode_name(m: AdversaryMode) -> &'static str {
    match m {
        AdversaryMode::HonestButCurious => "honest_but_curious",
        AdversaryMode::DishonestNonIntrusive => "dishonest_non_intrusive",
    }
}

pub fn write(cfg: &ExperimentConfig, check: &ProtocolCheck) -> Result<Vec<PathBuf>> {
    let meta = Meta::of(cfg);
    let mut paths = Vec::new();
    let mut w = CsvReport::create(
        cfg.out.join("protocol_rounds.csv"),
        &meta,
        &[],
        &[
            "n", "slot", "tolerated", "failures", "deaths", "live_count", "true_sum", "noisy_sum", "abs_error",
            "relative_error", "exact", "outcome", "messages_round1", "messages_round2",
        ],
    )?;
    for r in &check.rounds {
        let res = &r.result;
        let err = res.error();
        w.row([
            r.n.to_string(),
            res.slot.to_string(),
            r.tolerated.to_string(),
            r.failures.to_string(),
            r.deaths.to_string(),
            res.live_count.to_string(),
            num(res.true_sum),
            num(res.recovered_noisy_sum),
            num(err.abs()),
            num(err.abs() / (res.true_sum + 1.0)),
            r.exact().to_string(),
            r.outcome().into(),
            res.messages_round1.to_string(),
            res.messages_round2.to_string(),
        ])?;
    }
    paths.push(w.finish()?);

    let mut w = CsvReport::create(
        cfg.out.join("protocol_summary.csv"),
        &meta,
        &[],
        &["n", "rounds", "exact", "death_failures", "violations", "transcript_replayed"],
    )?;
    for &n in &cfg.protocol.sizes {
        let rows: Vec<&RoundRow> = check.rounds.iter().filter(|r| r.n == n).collect();
        let replay = check
            .transcripts
            .iter()
            .find(|t| t.0 == n)
            .map_or("not_recorded".to_string(), |t| t.2.to_string());
        w.row([
            n.to_string(),
            rows.len().to_string(),
            rows.iter().filter(|r| r.exact()).count().to_string(),
            rows.iter().filter(|r| r.deaths > 0 && !r.exact()).count().to_string(),
            rows.iter().filter(|r| r.violation()).count().to_string(),
            replay,
        ])?;
    }
    paths.push(w.finish()?);

    let notes = vec![format!(
        "reported_probability is the figure published for (100, 50, 30); the closed form gives {:.3e}",
        collusion_success_prob(100, 50, 30.0)?
    )];
    let mut w = CsvReport::create(
        cfg.out.join("protocol_attacks.csv"),
        &meta,
        &notes,
        &[
            "n", "t", "w", "claimable", "mode", "closed_form", "empirical", "trials", "successes", "std_error", "z",
            "reported_probability", "years_to_compromise", "slot_minutes",
        ],
    )?;
    for a in &check.attacks {
        w.row([
            a.case.n.to_string(),
            a.case.t.to_string(),
            num(a.case.w),
            a.case.claimable.to_string(),
            mode_name(a.mode).into(),
            num(a.closed_form),
            num(a.estimate.rate()),
            a.estimate.trials.to_string(),
            a.estimate.successes.to_string(),
            num(a.std_error()),
            num(a.z()),
            a.reported.map_or(String::new(), num),
            num(a.years),
            cfg.attack.slot_minutes.to_string(),
        ])?;
    }
    paths.push(w.finish()?);
    Ok(paths)
}

pub fn run(cfg: &ExperimentConfig) -> Result<(ProtocolCheck, Vec<PathBuf>)> {
    let mut c = check(cfg)?;
    if cfg.protocol.transcript {
        for &n in &cfg.protocol.sizes {
            let (path, ok) = record_transcript(cfg, n)?;
            c.transcripts.push((n, path, ok));
        }
    }
    let paths = write(cfg, &c)?;
    Ok((c, paths))
}
