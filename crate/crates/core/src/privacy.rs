//! Privacy accounting over slots and windows, and adversaries that try to
//! locate an appliance's switch-on slot in a noisy series.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::Range;

use rand::Rng;

use crate::error::{invalid, Error, Result};
use crate::math::{abs, exp, log};
use crate::noise::{open01, sample_laplace, LaplaceScale};

/// `ε(t) = x/λ(t)`.
pub fn slot_epsilon(x: f64, lambda: f64) -> Result<f64> {
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(invalid("lambda", "must be positive and finite"));
    }
    Ok(x / lambda)
}

/// Sensitivity of releasing one sum per slot: the largest total a single
/// user contributes over all slots, `max_i Σ_t X_t^i`.
pub fn user_sensitivity(rows: &[&[f64]]) -> f64 {
    rows.iter().map(|r| r.iter().sum::<f64>()).fold(0.0, f64::max)
}

/// `Σ ε(t)` over the `s` slots starting at `start`.
pub fn window_epsilon(series: &[f64], lambdas: &[f64], s: usize, start: usize) -> Result<f64> {
    Ok(window_contributions(series, lambdas, s, start)?.iter().sum())
}

fn window_contributions(series: &[f64], lambdas: &[f64], s: usize, start: usize) -> Result<Vec<f64>> {
    if series.len() != lambdas.len() {
        return Err(invalid("lambdas", "need one scale per slot"));
    }
    if s == 0 {
        return Ok(Vec::new());
    }
    if start.checked_add(s).is_none_or(|end| end > series.len()) {
        return Err(invalid("start", "window runs past the series"));
    }
    (start..start + s).map(|t| slot_epsilon(series[t], lambdas[t])).collect()
}

/// Privacy spent on one subject over a window.
#[derive(Debug, Clone, PartialEq)]
pub struct EpsilonReport {
    pub start: usize,
    pub window: usize,
    pub epsilon: f64,
    pub contributions: Vec<f64>,
}

/// How much the noisy aggregate reveals about an appliance having run in
/// the window `[start, start + s)`.
pub fn presence_epsilon(component: &[f64], lambdas: &[f64], start: usize, s: usize) -> Result<EpsilonReport> {
    let contributions = window_contributions(component, lambdas, s, start)?;
    Ok(EpsilonReport {
        start,
        window: s,
        epsilon: contributions.iter().sum(),
        contributions,
    })
}

/// Worst window: the largest `ε_s` over all `s`-slot windows of the series.
/// A series shorter than `s` counts as a single window.
pub fn max_window_epsilon(series: &[f64], lambdas: &[f64], s: usize) -> Result<EpsilonReport> {
    if series.len() != lambdas.len() {
        return Err(invalid("lambdas", "need one scale per slot"));
    }
    let s = s.min(series.len());
    let eps = series
        .iter()
        .zip(lambdas)
        .map(|(&x, &l)| slot_epsilon(x, l))
        .collect::<Result<Vec<_>>>()?;
    if s == 0 {
        return Ok(EpsilonReport {
            start: 0,
            window: 0,
            epsilon: 0.0,
            contributions: Vec::new(),
        });
    }
    let mut best = (0, f64::NEG_INFINITY);
    for start in 0..=series.len() - s {
        let value: f64 = eps[start..start + s].iter().sum();
        if value > best.1 {
            best = (start, value);
        }
    }
    Ok(EpsilonReport {
        start: best.0,
        window: s,
        epsilon: best.1,
        contributions: eps[best.0..best.0 + s].to_vec(),
    })
}

/// Consumption of an appliance from its first to its last active slot.
#[derive(Debug, Clone, PartialEq)]
pub struct ApplianceSignature {
    values: Vec<f64>,
    start: usize,
}

impl ApplianceSignature {
    pub fn new(values: Vec<f64>, start: usize) -> Result<Self> {
        match (values.first(), values.last()) {
            (Some(&a), Some(&b)) if a != 0.0 && b != 0.0 => Ok(ApplianceSignature { values, start }),
            _ => Err(invalid("values", "signature must start and end with a nonzero slot")),
        }
    }

    /// Cuts the signature out of a full-day series; `None` if the appliance
    /// never ran.
    pub fn from_series(slots: &[f64]) -> Option<Self> {
        let span = crate::traces::activation_span(slots)?;
        Some(ApplianceSignature {
            values: slots[span.start..=span.start + span.duration].to_vec(),
            start: span.start,
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// True start slot `t_s`.
    pub fn start(&self) -> usize {
        self.start
    }

    /// `d`: the signature spans `d + 1` slots.
    pub fn duration(&self) -> usize {
        self.values.len() - 1
    }

    /// Candidate starts in a day of `n` slots: `0..n-d`.
    pub fn candidates(&self, n: usize) -> Result<Range<usize>> {
        if self.values.len() > n {
            return Err(invalid("n", "signature longer than the series"));
        }
        Ok(0..n - self.duration())
    }
}

/// Relative frequency of each slot being the first switch-on of an
/// appliance, over a whole day.
#[derive(Debug, Clone, PartialEq)]
pub struct StartPrior {
    frequencies: Vec<f64>,
}

impl StartPrior {
    pub fn new(frequencies: Vec<f64>) -> Result<Self> {
        if frequencies.is_empty() || frequencies.iter().any(|f| !(f.is_finite() && *f >= 0.0)) {
            return Err(invalid("frequencies", "need nonnegative finite entries"));
        }
        let total: f64 = frequencies.iter().sum();
        if total <= 0.0 {
            return Err(invalid("frequencies", "must not all be zero"));
        }
        Ok(StartPrior {
            frequencies: frequencies.into_iter().map(|f| f / total).collect(),
        })
    }

    /// Empirical frequencies of `starts` over `slots` slots, with
    /// `pseudocount` added to every slot so that unseen slots keep a nonzero
    /// prior.
    pub fn from_starts(starts: &[usize], slots: usize, pseudocount: f64) -> Result<Self> {
        if !(pseudocount.is_finite() && pseudocount >= 0.0) {
            return Err(invalid("pseudocount", "must be nonnegative"));
        }
        let mut f = vec![pseudocount; slots];
        for &s in starts {
            *f.get_mut(s).ok_or(invalid("starts", "start slot out of range"))? += 1.0;
        }
        StartPrior::new(f)
    }

    pub fn uniform(slots: usize) -> Result<Self> {
        StartPrior::new(vec![1.0; slots])
    }

    pub fn frequencies(&self) -> &[f64] {
        &self.frequencies
    }
}

/// Posterior over candidate start slots `first..first + probs.len()`.
#[derive(Debug, Clone, PartialEq)]
pub struct Posterior {
    pub first: usize,
    pub probs: Vec<f64>,
}

impl Posterior {
    /// Smallest slot whose cumulative probability reaches one half.
    pub fn median(&self) -> usize {
        let mut acc = 0.0;
        for (k, p) in self.probs.iter().enumerate() {
            acc += p;
            if acc >= 0.5 {
                return self.first + k;
            }
        }
        self.first + self.probs.len() - 1
    }
}

/// Log-likelihood of each candidate start up to a constant shared by all
/// candidates. With `V^t` the signature shifted to `t`,
/// `Σ_k ln Lap(V̂_k − V^t_k; λ_k)` differs from `Σ_k ln Lap(V̂_k; λ_k)` only on
/// the signature's slots, by `Σ_j (|V̂_{t+j}| − |V̂_{t+j} − sig_j|)/λ_{t+j}`.
pub fn log_likelihoods(noisy: &[f64], sig: &[f64], lambdas: &[LaplaceScale], candidates: Range<usize>) -> Result<Vec<f64>> {
    if noisy.len() != lambdas.len() {
        return Err(invalid("lambdas", "need one scale per slot"));
    }
    if candidates.is_empty() || candidates.end + sig.len() > noisy.len() + 1 {
        return Err(invalid("candidates", "signature must fit inside the series"));
    }
    Ok(candidates
        .map(|t| {
            sig.iter()
                .enumerate()
                .map(|(j, &s)| {
                    let v = noisy[t + j];
                    (abs(v) - abs(v - s)) / lambdas[t + j].get()
                })
                .sum()
        })
        .collect())
}

/// Posterior over `candidates`, optionally weighted by a prior over all
/// slots of the day.
pub fn posterior(
    noisy: &[f64],
    sig: &[f64],
    lambdas: &[LaplaceScale],
    candidates: Range<usize>,
    prior: Option<&StartPrior>,
) -> Result<Posterior> {
    let first = candidates.start;
    let mut logs = log_likelihoods(noisy, sig, lambdas, candidates.clone())?;
    if let Some(p) = prior {
        let f = p.frequencies();
        if f.len() < candidates.end {
            return Err(invalid("prior", "does not cover every candidate"));
        }
        // Only ratios matter; scaling by the largest frequency keeps a
        // uniform prior an exact no-op.
        let top = f[candidates.clone()].iter().copied().fold(0.0, f64::max);
        if top <= 0.0 {
            return Err(invalid("prior", "zero on every candidate"));
        }
        for (l, &fi) in logs.iter_mut().zip(&f[candidates]) {
            *l += log(fi / top);
        }
    }
    let max = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = logs.iter().map(|l| exp(l - max)).collect();
    let total: f64 = weights.iter().sum();
    Ok(Posterior {
        first,
        probs: weights.into_iter().map(|w| w / total).collect(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Adversary {
    /// Uniform guess among the candidates.
    Rnd,
    /// Most frequent start slot among the candidates.
    Stat,
    /// Posterior median under a uniform prior.
    Bayes,
    /// Posterior median under the start-frequency prior.
    BayesStat,
}

impl Adversary {
    pub const ALL: [Adversary; 4] = [Adversary::Rnd, Adversary::Stat, Adversary::Bayes, Adversary::BayesStat];

    pub fn name(self) -> &'static str {
        match self {
            Adversary::Rnd => "RND",
            Adversary::Stat => "STAT",
            Adversary::Bayes => "BAYES",
            Adversary::BayesStat => "BAYES_STAT",
        }
    }
}

/// Guessed start slot of `sig` in `noisy` (a full day of `n` slots).
pub fn infer_start<R: Rng + ?Sized>(
    adversary: Adversary,
    noisy: &[f64],
    sig: &ApplianceSignature,
    lambdas: &[LaplaceScale],
    prior: Option<&StartPrior>,
    rng: &mut R,
) -> Result<usize> {
    let candidates = sig.candidates(noisy.len())?;
    match adversary {
        Adversary::Rnd => Ok(rng.random_range(candidates)),
        Adversary::Stat => {
            let f = prior.ok_or(Error::MissingPrior("STAT"))?.frequencies();
            if f.len() < candidates.end {
                return Err(invalid("prior", "does not cover every candidate"));
            }
            let mut best = candidates.start;
            for t in candidates {
                if f[t] > f[best] {
                    best = t;
                }
            }
            Ok(best)
        }
        Adversary::Bayes => Ok(posterior(noisy, sig.values(), lambdas, candidates, None)?.median()),
        Adversary::BayesStat => {
            let p = prior.ok_or(Error::MissingPrior("BAYES_STAT"))?;
            Ok(posterior(noisy, sig.values(), lambdas, candidates, Some(p))?.median())
        }
    }
}

/// `|t' − t_s|` in hours for slots of `tp` minutes.
pub fn inference_accuracy(guess: usize, truth: usize, tp: u32) -> f64 {
    guess.abs_diff(truth) as f64 * tp as f64 / 60.0
}

/// `E|U − c|` for `U` uniform on `0..k` and a fixed truth `c`.
pub fn rnd_expected_distance(k: usize, truth: usize) -> f64 {
    let c = truth as f64;
    (0..k).map(|u| abs(u as f64 - c)).sum::<f64>() / k as f64
}

/// `E|U − C|` for independent uniform `U, C` on `0..k`: `(k² − 1)/(3k)`.
pub fn rnd_mean_distance(k: usize) -> f64 {
    let k = k as f64;
    (k * k - 1.0) / (3.0 * k)
}

/// Success of the maximum likelihood decision between counts `x` and `x+1`
/// released with `Laplace(1/ε)` noise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MlInference {
    pub trials: u64,
    /// Success rate over all releases.
    pub overall_rate: f64,
    /// Success rate over releases outside `(x, x+1)`, where the likelihood
    /// ratio attains its bound `e^ε` and the posterior of the decision is
    /// `1/(1 + e^{−ε})`.
    pub saturated_rate: f64,
    pub saturated_trials: u64,
}

/// Closed-form overall success of the ML decision, `1 − e^{−ε/2}/2`.
pub fn ml_overall_success(epsilon: f64) -> Result<f64> {
    if !(epsilon >= 0.0 && epsilon.is_finite()) {
        return Err(invalid("epsilon", "must be nonnegative and finite"));
    }
    Ok(1.0 - 0.5 * exp(-epsilon / 2.0))
}

/// Simulates the decision with both counts equally likely a priori. Ties
/// (all of them when `ε = 0`) are broken by a fair coin.
pub fn ml_inference_experiment<R: Rng + ?Sized>(epsilon: f64, trials: u64, rng: &mut R) -> Result<MlInference> {
    if !(epsilon >= 0.0 && epsilon.is_finite()) {
        return Err(invalid("epsilon", "must be nonnegative and finite"));
    }
    if trials < 10_000 {
        return Err(invalid("trials", "need at least 10^4 trials"));
    }
    let scale = if epsilon > 0.0 { Some(LaplaceScale::new(1.0 / epsilon)?) } else { None };
    let (mut wins, mut sat, mut sat_wins) = (0u64, 0u64, 0u64);
    for _ in 0..trials {
        let truth = rng.random::<bool>() as u8 as f64;
        let ok = match scale {
            None => {
                sat += 1;
                rng.random::<bool>()
            }
            Some(l) => {
                let o = truth + sample_laplace(l, rng);
                let d0 = abs(o);
                let d1 = abs(o - 1.0);
                let guess = if d0 < d1 {
                    0.0
                } else if d1 < d0 {
                    1.0
                } else {
                    (open01(rng) < 0.5) as u8 as f64
                };
                let ok = guess == truth;
                if !(0.0 < o && o < 1.0) {
                    sat += 1;
                    sat_wins += ok as u64;
                }
                ok
            }
        };
        wins += ok as u64;
        if scale.is_none() {
            sat_wins += ok as u64;
        }
    }
    Ok(MlInference {
        trials,
        overall_rate: wins as f64 / trials as f64,
        saturated_rate: if sat == 0 { f64::NAN } else { sat_wins as f64 / sat as f64 },
        saturated_trials: sat,
    })
}
