//! Cluster formation, per-slot noise calibration and the relative error of
//! released aggregates.

use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{invalid, Result};
use crate::math::{abs, floor, mean_sd, Running};
use crate::noise::{utility_bounds, GammaShareParams, LaplaceScale, ShareSampler};

/// Household ids of one cluster.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cluster {
    pub members: Vec<u32>,
}

impl Cluster {
    pub fn size(&self) -> usize {
        self.members.len()
    }
}

fn check_size(population: usize, n: usize) -> Result<()> {
    if n == 0 {
        return Err(invalid("n", "cluster size must be at least 1"));
    }
    if n > population {
        return Err(invalid("n", "cluster size exceeds the population"));
    }
    Ok(())
}

/// Shuffles `ids` and cuts them into disjoint clusters of `n`; the last
/// `len mod n` households after the shuffle are left out.
pub fn random_clusters<R: Rng + ?Sized>(ids: &[u32], n: usize, rng: &mut R) -> Result<Vec<Cluster>> {
    check_size(ids.len(), n)?;
    let mut v = ids.to_vec();
    v.shuffle(rng);
    Ok(v.chunks_exact(n).map(|c| Cluster { members: c.to_vec() }).collect())
}

/// `count` random clusters drawn from as many independent partitions as
/// needed. Clusters of one partition are disjoint; different partitions
/// overlap.
pub fn sample_random_clusters<R: Rng + ?Sized>(ids: &[u32], n: usize, count: usize, rng: &mut R) -> Result<Vec<Cluster>> {
    check_size(ids.len(), n)?;
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        for c in random_clusters(ids, n, rng)? {
            if out.len() == count {
                break;
            }
            out.push(c);
        }
    }
    Ok(out)
}

/// Sorts households by `(daily average, id)` and cuts consecutive blocks of
/// `n`; the highest-consuming `len mod n` households are left out.
pub fn consumption_clusters(averages: &[(u32, f64)], n: usize) -> Result<Vec<Cluster>> {
    check_size(averages.len(), n)?;
    if averages.iter().any(|(_, a)| a.is_nan()) {
        return Err(invalid("averages", "must not be NaN"));
    }
    let mut v = averages.to_vec();
    v.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
    Ok(v.chunks_exact(n)
        .map(|c| Cluster {
            members: c.iter().map(|&(id, _)| id).collect(),
        })
        .collect())
}

/// Smallest Laplace scale used for a slot in which nobody consumes anything:
/// one encoding unit at the default scale.
pub const LAMBDA_FLOOR: f64 = 0.1;

fn check_rows(rows: &[&[f64]]) -> Result<usize> {
    let len = rows.first().ok_or(invalid("rows", "cluster must not be empty"))?.len();
    if rows.iter().any(|r| r.len() != len) {
        return Err(invalid("rows", "all members need the same number of slots"));
    }
    Ok(len)
}

/// Largest member reading in each slot.
pub fn slot_maxima(rows: &[&[f64]]) -> Result<Vec<f64>> {
    let len = check_rows(rows)?;
    let mut out = vec![0.0f64; len];
    for r in rows {
        for (m, &x) in out.iter_mut().zip(r.iter()) {
            *m = m.max(x);
        }
    }
    Ok(out)
}

/// Sum of member readings in each slot.
pub fn slot_totals(rows: &[&[f64]]) -> Result<Vec<f64>> {
    let len = check_rows(rows)?;
    let mut out = vec![0.0; len];
    for r in rows {
        for (s, &x) in out.iter_mut().zip(r.iter()) {
            *s += x;
        }
    }
    Ok(out)
}

fn floored(x: f64) -> Result<LaplaceScale> {
    LaplaceScale::new(x.max(LAMBDA_FLOOR))
}

/// `λ(t) = max_i X_t^i`, floored at [`LAMBDA_FLOOR`].
pub fn slot_lambda(rows: &[&[f64]], t: usize) -> Result<LaplaceScale> {
    check_rows(rows)?;
    let mut m = 0.0f64;
    for r in rows {
        m = m.max(*r.get(t).ok_or(invalid("t", "slot out of range"))?);
    }
    floored(m)
}

pub fn slot_lambdas(rows: &[&[f64]]) -> Result<Vec<LaplaceScale>> {
    slot_maxima(rows)?.into_iter().map(floored).collect()
}

/// For each slot, the largest sum of per-slot maxima over any `s`
/// consecutive slots containing it. Every `s`-slot window then satisfies
/// `Σ_{u∈W} max_u/λ(u) ≤ 1`. A series shorter than `s` is one window.
pub fn window_sums(maxima: &[f64], s: usize) -> Result<Vec<f64>> {
    if s == 0 {
        return Err(invalid("s", "window must span at least one slot"));
    }
    let n = maxima.len();
    if n == 0 {
        return Ok(Vec::new());
    }
    let s = s.min(n);
    let mut prefix = vec![0.0; n + 1];
    for (i, &m) in maxima.iter().enumerate() {
        prefix[i + 1] = prefix[i] + m;
    }
    let windows: Vec<f64> = (0..=n - s).map(|a| prefix[a + s] - prefix[a]).collect();
    Ok((0..n)
        .map(|t| {
            let lo = (t + 1).saturating_sub(s);
            let hi = t.min(n - s);
            windows[lo..=hi].iter().copied().fold(f64::NEG_INFINITY, f64::max)
        })
        .collect())
}

/// Laplace scales guaranteeing `ε_s = 1` over every `s`-slot window.
pub fn window_lambda(rows: &[&[f64]], s: usize) -> Result<Vec<LaplaceScale>> {
    window_sums(&slot_maxima(rows)?, s)?.into_iter().map(floored).collect()
}

/// Number of tolerated failures `M = ⌊αN⌋` for a failure fraction `α`.
pub fn tolerated_failures(n: u32, alpha: f64) -> Result<u32> {
    if !(0.0..1.0).contains(&alpha) {
        return Err(invalid("alpha", "must lie in [0, 1)"));
    }
    Ok(floor(alpha * n as f64 + 1e-9) as u32)
}

/// Relative error `δ = |f − f̂|/(f + 1)` statistics of one slot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlotError {
    pub mu: f64,
    pub sigma: f64,
    /// Monte Carlo standard error of `mu`; zero for closed forms.
    pub mu_std_error: f64,
}

/// Monte Carlo error of a slot with true aggregate `total`: each of the `n`
/// meters adds a share calibrated for `n − M` survivors and nobody fails.
/// `lambda ≤ 0` disables the noise.
pub fn simulate_slot_error<R: Rng + ?Sized>(
    total: f64,
    lambda: f64,
    n: u32,
    tolerated: u32,
    trials: u32,
    rng: &mut R,
) -> Result<SlotError> {
    if tolerated >= n {
        return Err(invalid("tolerated", "must be smaller than the cluster size"));
    }
    if lambda <= 0.0 {
        return Ok(SlotError {
            mu: 0.0,
            sigma: 0.0,
            mu_std_error: 0.0,
        });
    }
    let sampler = ShareSampler::new(GammaShareParams::new(n - tolerated, LaplaceScale::new(lambda)?)?);
    let mut acc = Running::default();
    for _ in 0..trials {
        let noise: f64 = (0..n).map(|_| sampler.share(rng)).sum();
        acc.push(abs(noise) / (total + 1.0));
    }
    Ok(SlotError {
        mu: acc.mean(),
        sigma: acc.sd(),
        mu_std_error: acc.std_error(),
    })
}

/// Per-slot Monte Carlo error of a cluster of `n` meters with aggregates
/// `totals` and Laplace scales `lambdas` (zero entries disable the noise).
pub fn error_series<R: Rng + ?Sized>(
    totals: &[f64],
    lambdas: &[f64],
    n: u32,
    alpha: f64,
    trials: u32,
    rng: &mut R,
) -> Result<Vec<SlotError>> {
    if totals.len() != lambdas.len() {
        return Err(invalid("lambdas", "need one scale per slot"));
    }
    if trials < 100 {
        return Err(invalid("trials", "need at least 100 trials"));
    }
    let m = tolerated_failures(n, alpha)?;
    totals
        .iter()
        .zip(lambdas)
        .map(|(&x, &l)| simulate_slot_error(x, l, n, m, trials, rng))
        .collect()
}

/// Closed-form per-slot error for the same setting as [`error_series`].
pub fn analytic_error_series(totals: &[f64], lambdas: &[LaplaceScale], alpha: f64) -> Result<Vec<SlotError>> {
    if totals.len() != lambdas.len() {
        return Err(invalid("lambdas", "need one scale per slot"));
    }
    totals
        .iter()
        .zip(lambdas)
        .map(|(&x, &l)| {
            let b = utility_bounds(alpha, l, x)?;
            Ok(SlotError {
                mu: b.mu,
                sigma: b.sigma,
                mu_std_error: 0.0,
            })
        })
        .collect()
}

/// Error statistics over the clusters of one size.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorSummary {
    pub n: usize,
    pub clusters: usize,
    /// Mean over clusters of `mean_t μ(t)`.
    pub mean_error: f64,
    /// Standard deviation over clusters of `mean_t μ(t)`.
    pub dev_error: f64,
    /// Mean over slots of the largest `μ(t)` of any cluster.
    pub max_error: f64,
}

/// Summarizes `mu[c][t]`, the error of cluster `c` in slot `t`.
pub fn error_summary(n: usize, mu: &[Vec<f64>]) -> Result<ErrorSummary> {
    let slots = mu.first().ok_or(invalid("mu", "need at least one cluster"))?.len();
    if slots == 0 || mu.iter().any(|m| m.len() != slots) {
        return Err(invalid("mu", "every cluster needs the same nonzero number of slots"));
    }
    let per_cluster: Vec<f64> = mu.iter().map(|m| m.iter().sum::<f64>() / slots as f64).collect();
    let (mean_error, dev_error) = mean_sd(&per_cluster);
    let max_error = (0..slots)
        .map(|t| mu.iter().map(|m| m[t]).fold(f64::NEG_INFINITY, f64::max))
        .sum::<f64>()
        / slots as f64;
    Ok(ErrorSummary {
        n,
        clusters: mu.len(),
        mean_error,
        dev_error,
        max_error,
    })
}
