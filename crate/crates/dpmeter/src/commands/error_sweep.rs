use std::path::PathBuf;

use rayon::prelude::*;

use dpmeter_core::clustering::{
    consumption_clusters, error_series, error_summary, sample_random_clusters, slot_lambdas, slot_totals, Cluster,
    ErrorSummary,
};
use dpmeter_core::noise::{utility_bounds, LaplaceScale};
use dpmeter_core::rng::{stream, Domain};

use super::{load_configured_corpus, slot_rows};
use crate::config::{ClusterMode, Estimator, ExperimentConfig};
use crate::error::{CliError, Result};
use crate::report::{num, CsvReport, Meta};

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub mode: ClusterMode,
    pub alpha: f64,
    pub summary: ErrorSummary,
    /// Per slot, the mean and the largest `μ(t)` over clusters.
    pub slot_mean: Vec<f64>,
    pub slot_max: Vec<f64>,
}

#[derive(Debug, Clone, Default)]
pub struct Sweep {
    pub rows: Vec<SweepRow>,
    pub notes: Vec<String>,
}

fn clusters_for(cfg: &ExperimentConfig, rows: &[Vec<f64>], n: usize, mode: ClusterMode) -> Result<Vec<Cluster>> {
    let ids: Vec<u32> = (0..rows.len() as u32).collect();
    Ok(match mode {
        ClusterMode::Random => {
            let mut rng = stream(cfg.seed, Domain::Clustering, n as u64, 0);
            sample_random_clusters(&ids, n, cfg.sweep.clusters as usize, &mut rng)?
        }
        ClusterMode::Consumption => {
            let avgs: Vec<(u32, f64)> = rows
                .iter()
                .enumerate()
                .map(|(i, r)| (i as u32, r.iter().sum::<f64>() / r.len() as f64))
                .collect();
            consumption_clusters(&avgs, n)?
        }
    })
}

/// Per-slot Laplace scales and aggregates of one cluster.
fn calibrate(rows: &[Vec<f64>], c: &Cluster, epsilon: f64) -> Result<(Vec<LaplaceScale>, Vec<f64>)> {
    let members: Vec<&[f64]> = c.members.iter().map(|&i| rows[i as usize].as_slice()).collect();
    let lambdas = slot_lambdas(&members)?
        .into_iter()
        .map(|l| l.scaled(1.0 / epsilon))
        .collect::<dpmeter_core::Result<Vec<_>>>()?;
    Ok((lambdas, slot_totals(&members)?))
}

/// Error statistics for every configured (size, mode, alpha). Rows are the
/// per-household slot series of the corpus.
pub fn sweep(cfg: &ExperimentConfig, rows: &[Vec<f64>]) -> Result<Sweep> {
    let mut out = Sweep::default();
    let trials = u32::try_from(cfg.trials).map_err(|_| CliError::Config("trials too large for the error estimator".into()))?;
    for &n in &cfg.sweep.sizes {
        let n = n as usize;
        if n > rows.len() {
            out.notes.push(format!("skipped N={n}: only {} households", rows.len()));
            continue;
        }
        for (mi, &mode) in cfg.sweep.modes.iter().enumerate() {
            let clusters = clusters_for(cfg, rows, n, mode)?;
            let calibrated = clusters
                .par_iter()
                .map(|c| calibrate(rows, c, cfg.epsilon))
                .collect::<Result<Vec<_>>>()?;
            for (ai, &alpha) in cfg.sweep.alphas.iter().enumerate() {
                let mu = calibrated
                    .par_iter()
                    .enumerate()
                    .map(|(ci, (lambdas, totals))| -> Result<Vec<f64>> {
                        match cfg.sweep.estimator {
                            Estimator::Analytic => totals
                                .iter()
                                .zip(lambdas)
                                .map(|(&x, &l)| Ok(utility_bounds(alpha, l, x)?.mu))
                                .collect(),
                            Estimator::MonteCarlo => {
                                let key = ((n as u64) << 32) | ci as u64;
                                let mut rng = stream(cfg.seed, Domain::Error, key, ((ai as u64) << 8) | mi as u64);
                                let l: Vec<f64> = lambdas.iter().map(|l| l.get()).collect();
                                Ok(error_series(totals, &l, n as u32, alpha, trials, &mut rng)?
                                    .into_iter()
                                    .map(|e| e.mu)
                                    .collect())
                            }
                        }
                    })
                    .collect::<Result<Vec<_>>>()?;
                let slots = mu[0].len();
                let column = |t: usize| mu.iter().map(move |m| m[t]);
                out.rows.push(SweepRow {
                    mode,
                    alpha,
                    summary: error_summary(n, &mu)?,
                    slot_mean: (0..slots).map(|t| column(t).sum::<f64>() / mu.len() as f64).collect(),
                    slot_max: (0..slots).map(|t| column(t).fold(0.0, f64::max)).collect(),
                });
            }
        }
    }
    Ok(out)
}

/// Writes `error_sweep.csv` and the per-slot curves `error_sweep_slots.csv`.
pub fn write(cfg: &ExperimentConfig, sweep: &Sweep) -> Result<(PathBuf, PathBuf)> {
    let estimator = match cfg.sweep.estimator {
        Estimator::Analytic => "analytic",
        Estimator::MonteCarlo => "monte-carlo",
    };
    let mut w = CsvReport::create(
        cfg.out.join("error_sweep.csv"),
        &Meta::of(cfg),
        &sweep.notes,
        &["n", "mode", "alpha", "clusters", "mean_error", "dev_error", "max_error", "estimator"],
    )?;
    for r in &sweep.rows {
        let s = &r.summary;
        w.row([
            s.n.to_string(),
            r.mode.name().into(),
            num(r.alpha),
            s.clusters.to_string(),
            num(s.mean_error),
            num(s.dev_error),
            num(s.max_error),
            estimator.into(),
        ])?;
    }
    let summary = w.finish()?;

    let mut w = CsvReport::create(
        cfg.out.join("error_sweep_slots.csv"),
        &Meta::of(cfg),
        &sweep.notes,
        &["n", "mode", "alpha", "slot", "minute", "mean_mu", "max_mu"],
    )?;
    for r in &sweep.rows {
        for (t, (mean, max)) in r.slot_mean.iter().zip(&r.slot_max).enumerate() {
            w.row([
                r.summary.n.to_string(),
                r.mode.name().into(),
                num(r.alpha),
                t.to_string(),
                (t as u32 * cfg.slot_minutes).to_string(),
                num(*mean),
                num(*max),
            ])?;
        }
    }
    Ok((summary, w.finish()?))
}

pub fn run(cfg: &ExperimentConfig) -> Result<(Sweep, PathBuf, PathBuf)> {
    let corpus = load_configured_corpus(cfg)?;
    let rows = slot_rows(&corpus, cfg.slot_minutes)?;
    let s = sweep(cfg, &rows)?;
    let (summary, slots) = write(cfg, &s)?;
    Ok((s, summary, slots))
}
