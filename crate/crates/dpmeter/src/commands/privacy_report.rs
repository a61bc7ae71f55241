use std::collections::BTreeMap;
use std::path::PathBuf;

use rayon::prelude::*;

use dpmeter_core::clustering::{random_clusters, slot_lambdas};
use dpmeter_core::math::mean_sd;
use dpmeter_core::noise::{sample_laplace, LaplaceScale};
use dpmeter_core::privacy::{
    inference_accuracy, infer_start, max_window_epsilon, Adversary, ApplianceSignature, StartPrior,
};
use dpmeter_core::rng::{stream, Domain};
use dpmeter_core::traces::{appliance_component, ApplianceClass, MINUTES_PER_DAY};

use super::{load_configured_corpus, slot_rows};
use crate::config::ExperimentConfig;
use crate::corpus::Corpus;
use crate::error::Result;
use crate::report::{num, CsvReport, Meta};

/// Label of presence rows over the summed active components.
pub const ACTIVE_UNION: &str = "active_union";
/// Label of presence rows over the whole household load.
pub const ALL_APPLIANCES: &str = "all_appliances";

#[derive(Debug, Clone, PartialEq)]
pub struct PresenceRow {
    pub appliance: String,
    pub class: &'static str,
    pub window_minutes: u32,
    pub users: usize,
    pub mean: f64,
    pub dev: f64,
    pub max: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InferenceRow {
    pub appliance: String,
    pub class: &'static str,
    pub users: usize,
    pub adversary: Adversary,
    pub mean_hours: f64,
    pub dev_hours: f64,
}

#[derive(Debug, Clone, Default)]
pub struct PrivacyReport {
    pub presence: Vec<PresenceRow>,
    pub inference: Vec<InferenceRow>,
    /// Accuracies in hours over every active (household, appliance) pair,
    /// one vector per configured adversary.
    pub active_accuracy: Vec<(Adversary, Vec<f64>)>,
    pub notes: Vec<String>,
}

fn class_label(c: ApplianceClass) -> &'static str {
    match c {
        ApplianceClass::Active => "active",
        ApplianceClass::Passive => "passive",
    }
}

/// Everything computed for one household.
struct HouseholdResult {
    /// (appliance index, window index, ε_s)
    presence: Vec<(usize, usize, f64)>,
    active_union: Vec<f64>,
    all: Vec<f64>,
    /// (appliance index, adversary index, hours)
    inference: Vec<(usize, usize, f64)>,
}

pub fn analyse(cfg: &ExperimentConfig, corpus: &Corpus) -> Result<PrivacyReport> {
    let tp = cfg.slot_minutes;
    let slots = (MINUTES_PER_DAY / tp) as usize;
    let rows = slot_rows(corpus, tp)?;
    let mut report = PrivacyReport::default();
    let households = rows.len();
    if households == 0 {
        report.notes.push("empty corpus".into());
        return Ok(report);
    }

    let size = (cfg.privacy.cluster_size as usize).min(households);
    if size < cfg.privacy.cluster_size as usize {
        report.notes.push(format!("corpus smaller than privacy.cluster_size; one cluster of {size}"));
    }
    let ids: Vec<u32> = (0..households as u32).collect();
    let clusters = random_clusters(&ids, size, &mut stream(cfg.seed, Domain::Clustering, size as u64, 1))?;
    let dropped = households - clusters.len() * size;
    if dropped > 0 {
        report.notes.push(format!("{dropped} households outside the last full cluster left out"));
    }
    let mut lambdas: Vec<Option<Vec<LaplaceScale>>> = vec![None; households];
    for c in &clusters {
        let members: Vec<&[f64]> = c.members.iter().map(|&i| rows[i as usize].as_slice()).collect();
        let l = slot_lambdas(&members)?
            .into_iter()
            .map(|l| l.scaled(1.0 / cfg.epsilon))
            .collect::<dpmeter_core::Result<Vec<_>>>()?;
        for &i in &c.members {
            lambdas[i as usize] = Some(l.clone());
        }
    }
    let included: Vec<usize> = (0..households).filter(|&i| lambdas[i].is_some()).collect();

    let catalog = &corpus.catalog;
    let windows: Vec<usize> = cfg.privacy.windows.iter().map(|&w| (w / tp) as usize).collect();
    let adversaries: Vec<Adversary> = cfg.privacy.adversaries.iter().map(|&a| a.into()).collect();

    // Start-slot frequencies over the corpus, one prior per appliance.
    let mut starts: Vec<Vec<usize>> = vec![Vec::new(); catalog.len()];
    for &i in &included {
        for c in &corpus.traces[i].components {
            if let Some(a) = appliance_component(&corpus.traces[i], &c.appliance, tp)?.activation {
                starts[catalog.index_of(&c.appliance).expect("loaded from catalog")].push(a.start);
            }
        }
    }
    let priors = starts
        .iter()
        .map(|s| StartPrior::from_starts(s, slots, cfg.privacy.prior_pseudocount))
        .collect::<dpmeter_core::Result<Vec<_>>>()?;

    let per_household = included
        .par_iter()
        .map(|&i| -> Result<HouseholdResult> {
            let trace = &corpus.traces[i];
            let lam = lambdas[i].as_ref().expect("included");
            let lam_f: Vec<f64> = lam.iter().map(|l| l.get()).collect();
            let mut res = HouseholdResult {
                presence: Vec::new(),
                active_union: Vec::new(),
                all: Vec::new(),
                inference: Vec::new(),
            };
            let mut union = vec![0.0; slots];
            for c in &trace.components {
                let a = catalog.index_of(&c.appliance).expect("loaded from catalog");
                let series = appliance_component(trace, &c.appliance, tp)?;
                if c.class == ApplianceClass::Active {
                    for (u, v) in union.iter_mut().zip(&series.slots) {
                        *u += v;
                    }
                }
                for (wi, &s) in windows.iter().enumerate() {
                    res.presence.push((a, wi, max_window_epsilon(&series.slots, &lam_f, s)?.epsilon));
                }
                let Some(sig) = ApplianceSignature::from_series(&series.slots) else {
                    continue;
                };
                let mut rng = stream(cfg.seed, Domain::Attack, trace.household as u64, a as u64);
                let noisy: Vec<f64> = series.slots.iter().zip(lam).map(|(&v, &l)| v + sample_laplace(l, &mut rng)).collect();
                for (ai, &adv) in adversaries.iter().enumerate() {
                    let guess = infer_start(adv, &noisy, &sig, lam, Some(&priors[a]), &mut rng)?;
                    res.inference.push((a, ai, inference_accuracy(guess, sig.start(), tp)));
                }
            }
            for &s in &windows {
                res.active_union.push(max_window_epsilon(&union, &lam_f, s)?.epsilon);
                res.all.push(max_window_epsilon(&rows[i], &lam_f, s)?.epsilon);
            }
            Ok(res)
        })
        .collect::<Result<Vec<_>>>()?;

    // Gather in household order so results do not depend on scheduling.
    let mut presence: BTreeMap<(usize, usize), Vec<f64>> = BTreeMap::new();
    let mut inference: BTreeMap<(usize, usize), Vec<f64>> = BTreeMap::new();
    let mut union: Vec<Vec<f64>> = vec![Vec::new(); windows.len()];
    let mut all: Vec<Vec<f64>> = vec![Vec::new(); windows.len()];
    for r in &per_household {
        for &(a, wi, e) in &r.presence {
            presence.entry((a, wi)).or_default().push(e);
        }
        for &(a, ai, h) in &r.inference {
            inference.entry((a, ai)).or_default().push(h);
        }
        for wi in 0..windows.len() {
            union[wi].push(r.active_union[wi]);
            all[wi].push(r.all[wi]);
        }
    }

    let summarize = |v: &[f64]| {
        let (mean, dev) = mean_sd(v);
        (mean, dev, v.iter().copied().fold(0.0, f64::max))
    };
    let mut owners = vec![0usize; catalog.len()];
    for &i in &included {
        for &a in &corpus.households[i].owned {
            owners[a] += 1;
        }
    }
    for (a, spec) in catalog.appliances().iter().enumerate() {
        if owners[a] == 0 {
            report.notes.push(format!("omitted {}: no household owns it", spec.name()));
            continue;
        }
        for (wi, &w) in cfg.privacy.windows.iter().enumerate() {
            let v = &presence[&(a, wi)];
            let (mean, dev, max) = summarize(v);
            report.presence.push(PresenceRow {
                appliance: spec.name().into(),
                class: class_label(spec.class()),
                window_minutes: w,
                users: v.len(),
                mean,
                dev,
                max,
            });
        }
    }
    for (label, series) in [(ACTIVE_UNION, &union), (ALL_APPLIANCES, &all)] {
        for (wi, &w) in cfg.privacy.windows.iter().enumerate() {
            let (mean, dev, max) = summarize(&series[wi]);
            report.presence.push(PresenceRow {
                appliance: label.into(),
                class: "group",
                window_minutes: w,
                users: series[wi].len(),
                mean,
                dev,
                max,
            });
        }
    }

    let mut pooled: Vec<Vec<f64>> = vec![Vec::new(); adversaries.len()];
    for (a, spec) in catalog.appliances().iter().enumerate() {
        for (ai, &adv) in adversaries.iter().enumerate() {
            let Some(v) = inference.get(&(a, ai)) else {
                continue;
            };
            if spec.class() == ApplianceClass::Active {
                pooled[ai].extend_from_slice(v);
            }
            let (mean_hours, dev_hours) = mean_sd(v);
            report.inference.push(InferenceRow {
                appliance: spec.name().into(),
                class: class_label(spec.class()),
                users: v.len(),
                adversary: adv,
                mean_hours,
                dev_hours,
            });
        }
    }
    for (ai, &adv) in adversaries.iter().enumerate() {
        if pooled[ai].is_empty() {
            continue;
        }
        let (mean_hours, dev_hours) = mean_sd(&pooled[ai]);
        report.inference.push(InferenceRow {
            appliance: "all_active".into(),
            class: "group",
            users: pooled[ai].len(),
            adversary: adv,
            mean_hours,
            dev_hours,
        });
    }
    report.active_accuracy = adversaries.into_iter().zip(pooled).collect();
    Ok(report)
}

pub fn write(cfg: &ExperimentConfig, report: &PrivacyReport) -> Result<(PathBuf, PathBuf)> {
    let meta = Meta::of(cfg);
    let mut w = CsvReport::create(
        cfg.out.join("privacy_presence.csv"),
        &meta,
        &report.notes,
        &["appliance", "class", "window_minutes", "users", "mean_epsilon", "dev_epsilon", "max_epsilon"],
    )?;
    for r in &report.presence {
        w.row([
            r.appliance.clone(),
            r.class.into(),
            r.window_minutes.to_string(),
            r.users.to_string(),
            num(r.mean),
            num(r.dev),
            num(r.max),
        ])?;
    }
    let presence = w.finish()?;
    let mut w = CsvReport::create(
        cfg.out.join("privacy_inference.csv"),
        &meta,
        &report.notes,
        &["appliance", "class", "users", "adversary", "mean_hours", "dev_hours"],
    )?;
    for r in &report.inference {
        w.row([
            r.appliance.clone(),
            r.class.into(),
            r.users.to_string(),
            r.adversary.name().into(),
            num(r.mean_hours),
            num(r.dev_hours),
        ])?;
    }
    Ok((presence, w.finish()?))
}

pub fn run(cfg: &ExperimentConfig) -> Result<(PrivacyReport, PathBuf, PathBuf)> {
    let corpus = load_configured_corpus(cfg)?;
    let report = analyse(cfg, &corpus)?;
    let (a, b) = write(cfg, &report)?;
    Ok((report, a, b))
}
