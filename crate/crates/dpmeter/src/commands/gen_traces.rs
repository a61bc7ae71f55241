use std::path::PathBuf;

use rayon::prelude::*;

use dpmeter_core::rng::{stream, Domain};
use dpmeter_core::traces::{build_household, generate_trace, Catalog, DayConfig, Household, Trace};

use crate::catalog::{catalog_text, parse_catalog};
use crate::config::{short_hash, ExperimentConfig};
use crate::corpus::{write_corpus, Manifest, FORMAT_VERSION};
use crate::error::Result;
use crate::report::Meta;

/// Household `id` and its trace for the day. Each household draws from its
/// own streams, so the result does not depend on the number of households
/// or on scheduling.
pub fn household_trace(seed: u64, catalog: &Catalog, day: DayConfig, id: u32) -> Result<(Household, Trace)> {
    let h = build_household(catalog, id, &mut stream(seed, Domain::Household, id as u64, 0))?;
    let t = generate_trace(&h, catalog, day, &mut stream(seed, Domain::Trace, id as u64, 0))?;
    Ok((h, t))
}

pub fn generate(seed: u64, catalog: &Catalog, day: DayConfig, households: u32) -> Result<(Vec<Household>, Vec<Trace>)> {
    let pairs = (0..households)
        .into_par_iter()
        .map(|id| household_trace(seed, catalog, day, id))
        .collect::<Result<Vec<_>>>()?;
    Ok(pairs.into_iter().unzip())
}

#[derive(Debug, Clone)]
pub struct GenSummary {
    pub dir: PathBuf,
    pub households: u32,
    pub warnings: Vec<String>,
}

pub fn run(cfg: &ExperimentConfig) -> Result<GenSummary> {
    let text = catalog_text(&cfg.traces.catalog)?;
    let catalog = parse_catalog(&text, &cfg.traces.catalog)?;
    let day = cfg.day();
    let (households, traces) = generate(cfg.seed, &catalog, day, cfg.traces.households)?;
    let meta = Meta::of(cfg);
    let manifest = Manifest {
        format_version: FORMAT_VERSION,
        generator: concat!("dpmeter ", env!("CARGO_PKG_VERSION")).into(),
        seed: cfg.seed,
        config_hash: meta.config_hash.clone(),
        households: cfg.traces.households,
        month: cfg.traces.month,
        day_type: cfg.traces.day_type,
        catalog_hash: short_hash(text.as_bytes()),
    };
    let dir = cfg.corpus_dir();
    write_corpus(&dir, &meta, &manifest, &text, &catalog, &households, &traces)?;
    let mut warnings = Vec::new();
    if cfg.traces.households == 0 {
        warnings.push("traces.households = 0: wrote an empty corpus".into());
    }
    Ok(GenSummary {
        dir,
        households: cfg.traces.households,
        warnings,
    })
}
