//! On-disk trace corpus.
//!
//! ```text
//! <dir>/manifest.toml            seed, config hash, day, household count
//! <dir>/catalog.toml             copy of the catalog the traces came from
//! <dir>/households.csv           household,residents,owned
//! <dir>/traces/hh_NNNNN.csv      household,minute,total_watts
//! <dir>/components/hh_NNNNN.csv  household,appliance,class,start,minutes,watts
//! ```
//!
//! `owned` lists appliance names separated by `;`. A component file holds one
//! row per constant-power run; an owned appliance that never ran has no rows.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use dpmeter_core::traces::{ApplianceClass, Catalog, Component, DayConfig, Household, Run, Trace, MINUTES_PER_DAY};

use crate::catalog::parse_catalog;
use crate::config::{short_hash, DayKind};
use crate::error::{CliError, Result};
use crate::report::{create_parent, csv_error, num, open_csv, CsvReport, Meta};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub format_version: u32,
    pub generator: String,
    pub seed: u64,
    pub config_hash: String,
    pub households: u32,
    pub month: u8,
    pub day_type: DayKind,
    pub catalog_hash: String,
}

#[derive(Debug, Clone)]
pub struct Corpus {
    pub manifest: Manifest,
    pub catalog: Catalog,
    pub households: Vec<Household>,
    pub traces: Vec<Trace>,
}

impl Corpus {
    pub fn day(&self) -> DayConfig {
        DayConfig::new(self.manifest.month, self.manifest.day_type.into()).expect("validated on load")
    }
}

pub fn trace_path(dir: &Path, id: u32) -> PathBuf {
    dir.join("traces").join(format!("hh_{id:05}.csv"))
}

pub fn components_path(dir: &Path, id: u32) -> PathBuf {
    dir.join("components").join(format!("hh_{id:05}.csv"))
}

fn class_name(c: ApplianceClass) -> &'static str {
    match c {
        ApplianceClass::Active => "active",
        ApplianceClass::Passive => "passive",
    }
}

/// Writes the corpus; `catalog_text` is stored verbatim.
pub fn write_corpus(
    dir: &Path,
    meta: &Meta,
    manifest: &Manifest,
    catalog_text: &str,
    catalog: &Catalog,
    households: &[Household],
    traces: &[Trace],
) -> Result<()> {
    fs::create_dir_all(dir).map_err(CliError::io(dir))?;
    let cat_path = dir.join("catalog.toml");
    fs::write(&cat_path, catalog_text).map_err(CliError::io(&cat_path))?;

    let mut hh = CsvReport::create(dir.join("households.csv"), meta, &[], &["household", "residents", "owned"])?;
    for h in households {
        let owned: Vec<&str> = h.owned.iter().map(|&i| catalog.appliances()[i].name()).collect();
        hh.row([h.id.to_string(), h.residents.to_string(), owned.join(";")])?;
    }
    hh.finish()?;

    for t in traces {
        let mut w = CsvReport::create(trace_path(dir, t.household), meta, &[], &["household", "minute", "total_watts"])?;
        let id = t.household.to_string();
        for (minute, v) in t.total_minutes().iter().enumerate() {
            w.row([id.as_str(), &minute.to_string(), &num(*v)])?;
        }
        w.finish()?;

        let mut w = CsvReport::create(
            components_path(dir, t.household),
            meta,
            &[],
            &["household", "appliance", "class", "start", "minutes", "watts"],
        )?;
        for c in &t.components {
            for r in &c.runs {
                w.row([
                    id.as_str(),
                    &c.appliance,
                    class_name(c.class),
                    &r.start.to_string(),
                    &r.minutes.to_string(),
                    &num(r.watts),
                ])?;
            }
        }
        w.finish()?;
    }

    // The manifest goes last so an interrupted run leaves no valid corpus.
    let path = dir.join("manifest.toml");
    create_parent(&path)?;
    fs::write(&path, toml::to_string(manifest).expect("manifest serializes")).map_err(CliError::io(&path))?;
    Ok(())
}

pub fn read_manifest(dir: &Path) -> Result<Manifest> {
    let path = dir.join("manifest.toml");
    let text = fs::read_to_string(&path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => CliError::MissingInput {
            path: path.clone(),
            reason: "no corpus manifest; run gen-traces first".into(),
        },
        _ => CliError::Io {
            path: path.clone(),
            source: e,
        },
    })?;
    let m: Manifest = toml::from_str(&text).map_err(|e| CliError::format(&path, e))?;
    if m.format_version != FORMAT_VERSION {
        return Err(CliError::format(&path, format!("unsupported corpus format {}", m.format_version)));
    }
    DayConfig::new(m.month, m.day_type.into()).map_err(|e| CliError::format(&path, e))?;
    Ok(m)
}

fn field<T: std::str::FromStr>(path: &Path, rec: &csv::StringRecord, i: usize) -> Result<T> {
    rec.get(i)
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| CliError::format(path, format!("bad field {i} in line {:?}", rec.position().map(|p| p.line()))))
}

pub fn load_corpus(dir: &Path) -> Result<Corpus> {
    let manifest = read_manifest(dir)?;
    let cat_path = dir.join("catalog.toml");
    let cat_text = fs::read_to_string(&cat_path).map_err(CliError::io(&cat_path))?;
    if short_hash(cat_text.as_bytes()) != manifest.catalog_hash {
        return Err(CliError::format(&cat_path, "catalog does not match the manifest"));
    }
    let catalog = parse_catalog(&cat_text, &cat_path)?;
    let day = DayConfig::new(manifest.month, manifest.day_type.into())?;

    let hh_path = dir.join("households.csv");
    let mut households = Vec::new();
    for rec in open_csv(&hh_path)?.records() {
        let rec = rec.map_err(|e| csv_error(&hh_path, e))?;
        let id: u32 = field(&hh_path, &rec, 0)?;
        let residents: u8 = field(&hh_path, &rec, 1)?;
        let names = rec.get(2).unwrap_or("");
        let owned = names
            .split(';')
            .filter(|s| !s.is_empty())
            .map(|n| catalog.index_of(n).ok_or_else(|| CliError::format(&hh_path, format!("unknown appliance `{n}`"))))
            .collect::<Result<Vec<_>>>()?;
        households.push(Household { id, residents, owned });
    }
    if households.len() != manifest.households as usize {
        return Err(CliError::format(&hh_path, "household count does not match the manifest"));
    }

    let traces = households
        .iter()
        .map(|h| read_components(dir, h, &catalog, day))
        .collect::<Result<Vec<_>>>()?;
    Ok(Corpus {
        manifest,
        catalog,
        households,
        traces,
    })
}

fn read_components(dir: &Path, h: &Household, catalog: &Catalog, day: DayConfig) -> Result<Trace> {
    let path = components_path(dir, h.id);
    let mut components: Vec<Component> = h
        .owned
        .iter()
        .map(|&i| {
            let a = &catalog.appliances()[i];
            Component {
                appliance: a.name().to_string(),
                class: a.class(),
                runs: Vec::new(),
            }
        })
        .collect();
    for rec in open_csv(&path)?.records() {
        let rec = rec.map_err(|e| csv_error(&path, e))?;
        let name = rec.get(1).unwrap_or("");
        let c = components
            .iter_mut()
            .find(|c| c.appliance == name)
            .ok_or_else(|| CliError::format(&path, format!("appliance `{name}` is not owned by household {}", h.id)))?;
        let run = Run {
            start: field(&path, &rec, 3)?,
            minutes: field(&path, &rec, 4)?,
            watts: field(&path, &rec, 5)?,
        };
        if run.start + run.minutes > MINUTES_PER_DAY || c.runs.last().is_some_and(|p: &Run| p.start + p.minutes > run.start) {
            return Err(CliError::format(&path, "runs overlap or leave the day"));
        }
        c.runs.push(run);
    }
    Ok(Trace {
        household: h.id,
        day,
        components,
    })
}

/// Per-minute totals from a trace file.
pub fn read_totals(path: &Path) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(MINUTES_PER_DAY as usize);
    for rec in open_csv(path)?.records() {
        let rec = rec.map_err(|e| csv_error(path, e))?;
        let minute: usize = field(path, &rec, 1)?;
        if minute != out.len() {
            return Err(CliError::format(path, "minutes out of order"));
        }
        out.push(field(path, &rec, 2)?);
    }
    if out.len() != MINUTES_PER_DAY as usize {
        return Err(CliError::format(path, "a trace needs 1440 minutes"));
    }
    Ok(out)
}
