//! Appliance catalog files.
//!
//! A catalog is a TOML file with one `[[appliance]]` table per appliance; the
//! built-in catalog in `data/appliances.toml` documents every field.

use std::fs;
use std::path::Path;

use serde::Deserialize;

use dpmeter_core::traces::{diurnal_weights, ApplianceClass, ApplianceSpec, Catalog, Segment};

use crate::error::{CliError, Result};

pub const DEFAULT_CATALOG: &str = include_str!("../data/appliances.toml");

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct CatalogFile {
    appliance: Vec<ApplianceEntry>,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(rename_all = "lowercase")]
enum ClassName {
    Active,
    Passive,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ApplianceEntry {
    name: String,
    class: ClassName,
    profile: Vec<(f64, u32)>,
    #[serde(default)]
    per_day: f64,
    #[serde(default)]
    peaks: Vec<(f64, f64, f64)>,
    #[serde(default)]
    floor: Option<f64>,
    #[serde(default)]
    weights: Option<Vec<f64>>,
    owner: f64,
    #[serde(default)]
    jitter: u32,
    #[serde(default)]
    daylight: bool,
    #[serde(default)]
    phase: Option<u32>,
}

impl ApplianceEntry {
    fn into_spec(self) -> dpmeter_core::Result<ApplianceSpec> {
        let class = match self.class {
            ClassName::Active => ApplianceClass::Active,
            ClassName::Passive => ApplianceClass::Passive,
        };
        let weights = match self.weights {
            Some(w) => w,
            None if self.peaks.is_empty() => vec![1.0; dpmeter_core::traces::WEIGHT_SLOTS],
            None => diurnal_weights(&self.peaks, self.floor.unwrap_or(0.0)),
        };
        let profile = self.profile.into_iter().map(|(watts, minutes)| Segment { watts, minutes }).collect();
        ApplianceSpec::new(self.name, class, profile, self.per_day, weights, self.owner, self.daylight, self.jitter, self.phase)
    }
}

/// Parses catalog text; `origin` names the source in error messages.
pub fn parse_catalog(text: &str, origin: &Path) -> Result<Catalog> {
    let file: CatalogFile = toml::from_str(text).map_err(|e| CliError::Config(format!("{}: {e}", origin.display())))?;
    let specs = file
        .appliance
        .into_iter()
        .map(|a| {
            let name = a.name.clone();
            a.into_spec().map_err(|e| CliError::Config(format!("{}: appliance `{name}`: {e}", origin.display())))
        })
        .collect::<Result<Vec<_>>>()?;
    Catalog::new(specs).map_err(|e| CliError::Config(format!("{}: {e}", origin.display())))
}

/// Catalog text from `path`, or the built-in catalog when `path` is empty.
pub fn catalog_text(path: &Path) -> Result<String> {
    if path.as_os_str().is_empty() {
        return Ok(DEFAULT_CATALOG.to_string());
    }
    fs::read_to_string(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => CliError::MissingInput {
            path: path.into(),
            reason: "catalog file not found".into(),
        },
        _ => CliError::Io {
            path: path.into(),
            source: e,
        },
    })
}

pub fn default_catalog() -> Catalog {
    parse_catalog(DEFAULT_CATALOG, Path::new("data/appliances.toml")).expect("built-in catalog is valid")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_catalog_loads() {
        let c = default_catalog();
        assert!(c.len() >= 30);
        let kettle = &c.appliances()[c.index_of("kettle").unwrap()];
        assert_eq!(kettle.profile()[0].watts, 2000.0);
        let fridge = &c.appliances()[c.index_of("refrigerator").unwrap()];
        assert_eq!(fridge.class(), ApplianceClass::Passive);
        assert_eq!(fridge.period(), 60);
        assert!(c.appliances()[c.index_of("lighting").unwrap()].daylight_sensitive());
    }

    #[test]
    fn errors_name_the_appliance() {
        let text = "[[appliance]]\nname = \"x\"\nclass = \"active\"\nprofile = [[-1, 3]]\nowner = 0.5\n";
        let e = parse_catalog(text, Path::new("c.toml")).unwrap_err().to_string();
        assert!(e.contains("`x`"), "{e}");
        let text = "[[appliance]]\nname = \"x\"\nclass = \"active\"\nprofile = [[1, 3]]\nowner = 0.5\ncolour = 1\n";
        assert!(parse_catalog(text, Path::new("c.toml")).is_err());
    }
}
