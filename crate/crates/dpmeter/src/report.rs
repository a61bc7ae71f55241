//! CSV output. Every file starts with a `# seed=<seed> config_hash=<hash>`
//! line, optionally followed by `# note` lines, then a header row.

use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::config::ExperimentConfig;
use crate::error::{CliError, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Meta {
    pub seed: u64,
    pub config_hash: String,
}

impl Meta {
    pub fn of(cfg: &ExperimentConfig) -> Meta {
        Meta {
            seed: cfg.seed,
            config_hash: cfg.hash(),
        }
    }

    pub fn line(&self) -> String {
        format!("# seed={} config_hash={}", self.seed, self.config_hash)
    }

    fn parse(line: &str) -> Option<Meta> {
        let rest = line.strip_prefix("# ")?;
        let mut seed = None;
        let mut hash = None;
        for part in rest.split_whitespace() {
            match part.split_once('=')? {
                ("seed", v) => seed = v.parse().ok(),
                ("config_hash", v) => hash = Some(v.to_string()),
                _ => {}
            }
        }
        Some(Meta {
            seed: seed?,
            config_hash: hash?,
        })
    }
}

pub struct CsvReport {
    path: PathBuf,
    writer: csv::Writer<BufWriter<File>>,
}

pub fn create_parent(path: &Path) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(CliError::io(dir))?;
    }
    Ok(())
}

impl CsvReport {
    pub fn create(path: impl Into<PathBuf>, meta: &Meta, notes: &[String], header: &[&str]) -> Result<Self> {
        let path = path.into();
        create_parent(&path)?;
        let file = File::create(&path).map_err(CliError::io(&path))?;
        let mut out = BufWriter::new(file);
        writeln!(out, "{}", meta.line()).map_err(CliError::io(&path))?;
        for n in notes {
            writeln!(out, "# {n}").map_err(CliError::io(&path))?;
        }
        let mut writer = csv::Writer::from_writer(out);
        writer.write_record(header).map_err(|e| csv_error(&path, e))?;
        Ok(CsvReport { path, writer })
    }

    pub fn row<I, S>(&mut self, fields: I) -> Result<()>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[u8]>,
    {
        self.writer.write_record(fields).map_err(|e| csv_error(&self.path, e))
    }

    pub fn finish(mut self) -> Result<PathBuf> {
        self.writer.flush().map_err(CliError::io(&self.path))?;
        Ok(self.path)
    }
}

pub(crate) fn csv_error(path: &Path, e: csv::Error) -> CliError {
    match e.into_kind() {
        csv::ErrorKind::Io(source) => CliError::Io {
            path: path.into(),
            source,
        },
        other => CliError::format(path, format!("{other:?}")),
    }
}

/// Shortest representation that parses back to the same value.
pub fn num(x: f64) -> String {
    format!("{x}")
}

/// Reader that skips comment lines.
pub fn open_csv(path: &Path) -> Result<csv::Reader<File>> {
    let file = File::open(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => CliError::MissingInput {
            path: path.into(),
            reason: "file not found".into(),
        },
        _ => CliError::Io {
            path: path.into(),
            source: e,
        },
    })?;
    Ok(csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(file))
}

/// The seed and config hash recorded on the first line of a CSV file.
pub fn read_meta(path: &Path) -> Result<Meta> {
    let file = File::open(path).map_err(CliError::io(path))?;
    let mut first = String::new();
    BufReader::new(file).read_line(&mut first).map_err(CliError::io(path))?;
    Meta::parse(first.trim_end()).ok_or_else(|| CliError::format(path, "missing `# seed=... config_hash=...` line"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn meta_line_round_trips() {
        let m = Meta {
            seed: 42,
            config_hash: "00ff".into(),
        };
        assert_eq!(Meta::parse(&m.line()), Some(m));
        assert_eq!(Meta::parse("# nothing"), None);
    }

    #[test]
    fn numbers_round_trip() {
        for x in [0.1, 1e-300, 123456.789, -0.0, 2.0f64.sqrt()] {
            assert_eq!(num(x).parse::<f64>().unwrap().to_bits(), x.to_bits());
        }
    }
}
