//! The four subcommands. Each has a compute step that returns rows and a
//! `run` that loads inputs and writes the CSV files.

pub mod error_sweep;
pub mod gen_traces;
pub mod privacy_report;
pub mod protocol_check;

use rayon::prelude::*;

use dpmeter_core::traces::{resample, ResampleMode};

use crate::config::ExperimentConfig;
use crate::corpus::{load_corpus, Corpus};
use crate::error::Result;

/// Total load of every household in mean watts per slot.
pub fn slot_rows(corpus: &Corpus, slot_minutes: u32) -> Result<Vec<Vec<f64>>> {
    corpus
        .traces
        .par_iter()
        .map(|t| Ok(resample(&t.total_minutes(), slot_minutes, ResampleMode::Mean)?))
        .collect()
}

pub fn load_configured_corpus(cfg: &ExperimentConfig) -> Result<Corpus> {
    load_corpus(&cfg.corpus_dir())
}
