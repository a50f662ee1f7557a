use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::expert::expert_action;
use super::state::{new_arena_from, ArenaConfig};
use crate::model::LabelledState;
use crate::numerics::RngStream;
use crate::par::{try_map_range, Exec};
use crate::{Error, Result};

/// Fraction of shuffled samples held out for validation.
pub const VALIDATION_FRACTION: f64 = 0.1;

#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub train: Vec<LabelledState>,
    pub validation: Vec<LabelledState>,
}

/// Plays one expert episode of at most `horizon` frames, recording the
/// state before every action. Stops early if the controlled hero dies.
pub fn expert_episode(config: &ArenaConfig, seed: u64, episode: u64, horizon: usize) -> Result<Vec<LabelledState>> {
    let mut arena = new_arena_from(config, &mut RngStream::named(seed, "arena.episode", episode))?;
    let mut out = Vec::with_capacity(horizon);
    for _ in 0..horizon {
        if !arena.hero().alive {
            break;
        }
        let (label, true_attention) = expert_action(&arena);
        out.push(LabelledState { state: arena.features(), label: label.clone(), true_attention });
        arena.step(&label)?;
    }
    Ok(out)
}

/// Rolls `n_episodes` expert episodes, shuffles all samples with the
/// seeded stream and splits them 90/10 into train and validation.
pub fn generate_dataset(n_episodes: usize, horizon: usize, config: &ArenaConfig, seed: u64, exec: Exec) -> Result<Dataset> {
    if n_episodes == 0 || horizon == 0 {
        return Err(Error::InvalidInput("n_episodes and horizon must be at least 1".into()));
    }
    config.validate()?;
    let episodes = try_map_range(exec, n_episodes, |e| expert_episode(config, seed, e as u64, horizon))?;
    let mut all: Vec<LabelledState> = episodes.into_iter().flatten().collect();
    RngStream::named(seed, "dataset.shuffle", 0).shuffle(&mut all);
    let n_val = (all.len() as f64 * VALIDATION_FRACTION).round() as usize;
    let validation = all.split_off(all.len() - n_val);
    Ok(Dataset { train: all, validation })
}

/// First line of a dataset file.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetHeader {
    pub format: String,
    pub version: u32,
    pub split: String,
    pub config_hash: String,
    pub seed: u64,
    pub samples: usize,
}

pub const DATASET_FORMAT: &str = "lacon-dataset";

impl DatasetHeader {
    pub fn new(split: &str, config_hash: &str, seed: u64, samples: usize) -> Self {
        DatasetHeader {
            format: DATASET_FORMAT.into(),
            version: 1,
            split: split.into(),
            config_hash: config_hash.into(),
            seed,
            samples,
        }
    }
}

pub fn write_dataset(path: &Path, header: &DatasetHeader, samples: &[LabelledState]) -> Result<()> {
    let mut w = BufWriter::new(std::fs::File::create(path)?);
    serde_json::to_writer(&mut w, header)?;
    w.write_all(b"\n")?;
    for s in samples {
        serde_json::to_writer(&mut w, s)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a dataset file, validating the header and every sample.
pub fn read_dataset(path: &Path) -> Result<(DatasetHeader, Vec<LabelledState>)> {
    let file = std::fs::File::open(path).map_err(|e| Error::Data(format!("{}: {e}", path.display())))?;
    let mut lines = BufReader::new(file).lines();
    let first = lines.next().ok_or_else(|| Error::Data(format!("{}: empty file", path.display())))??;
    let header: DatasetHeader =
        serde_json::from_str(&first).map_err(|e| Error::Data(format!("{}: bad header: {e}", path.display())))?;
    if header.format != DATASET_FORMAT || header.version != 1 {
        return Err(Error::Data(format!("{}: unsupported dataset format", path.display())));
    }
    let mut samples = Vec::with_capacity(header.samples);
    for (k, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let s: LabelledState =
            serde_json::from_str(&line).map_err(|e| Error::Data(format!("{} line {}: {e}", path.display(), k + 2)))?;
        s.state.validate().map_err(|e| Error::Data(format!("{} line {}: {e}", path.display(), k + 2)))?;
        s.label
            .validate(s.state.n, usize::MAX)
            .map_err(|e| Error::Data(format!("{} line {}: {e}", path.display(), k + 2)))?;
        samples.push(s);
    }
    if samples.len() != header.samples {
        return Err(Error::Data(format!(
            "{}: header promises {} samples, found {}",
            path.display(),
            header.samples,
            samples.len()
        )));
    }
    Ok((header, samples))
}
