//! Epoch manifests from a repeat-factor table.
//!
//! Two consumption modes are supported:
//!
//! * **expand**: image `i` appears `floor(r_i)` times plus once more with
//!   probability `frac(r_i)`, then the epoch is shuffled.
//! * **draw**: `size` independent draws with replacement from `p_i`.
//!
//! Epoch `k` always uses sub-stream `k` of the seed (see [`crate::rng`]), so
//! a manifest depends only on `(table, mode, size, seed, k)`.

mod alias;
mod manifest_file;

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::SamplingError;
use crate::factors::{RebalanceConfig, RepeatFactorTable};
use crate::rng::StreamRng;

pub use alias::AliasTable;
pub use manifest_file::{manifest_to_string, read_manifest, write_manifest, ManifestFile, MANIFEST_MAGIC};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum SampleMode {
    Expand,
    #[default]
    Draw,
}

impl SampleMode {
    pub fn as_str(self) -> &'static str {
        match self {
            SampleMode::Expand => "expand",
            SampleMode::Draw => "draw",
        }
    }
}

impl fmt::Display for SampleMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SampleMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "expand" => Ok(SampleMode::Expand),
            "draw" => Ok(SampleMode::Draw),
            other => Err(format!("unknown mode `{other}`")),
        }
    }
}

/// One epoch: positions into the source table's image list, in order.
#[derive(Debug, Clone, PartialEq)]
pub struct EpochManifest {
    pub epoch_index: u64,
    pub seed: u64,
    pub mode: SampleMode,
    pub source_config: RebalanceConfig,
    pub dataset_id: String,
    pub entries: Vec<u32>,
}

impl EpochManifest {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Occurrences of every image, indexed like the table's image list.
    pub fn multiplicities(&self, num_images: usize) -> Vec<u32> {
        let mut counts = vec![0u32; num_images];
        for &e in &self.entries {
            counts[e as usize] += 1;
        }
        counts
    }

    pub fn image_ids<'a>(&'a self, table: &'a RepeatFactorTable) -> impl Iterator<Item = &'a str> + 'a {
        self.entries
            .iter()
            .map(move |&e| &*table.images[e as usize].image_id)
    }
}

fn check_table(table: &RepeatFactorTable) -> Result<(), SamplingError> {
    if table.images.is_empty() {
        return Err(SamplingError::EmptyTable);
    }
    if table.images.len() > u32::MAX as usize {
        return Err(SamplingError::InvalidFactor {
            image_id: "<too many images>".into(),
            value: table.images.len() as f64,
        });
    }
    if let Some(img) = table
        .images
        .iter()
        .find(|i| !(i.factor.is_finite() && i.factor > 0.0))
    {
        return Err(SamplingError::InvalidFactor {
            image_id: img.image_id.to_string(),
            value: img.factor,
        });
    }
    Ok(())
}

fn manifest(table: &RepeatFactorTable, mode: SampleMode, epoch_index: u64, seed: u64, entries: Vec<u32>) -> EpochManifest {
    EpochManifest {
        epoch_index,
        seed,
        mode,
        source_config: table.config,
        dataset_id: table.dataset_id.clone(),
        entries,
    }
}

fn expand_unchecked(table: &RepeatFactorTable, epoch_index: u64, seed: u64) -> EpochManifest {
    let mut rng = StreamRng::new(seed, epoch_index);
    let expected: f64 = table.images.iter().map(|i| i.factor).sum();
    let mut entries = Vec::with_capacity(expected.ceil() as usize + 1);
    for (pos, img) in table.images.iter().enumerate() {
        let whole = img.factor.floor();
        let frac = img.factor - whole;
        let mut copies = whole as usize;
        if frac > 0.0 && rng.bernoulli(frac) {
            copies += 1;
        }
        entries.extend(std::iter::repeat_n(pos as u32, copies));
    }
    rng.shuffle(&mut entries);
    manifest(table, SampleMode::Expand, epoch_index, seed, entries)
}

fn draw_with(
    table: &RepeatFactorTable,
    sampler: &AliasTable,
    size: usize,
    epoch_index: u64,
    seed: u64,
) -> EpochManifest {
    let mut rng = StreamRng::new(seed, epoch_index);
    let mut entries = Vec::new();
    sampler.sample_into(&mut rng, size, &mut entries);
    manifest(table, SampleMode::Draw, epoch_index, seed, entries)
}

/// Stochastic-rounding expansion of every image, then a seeded shuffle.
pub fn expand_epoch(table: &RepeatFactorTable, epoch_index: u64, seed: u64) -> Result<EpochManifest, SamplingError> {
    check_table(table)?;
    Ok(expand_unchecked(table, epoch_index, seed))
}

/// `size` i.i.d. categorical draws from the table's probabilities.
pub fn draw_epoch(
    table: &RepeatFactorTable,
    size: usize,
    epoch_index: u64,
    seed: u64,
) -> Result<EpochManifest, SamplingError> {
    check_table(table)?;
    if size == 0 {
        return Err(SamplingError::ZeroSize);
    }
    let sampler = AliasTable::from_weights(table.images.iter().map(|i| i.factor));
    Ok(draw_with(table, &sampler, size, epoch_index, seed))
}

/// Epochs `0..epochs`, generated in parallel. `size` defaults to the number
/// of images and is ignored in expand mode.
pub fn plan_epochs(
    table: &RepeatFactorTable,
    mode: SampleMode,
    epochs: u64,
    size: Option<usize>,
    seed: u64,
) -> Result<Vec<EpochManifest>, SamplingError> {
    plan_epoch_range(table, mode, 0..epochs, size, seed)
}

/// Like [`plan_epochs`] for an arbitrary range of epoch indices.
pub fn plan_epoch_range(
    table: &RepeatFactorTable,
    mode: SampleMode,
    epochs: std::ops::Range<u64>,
    size: Option<usize>,
    seed: u64,
) -> Result<Vec<EpochManifest>, SamplingError> {
    check_table(table)?;
    if epochs.is_empty() {
        return Err(SamplingError::ZeroEpochs);
    }
    match mode {
        SampleMode::Expand => Ok(epochs
            .into_par_iter()
            .map(|k| expand_unchecked(table, k, seed))
            .collect()),
        SampleMode::Draw => {
            let size = size.unwrap_or(table.images.len());
            if size == 0 {
                return Err(SamplingError::ZeroSize);
            }
            let sampler = AliasTable::from_weights(table.images.iter().map(|i| i.factor));
            Ok(epochs
                .into_par_iter()
                .map(|k| draw_with(table, &sampler, size, k, seed))
                .collect())
        }
    }
}
