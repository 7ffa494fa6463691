//! α × t parameter sweeps.
//!
//! Every cell is an exact evaluation (no sampling): the table is built and
//! summarised through [`expected_exposure`]. A cell that fails, typically
//! from exp overflow at large α and tiny t, records its error and the rest
//! of the grid still completes.

use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use super::distribution::{data_distribution, expected_exposure};
use crate::dataset::{CategoryId, DatasetIndex};
use crate::error::{AnalysisError, FactorError, FormatError};
use crate::factors::{build_table, Method, RebalanceConfig};
use crate::frequency::{compute_frequencies, FrequencyTable};
use crate::sampling::SampleMode;

pub const DEFAULT_ALPHAS: [f64; 3] = [0.5, 1.0, 2.0];
pub const DEFAULT_THRESHOLDS: [f64; 4] = [0.1, 0.01, 0.001, 0.0001];

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CellStats {
    /// Expected instance-exposure share of the rarest class.
    pub rare_class_share: f64,
    pub max_class_factor: f64,
    /// `Σ r_i / N`.
    pub epoch_inflation: f64,
    /// Expected manifest length: `Σ r_i` in expand mode, `N` in draw mode.
    pub epoch_length: f64,
    /// L1 distance between the expected training distribution and `P_data`.
    pub l1_shift: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepCell {
    pub alpha: f64,
    pub threshold: f64,
    #[serde(serialize_with = "serialize_result")]
    pub result: Result<CellStats, FactorError>,
}

fn serialize_result<S: serde::Serializer>(r: &Result<CellStats, FactorError>, s: S) -> Result<S::Ok, S::Error> {
    use serde::ser::SerializeMap;
    let mut map = s.serialize_map(Some(1))?;
    match r {
        Ok(stats) => map.serialize_entry("ok", stats)?,
        Err(e) => map.serialize_entry("error", &e.to_string())?,
    }
    map.end()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepGrid {
    pub dataset_id: String,
    pub method: Method,
    pub mode: SampleMode,
    pub alphas: Vec<f64>,
    pub thresholds: Vec<f64>,
    /// The class whose share is tracked: lowest image fraction, then lowest
    /// instance fraction, then lowest id.
    pub rare_class: CategoryId,
    /// Row-major: `cells[a * thresholds.len() + t]`.
    pub cells: Vec<SweepCell>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepMetric {
    RareClassShare,
    MaxClassFactor,
    EpochInflation,
    L1Shift,
}

impl SweepMetric {
    pub const ALL: [SweepMetric; 4] = [
        SweepMetric::RareClassShare,
        SweepMetric::MaxClassFactor,
        SweepMetric::EpochInflation,
        SweepMetric::L1Shift,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SweepMetric::RareClassShare => "rare_class_share",
            SweepMetric::MaxClassFactor => "max_class_factor",
            SweepMetric::EpochInflation => "epoch_inflation",
            SweepMetric::L1Shift => "l1_shift",
        }
    }

    fn pick(self, s: &CellStats) -> f64 {
        match self {
            SweepMetric::RareClassShare => s.rare_class_share,
            SweepMetric::MaxClassFactor => s.max_class_factor,
            SweepMetric::EpochInflation => s.epoch_inflation,
            SweepMetric::L1Shift => s.l1_shift,
        }
    }
}

impl SweepGrid {
    pub fn cell(&self, alpha_idx: usize, threshold_idx: usize) -> &SweepCell {
        &self.cells[alpha_idx * self.thresholds.len() + threshold_idx]
    }

    /// Long format: one row per cell.
    pub fn write_tsv<W: Write>(&self, mut out: W) -> Result<(), FormatError> {
        writeln!(
            out,
            "# dataset_id={} method={} mode={} rare_class={}",
            self.dataset_id, self.method, self.mode, self.rare_class
        )?;
        writeln!(
            out,
            "alpha\tthreshold\trare_class_share\tmax_class_factor\tepoch_inflation\tepoch_length\tl1_shift\terror"
        )?;
        for c in &self.cells {
            match &c.result {
                Ok(s) => writeln!(
                    out,
                    "{}\t{}\t{}\t{}\t{}\t{}\t{}\t",
                    c.alpha, c.threshold, s.rare_class_share, s.max_class_factor, s.epoch_inflation, s.epoch_length, s.l1_shift
                )?,
                Err(e) => writeln!(out, "{}\t{}\t\t\t\t\t\t{}", c.alpha, c.threshold, e)?,
            }
        }
        Ok(())
    }

    /// α rows by threshold columns for one metric. Failed cells print `error`.
    pub fn write_matrix<W: Write>(&self, metric: SweepMetric, mut out: W) -> Result<(), FormatError> {
        writeln!(out, "# {} method={} dataset_id={}", metric.name(), self.method, self.dataset_id)?;
        write!(out, "alpha\\threshold")?;
        for t in &self.thresholds {
            write!(out, "\t{t}")?;
        }
        writeln!(out)?;
        for (a, alpha) in self.alphas.iter().enumerate() {
            write!(out, "{alpha}")?;
            for t in 0..self.thresholds.len() {
                match &self.cell(a, t).result {
                    Ok(s) => write!(out, "\t{:.6}", metric.pick(s))?,
                    Err(_) => write!(out, "\terror")?,
                }
            }
            writeln!(out)?;
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("grid serialises")
    }
}

fn rarest_class(freqs: &FrequencyTable) -> Option<CategoryId> {
    freqs
        .present()
        .min_by(|a, b| {
            a.image_fraction
                .total_cmp(&b.image_fraction)
                .then(a.instance_fraction.total_cmp(&b.instance_fraction))
                .then(a.category_id.cmp(&b.category_id))
        })
        .map(|c| c.category_id)
}

fn evaluate(
    index: &DatasetIndex,
    freqs: &FrequencyTable,
    config: &RebalanceConfig,
    mode: SampleMode,
    rare: CategoryId,
) -> Result<CellStats, FactorError> {
    let table = build_table(freqs, index, config)?;
    let exposure = expected_exposure(index, &table);
    let total: f64 = table.images.iter().map(|i| i.factor).sum();
    let n = table.images.len() as f64;
    Ok(CellStats {
        rare_class_share: exposure.get(rare).unwrap_or(0.0),
        max_class_factor: table.classes.iter().map(|c| c.factor).fold(f64::NAN, f64::max),
        epoch_inflation: total / n,
        epoch_length: match mode {
            SampleMode::Expand => total,
            SampleMode::Draw => n,
        },
        l1_shift: exposure.l1(&data_distribution(freqs, &table)),
    })
}

/// Evaluates `method` at every `(alpha, threshold)` pair. For methods
/// without α the rows repeat, which keeps the grid shape uniform.
pub fn sweep(
    index: &DatasetIndex,
    method: Method,
    alphas: &[f64],
    thresholds: &[f64],
    mode: SampleMode,
) -> Result<SweepGrid, AnalysisError> {
    if alphas.is_empty() || thresholds.is_empty() {
        return Err(AnalysisError::InvalidArgument(
            "sweep needs at least one alpha and one threshold".into(),
        ));
    }
    let freqs = compute_frequencies(index)?;
    let rare = rarest_class(&freqs).ok_or_else(|| {
        AnalysisError::InvalidArgument("dataset has no annotated class".into())
    })?;
    let pairs: Vec<(f64, f64)> = alphas
        .iter()
        .flat_map(|&a| thresholds.iter().map(move |&t| (a, t)))
        .collect();
    let cells = pairs
        .par_iter()
        .map(|&(alpha, threshold)| {
            let config = RebalanceConfig::for_method(method, threshold, alpha);
            SweepCell {
                alpha,
                threshold,
                result: config.validate().and_then(|_| evaluate(index, &freqs, &config, mode, rare)),
            }
        })
        .collect();
    Ok(SweepGrid {
        dataset_id: index.dataset_id().to_owned(),
        method,
        mode,
        alphas: alphas.to_vec(),
        thresholds: thresholds.to_vec(),
        rare_class: rare,
        cells,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::synthetic::{dataset_from_class_counts, InstanceLaw};
    use crate::analysis::ClassDistribution;
    use crate::factors::build_table;
    use crate::fixtures::{dataset_from_counts, UAV_TRAINING};

    #[test]
    fn default_grid_on_uav_fixture() {
        let idx = dataset_from_counts(&UAV_TRAINING);
        let grid = sweep(&idx, Method::Eirfs, &DEFAULT_ALPHAS, &DEFAULT_THRESHOLDS, SampleMode::Draw).unwrap();
        assert_eq!(grid.cells.len(), 12);
        // Lake has the lowest image fraction
        assert_eq!(grid.rare_class, 3);
        for c in &grid.cells {
            let s = c.result.as_ref().unwrap();
            assert!(s.max_class_factor > 1.0);
            assert!(s.rare_class_share > 0.0 && s.rare_class_share < 1.0);
            assert!((0.0..=2.0).contains(&s.l1_shift));
            assert_eq!(s.epoch_length, idx.total_images() as f64);
        }
        let mut buf = Vec::new();
        grid.write_matrix(SweepMetric::MaxClassFactor, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 5);
        assert!(text.lines().nth(1).unwrap().starts_with("alpha\\threshold\t0.1\t0.01"));
    }

    #[test]
    fn single_cell_matches_direct_build() {
        let idx = dataset_from_counts(&UAV_TRAINING);
        let grid = sweep(&idx, Method::Eirfs, &[2.0], &[1e-4], SampleMode::Expand).unwrap();
        let s = grid.cells[0].result.as_ref().unwrap();
        let freqs = compute_frequencies(&idx).unwrap();
        let table = build_table(&freqs, &idx, &RebalanceConfig::eirfs(1e-4, 2.0)).unwrap();
        let max = table.classes.iter().map(|c| c.factor).fold(0.0, f64::max);
        assert_eq!(s.max_class_factor, max);
        assert_eq!(s.epoch_inflation, table.epoch_inflation());
        let exp: ClassDistribution = expected_exposure(&idx, &table);
        assert_eq!(s.rare_class_share, exp.get(3).unwrap());
    }

    #[test]
    fn rare_share_grows_with_alpha() {
        let idx = dataset_from_class_counts("s", &[10_000, 3_000, 1_000, 300, 100], InstanceLaw::Constant(1), 2).unwrap();
        let alphas = [0.25, 0.5, 1.0, 2.0, 4.0];
        let grid = sweep(&idx, Method::Eirfs, &alphas, &DEFAULT_THRESHOLDS, SampleMode::Draw).unwrap();
        for (t, thr) in DEFAULT_THRESHOLDS.iter().enumerate() {
            for a in 1..alphas.len() {
                let lo = grid.cell(a - 1, t).result.as_ref().unwrap().rare_class_share;
                let hi = grid.cell(a, t).result.as_ref().unwrap().rare_class_share;
                assert!(hi >= lo, "t={thr} alpha {} -> {}: {lo} > {hi}", alphas[a - 1], alphas[a]);
            }
        }
    }

    #[test]
    fn overflow_is_recorded_per_cell() {
        let idx = dataset_from_class_counts("o", &[1_000_000, 1], InstanceLaw::Constant(1), 0).unwrap();
        let grid = sweep(&idx, Method::Eirfs, &[1.0, 1e4], &[0.25], SampleMode::Draw).unwrap();
        assert!(grid.cells[0].result.is_ok());
        assert!(matches!(grid.cells[1].result, Err(FactorError::InCategory { .. })));
        let mut buf = Vec::new();
        grid.write_matrix(SweepMetric::RareClassShare, &mut buf).unwrap();
        assert!(String::from_utf8(buf).unwrap().contains("\terror"));
    }

    #[test]
    fn empty_parameters_rejected() {
        let idx = dataset_from_counts(&UAV_TRAINING);
        assert!(sweep(&idx, Method::Rfs, &[], &[0.1], SampleMode::Draw).is_err());
    }
}
