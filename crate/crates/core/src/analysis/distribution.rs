//! Data vs. training class distributions.
//!
//! `P_data(c)` is the instance share `f_{b,c}`. The theoretical training
//! distribution is `P_train(c) ∝ r_c · P_data(c)`, which is exact only when
//! every image holds a single class. [`expected_exposure`] is the exact
//! expectation in every regime: `∝ Σ_i r_i · n_{i,c}`.

use std::collections::HashMap;
use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use super::power_law::{fit_power_law, PowerLawFit};
use crate::dataset::{CategoryId, DatasetIndex};
use crate::error::{AnalysisError, FormatError};
use crate::factors::{RebalanceConfig, RepeatFactorTable};
use crate::frequency::FrequencyTable;
use crate::sampling::{plan_epochs, SampleMode};

/// A distribution over categories, in the order of `categories`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassDistribution {
    pub categories: Vec<CategoryId>,
    pub probabilities: Vec<f64>,
}

impl ClassDistribution {
    fn from_weights(categories: Vec<CategoryId>, weights: Vec<f64>) -> Self {
        let total: f64 = weights.iter().sum();
        let probabilities = if total > 0.0 {
            weights.iter().map(|w| w / total).collect()
        } else {
            vec![0.0; weights.len()]
        };
        Self {
            categories,
            probabilities,
        }
    }

    pub fn get(&self, id: CategoryId) -> Option<f64> {
        self.categories
            .iter()
            .position(|&c| c == id)
            .map(|i| self.probabilities[i])
    }

    pub fn sum(&self) -> f64 {
        self.probabilities.iter().sum()
    }

    /// L1 distance; both distributions must list the same categories.
    pub fn l1(&self, other: &ClassDistribution) -> f64 {
        assert_eq!(self.categories, other.categories, "distributions over different categories");
        self.probabilities
            .iter()
            .zip(&other.probabilities)
            .map(|(a, b)| (a - b).abs())
            .sum()
    }
}

/// `P_data` over the classes that participate in `table`.
pub fn data_distribution(freqs: &FrequencyTable, table: &RepeatFactorTable) -> ClassDistribution {
    let ids: Vec<CategoryId> = table.classes.iter().map(|c| c.category_id).collect();
    let weights = ids
        .iter()
        .map(|&id| freqs.get(id).map_or(0.0, |c| c.instance_fraction))
        .collect();
    ClassDistribution::from_weights(ids, weights)
}

/// Image-frequency variant of `P_data`: normalised `f_{i,c}`.
pub fn image_data_distribution(freqs: &FrequencyTable, table: &RepeatFactorTable) -> ClassDistribution {
    let ids: Vec<CategoryId> = table.classes.iter().map(|c| c.category_id).collect();
    let weights = ids
        .iter()
        .map(|&id| freqs.get(id).map_or(0.0, |c| c.image_fraction))
        .collect();
    ClassDistribution::from_weights(ids, weights)
}

/// Normalised `r_c · P_data(c)`.
pub fn theoretical_train_distribution(freqs: &FrequencyTable, table: &RepeatFactorTable) -> ClassDistribution {
    let ids: Vec<CategoryId> = table.classes.iter().map(|c| c.category_id).collect();
    let weights = table
        .classes
        .iter()
        .map(|c| c.factor * freqs.get(c.category_id).map_or(0.0, |f| f.instance_fraction))
        .collect();
    ClassDistribution::from_weights(ids, weights)
}

/// Exact expected per-class instance exposure under `table`.
pub fn expected_exposure(index: &DatasetIndex, table: &RepeatFactorTable) -> ClassDistribution {
    let ids: Vec<CategoryId> = table.classes.iter().map(|c| c.category_id).collect();
    let slot: HashMap<CategoryId, usize> = ids.iter().enumerate().map(|(i, &c)| (c, i)).collect();
    let mut weights = vec![0.0; ids.len()];
    for (img, f) in index.images().iter().zip(&table.images) {
        for (c, &n) in &img.instance_counts {
            if let Some(&s) = slot.get(c) {
                weights[s] += f.factor * n as f64;
            }
        }
    }
    ClassDistribution::from_weights(ids, weights)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassRow {
    pub category_id: CategoryId,
    pub name: String,
    pub factor: f64,
    pub p_data: f64,
    pub p_data_image: f64,
    pub p_train_theory: f64,
    pub p_train_expected: f64,
    pub p_train_empirical: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DistributionReport {
    pub dataset_id: String,
    pub config: RebalanceConfig,
    pub mode: SampleMode,
    pub seed: u64,
    pub epochs: u64,
    /// Draws per epoch in draw mode; `None` in expand mode.
    pub epoch_size: Option<usize>,
    /// Total manifest entries generated.
    pub samples: u64,
    /// True when no image holds more than one class, the regime in which
    /// `P_train ∝ r_c · P_data` is exact.
    pub single_class_regime: bool,
    pub classes: Vec<ClassRow>,
    pub l1_theory_empirical: f64,
    pub l1_expected_empirical: f64,
    pub l1_data_theory: f64,
    pub power_law: Option<PowerLawFit>,
    pub notes: Vec<String>,
}

impl DistributionReport {
    fn column(&self, pick: impl Fn(&ClassRow) -> f64) -> ClassDistribution {
        ClassDistribution {
            categories: self.classes.iter().map(|c| c.category_id).collect(),
            probabilities: self.classes.iter().map(pick).collect(),
        }
    }

    pub fn data(&self) -> ClassDistribution {
        self.column(|c| c.p_data)
    }

    pub fn theory(&self) -> ClassDistribution {
        self.column(|c| c.p_train_theory)
    }

    pub fn empirical(&self) -> ClassDistribution {
        self.column(|c| c.p_train_empirical)
    }

    pub fn expected(&self) -> ClassDistribution {
        self.column(|c| c.p_train_expected)
    }

    pub fn write_tsv<W: Write>(&self, mut out: W) -> Result<(), FormatError> {
        writeln!(out, "# dataset_id={}", self.dataset_id)?;
        writeln!(out, "# {} mode={} seed={}", self.config, self.mode, self.seed)?;
        writeln!(
            out,
            "# epochs={} epoch_size={} samples={} single_class_regime={}",
            self.epochs,
            self.epoch_size.map_or_else(|| "expand".to_owned(), |s| s.to_string()),
            self.samples,
            self.single_class_regime
        )?;
        writeln!(
            out,
            "# l1_theory_empirical={} l1_expected_empirical={} l1_data_theory={}",
            self.l1_theory_empirical, self.l1_expected_empirical, self.l1_data_theory
        )?;
        if let Some(fit) = &self.power_law {
            writeln!(
                out,
                "# power_law c0={} gamma={} residual_norm={}",
                fit.c0, fit.gamma, fit.residual_norm
            )?;
        }
        for note in &self.notes {
            writeln!(out, "# note: {note}")?;
        }
        let mut w = csv::WriterBuilder::new().delimiter(b'\t').from_writer(out);
        for row in &self.classes {
            w.serialize(row)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialises")
    }
}

/// Generates `epochs` manifests and counts per-class instance exposure
/// over every entry, weighting each sampled image by its instance counts.
///
/// In draw mode `size` defaults to the number of images.
pub fn simulate_training_distribution(
    index: &DatasetIndex,
    freqs: &FrequencyTable,
    table: &RepeatFactorTable,
    mode: SampleMode,
    epochs: u64,
    size: Option<usize>,
    seed: u64,
) -> Result<DistributionReport, AnalysisError> {
    if index.images().len() != table.images.len() {
        return Err(AnalysisError::InvalidArgument(format!(
            "table has {} images, index has {}",
            table.images.len(),
            index.images().len()
        )));
    }
    let ids: Vec<CategoryId> = table.classes.iter().map(|c| c.category_id).collect();
    let slot: HashMap<CategoryId, usize> = ids.iter().enumerate().map(|(i, &c)| (c, i)).collect();
    let per_image: Vec<Vec<(usize, u64)>> = index
        .images()
        .iter()
        .map(|img| {
            img.instance_counts
                .iter()
                .filter_map(|(c, &n)| slot.get(c).map(|&s| (s, n as u64)))
                .collect()
        })
        .collect();

    let manifests = plan_epochs(table, mode, epochs, size, seed)?;
    let samples: u64 = manifests.iter().map(|m| m.len() as u64).sum();
    let counts = manifests
        .par_iter()
        .map(|m| {
            let mut acc = vec![0u64; ids.len()];
            for &e in &m.entries {
                for &(s, n) in &per_image[e as usize] {
                    acc[s] += n;
                }
            }
            acc
        })
        .reduce(
            || vec![0u64; ids.len()],
            |mut a, b| {
                a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                a
            },
        );
    let empirical = ClassDistribution::from_weights(ids.clone(), counts.iter().map(|&n| n as f64).collect());

    let data = data_distribution(freqs, table);
    let data_image = image_data_distribution(freqs, table);
    let theory = theoretical_train_distribution(freqs, table);
    let expected = expected_exposure(index, table);
    let single_class_regime = index.is_single_class();

    let mut notes = Vec::new();
    if !single_class_regime {
        notes.push(
            "images hold several classes: r_c * P_data is not exact here, \
             l1_theory_empirical is published for reference only"
                .to_owned(),
        );
    }
    if mode == SampleMode::Draw && size.is_none() {
        notes.push(format!("epoch size defaulted to the number of images ({})", table.images.len()));
    }
    let power_law = match fit_power_law(freqs) {
        Ok(fit) => Some(fit),
        Err(e) => {
            notes.push(format!("power-law fit skipped: {e}"));
            None
        }
    };
    if power_law.is_some() {
        notes.push(
            "composed power-law shapes of P_train assume an inactive clamp and an exact power-law P_data".to_owned(),
        );
    }

    let classes = table
        .classes
        .iter()
        .enumerate()
        .map(|(i, c)| ClassRow {
            category_id: c.category_id,
            name: c.name.clone(),
            factor: c.factor,
            p_data: data.probabilities[i],
            p_data_image: data_image.probabilities[i],
            p_train_theory: theory.probabilities[i],
            p_train_expected: expected.probabilities[i],
            p_train_empirical: empirical.probabilities[i],
        })
        .collect();

    Ok(DistributionReport {
        dataset_id: table.dataset_id.clone(),
        config: table.config,
        mode,
        seed,
        epochs,
        epoch_size: match mode {
            SampleMode::Draw => Some(size.unwrap_or(table.images.len())),
            SampleMode::Expand => None,
        },
        samples,
        single_class_regime,
        classes,
        l1_theory_empirical: theory.l1(&empirical),
        l1_expected_empirical: expected.l1(&empirical),
        l1_data_theory: data.l1(&theory),
        power_law,
        notes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::synthetic::{dataset_from_class_counts, InstanceLaw};
    use crate::dataset::{CategoryInfo, ImageRecord};
    use crate::factors::{build_table, ClassFactor};
    use crate::frequency::compute_frequencies;

    #[test]
    fn two_class_normalisation() {
        let freqs = FrequencyTable {
            dataset_id: "x".into(),
            total_images: 10,
            total_instances: 10,
            classes: vec![
                crate::frequency::ClassFrequency {
                    category_id: 0,
                    name: "a".into(),
                    image_count: 9,
                    instance_count: 9,
                    image_fraction: 0.9,
                    instance_fraction: 0.9,
                },
                crate::frequency::ClassFrequency {
                    category_id: 1,
                    name: "b".into(),
                    image_count: 1,
                    instance_count: 1,
                    image_fraction: 0.1,
                    instance_fraction: 0.1,
                },
            ],
        };
        let table = RepeatFactorTable {
            dataset_id: "x".into(),
            config: RebalanceConfig::rfs(0.5),
            classes: vec![
                ClassFactor { category_id: 0, name: "a".into(), image_fraction: 0.9, instance_fraction: 0.9, factor: 1.0 },
                ClassFactor { category_id: 1, name: "b".into(), image_fraction: 0.1, instance_fraction: 0.1, factor: 3.0 },
            ],
            excluded: vec![],
            images: vec![],
        };
        let p = theoretical_train_distribution(&freqs, &table);
        assert!((p.probabilities[0] - 0.75).abs() < 1e-15);
        assert!((p.probabilities[1] - 0.25).abs() < 1e-15);
    }

    #[test]
    fn baseline_theory_is_data() {
        let idx = dataset_from_class_counts("b", &[50, 20, 5], InstanceLaw::Uniform { min: 1, max: 3 }, 1).unwrap();
        let f = compute_frequencies(&idx).unwrap();
        let t = build_table(&f, &idx, &RebalanceConfig::baseline()).unwrap();
        assert_eq!(theoretical_train_distribution(&f, &t), data_distribution(&f, &t));
        assert!(expected_exposure(&idx, &t).l1(&data_distribution(&f, &t)) < 1e-12);
    }

    #[test]
    fn single_class_simulation_agrees() {
        let idx = dataset_from_class_counts("s", &[10_000, 3_000, 1_000, 300, 100], InstanceLaw::Constant(1), 4).unwrap();
        let f = compute_frequencies(&idx).unwrap();
        let t = build_table(&f, &idx, &RebalanceConfig::eirfs(0.05, 2.0)).unwrap();
        let r = simulate_training_distribution(&idx, &f, &t, SampleMode::Draw, 10, Some(100_000), 9).unwrap();
        assert!(r.single_class_regime);
        assert_eq!(r.samples, 1_000_000);
        assert!(r.l1_theory_empirical <= 0.01, "{}", r.l1_theory_empirical);
        for d in [r.data(), r.theory(), r.empirical(), r.expected()] {
            assert!((d.sum() - 1.0).abs() < 1e-9);
        }
        assert!(r.l1_data_theory > 0.1);
    }

    #[test]
    fn multi_class_regime_is_flagged() {
        let idx = DatasetIndex::new(
            "m",
            vec![CategoryInfo::new(0, "a"), CategoryInfo::new(1, "b")],
            (0..200)
                .map(|i| {
                    let img = ImageRecord::new(format!("{i}"), "p").with_counts([(0, 1)]);
                    if i % 7 == 0 { img.with_counts([(1, 2)]) } else { img }
                })
                .collect(),
        );
        let f = compute_frequencies(&idx).unwrap();
        let t = build_table(&f, &idx, &RebalanceConfig::eirfs(0.1, 2.0)).unwrap();
        let r = simulate_training_distribution(&idx, &f, &t, SampleMode::Expand, 50, None, 1).unwrap();
        assert!(!r.single_class_regime);
        assert!(r.notes.iter().any(|n| n.contains("not exact")));
        assert!(r.l1_expected_empirical < 0.05);
        assert!((0.0..=2.0).contains(&r.l1_theory_empirical));
        let mut buf = Vec::new();
        r.write_tsv(&mut buf).unwrap();
        assert!(String::from_utf8(buf).unwrap().contains("p_train_empirical"));
    }
}
