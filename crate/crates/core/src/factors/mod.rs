//! Repeat factors: per class, per image, and the normalised selection
//! probabilities derived from them.

mod formula;
mod table_file;

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dataset::{CategoryId, DatasetIndex, ImageId, ImageRecord};
use crate::error::FactorError;
use crate::frequency::FrequencyTable;

pub use formula::{
    eirfs_factor, eirfs_first_derivative, eirfs_second_derivative, irfs_factor, irfs_inner,
    rfs_factor, MAX_EXP_ARG,
};
pub use table_file::{read_table, table_to_string, write_table, TABLE_FORMAT};

pub const DEFAULT_THRESHOLD: f64 = 1e-4;
pub const DEFAULT_ALPHA: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Baseline,
    Rfs,
    Irfs,
    Eirfs,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Baseline, Method::Rfs, Method::Irfs, Method::Eirfs];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Baseline => "baseline",
            Method::Rfs => "rfs",
            Method::Irfs => "irfs",
            Method::Eirfs => "eirfs",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "baseline" | "none" => Ok(Method::Baseline),
            "rfs" => Ok(Method::Rfs),
            "irfs" => Ok(Method::Irfs),
            "eirfs" | "e-irfs" => Ok(Method::Eirfs),
            other => Err(format!("unknown method `{other}`")),
        }
    }
}

/// Method plus its parameters. `alpha` is only meaningful for E-IRFS.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RebalanceConfig {
    pub method: Method,
    pub threshold: f64,
    pub alpha: Option<f64>,
}

impl Default for RebalanceConfig {
    fn default() -> Self {
        Self::eirfs(DEFAULT_THRESHOLD, DEFAULT_ALPHA)
    }
}

impl RebalanceConfig {
    pub fn baseline() -> Self {
        Self {
            method: Method::Baseline,
            threshold: DEFAULT_THRESHOLD,
            alpha: None,
        }
    }

    pub fn rfs(threshold: f64) -> Self {
        Self {
            method: Method::Rfs,
            threshold,
            alpha: None,
        }
    }

    pub fn irfs(threshold: f64) -> Self {
        Self {
            method: Method::Irfs,
            threshold,
            alpha: None,
        }
    }

    pub fn eirfs(threshold: f64, alpha: f64) -> Self {
        Self {
            method: Method::Eirfs,
            threshold,
            alpha: Some(alpha),
        }
    }

    /// Builds a config for `method`, keeping `alpha` only for E-IRFS.
    pub fn for_method(method: Method, threshold: f64, alpha: f64) -> Self {
        match method {
            Method::Baseline => Self {
                threshold,
                ..Self::baseline()
            },
            Method::Rfs => Self::rfs(threshold),
            Method::Irfs => Self::irfs(threshold),
            Method::Eirfs => Self::eirfs(threshold, alpha),
        }
    }

    pub fn validate(&self) -> Result<(), FactorError> {
        formula::check_threshold(self.threshold)?;
        match (self.method, self.alpha) {
            (Method::Eirfs, Some(a)) => formula::check_alpha(a),
            (Method::Eirfs, None) => Err(FactorError::Domain {
                name: "alpha",
                expected: "present for eirfs",
                value: f64::NAN,
            }),
            (_, Some(a)) => Err(FactorError::Domain {
                name: "alpha",
                expected: "absent unless method is eirfs",
                value: a,
            }),
            (_, None) => Ok(()),
        }
    }

    /// Stable one-line rendering, also the input of the config digest.
    pub fn canonical(&self) -> String {
        match self.alpha {
            Some(a) => format!("method={} t={} alpha={}", self.method, self.threshold, a),
            None => format!("method={} t={}", self.method, self.threshold),
        }
    }

    /// Class factor for one present category.
    pub fn class_factor(&self, image_fraction: f64, instance_fraction: f64) -> Result<f64, FactorError> {
        match self.method {
            Method::Baseline => Ok(1.0),
            Method::Rfs => rfs_factor(image_fraction, self.threshold),
            Method::Irfs => irfs_factor(image_fraction, instance_fraction, self.threshold),
            Method::Eirfs => eirfs_factor(
                image_fraction,
                instance_fraction,
                self.threshold,
                self.alpha.unwrap_or(DEFAULT_ALPHA),
            ),
        }
    }
}

impl fmt::Display for RebalanceConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.canonical())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassFactor {
    pub category_id: CategoryId,
    pub name: String,
    pub image_fraction: f64,
    pub instance_fraction: f64,
    pub factor: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageFactor {
    pub image_id: ImageId,
    pub factor: f64,
    pub probability: f64,
}

/// Output of [`build_table`].
///
/// `excluded` lists categories left out because they never occur; image
/// rows follow the order of the source index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepeatFactorTable {
    pub dataset_id: String,
    pub config: RebalanceConfig,
    pub classes: Vec<ClassFactor>,
    pub excluded: Vec<CategoryId>,
    pub images: Vec<ImageFactor>,
}

impl RepeatFactorTable {
    pub fn class_factor(&self, id: CategoryId) -> Option<f64> {
        self.classes.iter().find(|c| c.category_id == id).map(|c| c.factor)
    }

    pub fn class_factor_map(&self) -> HashMap<CategoryId, f64> {
        self.classes.iter().map(|c| (c.category_id, c.factor)).collect()
    }

    pub fn image_factors(&self) -> Vec<f64> {
        self.images.iter().map(|i| i.factor).collect()
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.images.iter().map(|i| i.probability).collect()
    }

    /// `sum(r_i) / N`: how much an expand-mode epoch grows on average.
    pub fn epoch_inflation(&self) -> f64 {
        if self.images.is_empty() {
            return 0.0;
        }
        self.images.iter().map(|i| i.factor).sum::<f64>() / self.images.len() as f64
    }
}

/// `r_i`: the largest class factor among the categories in `image`.
///
/// Categories missing from `class_factors` (excluded ones) are skipped. An
/// image with no participating category gets 1.
pub fn image_repeat(image: &ImageRecord, class_factors: &HashMap<CategoryId, f64>) -> f64 {
    max_factor(image, |c| class_factors.get(&c).copied())
}

fn max_factor(image: &ImageRecord, lookup: impl Fn(CategoryId) -> Option<f64>) -> f64 {
    image
        .instance_counts
        .keys()
        .filter_map(|&c| lookup(c))
        .fold(None, |acc: Option<f64>, r| Some(acc.map_or(r, |m| m.max(r))))
        .unwrap_or(1.0)
}

/// Class factors indexed directly by category id when ids are compact,
/// which is the usual case; sparse ids fall back to a hash map.
enum FactorLookup {
    Dense(Vec<Option<f64>>),
    Sparse(HashMap<CategoryId, f64>),
}

impl FactorLookup {
    fn new(classes: &[ClassFactor]) -> Self {
        let max_id = classes.iter().map(|c| c.category_id).max().unwrap_or(0) as usize;
        if max_id <= 4 * classes.len() + 1024 {
            let mut dense = vec![None; max_id + 1];
            for c in classes {
                dense[c.category_id as usize] = Some(c.factor);
            }
            FactorLookup::Dense(dense)
        } else {
            FactorLookup::Sparse(classes.iter().map(|c| (c.category_id, c.factor)).collect())
        }
    }

    fn image_repeat(&self, image: &ImageRecord) -> f64 {
        match self {
            FactorLookup::Dense(v) => max_factor(image, |c| v.get(c as usize).copied().flatten()),
            FactorLookup::Sparse(m) => max_factor(image, |c| m.get(&c).copied()),
        }
    }
}

/// `p_i = r_i / sum_j r_j`, summing in list order.
pub fn selection_probabilities(image_factors: &[f64]) -> Result<Vec<f64>, FactorError> {
    if image_factors.is_empty() {
        return Err(FactorError::EmptyFactors);
    }
    if let Some(&bad) = image_factors.iter().find(|r| !(r.is_finite() && **r > 0.0)) {
        return Err(FactorError::Domain {
            name: "image repeat factor",
            expected: "a finite value > 0",
            value: bad,
        });
    }
    let total: f64 = image_factors.iter().sum();
    Ok(image_factors.iter().map(|r| r / total).collect())
}

/// Evaluates class factors for `config`, then image factors and selection
/// probabilities over every image of `index`. Linear in images plus classes.
pub fn build_table(
    freqs: &FrequencyTable,
    index: &DatasetIndex,
    config: &RebalanceConfig,
) -> Result<RepeatFactorTable, FactorError> {
    config.validate()?;
    if index.total_images() == 0 {
        return Err(FactorError::EmptyDataset);
    }

    let mut classes = Vec::with_capacity(freqs.classes.len());
    let mut excluded = Vec::new();
    for c in &freqs.classes {
        if !c.is_present() {
            excluded.push(c.category_id);
            continue;
        }
        let factor = config
            .class_factor(c.image_fraction, c.instance_fraction)
            .map_err(|e| FactorError::InCategory {
                category_id: c.category_id,
                name: c.name.clone(),
                source: Box::new(e),
            })?;
        classes.push(ClassFactor {
            category_id: c.category_id,
            name: c.name.clone(),
            image_fraction: c.image_fraction,
            instance_fraction: c.instance_fraction,
            factor,
        });
    }

    let lookup = FactorLookup::new(&classes);
    let factors: Vec<f64> = index.images().iter().map(|img| lookup.image_repeat(img)).collect();
    let probabilities = selection_probabilities(&factors)?;
    let images = index
        .images()
        .iter()
        .zip(factors.iter().zip(probabilities))
        .map(|(img, (&factor, probability))| ImageFactor {
            image_id: img.image_id.clone(),
            factor,
            probability,
        })
        .collect();

    Ok(RepeatFactorTable {
        dataset_id: index.dataset_id().to_owned(),
        config: *config,
        classes,
        excluded,
        images,
    })
}
