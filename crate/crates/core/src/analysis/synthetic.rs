//! Seeded synthetic long-tailed datasets.
//!
//! Class `k` (0-based, most frequent first) receives an image count
//! proportional to `(k + 1)^(-gamma)`, apportioned to integers by largest
//! remainder with every class getting at least one image.

use serde::{Deserialize, Serialize};

use crate::dataset::{CategoryId, CategoryInfo, DatasetIndex, ImageRecord};
use crate::error::AnalysisError;
use crate::rng::{StreamRng, SYNTHETIC_STREAM};
use crate::sampling::AliasTable;

/// How many instances each annotated image carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum InstanceLaw {
    Constant(u32),
    /// Uniform over `min..=max`.
    Uniform { min: u32, max: u32 },
}

impl InstanceLaw {
    fn check(&self) -> Result<(), AnalysisError> {
        match *self {
            InstanceLaw::Constant(0) => Err(AnalysisError::Generation(
                "instances per image must be at least 1".into(),
            )),
            InstanceLaw::Uniform { min, max } if min == 0 || min > max => Err(AnalysisError::Generation(
                format!("invalid instance range {min}..={max}"),
            )),
            _ => Ok(()),
        }
    }

    fn draw(&self, rng: &mut StreamRng) -> u32 {
        match *self {
            InstanceLaw::Constant(k) => k,
            InstanceLaw::Uniform { min, max } => min + rng.below((max - min) as u64 + 1) as u32,
        }
    }
}

impl std::str::FromStr for InstanceLaw {
    type Err = String;

    /// `3` or `const:3` for a constant, `uniform:1:4` for a range.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = s.split(':').collect();
        let num = |p: &str| p.parse::<u32>().map_err(|_| format!("bad instance count `{p}`"));
        match parts.as_slice() {
            [k] | ["const", k] => Ok(InstanceLaw::Constant(num(k)?)),
            ["uniform", lo, hi] => Ok(InstanceLaw::Uniform {
                min: num(lo)?,
                max: num(hi)?,
            }),
            _ => Err(format!("unrecognised instance law `{s}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub num_classes: usize,
    pub gamma: f64,
    pub num_images: usize,
    pub instances: InstanceLaw,
    /// When set, about half the images also carry a second, different class.
    pub multi_class: bool,
    pub seed: u64,
}

/// Integer image counts per class following `(k + 1)^(-gamma)`.
pub fn power_law_image_counts(num_classes: usize, gamma: f64, num_images: usize) -> Result<Vec<u64>, AnalysisError> {
    if num_classes < 2 {
        return Err(AnalysisError::Generation(format!(
            "need at least 2 classes, got {num_classes}"
        )));
    }
    if num_images < num_classes {
        return Err(AnalysisError::Generation(format!(
            "{num_images} images cannot cover {num_classes} classes"
        )));
    }
    if !gamma.is_finite() {
        return Err(AnalysisError::Generation(format!("gamma must be finite, got {gamma}")));
    }
    let weights: Vec<f64> = (0..num_classes).map(|k| ((k + 1) as f64).powf(-gamma)).collect();
    let total: f64 = weights.iter().sum();
    let quotas: Vec<f64> = weights.iter().map(|w| w / total * num_images as f64).collect();
    let mut counts: Vec<u64> = quotas.iter().map(|q| q.floor() as u64).collect();
    let assigned: u64 = counts.iter().sum();
    let mut order: Vec<usize> = (0..num_classes).collect();
    order.sort_by(|&a, &b| {
        let ra = quotas[a] - quotas[a].floor();
        let rb = quotas[b] - quotas[b].floor();
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    for &k in order.iter().take((num_images as u64 - assigned) as usize) {
        counts[k] += 1;
    }
    for k in 0..num_classes {
        if counts[k] == 0 {
            let donor = (0..num_classes)
                .max_by(|&a, &b| counts[a].cmp(&counts[b]).then(b.cmp(&a)))
                .expect("at least two classes");
            counts[donor] -= 1;
            counts[k] = 1;
        }
    }
    Ok(counts)
}

/// Single-class dataset with exactly `image_counts[k]` images of class `k`,
/// interleaved by a seeded shuffle.
pub fn dataset_from_class_counts(
    dataset_id: &str,
    image_counts: &[u64],
    instances: InstanceLaw,
    seed: u64,
) -> Result<DatasetIndex, AnalysisError> {
    instances.check()?;
    let mut rng = StreamRng::new(seed, SYNTHETIC_STREAM);
    let mut classes: Vec<CategoryId> = image_counts
        .iter()
        .enumerate()
        .flat_map(|(k, &n)| std::iter::repeat_n(k as CategoryId, n as usize))
        .collect();
    rng.shuffle(&mut classes);
    let images = classes
        .into_iter()
        .enumerate()
        .map(|(i, c)| {
            let id = format!("syn_{:07}", i + 1);
            let path = format!("images/{id}.jpg");
            ImageRecord::new(id, path).with_counts([(c, instances.draw(&mut rng))])
        })
        .collect();
    let categories = (0..image_counts.len())
        .map(|k| CategoryInfo::new(k as CategoryId, format!("class_{k}")))
        .collect();
    Ok(DatasetIndex::new(dataset_id, categories, images))
}

/// Generates a dataset per `spec`. Deterministic in `spec.seed`.
///
/// In single-class mode the per-class image counts are exactly
/// [`power_law_image_counts`]. In multi-class mode secondary classes are
/// drawn from the same weights, so counts follow the law only on average.
pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<DatasetIndex, AnalysisError> {
    let counts = power_law_image_counts(spec.num_classes, spec.gamma, spec.num_images)?;
    let id = format!(
        "synthetic-k{}-g{}-n{}{}",
        spec.num_classes,
        spec.gamma,
        spec.num_images,
        if spec.multi_class { "-multi" } else { "" }
    );
    let base = dataset_from_class_counts(&id, &counts, spec.instances, spec.seed)?;
    if !spec.multi_class {
        return Ok(base);
    }

    // Secondary classes use their own sub-stream so the primary layout is
    // identical in both modes.
    let mut rng = StreamRng::new(spec.seed, SYNTHETIC_STREAM - 1);
    let weights: Vec<f64> = counts.iter().map(|&n| n as f64).collect();
    let picker = AliasTable::new(&weights);
    let k = spec.num_classes as CategoryId;
    let images = base
        .images()
        .iter()
        .map(|img| {
            let mut img = img.clone();
            if rng.bernoulli(0.5) {
                let primary = *img.instance_counts.keys().next().expect("one class per image");
                let mut extra = picker.sample(&mut rng) as CategoryId;
                if extra == primary {
                    extra = (extra + 1) % k;
                }
                img.instance_counts.insert(extra, spec.instances.draw(&mut rng));
            }
            img
        })
        .collect();
    Ok(DatasetIndex::new(id, base.categories().to_vec(), images))
}
