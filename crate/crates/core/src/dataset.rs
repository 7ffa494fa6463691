//! Canonical in-memory model of an annotated detection dataset.
//!
//! A [`DatasetIndex`] only records *how many* instances of each category an
//! image holds. Geometry is checked by the parsers and then dropped.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

/// Category identifier as it appears in the source annotations.
pub type CategoryId = u32;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CategoryInfo {
    pub category_id: CategoryId,
    pub name: String,
}

impl CategoryInfo {
    pub fn new(category_id: CategoryId, name: impl Into<String>) -> Self {
        Self {
            category_id,
            name: name.into(),
        }
    }
}

/// Image identifiers are shared between the index, repeat-factor tables
/// and manifests, so they are reference counted rather than copied.
pub type ImageId = Arc<str>;

/// One image and the per-category instance counts it carries.
///
/// Categories absent from the image are absent from `instance_counts`; zero
/// counts are never stored. An unannotated image has an empty map.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImageRecord {
    pub image_id: ImageId,
    pub source_path: String,
    pub instance_counts: BTreeMap<CategoryId, u32>,
}

impl ImageRecord {
    pub fn new(image_id: impl Into<ImageId>, source_path: impl Into<String>) -> Self {
        Self {
            image_id: image_id.into(),
            source_path: source_path.into(),
            instance_counts: BTreeMap::new(),
        }
    }

    pub fn with_counts<I>(mut self, counts: I) -> Self
    where
        I: IntoIterator<Item = (CategoryId, u32)>,
    {
        for (c, n) in counts {
            if n > 0 {
                *self.instance_counts.entry(c).or_insert(0) += n;
            }
        }
        self
    }

    pub fn instances(&self) -> u64 {
        self.instance_counts.values().map(|&n| n as u64).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.instance_counts.is_empty()
    }
}

/// Immutable dataset model: categories, images and the totals `N` and `B`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatasetIndex {
    dataset_id: String,
    categories: Vec<CategoryInfo>,
    images: Vec<ImageRecord>,
    total_images: usize,
    total_instances: u64,
}

impl DatasetIndex {
    /// Builds an index and derives both totals from `images`.
    ///
    /// No invariant beyond the totals is enforced here; run [`validate`] to
    /// check the rest.
    pub fn new(
        dataset_id: impl Into<String>,
        categories: Vec<CategoryInfo>,
        images: Vec<ImageRecord>,
    ) -> Self {
        let total_instances = images.iter().map(ImageRecord::instances).sum();
        Self {
            dataset_id: dataset_id.into(),
            total_images: images.len(),
            total_instances,
            categories,
            images,
        }
    }

    pub fn dataset_id(&self) -> &str {
        &self.dataset_id
    }

    pub fn categories(&self) -> &[CategoryInfo] {
        &self.categories
    }

    pub fn images(&self) -> &[ImageRecord] {
        &self.images
    }

    /// `N`, the number of images.
    pub fn total_images(&self) -> usize {
        self.total_images
    }

    /// `B`, the number of annotated instances (boxes).
    pub fn total_instances(&self) -> u64 {
        self.total_instances
    }

    pub fn category(&self, id: CategoryId) -> Option<&CategoryInfo> {
        self.categories.iter().find(|c| c.category_id == id)
    }

    /// True when no image holds more than one category.
    pub fn is_single_class(&self) -> bool {
        self.images.iter().all(|img| img.instance_counts.len() <= 1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Error,
    Warning,
}

impl fmt::Display for Severity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Severity::Error => f.write_str("error"),
            Severity::Warning => f.write_str("warning"),
        }
    }
}

/// A single finding from [`validate`]. `locator` names the offending record.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationIssue {
    pub severity: Severity,
    pub locator: String,
    pub message: String,
}

impl ValidationIssue {
    fn error(locator: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            severity: Severity::Error,
            locator: locator.into(),
            message: message.into(),
        }
    }

    fn warning(locator: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            severity: Severity::Warning,
            locator: locator.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for ValidationIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} [{}]: {}", self.severity, self.locator, self.message)
    }
}

/// Checks every structural invariant of `index`.
///
/// Returns an empty list for a well-formed index. Categories that never
/// occur produce a warning: they are excluded from repeat-factor computation.
pub fn validate(index: &DatasetIndex) -> Vec<ValidationIssue> {
    let mut issues = Vec::new();

    let mut category_ids = HashSet::with_capacity(index.categories.len());
    for cat in &index.categories {
        let locator = format!("category:{}", cat.category_id);
        if !category_ids.insert(cat.category_id) {
            issues.push(ValidationIssue::error(locator.clone(), "duplicate category id"));
        }
        if cat.name.trim().is_empty() {
            issues.push(ValidationIssue::error(locator, "empty category name"));
        }
    }

    let mut image_ids = HashSet::with_capacity(index.images.len());
    let mut per_category: HashMap<CategoryId, u64> = HashMap::new();
    let mut instance_sum = 0u64;
    for img in &index.images {
        let locator = format!("image:{}", img.image_id);
        if !image_ids.insert(&*img.image_id) {
            issues.push(ValidationIssue::error(locator.clone(), "duplicate image id"));
        }
        for (&c, &n) in &img.instance_counts {
            if n == 0 {
                issues.push(ValidationIssue::error(
                    locator.clone(),
                    format!("zero instance count stored for category {c}"),
                ));
            }
            if !category_ids.contains(&c) {
                issues.push(ValidationIssue::error(
                    locator.clone(),
                    format!("references unknown category {c}"),
                ));
            }
            *per_category.entry(c).or_insert(0) += n as u64;
            instance_sum += n as u64;
        }
    }

    if index.total_images != index.images.len() {
        issues.push(ValidationIssue::error(
            "dataset",
            format!(
                "total_images {} does not match {} image records",
                index.total_images,
                index.images.len()
            ),
        ));
    }
    if index.total_instances != instance_sum {
        issues.push(ValidationIssue::error(
            "dataset",
            format!(
                "total_instances {} does not match summed counts {instance_sum}",
                index.total_instances
            ),
        ));
    }

    for cat in &index.categories {
        if per_category.get(&cat.category_id).copied().unwrap_or(0) == 0 {
            issues.push(ValidationIssue::warning(
                format!("category:{}", cat.category_id),
                format!("category '{}' has no instances; excluded from repeat factors", cat.name),
            ));
        }
    }

    issues
}

/// True when `issues` contains at least one error.
pub fn has_errors(issues: &[ValidationIssue]) -> bool {
    issues.iter().any(|i| i.severity == Severity::Error)
}
