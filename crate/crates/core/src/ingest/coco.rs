//! COCO-style JSON ingestion.
//!
//! Only the `images`, `categories` and `annotations` collections are read.
//! Every other key, including box geometry, is ignored.

use std::collections::{BTreeSet, HashMap};
use std::fs;
use std::path::Path;

use serde::Deserialize;

use crate::dataset::{CategoryId, CategoryInfo, DatasetIndex, ImageRecord};
use crate::error::IngestError;

#[derive(Deserialize)]
struct CocoDocument {
    images: Vec<CocoImage>,
    categories: Vec<CocoCategory>,
    annotations: Vec<CocoAnnotation>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum CocoId {
    Int(u64),
    Str(String),
}

impl CocoId {
    fn into_key(self) -> String {
        match self {
            CocoId::Int(n) => n.to_string(),
            CocoId::Str(s) => s,
        }
    }
}

#[derive(Deserialize)]
struct CocoImage {
    id: CocoId,
    file_name: String,
}

#[derive(Deserialize)]
struct CocoCategory {
    id: CategoryId,
    name: String,
}

#[derive(Deserialize)]
struct CocoAnnotation {
    image_id: CocoId,
    category_id: CategoryId,
}

/// Parses a COCO document held in memory.
///
/// `dataset_id` names the resulting index; `source_name` is only used in
/// error messages.
pub fn parse_coco(
    document: &str,
    dataset_id: &str,
    source_name: &str,
) -> Result<DatasetIndex, IngestError> {
    let doc: CocoDocument = serde_json::from_str(document)
        .map_err(|e| IngestError::parse(source_name, e.line(), e.column(), e.to_string()))?;

    let mut category_slots: HashMap<CategoryId, usize> = HashMap::new();
    let mut duplicates = BTreeSet::new();
    let mut categories = Vec::with_capacity(doc.categories.len());
    for cat in doc.categories {
        if category_slots.insert(cat.id, categories.len()).is_some() {
            duplicates.insert(format!("category {}", cat.id));
        }
        if cat.name.trim().is_empty() {
            return Err(IngestError::Validation {
                message: "empty category name".into(),
                offending: vec![format!("category {}", cat.id)],
            });
        }
        categories.push(CategoryInfo::new(cat.id, cat.name));
    }

    let mut image_slots: HashMap<String, usize> = HashMap::with_capacity(doc.images.len());
    let mut images = Vec::with_capacity(doc.images.len());
    for img in doc.images {
        let key = img.id.into_key();
        if image_slots.insert(key.clone(), images.len()).is_some() {
            duplicates.insert(format!("image {key}"));
        }
        images.push(ImageRecord::new(key, img.file_name));
    }
    if !duplicates.is_empty() {
        return Err(IngestError::Validation {
            message: "duplicate ids".into(),
            offending: duplicates.into_iter().collect(),
        });
    }

    let mut unknown = BTreeSet::new();
    for ann in doc.annotations {
        let key = ann.image_id.into_key();
        let Some(&slot) = image_slots.get(&key) else {
            unknown.insert(format!("image {key}"));
            continue;
        };
        if !category_slots.contains_key(&ann.category_id) {
            unknown.insert(format!("category {}", ann.category_id));
            continue;
        }
        *images[slot]
            .instance_counts
            .entry(ann.category_id)
            .or_insert(0) += 1;
    }
    if !unknown.is_empty() {
        return Err(IngestError::Validation {
            message: "annotations reference unknown ids".into(),
            offending: unknown.into_iter().collect(),
        });
    }

    Ok(DatasetIndex::new(dataset_id, categories, images))
}

/// Reads and parses a COCO file; the dataset id is the file stem.
pub fn parse_coco_file(path: &Path) -> Result<DatasetIndex, IngestError> {
    let text = fs::read_to_string(path).map_err(|e| IngestError::io(path, e))?;
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "dataset".to_owned());
    parse_coco(&text, &stem, &path.display().to_string())
}
