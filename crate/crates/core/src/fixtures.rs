//! Reference datasets rebuilt from published per-class counts.
//!
//! Only image and instance counts per class are known for these sets, so
//! [`dataset_from_counts`] lays classes out over images deterministically:
//! each class takes the next `images` slots of a cursor that wraps around
//! the image list, and its instances are spread as evenly as possible over
//! those slots. Any layout with the same per-class counts yields the same
//! frequencies.

use serde::Serialize;

use crate::dataset::{CategoryId, CategoryInfo, DatasetIndex, ImageRecord};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassCounts {
    pub name: &'static str,
    pub images: u64,
    pub instances: u64,
    /// Rounded instance share as printed alongside the counts, in percent.
    pub published_percent: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitCounts {
    pub name: &'static str,
    pub total_images: u64,
    pub total_instances: u64,
    pub classes: &'static [ClassCounts],
}

/// Training split of the fire/smoke/human/lake UAV benchmark.
pub const UAV_TRAINING: SplitCounts = SplitCounts {
    name: "uav-train",
    total_images: 40_384,
    total_instances: 146_949,
    classes: &[
        ClassCounts { name: "Fire", images: 16_915, instances: 33_773, published_percent: 23.0 },
        ClassCounts { name: "Smoke", images: 28_769, instances: 32_538, published_percent: 22.1 },
        ClassCounts { name: "Human", images: 18_525, instances: 67_992, published_percent: 46.3 },
        ClassCounts { name: "Lake", images: 12_646, instances: 12_646, published_percent: 8.6 },
    ],
};

/// Validation split of the same benchmark.
pub const UAV_VALIDATION: SplitCounts = SplitCounts {
    name: "uav-val",
    total_images: 11_953,
    total_instances: 27_464,
    classes: &[
        ClassCounts { name: "Fire", images: 1_436, instances: 2_336, published_percent: 8.5 },
        ClassCounts { name: "Smoke", images: 6_735, instances: 7_090, published_percent: 25.8 },
        ClassCounts { name: "Human", images: 4_804, instances: 16_612, published_percent: 60.5 },
        ClassCounts { name: "Lake", images: 1_087, instances: 1_426, published_percent: 5.2 },
    ],
};

/// Builds an index whose per-class image and instance counts equal `split`.
///
/// Category ids are the positions in `split.classes`. Panics if a class
/// needs more images than the split has, or fewer instances than images.
pub fn dataset_from_counts(split: &SplitCounts) -> DatasetIndex {
    let n = split.total_images as usize;
    let mut images: Vec<ImageRecord> = (0..n)
        .map(|i| {
            let id = format!("{}_{:06}", split.name, i + 1);
            let path = format!("images/{id}.jpg");
            ImageRecord::new(id, path)
        })
        .collect();

    let mut cursor = 0usize;
    for (c, class) in split.classes.iter().enumerate() {
        let k = class.images as usize;
        assert!(k <= n, "class {} needs {k} of {n} images", class.name);
        assert!(class.instances >= class.images, "class {} has fewer instances than images", class.name);
        let base = class.instances / class.images.max(1);
        let extra = (class.instances % class.images.max(1)) as usize;
        for j in 0..k {
            let count = base + u64::from(j < extra);
            images[(cursor + j) % n]
                .instance_counts
                .insert(c as CategoryId, count as u32);
        }
        cursor = (cursor + k) % n.max(1);
    }

    let categories = split
        .classes
        .iter()
        .enumerate()
        .map(|(c, class)| CategoryInfo::new(c as CategoryId, class.name))
        .collect();
    DatasetIndex::new(split.name, categories, images)
}

#[derive(Serialize)]
struct CocoImageOut<'a> {
    id: usize,
    file_name: &'a str,
}

#[derive(Serialize)]
struct CocoCategoryOut<'a> {
    id: CategoryId,
    name: &'a str,
}

#[derive(Serialize)]
struct CocoAnnotationOut {
    id: usize,
    image_id: usize,
    category_id: CategoryId,
    bbox: [f32; 4],
}

#[derive(Serialize)]
struct CocoOut<'a> {
    images: Vec<CocoImageOut<'a>>,
    categories: Vec<CocoCategoryOut<'a>>,
    annotations: Vec<CocoAnnotationOut>,
}

/// Encodes `index` as a COCO document with one placeholder box per instance.
/// Image ids are 1-based positions.
pub fn to_coco_json(index: &DatasetIndex) -> String {
    let mut annotations = Vec::with_capacity(index.total_instances() as usize);
    for (i, img) in index.images().iter().enumerate() {
        for (&c, &k) in &img.instance_counts {
            for _ in 0..k {
                annotations.push(CocoAnnotationOut {
                    id: annotations.len() + 1,
                    image_id: i + 1,
                    category_id: c,
                    bbox: [0.0, 0.0, 1.0, 1.0],
                });
            }
        }
    }
    let doc = CocoOut {
        images: index
            .images()
            .iter()
            .enumerate()
            .map(|(i, img)| CocoImageOut {
                id: i + 1,
                file_name: &img.source_path,
            })
            .collect(),
        categories: index
            .categories()
            .iter()
            .map(|c| CocoCategoryOut {
                id: c.category_id,
                name: &c.name,
            })
            .collect(),
        annotations,
    };
    serde_json::to_string(&doc).expect("COCO fixture serialises")
}
