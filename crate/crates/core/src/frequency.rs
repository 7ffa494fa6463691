//! Per-class image and instance frequencies.

use std::collections::HashMap;
use std::io::Write;

use serde::Serialize;

use crate::dataset::{CategoryId, DatasetIndex};
use crate::error::{FactorError, FormatError};

/// Counts and fractions for one category.
///
/// `image_fraction` is `f_{i,c}` (also the RFS `f_c`); `instance_fraction`
/// is `f_{b,c}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassFrequency {
    pub category_id: CategoryId,
    pub name: String,
    pub image_count: u64,
    pub instance_count: u64,
    pub image_fraction: f64,
    pub instance_fraction: f64,
}

impl ClassFrequency {
    /// False for categories that never occur; those are left out of
    /// repeat-factor computation.
    pub fn is_present(&self) -> bool {
        self.image_count > 0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FrequencyTable {
    pub dataset_id: String,
    pub total_images: u64,
    pub total_instances: u64,
    pub classes: Vec<ClassFrequency>,
}

impl FrequencyTable {
    pub fn get(&self, id: CategoryId) -> Option<&ClassFrequency> {
        self.classes.iter().find(|c| c.category_id == id)
    }

    /// Categories with zero occurrences, in category order.
    pub fn absent_categories(&self) -> Vec<CategoryId> {
        self.classes
            .iter()
            .filter(|c| !c.is_present())
            .map(|c| c.category_id)
            .collect()
    }

    pub fn present(&self) -> impl Iterator<Item = &ClassFrequency> {
        self.classes.iter().filter(|c| c.is_present())
    }

    /// Tab-separated report, one row per category, preceded by `#` lines
    /// carrying the totals.
    pub fn write_report<W: Write>(&self, mut out: W) -> Result<(), FormatError> {
        writeln!(out, "# dataset_id={}", self.dataset_id)?;
        writeln!(out, "# total_images={}", self.total_images)?;
        writeln!(out, "# total_instances={}", self.total_instances)?;
        let mut w = csv::WriterBuilder::new().delimiter(b'\t').from_writer(out);
        w.write_record([
            "category_id",
            "name",
            "image_count",
            "instance_count",
            "image_fraction",
            "instance_fraction",
        ])?;
        for c in &self.classes {
            w.write_record([
                c.category_id.to_string(),
                c.name.clone(),
                c.image_count.to_string(),
                c.instance_count.to_string(),
                c.image_fraction.to_string(),
                c.instance_fraction.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Counts, per category, the images containing it and its instances, and
/// divides by `N` and `B` respectively.
///
/// When `B = 0` every instance fraction is reported as 0.
pub fn compute_frequencies(index: &DatasetIndex) -> Result<FrequencyTable, FactorError> {
    let n = index.total_images() as u64;
    if n == 0 {
        return Err(FactorError::EmptyDataset);
    }
    let b = index.total_instances();

    let slot: HashMap<CategoryId, usize> = index
        .categories()
        .iter()
        .enumerate()
        .map(|(i, c)| (c.category_id, i))
        .collect();
    let mut image_counts = vec![0u64; slot.len().max(index.categories().len())];
    let mut instance_counts = image_counts.clone();
    for img in index.images() {
        for (c, &k) in &img.instance_counts {
            if let Some(&s) = slot.get(c) {
                image_counts[s] += 1;
                instance_counts[s] += k as u64;
            }
        }
    }

    let classes = index
        .categories()
        .iter()
        .enumerate()
        .map(|(i, cat)| ClassFrequency {
            category_id: cat.category_id,
            name: cat.name.clone(),
            image_count: image_counts[i],
            instance_count: instance_counts[i],
            image_fraction: image_counts[i] as f64 / n as f64,
            instance_fraction: if b == 0 {
                0.0
            } else {
                instance_counts[i] as f64 / b as f64
            },
        })
        .collect();

    Ok(FrequencyTable {
        dataset_id: index.dataset_id().to_owned(),
        total_images: n,
        total_instances: b,
        classes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{CategoryInfo, ImageRecord};
    use proptest::prelude::*;

    fn three_image() -> DatasetIndex {
        DatasetIndex::new(
            "yolo3",
            vec![CategoryInfo::new(0, "a"), CategoryInfo::new(1, "b")],
            vec![
                ImageRecord::new("1", "1.txt").with_counts([(0, 1)]),
                ImageRecord::new("2", "2.txt").with_counts([(0, 1), (1, 1)]),
                ImageRecord::new("3", "3.txt").with_counts([(1, 2)]),
            ],
        )
    }

    #[test]
    fn hand_enumerated_fractions() {
        let f = compute_frequencies(&three_image()).unwrap();
        let a = f.get(0).unwrap();
        let b = f.get(1).unwrap();
        assert_eq!(a.image_fraction, 2.0 / 3.0);
        assert_eq!(b.image_fraction, 2.0 / 3.0);
        assert_eq!(a.instance_fraction, 2.0 / 5.0);
        assert_eq!(b.instance_fraction, 3.0 / 5.0);
    }

    #[test]
    fn single_instance_identity() {
        let idx = DatasetIndex::new(
            "one",
            vec![CategoryInfo::new(0, "a")],
            vec![ImageRecord::new("1", "1").with_counts([(0, 1)])],
        );
        let f = compute_frequencies(&idx).unwrap();
        assert_eq!(f.classes[0].image_fraction, 1.0);
        assert_eq!(f.classes[0].instance_fraction, 1.0);
    }

    #[test]
    fn empty_dataset_is_an_error() {
        let idx = DatasetIndex::new("e", vec![CategoryInfo::new(0, "a")], vec![]);
        assert_eq!(compute_frequencies(&idx), Err(FactorError::EmptyDataset));
    }

    #[test]
    fn absent_category_is_zero_everywhere() {
        let idx = DatasetIndex::new(
            "z",
            vec![CategoryInfo::new(0, "a"), CategoryInfo::new(1, "ghost")],
            vec![ImageRecord::new("1", "1").with_counts([(0, 3)]), ImageRecord::new("2", "2")],
        );
        let f = compute_frequencies(&idx).unwrap();
        let g = f.get(1).unwrap();
        assert_eq!((g.image_count, g.instance_count), (0, 0));
        assert_eq!((g.image_fraction, g.instance_fraction), (0.0, 0.0));
        assert_eq!(f.absent_categories(), vec![1]);
        assert_eq!(f.get(0).unwrap().image_fraction, 0.5);
    }

    #[test]
    fn removing_a_category_renormalises() {
        let base = three_image();
        let stripped: Vec<ImageRecord> = base
            .images()
            .iter()
            .map(|img| {
                let mut img = img.clone();
                img.instance_counts.remove(&0);
                img
            })
            .collect();
        let idx = DatasetIndex::new("s", base.categories().to_vec(), stripped);
        let f = compute_frequencies(&idx).unwrap();
        let a = f.get(0).unwrap();
        assert_eq!((a.image_count, a.instance_count, a.image_fraction), (0, 0, 0.0));
        assert_eq!(f.get(1).unwrap().instance_fraction, 1.0);
    }

    #[test]
    fn report_has_one_row_per_category() {
        let f = compute_frequencies(&three_image()).unwrap();
        let mut buf = Vec::new();
        f.write_report(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let rows: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
        assert_eq!(rows.len(), 3);
        assert_eq!(rows[1], format!("0\ta\t2\t2\t{}\t0.4", 2.0f64 / 3.0));
    }

    fn arb_index() -> impl Strategy<Value = DatasetIndex> {
        prop::collection::vec(prop::collection::btree_map(0u32..6, 1u32..5, 0..4), 1..40).prop_map(
            |imgs| {
                let cats = (0..6).map(|c| CategoryInfo::new(c, format!("c{c}"))).collect();
                let images = imgs
                    .into_iter()
                    .enumerate()
                    .map(|(i, counts)| ImageRecord::new(format!("i{i}"), format!("i{i}.jpg")).with_counts(counts))
                    .collect();
                DatasetIndex::new("p", cats, images)
            },
        )
    }

    proptest! {
        #[test]
        fn instance_fractions_sum_to_one(idx in arb_index()) {
            let f = compute_frequencies(&idx).unwrap();
            let total: u64 = f.classes.iter().map(|c| c.instance_count).sum();
            prop_assert_eq!(total, f.total_instances);
            if f.total_instances > 0 {
                let s: f64 = f.classes.iter().map(|c| c.instance_fraction).sum();
                prop_assert!((s - 1.0).abs() < 1e-12);
            }
            for c in &f.classes {
                prop_assert!((0.0..=1.0).contains(&c.image_fraction));
                prop_assert_eq!(c.image_fraction == 0.0, c.image_count == 0);
                prop_assert_eq!(c.image_count == 0, c.instance_count == 0);
            }
        }

        #[test]
        fn duplicating_images_keeps_fractions(idx in arb_index(), k in 2usize..5) {
            let dup: Vec<ImageRecord> = (0..k)
                .flat_map(|r| idx.images().iter().map(move |img| {
                    let mut img = img.clone();
                    img.image_id = format!("{}-{r}", img.image_id).into();
                    img
                }))
                .collect();
            let big = DatasetIndex::new("dup", idx.categories().to_vec(), dup);
            let f1 = compute_frequencies(&idx).unwrap();
            let fk = compute_frequencies(&big).unwrap();
            for (a, b) in f1.classes.iter().zip(&fk.classes) {
                prop_assert!((a.image_fraction - b.image_fraction).abs() < 1e-15);
                prop_assert!((a.instance_fraction - b.instance_fraction).abs() < 1e-15);
            }
        }
    }
}
