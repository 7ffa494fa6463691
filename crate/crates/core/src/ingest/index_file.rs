//! Canonical dataset manifest: JSON Lines, one header line then one line per
//! image.
//!
//! ```text
//! {"format":"rfskit-index","version":1,"dataset_id":"d","categories":[{"category_id":0,"name":"fire"}]}
//! {"image_id":"a","source_path":"a.jpg","counts":{"0":2}}
//! ```
//!
//! Writing is deterministic, so `write(read(write(x))) == write(x)` byte for
//! byte.

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dataset::{has_errors, validate, CategoryId, CategoryInfo, DatasetIndex, ImageRecord, Severity};
use crate::error::IngestError;

pub const INDEX_FORMAT: &str = "rfskit-index";
pub const INDEX_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct Header {
    format: String,
    version: u32,
    dataset_id: String,
    categories: Vec<CategoryInfo>,
}

#[derive(Serialize, Deserialize)]
struct Record {
    image_id: String,
    source_path: String,
    counts: BTreeMap<CategoryId, u32>,
}

pub fn write_index<W: Write>(index: &DatasetIndex, mut out: W) -> std::io::Result<()> {
    let header = Header {
        format: INDEX_FORMAT.to_owned(),
        version: INDEX_VERSION,
        dataset_id: index.dataset_id().to_owned(),
        categories: index.categories().to_vec(),
    };
    serde_json::to_writer(&mut out, &header)?;
    out.write_all(b"\n")?;
    for img in index.images() {
        #[derive(Serialize)]
        struct RecordRef<'a> {
            image_id: &'a str,
            source_path: &'a str,
            counts: &'a BTreeMap<CategoryId, u32>,
        }
        serde_json::to_writer(
            &mut out,
            &RecordRef {
                image_id: &img.image_id,
                source_path: &img.source_path,
                counts: &img.instance_counts,
            },
        )?;
        out.write_all(b"\n")?;
    }
    out.flush()
}

pub fn index_to_string(index: &DatasetIndex) -> String {
    let mut buf = Vec::new();
    write_index(index, &mut buf).expect("writing to a Vec cannot fail");
    String::from_utf8(buf).expect("serde_json emits UTF-8")
}

/// Reads a canonical manifest and checks it with [`validate`]. Warnings are
/// accepted, errors are not.
pub fn read_index<R: BufRead>(input: R, source_name: &str) -> Result<DatasetIndex, IngestError> {
    let mut lines = input.lines().enumerate();
    let header_line = match lines.next() {
        Some((_, line)) => line.map_err(|e| IngestError::io(source_name, e))?,
        None => return Err(IngestError::parse(source_name, 1, 1, "missing header line")),
    };
    let header: Header = serde_json::from_str(&header_line)
        .map_err(|e| IngestError::parse(source_name, 1, e.column(), e.to_string()))?;
    if header.format != INDEX_FORMAT || header.version != INDEX_VERSION {
        return Err(IngestError::parse(
            source_name,
            1,
            1,
            format!(
                "unsupported format {}/{}, expected {INDEX_FORMAT}/{INDEX_VERSION}",
                header.format, header.version
            ),
        ));
    }

    let mut images = Vec::new();
    for (i, line) in lines {
        let line = line.map_err(|e| IngestError::io(source_name, e))?;
        let lineno = i + 1;
        if line.trim().is_empty() {
            return Err(IngestError::parse(source_name, lineno, 1, "blank line"));
        }
        let rec: Record = serde_json::from_str(&line)
            .map_err(|e| IngestError::parse(source_name, lineno, e.column(), e.to_string()))?;
        if let Some((c, _)) = rec.counts.iter().find(|(_, &n)| n == 0) {
            return Err(IngestError::parse(
                source_name,
                lineno,
                1,
                format!("zero count stored for category {c}"),
            ));
        }
        images.push(ImageRecord {
            image_id: rec.image_id.into(),
            source_path: rec.source_path,
            instance_counts: rec.counts,
        });
    }

    let index = DatasetIndex::new(header.dataset_id, header.categories, images);
    let issues = validate(&index);
    if has_errors(&issues) {
        return Err(IngestError::Validation {
            message: "invalid dataset manifest".into(),
            offending: issues
                .iter()
                .filter(|i| i.severity == Severity::Error)
                .map(|i| format!("{}: {}", i.locator, i.message))
                .collect(),
        });
    }
    Ok(index)
}

pub fn read_index_file(path: &Path) -> Result<DatasetIndex, IngestError> {
    let file = fs::File::open(path).map_err(|e| IngestError::io(path, e))?;
    read_index(BufReader::new(file), &path.display().to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> DatasetIndex {
        DatasetIndex::new(
            "demo \"set\"",
            vec![CategoryInfo::new(0, "fire"), CategoryInfo::new(4, "lake\twater")],
            vec![
                ImageRecord::new("a", "imgs/a.jpg").with_counts([(0, 2), (4, 1)]),
                ImageRecord::new("b\nodd", "imgs/b.jpg"),
            ],
        )
    }

    #[test]
    fn round_trip_is_identical() {
        let idx = sample();
        let text = index_to_string(&idx);
        let back = read_index(text.as_bytes(), "mem").unwrap();
        assert_eq!(back, idx);
        assert_eq!(index_to_string(&back), text);
    }

    #[test]
    fn layout_is_stable() {
        let idx = DatasetIndex::new(
            "d",
            vec![CategoryInfo::new(0, "fire")],
            vec![ImageRecord::new("a", "a.jpg").with_counts([(0, 2)])],
        );
        assert_eq!(
            index_to_string(&idx),
            "{\"format\":\"rfskit-index\",\"version\":1,\"dataset_id\":\"d\",\"categories\":[{\"category_id\":0,\"name\":\"fire\"}]}\n\
             {\"image_id\":\"a\",\"source_path\":\"a.jpg\",\"counts\":{\"0\":2}}\n"
        );
    }

    #[test]
    fn rejects_zero_counts_and_bad_lines() {
        let good = index_to_string(&sample());
        let header = good.lines().next().unwrap();
        let zero = format!("{header}\n{{\"image_id\":\"x\",\"source_path\":\"x\",\"counts\":{{\"0\":0}}}}\n");
        assert!(matches!(
            read_index(zero.as_bytes(), "m"),
            Err(IngestError::Parse { line: 2, .. })
        ));
        let junk = format!("{header}\nnot json\n");
        assert!(matches!(
            read_index(junk.as_bytes(), "m"),
            Err(IngestError::Parse { line: 2, .. })
        ));
        assert!(read_index("".as_bytes(), "m").is_err());
    }

    #[test]
    fn rejects_unknown_category() {
        let good = index_to_string(&sample());
        let header = good.lines().next().unwrap();
        let text = format!("{header}\n{{\"image_id\":\"x\",\"source_path\":\"x\",\"counts\":{{\"9\":1}}}}\n");
        assert!(matches!(
            read_index(text.as_bytes(), "m"),
            Err(IngestError::Validation { .. })
        ));
    }
}
