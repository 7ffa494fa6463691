//! YOLO label-directory ingestion.
//!
//! One `.txt` file per image, one `class cx cy w h` line per box. Files are
//! discovered recursively and parsed in parallel; the resulting image order
//! is the sorted relative path order.

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use walkdir::WalkDir;

use crate::dataset::{CategoryId, CategoryInfo, DatasetIndex, ImageRecord};
use crate::error::IngestError;

/// Reads a class-names file: one name per line, 0-based. Trailing blank
/// lines are dropped.
pub fn read_class_names(path: &Path) -> Result<Vec<String>, IngestError> {
    let text = fs::read_to_string(path).map_err(|e| IngestError::io(path, e))?;
    let mut names: Vec<String> = text.lines().map(|l| l.trim().to_owned()).collect();
    while names.last().is_some_and(|n| n.is_empty()) {
        names.pop();
    }
    if let Some(pos) = names.iter().position(|n| n.is_empty()) {
        return Err(IngestError::parse(
            path.display().to_string(),
            pos + 1,
            1,
            "empty class name",
        ));
    }
    Ok(names)
}

/// Parses the lines of one label file into per-class counts.
pub fn parse_label_text(
    text: &str,
    num_classes: usize,
    source_name: &str,
) -> Result<Vec<(CategoryId, u32)>, IngestError> {
    let mut counts = vec![0u32; num_classes];
    for (lineno, line) in text.lines().enumerate() {
        let lineno = lineno + 1;
        let tokens: Vec<&str> = line.split_whitespace().collect();
        if tokens.is_empty() {
            continue;
        }
        if tokens.len() != 5 {
            return Err(IngestError::parse(
                source_name,
                lineno,
                1,
                format!("expected 5 fields `class cx cy w h`, found {}", tokens.len()),
            ));
        }
        let class: usize = tokens[0].parse().map_err(|_| {
            IngestError::parse(
                source_name,
                lineno,
                1,
                format!("class index `{}` is not a non-negative integer", tokens[0]),
            )
        })?;
        for (field, tok) in tokens.iter().enumerate().skip(1) {
            match tok.parse::<f64>() {
                Ok(v) if v.is_finite() => {}
                _ => {
                    return Err(IngestError::parse(
                        source_name,
                        lineno,
                        field + 1,
                        format!("geometry field `{tok}` is not a finite number"),
                    ))
                }
            }
        }
        if class >= num_classes {
            return Err(IngestError::Validation {
                message: format!("class index out of range (have {num_classes} classes)"),
                offending: vec![format!("{source_name}:{lineno}: class {class}")],
            });
        }
        counts[class] += 1;
    }
    Ok(counts
        .into_iter()
        .enumerate()
        .filter(|&(_, n)| n > 0)
        .map(|(c, n)| (c as CategoryId, n))
        .collect())
}

/// Parses a YOLO label directory.
///
/// `image_id` is the label path relative to `labels_root` without the
/// extension; `source_path` is the relative label path itself.
pub fn parse_yolo(labels_root: &Path, class_names: &[String]) -> Result<DatasetIndex, IngestError> {
    let mut files: Vec<PathBuf> = Vec::new();
    for entry in WalkDir::new(labels_root).sort_by_file_name() {
        let entry = entry.map_err(|e| {
            let path = e.path().unwrap_or(labels_root).to_path_buf();
            IngestError::io(path, e.into())
        })?;
        let path = entry.path();
        if entry.file_type().is_file()
            && path.extension().is_some_and(|ext| ext == "txt")
            && path.file_name().is_some_and(|n| n != "classes.txt")
        {
            files.push(path.to_path_buf());
        }
    }

    let images = files
        .par_iter()
        .map(|path| {
            let rel = path.strip_prefix(labels_root).unwrap_or(path);
            let rel_str = rel.to_string_lossy().replace('\\', "/");
            let text = fs::read_to_string(path).map_err(|e| IngestError::io(path, e))?;
            let counts = parse_label_text(&text, class_names.len(), &rel_str)?;
            let image_id = rel.with_extension("").to_string_lossy().replace('\\', "/");
            Ok(ImageRecord::new(image_id, rel_str).with_counts(counts))
        })
        .collect::<Result<Vec<_>, IngestError>>()?;

    let categories = class_names
        .iter()
        .enumerate()
        .map(|(i, n)| CategoryInfo::new(i as CategoryId, n.clone()))
        .collect();
    let dataset_id = labels_root
        .file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "labels".to_owned());
    Ok(DatasetIndex::new(dataset_id, categories, images))
}
