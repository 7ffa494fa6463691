//! Annotation ingestion: COCO JSON, YOLO label directories and the canonical
//! dataset manifest.

mod coco;
mod index_file;
mod yolo;

pub use coco::{parse_coco, parse_coco_file};
pub use index_file::{index_to_string, read_index, read_index_file, write_index, INDEX_FORMAT, INDEX_VERSION};
pub use yolo::{parse_label_text, parse_yolo, read_class_names};
