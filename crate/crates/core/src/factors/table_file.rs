//! Text form of a [`RepeatFactorTable`].
//!
//! A JSON header line prefixed with `#rfskit-factors ` carries the dataset
//! id and configuration. Tab-separated records follow:
//!
//! ```text
//! class    <category_id> <name> <f_i> <f_b> <r_c>
//! excluded <category_id>
//! image    <image_id> <r_i> <p_i>
//! ```
//!
//! Floats use the shortest representation that parses back to the same
//! bits, so the format round-trips exactly.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use super::{ClassFactor, ImageFactor, RebalanceConfig, RepeatFactorTable};
use crate::error::FormatError;

pub const TABLE_FORMAT: &str = "#rfskit-factors ";

#[derive(Serialize, Deserialize)]
struct Header {
    version: u32,
    dataset_id: String,
    config: RebalanceConfig,
}

pub fn write_table<W: Write>(table: &RepeatFactorTable, mut out: W) -> Result<(), FormatError> {
    let header = Header {
        version: 1,
        dataset_id: table.dataset_id.clone(),
        config: table.config,
    };
    out.write_all(TABLE_FORMAT.as_bytes())?;
    serde_json::to_writer(&mut out, &header).map_err(std::io::Error::from)?;
    out.write_all(b"\n")?;

    let mut w = csv::WriterBuilder::new()
        .delimiter(b'\t')
        .flexible(true)
        .has_headers(false)
        .from_writer(out);
    for c in &table.classes {
        w.write_record([
            "class".to_owned(),
            c.category_id.to_string(),
            c.name.clone(),
            c.image_fraction.to_string(),
            c.instance_fraction.to_string(),
            c.factor.to_string(),
        ])?;
    }
    for id in &table.excluded {
        w.write_record(["excluded".to_owned(), id.to_string()])?;
    }
    for i in &table.images {
        w.write_record([
            "image".to_owned(),
            i.image_id.to_string(),
            i.factor.to_string(),
            i.probability.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn table_to_string(table: &RepeatFactorTable) -> String {
    let mut buf = Vec::new();
    write_table(table, &mut buf).expect("writing to a Vec cannot fail");
    String::from_utf8(buf).expect("table text is UTF-8")
}

fn field(rec: &csv::StringRecord, i: usize, line: usize) -> Result<&str, FormatError> {
    rec.get(i)
        .ok_or_else(|| FormatError::malformed(line, format!("missing field {}", i + 1)))
}

fn float(rec: &csv::StringRecord, i: usize, line: usize) -> Result<f64, FormatError> {
    let s = field(rec, i, line)?;
    s.parse()
        .map_err(|_| FormatError::malformed(line, format!("`{s}` is not a number")))
}

pub fn read_table<R: BufRead>(mut input: R) -> Result<RepeatFactorTable, FormatError> {
    let mut first = String::new();
    input.read_line(&mut first)?;
    let json = first
        .trim_end_matches('\n')
        .strip_prefix(TABLE_FORMAT)
        .ok_or_else(|| FormatError::malformed(1, "missing #rfskit-factors header"))?;
    let header: Header =
        serde_json::from_str(json).map_err(|e| FormatError::malformed(1, e.to_string()))?;
    if header.version != 1 {
        return Err(FormatError::malformed(1, format!("unsupported version {}", header.version)));
    }

    let mut rest = Vec::new();
    input.read_to_end(&mut rest)?;
    let mut rdr = csv::ReaderBuilder::new()
        .delimiter(b'\t')
        .flexible(true)
        .has_headers(false)
        .from_reader(rest.as_slice());

    let mut table = RepeatFactorTable {
        dataset_id: header.dataset_id,
        config: header.config,
        classes: Vec::new(),
        excluded: Vec::new(),
        images: Vec::new(),
    };
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line() as usize + 1);
        let parse_id = |s: &str| {
            s.parse()
                .map_err(|_| FormatError::malformed(line, format!("bad category id `{s}`")))
        };
        match field(&rec, 0, line)? {
            "class" => table.classes.push(ClassFactor {
                category_id: parse_id(field(&rec, 1, line)?)?,
                name: field(&rec, 2, line)?.to_owned(),
                image_fraction: float(&rec, 3, line)?,
                instance_fraction: float(&rec, 4, line)?,
                factor: float(&rec, 5, line)?,
            }),
            "excluded" => table.excluded.push(parse_id(field(&rec, 1, line)?)?),
            "image" => table.images.push(ImageFactor {
                image_id: field(&rec, 1, line)?.into(),
                factor: float(&rec, 2, line)?,
                probability: float(&rec, 3, line)?,
            }),
            other => return Err(FormatError::malformed(line, format!("unknown record kind `{other}`"))),
        }
    }
    Ok(table)
}
