//! Manifest file format.
//!
//! ```text
//! #rfskit-manifest v1
//! #dataset_id=<id>
//! #mode=draw
//! #epoch=3
//! #seed=42
//! #entries=1000
//! #method=eirfs
//! #t=0.0001
//! #alpha=2
//! #config_digest=<sha256 of the canonical config line>
//! <image_id>
//! ...
//! #digest=sha256:<sha256 of every preceding byte>
//! ```
//!
//! Image ids may not contain line breaks or start with `#`.

use std::io::{Read, Write};

use sha2::{Digest, Sha256};

use super::{EpochManifest, SampleMode};
use crate::error::FormatError;
use crate::factors::{Method, RebalanceConfig, RepeatFactorTable};

pub const MANIFEST_MAGIC: &str = "#rfskit-manifest v1";

fn hex_sha256(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

pub fn config_digest(config: &RebalanceConfig) -> String {
    hex_sha256(config.canonical().as_bytes())
}

fn check_line_safe(what: &str, value: &str) -> Result<(), FormatError> {
    if value.contains(['\n', '\r']) {
        return Err(FormatError::malformed(0, format!("{what} `{value}` contains a line break")));
    }
    Ok(())
}

/// Renders `manifest`, resolving entries through `table`.
pub fn manifest_to_string(manifest: &EpochManifest, table: &RepeatFactorTable) -> Result<String, FormatError> {
    check_line_safe("dataset id", &manifest.dataset_id)?;
    let cfg = &manifest.source_config;
    let mut text = String::with_capacity(64 * (manifest.entries.len() + 12));
    text.push_str(MANIFEST_MAGIC);
    text.push('\n');
    text.push_str(&format!("#dataset_id={}\n", manifest.dataset_id));
    text.push_str(&format!("#mode={}\n", manifest.mode));
    text.push_str(&format!("#epoch={}\n", manifest.epoch_index));
    text.push_str(&format!("#seed={}\n", manifest.seed));
    text.push_str(&format!("#entries={}\n", manifest.entries.len()));
    text.push_str(&format!("#method={}\n", cfg.method));
    text.push_str(&format!("#t={}\n", cfg.threshold));
    if let Some(a) = cfg.alpha {
        text.push_str(&format!("#alpha={a}\n"));
    }
    text.push_str(&format!("#config_digest={}\n", config_digest(cfg)));
    for id in manifest.image_ids(table) {
        check_line_safe("image id", id)?;
        if id.starts_with('#') {
            return Err(FormatError::malformed(0, format!("image id `{id}` starts with '#'")));
        }
        text.push_str(id);
        text.push('\n');
    }
    let digest = hex_sha256(text.as_bytes());
    text.push_str(&format!("#digest=sha256:{digest}\n"));
    Ok(text)
}

pub fn write_manifest<W: Write>(
    manifest: &EpochManifest,
    table: &RepeatFactorTable,
    mut out: W,
) -> Result<(), FormatError> {
    out.write_all(manifest_to_string(manifest, table)?.as_bytes())?;
    out.flush()?;
    Ok(())
}

/// A manifest read back from text, with its integrity digest verified.
#[derive(Debug, Clone, PartialEq)]
pub struct ManifestFile {
    pub dataset_id: String,
    pub mode: SampleMode,
    pub epoch_index: u64,
    pub seed: u64,
    pub config: RebalanceConfig,
    pub config_digest: String,
    pub image_ids: Vec<String>,
}

pub fn read_manifest<R: Read>(mut input: R) -> Result<ManifestFile, FormatError> {
    let mut text = String::new();
    input.read_to_string(&mut text)?;

    let body_end = text
        .trim_end_matches('\n')
        .rfind('\n')
        .map(|i| i + 1)
        .ok_or_else(|| FormatError::malformed(1, "truncated manifest"))?;
    let (body, tail) = text.split_at(body_end);
    let recorded = tail
        .trim_end_matches('\n')
        .strip_prefix("#digest=sha256:")
        .ok_or_else(|| FormatError::malformed(0, "missing trailing digest line"))?;
    let computed = hex_sha256(body.as_bytes());
    if recorded != computed {
        return Err(FormatError::Digest {
            recorded: recorded.to_owned(),
            computed,
        });
    }

    let mut lines = body.lines().enumerate();
    match lines.next() {
        Some((_, l)) if l == MANIFEST_MAGIC => {}
        _ => return Err(FormatError::malformed(1, "missing manifest magic line")),
    }

    let mut fields = std::collections::BTreeMap::new();
    let mut image_ids = Vec::new();
    for (i, line) in lines {
        match line.strip_prefix('#') {
            Some(kv) if image_ids.is_empty() => {
                let (k, v) = kv
                    .split_once('=')
                    .ok_or_else(|| FormatError::malformed(i + 1, "header line without `=`"))?;
                fields.insert(k.to_owned(), (i + 1, v.to_owned()));
            }
            Some(_) => return Err(FormatError::malformed(i + 1, "header line after entries")),
            None => image_ids.push(line.to_owned()),
        }
    }

    let get = |k: &str| {
        fields
            .get(k)
            .map(|(_, v)| v.as_str())
            .ok_or_else(|| FormatError::malformed(0, format!("missing header `{k}`")))
    };
    let num = |k: &str| -> Result<u64, FormatError> {
        let v = get(k)?;
        v.parse()
            .map_err(|_| FormatError::malformed(fields[k].0, format!("`{k}` is not an integer: {v}")))
    };
    let float = |k: &str| -> Result<f64, FormatError> {
        let v = get(k)?;
        v.parse()
            .map_err(|_| FormatError::malformed(fields[k].0, format!("`{k}` is not a number: {v}")))
    };

    let method: Method = get("method")?
        .parse()
        .map_err(|e: String| FormatError::malformed(fields["method"].0, e))?;
    let config = RebalanceConfig {
        method,
        threshold: float("t")?,
        alpha: if fields.contains_key("alpha") { Some(float("alpha")?) } else { None },
    };
    let digest = get("config_digest")?.to_owned();
    if digest != config_digest(&config) {
        return Err(FormatError::Digest {
            recorded: digest,
            computed: config_digest(&config),
        });
    }
    let entries = num("entries")?;
    if entries != image_ids.len() as u64 {
        return Err(FormatError::malformed(
            0,
            format!("header declares {entries} entries, found {}", image_ids.len()),
        ));
    }

    Ok(ManifestFile {
        dataset_id: get("dataset_id")?.to_owned(),
        mode: get("mode")?
            .parse()
            .map_err(|e: String| FormatError::malformed(fields["mode"].0, e))?,
        epoch_index: num("epoch")?,
        seed: num("seed")?,
        config,
        config_digest: digest,
        image_ids,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::{draw_epoch, tests::table_from_factors};

    #[test]
    fn writes_and_verifies() {
        let t = table_from_factors(&[1.0, 2.0, 3.0]);
        let m = draw_epoch(&t, 10, 1, 42).unwrap();
        let text = manifest_to_string(&m, &t).unwrap();
        assert!(text.starts_with("#rfskit-manifest v1\n#dataset_id=t\n#mode=draw\n#epoch=1\n#seed=42\n#entries=10\n#method=rfs\n#t=0.5\n#config_digest="));
        let back = read_manifest(text.as_bytes()).unwrap();
        assert_eq!(back.image_ids.len(), 10);
        assert_eq!(back.seed, 42);
        assert_eq!(back.mode, SampleMode::Draw);
        assert_eq!(back.config, t.config);
        let ids: Vec<&str> = m.image_ids(&t).collect();
        assert_eq!(back.image_ids, ids);
    }

    #[test]
    fn tampering_is_detected() {
        let t = table_from_factors(&[1.0, 2.0]);
        let m = draw_epoch(&t, 5, 0, 1).unwrap();
        let text = manifest_to_string(&m, &t).unwrap();
        let tampered = text.replacen("img", "imX", 1);
        assert!(matches!(read_manifest(tampered.as_bytes()), Err(FormatError::Digest { .. })));
        let truncated: String = text.lines().take(3).map(|l| format!("{l}\n")).collect();
        assert!(read_manifest(truncated.as_bytes()).is_err());
    }

    #[test]
    fn unsafe_ids_are_rejected() {
        let mut t = table_from_factors(&[1.0]);
        t.images[0].image_id = "#hash".into();
        let m = draw_epoch(&t, 1, 0, 1).unwrap();
        assert!(manifest_to_string(&m, &t).is_err());
        t.images[0].image_id = "two\nlines".into();
        assert!(manifest_to_string(&m, &t).is_err());
    }
}
