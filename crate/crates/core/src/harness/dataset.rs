//! Paired vulnerable/patched samples, one directory per variant.

use std::collections::BTreeSet;
use std::io::BufRead;
use std::path::{Path, PathBuf};

use md5::{Digest, Md5};
use serde::{Deserialize, Serialize};
use thiserror::Error;
use walkdir::WalkDir;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("reading {path}: {message}")]
    Io { path: String, message: String },
    #[error("line {line}: {message}")]
    Schema { line: usize, message: String },
}

#[derive(Debug, Clone, Deserialize)]
struct PairLine {
    id: String,
    vulnerable: String,
    patched: String,
    #[serde(default)]
    cwe: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairedSample {
    pub id: String,
    pub vulnerable: PathBuf,
    pub patched: PathBuf,
    pub cwe: Option<String>,
    pub vulnerable_hash: String,
    pub patched_hash: String,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct DatasetLoad {
    pub pairs: Vec<PairedSample>,
    /// (id, reason) for pairs left out.
    pub rejected: Vec<(String, String)>,
}

/// MD5 over the variant's Java files with all whitespace removed, so that
/// reformatting does not change it.
pub fn normalized_hash(dir: &Path) -> Result<String, DatasetError> {
    let mut files: Vec<PathBuf> = WalkDir::new(dir)
        .into_iter()
        .filter_map(Result::ok)
        .filter(|e| e.file_type().is_file() && e.path().extension().is_some_and(|x| x == "java"))
        .map(|e| e.path().to_path_buf())
        .collect();
    files.sort();
    let mut h = Md5::new();
    for f in files {
        let text = std::fs::read_to_string(&f).map_err(|e| DatasetError::Io { path: f.display().to_string(), message: e.to_string() })?;
        let rel = f.strip_prefix(dir).unwrap_or(&f).to_string_lossy().replace('\\', "/");
        h.update(rel.as_bytes());
        h.update([0u8]);
        h.update(normalize(&text).as_bytes());
        h.update([0u8]);
    }
    Ok(h.finalize().iter().map(|b| format!("{b:02x}")).collect())
}

pub fn normalize(text: &str) -> String {
    text.chars().filter(|c| !c.is_whitespace()).collect()
}

/// Reads `{"id", "vulnerable", "patched", "cwe"?}` lines; variant paths are
/// relative to the dataset file. Pairs whose variants normalize to the same
/// content, and repeats of an earlier pair, are rejected.
pub fn load_paired_dataset(path: &Path) -> Result<DatasetLoad, DatasetError> {
    let base = path.parent().unwrap_or(Path::new("."));
    let f = std::fs::File::open(path).map_err(|e| DatasetError::Io { path: path.display().to_string(), message: e.to_string() })?;
    let mut out = DatasetLoad::default();
    let mut seen = BTreeSet::new();
    let mut ids = BTreeSet::new();
    for (i, line) in std::io::BufReader::new(f).lines().enumerate() {
        let line = line.map_err(|e| DatasetError::Io { path: path.display().to_string(), message: e.to_string() })?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: PairLine = serde_json::from_str(&line).map_err(|e| DatasetError::Schema { line: i + 1, message: e.to_string() })?;
        if !ids.insert(rec.id.clone()) {
            return Err(DatasetError::Schema { line: i + 1, message: format!("duplicate id `{}`", rec.id) });
        }
        let v = base.join(&rec.vulnerable);
        let p = base.join(&rec.patched);
        for d in [&v, &p] {
            if !d.is_dir() {
                return Err(DatasetError::Schema { line: i + 1, message: format!("variant directory {} does not exist", d.display()) });
            }
        }
        let (hv, hp) = (normalized_hash(&v)?, normalized_hash(&p)?);
        if hv == hp {
            out.rejected.push((rec.id, "variants identical after whitespace normalization".into()));
            continue;
        }
        if !seen.insert((hv.clone(), hp.clone())) {
            out.rejected.push((rec.id, "duplicate pair".into()));
            continue;
        }
        out.pairs.push(PairedSample { id: rec.id, vulnerable: v, patched: p, cwe: rec.cwe, vulnerable_hash: hv, patched_hash: hp });
    }
    Ok(out)
}
