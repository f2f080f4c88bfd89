use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::cli::config::RunConfig;
use crate::error::{LakeError, Result};
use crate::geometry::Grid;

pub const MANIFEST_NAME: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileRecord {
    pub name: String,
    pub sha256: String,
    pub bytes: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnapshotRecord {
    pub time: f64,
    pub file: String,
}

/// Manifest read by `diagnose`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputRecord {
    pub path: String,
    pub sha256: String,
}

/// Record written next to the artifacts of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub subcommand: String,
    /// Effective config, after command-line overrides.
    pub config: RunConfig,
    pub wall_time_s: f64,
    /// Non-finite values are stored as `null`.
    pub scalars: BTreeMap<String, Option<f64>>,
    #[serde(default)]
    pub snapshots: Vec<SnapshotRecord>,
    #[serde(default)]
    pub inputs: Vec<InputRecord>,
    pub files: Vec<FileRecord>,
}

impl RunManifest {
    pub fn scalar(&self, key: &str) -> Option<f64> {
        self.scalars.get(key).copied().flatten()
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        serde_json::from_str(&text)
            .map_err(|e| LakeError::Validation(format!("{} is not a run manifest: {e}", path.display())))
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// 17 significant digits.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Output directory that records every file it writes.
#[derive(Debug)]
pub struct OutputDir {
    root: PathBuf,
    files: Vec<FileRecord>,
}

impl OutputDir {
    pub fn create(root: &Path) -> Result<Self> {
        fs::create_dir_all(root)?;
        Ok(Self { root: root.to_path_buf(), files: Vec::new() })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        if self.files.iter().any(|f| f.name == name) || name == MANIFEST_NAME {
            return Err(LakeError::Validation(format!("output file {name} written twice")));
        }
        fs::write(self.root.join(name), bytes)?;
        self.files.push(FileRecord { name: name.to_string(), sha256: sha256_hex(bytes), bytes: bytes.len() });
        Ok(())
    }

    pub fn write_csv(&mut self, name: &str, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let err = |e: csv::Error| LakeError::Io(std::io::Error::other(e.to_string()));
        w.write_record(header).map_err(err)?;
        for r in rows {
            w.write_record(r).map_err(err)?;
        }
        let bytes = w.into_inner().map_err(|e| LakeError::Io(std::io::Error::other(e.to_string())))?;
        self.write(name, &bytes)
    }

    /// Cell table `i,j,x,y,<columns>`.
    pub fn write_field_csv(&mut self, name: &str, grid: &Grid, columns: &[(&str, &[f64])]) -> Result<()> {
        let mut header = vec!["i", "j", "x", "y"];
        header.extend(columns.iter().map(|c| c.0));
        let rows: Vec<Vec<String>> = grid
            .cells()
            .iter()
            .zip(grid.centers())
            .enumerate()
            .map(|(k, (&(i, j), c))| {
                let mut r = vec![i.to_string(), j.to_string(), fmt_f64(c[0]), fmt_f64(c[1])];
                r.extend(columns.iter().map(|col| fmt_f64(col.1[k])));
                r
            })
            .collect();
        self.write_csv(name, &header, &rows)
    }

    pub fn finish(self, mut manifest: RunManifest) -> Result<RunManifest> {
        manifest.files = self.files;
        let text = serde_json::to_string_pretty(&manifest)
            .map_err(|e| LakeError::Io(std::io::Error::other(e.to_string())))?;
        fs::write(self.root.join(MANIFEST_NAME), text + "\n")?;
        Ok(manifest)
    }
}

/// Named columns of a field CSV, checked against `grid`'s cell order.
pub fn read_field_csv(path: &Path, grid: &Grid, columns: &[&str]) -> Result<Vec<Vec<f64>>> {
    let bytes = fs::read(path)?;
    let mut r = csv::Reader::from_reader(bytes.as_slice());
    let bad = |m: String| LakeError::Validation(format!("{}: {m}", path.display()));
    let header = r.headers().map_err(|e| bad(e.to_string()))?.clone();
    let idx: Vec<usize> = columns
        .iter()
        .map(|c| header.iter().position(|h| h == *c).ok_or_else(|| bad(format!("missing column {c}"))))
        .collect::<Result<_>>()?;
    let mut out = vec![Vec::with_capacity(grid.len()); columns.len()];
    let mut k = 0;
    for rec in r.records() {
        let rec = rec.map_err(|e| bad(e.to_string()))?;
        let parse_u = |s: &str| s.parse::<usize>().map_err(|e| bad(e.to_string()));
        let (i, j) = (parse_u(&rec[0])?, parse_u(&rec[1])?);
        if grid.cells().get(k) != Some(&(i, j)) {
            return Err(LakeError::GridMismatch(format!(
                "{} row {} is cell ({i}, {j}), not on the rebuilt grid",
                path.display(),
                k + 1
            )));
        }
        for (col, &c) in out.iter_mut().zip(&idx) {
            col.push(rec[c].parse::<f64>().map_err(|e| bad(e.to_string()))?);
        }
        k += 1;
    }
    if k != grid.len() {
        return Err(LakeError::GridMismatch(format!(
            "{} has {k} cells, the rebuilt grid has {}",
            path.display(),
            grid.len()
        )));
    }
    Ok(out)
}
