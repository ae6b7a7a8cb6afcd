//! On-disk cell store: one JSON file plus one audit CSV per completed cell.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use super::report::format_overlap;
use super::FoldResult;
use crate::ensemble::{write_audit_csv, AuditRecord, OnlineMode};
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct ResultsStore {
    dir: PathBuf,
}

impl ResultsStore {
    /// Cells live under `<root>/cells`.
    pub fn open(root: impl AsRef<Path>) -> Result<Self> {
        let dir = root.as_ref().join("cells");
        fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        Ok(Self { dir })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn cell_key(user: u8, window_size: usize, overlap: f64, mode: OnlineMode, seed: u64) -> String {
        format!("u{user}_w{window_size}_o{}_{mode}_s{seed}", format_overlap(overlap))
    }

    pub fn result_path(&self, key: &str) -> PathBuf {
        self.dir.join(format!("{key}.json"))
    }

    pub fn audit_path(&self, key: &str) -> PathBuf {
        self.dir.join(format!("{key}.audit.csv"))
    }

    /// A previously completed cell, if present and readable.
    pub fn load(&self, key: &str) -> Option<FoldResult> {
        let path = self.result_path(key);
        let text = fs::read_to_string(&path).ok()?;
        match serde_json::from_str(&text) {
            Ok(r) => Some(r),
            Err(e) => {
                log::warn!("ignoring unreadable cell {}: {e}", path.display());
                None
            }
        }
    }

    /// Audit CSV first, JSON last; the JSON's presence marks completion.
    pub fn save(&self, result: &FoldResult, records: &[AuditRecord]) -> Result<()> {
        let key = Self::cell_key(result.user_id, result.window_size, result.overlap, result.mode, result.seed);
        let audit = self.audit_path(&key);
        write_atomic(&audit, |w| {
            write_audit_csv(w, records).map_err(|e| Error::format(&audit, e.to_string()))
        })?;
        let path = self.result_path(&key);
        let json = serde_json::to_vec_pretty(result).map_err(|e| Error::format(&path, e.to_string()))?;
        write_atomic(&path, |w| w.write_all(&json).map_err(|e| Error::io(&path, e)))
    }

    /// Every completed cell in the store.
    pub fn load_all(&self) -> Result<Vec<FoldResult>> {
        let mut out = Vec::new();
        for entry in fs::read_dir(&self.dir).map_err(|e| Error::io(&self.dir, e))? {
            let path = entry.map_err(|e| Error::io(&self.dir, e))?.path();
            if path.extension().is_some_and(|e| e == "json") {
                let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
                out.push(serde_json::from_str(&text).map_err(|e| Error::format(&path, e.to_string()))?);
            }
        }
        Ok(out)
    }
}

pub(crate) fn write_atomic(
    path: &Path,
    body: impl FnOnce(&mut BufWriter<&mut fs::File>) -> Result<()>,
) -> Result<()> {
    let tmp = path.with_extension(format!(
        "{}.tmp",
        path.extension().and_then(|e| e.to_str()).unwrap_or("")
    ));
    let mut file = fs::File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
    {
        let mut w = BufWriter::new(&mut file);
        body(&mut w)?;
        w.flush().map_err(|e| Error::io(&tmp, e))?;
    }
    file.sync_all().map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}
