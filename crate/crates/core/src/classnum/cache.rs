//! Memoised `12 H(D)` values, optionally persisted as a tab-separated file
//! with one `D<TAB>12H` record per line, sorted by `|D|`.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::{Mutex, RwLock};

use super::{hurwitz_twelve_h, HurwitzValue};
use crate::error::{Error, Result};

#[derive(Debug, Default)]
pub struct HurwitzCache {
    values: RwLock<HashMap<i64, u64>>,
    pending: Mutex<BTreeMap<i64, u64>>,
    path: Option<PathBuf>,
}

fn parse_records(text: &str, origin: &Path) -> Result<Vec<(i64, u64)>> {
    let mut out = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let bad = || Error::Cache(format!("{}:{}: malformed record {line:?}", origin.display(), lineno + 1));
        let (d, v) = line.split_once('\t').ok_or_else(bad)?;
        let d: i64 = d.trim().parse().map_err(|_| bad())?;
        let v: u64 = v.trim().parse().map_err(|_| bad())?;
        if d >= 0 {
            return Err(bad());
        }
        out.push((d, v));
    }
    Ok(out)
}

impl HurwitzCache {
    pub fn in_memory() -> Self {
        Self::default()
    }

    /// Opens a cache backed by `path`, loading any records already there.
    pub fn open(path: impl Into<PathBuf>) -> Result<Self> {
        let path = path.into();
        let mut values = HashMap::new();
        if path.exists() {
            let text = fs::read_to_string(&path)?;
            for (d, v) in parse_records(&text, &path)? {
                if let Some(old) = values.insert(d, v) {
                    if old != v {
                        return Err(Error::Cache(format!("conflicting values for D = {d}: {old} and {v}")));
                    }
                }
            }
        }
        Ok(HurwitzCache {
            values: RwLock::new(values),
            pending: Mutex::new(BTreeMap::new()),
            path: Some(path),
        })
    }

    pub fn path(&self) -> Option<&Path> {
        self.path.as_deref()
    }

    pub fn len(&self) -> usize {
        self.values.read().unwrap().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn twelve_h(&self, big_d: i64) -> Result<u64> {
        if let Some(&v) = self.values.read().unwrap().get(&big_d) {
            return Ok(v);
        }
        // Racing workers may both compute a miss; the values must agree.
        let v = hurwitz_twelve_h(big_d)?;
        let mut values = self.values.write().unwrap();
        match values.get(&big_d) {
            Some(&old) if old != v => {
                return Err(Error::Cache(format!("nondeterministic value for D = {big_d}: {old} vs {v}")));
            }
            Some(_) => {}
            None => {
                values.insert(big_d, v);
                if self.path.is_some() {
                    self.pending.lock().unwrap().insert(big_d, v);
                }
            }
        }
        Ok(v)
    }

    pub fn hurwitz(&self, big_d: i64) -> Result<HurwitzValue> {
        self.twelve_h(big_d).map(HurwitzValue::from_twelfths)
    }

    /// `H(D)` as a float, taking `H = 0` for `D >= 0`.
    pub fn h_or_zero(&self, big_d: i64) -> f64 {
        if big_d >= 0 {
            return 0.0;
        }
        self.twelve_h(big_d).expect("D < 0") as f64 / 12.0
    }

    /// Writes new records to disk. The file is re-read and merged so that
    /// concurrent processes sharing a cache do not drop each other's work,
    /// then replaced by rename. Returns the number of new records.
    pub fn flush(&self) -> Result<usize> {
        let Some(path) = &self.path else {
            return Ok(0);
        };
        let mut pending = self.pending.lock().unwrap();
        if pending.is_empty() {
            return Ok(0);
        }
        let mut merged: BTreeMap<i64, u64> = BTreeMap::new();
        if path.exists() {
            for (d, v) in parse_records(&fs::read_to_string(path)?, path)? {
                merged.insert(d, v);
            }
        }
        let mut added = 0;
        for (&d, &v) in pending.iter() {
            match merged.insert(d, v) {
                Some(old) if old != v => {
                    return Err(Error::Cache(format!("on-disk value {old} for D = {d} disagrees with {v}")));
                }
                Some(_) => {}
                None => added += 1,
            }
        }
        if let Some(dir) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
            fs::create_dir_all(dir)?;
        }
        let tmp = path.with_extension(format!("tmp.{}", std::process::id()));
        {
            let mut out = std::io::BufWriter::new(fs::File::create(&tmp)?);
            // BTreeMap order is ascending D, i.e. descending |D|
            for (d, v) in merged.iter().rev() {
                writeln!(out, "{d}\t{v}")?;
            }
            out.flush()?;
        }
        fs::rename(&tmp, path)?;
        pending.clear();
        Ok(added)
    }
}
