//! On-disk table of verified constants, keyed by family, N, target width and
//! precision, so `critval` and `simulate` can skip re-verification.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

pub const CACHE_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CacheEntry {
    pub family: String,
    #[serde(rename = "N")]
    pub n: usize,
    pub tol: String,
    pub precision_bits: u32,
    pub verified: bool,
    pub sigma2_lo: String,
    pub sigma2_hi: String,
    pub upsilon_lo: Option<String>,
    pub upsilon_hi: Option<String>,
    pub j_final: u32,
}

impl CacheEntry {
    fn same_key(&self, other: &CacheEntry) -> bool {
        self.family == other.family && self.n == other.n && self.tol == other.tol && self.precision_bits == other.precision_bits
    }
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ConstantsCache {
    pub version: u32,
    pub entries: Vec<CacheEntry>,
}

impl Default for ConstantsCache {
    fn default() -> Self {
        ConstantsCache { version: CACHE_VERSION, entries: Vec::new() }
    }
}

impl ConstantsCache {
    /// Loads the cache; a missing file or an older version gives an empty one.
    pub fn load(path: &Path) -> Result<Self, String> {
        let text = match fs::read_to_string(path) {
            Ok(t) => t,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Self::default()),
            Err(e) => return Err(format!("{}: {e}", path.display())),
        };
        let cache: ConstantsCache =
            serde_json::from_str(&text).map_err(|e| format!("{}: malformed cache: {e}", path.display()))?;
        if cache.version != CACHE_VERSION {
            return Ok(Self::default());
        }
        Ok(cache)
    }

    pub fn lookup(&self, family: &str, n: usize, tol: &str, precision_bits: u32) -> Option<&CacheEntry> {
        self.entries
            .iter()
            .find(|e| e.family == family && e.n == n && e.tol == tol && e.precision_bits == precision_bits)
    }

    pub fn insert(&mut self, entry: CacheEntry) {
        self.entries.retain(|e| !e.same_key(&entry));
        self.entries.push(entry);
        self.entries.sort_by(|a, b| (&a.family, a.n, &a.tol, a.precision_bits).cmp(&(&b.family, b.n, &b.tol, b.precision_bits)));
    }

    pub fn save(&self, path: &Path) -> Result<(), String> {
        let text = serde_json::to_string_pretty(self).map_err(|e| e.to_string())?;
        fs::write(path, text + "\n").map_err(|e| format!("{}: {e}", path.display()))
    }
}
