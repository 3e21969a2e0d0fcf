use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use serde_json::{json, Value as Json};

use rdelab::pool::{Histogram, SamplePool};

use crate::config::RunConfig;

/// Writes the artifacts of one run into its output directory.
pub struct Artifacts {
    dir: PathBuf,
    preamble: Json,
    lines: Vec<String>,
}

impl Artifacts {
    pub fn new(cfg: &RunConfig) -> Result<Artifacts, String> {
        let dir = cfg.out_dir();
        fs::create_dir_all(&dir).map_err(|e| format!("cannot create {}: {e}", dir.display()))?;
        let preamble = json!({ "config": cfg, "seed_lineage": cfg.seeds() });
        Ok(Artifacts {
            dir,
            preamble,
            lines: Vec::new(),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    /// Append one `{kind: payload}` line to the report.
    pub fn record<T: Serialize>(&mut self, kind: &str, payload: &T) -> Result<(), String> {
        let v = serde_json::to_value(payload).map_err(|e| e.to_string())?;
        let mut obj = serde_json::Map::new();
        obj.insert(kind.to_string(), v);
        self.lines
            .push(serde_json::to_string(&Json::Object(obj)).map_err(|e| e.to_string())?);
        Ok(())
    }

    fn comment_block(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# config: {}", self.preamble["config"]);
        let _ = writeln!(s, "# seed_lineage: {}", self.preamble["seed_lineage"]);
        s
    }

    pub fn write_pool(&self, pool: &SamplePool) -> Result<(), String> {
        let mut s = self.comment_block();
        for v in &pool.values {
            let _ = writeln!(s, "{v}");
        }
        self.write("pool.csv", &s)
    }

    pub fn write_hist(&self, pool: &SamplePool, bins: Option<usize>) -> Result<(), String> {
        if !pool.is_scalar() {
            return Ok(());
        }
        let xs = pool.reals();
        let h = match bins {
            Some(b) if b > 0 => {
                let finite: Vec<f64> = xs.iter().copied().filter(|x| x.is_finite()).collect();
                let lo = finite.iter().copied().fold(f64::INFINITY, f64::min);
                let hi = finite.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                if finite.is_empty() {
                    Histogram::with_edges(&xs, Vec::new())
                } else {
                    let span = if hi > lo { hi - lo } else { 1.0 };
                    Histogram::with_edges(
                        &xs,
                        (0..=b).map(|k| lo + span * k as f64 / b as f64).collect(),
                    )
                }
            }
            _ => Histogram::freedman_diaconis(&xs),
        };
        let mut s = self.comment_block();
        s.push_str(&h.to_csv());
        self.write("hist.csv", &s)
    }

    pub fn write_csv(
        &self,
        name: &str,
        header: &str,
        rows: impl IntoIterator<Item = String>,
    ) -> Result<(), String> {
        let mut s = self.comment_block();
        let _ = writeln!(s, "{header}");
        for r in rows {
            let _ = writeln!(s, "{r}");
        }
        self.write(name, &s)
    }

    /// Write `report.json`: a header line holding the only timestamp, the
    /// preamble, then the recorded lines.
    pub fn finish(&self) -> Result<(), String> {
        let ts = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        let header = json!({ "header": { "tool": "rdelab", "version": env!("CARGO_PKG_VERSION"), "timestamp": ts } });
        let mut s = String::new();
        let _ = writeln!(s, "{header}");
        let _ = writeln!(s, "{}", self.preamble);
        for l in &self.lines {
            let _ = writeln!(s, "{l}");
        }
        self.write("report.json", &s)
    }

    fn write(&self, name: &str, contents: &str) -> Result<(), String> {
        let p = self.dir.join(name);
        fs::write(&p, contents).map_err(|e| format!("cannot write {}: {e}", p.display()))
    }
}
