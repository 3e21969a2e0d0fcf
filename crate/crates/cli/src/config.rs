use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use rdelab::analysis::Orientation;
use rdelab::rng::derive;

/// Environment variable holding the default output directory.
pub const OUT_ENV: &str = "RDELAB_OUT";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    List,
    Iterate,
    Endogeny,
    Scan,
    Simulate,
}

impl Command {
    pub fn as_str(self) -> &'static str {
        match self {
            Command::List => "list",
            Command::Iterate => "iterate",
            Command::Endogeny => "endogeny",
            Command::Scan => "scan",
            Command::Simulate => "simulate",
        }
    }
}

/// Histogram binning: Freedman–Diaconis unless a bin count is given.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HistSpec {
    pub bins: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IterateOpts {
    pub min_iters: usize,
    pub period: usize,
    pub window: usize,
    pub divergence_threshold: f64,
}

impl Default for IterateOpts {
    fn default() -> IterateOpts {
        IterateOpts {
            min_iters: 1,
            period: 1,
            window: 10,
            divergence_threshold: 1.0,
        }
    }
}

/// Where the endogeny test takes its fixed-point pool from.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EndogenyStart {
    /// Iterate `T` from the entry's initial law.
    #[default]
    Iterate,
    /// Draw from the entry's closed-form fixed point.
    Oracle,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EndogenyOpts {
    pub start: EndogenyStart,
    pub max_iters: usize,
    pub gap_tol: f64,
    pub plateau_window: usize,
    pub plateau_rel: f64,
    pub p: f64,
}

impl Default for EndogenyOpts {
    fn default() -> EndogenyOpts {
        EndogenyOpts {
            start: EndogenyStart::Iterate,
            max_iters: 200,
            gap_tol: 0.05,
            plateau_window: 20,
            plateau_rel: 0.05,
            p: 1.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScanOpts {
    /// Name of the scanned parameter.
    pub param: String,
    pub lo: Option<f64>,
    pub hi: Option<f64>,
    pub points: usize,
    pub bisections: usize,
    pub orientation: Orientation,
    /// Generations every scan point runs unless it diverges first.
    pub generations: usize,
}

impl Default for ScanOpts {
    fn default() -> ScanOpts {
        ScanOpts {
            param: "c".into(),
            lo: None,
            hi: None,
            points: 8,
            bisections: 5,
            orientation: Orientation::DivergesAbove,
            generations: 300,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SimMode {
    Brw,
    Greedy,
    FrozenStats,
}

impl SimMode {
    pub fn for_entry(id: &str) -> Option<SimMode> {
        match id {
            "brw_range" | "brw_extreme" => Some(SimMode::Brw),
            "brw_greedy_L" => Some(SimMode::Greedy),
            "frozen_perc" => Some(SimMode::FrozenStats),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateOpts {
    pub mode: Option<SimMode>,
    pub generations: usize,
    pub cap: usize,
    pub replicas: usize,
    pub steps: usize,
    pub samples: usize,
}

impl Default for SimulateOpts {
    fn default() -> SimulateOpts {
        SimulateOpts {
            mode: None,
            generations: 200,
            cap: 100_000,
            replicas: 32,
            steps: 100_000,
            samples: 200_000,
        }
    }
}

/// Everything a run depends on besides the code version.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub command: Command,
    pub entry: Option<String>,
    pub params: BTreeMap<String, String>,
    pub pool: usize,
    pub max_iters: usize,
    pub tol: f64,
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub hist: HistSpec,
    pub iterate: IterateOpts,
    pub endogeny: EndogenyOpts,
    pub scan: ScanOpts,
    pub simulate: SimulateOpts,
}

impl Default for RunConfig {
    fn default() -> RunConfig {
        RunConfig {
            command: Command::Iterate,
            entry: None,
            params: BTreeMap::new(),
            pool: 100_000,
            max_iters: 200,
            tol: 0.01,
            seed: 0,
            out: None,
            hist: HistSpec::default(),
            iterate: IterateOpts::default(),
            endogeny: EndogenyOpts::default(),
            scan: ScanOpts::default(),
            simulate: SimulateOpts::default(),
        }
    }
}

/// Named seeds derived from the master seed, recorded in every artifact.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SeedLineage {
    pub master: u64,
    pub init: u64,
    pub iterate: u64,
    pub endogeny: u64,
    pub scan: u64,
    pub simulate: u64,
}

impl SeedLineage {
    pub fn from_master(master: u64) -> SeedLineage {
        SeedLineage {
            master,
            init: derive(master, 1),
            iterate: derive(master, 2),
            endogeny: derive(master, 3),
            scan: derive(master, 4),
            simulate: derive(master, 5),
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<RunConfig, String> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
        serde_json::from_str(&text).map_err(|e| format!("invalid config {}: {e}", path.display()))
    }

    pub fn entry(&self) -> Result<&str, String> {
        self.entry
            .as_deref()
            .ok_or_else(|| format!("`{}` needs --entry", self.command.as_str()))
    }

    pub fn out_dir(&self) -> PathBuf {
        self.out
            .clone()
            .or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from("rdelab-out"))
    }

    pub fn seeds(&self) -> SeedLineage {
        SeedLineage::from_master(self.seed)
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.pool < 2 {
            return Err(format!("pool must be at least 2, got {}", self.pool));
        }
        if self.max_iters == 0 {
            return Err("iters must be positive".into());
        }
        if !(self.tol > 0.0) || !self.tol.is_finite() {
            return Err(format!("tol must be positive, got {}", self.tol));
        }
        if self.iterate.period == 0 {
            return Err("period must be positive".into());
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partial_json_fills_defaults() {
        let c: RunConfig =
            serde_json::from_str(r#"{"entry":"quicksort","scan":{"points":4}}"#).unwrap();
        assert_eq!(c.pool, 100_000);
        assert_eq!(c.scan.points, 4);
        assert_eq!(c.scan.bisections, 5);
    }

    #[test]
    fn unknown_fields_are_rejected() {
        assert!(serde_json::from_str::<RunConfig>(r#"{"pool_size":3}"#).is_err());
    }

    #[test]
    fn round_trip() {
        let c = RunConfig {
            entry: Some("lindley".into()),
            seed: 9,
            ..RunConfig::default()
        };
        let s = serde_json::to_string(&c).unwrap();
        assert_eq!(serde_json::from_str::<RunConfig>(&s).unwrap(), c);
    }
}
