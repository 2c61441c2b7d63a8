//! Experiment registry, configuration, result files and run manifests.

mod experiments;

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use sha2::{Digest, Sha256};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

pub const SCHEMA: u32 = 1;

/// Experiment names accepted by `run`, plus `report`.
pub const EXPERIMENTS: [&str; 11] = [
    "identity-suite",
    "constants",
    "field-suite",
    "potential-suite",
    "fk-suite",
    "fk-bounds",
    "ldp-mgf",
    "ldp-count",
    "ldp-zeta",
    "maxcount-table",
    "report",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Info,
    Pass,
    Inconclusive,
    Fail,
}

impl Verdict {
    pub fn exit_code(self) -> i32 {
        match self {
            Verdict::Info | Verdict::Pass => 0,
            Verdict::Fail => 2,
            Verdict::Inconclusive => 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    /// What the target value is, in words.
    pub anchor: String,
    pub target: Option<f64>,
    pub measured: Option<f64>,
    pub tolerance: Option<f64>,
    pub verdict: Verdict,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub flag: Option<String>,
}

impl Check {
    pub fn new(name: &str, anchor: &str, measured: f64, target: f64, tolerance: f64, ok: bool) -> Self {
        Check {
            name: name.into(),
            anchor: anchor.into(),
            target: Some(target),
            measured: Some(measured),
            tolerance: Some(tolerance),
            verdict: if ok { Verdict::Pass } else { Verdict::Fail },
            flag: None,
        }
    }

    /// `|measured − target| ≤ tolerance·|target|`.
    pub fn relative(name: &str, anchor: &str, measured: f64, target: f64, tolerance: f64) -> Self {
        let ok = (measured - target).abs() <= tolerance * target.abs();
        Self::new(name, anchor, measured, target, tolerance, ok)
    }

    /// `|measured| < tolerance` for a residual or z-score.
    pub fn below(name: &str, anchor: &str, measured: f64, tolerance: f64) -> Self {
        Self::new(name, anchor, measured, 0.0, tolerance, measured.abs() < tolerance)
    }

    pub fn info(name: &str, anchor: &str, measured: f64) -> Self {
        Check {
            name: name.into(),
            anchor: anchor.into(),
            target: None,
            measured: Some(measured),
            tolerance: None,
            verdict: Verdict::Info,
            flag: None,
        }
    }

    pub fn inconclusive_if(mut self, cond: bool) -> Self {
        if cond && self.verdict == Verdict::Pass {
            self.verdict = Verdict::Inconclusive;
        }
        self
    }

    pub fn flagged(mut self, flag: &str) -> Self {
        self.flag = Some(flag.into());
        self
    }
}

/// Module parameters; each experiment uses a subset and fills in defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Params {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub d: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub a: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eps: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_paths: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_paths_annealed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_steps: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_fields: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub h: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub radii: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub levels: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub radius: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub amplitude: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_potentials: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dictionary_size: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ts: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reps: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub spot_cells: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema: u32,
    pub experiment: String,
    #[serde(default)]
    pub seed: u64,
    /// Output directory; not part of the config hash.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub params: Params,
}

fn unknown_experiment(name: &str) -> Error {
    Error::Config(format!("unknown experiment `{name}`; available: {}", EXPERIMENTS.join(", ")))
}

fn to_map(p: &Params) -> Map<String, Value> {
    match serde_json::to_value(p).expect("params serialize") {
        Value::Object(m) => m,
        _ => unreachable!("params serialize to an object"),
    }
}

impl ExperimentConfig {
    pub fn new(experiment: &str) -> Self {
        ExperimentConfig { schema: SCHEMA, experiment: experiment.into(), seed: 0, out: None, params: Params::default() }
    }

    /// Parses a JSON config; errors carry the line and column.
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(format!("malformed config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Checks the schema and parameter names, fills in the experiment's defaults
    /// and validates the parameter ranges.
    pub fn resolved(&self) -> Result<ExperimentConfig> {
        if self.schema != SCHEMA {
            return Err(Error::Config(format!("unsupported schema {} (expected {SCHEMA})", self.schema)));
        }
        if self.experiment == "report" {
            return Err(Error::Config("`report` reads a manifest and takes no config".into()));
        }
        let defaults = experiments::defaults(&self.experiment).ok_or_else(|| unknown_experiment(&self.experiment))?;
        let mut merged = to_map(&defaults);
        for (k, v) in to_map(&self.params) {
            if !merged.contains_key(&k) {
                let allowed: Vec<&String> = merged.keys().collect();
                return Err(Error::Config(format!("parameter `{k}` is not used by `{}` (accepted: {allowed:?})", self.experiment)));
            }
            merged.insert(k, v);
        }
        let params: Params = serde_json::from_value(Value::Object(merged))?;
        experiments::validate(&self.experiment, &params)?;
        Ok(ExperimentConfig { schema: self.schema, experiment: self.experiment.clone(), seed: self.seed, out: self.out.clone(), params })
    }

    /// SHA-256 of the resolved config without the output directory, with keys in
    /// sorted order.
    pub fn hash(&self) -> Result<String> {
        let r = self.resolved()?;
        let v = serde_json::to_value(ExperimentConfig { out: None, ..r })?;
        Ok(hex::encode(Sha256::digest(serde_json::to_string(&v)?.as_bytes())))
    }
}

/// Checks and result files of one experiment.
#[derive(Debug, Clone, Default)]
pub struct Outcome {
    pub checks: Vec<Check>,
    pub files: Vec<(String, Vec<u8>)>,
}

impl Outcome {
    pub fn verdict(&self) -> Verdict {
        self.checks.iter().map(|c| c.verdict).max().unwrap_or(Verdict::Pass).max(Verdict::Pass)
    }

    fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut bytes = serde_json::to_vec_pretty(value)?;
        bytes.push(b'\n');
        self.files.push((name.into(), bytes));
        Ok(())
    }

    fn csv(&mut self, name: &str, f: impl FnOnce(&mut Vec<u8>) -> Result<()>) -> Result<()> {
        let mut bytes = Vec::new();
        f(&mut bytes)?;
        self.files.push((name.into(), bytes));
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileEntry {
    pub name: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub schema: u32,
    pub experiment: String,
    pub config: ExperimentConfig,
    pub config_hash: String,
    pub code_version: String,
    pub started_unix: u64,
    pub finished_unix: u64,
    pub threads: usize,
    pub files: Vec<FileEntry>,
    pub checks: Vec<Check>,
    pub verdict: Verdict,
}

fn now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
}

/// Runs the experiment without writing anything. `threads` sets the size of a
/// dedicated worker pool.
pub fn execute(cfg: &ExperimentConfig, threads: Option<usize>) -> Result<(ExperimentConfig, Outcome)> {
    let resolved = cfg.resolved()?;
    let run = || experiments::dispatch(&resolved);
    let outcome = match threads {
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build().map_err(|e| Error::Config(e.to_string()))?;
            pool.install(run)?
        }
        None => run()?,
    };
    Ok((resolved, outcome))
}

/// Runs the experiment, writes its result files and `manifest.json` into the
/// output directory and returns the manifest.
pub fn run(cfg: &ExperimentConfig, threads: Option<usize>) -> Result<RunManifest> {
    let started = now();
    let (resolved, outcome) = execute(cfg, threads)?;
    let out = resolved.out.clone().unwrap_or_else(|| PathBuf::from("results"));
    std::fs::create_dir_all(&out)?;
    let mut files = Vec::new();
    for (name, bytes) in &outcome.files {
        std::fs::write(out.join(name), bytes)?;
        files.push(FileEntry { name: name.clone(), sha256: hex::encode(Sha256::digest(bytes)), bytes: bytes.len() as u64 });
    }
    let manifest = RunManifest {
        schema: SCHEMA,
        experiment: resolved.experiment.clone(),
        config_hash: resolved.hash()?,
        config: resolved,
        code_version: env!("CARGO_PKG_VERSION").into(),
        started_unix: started,
        finished_unix: now(),
        threads: threads.unwrap_or_else(rayon::current_num_threads),
        files,
        verdict: outcome.verdict(),
        checks: outcome.checks,
    };
    let mut bytes = serde_json::to_vec_pretty(&manifest)?;
    bytes.push(b'\n');
    std::fs::write(out.join("manifest.json"), bytes)?;
    Ok(manifest)
}

/// Text digest of a manifest: one row per check (target, measured, tolerance,
/// verdict), warnings for missing or altered files, and the contents of any
/// tail-report CSV. An empty manifest gives an empty report.
pub fn report(manifest_path: &Path) -> Result<(String, Vec<String>)> {
    let text = std::fs::read_to_string(manifest_path)?;
    let value: Value = if text.trim().is_empty() { Value::Object(Map::new()) } else { serde_json::from_str(&text)? };
    if value.as_object().is_some_and(|m| m.is_empty()) {
        return Ok((String::new(), Vec::new()));
    }
    let m: RunManifest = serde_json::from_value(value)?;
    let dir = manifest_path.parent().unwrap_or(Path::new("."));
    let num = |v: Option<f64>| v.map(|x| format!("{x:.10e}")).unwrap_or_else(|| "-".into());
    let mut out = String::new();
    let _ =
        writeln!(out, "experiment {} (config {}), verdict {:?}", m.experiment, &m.config_hash[..12.min(m.config_hash.len())], m.verdict);
    let _ = writeln!(out, "check | anchor | target | measured | tolerance | verdict");
    for c in &m.checks {
        let flag = c.flag.as_deref().map(|f| format!(" {f}")).unwrap_or_default();
        let _ = writeln!(
            out,
            "{} | {} | {} | {} | {} | {:?}{flag}",
            c.name,
            c.anchor,
            num(c.target),
            num(c.measured),
            num(c.tolerance),
            c.verdict
        );
    }
    let mut warnings = Vec::new();
    for f in &m.files {
        match std::fs::read(dir.join(&f.name)) {
            Ok(bytes) => {
                if hex::encode(Sha256::digest(&bytes)) != f.sha256 {
                    warnings.push(format!("{} differs from the manifest hash", f.name));
                } else if f.name.starts_with("tail-") && f.name.ends_with(".csv") {
                    let _ = writeln!(out, "\n{}:\n{}", f.name, String::from_utf8_lossy(&bytes).trim_end());
                }
            }
            Err(_) => warnings.push(format!("{} is missing", f.name)),
        }
    }
    Ok((out, warnings))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn resolution_fills_defaults_and_rejects_bad_names() {
        let c = ExperimentConfig::new("ldp-count").resolved().unwrap();
        assert_eq!(c.params.d, Some(3));
        assert_eq!(c.params.p, Some(1.5));
        let mut bad = ExperimentConfig::new("ldp-count");
        bad.params.n_paths = Some(3);
        assert!(matches!(bad.resolved(), Err(Error::Config(_))));
        let err = ExperimentConfig::new("nope").resolved().unwrap_err().to_string();
        assert!(err.contains("identity-suite") && err.contains("maxcount-table"));
    }

    #[test]
    fn range_violations_name_the_constraint() {
        let mut c = ExperimentConfig::new("potential-suite");
        c.params.d = Some(3);
        c.params.p = Some(1.0);
        let err = c.resolved().unwrap_err().to_string();
        assert!(err.contains("d/2 < p < d"), "{err}");
    }

    #[test]
    fn hash_ignores_order_defaults_and_output() {
        let a = ExperimentConfig::from_json(r#"{"schema":1,"experiment":"ldp-count","seed":3,"params":{"gamma":1.0,"d":3}}"#).unwrap();
        let b = ExperimentConfig::from_json(r#"{"params":{"d":3,"gamma":1.0},"seed":3,"out":"x","experiment":"ldp-count","schema":1}"#)
            .unwrap();
        let c = ExperimentConfig::from_json(r#"{"schema":1,"experiment":"ldp-count","seed":3}"#).unwrap();
        let d = ExperimentConfig::from_json(r#"{"schema":1,"experiment":"ldp-count","seed":4}"#).unwrap();
        assert_eq!(a.hash().unwrap(), b.hash().unwrap());
        assert_eq!(a.hash().unwrap(), c.hash().unwrap());
        assert_ne!(a.hash().unwrap(), d.hash().unwrap());
    }

    #[test]
    fn malformed_config_reports_position() {
        let err =
            ExperimentConfig::from_json("{\n \"schema\": 1,\n \"experiment\": \"constants\",\n \"bogus\": 2\n}").unwrap_err().to_string();
        assert!(err.contains("line 4"), "{err}");
        assert!(ExperimentConfig::from_json(r#"{"schema":2,"experiment":"constants"}"#).unwrap().resolved().is_err());
    }

    #[test]
    fn empty_manifest_gives_empty_report() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("manifest.json");
        std::fs::write(&path, "{}").unwrap();
        assert_eq!(report(&path).unwrap(), (String::new(), Vec::new()));
    }

    #[test]
    fn run_writes_manifest_and_report() {
        let dir = tempfile::tempdir().unwrap();
        let mut c = ExperimentConfig::new("ldp-count");
        c.out = Some(dir.path().to_path_buf());
        let m = run(&c, Some(1)).unwrap();
        assert_eq!(m.verdict, Verdict::Pass);
        assert!(m.files.iter().all(|f| dir.path().join(&f.name).exists()));
        let (text, warnings) = report(&dir.path().join("manifest.json")).unwrap();
        assert!(warnings.is_empty());
        assert!(text.contains("eps,scale,normalized,target,gap"));
        std::fs::remove_file(dir.path().join(&m.files[0].name)).unwrap();
        let (_, warnings) = report(&dir.path().join("manifest.json")).unwrap();
        assert_eq!(warnings.len(), 1);
    }
}
