use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use elecmarket::output::{write_atomic, write_csv, CsvRow};
use elecmarket::scenario::Scenario;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::Cli;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SeedSource {
    Flag,
    Config,
    Generated,
}

#[derive(Debug, Serialize)]
struct OutputEntry {
    path: String,
    sha256: String,
}

#[derive(Debug, Serialize)]
struct Manifest<'a> {
    command: &'a str,
    version: &'a str,
    seed: u64,
    seed_source: SeedSource,
    config: Option<String>,
    config_sha256: Option<&'a str>,
    overrides: &'a [String],
    workers: Option<usize>,
    outputs: Vec<OutputEntry>,
}

/// Shared state of one invocation: where results go, which seed was used and what was written.
pub struct RunContext {
    pub command: &'static str,
    pub out: PathBuf,
    pub config: Option<PathBuf>,
    pub config_sha256: Option<String>,
    pub overrides: Vec<String>,
    pub workers: Option<usize>,
    seed_flag: Option<u64>,
    seed: Option<(u64, SeedSource)>,
    outputs: Vec<PathBuf>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    format!("{:x}", Sha256::digest(bytes))
}

impl RunContext {
    pub fn new(cli: &Cli, command: &'static str) -> anyhow::Result<Self> {
        let config_sha256 = match &cli.config {
            Some(p) => {
                let bytes = fs::read(p).with_context(|| format!("reading {}", p.display()))?;
                Some(sha256_hex(&bytes))
            }
            None => None,
        };
        fs::create_dir_all(&cli.out).with_context(|| format!("creating {}", cli.out.display()))?;
        Ok(RunContext {
            command,
            out: cli.out.clone(),
            config: cli.config.clone(),
            config_sha256,
            overrides: cli.overrides.clone(),
            workers: cli.workers,
            seed_flag: cli.seed,
            seed: None,
            outputs: Vec::new(),
        })
    }

    pub fn config_path(&self) -> anyhow::Result<&Path> {
        match &self.config {
            Some(p) => Ok(p),
            None => bail!("`{}` needs --config", self.command),
        }
    }

    pub fn load_scenario(&self) -> anyhow::Result<Scenario> {
        let path = self.config_path()?;
        Scenario::load(path, &self.overrides).with_context(|| format!("loading scenario {}", path.display()))
    }

    /// The run seed: `--seed`, else the scenario's, else a fresh random one. Fixed on first use.
    pub fn seed(&mut self, scenario: Option<&Scenario>) -> u64 {
        if let Some((s, _)) = self.seed {
            return s;
        }
        let chosen = match (self.seed_flag, scenario.and_then(|s| s.config.seed)) {
            (Some(s), _) => (s, SeedSource::Flag),
            (None, Some(s)) => (s, SeedSource::Config),
            (None, None) => (rand::random(), SeedSource::Generated),
        };
        log::info!("seed {} ({:?})", chosen.0, chosen.1);
        self.seed = Some(chosen);
        chosen.0
    }

    pub fn path(&self, name: impl AsRef<Path>) -> PathBuf {
        self.out.join(name)
    }

    /// Note a file written outside the helpers below.
    pub fn record(&mut self, path: PathBuf) {
        if !self.outputs.contains(&path) {
            self.outputs.push(path);
        }
    }

    pub fn write_csv<T: CsvRow>(&mut self, name: impl AsRef<Path>, rows: &[T]) -> anyhow::Result<()> {
        let path = self.path(name);
        write_csv(&path, rows).with_context(|| format!("writing {}", path.display()))?;
        self.record(path);
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, name: impl AsRef<Path>, value: &T) -> anyhow::Result<()> {
        let path = self.path(name);
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        write_atomic(&path, |w| {
            w.write_all(text.as_bytes())
                .map_err(|e| elecmarket::Error::io(&path, e))
        })?;
        self.record(path);
        Ok(())
    }

    pub fn write_manifest(&mut self) -> anyhow::Result<()> {
        let seed = self.seed(None);
        let source = self.seed.map(|(_, s)| s).unwrap_or(SeedSource::Generated);
        let mut outputs = Vec::with_capacity(self.outputs.len());
        for p in &self.outputs {
            let bytes = fs::read(p).with_context(|| format!("reading back {}", p.display()))?;
            let rel = p.strip_prefix(&self.out).unwrap_or(p);
            outputs.push(OutputEntry {
                path: rel.to_string_lossy().replace('\\', "/"),
                sha256: sha256_hex(&bytes),
            });
        }
        outputs.sort_by(|a, b| a.path.cmp(&b.path));
        let manifest = Manifest {
            command: self.command,
            version: env!("CARGO_PKG_VERSION"),
            seed,
            seed_source: source,
            config: self.config.as_ref().map(|p| p.display().to_string()),
            config_sha256: self.config_sha256.as_deref(),
            overrides: &self.overrides,
            workers: self.workers,
            outputs,
        };
        let path = self.path("manifest.json");
        let mut text = serde_json::to_string_pretty(&manifest)?;
        text.push('\n');
        write_atomic(&path, |w| {
            w.write_all(text.as_bytes())
                .map_err(|e| elecmarket::Error::io(&path, e))
        })?;
        Ok(())
    }
}
