//! TOML run configuration.
//!
//! One file drives every subcommand: `[run]` defines the ensemble (and the
//! ring/seed defaults the other sections inherit), `[[histogram]]` adds
//! observable distributions, and the optional `[threshold]`, `[maxsep]`,
//! `[verify]` sections parameterize those subcommands. All keys are
//! kebab-case; unknown keys are rejected so typos fail loudly.

use std::path::Path;

use serde::Deserialize;
use xxring::{
    ChainModel, DisorderSpec, EnsembleConfig, HistogramSpec, OnsetPredicate, SeparationFilter,
    ThresholdScanConfig,
};

use crate::{Failure, RunArgs};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct FileConfig {
    pub run: RunSection,
    #[serde(default)]
    pub histogram: Vec<HistogramSpec>,
    #[serde(default)]
    pub threshold: Option<ThresholdSection>,
    #[serde(default)]
    pub maxsep: Option<MaxsepSection>,
    #[serde(default)]
    pub verify: Option<VerifySection>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct RunSection {
    pub model: ChainModel,
    pub length: usize,
    pub disorder: DisorderSpec,
    pub realizations: u64,
    pub master_seed: u64,
    #[serde(default)]
    pub first_realization: u64,
    #[serde(default)]
    pub max_separation: Option<usize>,
    /// Pairs admitted into the filtered onset statistics.
    #[serde(default)]
    pub filter: SeparationFilter,
    /// 0 = one worker per core. Overridden by XXRING_WORKERS and --workers.
    #[serde(default)]
    pub workers: Option<usize>,
    /// Permit |c^xx| >= |c^zz| bookkeeping violations without failing the
    /// run. At strong disorder the many-body gap collapses below double
    /// precision and the resolved multiplet member can legitimately carry
    /// triplet weight; leave this off unless the run probes that regime.
    #[serde(default)]
    pub allow_order_violations: bool,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct ThresholdSection {
    /// Probed weakest-to-strongest: ascending D for power-law, descending
    /// J_min for box.
    pub grid: Vec<f64>,
    pub predicate: OnsetPredicate,
    /// Scan far pairs only (ring distance > L/6) for both predicates at
    /// once, overriding `predicate` and any separation cap.
    #[serde(default)]
    pub far_pairs: bool,
    /// Target bracket width for bisection refinement; omit for grid-only.
    #[serde(default)]
    pub resolution: Option<f64>,
    #[serde(default)]
    pub realizations_per_point: Option<u64>,
    #[serde(default)]
    pub master_seed: Option<u64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct MaxsepSection {
    pub strengths: Vec<f64>,
    #[serde(default)]
    pub realizations: Option<u64>,
    #[serde(default)]
    pub master_seed: Option<u64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct VerifySection {
    #[serde(default = "default_verify_lengths")]
    pub lengths: Vec<usize>,
    #[serde(default = "default_verify_disorders")]
    pub disorders: Vec<f64>,
    #[serde(default = "default_seeds_per_combo")]
    pub seeds_per_combo: u32,
    #[serde(default)]
    pub master_seed: Option<u64>,
}

fn default_verify_lengths() -> Vec<usize> {
    vec![8, 10, 12]
}

fn default_verify_disorders() -> Vec<f64> {
    vec![0.1, 1.0, 5.0]
}

fn default_seeds_per_combo() -> u32 {
    20
}

impl Default for VerifySection {
    fn default() -> Self {
        VerifySection {
            lengths: default_verify_lengths(),
            disorders: default_verify_disorders(),
            seeds_per_combo: default_seeds_per_combo(),
            master_seed: None,
        }
    }
}

pub fn load(path: &Path) -> Result<FileConfig, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?;
    // toml errors carry line/column spans, so the raw Display is already
    // the diagnostic we want.
    toml::from_str(&text).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))
}

/// Worker precedence: --workers flag, then XXRING_WORKERS, then the config.
pub fn resolve_workers(flag: Option<usize>, from_config: Option<usize>) -> Result<usize, Failure> {
    if let Some(n) = flag {
        return Ok(n);
    }
    match std::env::var("XXRING_WORKERS") {
        Ok(s) => s.trim().parse().map_err(|_| {
            Failure::Config(format!(
                "XXRING_WORKERS must be a non-negative integer, got {s:?}"
            ))
        }),
        Err(std::env::VarError::NotPresent) => Ok(from_config.unwrap_or(0)),
        Err(e) => Err(Failure::Config(format!("XXRING_WORKERS: {e}"))),
    }
}

impl FileConfig {
    /// The `[run]` ensemble with command-line overrides applied.
    pub fn ensemble(&self, args: &RunArgs) -> Result<EnsembleConfig, Failure> {
        let r = &self.run;
        let cfg = EnsembleConfig {
            model: r.model,
            length: r.length,
            disorder: r.disorder,
            realizations: r.realizations,
            master_seed: r.master_seed,
            first_realization: r.first_realization,
            max_separation: args.max_separation.or(r.max_separation),
            separation_filter: r.filter.clone(),
            histograms: self.histogram.clone(),
            worker_count: resolve_workers(args.workers, r.workers)?,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn threshold_scan(&self, args: &RunArgs) -> Result<ThresholdScanConfig, Failure> {
        let t = self
            .threshold
            .as_ref()
            .ok_or_else(|| Failure::Config("threshold needs a [threshold] section".into()))?;
        let r = &self.run;
        let cfg = ThresholdScanConfig {
            model: r.model,
            length: r.length,
            kind: r.disorder.kind,
            grid: t.grid.clone(),
            realizations_per_point: t.realizations_per_point.unwrap_or(r.realizations),
            master_seed: t.master_seed.unwrap_or(r.master_seed),
            max_separation: args.max_separation.or(r.max_separation),
            filter: r.filter.clone(),
            predicate: t.predicate,
            resolution: t.resolution,
            worker_count: resolve_workers(args.workers, r.workers)?,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}
