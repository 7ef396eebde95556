//! Reproducible experiment runner: JSON config in, canonical CSV tables and
//! an atomically written manifest out. Results depend only on the resolved
//! config (including the master seed), never on the worker count: work is
//! dispatched by sample index, each sample derives its own seed context
//! through the lineage mechanism, and outputs are assembled in index order.

pub mod csvio;
mod experiments;

use crate::ensemble::{Beta, DeformationSpec, EnsembleSpec, EntryDist, ProfileSpec};
use crate::ensemble::seed::SeedContext;
use crate::error::HarnessError;
use crate::stats_lab::Histogram;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::PathBuf;

pub use csvio::{CsvFile, Field, OutputDir, OutputRecord};

/// Current config schema version.
pub const SCHEMA_VERSION: u32 = 1;

/// Seed lineage tags, one per experiment family.
pub mod lineage {
    pub const TRAJECTORY: u64 = 1;
    pub const TAILS: u64 = 2;
    pub const DECORRELATE: u64 = 3;
    pub const FLOW: u64 = 4;
    pub const LFL: u64 = 5;
    pub const DYSON: u64 = 6;
    pub const ORACLE: u64 = 7;
}

/// Ensemble description as it appears in config files (the master seed lives
/// at the top level of the config).
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct EnsembleParams {
    pub beta: Beta,
    pub entry_dist: EntryDist,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub profile: Option<ProfileSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub deformation: Option<DeformationSpec>,
}

impl EnsembleParams {
    pub fn gaussian(beta: Beta) -> Self {
        EnsembleParams { beta, entry_dist: EntryDist::Gaussian, profile: None, deformation: None }
    }

    pub fn to_spec(&self, master_seed: u64) -> EnsembleSpec {
        EnsembleSpec {
            beta: self.beta,
            entry_dist: self.entry_dist,
            profile: self.profile,
            deformation: self.deformation,
            master_seed,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FlowMode {
    /// Coupled minor pair under the shared-array OU flow.
    Coupled,
    /// Distributional comparison of matrix-mode vs eigenvalue-mode evolution.
    DbmCompare,
}

impl Default for FlowMode {
    fn default() -> Self {
        FlowMode::Coupled
    }
}

fn default_refresh() -> usize {
    crate::minor_engine::DEFAULT_REFRESH_EVERY
}

/// Experiment kind plus its size/sample parameters.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ExperimentKind {
    Trajectories {
        n_start: usize,
        n_end: usize,
        trajectories: usize,
        #[serde(default = "default_refresh")]
        refresh_every: usize,
    },
    Tails {
        n: usize,
        samples: usize,
        levels_right: Vec<f64>,
        levels_left: Vec<f64>,
    },
    Decorrelate {
        n1: usize,
        gaps: Vec<usize>,
        x1: f64,
        x2: f64,
        pairs: usize,
    },
    Flow {
        #[serde(default)]
        mode: FlowMode,
        n1: usize,
        n2: usize,
        t_end: f64,
        dt: f64,
        checkpoints: Vec<f64>,
        i_max: usize,
        runs: usize,
    },
    Lfl {
        n_start: usize,
        n_end: usize,
        trajectories: usize,
    },
    Dyson {
        e_min: f64,
        e_max: f64,
        grid_points: usize,
        eta: f64,
        mc_size: usize,
        mc_samples: usize,
    },
    OracleCheck {
        sizes: Vec<usize>,
        instances: usize,
    },
}

impl ExperimentKind {
    pub fn name(&self) -> &'static str {
        match self {
            ExperimentKind::Trajectories { .. } => "trajectories",
            ExperimentKind::Tails { .. } => "tails",
            ExperimentKind::Decorrelate { .. } => "decorrelate",
            ExperimentKind::Flow { .. } => "flow",
            ExperimentKind::Lfl { .. } => "lfl",
            ExperimentKind::Dyson { .. } => "dyson",
            ExperimentKind::OracleCheck { .. } => "oracle-check",
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    #[serde(flatten)]
    pub kind: ExperimentKind,
    pub ensemble: EnsembleParams,
    pub seed: u64,
    /// 0 means "unset": fall back to `MINORLAB_WORKERS`, then all cores.
    #[serde(default)]
    pub workers: usize,
    pub out_dir: PathBuf,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, HarnessError> {
        let cfg: ExperimentConfig =
            serde_json::from_str(text).map_err(|e| HarnessError::Config(format!("config parse: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn spec(&self) -> EnsembleSpec {
        self.ensemble.to_spec(self.seed)
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(HarnessError::Config(format!(
                "schema_version: expected {SCHEMA_VERSION}, got {}",
                self.schema_version
            )));
        }
        self.spec()
            .validate()
            .map_err(|e| HarnessError::Config(format!("ensemble: {e}")))?;
        let bad = |field: &str, msg: String| Err(HarnessError::Config(format!("{field}: {msg}")));
        match &self.kind {
            ExperimentKind::Trajectories { n_start, n_end, trajectories, refresh_every } => {
                if *n_start < 2 {
                    return bad("n_start", format!("must be >= 2, got {n_start}"));
                }
                if n_end < n_start {
                    return bad("n_end", format!("must be >= n_start, got {n_end} < {n_start}"));
                }
                if *trajectories == 0 {
                    return bad("trajectories", "must be >= 1".into());
                }
                if *refresh_every == 0 {
                    return bad("refresh_every", "must be >= 1".into());
                }
            }
            ExperimentKind::Tails { n, samples, levels_right, levels_left } => {
                if *n < 8 {
                    return bad("n", format!("must be >= 8, got {n}"));
                }
                if *samples < 1000 {
                    return bad("samples", format!("must be >= 1000, got {samples}"));
                }
                for (name, levels) in [("levels_right", levels_right), ("levels_left", levels_left)] {
                    if levels.is_empty() {
                        return bad(name, "must be nonempty".into());
                    }
                    if levels[0] < 1.0 {
                        return bad(name, "levels start at 1.0 (proposition range)".into());
                    }
                    let cap = 3.0
                        * ((*n as f64).ln()).powf(if name == "levels_right" { 2.0 / 3.0 } else { 1.0 / 3.0 });
                    if *levels.last().unwrap() > cap {
                        return bad(name, format!("levels cap at K (log N)^p = {cap:.3}"));
                    }
                    if levels.windows(2).any(|w| w[1] <= w[0]) {
                        return bad(name, "levels must be strictly increasing".into());
                    }
                }
            }
            ExperimentKind::Decorrelate { n1, gaps, x1, x2, pairs } => {
                if *n1 < 8 {
                    return bad("n1", format!("must be >= 8, got {n1}"));
                }
                if gaps.is_empty() || gaps.iter().any(|&g| g == 0) {
                    return bad("gaps", "must be nonempty, positive".into());
                }
                if !(*x1 > 0.0 && *x2 > 0.0) {
                    return bad("x1/x2", "levels must be positive".into());
                }
                if *pairs == 0 {
                    return bad("pairs", "must be >= 1".into());
                }
            }
            ExperimentKind::Flow { mode, n1, n2, t_end, dt, checkpoints, i_max, runs } => {
                if *n1 == 0 {
                    return bad("n1", "must be >= 1".into());
                }
                if matches!(mode, FlowMode::Coupled) {
                    if n2 < n1 {
                        return bad("n2", format!("must be >= n1, got {n2} < {n1}"));
                    }
                    if *i_max == 0 || i_max > n1 {
                        return bad("i_max", format!("must lie in 1..={n1}"));
                    }
                    if checkpoints.is_empty() {
                        return bad("checkpoints", "must be nonempty".into());
                    }
                    if checkpoints.windows(2).any(|w| w[1] < w[0]) {
                        return bad("checkpoints", "must be sorted".into());
                    }
                    if *checkpoints.last().unwrap() > *t_end {
                        return bad("checkpoints", "must not exceed t_end".into());
                    }
                }
                if !(*dt > 0.0) || !(*t_end >= 0.0) {
                    return bad("dt/t_end", "need dt > 0 and t_end >= 0".into());
                }
                if *runs == 0 {
                    return bad("runs", "must be >= 1".into());
                }
            }
            ExperimentKind::Lfl { n_start, n_end, trajectories } => {
                if *n_start < 2 || n_end < n_start {
                    return bad("n_start/n_end", format!("need 2 <= n_start <= n_end, got {n_start}..{n_end}"));
                }
                if *trajectories == 0 {
                    return bad("trajectories", "must be >= 1".into());
                }
            }
            ExperimentKind::Dyson { e_min, e_max, grid_points, eta, mc_size, mc_samples } => {
                if !(e_min < e_max) {
                    return bad("e_min/e_max", "need e_min < e_max".into());
                }
                if *grid_points < 2 {
                    return bad("grid_points", "need >= 2".into());
                }
                if !(*eta > 0.0) {
                    return bad("eta", "must be positive".into());
                }
                if *mc_samples > 0 && *mc_size < 8 {
                    return bad("mc_size", "must be >= 8 when mc_samples > 0".into());
                }
            }
            ExperimentKind::OracleCheck { sizes, instances } => {
                if sizes.is_empty() || sizes.iter().any(|&s| s < 2) {
                    return bad("sizes", "must be nonempty with entries >= 2".into());
                }
                if *instances == 0 {
                    return bad("instances", "must be >= 1".into());
                }
            }
        }
        Ok(())
    }
}

/// Associative per-cell partial statistics, mergeable across workers.
#[derive(Debug, Clone, Default, Serialize, Deserialize, PartialEq)]
pub struct AggregateStats {
    pub cells: BTreeMap<String, CellStats>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct CellStats {
    pub count: u64,
    pub sum: f64,
    pub sum_sq: f64,
    pub min: f64,
    pub max: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hist: Option<Histogram>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub joint: BTreeMap<String, u64>,
}

impl Default for CellStats {
    fn default() -> Self {
        CellStats {
            count: 0,
            sum: 0.0,
            sum_sq: 0.0,
            min: f64::INFINITY,
            max: f64::NEG_INFINITY,
            hist: None,
            joint: BTreeMap::new(),
        }
    }
}

impl CellStats {
    pub fn record(&mut self, v: f64) {
        self.count += 1;
        self.sum += v;
        self.sum_sq += v * v;
        self.min = self.min.min(v);
        self.max = self.max.max(v);
        if let Some(h) = &mut self.hist {
            h.record(v);
        }
    }

    pub fn record_event(&mut self, key: &str) {
        *self.joint.entry(key.to_string()).or_insert(0) += 1;
    }

    pub fn mean(&self) -> f64 {
        self.sum / self.count as f64
    }

    pub fn variance(&self) -> f64 {
        let m = self.mean();
        self.sum_sq / self.count as f64 - m * m
    }

    fn merge(&mut self, other: &CellStats) -> Result<(), HarnessError> {
        match (&mut self.hist, &other.hist) {
            (Some(a), Some(b)) => {
                if !a.same_shape(b) {
                    return Err(HarnessError::Config("histogram schema mismatch in merge".into()));
                }
                a.merge(b);
            }
            (None, None) => {}
            // an untouched cell adopts the histogram schema of the other side
            (slot @ None, Some(b)) if self.count == 0 => *slot = Some(b.clone()),
            (Some(_), None) if other.count == 0 => {}
            _ => return Err(HarnessError::Config("histogram presence mismatch in merge".into())),
        }
        self.count += other.count;
        self.sum += other.sum;
        self.sum_sq += other.sum_sq;
        self.min = self.min.min(other.min);
        self.max = self.max.max(other.max);
        for (k, v) in &other.joint {
            *self.joint.entry(k.clone()).or_insert(0) += v;
        }
        Ok(())
    }
}

impl AggregateStats {
    pub fn cell(&mut self, key: &str) -> &mut CellStats {
        self.cells.entry(key.to_string()).or_default()
    }

    pub fn merge_from(&mut self, other: &AggregateStats) -> Result<(), HarnessError> {
        for (k, v) in &other.cells {
            self.cells.entry(k.clone()).or_default().merge(v)?;
        }
        Ok(())
    }
}

/// Associative, commutative merge of partial aggregates.
pub fn merge_stats(parts: &[AggregateStats]) -> Result<AggregateStats, HarnessError> {
    let mut out = AggregateStats::default();
    for p in parts {
        out.merge_from(p)?;
    }
    Ok(out)
}

/// Resolve the worker count: explicit setting, then `MINORLAB_WORKERS`,
/// then all available cores.
pub fn effective_workers(configured: usize) -> usize {
    if configured > 0 {
        return configured;
    }
    if let Ok(v) = std::env::var("MINORLAB_WORKERS") {
        if let Ok(n) = v.trim().parse::<usize>() {
            if n > 0 {
                return n;
            }
        }
    }
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}

/// Run `count` independent cells on a dedicated pool, preserving index
/// order in the result (this is what makes outputs worker-count invariant).
pub fn run_indexed<T, F>(workers: usize, count: usize, f: F) -> Result<Vec<T>, HarnessError>
where
    T: Send,
    F: Fn(usize) -> Result<T, HarnessError> + Sync,
{
    use rayon::prelude::*;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| HarnessError::Config(format!("thread pool: {e}")))?;
    pool.install(|| (0..count).into_par_iter().map(|i| f(i)).collect())
}

/// Derive the per-cell ensemble spec and seed context for cell `index` of a
/// given lineage family.
pub fn descend_spec(spec: &EnsembleSpec, lineage_tag: u64, index: u64) -> (EnsembleSpec, SeedContext) {
    let child = SeedContext::new(spec.master_seed).descend(lineage_tag, index);
    let mut s = spec.clone();
    s.master_seed = child.master_seed();
    (s, child)
}

pub use experiments::{run_edge_trajectory, run_experiment, sample_top_scaled, RunSummary};
