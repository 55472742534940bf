//! Config-driven sweeps with deterministic CSV and JSON output.
//!
//! A [`RunConfig`] names an experiment kind and a parameter grid. Every grid
//! point is estimated with the same master seed, so neighbouring points use
//! common random numbers and the output never depends on the worker count.
//! LXE-type kinds write one row per grid point with the columns of
//! [`LxeRow`]; `cft_tables` writes [`CftRow`]s. A `.meta.json` sidecar
//! echoes the config, the code version, the conventions in force and any
//! fits. Wall time is not recorded, which keeps re-runs byte-identical.

pub mod analysis;

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cft::{self, CftError, FitModel, SimPoint};
use crate::circuit::{
    derive_seed, leak_check, sample_scrambler_images, stream_rng, Boundary, EnsembleParams,
    InitialState, Model, Stream, ZIZXX_CONVENTION,
};
use crate::lxe::{estimate_lxe, LxeError, LxeEstimate, LxeRequest, Scope};
use crate::percolation::{crossing_probability_mc, PercolationError};

pub use analysis::{collapse_residual, find_crossings, Crossing, CurvePoint, Curves};

/// Estimator definition recorded in every sidecar.
pub const LXE_CONVENTION: &str = "chi = probability that a record sampled from the rho circuit \
replays compatibly on the sigma circuit; out-of-scope measurements dephase in the replay; \
the sigma circuit is noiseless";
/// Lattice used by the percolation engine.
pub const PERCOLATION_CONVENTION: &str = "site (t,i) = qubit i after t steps; ZZ(i,i+1) at step t \
occupies bond (t,i)-(t,i+1); X(i) absent at step t occupies bond (t,i)-(t+1,i); the r central \
sites of row 0 are joined; success = seed cluster reaches row T";
/// Noise channel used whenever `noise_rate > 0`.
pub const NOISE_CONVENTION: &str = "after every measurement layer each qubit independently \
receives a bit-flip slot w.p. noise_rate; a slot applies X w.p. 1/2 and is unrecorded";
/// Scrambler used by the leak estimate and `scramble_depth`.
pub const SCRAMBLER_CONVENTION: &str = "open brickwork of uniformly random two-qubit Cliffords \
commuting with XX; layer s acts on pairs (i,i+1) with i = s mod 2, s mod 2 + 2, ...";

#[derive(Debug, thiserror::Error)]
pub enum ExperimentError {
    #[error("config line {line}, column {column}: {message}")]
    Config {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error(transparent)]
    Lxe(#[from] LxeError),
    #[error(transparent)]
    Percolation(#[from] PercolationError),
    #[error(transparent)]
    Cft(#[from] CftError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error("thread pool: {0}")]
    Pool(String),
    #[error("{0}")]
    Analysis(String),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> ExperimentError + '_ {
    move |source| ExperimentError::Io {
        path: path.to_path_buf(),
        source,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    LxeSweep,
    CriticalAspectObc,
    CriticalAspectPbc,
    PhaseDiagram,
    NoiseSweep,
    LeakProbability,
    CftTables,
}

/// Simulator used for LXE rows. `percolation` is valid for noiseless,
/// unscrambled ZzX circuits with GHZ± states, where it is exact.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Engine {
    #[default]
    Stabilizer,
    Percolation,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CftTable {
    Obc,
    Pbc,
    SmallR,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CftSpec {
    pub table: CftTable,
    #[serde(default = "one_f64")]
    pub time_scale: f64,
    #[serde(default = "one_f64")]
    pub amplitude: f64,
}

/// Swept fields. Lists are expanded as a Cartesian product in the order
/// `L, T|aspect, boundary, r, p, q, r_xx, noise_rate`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    #[serde(default = "default_model")]
    pub model: Model,
    #[serde(rename = "L", default)]
    pub sizes: Vec<usize>,
    /// Explicit depths; `T = L` when neither this nor `aspect` is given.
    #[serde(rename = "T", default, skip_serializing_if = "Option::is_none")]
    pub steps: Option<Vec<usize>>,
    /// Depths as `T = round(aspect · L)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub aspect: Option<Vec<f64>>,
    #[serde(default = "default_p")]
    pub p: Vec<f64>,
    #[serde(default = "zero_list")]
    pub q: Vec<f64>,
    #[serde(default = "zero_list")]
    pub r_xx: Vec<f64>,
    #[serde(default = "zero_list")]
    pub noise_rate: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r_ghz: Option<Vec<usize>>,
    /// Block widths as `r = 2·round(r_over_l · L / 2)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r_over_l: Option<Vec<f64>>,
    /// Defaults to periodic for ZIZ–XX and open otherwise.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub boundary: Option<Vec<Boundary>>,
    #[serde(default)]
    pub scramble_depth: usize,
    /// Scramble to depth `L` instead of `scramble_depth`.
    #[serde(default)]
    pub scramble_depth_is_l: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub experiment: ExperimentKind,
    #[serde(default)]
    pub engine: Engine,
    pub grid: GridSpec,
    #[serde(default = "default_pair")]
    pub state_pair: (InitialState, InitialState),
    #[serde(default = "default_scope")]
    pub scope: Scope,
    /// Circuits per point; samples per size for `leak_probability`.
    #[serde(default)]
    pub n_circuits: u64,
    /// Noise trajectories per circuit; ignored at points without noise.
    #[serde(default = "four_u64")]
    pub records_per_circuit: u64,
    pub master_seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_path: Option<PathBuf>,
    /// Thread count; not echoed, since it cannot change the output.
    #[serde(default, skip_serializing)]
    pub workers: Option<usize>,
    /// Required by `cft_tables`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cft: Option<CftSpec>,
    /// Time scale used by the periodic fits of `critical_aspect_pbc`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub time_scale: Option<f64>,
}

fn default_model() -> Model {
    Model::ZzX
}
fn default_p() -> Vec<f64> {
    vec![0.5]
}
fn zero_list() -> Vec<f64> {
    vec![0.0]
}
fn default_pair() -> (InitialState, InitialState) {
    (InitialState::GhzPlus, InitialState::GhzMinus)
}
fn default_scope() -> Scope {
    Scope::All
}
fn four_u64() -> u64 {
    4
}
fn one_f64() -> f64 {
    1.0
}

/// Line and column of the first occurrence of `"key"` in the source.
fn locate(source: &str, key: &str) -> (usize, usize) {
    let needle = format!("\"{key}\"");
    for (i, line) in source.lines().enumerate() {
        if let Some(col) = line.find(&needle) {
            return (i + 1, col + 1);
        }
    }
    (1, 1)
}

impl RunConfig {
    /// Parses and validates; every error carries a source position.
    pub fn parse(source: &str) -> Result<Self, ExperimentError> {
        let config: RunConfig =
            serde_json::from_str(source).map_err(|e| ExperimentError::Config {
                line: e.line(),
                column: e.column(),
                message: e.to_string(),
            })?;
        config.validate().map_err(|(key, message)| {
            let (line, column) = locate(source, key);
            ExperimentError::Config {
                line,
                column,
                message,
            }
        })?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self, ExperimentError> {
        Self::parse(&fs::read_to_string(path).map_err(io_err(path))?)
    }

    /// Semantic checks; the error names the offending key.
    pub fn validate(&self) -> Result<(), (&'static str, String)> {
        let g = &self.grid;
        let nonempty = |key: &'static str, len: usize| {
            if len == 0 {
                Err((key, format!("grid field {key} must not be empty")))
            } else {
                Ok(())
            }
        };
        nonempty("p", g.p.len())?;
        nonempty("q", g.q.len())?;
        nonempty("r_xx", g.r_xx.len())?;
        nonempty("noise_rate", g.noise_rate.len())?;
        if let Some(b) = &g.boundary {
            nonempty("boundary", b.len())?;
        }
        if self.experiment == ExperimentKind::CftTables {
            let Some(spec) = &self.cft else {
                return Err(("experiment", "cft_tables needs a \"cft\" block".into()));
            };
            if !(spec.time_scale > 0.0 && spec.amplitude >= 0.0) {
                return Err((
                    "cft",
                    "time_scale must be positive and amplitude non-negative".into(),
                ));
            }
            match &g.aspect {
                Some(a) if !a.is_empty() && a.iter().all(|&x| x > 0.0) => {}
                _ => return Err(("aspect", "cft_tables needs positive aspect ratios".into())),
            }
            if let Some(r) = &g.r_over_l {
                if r.is_empty() || r.iter().any(|&x| !(x > 0.0 && x <= 1.0)) {
                    return Err(("r_over_l", "r_over_l values must lie in (0, 1]".into()));
                }
            }
            return Ok(());
        }
        nonempty("L", g.sizes.len())?;
        if g.steps.is_some() && g.aspect.is_some() {
            return Err(("aspect", "give either T or aspect, not both".into()));
        }
        if let Some(t) = &g.steps {
            nonempty("T", t.len())?;
        }
        if let Some(a) = &g.aspect {
            nonempty("aspect", a.len())?;
            if a.iter().any(|&x| x.is_nan() || x <= 0.0) {
                return Err(("aspect", "aspect ratios must be positive".into()));
            }
        }
        if g.r_ghz.is_some() && g.r_over_l.is_some() {
            return Err(("r_over_l", "give either r_ghz or r_over_l, not both".into()));
        }
        if let Some(r) = &g.r_over_l {
            nonempty("r_over_l", r.len())?;
        }
        if let Some(r) = &g.r_ghz {
            nonempty("r_ghz", r.len())?;
        }
        if self.n_circuits == 0 {
            return Err(("n_circuits", "n_circuits must be at least 1".into()));
        }
        if self.records_per_circuit == 0 {
            return Err((
                "records_per_circuit",
                "records_per_circuit must be at least 1".into(),
            ));
        }
        if self.workers == Some(0) {
            return Err(("workers", "workers must be at least 1".into()));
        }
        match self.experiment {
            ExperimentKind::CriticalAspectObc | ExperimentKind::CriticalAspectPbc => {
                if g.model != Model::ZzX {
                    return Err(("model", "critical aspect sweeps use the zzx model".into()));
                }
                if g.aspect.is_none() {
                    return Err(("grid", "critical aspect sweeps need an aspect list".into()));
                }
                if g.p.iter().any(|&p| p != 0.5) {
                    return Err(("p", "critical aspect sweeps run at p = 0.5".into()));
                }
                let want = if self.experiment == ExperimentKind::CriticalAspectObc {
                    Boundary::Open
                } else {
                    Boundary::Periodic
                };
                if self.boundaries().iter().any(|&b| b != want) {
                    return Err((
                        "boundary",
                        format!("this kind needs boundary {}", want.as_str()),
                    ));
                }
            }
            ExperimentKind::LeakProbability if g.sizes.iter().any(|&l| l < 2) => {
                return Err(("L", "leak estimates need L >= 2".into()));
            }
            _ => {}
        }
        if self.engine == Engine::Percolation {
            let ok = g.model == Model::ZzX
                && g.noise_rate.iter().all(|&x| x == 0.0)
                && g.scramble_depth == 0
                && !g.scramble_depth_is_l
                && matches!(
                    self.state_pair,
                    (InitialState::GhzPlus, InitialState::GhzMinus)
                        | (InitialState::GhzMinus, InitialState::GhzPlus)
                );
            if !ok {
                return Err((
                    "engine",
                    "the percolation engine needs noiseless unscrambled zzx circuits with GHZ± states".into(),
                ));
            }
        }
        for params in self.points() {
            params
                .validate()
                .map_err(|e| ("grid", format!("grid point L = {}: {e}", params.n_sites)))?;
        }
        Ok(())
    }

    fn boundaries(&self) -> Vec<Boundary> {
        self.grid.boundary.clone().unwrap_or_else(|| {
            vec![if self.grid.model == Model::ZizXx {
                Boundary::Periodic
            } else {
                Boundary::Open
            }]
        })
    }

    /// Expanded grid of LXE-type kinds.
    pub fn points(&self) -> Vec<EnsembleParams> {
        let g = &self.grid;
        let mut out = Vec::new();
        for &l in &g.sizes {
            let depths: Vec<usize> = match (&g.steps, &g.aspect) {
                (Some(t), _) => t.clone(),
                (None, Some(a)) => a
                    .iter()
                    .map(|&x| ((x * l as f64).round() as usize).max(1))
                    .collect(),
                (None, None) => vec![l],
            };
            let widths: Vec<Option<usize>> = match (&g.r_ghz, &g.r_over_l) {
                (Some(r), _) => r.iter().map(|&r| Some(r)).collect(),
                (None, Some(f)) => f
                    .iter()
                    .map(|&f| Some((2 * ((f * l as f64 / 2.0).round() as usize)).max(2)))
                    .collect(),
                (None, None) => vec![None],
            };
            for &t in &depths {
                for &boundary in &self.boundaries() {
                    for &r_ghz in &widths {
                        for &p in &g.p {
                            for &q in &g.q {
                                for &r_xx in &g.r_xx {
                                    for &noise_rate in &g.noise_rate {
                                        out.push(EnsembleParams {
                                            model: g.model,
                                            n_sites: l,
                                            n_steps: t,
                                            p,
                                            q,
                                            noise_rate,
                                            r_xx,
                                            boundary,
                                            r_ghz,
                                            scramble_depth: if g.scramble_depth_is_l {
                                                l
                                            } else {
                                                g.scramble_depth
                                            },
                                        });
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
        out
    }
}

/// One LXE (or leak) estimate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LxeRow {
    pub model: String,
    #[serde(rename = "L")]
    pub l: usize,
    #[serde(rename = "T")]
    pub t: usize,
    pub p: f64,
    pub q: f64,
    pub r_xx: f64,
    pub r_ghz: usize,
    pub bc: Boundary,
    pub scope: Scope,
    pub noise_rate: f64,
    pub n: u64,
    pub chi_mean: f64,
    pub chi_stderr: f64,
    pub seed: u64,
}

impl LxeRow {
    fn new(params: &EnsembleParams, scope: Scope, est: LxeEstimate, seed: u64) -> Self {
        Self {
            model: params.model.as_str().to_string(),
            l: params.n_sites,
            t: params.n_steps,
            p: params.p,
            q: params.q,
            r_xx: params.r_xx,
            r_ghz: params.block_width(),
            bc: params.boundary,
            scope,
            noise_rate: params.noise_rate,
            n: est.n_samples,
            chi_mean: est.mean,
            chi_stderr: est.stderr,
            seed,
        }
    }

    pub fn aspect(&self) -> f64 {
        self.t as f64 / self.l as f64
    }
}

/// One row of a critical prediction table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CftRow {
    pub table: CftTable,
    pub aspect: f64,
    pub r_over_l: f64,
    pub time_scale: f64,
    pub amplitude: f64,
    pub chi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Table {
    Lxe(Vec<LxeRow>),
    Cft(Vec<CftRow>),
}

impl Table {
    pub fn len(&self) -> usize {
        match self {
            Table::Lxe(r) => r.len(),
            Table::Cft(r) => r.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Fit of one critical-aspect curve.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurveFit {
    #[serde(rename = "L")]
    pub l: usize,
    pub r_ghz: usize,
    pub time_scale: f64,
    pub amplitude: Option<f64>,
    pub rms: f64,
    pub delta: Option<f64>,
    pub delta_stderr: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Metadata {
    pub code_version: &'static str,
    pub experiment: ExperimentKind,
    pub master_seed: u64,
    pub conventions: Vec<&'static str>,
    pub config: RunConfig,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub fits: Vec<CurveFit>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepResult {
    pub table: Table,
    pub metadata: Metadata,
}

fn conventions(config: &RunConfig) -> Vec<&'static str> {
    let mut out = Vec::new();
    match config.experiment {
        ExperimentKind::CftTables => return out,
        ExperimentKind::LeakProbability => {
            out.push(SCRAMBLER_CONVENTION);
            return out;
        }
        _ => out.push(LXE_CONVENTION),
    }
    if config.engine == Engine::Percolation {
        out.push(PERCOLATION_CONVENTION);
    }
    if config.grid.model == Model::ZizXx {
        out.push(ZIZXX_CONVENTION);
    }
    if config.grid.noise_rate.iter().any(|&x| x > 0.0) {
        out.push(NOISE_CONVENTION);
    }
    if config.grid.scramble_depth > 0 || config.grid.scramble_depth_is_l {
        out.push(SCRAMBLER_CONVENTION);
    }
    out
}

/// Runs the experiment on a pool of `workers` threads (rayon's default when
/// unset). The result does not depend on the pool size.
pub fn run(config: &RunConfig) -> Result<SweepResult, ExperimentError> {
    config
        .validate()
        .map_err(|(key, message)| ExperimentError::Config {
            line: 0,
            column: 0,
            message: format!("{key}: {message}"),
        })?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(w) = config.workers {
        builder = builder.num_threads(w);
    }
    let pool = builder
        .build()
        .map_err(|e| ExperimentError::Pool(e.to_string()))?;
    pool.install(|| run_in_pool(config))
}

fn run_in_pool(config: &RunConfig) -> Result<SweepResult, ExperimentError> {
    let mut fits = Vec::new();
    let table = match config.experiment {
        ExperimentKind::CftTables => Table::Cft(cft_rows(config)?),
        ExperimentKind::LeakProbability => {
            let rows = config
                .grid
                .sizes
                .iter()
                .map(|&l| {
                    let est = estimate_leak_probability(l, config.n_circuits, config.master_seed)?;
                    let mut row = LxeRow::new(
                        &EnsembleParams::zzx(l, l, 0.0),
                        config.scope,
                        est,
                        config.master_seed,
                    );
                    row.model = "leak".into();
                    Ok(row)
                })
                .collect::<Result<Vec<_>, ExperimentError>>()?;
            Table::Lxe(rows)
        }
        _ => {
            let rows = config
                .points()
                .iter()
                .map(|params| {
                    let est = estimate_point(config, params)?;
                    Ok(LxeRow::new(params, config.scope, est, config.master_seed))
                })
                .collect::<Result<Vec<_>, ExperimentError>>()?;
            match config.experiment {
                ExperimentKind::CriticalAspectObc => fits = fit_curves(&rows, None)?,
                ExperimentKind::CriticalAspectPbc => {
                    fits = fit_curves(&rows, Some(config.time_scale.unwrap_or(1.0)))?
                }
                _ => {}
            }
            Table::Lxe(rows)
        }
    };
    Ok(SweepResult {
        table,
        metadata: Metadata {
            code_version: env!("CARGO_PKG_VERSION"),
            experiment: config.experiment,
            master_seed: config.master_seed,
            conventions: conventions(config),
            config: config.clone(),
            fits,
        },
    })
}

fn estimate_point(
    config: &RunConfig,
    params: &EnsembleParams,
) -> Result<LxeEstimate, ExperimentError> {
    match config.engine {
        Engine::Stabilizer => {
            let req = LxeRequest::new(params.clone(), config.n_circuits, config.master_seed)
                .states(config.state_pair.0, config.state_pair.1)
                .scope(config.scope)
                .records_per_circuit(config.records_per_circuit);
            Ok(estimate_lxe(&req)?)
        }
        Engine::Percolation => Ok(crossing_probability_mc(
            params.n_sites,
            params.n_steps,
            params.p,
            params.block_width(),
            params.boundary,
            config.n_circuits,
            config.master_seed,
        )?),
    }
}

/// Fits every `(L, r)` curve of a critical-aspect sweep: the time scale
/// against the open-boundary prediction, or amplitude and free exponent at
/// a fixed time scale for periodic boundaries.
fn fit_curves(
    rows: &[LxeRow],
    pbc_time_scale: Option<f64>,
) -> Result<Vec<CurveFit>, ExperimentError> {
    let mut keys: Vec<(usize, usize)> = rows.iter().map(|r| (r.l, r.r_ghz)).collect();
    keys.dedup();
    keys.sort_unstable();
    keys.dedup();
    let mut out = Vec::new();
    for (l, r) in keys {
        let points: Vec<SimPoint> = rows
            .iter()
            .filter(|row| row.l == l && row.r_ghz == r)
            .map(|row| SimPoint {
                aspect: row.aspect(),
                chi: row.chi_mean,
                stderr: row.chi_stderr,
            })
            .collect();
        if points.len() < 3 {
            continue;
        }
        let fit = match pbc_time_scale {
            None => {
                let f = cft::fit_scale(
                    &points,
                    FitModel::Obc {
                        r_over_l: r as f64 / l as f64,
                    },
                )?;
                CurveFit {
                    l,
                    r_ghz: r,
                    time_scale: f.time_scale,
                    amplitude: None,
                    rms: f.rms,
                    delta: None,
                    delta_stderr: None,
                }
            }
            Some(s) => {
                let f = cft::fit_scale(&points, FitModel::Pbc { time_scale: s })?;
                let e = cft::fit_pbc_exponent(&points, s).ok();
                CurveFit {
                    l,
                    r_ghz: r,
                    time_scale: s,
                    amplitude: f.amplitude,
                    rms: f.rms,
                    delta: e.map(|e| e.delta),
                    delta_stderr: e.map(|e| e.delta_stderr),
                }
            }
        };
        out.push(fit);
    }
    Ok(out)
}

fn cft_rows(config: &RunConfig) -> Result<Vec<CftRow>, ExperimentError> {
    let spec = config.cft.as_ref().expect("validated");
    let aspects = config.grid.aspect.as_deref().unwrap_or_default();
    let ratios = config.grid.r_over_l.clone().unwrap_or_else(|| vec![1.0]);
    let mut rows = Vec::new();
    for &aspect in aspects {
        for &r_over_l in &ratios {
            let a = spec.time_scale * aspect;
            let chi = match spec.table {
                CftTable::Obc => cft::cardy_chi_obc(a, r_over_l)?,
                CftTable::SmallR => cft::chi_obc_small_r(a, r_over_l)?,
                CftTable::Pbc => cft::chi_pbc(a, spec.amplitude),
            };
            rows.push(CftRow {
                table: spec.table,
                aspect,
                r_over_l,
                time_scale: spec.time_scale,
                amplitude: spec.amplitude,
                chi,
            });
        }
    }
    Ok(rows)
}

/// Fraction of random depth-`L` symmetric brickwork scramblers that expose
/// the GHZ sign to Z-type measurements.
pub fn estimate_leak_probability(
    n_sites: usize,
    n_samples: u64,
    seed: u64,
) -> Result<LxeEstimate, ExperimentError> {
    if n_sites < 2 || n_samples == 0 {
        return Err(ExperimentError::Analysis(format!(
            "leak estimate needs L >= 2 and samples >= 1, got L = {n_sites}, samples = {n_samples}"
        )));
    }
    let hits: u64 = (0..n_samples)
        .into_par_iter()
        .map(|k| {
            let mut rng = stream_rng(derive_seed(seed, k), Stream::Gates);
            let images = sample_scrambler_images(n_sites, n_sites, &mut rng);
            u64::from(leak_check(&images, n_sites))
        })
        .sum();
    Ok(LxeEstimate::from_counts(hits, n_samples))
}

/// Path of the JSON sidecar of a CSV file.
pub fn sidecar_path(csv_path: &Path) -> PathBuf {
    csv_path.with_extension("meta.json")
}

/// Writes the CSV (header always present) and its sidecar.
pub fn emit(result: &SweepResult, path: &Path) -> Result<(), ExperimentError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
    }
    let file = fs::File::create(path).map_err(io_err(path))?;
    let mut writer = csv::Writer::from_writer(file);
    match &result.table {
        Table::Lxe(rows) => {
            if rows.is_empty() {
                writer.write_record(LXE_COLUMNS)?;
            }
            rows.iter().try_for_each(|r| writer.serialize(r))?;
        }
        Table::Cft(rows) => {
            if rows.is_empty() {
                writer.write_record(CFT_COLUMNS)?;
            }
            rows.iter().try_for_each(|r| writer.serialize(r))?;
        }
    }
    writer.flush().map_err(io_err(path))?;
    let meta = sidecar_path(path);
    let mut text = serde_json::to_string_pretty(&result.metadata)?;
    text.push('\n');
    fs::write(&meta, text).map_err(io_err(&meta))?;
    Ok(())
}

pub const LXE_COLUMNS: [&str; 14] = [
    "model",
    "L",
    "T",
    "p",
    "q",
    "r_xx",
    "r_ghz",
    "bc",
    "scope",
    "noise_rate",
    "n",
    "chi_mean",
    "chi_stderr",
    "seed",
];
pub const CFT_COLUMNS: [&str; 6] = [
    "table",
    "aspect",
    "r_over_l",
    "time_scale",
    "amplitude",
    "chi",
];

/// Reads a CSV written by [`emit`] for an LXE-type experiment.
pub fn read_lxe_rows(path: &Path) -> Result<Vec<LxeRow>, ExperimentError> {
    let file = fs::File::open(path).map_err(io_err(path))?;
    let mut reader = csv::Reader::from_reader(file);
    Ok(reader.deserialize().collect::<Result<Vec<LxeRow>, _>>()?)
}

/// Sweep variable of a curve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Abscissa {
    P,
    Q,
    RXx,
}

impl Abscissa {
    fn of(self, row: &LxeRow) -> f64 {
        match self {
            Abscissa::P => row.p,
            Abscissa::Q => row.q,
            Abscissa::RXx => row.r_xx,
        }
    }
}

/// Rows grouped by every column except `L`, `T`, `r_ghz` and the abscissa,
/// then keyed by `L`. Group labels list the fixed columns.
pub fn group_curves(rows: &[LxeRow], x: Abscissa) -> Vec<(String, Curves)> {
    let mut groups: Vec<(String, Curves)> = Vec::new();
    for row in rows {
        let fixed = [("p", row.p), ("q", row.q), ("r_xx", row.r_xx)]
            .into_iter()
            .filter(|(name, _)| match x {
                Abscissa::P => *name != "p",
                Abscissa::Q => *name != "q",
                Abscissa::RXx => *name != "r_xx",
            })
            .map(|(name, v)| format!("{name}={v}"))
            .collect::<Vec<_>>()
            .join(" ");
        let label = format!(
            "{} {} bc={} scope={} noise_rate={}",
            row.model,
            fixed,
            row.bc.as_str(),
            row.scope.as_str(),
            row.noise_rate
        );
        let idx = match groups.iter().position(|(l, _)| *l == label) {
            Some(i) => i,
            None => {
                groups.push((label, Curves::new()));
                groups.len() - 1
            }
        };
        groups[idx].1.entry(row.l).or_default().push(CurvePoint {
            x: x.of(row),
            chi: row.chi_mean,
            stderr: row.chi_stderr,
        });
    }
    for (_, curves) in groups.iter_mut() {
        for pts in curves.values_mut() {
            pts.sort_by(|a, b| a.x.total_cmp(&b.x));
        }
    }
    groups
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sweep_config(extra: &str) -> String {
        format!(
            r#"{{
  "experiment": "lxe_sweep",
  "grid": {{ "model": "zzx", "L": [4, 6], "p": [0.0, 1.0] }},
  "n_circuits": 5,
  "master_seed": 3{extra}
}}"#
        )
    }

    #[test]
    fn extreme_sweep_rows() {
        let config = RunConfig::parse(&sweep_config("")).unwrap();
        let result = run(&config).unwrap();
        let Table::Lxe(rows) = &result.table else {
            panic!()
        };
        assert_eq!(rows.len(), 4);
        for row in rows {
            assert_eq!(row.chi_mean, if row.p == 0.0 { 1.0 } else { 0.0 });
            assert_eq!(row.chi_stderr, 0.0);
            assert_eq!(row.t, row.l);
        }
    }

    #[test]
    fn parse_errors_carry_positions() {
        let err =
            RunConfig::parse("{\n  \"experiment\": \"lxe_sweep\",\n  \"grid\": 5\n}").unwrap_err();
        assert!(
            matches!(err, ExperimentError::Config { line: 3, .. }),
            "{err}"
        );

        let bad = sweep_config("").replace("\"p\": [0.0, 1.0]", "\"p\": []");
        let err = RunConfig::parse(&bad).unwrap_err();
        assert!(
            matches!(err, ExperimentError::Config { line: 3, .. }),
            "{err}"
        );

        let no_seed = sweep_config("").replace(",\n  \"master_seed\": 3", "");
        assert!(RunConfig::parse(&no_seed).is_err());

        let typo = sweep_config(",\n  \"wokers\": 2");
        let err = RunConfig::parse(&typo).unwrap_err();
        assert!(
            matches!(err, ExperimentError::Config { line: 6, .. }),
            "{err}"
        );

        let odd = sweep_config("").replace("[4, 6]", "[4, 5]");
        assert!(RunConfig::parse(&odd).is_err());
    }

    #[test]
    fn phase_diagram_grid_size() {
        let text = r#"{
  "experiment": "phase_diagram",
  "grid": { "model": "hybrid", "L": [8], "p": [0.2, 0.5, 0.8], "q": [0.0, 0.5] },
  "n_circuits": 2,
  "master_seed": 1
}"#;
        let config = RunConfig::parse(text).unwrap();
        assert_eq!(config.points().len(), 6);
        assert_eq!(run(&config).unwrap().table.len(), 6);
    }

    #[test]
    fn cft_table_rows() {
        let text = r#"{
  "experiment": "cft_tables",
  "grid": { "aspect": [0.5, 1.0, 2.0] },
  "cft": { "table": "obc" },
  "master_seed": 0
}"#;
        let result = run(&RunConfig::parse(text).unwrap()).unwrap();
        let Table::Cft(rows) = &result.table else {
            panic!()
        };
        let chi: Vec<f64> = rows.iter().map(|r| r.chi).collect();
        let want = [0.824_353_106_199_344_8, 0.5, 0.175_646_893_800_655_2];
        for (a, b) in chi.iter().zip(want) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn emit_is_deterministic_and_self_describing() {
        let dir = tempfile::tempdir().unwrap();
        let text = r#"{
  "experiment": "lxe_sweep",
  "grid": { "model": "zizxx", "L": [4], "T": [3], "p": [0.5], "r_xx": [0.3, 0.7] },
  "n_circuits": 20,
  "master_seed": 9,
  "workers": 1
}"#;
        let config = RunConfig::parse(text).unwrap();
        let a = dir.path().join("a.csv");
        let b = dir.path().join("b.csv");
        emit(&run(&config).unwrap(), &a).unwrap();
        let mut two = config.clone();
        two.workers = Some(2);
        emit(&run(&two).unwrap(), &b).unwrap();
        assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
        assert_eq!(
            fs::read(sidecar_path(&a)).unwrap(),
            fs::read(sidecar_path(&b)).unwrap()
        );
        let meta = fs::read_to_string(sidecar_path(&a)).unwrap();
        assert!(meta.contains("ZIZ(i,i+2)"));
        let rows = read_lxe_rows(&a).unwrap();
        assert_eq!(rows.len(), 2);
        for r in &rows {
            let se = (r.chi_mean * (1.0 - r.chi_mean) / r.n as f64).sqrt();
            assert_eq!(se, r.chi_stderr);
        }
    }

    #[test]
    fn empty_table_has_header() {
        let dir = tempfile::tempdir().unwrap();
        let config = RunConfig::parse(&sweep_config("")).unwrap();
        let mut result = run(&config).unwrap();
        result.table = Table::Lxe(Vec::new());
        let path = dir.path().join("empty.csv");
        emit(&result, &path).unwrap();
        assert_eq!(
            fs::read_to_string(&path).unwrap(),
            LXE_COLUMNS.join(",") + "\n"
        );
    }

    #[test]
    fn percolation_engine_matches_extremes() {
        let text = sweep_config(",\n  \"engine\": \"percolation\"");
        let result = run(&RunConfig::parse(&text).unwrap()).unwrap();
        let Table::Lxe(rows) = &result.table else {
            panic!()
        };
        assert!(rows
            .iter()
            .all(|r| r.chi_mean == if r.p == 0.0 { 1.0 } else { 0.0 }));
        let hybrid = text.replace("\"zzx\"", "\"hybrid\"");
        assert!(RunConfig::parse(&hybrid).is_err());
    }

    #[test]
    fn leak_small_sizes() {
        let est = estimate_leak_probability(2, 4000, 5).unwrap();
        let images = crate::circuit::symmetric_images_2q();
        // Image of Z0 Z1 leaks when both x bits are set.
        let exact = images
            .iter()
            .filter(|img| (img[1] ^ img[3]) & 0b0101 == 0b0101)
            .count() as f64
            / images.len() as f64;
        assert!(
            (est.mean - exact).abs() < 4.0 * est.stderr.max(1e-3),
            "{} {exact}",
            est.mean
        );
        assert!(estimate_leak_probability(1, 10, 0).is_err());
        assert!(estimate_leak_probability(4, 0, 0).is_err());
    }

    #[test]
    fn grouping_splits_fixed_columns() {
        let row = |l: usize, p: f64, q: f64| LxeRow {
            model: "hybrid".into(),
            l,
            t: l,
            p,
            q,
            r_xx: 0.0,
            r_ghz: l,
            bc: Boundary::Open,
            scope: Scope::All,
            noise_rate: 0.0,
            n: 10,
            chi_mean: p,
            chi_stderr: 0.0,
            seed: 0,
        };
        let rows = vec![
            row(8, 0.1, 0.5),
            row(8, 0.2, 0.5),
            row(16, 0.1, 0.5),
            row(8, 0.1, 0.0),
        ];
        let groups = group_curves(&rows, Abscissa::P);
        assert_eq!(groups.len(), 2);
        assert_eq!(groups[0].1[&8].len(), 2);
        assert_eq!(group_curves(&rows, Abscissa::Q).len(), 2);
    }
}
