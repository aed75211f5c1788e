// SPDX-License-Identifier: Apache-2.0

//! Config-driven experiment runner.
//!
//! A run parses and validates the whole config before any computation, runs
//! each requested analysis independently, writes one CSV per artifact, and
//! finishes with `manifest.toml` listing every file with its SHA-256.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::entropy::{entropy_formula_gap, random_entropy, EntropyOptions, GapOptions, Partition, StartDistribution};
use crate::error::{Error, Result};
use crate::flows::{builtin_sde, flow_cocycle_residual, zero_noise_flow_study, FlowStudyOptions, NoisePath, SdeSystem, SinkCandidate};
use crate::kernels::TransitionKernel;
use crate::lyapunov::{random_met, MET_SHIFTS};
use crate::measures::{
    build_ulam, empirical_measure, stationarity_residual, stationary_vector, zero_noise_study, BinnedMeasure, Grid,
    LimitCandidate,
};
use crate::skew::{cocycle_check, NoiseSequence, RandomSystem};
use crate::space::{builtin_map, Point};

fn io_err(msg: impl std::fmt::Display) -> Error {
    Error::Io(std::io::Error::other(msg.to_string()))
}

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Worker-count override read by [`run`].
pub const THREADS_ENV: &str = "RDSLAB_THREADS";

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Analysis {
    Stationary,
    ZeroNoise,
    Lyapunov,
    Entropy,
    EntropyGap,
    CocycleCheck,
}

impl Analysis {
    pub fn name(self) -> &'static str {
        match self {
            Self::Stationary => "stationary",
            Self::ZeroNoise => "zero_noise",
            Self::Lyapunov => "lyapunov",
            Self::Entropy => "entropy",
            Self::EntropyGap => "entropy_gap",
            Self::CocycleCheck => "cocycle_check",
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSpec {
    /// Builtin map name; exclusive with `sde`.
    pub map: Option<String>,
    /// Builtin SDE name; exclusive with `map`.
    pub sde: Option<String>,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
    pub dt: Option<f64>,
    pub horizon: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelSpec {
    pub variant: String,
    pub family: Option<String>,
    pub amplitude: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Resolution {
    pub bins: usize,
    pub steps: usize,
    pub starts: usize,
    pub omega_samples: usize,
    pub samples: usize,
    pub n_max: usize,
    pub paths: usize,
    pub test_sets: usize,
    pub check_depth: usize,
    pub burn_in: usize,
}

impl Default for Resolution {
    fn default() -> Self {
        Self {
            bins: 2000,
            steps: 10_000,
            starts: 16,
            omega_samples: 4,
            samples: 200_000,
            n_max: 14,
            paths: 1000,
            test_sets: 64,
            check_depth: 8,
            burn_in: 1000,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: Option<u64>,
    pub output_dir: Option<PathBuf>,
    pub analyses: Vec<Analysis>,
    pub eps: Option<f64>,
    pub eps_schedule: Option<Vec<f64>>,
    /// `dirac:<x>`, `lebesgue`, or `mixture:<x1>,<x2>,…` (equal weights).
    pub candidate: Option<String>,
    pub system: SystemSpec,
    pub kernel: Option<KernelSpec>,
    #[serde(default)]
    pub resolution: Resolution,
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    /// Canonical serialization without the output location; the basis of
    /// the config hash.
    pub fn canonical(&self) -> String {
        let echo = Self { output_dir: None, ..self.clone() };
        toml::to_string(&echo).expect("config serializes")
    }

    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.canonical().as_bytes()))
    }
}

/// A validated system ready to run.
#[derive(Clone, Debug)]
pub enum BuiltSystem {
    Map(Arc<TransitionKernel>),
    Sde(SdeSystem),
}

impl BuiltSystem {
    pub fn as_random(&self) -> Arc<dyn RandomSystem> {
        match self {
            Self::Map(k) => k.clone(),
            Self::Sde(s) => Arc::new(s.clone()),
        }
    }
}

enum Candidate {
    Dirac(Vec<f64>),
    Lebesgue,
    Mixture(Vec<f64>),
}

fn parse_candidate(text: &str) -> Result<Candidate> {
    let bad = || Error::Config(format!("cannot parse candidate `{text}`; use dirac:<x>, lebesgue, or mixture:<x1>,<x2>"));
    let nums = |s: &str| -> Result<Vec<f64>> { s.split(',').map(|v| v.trim().parse().map_err(|_| bad())).collect() };
    match text.split_once(':') {
        None if text == "lebesgue" => Ok(Candidate::Lebesgue),
        Some(("dirac", rest)) => Ok(Candidate::Dirac(nums(rest)?)),
        Some(("mixture", rest)) => Ok(Candidate::Mixture(nums(rest)?)),
        _ => Err(bad()),
    }
}

/// Everything a run needs after validation.
pub struct Experiment {
    pub config: ExperimentConfig,
    pub seed: u64,
    pub output_dir: PathBuf,
    pub system: BuiltSystem,
    candidate: Option<Candidate>,
}

impl std::fmt::Debug for Experiment {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Experiment").field("seed", &self.seed).field("output_dir", &self.output_dir).finish()
    }
}

/// CLI-level overrides.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub output_dir: Option<PathBuf>,
}

fn build_system(cfg: &ExperimentConfig, eps: Option<f64>) -> Result<BuiltSystem> {
    let sys = &cfg.system;
    match (&sys.map, &sys.sde) {
        (Some(name), None) => {
            if sys.dt.is_some() || sys.horizon.is_some() {
                return Err(Error::Config("dt and horizon apply to SDE systems only".into()));
            }
            let map = builtin_map(name, &sys.params)?;
            let k = cfg.kernel.as_ref().ok_or_else(|| Error::Config("map systems need a [kernel] table".into()))?;
            let kernel = TransitionKernel::from_name(&k.variant, map, eps, k.family.as_deref(), k.amplitude)?;
            Ok(BuiltSystem::Map(Arc::new(kernel)))
        }
        (None, Some(name)) => {
            if cfg.kernel.is_some() {
                return Err(Error::Config("SDE systems take no [kernel] table".into()));
            }
            let dt = sys.dt.ok_or_else(|| Error::Config("SDE systems need dt".into()))?;
            let horizon = sys.horizon.ok_or_else(|| Error::Config("SDE systems need horizon".into()))?;
            Ok(BuiltSystem::Sde(builtin_sde(name, &sys.params, eps.unwrap_or(0.0), dt, horizon)?))
        }
        _ => Err(Error::Config("[system] needs exactly one of `map` or `sde`".into())),
    }
}

impl Experiment {
    pub fn new(config: ExperimentConfig, overrides: &Overrides) -> Result<Self> {
        let seed = overrides
            .seed
            .or(config.seed)
            .ok_or_else(|| Error::Config("a seed is required (set `seed` or pass --seed)".into()))?;
        let output_dir = overrides
            .output_dir
            .clone()
            .or_else(|| config.output_dir.clone())
            .ok_or_else(|| Error::Config("an output directory is required (set `output_dir` or pass --out)".into()))?;
        if config.analyses.is_empty() {
            return Err(Error::Config("no analyses requested".into()));
        }
        let r = &config.resolution;
        if r.bins < 2 || r.steps == 0 || r.starts == 0 || r.omega_samples == 0 || r.samples == 0 || r.n_max == 0 || r.paths == 0 {
            return Err(Error::Config("resolution knobs must be positive (bins >= 2)".into()));
        }
        let eps = config.eps.or_else(|| config.eps_schedule.as_ref().and_then(|s| s.first().copied()));
        let system = build_system(&config, eps)?;
        let mut has_schedule = false;
        if let Some(s) = &config.eps_schedule {
            if s.is_empty() || s.windows(2).any(|w| w[1] >= w[0]) {
                return Err(Error::Config("eps_schedule must be nonempty and strictly decreasing".into()));
            }
            // every level must be admissible for the kernel
            for &e in s {
                build_system(&config, Some(e))?;
            }
            has_schedule = true;
        }
        if config.analyses.contains(&Analysis::ZeroNoise) && !has_schedule {
            return Err(Error::Config("zero_noise needs eps_schedule".into()));
        }
        let candidate = config.candidate.as_deref().map(parse_candidate).transpose()?;
        let mut config = config;
        config.seed = Some(seed);
        config.output_dir = Some(output_dir.clone());
        config.analyses.dedup();
        Ok(Self { config, seed, output_dir, system, candidate })
    }

    pub fn from_toml_str(text: &str, overrides: &Overrides) -> Result<Self> {
        Self::new(ExperimentConfig::from_toml_str(text)?, overrides)
    }
}

/// CSV artifact with the reproducibility header.
struct Table {
    name: String,
    header: Vec<&'static str>,
    rows: Vec<Vec<String>>,
}

impl Table {
    fn new(name: impl Into<String>, header: &[&'static str]) -> Self {
        Self { name: name.into(), header: header.to_vec(), rows: Vec::new() }
    }

    fn push<I: IntoIterator<Item = String>>(&mut self, row: I) {
        self.rows.push(row.into_iter().collect());
    }

    fn render(&self, config_hash: &str) -> Result<Vec<u8>> {
        let mut out = format!("# rdslab {VERSION}\n# config_hash={config_hash}\n").into_bytes();
        let mut w = csv::Writer::from_writer(&mut out);
        let io = |e: csv::Error| io_err(e);
        w.write_record(&self.header).map_err(io)?;
        for r in &self.rows {
            w.write_record(r).map_err(io)?;
        }
        w.flush().map_err(|e| io_err(e.to_string()))?;
        drop(w);
        Ok(out)
    }
}

fn f(v: f64) -> String {
    format!("{v:e}")
}

fn measure_rows(t: &mut Table, label: &str, mu: &BinnedMeasure) {
    for (i, w) in mu.weights.iter().enumerate() {
        t.push([label.to_string(), i.to_string(), f(mu.grid.center(i)), f(*w)]);
    }
}

fn need_1d_map(exp: &Experiment, what: &str) -> Result<Arc<TransitionKernel>> {
    match &exp.system {
        BuiltSystem::Map(k) if k.dim() == 1 => Ok(k.clone()),
        _ => Err(Error::Unsupported(format!("{what} needs a one-dimensional map system"))),
    }
}

fn sde_grid(s: &SdeSystem, bins: usize) -> Result<Grid> {
    if s.dim != 1 {
        return Err(Error::Unsupported("binned laws of SDEs need dimension one".into()));
    }
    let (lo, hi) = s.space.bounds(0);
    Ok(Grid::interval(lo, hi, bins | 1))
}

fn starts_for(exp: &Experiment, sys: &dyn RandomSystem, count: usize) -> Vec<Point> {
    StartDistribution::Lebesgue.sample(sys, count, exp.seed ^ 0x57a7, 0)
}

fn stationary_law(exp: &Experiment, kernel: &Arc<TransitionKernel>) -> Result<StartDistribution> {
    if kernel.dim() == 1 {
        Ok(StartDistribution::Binned(stationary_vector(&build_ulam(kernel, exp.config.resolution.bins)?)?))
    } else if kernel.space().is_periodic() {
        Ok(StartDistribution::Lebesgue)
    } else {
        Ok(StartDistribution::BurnIn { steps: exp.config.resolution.burn_in })
    }
}

fn run_stationary(exp: &Experiment) -> Result<Vec<Table>> {
    let r = &exp.config.resolution;
    let mut measure = Table::new("stationary_measure.csv", &["system", "bin", "center", "weight"]);
    let mut summary = Table::new("stationary_summary.csv", &["system", "bins", "residual", "max_dev_from_uniform"]);
    match &exp.system {
        BuiltSystem::Map(_) => {
            let k = need_1d_map(exp, "the Ulam stationary measure")?;
            let mu = stationary_vector(&build_ulam(&k, r.bins)?)?;
            let res = stationarity_residual(&k, &mu, r.test_sets, exp.seed)?;
            let u = 1.0 / mu.len() as f64;
            let dev = mu.weights.iter().map(|w| (w - u).abs()).fold(0.0, f64::max);
            measure_rows(&mut measure, &k.name(), &mu);
            summary.push([k.name(), r.bins.to_string(), f(res), f(dev)]);
        }
        BuiltSystem::Sde(s) => {
            let grid = sde_grid(s, r.bins)?;
            let starts = starts_for(exp, s, r.starts);
            let mu = empirical_measure(s, &grid, exp.seed, &starts, r.burn_in, s.steps())?;
            let u = 1.0 / mu.len() as f64;
            let dev = mu.weights.iter().map(|w| (w - u).abs()).fold(0.0, f64::max);
            measure_rows(&mut measure, &RandomSystem::name(s), &mu);
            summary.push([RandomSystem::name(s), grid.n.to_string(), "nan".into(), f(dev)]);
        }
    }
    Ok(vec![measure, summary])
}

fn run_zero_noise(exp: &Experiment) -> Result<Vec<Table>> {
    let r = &exp.config.resolution;
    let schedule = exp.config.eps_schedule.clone().unwrap_or_default();
    let mut table = Table::new("zero_noise.csv", &["system", "candidate", "eps", "w1", "mass_in_window"]);
    let mut measures = Table::new("zero_noise_measures.csv", &["eps", "bin", "center", "weight"]);
    match &exp.system {
        BuiltSystem::Map(_) => {
            let k = need_1d_map(exp, "the zero-noise study")?;
            let cand = match &exp.candidate {
                None | Some(Candidate::Lebesgue) => LimitCandidate::Lebesgue,
                Some(Candidate::Dirac(p)) if p.len() == 1 => LimitCandidate::Dirac(p[0]),
                Some(Candidate::Dirac(_)) => return Err(Error::Config("dirac candidate needs one coordinate".into())),
                Some(Candidate::Mixture(pts)) => {
                    let g = Grid::for_space(&k.space(), r.bins)?;
                    let mut w = vec![0.0; g.n];
                    for &p in pts {
                        w[g.index_of(p)] += 1.0 / pts.len() as f64;
                    }
                    LimitCandidate::Measure(BinnedMeasure::new(g, w)?)
                }
            };
            let st = zero_noise_study(&k, &schedule, &cand, r.bins)?;
            for (row, mu) in st.rows.iter().zip(&st.measures) {
                table.push([k.name(), st.candidate.clone(), f(row.eps), f(row.w1), f(row.mass_in_window)]);
                measure_rows(&mut measures, &f(row.eps), mu);
            }
        }
        BuiltSystem::Sde(s) => {
            let grid = if s.dim == 1 { Some(sde_grid(s, r.bins)?) } else { None };
            let cand = match &exp.candidate {
                None => SinkCandidate::Dirac(vec![0.0; s.dim]),
                Some(Candidate::Dirac(p)) => SinkCandidate::Dirac(p.clone()),
                Some(Candidate::Mixture(pts)) => {
                    let g = grid.clone().ok_or_else(|| Error::Unsupported("mixtures need a one-dimensional SDE".into()))?;
                    let mut w = vec![0.0; g.n];
                    for &p in pts {
                        w[g.index_of(p)] += 1.0 / pts.len() as f64;
                    }
                    SinkCandidate::Binned(BinnedMeasure::new(g, w)?)
                }
                Some(Candidate::Lebesgue) => return Err(Error::Config("SDE studies take dirac or mixture candidates".into())),
            };
            let start_box = (0..s.dim).map(|d| s.space.bounds(d)).collect();
            let opts = FlowStudyOptions {
                paths: r.paths,
                seed: exp.seed,
                burn_in: s.horizon / 2.0 - (s.horizon / 2.0) % s.dt,
                thin: 10,
                start_box,
                bins: grid.as_ref().map_or(1, |g| g.n),
            };
            let st = zero_noise_flow_study(s, &schedule, &cand, &opts)?;
            for row in &st.rows {
                table.push([RandomSystem::name(s), st.candidate.clone(), f(row.eps), f(row.w1), "nan".into()]);
            }
            return Ok(vec![table]);
        }
    }
    Ok(vec![table, measures])
}

fn run_lyapunov(exp: &Experiment) -> Result<Vec<Table>> {
    let r = &exp.config.resolution;
    let sys = exp.system.as_random();
    let starts = starts_for(exp, sys.as_ref(), r.starts);
    let met = random_met(sys.clone(), exp.seed, &starts, r.steps, &MET_SHIFTS)?;
    let mut spectra = Table::new("lyapunov.csv", &["system", "start", "index", "exponent", "minus_infinity"]);
    for (s, (ex, inf)) in met.spectra.iter().zip(&met.minus_infinity).enumerate() {
        for (i, (e, m)) in ex.iter().zip(inf).enumerate() {
            spectra.push([sys.name(), s.to_string(), i.to_string(), f(*e), m.to_string()]);
        }
    }
    let mut summary = Table::new("lyapunov_invariance.csv", &["system", "shift", "max_gap"]);
    for (t, g) in &met.shift_gaps {
        summary.push([sys.name(), t.to_string(), f(*g)]);
    }
    Ok(vec![spectra, summary])
}

fn entropy_options(exp: &Experiment, n_max: usize) -> EntropyOptions {
    let r = &exp.config.resolution;
    EntropyOptions { n_max, omega_samples: r.omega_samples, samples: r.samples, seed: exp.seed }
}

fn run_entropy(exp: &Experiment) -> Result<Vec<Table>> {
    let BuiltSystem::Map(k) = &exp.system else {
        return Err(Error::Unsupported("entropy estimates need a map system".into()));
    };
    let mu = stationary_law(exp, k)?;
    let mut curve = Table::new("entropy_curve.csv", &["partition", "n", "h_n_over_n", "stderr"]);
    for xi in Partition::catalog(&k.space()) {
        match random_entropy(k.as_ref(), &mu, &xi, &entropy_options(exp, exp.config.resolution.n_max)) {
            Ok(e) => {
                for (n, h, se) in &e.curve {
                    curve.push([xi.name.clone(), n.to_string(), f(*h), f(*se)]);
                }
            }
            Err(Error::InsufficientSamples(_)) => {}
            Err(e) => return Err(e),
        }
    }
    Ok(vec![curve])
}

fn run_entropy_gap(exp: &Experiment) -> Result<Vec<Table>> {
    let BuiltSystem::Map(k) = &exp.system else {
        return Err(Error::Unsupported("the entropy gap needs a map system".into()));
    };
    let r = &exp.config.resolution;
    let mu = stationary_law(exp, k)?;
    let opts = GapOptions {
        entropy: entropy_options(exp, r.n_max),
        lyapunov_steps: r.steps,
        lyapunov_starts: r.starts,
        check_depth: r.check_depth,
    };
    let g = entropy_formula_gap(k.clone(), &mu, &opts)?;
    let mut t = Table::new("entropy_gap.csv", &["system", "h", "lambda_plus", "gap", "partition", "generating"]);
    t.push([g.system, f(g.h), f(g.lambda_plus), f(g.gap), g.partition, g.generating.to_string()]);
    Ok(vec![t])
}

fn run_cocycle(exp: &Experiment) -> Result<Vec<Table>> {
    let mut t = Table::new("cocycle_check.csv", &["system", "s", "t", "residual"]);
    let pairs: Vec<(u64, u64)> = (0..8u64).map(|i| (1 + 7 * i, 3 + 11 * i)).collect();
    let sys = exp.system.as_random();
    let starts = starts_for(exp, sys.as_ref(), pairs.len());
    for (i, ((s, tt), x)) in pairs.iter().zip(&starts).enumerate() {
        let res = match &exp.system {
            BuiltSystem::Map(k) => {
                cocycle_check(k.as_ref(), &NoiseSequence::new(exp.seed, i as u64, k.symbol_width()), *s, *tt, x)
            }
            BuiltSystem::Sde(sde) => {
                let path = NoisePath::generate(exp.seed, i as u64, sde.noise_dim, sde.dt, (s + tt) as usize);
                flow_cocycle_residual(sde, &path, *s as f64 * sde.dt, *tt as f64 * sde.dt, x)?
            }
        };
        t.push([sys.name(), s.to_string(), tt.to_string(), f(res)]);
    }
    Ok(vec![t])
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FileEntry {
    pub path: String,
    pub sha256: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnalysisOutcome {
    pub analysis: String,
    pub ok: bool,
    pub error: Option<String>,
    pub files: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub rdslab_version: String,
    pub config_hash: String,
    pub seed: u64,
    pub analyses: Vec<AnalysisOutcome>,
    pub files: Vec<FileEntry>,
    /// Canonical form of the effective config.
    pub config: String,
}

impl Manifest {
    pub fn success(&self) -> bool {
        self.analyses.iter().all(|a| a.ok)
    }
}

pub const MANIFEST_FILE: &str = "manifest.toml";

fn write_file(dir: &Path, name: &str, bytes: &[u8]) -> Result<FileEntry> {
    fs::write(dir.join(name), bytes).map_err(|e| io_err(format!("{}: {e}", dir.join(name).display())))?;
    Ok(FileEntry { path: name.to_string(), sha256: hex::encode(Sha256::digest(bytes)) })
}

fn worker_pool() -> Result<Option<rayon::ThreadPool>> {
    let Ok(v) = std::env::var(THREADS_ENV) else { return Ok(None) };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Error::Config(format!("{THREADS_ENV} must be a positive integer, got `{v}`")))?;
    rayon::ThreadPoolBuilder::new().num_threads(n).build().map(Some).map_err(|e| Error::Config(e.to_string()))
}

/// Run every requested analysis and write the manifest last.
pub fn run(exp: &Experiment) -> Result<Manifest> {
    let go = || -> Result<Manifest> {
        let dir = &exp.output_dir;
        fs::create_dir_all(dir).map_err(|e| io_err(format!("{}: {e}", dir.display())))?;
        let hash = exp.config.hash();
        let mut outcomes = Vec::new();
        let mut files = Vec::new();
        for &a in &exp.config.analyses {
            let result = match a {
                Analysis::Stationary => run_stationary(exp),
                Analysis::ZeroNoise => run_zero_noise(exp),
                Analysis::Lyapunov => run_lyapunov(exp),
                Analysis::Entropy => run_entropy(exp),
                Analysis::EntropyGap => run_entropy_gap(exp),
                Analysis::CocycleCheck => run_cocycle(exp),
            };
            let outcome = match result.and_then(|tables| {
                tables
                    .iter()
                    .map(|t| write_file(dir, &t.name, &t.render(&hash)?))
                    .collect::<Result<Vec<FileEntry>>>()
            }) {
                Ok(written) => {
                    let names = written.iter().map(|w| w.path.clone()).collect();
                    files.extend(written);
                    AnalysisOutcome { analysis: a.name().into(), ok: true, error: None, files: names }
                }
                Err(e) => AnalysisOutcome { analysis: a.name().into(), ok: false, error: Some(e.to_string()), files: vec![] },
            };
            outcomes.push(outcome);
        }
        let manifest = Manifest {
            rdslab_version: VERSION.into(),
            config_hash: hash,
            seed: exp.seed,
            analyses: outcomes,
            files,
            config: exp.config.canonical(),
        };
        let text = toml::to_string(&manifest).map_err(|e| io_err(e.to_string()))?;
        fs::write(dir.join(MANIFEST_FILE), text).map_err(|e| io_err(e.to_string()))?;
        Ok(manifest)
    };
    match worker_pool()? {
        Some(pool) => pool.install(go),
        None => go(),
    }
}

pub fn run_file(path: &Path, overrides: &Overrides) -> Result<Manifest> {
    let text = fs::read_to_string(path).map_err(|e| io_err(format!("{}: {e}", path.display())))?;
    run(&Experiment::from_toml_str(&text, overrides)?)
}
