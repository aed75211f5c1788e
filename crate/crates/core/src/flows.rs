// SPDX-License-Identifier: Apache-2.0

//! Euler–Maruyama discretization of `dX = f(t, X) dt + ε σ(t, X) dW`.
//!
//! A [`NoisePath`] holds Brownian increments on the `Δt` grid. The shift
//! `θ(s)` drops the first `s/Δt` increments, and step `m` of a shifted path is
//! integrated at absolute time `(offset + m)Δt`, so the flow cocycle holds
//! exactly on grid times.

use std::collections::BTreeMap;
use std::f64::consts::TAU;
use std::sync::Arc;

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::measures::{wasserstein1, BinnedMeasure, Grid};
use crate::skew::{NoiseSequence, RandomSystem};
use crate::space::{MapInfo, Point, StateSpace};

pub type VectorField = Arc<dyn Fn(f64, &[f64], &mut [f64]) + Send + Sync>;
/// Fills a row-major `n × k` matrix.
pub type MatrixField = Arc<dyn Fn(f64, &[f64], &mut [f64]) + Send + Sync>;

/// Trajectories are cut off once a coordinate exceeds this magnitude.
pub const OVERFLOW_GUARD: f64 = 1e12;

#[derive(Clone)]
pub struct SdeSystem {
    pub name: String,
    pub dim: usize,
    pub noise_dim: usize,
    pub drift: VectorField,
    pub diffusion: MatrixField,
    /// `Df`, row-major `n × n`.
    pub drift_jacobian: Option<MatrixField>,
    /// `σ` does not depend on `x`.
    pub additive: bool,
    pub eps: f64,
    pub dt: f64,
    pub horizon: f64,
    pub space: StateSpace,
}

impl std::fmt::Debug for SdeSystem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SdeSystem")
            .field("name", &self.name)
            .field("dim", &self.dim)
            .field("eps", &self.eps)
            .field("dt", &self.dt)
            .field("horizon", &self.horizon)
            .finish()
    }
}

fn grid_steps(t: f64, dt: f64) -> Option<usize> {
    let m = (t / dt).round();
    ((t / dt - m).abs() <= 1e-9 * m.max(1.0) && m >= 0.0).then_some(m as usize)
}

impl SdeSystem {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        name: impl Into<String>,
        dim: usize,
        noise_dim: usize,
        drift: VectorField,
        diffusion: MatrixField,
        eps: f64,
        dt: f64,
        horizon: f64,
    ) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::Config(format!("dt must be positive, got {dt}")));
        }
        if !(eps >= 0.0 && eps.is_finite()) {
            return Err(Error::Config(format!("noise level must be finite and >= 0, got {eps}")));
        }
        if grid_steps(horizon, dt).is_none() {
            return Err(Error::Config(format!("horizon {horizon} is not a multiple of dt {dt}")));
        }
        if dim == 0 || noise_dim == 0 {
            return Err(Error::Config("state and noise dimensions must be positive".into()));
        }
        Ok(Self {
            name: name.into(),
            dim,
            noise_dim,
            drift,
            diffusion,
            drift_jacobian: None,
            additive: false,
            eps,
            dt,
            horizon,
            space: StateSpace::euclidean_box(vec![(-4.0, 4.0); dim]),
        })
    }

    pub fn with_drift_jacobian(mut self, jac: MatrixField, additive: bool) -> Self {
        self.drift_jacobian = Some(jac);
        self.additive = additive;
        self
    }

    pub fn with_space(mut self, space: StateSpace) -> Self {
        self.space = space;
        self
    }

    pub fn with_eps(&self, eps: f64) -> Result<Self> {
        if !(eps >= 0.0 && eps.is_finite()) {
            return Err(Error::Config(format!("noise level must be finite and >= 0, got {eps}")));
        }
        Ok(Self { eps, ..self.clone() })
    }

    pub fn steps(&self) -> usize {
        grid_steps(self.horizon, self.dt).unwrap()
    }

    /// One Euler–Maruyama step at absolute time `t`.
    #[inline]
    fn em_step(&self, t: f64, dw: &[f64], x: &mut [f64], scratch: &mut [f64]) {
        let (f, s) = scratch.split_at_mut(self.dim);
        (self.drift)(t, x, f);
        (self.diffusion)(t, x, s);
        for i in 0..self.dim {
            let row = &s[i * self.noise_dim..(i + 1) * self.noise_dim];
            let noise: f64 = row.iter().zip(dw).map(|(a, b)| a * b).sum();
            x[i] += f[i] * self.dt + self.eps * noise;
        }
    }

    fn scratch(&self) -> Vec<f64> {
        vec![0.0; self.dim * (1 + self.noise_dim)]
    }
}

/// Width of the uniform symbol behind one Gaussian increment.
fn gaussian_width(k: usize) -> usize {
    2 * k.div_ceil(2)
}

/// Box–Muller: `√Δt · N(0, I_k)` from `2⌈k/2⌉` uniforms in `[0,1)`.
#[inline]
fn gaussian_increment(u: &[f64], dt: f64, out: &mut [f64]) {
    let s = dt.sqrt();
    for (i, o) in out.iter_mut().enumerate() {
        let (u1, u2) = (u[2 * (i / 2)], u[2 * (i / 2) + 1]);
        let r = (-2.0 * (1.0 - u1).ln()).sqrt();
        let a = TAU * u2;
        *o = s * r * if i % 2 == 0 { a.cos() } else { a.sin() };
    }
}

/// Brownian increments on the `Δt` grid.
#[derive(Clone, Debug)]
pub struct NoisePath {
    pub k: usize,
    pub dt: f64,
    increments: Arc<Vec<f64>>,
    offset: usize,
}

impl NoisePath {
    /// `len` increments drawn from `NoiseSequence(seed, stream)`.
    pub fn generate(seed: u64, stream: u64, k: usize, dt: f64, len: usize) -> Self {
        let mut reader = NoiseSequence::new(seed, stream, gaussian_width(k)).reader();
        let mut inc = vec![0.0; len * k];
        for chunk in inc.chunks_mut(k) {
            let (_, u) = reader.next_symbol();
            gaussian_increment(u, dt, chunk);
        }
        Self { k, dt, increments: Arc::new(inc), offset: 0 }
    }

    pub fn from_increments(k: usize, dt: f64, increments: Vec<f64>) -> Result<Self> {
        if k == 0 || increments.len() % k != 0 {
            return Err(Error::Config(format!("{} increments do not split into {k}-vectors", increments.len())));
        }
        Ok(Self { k, dt, increments: Arc::new(increments), offset: 0 })
    }

    pub fn zeros(k: usize, dt: f64, len: usize) -> Self {
        Self { k, dt, increments: Arc::new(vec![0.0; len * k]), offset: 0 }
    }

    /// Remaining number of increments.
    pub fn len(&self) -> usize {
        self.increments.len() / self.k - self.offset
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Absolute grid index of the first remaining increment.
    pub fn offset(&self) -> usize {
        self.offset
    }

    pub fn increment(&self, m: usize) -> &[f64] {
        let i = (self.offset + m) * self.k;
        &self.increments[i..i + self.k]
    }

    /// `θ(s)` for `s = steps·Δt`.
    pub fn shift(&self, steps: usize) -> Result<Self> {
        if steps > self.len() {
            return Err(Error::Config(format!("cannot shift a path of {} steps by {steps}", self.len())));
        }
        Ok(Self { offset: self.offset + steps, ..self.clone() })
    }

    /// The same Brownian path on a grid `factor` times coarser.
    pub fn coarsen(&self, factor: usize) -> Result<Self> {
        if factor == 0 || self.len() % factor != 0 || self.offset % factor != 0 {
            return Err(Error::Config(format!("cannot coarsen {} steps by {factor}", self.len())));
        }
        let all = self.increments.len() / self.k;
        let mut inc = vec![0.0; all / factor * self.k];
        for m in 0..all {
            for j in 0..self.k {
                inc[(m / factor) * self.k + j] += self.increments[m * self.k + j];
            }
        }
        Ok(Self { k: self.k, dt: self.dt * factor as f64, increments: Arc::new(inc), offset: self.offset / factor })
    }
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<Point>,
    /// The state left the overflow guard; the trajectory stops there.
    pub diverged: bool,
}

impl Trajectory {
    pub fn last(&self) -> &Point {
        self.states.last().unwrap()
    }
}

fn check_path(sys: &SdeSystem, path: &NoisePath, steps: usize) -> Result<()> {
    if path.k != sys.noise_dim {
        return Err(Error::Config(format!("path has {}-dimensional noise, system needs {}", path.k, sys.noise_dim)));
    }
    if (path.dt - sys.dt).abs() > 1e-15 * sys.dt {
        return Err(Error::Config(format!("path step {} differs from system step {}", path.dt, sys.dt)));
    }
    if path.len() < steps {
        return Err(Error::Config(format!("path has {} increments, {steps} needed", path.len())));
    }
    Ok(())
}

/// Integrate `steps` steps in place; returns the step at which the guard
/// tripped.
fn integrate(sys: &SdeSystem, path: &NoisePath, x: &mut [f64], steps: usize, mut record: Option<&mut Vec<Point>>) -> Option<usize> {
    let mut scratch = sys.scratch();
    for m in 0..steps {
        let t = (path.offset + m) as f64 * sys.dt;
        sys.em_step(t, path.increment(m), x, &mut scratch);
        if let Some(r) = record.as_deref_mut() {
            r.push(x.to_vec());
        }
        if x.iter().any(|v| !(v.abs() <= OVERFLOW_GUARD)) {
            return Some(m + 1);
        }
    }
    None
}

/// Euler–Maruyama over the system horizon.
pub fn em_integrate(sys: &SdeSystem, x0: &[f64], path: &NoisePath) -> Result<Trajectory> {
    if x0.len() != sys.dim || x0.iter().any(|v| !v.is_finite()) {
        return Err(Error::Config("start point must be finite with the system dimension".into()));
    }
    let steps = sys.steps();
    check_path(sys, path, steps)?;
    let mut states = Vec::with_capacity(steps + 1);
    states.push(x0.to_vec());
    let mut x = x0.to_vec();
    let stop = integrate(sys, path, &mut x, steps, Some(&mut states));
    let t0 = path.offset as f64 * sys.dt;
    let times = (0..states.len()).map(|m| t0 + m as f64 * sys.dt).collect();
    Ok(Trajectory { times, states, diverged: stop.is_some() })
}

/// `x ↦ X_t(ω)x` for one path.
#[derive(Clone, Debug)]
pub struct FlowMap {
    sys: SdeSystem,
    path: NoisePath,
    steps: usize,
}

impl FlowMap {
    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn apply(&self, x0: &[f64]) -> Result<Point> {
        let mut x = x0.to_vec();
        match integrate(&self.sys, &self.path, &mut x, self.steps, None) {
            None => Ok(x),
            Some(step) => Err(Error::Overflow { step }),
        }
    }
}

pub fn flow_map(sys: &SdeSystem, path: &NoisePath, t: f64) -> Result<FlowMap> {
    let steps = grid_steps(t, sys.dt).ok_or(Error::OffGrid(t))?;
    check_path(sys, path, steps)?;
    Ok(FlowMap { sys: sys.clone(), path: path.clone(), steps })
}

/// `max_i |X_{t+s}(ω)x − X_t(θ(s)ω)(X_s(ω)x)|` on grid times.
pub fn flow_cocycle_residual(sys: &SdeSystem, path: &NoisePath, s: f64, t: f64, x: &[f64]) -> Result<f64> {
    let whole = flow_map(sys, path, s + t)?.apply(x)?;
    let first = flow_map(sys, path, s)?;
    let second = flow_map(sys, &path.shift(first.steps)?, t)?;
    let split = second.apply(&first.apply(x)?)?;
    Ok(whole.iter().zip(&split).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
}

/// One Euler–Maruyama step per noise symbol.
impl RandomSystem for SdeSystem {
    fn name(&self) -> String {
        format!("{}[eps={}; dt={}]", self.name, self.eps, self.dt)
    }

    fn space(&self) -> StateSpace {
        self.space.clone()
    }

    fn symbol_width(&self) -> usize {
        gaussian_width(self.noise_dim)
    }

    fn fiber_step(&self, k: u64, symbol: &[f64], x: &mut [f64]) {
        let mut dw = [0.0; 8];
        let dw = &mut dw[..self.noise_dim];
        gaussian_increment(symbol, self.dt, dw);
        let mut scratch = self.scratch();
        self.em_step(k as f64 * self.dt, dw, x, &mut scratch);
    }

    /// `I + Df·Δt`; exact for additive noise.
    fn fiber_jacobian(&self, k: u64, _symbol: &[f64], x: &[f64], out: &mut DMatrix<f64>) -> bool {
        let (Some(jac), true) = (&self.drift_jacobian, self.additive) else {
            return false;
        };
        let n = self.dim;
        let mut buf = vec![0.0; n * n];
        jac(k as f64 * self.dt, x, &mut buf);
        for i in 0..n {
            for j in 0..n {
                out[(i, j)] = if i == j { 1.0 } else { 0.0 } + buf[i * n + j] * self.dt;
            }
        }
        true
    }
}

pub fn builtin_sdes() -> Vec<MapInfo> {
    vec![
        MapInfo { name: "ou", params: &[("theta", 1.0)], description: "Ornstein-Uhlenbeck dX = -theta X dt + eps dW" },
        MapInfo { name: "pure_noise", params: &[("dim", 1.0)], description: "dX = eps dW" },
        MapInfo { name: "double_well", params: &[], description: "dX = (X - X^3) dt + eps dW, minima at -1 and 1" },
        MapInfo { name: "linear2d", params: &[("rate", 1.0)], description: "dX = -rate X dt + eps dW in the plane" },
    ]
}

fn identity_diffusion(n: usize) -> MatrixField {
    Arc::new(move |_, _, s: &mut [f64]| {
        s.fill(0.0);
        for i in 0..n {
            s[i * n + i] = 1.0;
        }
    })
}

fn linear_sink(name: &str, rate: f64, n: usize, eps: f64, dt: f64, horizon: f64) -> Result<SdeSystem> {
    let drift: VectorField = Arc::new(move |_, x: &[f64], f: &mut [f64]| {
        for (fi, xi) in f.iter_mut().zip(x) {
            *fi = -rate * xi;
        }
    });
    let jac: MatrixField = Arc::new(move |_, _, j: &mut [f64]| {
        j.fill(0.0);
        for i in 0..n {
            j[i * n + i] = -rate;
        }
    });
    Ok(SdeSystem::new(name, n, n, drift, identity_diffusion(n), eps, dt, horizon)?.with_drift_jacobian(jac, true))
}

pub fn builtin_sde(name: &str, params: &BTreeMap<String, f64>, eps: f64, dt: f64, horizon: f64) -> Result<SdeSystem> {
    let info = builtin_sdes()
        .into_iter()
        .find(|m| m.name == name)
        .ok_or_else(|| Error::Config(format!("unknown SDE `{name}`")))?;
    for key in params.keys() {
        if !info.params.iter().any(|(k, _)| k == key) {
            return Err(Error::Config(format!("SDE `{name}` has no parameter `{key}`")));
        }
    }
    let get = |k: &str| params.get(k).copied().unwrap_or_else(|| info.params.iter().find(|p| p.0 == k).unwrap().1);
    match name {
        "ou" => linear_sink("ou", get("theta"), 1, eps, dt, horizon),
        "linear2d" => linear_sink("linear2d", get("rate"), 2, eps, dt, horizon),
        "pure_noise" => {
            let d = get("dim");
            if d < 1.0 || d.fract() != 0.0 || d > 8.0 {
                return Err(Error::Config(format!("pure_noise dim must be an integer in 1..=8, got {d}")));
            }
            let n = d as usize;
            let drift: VectorField = Arc::new(|_, _, f: &mut [f64]| f.fill(0.0));
            let jac: MatrixField = Arc::new(|_, _, j: &mut [f64]| j.fill(0.0));
            Ok(SdeSystem::new("pure_noise", n, n, drift, identity_diffusion(n), eps, dt, horizon)?.with_drift_jacobian(jac, true))
        }
        "double_well" => {
            let drift: VectorField = Arc::new(|_, x: &[f64], f: &mut [f64]| f[0] = x[0] - x[0] * x[0] * x[0]);
            let jac: MatrixField = Arc::new(|_, x: &[f64], j: &mut [f64]| j[0] = 1.0 - 3.0 * x[0] * x[0]);
            Ok(SdeSystem::new("double_well", 1, 1, drift, identity_diffusion(1), eps, dt, horizon)?
                .with_drift_jacobian(jac, true)
                .with_space(StateSpace::euclidean_box(vec![(-2.0, 2.0)])))
        }
        _ => unreachable!(),
    }
}

/// Limit candidate for a flow study.
#[derive(Clone, Debug)]
pub enum SinkCandidate {
    /// Point mass; any dimension.
    Dirac(Point),
    /// Binned law on the study grid; one-dimensional systems only.
    Binned(BinnedMeasure),
}

impl SinkCandidate {
    pub fn label(&self) -> String {
        match self {
            Self::Dirac(p) => format!("dirac{p:?}"),
            Self::Binned(m) => format!("binned({} bins)", m.grid.n),
        }
    }
}

#[derive(Clone, Debug)]
pub struct FlowStudyOptions {
    pub paths: usize,
    pub seed: u64,
    /// Occupation is recorded on `[burn_in, horizon]`.
    pub burn_in: f64,
    /// Record every `thin`-th grid step.
    pub thin: usize,
    /// Starts are uniform on this box.
    pub start_box: Vec<(f64, f64)>,
    /// Odd bin count on one-dimensional systems, so a centered sink sits on a
    /// bin center.
    pub bins: usize,
}

#[derive(Clone, Debug)]
pub struct FlowStudyRow {
    pub eps: f64,
    pub w1: f64,
    pub diverged: usize,
}

#[derive(Clone, Debug)]
pub struct FlowStudy {
    pub candidate: String,
    pub rows: Vec<FlowStudyRow>,
    /// W₁ is non-increasing as ε decreases and strictly smaller at the end.
    pub decreasing: bool,
}

/// Long-run occupation laws along a decreasing ε schedule, compared with a
/// candidate limit.
pub fn zero_noise_flow_study(sys: &SdeSystem, schedule: &[f64], candidate: &SinkCandidate, opts: &FlowStudyOptions) -> Result<FlowStudy> {
    if schedule.windows(2).any(|w| w[1] >= w[0]) || schedule.is_empty() {
        return Err(Error::Config("noise schedule must be nonempty and strictly decreasing".into()));
    }
    if opts.start_box.len() != sys.dim || opts.paths == 0 || opts.thin == 0 {
        return Err(Error::Config("flow study needs paths, thinning, and a start box of the system dimension".into()));
    }
    let first = grid_steps(opts.burn_in, sys.dt).filter(|&b| b <= sys.steps()).ok_or(Error::OffGrid(opts.burn_in))?;
    let grid = if sys.dim == 1 {
        let (lo, hi) = sys.space.bounds(0);
        if opts.bins % 2 == 0 {
            return Err(Error::Config(format!("flow studies use an odd bin count, got {}", opts.bins)));
        }
        Some(Grid::interval(lo, hi, opts.bins))
    } else {
        None
    };
    let target = match (candidate, &grid) {
        (SinkCandidate::Dirac(p), _) if p.len() != sys.dim => {
            return Err(Error::Config("candidate point has the wrong dimension".into()))
        }
        (SinkCandidate::Dirac(p), Some(g)) => Some(BinnedMeasure::dirac(g.clone(), p[0])),
        (SinkCandidate::Dirac(_), None) => None,
        (SinkCandidate::Binned(m), Some(g)) if m.grid == *g => Some(m.clone()),
        (SinkCandidate::Binned(_), _) => {
            return Err(Error::PartitionMismatch("binned candidates need a one-dimensional system on the study grid".into()))
        }
    };
    let mut rows = Vec::new();
    for &eps in schedule {
        let s = sys.with_eps(eps)?;
        let runs: Vec<(Vec<Point>, bool)> = (0..opts.paths)
            .into_par_iter()
            .map(|i| {
                let path = NoisePath::generate(opts.seed, i as u64, s.noise_dim, s.dt, s.steps());
                let mut u = vec![0.0; s.dim];
                NoiseSequence::new(opts.seed ^ 0x57a7, i as u64, s.dim).symbol(0, &mut u);
                let mut x: Point = opts.start_box.iter().zip(&u).map(|(&(a, b), v)| a + (b - a) * v).collect();
                let mut scratch = s.scratch();
                let mut kept = Vec::new();
                for m in 0..s.steps() {
                    s.em_step(m as f64 * s.dt, path.increment(m), &mut x, &mut scratch);
                    if x.iter().any(|v| !(v.abs() <= OVERFLOW_GUARD)) {
                        return (kept, true);
                    }
                    if m + 1 >= first && (m + 1 - first) % opts.thin == 0 {
                        kept.push(x.clone());
                    }
                }
                (kept, false)
            })
            .collect();
        let diverged = runs.iter().filter(|r| r.1).count();
        let pts: Vec<&Point> = runs.iter().flat_map(|r| &r.0).collect();
        if pts.is_empty() {
            return Err(Error::InsufficientSamples(format!("no occupation samples at eps={eps}")));
        }
        let w1 = match (&target, candidate) {
            (Some(t), _) => {
                let mu = BinnedMeasure::from_samples(grid.clone().unwrap(), pts.iter().map(|p| &p[0]))?;
                wasserstein1(&mu, t)?
            }
            (None, SinkCandidate::Dirac(p)) => {
                pts.iter().map(|x| x.iter().zip(p).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt()).sum::<f64>()
                    / pts.len() as f64
            }
            _ => unreachable!(),
        };
        rows.push(FlowStudyRow { eps, w1, diverged });
    }
    let decreasing = rows.windows(2).all(|w| w[1].w1 <= w[0].w1) && rows.last().unwrap().w1 < rows[0].w1;
    Ok(FlowStudy { candidate: candidate.label(), rows, decreasing })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::skew::flow;

    fn ou(eps: f64, dt: f64, horizon: f64) -> SdeSystem {
        builtin_sde("ou", &BTreeMap::new(), eps, dt, horizon).unwrap()
    }

    #[test]
    fn deterministic_decay_matches_exponential() {
        for dt in [1e-2, 1e-3] {
            let s = ou(0.0, dt, 1.0);
            let path = NoisePath::generate(1, 0, 1, dt, s.steps());
            let tr = em_integrate(&s, &[1.0], &path).unwrap();
            assert!((tr.last()[0] - (-1f64).exp()).abs() < 2.0 * dt);
            // zero noise is the plain Euler recursion, bit for bit
            let euler = (1.0 - dt).powi(s.steps() as i32);
            let mut x = 1.0f64;
            for _ in 0..s.steps() {
                x += -x * dt;
            }
            assert_eq!(tr.last()[0], x);
            assert!((x - euler).abs() < 1e-14);
        }
    }

    #[test]
    fn pure_noise_sums_increments() {
        let s = builtin_sde("pure_noise", &BTreeMap::from([("dim".into(), 2.0)]), 1.0, 0.01, 1.0).unwrap();
        let path = NoisePath::generate(3, 1, 2, 0.01, 100);
        let tr = em_integrate(&s, &[0.5, -0.5], &path).unwrap();
        let mut sum = [0.5, -0.5];
        for m in 0..100 {
            sum[0] += path.increment(m)[0];
            sum[1] += path.increment(m)[1];
        }
        assert_eq!(tr.last()[0], sum[0]);
        assert_eq!(tr.last()[1], sum[1]);
    }

    #[test]
    fn increments_are_standard_gaussian() {
        let (dt, len) = (0.01, 40_000usize);
        let path = NoisePath::generate(9, 0, 2, dt, len);
        let n = len as f64;
        for j in 0..2 {
            let mean = (0..len).map(|m| path.increment(m)[j]).sum::<f64>() / n;
            let var = (0..len).map(|m| path.increment(m)[j].powi(2)).sum::<f64>() / n;
            assert!(mean.abs() < 4.0 * (dt / n).sqrt());
            assert!((var - dt).abs() < 4.0 * dt * (2.0 / n).sqrt());
        }
        let cov = (0..len).map(|m| path.increment(m)[0] * path.increment(m)[1]).sum::<f64>() / n;
        assert!(cov.abs() < 4.0 * dt / n.sqrt());
    }

    #[test]
    fn flow_at_zero_is_identity() {
        let s = ou(0.3, 0.01, 1.0);
        let path = NoisePath::generate(0, 0, 1, 0.01, 100);
        let f = flow_map(&s, &path, 0.0).unwrap();
        assert_eq!(f.apply(&[0.7]).unwrap(), vec![0.7]);
        assert!(matches!(flow_map(&s, &path, 0.0105), Err(Error::OffGrid(_))));
    }

    #[test]
    fn linear_flow_contracts_by_euler_factor() {
        let s = builtin_sde("linear2d", &BTreeMap::new(), 0.5, 0.01, 2.0).unwrap();
        let path = NoisePath::generate(4, 2, 2, 0.01, 200);
        let f = flow_map(&s, &path, 2.0).unwrap();
        let (a, b) = (f.apply(&[1.0, 0.0]).unwrap(), f.apply(&[0.0, 0.0]).unwrap());
        let factor = (1.0 - 0.01f64).powi(200);
        assert!(((a[0] - b[0]) - factor).abs() < 1e-12);
        assert!((a[1] - b[1]).abs() < 1e-12);
    }

    #[test]
    fn grid_cocycle_is_exact() {
        let params = BTreeMap::new();
        for name in ["ou", "double_well", "linear2d", "pure_noise"] {
            let s = builtin_sde(name, &params, 0.3, 0.01, 4.0).unwrap();
            let path = NoisePath::generate(11, 5, s.noise_dim, 0.01, 400);
            for (a, b) in [(0.0, 1.0), (0.37, 1.5), (1.0, 3.0), (2.5, 0.01)] {
                let x = vec![0.4; s.dim];
                assert!(flow_cocycle_residual(&s, &path, a, b, &x).unwrap() < 1e-12, "{name} {a} {b}");
            }
        }
    }

    #[test]
    fn fiber_steps_agree_with_paths() {
        let s = ou(0.2, 0.01, 1.0);
        let omega = NoiseSequence::new(21, 3, s.symbol_width());
        let path = NoisePath::generate(21, 3, 1, 0.01, 100);
        let a = flow(&s, &omega, 100, &[0.3]);
        let b = flow_map(&s, &path, 1.0).unwrap().apply(&[0.3]).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn flow_maps_are_injective_on_a_grid() {
        let s = builtin_sde("double_well", &BTreeMap::new(), 0.2, 0.01, 2.0).unwrap();
        let path = NoisePath::generate(2, 0, 1, 0.01, 200);
        let f = flow_map(&s, &path, 2.0).unwrap();
        let ys: Vec<f64> = (0..200).map(|i| f.apply(&[-1.5 + 3.0 * i as f64 / 199.0]).unwrap()[0]).collect();
        assert!(ys.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn divergence_is_flagged() {
        let drift: VectorField = Arc::new(|_, x: &[f64], f: &mut [f64]| f[0] = x[0] * x[0]);
        let s = SdeSystem::new("blowup", 1, 1, drift, identity_diffusion(1), 0.0, 0.1, 10.0).unwrap();
        let tr = em_integrate(&s, &[1.0], &NoisePath::zeros(1, 0.1, 100)).unwrap();
        assert!(tr.diverged);
        assert!(tr.states.len() < 101);
    }

    #[test]
    fn horizon_must_sit_on_grid() {
        let drift: VectorField = Arc::new(|_, _, f: &mut [f64]| f[0] = 0.0);
        assert!(SdeSystem::new("x", 1, 1, drift, identity_diffusion(1), 0.0, 0.3, 1.0).is_err());
    }

    #[test]
    fn strong_error_halves_with_step() {
        // coarse paths are sums of a fine reference path
        let (dt, horizon, paths) = (0.02, 1.0, 400);
        let fine = dt / 32.0;
        let mut errs = [0.0; 2];
        for i in 0..paths {
            let s_ref = ou(1.0, fine, horizon);
            let p = NoisePath::generate(77, i, 1, fine, s_ref.steps());
            let reference = em_integrate(&s_ref, &[1.0], &p).unwrap().last()[0];
            for (e, h) in errs.iter_mut().zip([dt, dt / 2.0]) {
                let pc = p.coarsen((h / fine).round() as usize).unwrap();
                let x = em_integrate(&ou(1.0, h, horizon), &[1.0], &pc).unwrap().last()[0];
                *e += (x - reference).abs() / paths as f64;
            }
        }
        let ratio = errs[0] / errs[1];
        assert!((1.2..=2.8).contains(&ratio), "{errs:?}");
    }

    #[test]
    fn deterministic_sink_is_exact_dirac() {
        let s = ou(0.0, 0.01, 20.0);
        let opts = FlowStudyOptions { paths: 8, seed: 0, burn_in: 19.0, thin: 10, start_box: vec![(-1.0, 1.0)], bins: 401 };
        let st = zero_noise_flow_study(&s, &[0.0], &SinkCandidate::Dirac(vec![0.0]), &opts).unwrap();
        assert_eq!(st.rows[0].w1, 0.0);
    }

    #[test]
    fn double_well_mass_settles_on_minima() {
        let s = builtin_sde("double_well", &BTreeMap::new(), 0.0, 0.01, 30.0).unwrap();
        let grid = Grid::interval(-2.0, 2.0, 401);
        let mut w = vec![0.0; 401];
        w[grid.index_of(-1.0)] += 0.5;
        w[grid.index_of(1.0)] += 0.5;
        let mix = SinkCandidate::Binned(BinnedMeasure::new(grid, w).unwrap());
        let opts = FlowStudyOptions { paths: 400, seed: 5, burn_in: 10.0, thin: 20, start_box: vec![(-2.0, 2.0)], bins: 401 };
        let st = zero_noise_flow_study(&s, &[0.4, 0.2, 0.1], &mix, &opts).unwrap();
        assert!(st.decreasing, "{st:?}");
        // occupation oracle at the smallest noise: nearly all time within 0.5 of a minimum
        let s = s.with_eps(0.1).unwrap();
        let mut near = 0usize;
        let mut total = 0usize;
        for i in 0..200u64 {
            let path = NoisePath::generate(8, i, 1, 0.01, s.steps());
            let tr = em_integrate(&s, &[if i % 2 == 0 { 0.5 } else { -0.5 }], &path).unwrap();
            for x in &tr.states[1000..] {
                total += 1;
                near += usize::from((x[0].abs() - 1.0).abs() < 0.5);
            }
        }
        assert!(near as f64 / total as f64 > 0.99);
    }
}
