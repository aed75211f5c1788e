// SPDX-License-Identifier: Apache-2.0

//! Partition entropy and the metric entropy of random dynamical systems.
//!
//! For a fixed noise realization `ω` every start point is pushed through the
//! same fiber maps, so the itinerary of `x` through `ξ` labels the cell of
//! `⋁_{i<n} (T^i_ω)^{-1} ξ` containing `x`. Itineraries are interned
//! incrementally: the block id at depth `n+1` is a function of the id at depth
//! `n` and the next symbol.

use std::collections::HashMap;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::kernels::TransitionKernel;
use crate::lyapunov::{qr_lyapunov, MatrixCocycle};
use crate::measures::BinnedMeasure;
use crate::skew::{NoiseSequence, RandomSystem, SkewState, EnsembleSummary};
use crate::space::{Point, StateSpace};

/// Product partition of a flat space by cut points along each coordinate.
///
/// Cells are the boxes between consecutive cuts; on periodic coordinates the
/// point `0` is always a cut.
#[derive(Clone, Debug, PartialEq)]
pub struct Partition {
    pub name: String,
    space: StateSpace,
    cuts: Vec<Vec<f64>>,
}

impl Partition {
    /// `cuts[d]` must lie strictly inside the range of coordinate `d`.
    pub fn new(name: impl Into<String>, space: StateSpace, mut cuts: Vec<Vec<f64>>) -> Result<Self> {
        if cuts.len() != space.dim() {
            return Err(Error::Config(format!("{} cut lists for a {}-dimensional space", cuts.len(), space.dim())));
        }
        for (d, c) in cuts.iter_mut().enumerate() {
            let (lo, hi) = space.bounds(d);
            c.sort_by(f64::total_cmp);
            c.dedup();
            if c.iter().any(|&v| !(v > lo && v < hi)) {
                return Err(Error::Config(format!("cut outside ({lo}, {hi}) on coordinate {d}")));
            }
        }
        Ok(Self { name: name.into(), space, cuts })
    }

    /// `2^level` equal cells along every coordinate.
    pub fn dyadic(space: &StateSpace, level: u32) -> Self {
        let m = 1usize << level;
        let cuts = (0..space.dim())
            .map(|d| {
                let (lo, hi) = space.bounds(d);
                (1..m).map(|k| lo + (hi - lo) * k as f64 / m as f64).collect()
            })
            .collect();
        Self { name: format!("dyadic{level}"), space: space.clone(), cuts }
    }

    /// Dyadic partitions at levels 1 through 4.
    pub fn catalog(space: &StateSpace) -> Vec<Self> {
        (1..=4).map(|l| Self::dyadic(space, l)).collect()
    }

    pub fn space(&self) -> &StateSpace {
        &self.space
    }

    pub fn cuts(&self, d: usize) -> &[f64] {
        &self.cuts[d]
    }

    pub fn cell_count(&self) -> usize {
        self.cuts.iter().map(|c| c.len() + 1).product()
    }

    /// Index of the cell containing `x` (mixed radix over coordinates).
    #[inline]
    pub fn label(&self, x: &[f64]) -> usize {
        let mut idx = 0;
        for (c, &v) in self.cuts.iter().zip(x) {
            idx = idx * (c.len() + 1) + c.partition_point(|&cut| cut <= v);
        }
        idx
    }

    /// `ξ ∨ ζ`: the union of the cut sets.
    pub fn join(&self, other: &Self) -> Result<Self> {
        if self.space != other.space {
            return Err(Error::PartitionMismatch(format!("{} and {} live on different spaces", self.name, other.name)));
        }
        let cuts = self.cuts.iter().zip(&other.cuts).map(|(a, b)| a.iter().chain(b).copied().collect()).collect();
        Self::new(format!("{}|{}", self.name, other.name), self.space.clone(), cuts)
    }

    /// Cells of a one-dimensional partition as `[a, b)`.
    pub fn intervals(&self) -> Vec<(f64, f64)> {
        let (lo, hi) = self.space.bounds(0);
        let mut edges = vec![lo];
        edges.extend(&self.cuts[0]);
        edges.push(hi);
        edges.windows(2).map(|w| (w[0], w[1])).collect()
    }
}

fn plug_in(counts: impl Iterator<Item = u64>, total: u64) -> f64 {
    let t = total as f64;
    counts.filter(|&c| c > 0).map(|c| {
        let p = c as f64 / t;
        -p * p.ln()
    }).sum()
}

/// `H_μ(ξ) = −Σ μ(R) log μ(R)` in nats; bins straddling a cut are split in
/// proportion to length.
pub fn partition_entropy(mu: &BinnedMeasure, xi: &Partition) -> Result<f64> {
    if xi.space.dim() != 1 {
        return Err(Error::Unsupported("partition entropy of binned measures in dimension > 1".into()));
    }
    let (lo, hi) = xi.space.bounds(0);
    if (mu.grid.lo, mu.grid.hi) != (lo, hi) {
        return Err(Error::PartitionMismatch("measure grid and partition cover different ranges".into()));
    }
    let h = mu.grid.width();
    let cells = xi.intervals();
    let mut mass = vec![0.0; cells.len()];
    for (i, &w) in mu.weights.iter().enumerate() {
        if w == 0.0 {
            continue;
        }
        let (a, b) = (mu.grid.edge(i), mu.grid.edge(i) + h);
        for (m, &(c, d)) in mass.iter_mut().zip(&cells) {
            if a >= c && b <= d {
                *m += w;
            } else {
                *m += w * (b.min(d) - a.max(c)).max(0.0) / h;
            }
        }
    }
    Ok(mass.iter().filter(|&&p| p > 0.0).map(|&p| -p * p.ln()).sum())
}

/// Law of the start points used to code itineraries.
#[derive(Clone, Debug)]
pub enum StartDistribution {
    /// Normalized volume.
    Lebesgue,
    /// Uniform within each bin, bins drawn by weight.
    Binned(BinnedMeasure),
    /// Lebesgue pushed through `steps` independent noisy steps of the system.
    BurnIn { steps: usize },
}

impl StartDistribution {
    pub fn label(&self) -> String {
        match self {
            Self::Lebesgue => "lebesgue".into(),
            Self::Binned(m) => format!("binned({} bins)", m.grid.n),
            Self::BurnIn { steps } => format!("burn_in({steps})"),
        }
    }

    /// `count` independent starts; `stream` separates draws for different `ω`.
    pub fn sample(&self, system: &dyn RandomSystem, count: usize, seed: u64, stream: u64) -> Vec<Point> {
        let dim = system.space().dim();
        self.sample_flat(system, count, seed, stream).chunks(dim).map(<[f64]>::to_vec).collect()
    }

    /// Like [`sample`](Self::sample) but packed row-major, `dim` coordinates per start.
    pub fn sample_flat(&self, system: &dyn RandomSystem, count: usize, seed: u64, stream: u64) -> Vec<f64> {
        let space = system.space();
        let dim = space.dim();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        let lebesgue = |rng: &mut ChaCha8Rng, out: &mut Vec<f64>| {
            for d in 0..dim {
                let (lo, hi) = space.bounds(d);
                out.push(lo + (hi - lo) * rng.random::<f64>());
            }
        };
        let mut xs = Vec::with_capacity(count * dim);
        match self {
            Self::Lebesgue => (0..count).for_each(|_| lebesgue(&mut rng, &mut xs)),
            Self::Binned(m) => {
                let mut cdf = Vec::with_capacity(m.weights.len());
                let mut acc = 0.0;
                for w in &m.weights {
                    acc += w;
                    cdf.push(acc);
                }
                let h = m.grid.width();
                for _ in 0..count {
                    let u = rng.random::<f64>() * acc;
                    let i = cdf.partition_point(|&c| c <= u).min(cdf.len() - 1);
                    xs.push(m.grid.edge(i) + h * rng.random::<f64>());
                }
            }
            Self::BurnIn { steps } => {
                (0..count).for_each(|_| lebesgue(&mut rng, &mut xs));
                let width = system.symbol_width();
                let base = rng.random::<u64>();
                xs.par_chunks_mut(dim).enumerate().for_each(|(i, x)| {
                    let mut reader = NoiseSequence::new(base, i as u64, width).reader();
                    for _ in 0..*steps {
                        let (k, u) = reader.next_symbol();
                        system.fiber_step(k, u, x);
                    }
                });
            }
        }
        xs
    }
}

#[derive(Clone, Debug)]
pub struct EntropyOptions {
    pub n_max: usize,
    pub omega_samples: usize,
    pub samples: usize,
    pub seed: u64,
}

impl Default for EntropyOptions {
    fn default() -> Self {
        Self { n_max: 14, omega_samples: 4, samples: 1_000_000, seed: 0 }
    }
}

/// Estimate of `h_μ(ξ) = inf_n (1/n) ∫ H_μ(⋁_{i<n} (T^i_ω)^{-1} ξ) dℙ(ω)`.
#[derive(Clone, Debug)]
pub struct EntropyEstimate {
    /// `min_n H_n/n` over the recorded curve, nats.
    pub value: f64,
    /// Depth attaining `value`.
    pub n_used: usize,
    pub omega_samples: usize,
    pub samples: usize,
    /// `(n, H_n/n, stderr over ω)`.
    pub curve: Vec<(usize, f64, f64)>,
    pub partition: String,
}

/// Plug-in block entropies `H_1, …` for one noise realization, stopping at
/// the first depth where `samples < 100 · (distinct blocks)`.
fn block_entropies(system: &dyn RandomSystem, omega: &NoiseSequence, mut xs: Vec<f64>, xi: &Partition, n_max: usize) -> Vec<f64> {
    let dim = system.space().dim();
    let total = (xs.len() / dim) as u64;
    let cells = xi.cell_count();
    let mut ids: Vec<u32> = xs.chunks(dim).map(|x| xi.label(x) as u32).collect();
    let mut distinct = cells;
    let mut out = Vec::new();
    let mut reader = omega.reader();
    for n in 1..=n_max {
        if n > 1 {
            let (k, u) = reader.next_symbol();
            let u = u.to_vec();
            xs.par_chunks_mut(dim).for_each(|x| system.fiber_step(k, &u, x));
            let mut table = vec![u32::MAX; distinct * cells];
            let mut next = 0u32;
            for (id, x) in ids.iter_mut().zip(xs.chunks(dim)) {
                let slot = &mut table[*id as usize * cells + xi.label(x)];
                if *slot == u32::MAX {
                    *slot = next;
                    next += 1;
                }
                *id = *slot;
            }
            distinct = next as usize;
        } else {
            // compact the depth-one labels
            let mut map = vec![u32::MAX; cells];
            let mut next = 0u32;
            for id in ids.iter_mut() {
                let slot = &mut map[*id as usize];
                if *slot == u32::MAX {
                    *slot = next;
                    next += 1;
                }
                *id = *slot;
            }
            distinct = next as usize;
        }
        if total < 100 * distinct as u64 {
            break;
        }
        let mut counts = vec![0u64; distinct];
        for &id in &ids {
            counts[id as usize] += 1;
        }
        out.push(plug_in(counts.into_iter(), total));
    }
    out
}

pub fn random_entropy(
    system: &dyn RandomSystem,
    starts: &StartDistribution,
    xi: &Partition,
    opts: &EntropyOptions,
) -> Result<EntropyEstimate> {
    if xi.space != system.space() {
        return Err(Error::PartitionMismatch(format!("partition {} is not on the space of {}", xi.name, system.name())));
    }
    if opts.omega_samples == 0 || opts.n_max == 0 {
        return Err(Error::Config("entropy needs n_max >= 1 and at least one noise sample".into()));
    }
    let width = system.symbol_width();
    let runs: Vec<Vec<f64>> = (0..opts.omega_samples)
        .into_par_iter()
        .map(|s| {
            let xs = starts.sample_flat(system, opts.samples, opts.seed, 1 + s as u64);
            let omega = NoiseSequence::new(opts.seed, s as u64, width);
            block_entropies(system, &omega, xs, xi, opts.n_max)
        })
        .collect();
    let depth = runs.iter().map(Vec::len).min().unwrap_or(0);
    if depth == 0 {
        return Err(Error::InsufficientSamples(format!(
            "{} starts cannot resolve the {} cells of {} (need 100 per observed cell); increase the sample",
            opts.samples,
            xi.cell_count(),
            xi.name
        )));
    }
    let curve: Vec<(usize, f64, f64)> = (0..depth)
        .map(|i| {
            let n = i + 1;
            let vals: Vec<f64> = runs.iter().map(|r| r[i] / n as f64).collect();
            let s = EnsembleSummary::from_values(&vals);
            (n, s.mean, s.stderr)
        })
        .collect();
    let (n_used, value) = curve.iter().map(|c| (c.0, c.1)).fold((0, f64::INFINITY), |a, b| if b.1 < a.1 { b } else { a });
    Ok(EntropyEstimate {
        value: value.max(0.0),
        n_used,
        omega_samples: opts.omega_samples,
        samples: opts.samples,
        curve,
        partition: xi.name.clone(),
    })
}

/// Maximum cell diameter of `⋁_{i≤d} (T^i_ω)^{-1} ξ` for `d = 0..=depth`.
#[derive(Clone, Debug)]
pub struct GeneratingCurve {
    pub partition: String,
    pub max_diameter: Vec<f64>,
    /// Volume-weighted mean of cell diameters.
    pub mean_diameter: Vec<f64>,
}

impl GeneratingCurve {
    /// Mean diameter shrinks by at least a factor 8 from depth 0 to the last
    /// depth. Thin cells near cut points can keep the maximum large on noisy
    /// systems even when almost every cell collapses.
    pub fn looks_generating(&self) -> bool {
        match (self.mean_diameter.first(), self.mean_diameter.last()) {
            (Some(&a), Some(&b)) => self.mean_diameter.len() > 1 && b < a / 8.0,
            _ => false,
        }
    }
}

/// Solve `f(x) = level` on `[a, b]` for nondecreasing `f`; returns the
/// smallest grid point of the bisection with `f ≥ level`.
fn solve_nondecreasing(f: &dyn Fn(f64) -> f64, a: f64, b: f64, level: f64) -> f64 {
    let (mut l, mut r) = (a, b);
    for _ in 0..200 {
        let m = 0.5 * (l + r);
        if m <= l || m >= r {
            break;
        }
        if f(m) < level {
            l = m;
        } else {
            r = m;
        }
    }
    r
}

/// Diameter of a union of arcs under the space metric.
fn set_diameter(arcs: &[(f64, f64)], periodic: bool) -> f64 {
    let pts: Vec<f64> = arcs.iter().flat_map(|&(a, b)| [a, b]).collect();
    if !periodic {
        let lo = pts.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = pts.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        return hi - lo;
    }
    let contains = |y: f64| arcs.iter().any(|&(a, b)| {
        let y = y.rem_euclid(1.0);
        y >= a && y <= b
    });
    if pts.iter().any(|&p| contains(p + 0.5)) {
        return 0.5;
    }
    let mut best: f64 = 0.0;
    for (i, &p) in pts.iter().enumerate() {
        for &q in &pts[i..] {
            let d = (p - q).abs().rem_euclid(1.0);
            best = best.max(d.min(1.0 - d));
        }
    }
    best
}

/// Exact cell structure of the refined partitions for one-dimensional kernels.
/// Boundaries are solved on the composed lifts of the fiber maps; diameters
/// are maxima over `omega_samples` realizations.
pub fn generating_check(kernel: &TransitionKernel, xi: &Partition, depth: usize, omega_samples: usize, seed: u64) -> Result<GeneratingCurve> {
    let space = kernel.space();
    if space.dim() != 1 || xi.space != space {
        return Err(Error::Unsupported("generating check needs a one-dimensional kernel and matching partition".into()));
    }
    let width = kernel.symbol_width();
    kernel.lift_step(&[0.5; 8][..width.max(1)], 0.5).ok_or_else(|| Error::Unsupported(format!("{} has no lift", kernel.name())))?;
    let periodic = space.is_periodic();
    let (lo, hi) = space.bounds(0);
    let mut max_diameter = vec![0.0f64; depth + 1];
    let mut mean_diameter = vec![0.0f64; depth + 1];
    let samples = omega_samples.max(1);
    for s in 0..samples {
        let omega = NoiseSequence::new(seed, s as u64, width);
        let symbols: Vec<Vec<f64>> = (0..depth as u64)
            .map(|k| {
                let mut u = vec![0.0; width];
                omega.symbol(k, &mut u);
                u
            })
            .collect();
        let lift = |i: usize, y: f64| -> f64 {
            let mut v = y;
            for u in &symbols[..i] {
                v = kernel.lift_step(u, v).unwrap();
            }
            v
        };
        let mut bounds = vec![lo, hi];
        bounds.extend(xi.cuts(0));
        for d in 0..=depth {
            if d > 0 {
                let i = d;
                let f = |y: f64| lift(i, y);
                let (fa, fb) = (f(lo), f(hi));
                for &c in xi.cuts(0) {
                    let levels: Vec<f64> = if periodic {
                        let m0 = (fa - c).floor() as i64;
                        let m1 = (fb - c).ceil() as i64;
                        (m0..=m1).map(|m| c + m as f64).collect()
                    } else {
                        vec![c]
                    };
                    for level in levels {
                        if level > fa && level < fb {
                            bounds.push(solve_nondecreasing(&f, lo, hi, level));
                        }
                    }
                }
                if periodic {
                    let m0 = fa.floor() as i64;
                    let m1 = fb.ceil() as i64;
                    for m in m0..=m1 {
                        let level = m as f64;
                        if level > fa && level < fb {
                            bounds.push(solve_nondecreasing(&f, lo, hi, level));
                        }
                    }
                }
            }
            let mut pts = bounds.clone();
            pts.sort_by(f64::total_cmp);
            pts.dedup();
            let mut cells: HashMap<Vec<usize>, Vec<(f64, f64)>> = HashMap::new();
            for w in pts.windows(2) {
                if w[1] <= w[0] {
                    continue;
                }
                let mut x = vec![0.5 * (w[0] + w[1])];
                let mut block = Vec::with_capacity(d + 1);
                block.push(xi.label(&x));
                for u in &symbols[..d] {
                    kernel.apply_symbol(u, &mut x);
                    block.push(xi.label(&x));
                }
                cells.entry(block).or_default().push((w[0], w[1]));
            }
            let mut mean = 0.0;
            for arcs in cells.values() {
                let diam = set_diameter(arcs, periodic);
                max_diameter[d] = max_diameter[d].max(diam);
                mean += diam * arcs.iter().map(|&(a, b)| b - a).sum::<f64>();
            }
            mean_diameter[d] += mean / ((hi - lo) * samples as f64);
        }
    }
    Ok(GeneratingCurve { partition: xi.name.clone(), max_diameter, mean_diameter })
}

#[derive(Clone, Debug)]
pub struct GapOptions {
    pub entropy: EntropyOptions,
    pub lyapunov_steps: usize,
    pub lyapunov_starts: usize,
    pub check_depth: usize,
}

impl Default for GapOptions {
    fn default() -> Self {
        Self {
            entropy: EntropyOptions { n_max: 256, ..EntropyOptions::default() },
            lyapunov_steps: 10_000,
            lyapunov_starts: 16,
            check_depth: 8,
        }
    }
}

/// `h ≤ Λ⁺` report.
#[derive(Clone, Debug)]
pub struct GapReport {
    pub system: String,
    pub h: f64,
    pub lambda_plus: f64,
    pub gap: f64,
    /// Catalog partition attaining `h`.
    pub partition: String,
    /// Whether `h` comes from partitions that passed the generating check.
    pub generating: bool,
    pub estimates: Vec<EntropyEstimate>,
    pub lambda_plus_stderr: f64,
}

/// `Λ⁺ − h` with `h` the smallest estimate over catalog partitions that pass
/// the generating check (all generating partitions share the same entropy,
/// and every finite-depth estimate is biased upward), falling back to the
/// whole catalog when none pass or the check does not apply.
pub fn entropy_formula_gap(kernel: Arc<TransitionKernel>, mu: &StartDistribution, opts: &GapOptions) -> Result<GapReport> {
    let space = kernel.space();
    let catalog = Partition::catalog(&space);
    let mut candidates = Vec::new();
    let mut generating = true;
    for xi in &catalog {
        match generating_check(&kernel, xi, opts.check_depth, 2, opts.entropy.seed) {
            Ok(c) if c.looks_generating() => candidates.push(xi.clone()),
            Ok(_) => {}
            Err(Error::Unsupported(_)) => {
                generating = false;
                candidates.push(xi.clone());
            }
            Err(e) => return Err(e),
        }
    }
    if candidates.is_empty() {
        generating = false;
        candidates = catalog;
    }
    let mut estimates = Vec::new();
    for xi in &candidates {
        match random_entropy(kernel.as_ref(), mu, xi, &opts.entropy) {
            Ok(e) => estimates.push(e),
            Err(Error::InsufficientSamples(_)) => continue,
            Err(e) => return Err(e),
        }
    }
    let best = estimates
        .iter()
        .min_by(|a, b| a.value.total_cmp(&b.value))
        .ok_or_else(|| Error::InsufficientSamples("no catalog partition could be resolved".into()))?;
    let (h, partition) = (best.value, best.partition.clone());

    let system: Arc<dyn RandomSystem> = kernel.clone();
    let cocycle = MatrixCocycle::derivative(system.clone());
    let starts = mu.sample(system.as_ref(), opts.lyapunov_starts, opts.entropy.seed ^ 0x5eed, 0);
    let width = system.symbol_width();
    let sums: Vec<f64> = starts
        .par_iter()
        .enumerate()
        .map(|(i, x)| {
            let st = SkewState::new(NoiseSequence::new(opts.entropy.seed ^ 0x1a9, i as u64, width), x.clone());
            qr_lyapunov(&cocycle, &st, opts.lyapunov_steps, 1).map(|s| s.positive_sum())
        })
        .collect::<Result<Vec<f64>>>()?;
    let lp = EnsembleSummary::from_values(&sums);
    Ok(GapReport {
        system: kernel.name(),
        h,
        lambda_plus: lp.mean,
        gap: lp.mean - h,
        partition,
        generating,
        estimates,
        lambda_plus_stderr: lp.stderr,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::Grid;
    use crate::space::{CircleExpanding, Identity, Rotation, DEFAULT_ALPHA};

    fn circle() -> StateSpace {
        StateSpace::circle()
    }

    #[test]
    fn partition_entropy_examples() {
        let g = Grid::circle(1000);
        let leb = BinnedMeasure::uniform(g.clone());
        assert!((partition_entropy(&leb, &Partition::dyadic(&circle(), 1)).unwrap() - 2f64.ln()).abs() < 1e-12);
        assert!((partition_entropy(&leb, &Partition::dyadic(&circle(), 2)).unwrap() - 4f64.ln()).abs() < 1e-12);
        let d = BinnedMeasure::dirac(g, 0.1);
        assert_eq!(partition_entropy(&d, &Partition::dyadic(&circle(), 1)).unwrap(), 0.0);
    }

    #[test]
    fn uniform_maximizes_entropy() {
        let g = Grid::circle(400);
        let xi = Partition::dyadic(&circle(), 2);
        let max = partition_entropy(&BinnedMeasure::uniform(g.clone()), &xi).unwrap();
        let raw: Vec<f64> = (0..400).map(|i| 1.0 + 0.5 * (i as f64 / 60.0).cos()).collect();
        let s: f64 = raw.iter().sum();
        let other = BinnedMeasure { grid: g, weights: raw.iter().map(|v| v / s).collect() };
        assert!(partition_entropy(&other, &xi).unwrap() < max);
    }

    #[test]
    fn joins_commute() {
        let a = Partition::new("a", circle(), vec![vec![0.3, 0.7]]).unwrap();
        let b = Partition::new("b", circle(), vec![vec![0.5]]).unwrap();
        let leb = BinnedMeasure::uniform(Grid::circle(1000));
        let ab = partition_entropy(&leb, &a.join(&b).unwrap()).unwrap();
        let ba = partition_entropy(&leb, &b.join(&a).unwrap()).unwrap();
        assert_eq!(ab, ba);
        assert!(a.join(&Partition::dyadic(&StateSpace::torus(2), 1)).is_err());
    }

    #[test]
    fn labels_follow_cuts() {
        let xi = Partition::dyadic(&StateSpace::torus(2), 1);
        assert_eq!(xi.cell_count(), 4);
        assert_eq!(xi.label(&[0.2, 0.7]), 1);
        assert_eq!(xi.label(&[0.6, 0.1]), 2);
    }

    #[test]
    fn doubling_entropy_is_log_two() {
        // itineraries of Lebesgue points under doubling are fair coin flips
        let k = TransitionKernel::delta(Arc::new(CircleExpanding::new(2)));
        let opts = EntropyOptions { n_max: 12, omega_samples: 1, samples: 400_000, seed: 1 };
        let e = random_entropy(&k, &StartDistribution::Lebesgue, &Partition::dyadic(&circle(), 1), &opts).unwrap();
        assert!((e.value / 2f64.ln() - 1.0).abs() < 0.05, "{e:?}");
        // H_n is subadditive along the curve
        let h: Vec<f64> = e.curve.iter().map(|c| c.1 * c.0 as f64).collect();
        for i in 0..h.len() {
            for j in 0..h.len() - i - 1 {
                assert!(h[i + j + 1] <= h[i] + h[j] + 1e-2);
            }
        }
    }

    #[test]
    fn rotation_blocks_grow_slowly() {
        let k = TransitionKernel::delta(Arc::new(Rotation::new(DEFAULT_ALPHA)));
        let opts = EntropyOptions { n_max: 20, omega_samples: 1, samples: 100_000, seed: 2 };
        let e = random_entropy(&k, &StartDistribution::Lebesgue, &Partition::dyadic(&circle(), 1), &opts).unwrap();
        let last = e.curve.last().unwrap();
        assert_eq!(last.0, 20);
        // at most 2n cylinder cells, so H_n <= log(2n)
        assert!(last.1 <= (40f64).ln() / 20.0 + 1e-9);
    }

    #[test]
    fn too_few_samples_is_an_error() {
        let k = TransitionKernel::delta(Arc::new(CircleExpanding::new(2)));
        let opts = EntropyOptions { n_max: 5, omega_samples: 1, samples: 500, seed: 1 };
        let r = random_entropy(&k, &StartDistribution::Lebesgue, &Partition::dyadic(&circle(), 4), &opts);
        assert!(matches!(r, Err(Error::InsufficientSamples(_))));
    }

    #[test]
    fn doubling_refinement_is_dyadic() {
        let k = TransitionKernel::delta(Arc::new(CircleExpanding::new(2)));
        let c = generating_check(&k, &Partition::dyadic(&circle(), 1), 8, 1, 0).unwrap();
        for (d, &m) in c.max_diameter.iter().enumerate() {
            assert_eq!(m, 0.5f64.powi(d as i32 + 1), "depth {d}");
        }
        assert!(c.looks_generating());
    }

    #[test]
    fn identity_never_refines() {
        let k = TransitionKernel::delta(Arc::new(Identity::new()));
        let c = generating_check(&k, &Partition::dyadic(&circle(), 2), 6, 1, 0).unwrap();
        assert!(c.max_diameter.iter().all(|&m| m == 0.25));
        assert!(c.mean_diameter.iter().all(|&m| m == 0.25));
        assert!(!c.looks_generating());
    }

    #[test]
    fn expanding_by_three_needs_four_cells() {
        let k = TransitionKernel::delta(Arc::new(CircleExpanding::new(3)));
        let two = generating_check(&k, &Partition::dyadic(&circle(), 1), 5, 1, 0).unwrap();
        let four = generating_check(&k, &Partition::dyadic(&circle(), 2), 5, 1, 0).unwrap();
        assert!(!two.looks_generating());
        assert!(four.looks_generating());
    }

    #[test]
    fn noisy_doubling_generates_in_mean() {
        let k = TransitionKernel::additive(Arc::new(CircleExpanding::new(2)), 0.05).unwrap();
        let c = generating_check(&k, &Partition::dyadic(&circle(), 1), 10, 2, 3).unwrap();
        assert!(c.looks_generating(), "{c:?}");
        assert!(c.mean_diameter.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn rotation_refines_slowly() {
        let k = TransitionKernel::delta(Arc::new(Rotation::new(DEFAULT_ALPHA)));
        let c = generating_check(&k, &Partition::dyadic(&circle(), 1), 12, 1, 0).unwrap();
        // at most 2(d+1) cells, so some cell is at least 1/(2(d+1)) wide
        for (d, &m) in c.max_diameter.iter().enumerate() {
            assert!(m >= 1.0 / (2.0 * (d as f64 + 1.0)) - 1e-12);
        }
    }

    #[test]
    fn set_diameter_on_circle() {
        assert!((set_diameter(&[(0.0, 0.1), (0.9, 1.0)], true) - 0.2).abs() < 1e-15);
        assert_eq!(set_diameter(&[(0.0, 0.1), (0.5, 0.55)], true), 0.5);
        assert!((set_diameter(&[(0.1, 0.2)], false) - 0.1).abs() < 1e-15);
    }
}
