// SPDX-License-Identifier: Apache-2.0

//! Stationary measures of one-dimensional kernels.
//!
//! The Ulam matrix is assembled without sampling. On each bin the integrand
//! `x ↦ p(bin j | x)` is piecewise smooth, with breaks only at map seams and
//! where an end of the support `c(x) ± r(x)` crosses a grid edge. Those breaks
//! are located by bisection and every piece is integrated by 5-point
//! Gauss–Legendre, which is exact for lifts of degree at most 3 and constant
//! radii.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::kernels::TransitionKernel;
use crate::skew::{NoiseSequence, RandomSystem};
use crate::space::{extended_lift, wrap_unit, Point, ScalarMap, SpaceKind, StateSpace};

const GL_NODES: [f64; 5] = [-0.906_179_845_938_664, -0.538_469_310_105_683_1, 0.0, 0.538_469_310_105_683_1, 0.906_179_845_938_664];
const GL_WEIGHTS: [f64; 5] =
    [0.236_926_885_056_189_1, 0.478_628_670_499_366_5, 0.568_888_888_888_888_9, 0.478_628_670_499_366_5, 0.236_926_885_056_189_1];

/// Uniform partition of the circle `[0,1)` or of an interval into `n` bins.
#[derive(Clone, Debug, PartialEq)]
pub struct Grid {
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
    pub periodic: bool,
}

impl Grid {
    pub fn circle(n: usize) -> Self {
        Self { lo: 0.0, hi: 1.0, n, periodic: true }
    }

    pub fn interval(lo: f64, hi: f64, n: usize) -> Self {
        Self { lo, hi, n, periodic: false }
    }

    /// Grid matching a one-dimensional state space.
    pub fn for_space(space: &StateSpace, n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::Config(format!("need at least 2 bins, got {n}")));
        }
        match space.kind() {
            SpaceKind::Circle => Ok(Self::circle(n)),
            SpaceKind::Interval(a, b) => Ok(Self::interval(*a, *b, n)),
            SpaceKind::EuclideanBox(b) if b.len() == 1 => Ok(Self::interval(b[0].0, b[0].1, n)),
            _ => Err(Error::Unsupported(format!("binned measures on {}-dimensional spaces", space.dim()))),
        }
    }

    pub fn width(&self) -> f64 {
        (self.hi - self.lo) / self.n as f64
    }

    pub fn edge(&self, i: usize) -> f64 {
        self.lo + i as f64 * self.width()
    }

    pub fn center(&self, i: usize) -> f64 {
        self.lo + (i as f64 + 0.5) * self.width()
    }

    /// Bin containing `x` (reduced mod 1 on the circle, clamped on an interval).
    pub fn index_of(&self, x: f64) -> usize {
        let x = if self.periodic { wrap_unit(x) } else { x };
        let k = ((x - self.lo) / self.width()).floor();
        (k.max(0.0) as usize).min(self.n - 1)
    }

    fn column(&self, k: i64) -> usize {
        if self.periodic {
            k.rem_euclid(self.n as i64) as usize
        } else {
            k.clamp(0, self.n as i64 - 1) as usize
        }
    }

    fn distance(&self, a: f64, b: f64) -> f64 {
        let d = (a - b).abs();
        if self.periodic {
            let d = d.rem_euclid(1.0);
            d.min(1.0 - d)
        } else {
            d
        }
    }
}

/// Probability vector over the bins of a [`Grid`].
#[derive(Clone, Debug, PartialEq)]
pub struct BinnedMeasure {
    pub grid: Grid,
    pub weights: Vec<f64>,
}

impl BinnedMeasure {
    pub fn new(grid: Grid, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != grid.n {
            return Err(Error::PartitionMismatch(format!("{} weights for {} bins", weights.len(), grid.n)));
        }
        if weights.iter().any(|w| !(*w >= 0.0)) {
            return Err(Error::Config("measure weights must be nonnegative".into()));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::Config(format!("measure weights sum to {total}, not 1")));
        }
        Ok(Self { grid, weights })
    }

    /// Lebesgue measure, normalized.
    pub fn uniform(grid: Grid) -> Self {
        let w = 1.0 / grid.n as f64;
        Self { weights: vec![w; grid.n], grid }
    }

    /// Unit mass in the bin containing `x`.
    pub fn dirac(grid: Grid, x: f64) -> Self {
        let mut weights = vec![0.0; grid.n];
        weights[grid.index_of(x)] = 1.0;
        Self { grid, weights }
    }

    /// Histogram of sample points; points outside an interval grid are clamped.
    pub fn from_samples<'a, I>(grid: Grid, samples: I) -> Result<Self>
    where
        I: IntoIterator<Item = &'a f64>,
    {
        let mut counts = vec![0u64; grid.n];
        let mut total = 0u64;
        for &x in samples {
            counts[grid.index_of(x)] += 1;
            total += 1;
        }
        if total == 0 {
            return Err(Error::InsufficientSamples("empty sample".into()));
        }
        let weights = counts.iter().map(|&c| c as f64 / total as f64).collect();
        Ok(Self { grid, weights })
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Mass of the bins that meet the closed arc `[lo, hi]` (lift coordinates
    /// on the circle).
    pub fn mass_meeting(&self, lo: f64, hi: f64) -> f64 {
        let h = self.grid.width();
        (0..self.grid.n)
            .filter(|&i| {
                let (a, b) = (self.grid.edge(i), self.grid.edge(i) + h);
                if self.grid.periodic {
                    [-1.0, 0.0, 1.0].iter().any(|s| a + s <= hi && b + s >= lo)
                } else {
                    a <= hi && b >= lo
                }
            })
            .map(|i| self.weights[i])
            .sum()
    }

    /// Merge groups of `factor` consecutive bins.
    pub fn coarsen(&self, factor: usize) -> Result<Self> {
        if factor == 0 || self.grid.n % factor != 0 {
            return Err(Error::PartitionMismatch(format!("cannot merge {} bins in groups of {factor}", self.grid.n)));
        }
        let grid = Grid { n: self.grid.n / factor, ..self.grid.clone() };
        let weights = self.weights.chunks(factor).map(|c| c.iter().sum()).collect();
        Ok(Self { grid, weights })
    }

    pub fn mean_distance_to(&self, x: f64) -> f64 {
        (0..self.grid.n).map(|i| self.weights[i] * self.grid.distance(self.grid.center(i), x)).sum()
    }
}

/// Sparse row-stochastic transfer matrix over a grid (CSR, plus its transpose
/// for left multiplication).
#[derive(Clone, Debug)]
pub struct UlamOperator {
    pub grid: Grid,
    pub kernel: String,
    /// Set when the kernel is singular and rows hold the pushforward of
    /// Lebesgue on each bin.
    pub pushforward: bool,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
    t_ptr: Vec<usize>,
    t_rows: Vec<usize>,
    t_vals: Vec<f64>,
}

impl UlamOperator {
    pub fn n(&self) -> usize {
        self.grid.n
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        (&self.cols[r.clone()], &self.vals[r])
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.n()).map(|i| self.row(i).1.iter().sum()).collect()
    }

    /// `μ ↦ μP`.
    pub fn apply_left(&self, mu: &[f64]) -> Vec<f64> {
        (0..self.n())
            .into_par_iter()
            .map(|j| {
                let r = self.t_ptr[j]..self.t_ptr[j + 1];
                self.t_rows[r.clone()].iter().zip(&self.t_vals[r]).map(|(&i, &p)| mu[i] * p).sum()
            })
            .collect()
    }

    fn from_rows(grid: Grid, kernel: String, pushforward: bool, rows: Vec<Vec<(usize, f64)>>) -> Self {
        let n = grid.n;
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        let mut col_count = vec![0usize; n];
        row_ptr.push(0);
        for row in &rows {
            for &(j, v) in row {
                cols.push(j);
                vals.push(v);
                col_count[j] += 1;
            }
            row_ptr.push(cols.len());
        }
        let mut t_ptr = vec![0usize; n + 1];
        for j in 0..n {
            t_ptr[j + 1] = t_ptr[j] + col_count[j];
        }
        let mut fill = t_ptr.clone();
        let mut t_rows = vec![0usize; vals.len()];
        let mut t_vals = vec![0.0; vals.len()];
        for i in 0..n {
            for k in row_ptr[i]..row_ptr[i + 1] {
                let j = cols[k];
                t_rows[fill[j]] = i;
                t_vals[fill[j]] = vals[k];
                fill[j] += 1;
            }
        }
        Self { grid, kernel, pushforward, row_ptr, cols, vals, t_ptr, t_rows, t_vals }
    }
}

/// Center and radius of a one-dimensional kernel's support, usable at any
/// real point of the base cell.
struct Support<'a> {
    kernel: &'a TransitionKernel,
    center: &'a dyn ScalarMap,
    periodic: bool,
}

impl<'a> Support<'a> {
    fn new(kernel: &'a TransitionKernel) -> Result<Self> {
        if kernel.dim() != 1 {
            return Err(Error::Unsupported(format!("Ulam discretization of {}", kernel.name())));
        }
        let center: &dyn ScalarMap = match kernel {
            TransitionKernel::DegenerateTrap(t) => t,
            _ => kernel
                .base_map()
                .and_then(|m| m.scalar())
                .ok_or_else(|| Error::Unsupported(format!("kernel {} has no scalar lift", kernel.name())))?,
        };
        Ok(Self { kernel, center, periodic: kernel.space().is_periodic() })
    }

    fn c(&self, x: f64) -> f64 {
        extended_lift(self.center, self.periodic, x)
    }

    fn r(&self, x: f64) -> f64 {
        self.kernel.support_arc(x).map(|(_, r)| r).unwrap_or(0.0)
    }

    fn singular(&self) -> bool {
        matches!(self.kernel, TransitionKernel::DeltaDeterministic { .. })
    }

    /// Breakpoints of `x ↦ p(A | x)` in `[a, b]` where `A` has edges at
    /// `base + k·step`.
    fn pieces(&self, a: f64, b: f64, levels: &[(f64, Option<f64>)]) -> Vec<f64> {
        let mut pts = vec![a, b];
        let mut cuts = vec![a];
        cuts.extend(self.center.seams().into_iter().filter(|&s| s > a && s < b));
        cuts.push(b);
        pts.extend(&cuts[1..cuts.len() - 1]);
        for w in cuts.windows(2) {
            let (p, q) = (w[0], w[1]);
            for &(base, step) in levels {
                if self.singular() {
                    crossings(&|x| self.c(x), p, q, base, step, &mut pts);
                } else {
                    crossings(&|x| self.c(x) - self.r(x), p, q, base, step, &mut pts);
                    crossings(&|x| self.c(x) + self.r(x), p, q, base, step, &mut pts);
                }
            }
        }
        pts.sort_by(f64::total_cmp);
        pts.dedup();
        pts
    }
}

/// Push every solution of `f(x) = base + k·step` in `(a, b)` onto `out`,
/// assuming `f` is monotone there.
fn crossings(f: &dyn Fn(f64) -> f64, a: f64, b: f64, base: f64, step: Option<f64>, out: &mut Vec<f64>) {
    let (fa, fb) = (f(a), f(b));
    let (lo, hi) = if fa <= fb { (fa, fb) } else { (fb, fa) };
    if hi <= lo {
        return;
    }
    let mut levels = Vec::new();
    match step {
        Some(s) => {
            let k0 = ((lo - base) / s).floor() as i64;
            let k1 = ((hi - base) / s).ceil() as i64;
            for k in k0..=k1 {
                levels.push(base + k as f64 * s);
            }
        }
        None => levels.push(base),
    }
    let increasing = fb > fa;
    for level in levels {
        if level <= lo || level >= hi {
            continue;
        }
        let (mut l, mut r) = (a, b);
        for _ in 0..200 {
            let m = 0.5 * (l + r);
            if m <= l || m >= r {
                break;
            }
            if (f(m) < level) == increasing {
                l = m;
            } else {
                r = m;
            }
        }
        out.push(0.5 * (l + r));
    }
}

/// Dense accumulator for one row: partial bins plus a difference array for
/// runs of fully covered bins.
struct RowAcc<'a> {
    grid: &'a Grid,
    part: Vec<f64>,
    diff: Vec<f64>,
    cover: Vec<i64>,
}

impl<'a> RowAcc<'a> {
    fn new(grid: &'a Grid) -> Self {
        Self { grid, part: vec![0.0; grid.n], diff: vec![0.0; grid.n + 1], cover: vec![0; grid.n + 1] }
    }

    fn add_point(&mut self, k: i64, v: f64) {
        let j = self.grid.column(k);
        self.part[j] += v;
    }

    fn add_run(&mut self, k0: i64, k1: i64, v: f64) {
        if k1 < k0 {
            return;
        }
        let n = self.grid.n as i64;
        let mut run = |a: usize, b: usize| {
            self.diff[a] += v;
            self.diff[b] -= v;
            self.cover[a] += 1;
            self.cover[b] -= 1;
        };
        if self.grid.periodic {
            let a = k0.rem_euclid(n);
            let len = (k1 - k0 + 1).min(n);
            if a + len <= n {
                run(a as usize, (a + len) as usize);
            } else {
                run(a as usize, n as usize);
                run(0, (a + len - n) as usize);
            }
        } else {
            let a = k0.clamp(0, n - 1);
            let b = k1.clamp(0, n - 1);
            run(a as usize, b as usize + 1);
        }
    }

    /// Add `v · |bin_j ∩ [y0, y1]|` to every bin `j`.
    fn add_span(&mut self, y0: f64, y1: f64, v: f64) {
        let h = self.grid.width();
        let k0 = ((y0 - self.grid.lo) / h).floor() as i64;
        let k1 = ((y1 - self.grid.lo) / h).floor() as i64;
        if k0 >= k1 {
            self.add_point(k0, v * (y1 - y0));
            return;
        }
        let e0 = self.grid.lo + (k0 + 1) as f64 * h;
        let e1 = self.grid.lo + k1 as f64 * h;
        self.add_point(k0, v * (e0 - y0));
        self.add_point(k1, v * (y1 - e1));
        self.add_run(k0 + 1, k1 - 1, v * h);
    }

    fn finish(self, scale: f64) -> Vec<(usize, f64)> {
        let mut out = Vec::new();
        let (mut run, mut cover) = (0.0, 0i64);
        for j in 0..self.grid.n {
            run += self.diff[j];
            cover += self.cover[j];
            let v = self.part[j] + if cover > 0 { run } else { 0.0 };
            if v > 0.0 {
                out.push((j, v * scale));
            }
        }
        out
    }
}

/// Gauss–Legendre nodes and weights on `[p, q]`.
fn gauss(p: f64, q: f64) -> impl Iterator<Item = (f64, f64)> {
    let (mid, half) = (0.5 * (p + q), 0.5 * (q - p));
    GL_NODES.iter().zip(GL_WEIGHTS.iter()).map(move |(t, w)| (mid + half * t, half * w))
}

/// Ulam discretization `P_ij = (1/h) ∫_{bin i} p(bin j | x) dx`.
///
/// Delta kernels have no density; their rows hold the pushforward of the
/// normalized Lebesgue measure on bin `i` and [`UlamOperator::pushforward`]
/// is set.
pub fn build_ulam(kernel: &TransitionKernel, n: usize) -> Result<UlamOperator> {
    let grid = Grid::for_space(&kernel.space(), n)?;
    let support = Support::new(kernel)?;
    let h = grid.width();
    let levels = [(grid.lo, Some(h))];
    let singular = support.singular();
    let rows: Vec<Vec<(usize, f64)>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let (a, b) = (grid.edge(i), grid.edge(i) + h);
            let mut acc = RowAcc::new(&grid);
            let pts = support.pieces(a, b, &levels);
            for w in pts.windows(2) {
                for (x, wt) in gauss(w[0], w[1]) {
                    let c = support.c(x);
                    if singular {
                        acc.add_point(((c - grid.lo) / h).floor() as i64, wt);
                    } else {
                        let r = support.r(x);
                        acc.add_span(c - r, c + r, wt / (2.0 * r));
                    }
                }
            }
            acc.finish(1.0 / h)
        })
        .collect();
    Ok(UlamOperator::from_rows(grid, kernel.name(), singular, rows))
}

pub const STATIONARY_TOL: f64 = 1e-12;
pub const STATIONARY_MAX_ITER: usize = 1_000_000;

/// Left fixed vector of `op` by power iteration from the uniform vector.
///
/// When several ergodic classes exist the result is the limit reached from
/// uniform initial mass.
pub fn stationary_vector(op: &UlamOperator) -> Result<BinnedMeasure> {
    stationary_vector_with(op, STATIONARY_TOL, STATIONARY_MAX_ITER)
}

pub fn stationary_vector_with(op: &UlamOperator, tol: f64, max_iter: usize) -> Result<BinnedMeasure> {
    let n = op.n();
    let mut mu = vec![1.0 / n as f64; n];
    let mut residual = f64::INFINITY;
    for _ in 0..max_iter {
        let mut next = op.apply_left(&mu);
        let total: f64 = next.iter().sum();
        next.iter_mut().for_each(|v| *v /= total);
        residual = next.iter().zip(&mu).map(|(a, b)| (a - b).abs()).sum();
        mu = next;
        if residual < tol {
            return Ok(BinnedMeasure { grid: op.grid.clone(), weights: mu });
        }
    }
    Err(Error::NotConverged { iterations: max_iter, residual })
}

/// `∫ p([lo, hi) | x) dμ(x)` with `μ` read as a piecewise-constant density.
fn pushed_mass(support: &Support, mu: &BinnedMeasure, lo: f64, hi: f64) -> f64 {
    let grid = &mu.grid;
    let h = grid.width();
    let step = grid.periodic.then_some(1.0);
    let levels = [(lo, step), (hi, step)];
    (0..grid.n)
        .into_par_iter()
        .filter(|&i| mu.weights[i] > 0.0)
        .map(|i| {
            let (a, b) = (grid.edge(i), grid.edge(i) + h);
            let pts = support.pieces(a, b, &levels);
            let mut s = 0.0;
            for w in pts.windows(2) {
                for (x, wt) in gauss(w[0], w[1]) {
                    s += wt * support.kernel.prob_interval(x, lo, hi).unwrap_or(0.0);
                }
            }
            mu.weights[i] * s / h
        })
        .collect::<Vec<f64>>()
        .iter()
        .sum()
}

/// Mass of `μ` on the arc `[lo, hi)`, density read as piecewise constant.
fn arc_mass(mu: &BinnedMeasure, lo: f64, hi: f64) -> f64 {
    let grid = &mu.grid;
    let h = grid.width();
    (0..grid.n)
        .map(|i| {
            let a = grid.edge(i);
            mu.weights[i] * crate::kernels::arc_overlap(a, a + h, lo, hi, grid.periodic) / h
        })
        .sum()
}

/// `max_A |μ(A) − ∫ p(A|x) dμ(x)|` over the given arcs `A = [lo, hi)`.
pub fn residual_on_sets(kernel: &TransitionKernel, mu: &BinnedMeasure, sets: &[(f64, f64)]) -> Result<f64> {
    let support = Support::new(kernel)?;
    if Grid::for_space(&kernel.space(), mu.grid.n)? != mu.grid {
        return Err(Error::PartitionMismatch("measure grid does not match the kernel's space".into()));
    }
    Ok(sets
        .iter()
        .map(|&(lo, hi)| (arc_mass(mu, lo, hi) - pushed_mass(&support, mu, lo, hi)).abs())
        .fold(0.0, f64::max))
}

/// Stationarity defect of `μ`.
///
/// The supremum over all unions of bins is computed exactly from one Ulam
/// step; `n_test_sets` random arcs, not aligned with the grid, are added on
/// top and evaluated by quadrature.
pub fn stationarity_residual(kernel: &TransitionKernel, mu: &BinnedMeasure, n_test_sets: usize, seed: u64) -> Result<f64> {
    let op = build_ulam(kernel, mu.grid.n)?;
    if op.grid != mu.grid {
        return Err(Error::PartitionMismatch("measure grid does not match the kernel's space".into()));
    }
    let pushed = op.apply_left(&mu.weights);
    let (mut up, mut down) = (0.0, 0.0);
    for (p, m) in pushed.iter().zip(&mu.weights) {
        let d = p - m;
        if d > 0.0 {
            up += d;
        } else {
            down -= d;
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (glo, ghi) = (mu.grid.lo, mu.grid.hi);
    let sets: Vec<(f64, f64)> = (0..n_test_sets)
        .map(|_| {
            let a = rng.random_range(glo..ghi);
            let b = rng.random_range(glo..ghi);
            if mu.grid.periodic {
                (a, a + rng.random_range(0.0..1.0))
            } else {
                (a.min(b), a.max(b))
            }
        })
        .collect();
    Ok(f64::max(up.max(down), residual_on_sets(kernel, mu, &sets)?))
}

/// Wasserstein-1 distance between binned measures, treating each bin as a
/// point mass at its center.
///
/// On the circle this is `h · min_c Σ_k |D_k − c|` with `D` the cumulative
/// difference; the minimizing `c` is a median of `D`.
pub fn wasserstein1(mu: &BinnedMeasure, nu: &BinnedMeasure) -> Result<f64> {
    if mu.grid != nu.grid {
        return Err(Error::PartitionMismatch(format!("{} vs {} bins", mu.grid.n, nu.grid.n)));
    }
    let h = mu.grid.width();
    let mut d = Vec::with_capacity(mu.len());
    let mut acc = 0.0;
    for (a, b) in mu.weights.iter().zip(&nu.weights) {
        acc += a - b;
        d.push(acc);
    }
    let c = if mu.grid.periodic {
        let mut sorted = d.clone();
        sorted.sort_by(f64::total_cmp);
        sorted[sorted.len() / 2]
    } else {
        0.0
    };
    Ok(h * d.iter().map(|v| (v - c).abs()).sum::<f64>())
}

/// Reference measure a zero-noise study compares against.
#[derive(Clone, Debug)]
pub enum LimitCandidate {
    Dirac(f64),
    Lebesgue,
    Measure(BinnedMeasure),
}

impl LimitCandidate {
    pub fn on(&self, grid: &Grid) -> Result<BinnedMeasure> {
        match self {
            Self::Dirac(x) => Ok(BinnedMeasure::dirac(grid.clone(), *x)),
            Self::Lebesgue => Ok(BinnedMeasure::uniform(grid.clone())),
            Self::Measure(m) if &m.grid == grid => Ok(m.clone()),
            Self::Measure(_) => Err(Error::PartitionMismatch("candidate grid differs from study grid".into())),
        }
    }

    pub fn label(&self) -> String {
        match self {
            Self::Dirac(x) => format!("dirac({x})"),
            Self::Lebesgue => "lebesgue".into(),
            Self::Measure(_) => "custom".into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ZeroNoiseRow {
    pub eps: f64,
    pub w1: f64,
    /// Mass within `eps + h` of the candidate's support.
    pub mass_in_window: f64,
}

#[derive(Clone, Debug)]
pub struct ZeroNoiseStudy {
    pub candidate: String,
    pub rows: Vec<ZeroNoiseRow>,
    pub measures: Vec<BinnedMeasure>,
    /// W₁ strictly decreases along the schedule.
    pub decreasing: bool,
}

/// Stationary measures along a noise schedule and their distance to a
/// candidate limit.
pub fn zero_noise_study(
    kernel: &TransitionKernel,
    schedule: &[f64],
    candidate: &LimitCandidate,
    n: usize,
) -> Result<ZeroNoiseStudy> {
    if schedule.is_empty() {
        return Err(Error::Config("empty noise schedule".into()));
    }
    if schedule.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::Config("noise schedule must be strictly decreasing".into()));
    }
    let mut rows = Vec::new();
    let mut measures = Vec::new();
    for &eps in schedule {
        let k = kernel.with_eps(eps)?;
        let mu = stationary_vector(&build_ulam(&k, n)?)?;
        let target = candidate.on(&mu.grid)?;
        let h = mu.grid.width();
        let support: Vec<f64> =
            (0..n).filter(|&i| target.weights[i] > 0.0).map(|i| mu.grid.center(i)).collect();
        let mass_in_window = (0..n)
            .filter(|&i| support.iter().any(|&s| mu.grid.distance(mu.grid.center(i), s) <= eps + h))
            .map(|i| mu.weights[i])
            .sum();
        rows.push(ZeroNoiseRow { eps, w1: wasserstein1(&mu, &target)?, mass_in_window });
        measures.push(mu);
    }
    let decreasing = rows.windows(2).all(|w| w[1].w1 < w[0].w1);
    Ok(ZeroNoiseStudy { candidate: candidate.label(), rows, measures, decreasing })
}

/// Occupation measure of random orbits after a burn-in; start `i` is driven
/// by noise stream `i`.
pub fn empirical_measure(
    system: &dyn RandomSystem,
    grid: &Grid,
    seed: u64,
    starts: &[Point],
    burn_in: usize,
    steps: usize,
) -> Result<BinnedMeasure> {
    let width = system.symbol_width();
    let counts: Vec<Vec<u64>> = starts
        .par_iter()
        .enumerate()
        .map(|(i, x0)| {
            let mut counts = vec![0u64; grid.n];
            let mut x = x0.clone();
            let mut reader = NoiseSequence::new(seed, i as u64, width).reader();
            for m in 0..burn_in + steps {
                let (k, sym) = reader.next_symbol();
                system.fiber_step(k, sym, &mut x);
                if m >= burn_in {
                    counts[grid.index_of(x[0])] += 1;
                }
            }
            counts
        })
        .collect();
    let mut total = vec![0u64; grid.n];
    for c in &counts {
        for (t, v) in total.iter_mut().zip(c) {
            *t += v;
        }
    }
    let sum: u64 = total.iter().sum();
    if sum == 0 {
        return Err(Error::InsufficientSamples("no orbit points recorded".into()));
    }
    Ok(BinnedMeasure { grid: grid.clone(), weights: total.iter().map(|&c| c as f64 / sum as f64).collect() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::{CircleExpanding, Identity, IntervalContraction, Rotation, DEFAULT_ALPHA};
    use std::sync::Arc;

    fn additive(map: crate::space::BaseMap, eps: f64) -> TransitionKernel {
        TransitionKernel::additive(map, eps).unwrap()
    }

    fn doubling() -> crate::space::BaseMap {
        Arc::new(CircleExpanding::new(2))
    }

    #[test]
    fn rows_are_stochastic() {
        for k in [
            additive(doubling(), 0.05),
            additive(Arc::new(Rotation::new(DEFAULT_ALPHA)), 0.01),
            TransitionKernel::degenerate_trap(0.01).unwrap(),
            TransitionKernel::delta(doubling()),
            additive(Arc::new(IntervalContraction::new(0.5)), 0.1),
        ] {
            let op = build_ulam(&k, 500).unwrap();
            for s in op.row_sums() {
                assert!((s - 1.0).abs() < 1e-12, "{}: row sum {s}", k.name());
            }
            assert!(op.vals.iter().all(|&v| v > 0.0));
        }
    }

    #[test]
    fn rotation_rows_are_uniform_bumps() {
        // brute-force oracle: midpoint rule over x in the bin with the
        // closed-form overlap
        let alpha = DEFAULT_ALPHA;
        let eps = 0.02;
        let n = 200;
        let k = additive(Arc::new(Rotation::new(alpha)), eps);
        let op = build_ulam(&k, n).unwrap();
        let h = 1.0 / n as f64;
        for i in [0, 17, 199] {
            let (cols, vals) = op.row(i);
            let mut dense = vec![0.0; n];
            for (&j, &v) in cols.iter().zip(vals) {
                dense[j] = v;
            }
            let m = 20_000;
            for (j, &got) in dense.iter().enumerate() {
                let mut s = 0.0;
                for q in 0..m {
                    let x = (i as f64 + (q as f64 + 0.5) / m as f64) * h;
                    let c = x + alpha;
                    s += crate::kernels::arc_overlap(c - eps, c + eps, j as f64 * h, (j + 1) as f64 * h, true) / (2.0 * eps);
                }
                assert!((got - s / m as f64).abs() < 1e-6, "row {i} col {j}: {got} vs {}", s / m as f64);
            }
        }
    }

    #[test]
    fn additive_doubling_is_doubly_stochastic() {
        let op = build_ulam(&additive(doubling(), 0.05), 2000).unwrap();
        let u = vec![1.0 / 2000.0; 2000];
        let r: f64 = op.apply_left(&u).iter().zip(&u).map(|(a, b)| (a - b).abs()).sum();
        assert!(r < 1e-12, "{r}");
    }

    #[test]
    fn trap_rows_stay_in_trap() {
        let eps = 0.01;
        let op = build_ulam(&TransitionKernel::degenerate_trap(eps).unwrap(), 1000).unwrap();
        let h = op.grid.width();
        for i in 0..1000 {
            let (a, b) = (op.grid.edge(i), op.grid.edge(i) + h);
            let inside = b <= eps || a >= 1.0 - eps;
            if !inside {
                continue;
            }
            let (cols, _) = op.row(i);
            for &j in cols {
                let (c, d) = (op.grid.edge(j), op.grid.edge(j) + h);
                assert!(c < eps + 1e-12 || d > 1.0 - eps - 1e-12, "row {i} reaches bin {j}");
            }
        }
    }

    #[test]
    fn uniform_is_stationary_for_additive_noise() {
        for k in [additive(doubling(), 0.05), additive(Arc::new(Identity::new()), 0.05)] {
            let mu = stationary_vector(&build_ulam(&k, 2000).unwrap()).unwrap();
            let dev = mu.weights.iter().map(|w| (w - 1.0 / 2000.0).abs()).fold(0.0, f64::max);
            assert!(dev < 1e-10, "{}: {dev}", k.name());
            assert!(stationarity_residual(&k, &mu, 20, 1).unwrap() < 1e-9);
        }
    }

    #[test]
    fn trap_stationary_mass_is_trapped() {
        let eps = 0.01;
        let k = TransitionKernel::degenerate_trap(eps).unwrap();
        let mu = stationary_vector(&build_ulam(&k, 2000).unwrap()).unwrap();
        assert!(mu.mass_meeting(-eps, eps) >= 0.999);
        let w = wasserstein1(&mu, &BinnedMeasure::dirac(mu.grid.clone(), 0.0)).unwrap();
        assert!(w <= eps + 1.0 / 2000.0, "{w}");
    }

    #[test]
    fn dirac_in_trap_is_conserved_on_the_trap_window() {
        let eps = 0.01;
        let k = TransitionKernel::degenerate_trap(eps).unwrap();
        let mu = BinnedMeasure::dirac(Grid::circle(2000), 0.0);
        let r = residual_on_sets(&k, &mu, &[(-eps, eps)]).unwrap();
        assert!(r < 1e-14, "{r}");
    }

    #[test]
    fn lebesgue_is_not_stationary_for_the_trap() {
        // one pushforward step moves order-eps mass toward 0; the oracle is
        // the exact bin-level defect of a single Ulam step
        let k = TransitionKernel::degenerate_trap(0.1).unwrap();
        let mu = BinnedMeasure::uniform(Grid::circle(2000));
        let op = build_ulam(&k, 2000).unwrap();
        let tv: f64 = op.apply_left(&mu.weights).iter().zip(&mu.weights).map(|(a, b)| (a - b).abs()).sum::<f64>() / 2.0;
        let r = stationarity_residual(&k, &mu, 50, 3).unwrap();
        assert!(r > 0.1, "{r}");
        assert!(r >= tv - 1e-12);
    }

    #[test]
    fn random_arcs_agree_with_bin_sets_on_refined_grid() {
        let k = additive(doubling(), 0.03);
        let raw: Vec<f64> = (0..400).map(|i| 1.0 + (i as f64 / 40.0).sin()).collect();
        let total: f64 = raw.iter().sum();
        let mu = BinnedMeasure { grid: Grid::circle(400), weights: raw.iter().map(|v| v / total).collect() };
        // arcs aligned with bins: quadrature and the Ulam step must agree
        let op = build_ulam(&k, 400).unwrap();
        let pushed = op.apply_left(&mu.weights);
        let h = 1.0 / 400.0;
        for (a, b) in [(10usize, 50usize), (300, 460), (0, 1)] {
            let direct: f64 = (a..b).map(|j| mu.weights[j % 400] - pushed[j % 400]).sum();
            let r = residual_on_sets(&k, &mu, &[(a as f64 * h, b as f64 * h)]).unwrap();
            assert!((r - direct.abs()).abs() < 1e-12, "{r} vs {direct}");
        }
    }

    #[test]
    fn wasserstein_examples() {
        let g = Grid::circle(2000);
        let a = BinnedMeasure::dirac(g.clone(), 0.0);
        let b = BinnedMeasure::dirac(g.clone(), 0.5);
        assert_eq!(wasserstein1(&a, &a).unwrap(), 0.0);
        assert!((wasserstein1(&a, &b).unwrap() - 0.5).abs() < 1e-12);
        assert!((wasserstein1(&a, &BinnedMeasure::uniform(g.clone())).unwrap() - 0.25).abs() < 1e-6);
        let c = BinnedMeasure::dirac(g.clone(), 0.9);
        assert!((wasserstein1(&a, &c).unwrap() - 0.1).abs() < 1e-12);
        assert!((wasserstein1(&c, &a).unwrap() - wasserstein1(&a, &c).unwrap()).abs() < 1e-15);
        assert!(wasserstein1(&a, &BinnedMeasure::uniform(Grid::circle(10))).is_err());
    }

    #[test]
    fn interval_wasserstein_is_mean_distance_for_diracs() {
        let g = Grid::interval(-1.0, 1.0, 1000);
        let mu = BinnedMeasure::from_samples(g.clone(), &[-0.5, 0.25, 0.75, 0.1]).unwrap();
        let d = BinnedMeasure::dirac(g.clone(), 0.0);
        let w = wasserstein1(&mu, &d).unwrap();
        assert!((w - mu.mean_distance_to(g.center(g.index_of(0.0)))).abs() < 1e-12);
    }

    #[test]
    fn contraction_stationary_law_matches_series_oracle() {
        // X = Σ 2^{-k} U_k with U_k uniform on [-eps, eps]; E|X| by Monte Carlo
        use rand::Rng;
        let eps = 0.1;
        let k = additive(Arc::new(IntervalContraction::new(0.5)), eps);
        let mu = stationary_vector(&build_ulam(&k, 2000).unwrap()).unwrap();
        let w = wasserstein1(&mu, &BinnedMeasure::dirac(mu.grid.clone(), 0.0)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let m = 200_000;
        let mut s = 0.0;
        let mut s2 = 0.0;
        for _ in 0..m {
            let x: f64 = (0..40).map(|j| 0.5f64.powi(j) * eps * (2.0 * rng.random::<f64>() - 1.0)).sum();
            s += x.abs();
            s2 += x * x;
        }
        let mean = s / m as f64;
        let sd = (s2 / m as f64 - mean * mean).sqrt() / (m as f64).sqrt();
        // binning moves each mass by at most one bin width
        assert!((w - mean).abs() < 4.0 * sd + 2.0 / 2000.0, "{w} vs {mean}");
    }

    #[test]
    fn refinement_is_consistent() {
        let k = additive(Arc::new(IntervalContraction::new(0.5)), 0.2);
        let coarse = stationary_vector(&build_ulam(&k, 500).unwrap()).unwrap();
        let fine = stationary_vector(&build_ulam(&k, 1000).unwrap()).unwrap();
        let w = wasserstein1(&coarse, &fine.coarsen(2).unwrap()).unwrap();
        assert!(w < 2.0 / 500.0, "{w}");
    }

    #[test]
    fn zero_noise_trap_schedule() {
        let k = TransitionKernel::degenerate_trap(0.05).unwrap();
        let s = zero_noise_study(&k, &[0.05, 0.02, 0.01], &LimitCandidate::Dirac(0.0), 1000).unwrap();
        assert!(s.decreasing);
        for r in &s.rows {
            assert!(r.w1 <= r.eps + 2.0 / 1000.0);
            assert!(r.mass_in_window > 0.999);
        }
    }

    #[test]
    fn empirical_measure_of_noisy_doubling_is_flat() {
        let k = additive(doubling(), 0.05);
        let g = Grid::circle(10);
        let starts: Vec<Point> = (0..8).map(|i| vec![i as f64 / 8.0]).collect();
        let mu = empirical_measure(&k, &g, 3, &starts, 100, 50_000).unwrap();
        for w in &mu.weights {
            assert!((w - 0.1).abs() < 0.01);
        }
    }
}
