// SPDX-License-Identifier: Apache-2.0

//! Lyapunov spectra of matrix cocycles `φ_n(ω) = X_n ⋯ X_1`.
//!
//! Two independent routes are provided. [`qr_lyapunov`] averages the logs of
//! the diagonal of `R` in repeated QR factorizations. [`limit_matrix`] forms
//! `[(φ_n)* φ_n]^{1/2n}` from the singular value decomposition of `φ_n`;
//! since `log s_i(φ_n)` grows linearly in `n`, the product is carried as
//! log-scaled rows and diagonalized by a one-sided Jacobi sweep that never
//! leaves log scale.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::skew::{flow, NoiseSequence, RandomSystem, SkewState, SymbolReader};

/// `ln` of the smallest normal double; stands in for `−∞` exponents.
pub const NEG_INF_SENTINEL: f64 = -708.396_418_532_264_1;

type Generator = Arc<dyn Fn(&[f64], &mut DMatrix<f64>) + Send + Sync>;

/// Generator of the matrices `X_n` along a driving sequence.
#[derive(Clone)]
pub enum MatrixCocycle {
    /// The same matrix at every step.
    Constant(DMatrix<f64>),
    /// `X_n = f(ω_n)` for i.i.d. uniform symbols `ω_n ∈ [0,1)^width`.
    Iid { name: String, dim: usize, width: usize, generator: Generator },
    /// Derivative cocycle `X_n = Dφ(1, σ^{n−1}ω)(x_{n−1})` of a random system.
    Derivative(Arc<dyn RandomSystem>),
}

impl fmt::Debug for MatrixCocycle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "MatrixCocycle({})", self.name())
    }
}

impl MatrixCocycle {
    pub fn constant(m: DMatrix<f64>) -> Self {
        assert!(m.is_square(), "cocycle matrices must be square");
        Self::Constant(m)
    }

    pub fn iid<F>(name: impl Into<String>, dim: usize, width: usize, f: F) -> Self
    where
        F: Fn(&[f64], &mut DMatrix<f64>) + Send + Sync + 'static,
    {
        Self::Iid { name: name.into(), dim, width, generator: Arc::new(f) }
    }

    pub fn derivative(system: Arc<dyn RandomSystem>) -> Self {
        Self::Derivative(system)
    }

    /// `diag(a, 1/a)` or `diag(1/a, a)` with probability ½ each.
    pub fn random_diagonal(a: f64) -> Self {
        Self::iid(format!("random_diag(a={a})"), 2, 1, move |u, m| {
            let s = if u[0] < 0.5 { a } else { a.recip() };
            m.fill(0.0);
            m[(0, 0)] = s;
            m[(1, 1)] = s.recip();
        })
    }

    /// A uniformly random rotation followed by `diag(a, b)`.
    pub fn rotation_diagonal(a: f64, b: f64) -> Self {
        Self::iid(format!("rotation_diag(a={a}, b={b})"), 2, 1, move |u, m| {
            let (s, c) = (2.0 * std::f64::consts::PI * u[0]).sin_cos();
            m[(0, 0)] = a * c;
            m[(0, 1)] = -a * s;
            m[(1, 0)] = b * s;
            m[(1, 1)] = b * c;
        })
    }

    pub fn name(&self) -> String {
        match self {
            Self::Constant(m) => format!("constant({}x{})", m.nrows(), m.ncols()),
            Self::Iid { name, .. } => name.clone(),
            Self::Derivative(s) => format!("derivative[{}]", s.name()),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::Constant(m) => m.nrows(),
            Self::Iid { dim, .. } => *dim,
            Self::Derivative(s) => s.space().dim(),
        }
    }

    fn width(&self) -> usize {
        match self {
            Self::Constant(_) => 0,
            Self::Iid { width, .. } => *width,
            Self::Derivative(s) => s.symbol_width(),
        }
    }

    /// Start a run at `(ω, x)`; `x` is ignored unless this is a derivative
    /// cocycle.
    pub fn run(&self, start: &SkewState) -> Result<CocycleRun<'_>> {
        let k = self.dim();
        if let Self::Derivative(s) = self {
            let mut probe = DMatrix::zeros(k, k);
            if !s.fiber_jacobian(0, &vec![0.5; s.symbol_width()], &start.x, &mut probe) {
                return Err(Error::Unsupported(format!("{} has no differentiable fiber maps", s.name())));
            }
        }
        let omega = NoiseSequence { width: self.width(), ..start.omega.clone() };
        Ok(CocycleRun {
            cocycle: self,
            reader: omega.reader(),
            x: start.x.clone(),
            m: DMatrix::zeros(k, k),
            log_norm_sum: 0.0,
            log_norm_max: 0.0,
            steps: 0,
        })
    }
}

/// Sequential generator of `X_1, X_2, …` for one realization.
pub struct CocycleRun<'a> {
    cocycle: &'a MatrixCocycle,
    reader: SymbolReader,
    x: Vec<f64>,
    m: DMatrix<f64>,
    log_norm_sum: f64,
    log_norm_max: f64,
    steps: usize,
}

impl CocycleRun<'_> {
    pub fn next_matrix(&mut self) -> &DMatrix<f64> {
        match self.cocycle {
            MatrixCocycle::Constant(c) => self.m.copy_from(c),
            MatrixCocycle::Iid { generator, .. } => {
                let (_, u) = self.reader.next_symbol();
                generator(u, &mut self.m);
            }
            MatrixCocycle::Derivative(s) => {
                let (k, u) = self.reader.next_symbol();
                s.fiber_jacobian(k, u, &self.x, &mut self.m);
                s.fiber_step(k, u, &mut self.x);
            }
        }
        let ln = self.m.norm().ln().max(0.0);
        self.log_norm_sum += ln;
        self.log_norm_max = self.log_norm_max.max(ln);
        self.steps += 1;
        &self.m
    }

    /// Sample mean and running maximum of `log⁺‖X_n‖` (Frobenius norm).
    pub fn integrability(&self) -> (f64, f64) {
        (self.log_norm_sum / self.steps.max(1) as f64, self.log_norm_max)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LyapunovSpectrum {
    /// Non-increasing; `−∞` is reported as [`NEG_INF_SENTINEL`].
    pub exponents: Vec<f64>,
    pub minus_infinity: Vec<bool>,
    /// Orthonormal `Q` of the final factorization, columns matched to
    /// `exponents`.
    pub basis: DMatrix<f64>,
    pub n_used: usize,
    pub log_norm_mean: f64,
    pub log_norm_max: f64,
    /// Running exponents at powers of two and at `n`.
    pub trace: Vec<(usize, Vec<f64>)>,
}

impl LyapunovSpectrum {
    pub fn positive_sum(&self) -> f64 {
        self.exponents.iter().filter(|&&l| l > 0.0).sum()
    }
}

fn running(acc: &[f64], dead: &[bool], m: usize) -> Vec<f64> {
    acc.iter().zip(dead).map(|(&a, &d)| if d { NEG_INF_SENTINEL } else { (a / m as f64).max(NEG_INF_SENTINEL) }).collect()
}

/// Exponents from QR re-orthonormalization every `period` steps.
pub fn qr_lyapunov(cocycle: &MatrixCocycle, start: &SkewState, n: usize, period: usize) -> Result<LyapunovSpectrum> {
    if period == 0 || n < period {
        return Err(Error::Config(format!("need n >= period >= 1, got n={n}, period={period}")));
    }
    let k = cocycle.dim();
    let mut run = cocycle.run(start)?;
    let mut y = DMatrix::<f64>::identity(k, k);
    let mut acc = vec![0.0; k];
    let mut dead = vec![false; k];
    let mut trace = Vec::new();
    for m in 1..=n {
        y = run.next_matrix() * &y;
        if m % period != 0 && m != n {
            continue;
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::Overflow { step: m });
        }
        let qr = std::mem::replace(&mut y, DMatrix::zeros(0, 0)).qr();
        let r = qr.r();
        for i in 0..k {
            let d = r[(i, i)].abs();
            if d < f64::MIN_POSITIVE {
                dead[i] = true;
            } else {
                acc[i] += d.ln();
            }
        }
        y = qr.q();
        if m.is_power_of_two() || m == n {
            trace.push((m, running(&acc, &dead, m)));
        }
    }
    let raw = running(&acc, &dead, n);
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| raw[b].total_cmp(&raw[a]));
    let exponents = order.iter().map(|&i| raw[i]).collect();
    let minus_infinity = order.iter().map(|&i| dead[i] || raw[i] <= NEG_INF_SENTINEL).collect();
    let basis = DMatrix::from_fn(k, k, |r, c| y[(r, order[c])]);
    let (log_norm_mean, log_norm_max) = run.integrability();
    Ok(LyapunovSpectrum { exponents, minus_infinity, basis, n_used: n, log_norm_mean, log_norm_max, trace })
}

/// `(1/n) Σ log|det X_m|`, the right-hand side of the sum rule.
pub fn mean_log_det(cocycle: &MatrixCocycle, start: &SkewState, n: usize) -> Result<f64> {
    let mut run = cocycle.run(start)?;
    let mut s = 0.0;
    for _ in 0..n {
        s += run.next_matrix().determinant().abs().ln().max(NEG_INF_SENTINEL);
    }
    Ok(s / n as f64)
}

/// Row `e^{ℓ} w` of a matrix whose rows differ by many orders of magnitude.
#[derive(Clone, Debug)]
struct ScaledRow {
    log_scale: f64,
    dir: DVector<f64>,
}

impl ScaledRow {
    fn from_vec(log_scale: f64, v: DVector<f64>) -> Self {
        let norm = v.norm();
        if norm == 0.0 || !log_scale.is_finite() {
            return Self { log_scale: f64::NEG_INFINITY, dir: v };
        }
        Self { log_scale: log_scale + norm.ln(), dir: v / norm }
    }
}

/// `T ← R·T` for upper-triangular `R`, in log scale.
fn left_multiply(rows: &mut [ScaledRow], r: &DMatrix<f64>) {
    let k = rows.len();
    let old = rows.to_vec();
    for i in 0..k {
        let logs: Vec<f64> = (i..k).map(|j| r[(i, j)].abs().ln() + old[j].log_scale).collect();
        let top = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if top == f64::NEG_INFINITY {
            rows[i] = ScaledRow { log_scale: f64::NEG_INFINITY, dir: old[i].dir.clone() };
            continue;
        }
        let mut v = DVector::zeros(old[i].dir.len());
        for (jj, j) in (i..k).enumerate() {
            if logs[jj] > f64::NEG_INFINITY {
                v.axpy(r[(i, j)].signum() * (logs[jj] - top).exp(), &old[j].dir, 1.0);
            }
        }
        rows[i] = ScaledRow::from_vec(top, v);
    }
}

/// One-sided Jacobi on log-scaled rows: afterwards the rows are mutually
/// orthogonal, their scales are the log singular values and their directions
/// the right singular vectors.
fn orthogonalize_rows(rows: &mut [ScaledRow]) {
    let k = rows.len();
    for _sweep in 0..100 {
        let mut rotated = false;
        for p in 0..k {
            for q in p + 1..k {
                let (big, small) = if rows[p].log_scale >= rows[q].log_scale { (p, q) } else { (q, p) };
                if rows[small].log_scale == f64::NEG_INFINITY {
                    continue;
                }
                let a = rows[big].dir.clone();
                let b = rows[small].dir.clone();
                let g = a.dot(&b);
                if g.abs() <= 1e-15 {
                    continue;
                }
                rotated = true;
                let rho = (rows[small].log_scale - rows[big].log_scale).exp();
                let rz = (rho * rho - 1.0) / (2.0 * g);
                let tr = rz.signum() / (rz.abs() + (rho * rho + rz * rz).sqrt());
                let t = tr * rho;
                let c = 1.0 / (1.0 + t * t).sqrt();
                let x = (&a - &b * (tr * rho * rho)) * c;
                let y = (&a * tr + &b) * c;
                let (lb, ls) = (rows[big].log_scale, rows[small].log_scale);
                rows[big] = ScaledRow::from_vec(lb, x);
                rows[small] = ScaledRow::from_vec(ls, y);
            }
        }
        if !rotated {
            break;
        }
    }
}

/// Log singular values (non-increasing) and right singular vectors of
/// `φ_n(ω)`, plus the factor `Q_n` with `φ_n = Q_n·T`.
fn graded_svd(cocycle: &MatrixCocycle, start: &SkewState, n: usize) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let k = cocycle.dim();
    let mut run = cocycle.run(start)?;
    let mut y = DMatrix::<f64>::identity(k, k);
    let mut rows: Vec<ScaledRow> =
        (0..k).map(|i| ScaledRow { log_scale: 0.0, dir: DVector::from_fn(k, |j, _| (i == j) as u8 as f64) }).collect();
    for m in 1..=n {
        y = run.next_matrix() * &y;
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::Overflow { step: m });
        }
        let qr = std::mem::replace(&mut y, DMatrix::zeros(0, 0)).qr();
        left_multiply(&mut rows, &qr.r());
        y = qr.q();
    }
    orthogonalize_rows(&mut rows);
    rows.sort_by(|a, b| b.log_scale.total_cmp(&a.log_scale));
    let logs = rows.iter().map(|r| r.log_scale).collect();
    let v = DMatrix::from_fn(k, k, |i, j| rows[j].dir[i]);
    Ok((logs, v))
}

#[derive(Clone, Debug)]
pub struct LimitMatrix {
    /// `[(φ_n)* φ_n]^{1/2n}`.
    pub matrix: DMatrix<f64>,
    /// `(1/n) log s_i(φ_n)`, non-increasing, with the `−∞` sentinel.
    pub exponents: Vec<f64>,
    pub minus_infinity: Vec<bool>,
    /// Right singular vectors of `φ_n`, columns matched to `exponents`.
    pub singular_vectors: DMatrix<f64>,
    pub n: usize,
}

impl LimitMatrix {
    pub fn eigenvalues(&self) -> Vec<f64> {
        self.exponents.iter().zip(&self.minus_infinity).map(|(&l, &d)| if d { 0.0 } else { l.exp() }).collect()
    }
}

pub fn limit_matrix(cocycle: &MatrixCocycle, start: &SkewState, n: usize) -> Result<LimitMatrix> {
    if n == 0 {
        return Err(Error::Config("limit matrix needs n >= 1".into()));
    }
    let (logs, v) = graded_svd(cocycle, start, n)?;
    let minus_infinity: Vec<bool> = logs.iter().map(|&l| l / n as f64 <= NEG_INF_SENTINEL).collect();
    let exponents: Vec<f64> = logs.iter().map(|&l| (l / n as f64).max(NEG_INF_SENTINEL)).collect();
    let diag: Vec<f64> =
        exponents.iter().zip(&minus_infinity).map(|(&l, &d)| if d { 0.0 } else { l.exp() }).collect();
    let matrix = &v * DMatrix::from_diagonal(&DVector::from_vec(diag)) * v.transpose();
    Ok(LimitMatrix { matrix, exponents, minus_infinity, singular_vectors: v, n })
}

/// One level `Σ_h` of the Oseledets filtration.
#[derive(Clone, Debug)]
pub struct FiltrationLevel {
    /// Largest exponent of vectors in `Σ_h ∖ Σ_{h+1}`.
    pub exponent: f64,
    pub multiplicity: usize,
    /// Orthonormal basis of `Σ_h`, one column per dimension.
    pub basis: DMatrix<f64>,
}

impl FiltrationLevel {
    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    /// Orthogonal projection onto `Σ_h`.
    pub fn project(&self, y: &DVector<f64>) -> DVector<f64> {
        &self.basis * (self.basis.transpose() * y)
    }
}

/// `ℝ^k = Σ_1 ⊋ Σ_2 ⊋ ⋯ ⊋ {0}`; the trailing `{0}` is implicit.
#[derive(Clone, Debug)]
pub struct Filtration {
    pub levels: Vec<FiltrationLevel>,
    pub threshold: f64,
    /// Present when a gap near the threshold was merged.
    pub diagnostic: Option<String>,
}

pub fn cluster_threshold(n: usize) -> f64 {
    f64::max(1e-3, 5.0 / (n as f64).sqrt())
}

/// Filtration from the right singular vectors of `φ_n(ω)`, grouping
/// exponents whose gaps fall below [`cluster_threshold`].
pub fn oseledets_subspaces(cocycle: &MatrixCocycle, start: &SkewState, n: usize) -> Result<Filtration> {
    let lm = limit_matrix(cocycle, start, n)?;
    let k = lm.exponents.len();
    let threshold = cluster_threshold(n);
    let mut groups: Vec<Vec<usize>> = vec![vec![0]];
    let mut merged = Vec::new();
    for i in 1..k {
        let gap = lm.exponents[i - 1] - lm.exponents[i];
        if gap > threshold {
            groups.push(vec![i]);
        } else {
            if gap > 0.25 * threshold {
                merged.push(format!("{gap:.3e} between exponents {} and {}", i, i + 1));
            }
            groups.last_mut().unwrap().push(i);
        }
    }
    let levels = groups
        .iter()
        .map(|g| {
            let first = g[0];
            FiltrationLevel {
                exponent: lm.exponents[first],
                multiplicity: g.len(),
                basis: lm.singular_vectors.columns(first, k - first).into_owned(),
            }
        })
        .collect();
    let diagnostic = (!merged.is_empty()).then(|| {
        format!("ambiguous gaps merged (threshold {threshold:.3e}): {}", merged.join("; "))
    });
    Ok(Filtration { levels, threshold, diagnostic })
}

/// `(1/n) log‖φ_n(ω) y‖` by direct propagation with renormalization.
pub fn growth_rate(cocycle: &MatrixCocycle, start: &SkewState, y: &DVector<f64>, n: usize) -> Result<f64> {
    let mut run = cocycle.run(start)?;
    let mut v = y.normalize();
    let mut s = 0.0;
    for _ in 0..n {
        v = run.next_matrix() * v;
        let norm = v.norm();
        if norm < f64::MIN_POSITIVE {
            return Ok(NEG_INF_SENTINEL);
        }
        s += norm.ln();
        v /= norm;
    }
    Ok(s / n as f64)
}

/// Growth rate of `y` in the span of the `dim` slowest right singular
/// vectors, i.e. a `dim`-dimensional `Σ_h(ω)`, over `n` steps.
///
/// Slow subspaces are unstable under forward iteration, so the rounding
/// error of `y` picks up the top exponent within a few dozen steps. After
/// each step the iterate is projected back onto `Σ_h(σ^m ω)`, re-estimated
/// from the next `lookahead` matrices; equivariance `X_{m+1} Σ_h(σ^m ω) =
/// Σ_h(σ^{m+1} ω)` makes the projection a pure error correction.
pub fn subspace_growth_rate(
    cocycle: &MatrixCocycle,
    start: &SkewState,
    dim: usize,
    y: &DVector<f64>,
    n: usize,
    lookahead: usize,
) -> Result<f64> {
    let system = match cocycle {
        MatrixCocycle::Derivative(s) => Some(s.clone()),
        _ => None,
    };
    subspace_growth_impl(cocycle, start, dim, y, n, lookahead, move |s, m| {
        let x = match &system {
            Some(sys) => {
                let omega = NoiseSequence { width: sys.symbol_width(), ..s.omega.clone() };
                flow(sys.as_ref(), &omega, m as u64, &s.x)
            }
            None => s.x.clone(),
        };
        SkewState::new(s.omega.shift(m as u64), x)
    })
}

fn subspace_growth_impl<F>(
    cocycle: &MatrixCocycle,
    start: &SkewState,
    dim: usize,
    y: &DVector<f64>,
    n: usize,
    lookahead: usize,
    shifted: F,
) -> Result<f64>
where
    F: Fn(&SkewState, usize) -> SkewState,
{
    let k = cocycle.dim();
    if dim == 0 || dim > k {
        return Err(Error::Config(format!("subspace dimension {dim} out of range for {k}x{k} cocycle")));
    }
    let estimate = |m: usize| -> Result<FiltrationLevel> {
        let (logs, v) = graded_svd(cocycle, &shifted(start, m), lookahead)?;
        Ok(FiltrationLevel {
            exponent: logs[k - dim] / lookahead as f64,
            multiplicity: dim,
            basis: v.columns(k - dim, dim).into_owned(),
        })
    };
    let mut run = cocycle.run(start)?;
    let mut v = estimate(0)?.project(y).normalize();
    let mut s = 0.0;
    for m in 1..=n {
        v = run.next_matrix() * v;
        let norm = v.norm();
        if norm < f64::MIN_POSITIVE {
            return Ok(NEG_INF_SENTINEL);
        }
        s += norm.ln();
        v = estimate(m)?.project(&(v / norm));
        v.normalize_mut();
    }
    Ok(s / n as f64)
}

/// Lyapunov spectra along an ensemble of skew-product starts, with the
/// invariance check `λ_i(𝒮_t(ω,x)) = λ_i(ω,x)`.
#[derive(Clone, Debug)]
pub struct MetReport {
    pub spectra: Vec<Vec<f64>>,
    pub minus_infinity: Vec<Vec<bool>>,
    /// `(t, max_i max_start |λ_i(𝒮_t start) − λ_i(start)|)`.
    pub shift_gaps: Vec<(u64, f64)>,
    pub invariance_gap: f64,
    /// Per-exponent ensemble spread `max − min`.
    pub spread: Vec<f64>,
    /// Ensemble means, reported when every spread is below the clustering
    /// threshold (the ergodic case).
    pub constant: Option<Vec<f64>>,
    pub n: usize,
}

pub const MET_SHIFTS: [u64; 3] = [1, 10, 100];

fn spectrum_gap(a: &LyapunovSpectrum, b: &LyapunovSpectrum) -> f64 {
    a.exponents
        .iter()
        .zip(&b.exponents)
        .zip(a.minus_infinity.iter().zip(&b.minus_infinity))
        .map(|((x, y), (dx, dy))| if *dx && *dy { 0.0 } else { (x - y).abs() })
        .fold(0.0, f64::max)
}

/// Start `i` uses noise stream `i` of `seed`.
pub fn random_met(system: Arc<dyn RandomSystem>, seed: u64, starts: &[Vec<f64>], n: usize, shifts: &[u64]) -> Result<MetReport> {
    let cocycle = MatrixCocycle::derivative(system.clone());
    let width = system.symbol_width();
    let results: Vec<Result<(LyapunovSpectrum, Vec<f64>)>> = starts
        .par_iter()
        .enumerate()
        .map(|(i, x)| {
            let state = SkewState::new(NoiseSequence::new(seed, i as u64, width), x.clone());
            let base = qr_lyapunov(&cocycle, &state, n, 1)?;
            let mut gaps = Vec::with_capacity(shifts.len());
            for &t in shifts {
                let moved = SkewState::new(state.omega.shift(t), flow(system.as_ref(), &state.omega, t, x));
                gaps.push(spectrum_gap(&base, &qr_lyapunov(&cocycle, &moved, n, 1)?));
            }
            Ok((base, gaps))
        })
        .collect();
    let mut spectra = Vec::new();
    let mut minus_infinity = Vec::new();
    let mut shift_gaps: Vec<(u64, f64)> = shifts.iter().map(|&t| (t, 0.0)).collect();
    for r in results {
        let (spec, gaps) = r?;
        for (sg, g) in shift_gaps.iter_mut().zip(gaps) {
            sg.1 = sg.1.max(g);
        }
        spectra.push(spec.exponents);
        minus_infinity.push(spec.minus_infinity);
    }
    let k = system.space().dim();
    let spread: Vec<f64> = (0..k)
        .map(|i| {
            let (lo, hi) = spectra.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), s| (lo.min(s[i]), hi.max(s[i])));
            hi - lo
        })
        .collect();
    let threshold = cluster_threshold(n);
    let constant = (!spectra.is_empty() && spread.iter().all(|&s| s < threshold))
        .then(|| (0..k).map(|i| spectra.iter().map(|s| s[i]).sum::<f64>() / spectra.len() as f64).collect());
    let invariance_gap = shift_gaps.iter().map(|g| g.1).fold(0.0, f64::max);
    Ok(MetReport { spectra, minus_infinity, shift_gaps, invariance_gap, spread, constant, n })
}
