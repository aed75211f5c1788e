// SPDX-License-Identifier: Apache-2.0

//! Transition kernels `p(·|x)` and laws of random maps.
//!
//! Every kernel here is realized by random maps driven by i.i.d. uniform
//! symbols `u ∈ [0,1)^w`: one step is `x ↦ apply_symbol(u, x)`. Sampling and
//! the skew-product engine share that single code path, so a kernel draw and a
//! fiber step consume identical noise.
//!
//! Noise laws `θ_ε` are uniform on sup-norm ε-balls, hence all densities are
//! piecewise constant and known in closed form.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use rand::RngCore;

use crate::error::{Error, Result};
use crate::space::{extended_lift, wrap_unit, BaseMap, DynamicalMap, Point, ScalarMap, StateSpace};

/// Uniform double in `[0, 1)` built from exactly one `u64` draw.
#[inline]
pub fn unit_uniform<R: RngCore + ?Sized>(rng: &mut R) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// The smooth trapping map: `0` on `(-ε, ε)`, `2z` outside `(-2ε, 2ε)`, and a
/// C¹ cubic Hermite bridge on the two collars.
#[derive(Clone, Debug, PartialEq)]
pub struct TrapMap {
    eps: f64,
}

/// Upper bound on the trap width keeping the junctions `±ε, ±2ε` ordered and
/// disjoint from the image arcs.
pub const TRAP_EPS_MAX: f64 = 0.125;

impl TrapMap {
    pub fn new(eps: f64) -> Result<Self> {
        if !(eps > 0.0 && eps < TRAP_EPS_MAX) {
            return Err(Error::Config(format!("trap width must satisfy 0 < eps < 1/8, got {eps}")));
        }
        Ok(Self { eps })
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    // Hermite cubic on s ∈ [0,1]: h(0)=0, h'(0)=0, h(1)=4, h'(1)=2 (in units of ε).
    #[inline]
    fn bridge(s: f64) -> f64 {
        s * s * (10.0 - 6.0 * s)
    }

    #[inline]
    fn bridge_slope(s: f64) -> f64 {
        s * (20.0 - 18.0 * s)
    }
}

impl ScalarMap for TrapMap {
    fn lift(&self, z: f64) -> f64 {
        let e = self.eps;
        if z <= e {
            0.0
        } else if z < 2.0 * e {
            e * Self::bridge((z - e) / e)
        } else if z <= 1.0 - 2.0 * e {
            2.0 * z
        } else if z < 1.0 - e {
            2.0 - e * Self::bridge((1.0 - z - e) / e)
        } else {
            2.0
        }
    }

    fn derivative(&self, z: f64) -> f64 {
        let e = self.eps;
        if z <= e || z >= 1.0 - e {
            0.0
        } else if z < 2.0 * e {
            Self::bridge_slope((z - e) / e)
        } else if z <= 1.0 - 2.0 * e {
            2.0
        } else {
            Self::bridge_slope((1.0 - z - e) / e)
        }
    }

    fn degree(&self) -> i64 {
        2
    }

    fn seams(&self) -> Vec<f64> {
        let e = self.eps;
        vec![e, 2.0 * e, 1.0 - 2.0 * e, 1.0 - e]
    }
}

/// `φ_ε(z)` reduced to the circle.
pub fn trap_map(eps: f64, z: f64) -> Result<f64> {
    Ok(wrap_unit(TrapMap::new(eps)?.lift(wrap_unit(z))))
}

/// A parameterized family `T: 𝒰 × M → M` with `T_0 = T₀`.
pub trait MapFamily: fmt::Debug + Send + Sync {
    fn name(&self) -> String;
    fn base(&self) -> &BaseMap;
    fn param_dim(&self) -> usize;
    fn apply(&self, w: &[f64], x: &mut [f64]);
    fn jacobian(&self, w: &[f64], x: &[f64], out: &mut DMatrix<f64>);

    /// For scalar families of the form `T_w(x) = T₀(x) + w·g(x)`, returns `g(x)`.
    fn spread(&self, _x: f64) -> Option<f64> {
        None
    }
}

/// Translations after the base map: `T_w(x) = T₀(x) + w`.
#[derive(Clone, Debug)]
pub struct AdditiveFamily {
    base: BaseMap,
}

impl AdditiveFamily {
    pub fn new(base: BaseMap) -> Self {
        Self { base }
    }
}

impl MapFamily for AdditiveFamily {
    fn name(&self) -> String {
        format!("additive[{}]", self.base.name())
    }

    fn base(&self) -> &BaseMap {
        &self.base
    }

    fn param_dim(&self) -> usize {
        self.base.space().dim()
    }

    fn apply(&self, w: &[f64], x: &mut [f64]) {
        self.base.apply(x);
        for (v, dw) in x.iter_mut().zip(w) {
            *v += dw;
        }
        self.base.space().reduce(x);
    }

    fn jacobian(&self, _w: &[f64], x: &[f64], out: &mut DMatrix<f64>) {
        self.base.jacobian(x, out);
    }

    fn spread(&self, _x: f64) -> Option<f64> {
        (self.param_dim() == 1).then_some(1.0)
    }
}

/// State-dependent noise amplitude on a circle map:
/// `T_w(x) = T₀(x) + w·(1 + a·cos 2πx)` with `|a| < 1`.
#[derive(Clone, Debug)]
pub struct ModulatedFamily {
    base: BaseMap,
    amplitude: f64,
}

impl ModulatedFamily {
    pub fn new(base: BaseMap, amplitude: f64) -> Result<Self> {
        if base.scalar().is_none() || !base.space().is_periodic() {
            return Err(Error::Config("modulated family needs a circle map".into()));
        }
        if !(amplitude.abs() < 1.0) {
            return Err(Error::Config(format!("modulation amplitude must satisfy |a| < 1, got {amplitude}")));
        }
        Ok(Self { base, amplitude })
    }
}

impl MapFamily for ModulatedFamily {
    fn name(&self) -> String {
        format!("modulated[{}; a={}]", self.base.name(), self.amplitude)
    }

    fn base(&self) -> &BaseMap {
        &self.base
    }

    fn param_dim(&self) -> usize {
        1
    }

    fn apply(&self, w: &[f64], x: &mut [f64]) {
        let g = self.spread(x[0]).unwrap();
        self.base.apply(x);
        x[0] = wrap_unit(x[0] + w[0] * g);
    }

    fn jacobian(&self, w: &[f64], x: &[f64], out: &mut DMatrix<f64>) {
        self.base.jacobian(x, out);
        out[(0, 0)] -= w[0] * self.amplitude * 2.0 * PI * (2.0 * PI * x[0]).sin();
    }

    fn spread(&self, x: f64) -> Option<f64> {
        Some(1.0 + self.amplitude * (2.0 * PI * x).cos())
    }
}

/// A law `ν` on maps given by a family and the uniform parameter law `θ_ε`
/// on the ε-ball around `0`.
#[derive(Clone, Debug)]
pub struct RandomMapLaw {
    pub family: Arc<dyn MapFamily>,
    pub eps: f64,
}

impl RandomMapLaw {
    pub fn new(family: Arc<dyn MapFamily>, eps: f64) -> Result<Self> {
        check_eps(family.base().as_ref(), eps)?;
        Ok(Self { family, eps })
    }

    /// Parameter `w = ε(2u − 1)` for a uniform symbol `u`.
    pub fn parameter(&self, u: &[f64], w: &mut [f64]) {
        for (wi, ui) in w.iter_mut().zip(u) {
            *wi = self.eps * (2.0 * ui - 1.0);
        }
    }

    pub fn fiber(&self, w: &[f64], x: &mut [f64]) {
        self.family.apply(w, x);
    }

    /// `θ_ε({w : T_w(x) ∈ [lo, hi)})` by midpoint quadrature over the
    /// parameter (scalar families). The arc `[lo, hi)` may wrap.
    pub fn induced_probability(&self, x: f64, lo: f64, hi: f64, nodes: usize) -> f64 {
        assert_eq!(self.family.param_dim(), 1);
        let mut hits = 0usize;
        let mut y = [0.0];
        for k in 0..nodes {
            let w = self.eps * (2.0 * (k as f64 + 0.5) / nodes as f64 - 1.0);
            y[0] = x;
            self.family.apply(&[w], &mut y);
            if arc_contains(lo, hi, y[0]) {
                hits += 1;
            }
        }
        hits as f64 / nodes as f64
    }
}

fn arc_contains(lo: f64, hi: f64, y: f64) -> bool {
    if hi - lo >= 1.0 {
        return true;
    }
    let a = wrap_unit(lo);
    let off = wrap_unit(y - a);
    off < hi - lo
}

fn check_eps(map: &dyn DynamicalMap, eps: f64) -> Result<()> {
    if !(eps > 0.0) {
        return Err(Error::Config(format!("noise level must be positive, got {eps}")));
    }
    if map.space().is_periodic() {
        if eps >= 0.5 {
            return Err(Error::Config(format!("noise level must be < 1/2 on periodic spaces, got {eps}")));
        }
    } else {
        match map.image_margin() {
            Some(m) if eps <= m => {}
            Some(m) => {
                return Err(Error::Config(format!(
                    "noise level {eps} would push {} out of its space (margin {m})",
                    map.name()
                )))
            }
            None => {
                return Err(Error::Config(format!(
                    "map {} on a bounded space does not declare an image margin",
                    map.name()
                )))
            }
        }
    }
    Ok(())
}

/// Markov transition kernel `p(·|x)`.
#[derive(Clone, Debug)]
pub enum TransitionKernel {
    /// Uniform jump into the ε-ball around `T₀(x)`.
    RandomJump { map: BaseMap, eps: f64 },
    /// Random translations `T_u(x) = T₀(x) + u`, `u` uniform on the ε-ball.
    AdditiveMap { map: BaseMap, eps: f64 },
    /// Random parameter drawn from `θ_ε` for a map family.
    Parametric(RandomMapLaw),
    /// Uniform jump into the ε-ball around the trapping map `φ_ε(x)` built on
    /// the doubling map.
    DegenerateTrap(TrapMap),
    /// `p(·|x) = δ_{T₀(x)}`.
    DeltaDeterministic { map: BaseMap },
}

/// Names accepted by [`TransitionKernel::from_name`].
pub const KERNEL_VARIANTS: &[(&str, &str)] = &[
    ("random_jump", "uniform jump to the eps-ball around T0(x)"),
    ("additive", "random translations T_u(x) = T0(x) + u, |u| <= eps"),
    ("parametric", "random parameter of a map family (family = additive | modulated)"),
    ("trap", "degenerate trap around 0 built on the doubling map; eps < 1/8"),
    ("delta", "deterministic kernel delta_{T0(x)}"),
];

impl TransitionKernel {
    pub fn random_jump(map: BaseMap, eps: f64) -> Result<Self> {
        check_eps(map.as_ref(), eps)?;
        Ok(Self::RandomJump { map, eps })
    }

    pub fn additive(map: BaseMap, eps: f64) -> Result<Self> {
        check_eps(map.as_ref(), eps)?;
        Ok(Self::AdditiveMap { map, eps })
    }

    pub fn parametric(family: Arc<dyn MapFamily>, eps: f64) -> Result<Self> {
        Ok(Self::Parametric(RandomMapLaw::new(family, eps)?))
    }

    pub fn degenerate_trap(eps: f64) -> Result<Self> {
        Ok(Self::DegenerateTrap(TrapMap::new(eps)?))
    }

    pub fn delta(map: BaseMap) -> Self {
        Self::DeltaDeterministic { map }
    }

    /// Build a kernel by variant name. `family` and `amplitude` only apply to
    /// `parametric`; the trap kernel ignores `map`.
    pub fn from_name(
        variant: &str,
        map: BaseMap,
        eps: Option<f64>,
        family: Option<&str>,
        amplitude: Option<f64>,
    ) -> Result<Self> {
        let need_eps = || eps.ok_or_else(|| Error::Config(format!("kernel `{variant}` needs an epsilon")));
        match variant {
            "random_jump" => Self::random_jump(map, need_eps()?),
            "additive" => Self::additive(map, need_eps()?),
            "parametric" => {
                let fam: Arc<dyn MapFamily> = match family.unwrap_or("additive") {
                    "additive" => Arc::new(AdditiveFamily::new(map)),
                    "modulated" => Arc::new(ModulatedFamily::new(map, amplitude.unwrap_or(0.5))?),
                    other => return Err(Error::Config(format!("unknown map family `{other}`"))),
                };
                Self::parametric(fam, need_eps()?)
            }
            "trap" => Self::degenerate_trap(need_eps()?),
            "delta" => Ok(Self::delta(map)),
            other => Err(Error::Config(format!("unknown kernel variant `{other}`"))),
        }
    }

    /// Same variant with a different noise level.
    pub fn with_eps(&self, eps: f64) -> Result<Self> {
        match self {
            Self::RandomJump { map, .. } => Self::random_jump(map.clone(), eps),
            Self::AdditiveMap { map, .. } => Self::additive(map.clone(), eps),
            Self::Parametric(law) => Self::parametric(law.family.clone(), eps),
            Self::DegenerateTrap(_) => Self::degenerate_trap(eps),
            Self::DeltaDeterministic { .. } => Err(Error::Config("delta kernel has no noise level".into())),
        }
    }

    pub fn name(&self) -> String {
        match self {
            Self::RandomJump { map, eps } => format!("random_jump[{}; eps={eps}]", map.name()),
            Self::AdditiveMap { map, eps } => format!("additive[{}; eps={eps}]", map.name()),
            Self::Parametric(law) => format!("parametric[{}; eps={}]", law.family.name(), law.eps),
            Self::DegenerateTrap(t) => format!("trap[eps={}]", t.eps()),
            Self::DeltaDeterministic { map } => format!("delta[{}]", map.name()),
        }
    }

    pub fn eps(&self) -> Option<f64> {
        match self {
            Self::RandomJump { eps, .. } | Self::AdditiveMap { eps, .. } => Some(*eps),
            Self::Parametric(law) => Some(law.eps),
            Self::DegenerateTrap(t) => Some(t.eps()),
            Self::DeltaDeterministic { .. } => None,
        }
    }

    pub fn space(&self) -> StateSpace {
        match self {
            Self::RandomJump { map, .. } | Self::AdditiveMap { map, .. } | Self::DeltaDeterministic { map } => {
                map.space().clone()
            }
            Self::Parametric(law) => law.family.base().space().clone(),
            Self::DegenerateTrap(_) => StateSpace::circle(),
        }
    }

    pub fn dim(&self) -> usize {
        self.space().dim()
    }

    /// Number of uniforms consumed per step.
    pub fn symbol_width(&self) -> usize {
        match self {
            Self::RandomJump { map, .. } | Self::AdditiveMap { map, .. } => map.space().dim(),
            Self::Parametric(law) => law.family.param_dim(),
            Self::DegenerateTrap(_) => 1,
            Self::DeltaDeterministic { .. } => 0,
        }
    }

    /// The unperturbed map, when there is one.
    pub fn base_map(&self) -> Option<&BaseMap> {
        match self {
            Self::RandomJump { map, .. } | Self::AdditiveMap { map, .. } | Self::DeltaDeterministic { map } => {
                Some(map)
            }
            Self::Parametric(law) => Some(law.family.base()),
            Self::DegenerateTrap(_) => None,
        }
    }

    fn scalar_center(&self) -> Option<&dyn ScalarMap> {
        match self {
            Self::DegenerateTrap(t) => Some(t),
            _ => self.base_map().and_then(|m| m.scalar()),
        }
    }

    /// One random-map step driven by the uniform symbol `u`.
    #[inline]
    pub fn apply_symbol(&self, u: &[f64], x: &mut [f64]) {
        match self {
            Self::RandomJump { map, eps } | Self::AdditiveMap { map, eps } => {
                map.apply(x);
                for (v, ui) in x.iter_mut().zip(u) {
                    *v += eps * (2.0 * ui - 1.0);
                }
                map.space().reduce(x);
            }
            Self::Parametric(law) => {
                let mut w = [0.0; 8];
                let w = &mut w[..law.family.param_dim()];
                law.parameter(u, w);
                law.fiber(w, x);
            }
            Self::DegenerateTrap(t) => {
                x[0] = wrap_unit(t.lift(x[0]) + t.eps() * (2.0 * u[0] - 1.0));
            }
            Self::DeltaDeterministic { map } => map.apply(x),
        }
    }

    /// Draw `x_{k+1} ~ p(·|x)`.
    pub fn sample<R: RngCore + ?Sized>(&self, x: &[f64], rng: &mut R) -> Point {
        let mut u = [0.0; 8];
        let u = &mut u[..self.symbol_width()];
        for v in u.iter_mut() {
            *v = unit_uniform(rng);
        }
        let mut y = x.to_vec();
        self.apply_symbol(u, &mut y);
        y
    }

    /// Jacobian of the fiber map selected by `u`, evaluated at `x`.
    pub fn fiber_jacobian(&self, u: &[f64], x: &[f64], out: &mut DMatrix<f64>) {
        match self {
            Self::RandomJump { map, .. } | Self::AdditiveMap { map, .. } | Self::DeltaDeterministic { map } => {
                map.jacobian(x, out)
            }
            Self::Parametric(law) => {
                let mut w = [0.0; 8];
                let w = &mut w[..law.family.param_dim()];
                law.parameter(u, w);
                law.family.jacobian(w, x, out);
            }
            Self::DegenerateTrap(t) => out[(0, 0)] = t.derivative(x[0]),
        }
    }

    /// Support of `p(·|x)` for one-dimensional kernels as `(center lift, radius)`.
    /// The radius is `0` for the delta kernel.
    pub fn support_arc(&self, x: f64) -> Option<(f64, f64)> {
        let center = self.scalar_center()?.lift(x);
        let radius = match self {
            Self::RandomJump { eps, .. } | Self::AdditiveMap { eps, .. } => *eps,
            Self::Parametric(law) => law.eps * law.family.spread(x)?.abs(),
            Self::DegenerateTrap(t) => t.eps(),
            Self::DeltaDeterministic { .. } => 0.0,
        };
        Some((center, radius))
    }

    /// Lift of one fiber step for one-dimensional kernels, valid at any real `y`.
    pub fn lift_step(&self, u: &[f64], y: f64) -> Option<f64> {
        let periodic = self.space().is_periodic();
        let c = extended_lift(self.scalar_center()?, periodic, y);
        let shift = match self {
            Self::RandomJump { eps, .. } | Self::AdditiveMap { eps, .. } => eps * (2.0 * u[0] - 1.0),
            Self::Parametric(law) => {
                let g = law.family.spread(wrap_unit(y))?;
                law.eps * (2.0 * u[0] - 1.0) * g
            }
            Self::DegenerateTrap(t) => t.eps() * (2.0 * u[0] - 1.0),
            Self::DeltaDeterministic { .. } => 0.0,
        };
        Some(c + shift)
    }

    /// Transition density `p(y|x)` with respect to the flat volume.
    pub fn density(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        let space = self.space();
        match self {
            Self::DeltaDeterministic { .. } => Err(Error::NoDensity(self.name())),
            Self::RandomJump { map, eps } | Self::AdditiveMap { map, eps } => {
                let mut c = x.to_vec();
                map.apply(&mut c);
                let inside = c.iter().zip(y).all(|(&ci, &yi)| space.delta(ci, yi).abs() <= *eps);
                Ok(if inside { (2.0 * eps).powi(c.len() as i32).recip() } else { 0.0 })
            }
            Self::Parametric(_) | Self::DegenerateTrap(_) => {
                let (c, r) = self
                    .support_arc(x[0])
                    .ok_or_else(|| Error::Unsupported(format!("closed-form density for {}", self.name())))?;
                if r == 0.0 {
                    return Err(Error::NoDensity(self.name()));
                }
                let d = space.delta(wrap_unit(c), y[0]).abs();
                Ok(if d <= r { 1.0 / (2.0 * r) } else { 0.0 })
            }
        }
    }

    /// `p([lo, hi) | x)` for one-dimensional kernels; on the circle the arc
    /// `[lo, hi)` is given in lift coordinates with `hi - lo <= 1`.
    pub fn prob_interval(&self, x: f64, lo: f64, hi: f64) -> Option<f64> {
        let (c, r) = self.support_arc(x)?;
        let periodic = self.space().is_periodic();
        if r == 0.0 {
            let inside = if periodic { arc_contains(lo, hi, c) } else { c >= lo && c < hi };
            return Some(if inside { 1.0 } else { 0.0 });
        }
        Some(arc_overlap(c - r, c + r, lo, hi, periodic) / (2.0 * r))
    }
}

/// Length of `[a, b] ∩ [lo, hi]`, summing over integer translates when periodic.
pub fn arc_overlap(a: f64, b: f64, lo: f64, hi: f64, periodic: bool) -> f64 {
    let one = |s: f64| ((b + s).min(hi) - (a + s).max(lo)).max(0.0);
    if !periodic {
        return one(0.0);
    }
    // translate the support so that its left end lies in [lo, lo + 1)
    let k = (lo - a).div_euclid(1.0) + 1.0;
    let mut total = 0.0;
    for s in [k - 2.0, k - 1.0, k, k + 1.0] {
        total += one(s);
    }
    total
}
