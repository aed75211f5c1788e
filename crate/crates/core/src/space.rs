// SPDX-License-Identifier: Apache-2.0

//! Phase spaces and the deterministic base maps that the noise models perturb.
//!
//! Periodic coordinates live in `[0, 1)` and are reduced with a floor-based
//! wrap after every map application, so iterating `a + b` times walks exactly
//! the same floating-point path as iterating `a` times and then `b` times.
//!
//! One-dimensional maps additionally expose a continuous *lift* through
//! [`ScalarMap`]; the Ulam discretization and the generating-partition check
//! work on lifts so that arcs crossing the seam at `0 ≡ 1` need no special
//! casing.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

pub type Point = Vec<f64>;

/// Reduce a real number into `[0, 1)`.
#[inline]
pub fn wrap_unit(x: f64) -> f64 {
    let r = x - x.floor();
    // x slightly below an integer can round up to exactly 1.0
    if r >= 1.0 {
        0.0
    } else {
        r
    }
}

/// Signed shortest displacement from `a` to `b` on the unit circle, in `[-1/2, 1/2)`.
#[inline]
pub fn circle_delta(a: f64, b: f64) -> f64 {
    let d = b - a;
    d - (d + 0.5).floor()
}

#[derive(Clone, Debug, PartialEq)]
pub enum SpaceKind {
    Circle,
    Torus(usize),
    Interval(f64, f64),
    EuclideanBox(Vec<(f64, f64)>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct StateSpace {
    kind: SpaceKind,
}

impl StateSpace {
    pub fn circle() -> Self {
        Self { kind: SpaceKind::Circle }
    }

    pub fn torus(d: usize) -> Self {
        assert!(d >= 1, "torus dimension must be positive");
        Self { kind: SpaceKind::Torus(d) }
    }

    pub fn interval(a: f64, b: f64) -> Self {
        assert!(a < b, "interval must have a < b");
        Self { kind: SpaceKind::Interval(a, b) }
    }

    pub fn euclidean_box(bounds: Vec<(f64, f64)>) -> Self {
        assert!(!bounds.is_empty() && bounds.iter().all(|(a, b)| a < b));
        Self { kind: SpaceKind::EuclideanBox(bounds) }
    }

    pub fn kind(&self) -> &SpaceKind {
        &self.kind
    }

    pub fn dim(&self) -> usize {
        match &self.kind {
            SpaceKind::Circle | SpaceKind::Interval(..) => 1,
            SpaceKind::Torus(d) => *d,
            SpaceKind::EuclideanBox(b) => b.len(),
        }
    }

    pub fn is_periodic(&self) -> bool {
        matches!(self.kind, SpaceKind::Circle | SpaceKind::Torus(_))
    }

    /// Bounds of coordinate `i`; periodic coordinates report `(0, 1)`.
    pub fn bounds(&self, i: usize) -> (f64, f64) {
        match &self.kind {
            SpaceKind::Circle | SpaceKind::Torus(_) => (0.0, 1.0),
            SpaceKind::Interval(a, b) => (*a, *b),
            SpaceKind::EuclideanBox(b) => b[i],
        }
    }

    pub fn volume(&self) -> f64 {
        (0..self.dim())
            .map(|i| {
                let (a, b) = self.bounds(i);
                b - a
            })
            .product()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        if x.len() != self.dim() {
            return false;
        }
        x.iter().enumerate().all(|(i, &v)| {
            let (a, b) = self.bounds(i);
            if self.is_periodic() {
                (a..b).contains(&v)
            } else {
                v >= a && v <= b
            }
        })
    }

    /// Wrap periodic coordinates back into `[0, 1)`; no-op on boxes.
    #[inline]
    pub fn reduce(&self, x: &mut [f64]) {
        if self.is_periodic() {
            for v in x.iter_mut() {
                *v = wrap_unit(*v);
            }
        }
    }

    /// Per-coordinate displacement from `a` to `b` (shortest on periodic axes).
    #[inline]
    pub fn delta(&self, a: f64, b: f64) -> f64 {
        if self.is_periodic() {
            circle_delta(a, b)
        } else {
            b - a
        }
    }

    /// Euclidean distance using the flat metric; wraps on periodic axes.
    pub fn distance(&self, x: &[f64], y: &[f64]) -> f64 {
        x.iter()
            .zip(y)
            .map(|(&a, &b)| {
                let d = self.delta(a, b);
                d * d
            })
            .sum::<f64>()
            .sqrt()
    }
}

/// A deterministic map `T₀` of a [`StateSpace`] into itself.
pub trait DynamicalMap: fmt::Debug + Send + Sync {
    fn name(&self) -> String;

    fn space(&self) -> &StateSpace;

    /// Apply the map in place; the result is reduced into the space.
    fn apply(&self, x: &mut [f64]);

    fn jacobian(&self, x: &[f64], out: &mut DMatrix<f64>);

    /// Lift access for one-dimensional maps.
    fn scalar(&self) -> Option<&dyn ScalarMap> {
        None
    }

    /// Distance between the image `T₀(M)` and the boundary of a bounded
    /// (non-periodic) space. Additive noise up to this size keeps orbits inside.
    fn image_margin(&self) -> Option<f64> {
        None
    }
}

pub type BaseMap = Arc<dyn DynamicalMap>;

/// One-dimensional map given through a lift.
///
/// On the circle, `lift` is defined on `[0, 1)`, is continuous and
/// nondecreasing between consecutive [`seams`](ScalarMap::seams), and
/// satisfies `lift(1⁻) = lift(0) + degree`. On an interval the lift is the
/// map itself.
pub trait ScalarMap: fmt::Debug + Send + Sync {
    fn lift(&self, x: f64) -> f64;

    fn derivative(&self, x: f64) -> f64;

    /// Topological degree for circle maps; ignored for interval maps.
    fn degree(&self) -> i64 {
        0
    }

    /// Points inside the base cell where the lift is not smooth.
    fn seams(&self) -> Vec<f64> {
        Vec::new()
    }
}

/// Evaluate the lift of `map` at any real `y`, extending periodically by degree.
#[inline]
pub fn extended_lift(map: &dyn ScalarMap, periodic: bool, y: f64) -> f64 {
    if periodic {
        let k = y.floor();
        let mut f = y - k;
        let mut k = k;
        if f >= 1.0 {
            f = 0.0;
            k += 1.0;
        }
        map.lift(f) + map.degree() as f64 * k
    } else {
        map.lift(y)
    }
}

/// `T₀ⁿ(x)`.
pub fn iterate(map: &dyn DynamicalMap, x: &[f64], n: usize) -> Point {
    let mut y = x.to_vec();
    for _ in 0..n {
        map.apply(&mut y);
    }
    y
}

macro_rules! scalar_dynamical_map {
    ($ty:ty) => {
        impl DynamicalMap for $ty {
            fn name(&self) -> String {
                self.label()
            }

            fn space(&self) -> &StateSpace {
                &self.space
            }

            #[inline]
            fn apply(&self, x: &mut [f64]) {
                x[0] = self.lift(x[0]);
                self.space.reduce(x);
            }

            fn jacobian(&self, x: &[f64], out: &mut DMatrix<f64>) {
                out[(0, 0)] = self.derivative(x[0]);
            }

            fn scalar(&self) -> Option<&dyn ScalarMap> {
                Some(self)
            }

            fn image_margin(&self) -> Option<f64> {
                self.margin()
            }
        }
    };
}

/// `x ↦ b·x mod 1`.
#[derive(Clone, Debug)]
pub struct CircleExpanding {
    pub b: u32,
    space: StateSpace,
}

impl CircleExpanding {
    pub fn new(b: u32) -> Self {
        assert!(b >= 2, "expanding circle map needs b >= 2");
        Self { b, space: StateSpace::circle() }
    }

    fn label(&self) -> String {
        if self.b == 2 {
            "doubling".into()
        } else {
            format!("circle_expanding(b={})", self.b)
        }
    }

    fn margin(&self) -> Option<f64> {
        None
    }
}

impl ScalarMap for CircleExpanding {
    #[inline]
    fn lift(&self, x: f64) -> f64 {
        self.b as f64 * x
    }

    fn derivative(&self, _x: f64) -> f64 {
        self.b as f64
    }

    fn degree(&self) -> i64 {
        self.b as i64
    }
}

scalar_dynamical_map!(CircleExpanding);

/// `x ↦ x + α mod 1`.
#[derive(Clone, Debug)]
pub struct Rotation {
    pub alpha: f64,
    space: StateSpace,
}

impl Rotation {
    pub fn new(alpha: f64) -> Self {
        Self { alpha: wrap_unit(alpha), space: StateSpace::circle() }
    }

    fn label(&self) -> String {
        format!("rotation(alpha={})", self.alpha)
    }

    fn margin(&self) -> Option<f64> {
        None
    }
}

impl ScalarMap for Rotation {
    #[inline]
    fn lift(&self, x: f64) -> f64 {
        x + self.alpha
    }

    fn derivative(&self, _x: f64) -> f64 {
        1.0
    }

    fn degree(&self) -> i64 {
        1
    }
}

scalar_dynamical_map!(Rotation);

/// Identity of the circle.
#[derive(Clone, Debug)]
pub struct Identity {
    space: StateSpace,
}

impl Identity {
    pub fn new() -> Self {
        Self { space: StateSpace::circle() }
    }

    fn label(&self) -> String {
        "identity".into()
    }

    fn margin(&self) -> Option<f64> {
        None
    }
}

impl Default for Identity {
    fn default() -> Self {
        Self::new()
    }
}

impl ScalarMap for Identity {
    #[inline]
    fn lift(&self, x: f64) -> f64 {
        x
    }

    fn derivative(&self, _x: f64) -> f64 {
        1.0
    }

    fn degree(&self) -> i64 {
        1
    }
}

scalar_dynamical_map!(Identity);

/// `x ↦ c·x` on `[-1, 1]`, a sink at the origin.
#[derive(Clone, Debug)]
pub struct IntervalContraction {
    pub factor: f64,
    space: StateSpace,
}

impl IntervalContraction {
    pub fn new(factor: f64) -> Self {
        assert!(factor > 0.0 && factor < 1.0, "contraction factor must lie in (0, 1)");
        Self { factor, space: StateSpace::interval(-1.0, 1.0) }
    }

    fn label(&self) -> String {
        format!("contraction(factor={})", self.factor)
    }

    fn margin(&self) -> Option<f64> {
        Some(1.0 - self.factor)
    }
}

impl ScalarMap for IntervalContraction {
    #[inline]
    fn lift(&self, x: f64) -> f64 {
        self.factor * x
    }

    fn derivative(&self, _x: f64) -> f64 {
        self.factor
    }
}

scalar_dynamical_map!(IntervalContraction);

/// Hyperbolic toral automorphism `[[2,1],[1,1]] mod 1`.
#[derive(Clone, Debug)]
pub struct CatMap {
    space: StateSpace,
}

impl CatMap {
    pub fn new() -> Self {
        Self { space: StateSpace::torus(2) }
    }
}

impl Default for CatMap {
    fn default() -> Self {
        Self::new()
    }
}

impl DynamicalMap for CatMap {
    fn name(&self) -> String {
        "cat_map".into()
    }

    fn space(&self) -> &StateSpace {
        &self.space
    }

    #[inline]
    fn apply(&self, x: &mut [f64]) {
        let (a, b) = (x[0], x[1]);
        x[0] = 2.0 * a + b;
        x[1] = a + b;
        self.space.reduce(x);
    }

    fn jacobian(&self, _x: &[f64], out: &mut DMatrix<f64>) {
        out[(0, 0)] = 2.0;
        out[(0, 1)] = 1.0;
        out[(1, 0)] = 1.0;
        out[(1, 1)] = 1.0;
    }
}

/// `x ↦ c·x` on the box `[-1, 1]^d`.
#[derive(Clone, Debug)]
pub struct BoxContraction {
    pub factor: f64,
    space: StateSpace,
}

impl BoxContraction {
    pub fn new(factor: f64, dim: usize) -> Self {
        assert!(factor > 0.0 && factor < 1.0);
        Self { factor, space: StateSpace::euclidean_box(vec![(-1.0, 1.0); dim]) }
    }
}

impl DynamicalMap for BoxContraction {
    fn name(&self) -> String {
        format!("planar_contraction(factor={})", self.factor)
    }

    fn space(&self) -> &StateSpace {
        &self.space
    }

    #[inline]
    fn apply(&self, x: &mut [f64]) {
        for v in x.iter_mut() {
            *v *= self.factor;
        }
    }

    fn jacobian(&self, _x: &[f64], out: &mut DMatrix<f64>) {
        out.fill(0.0);
        for i in 0..out.nrows() {
            out[(i, i)] = self.factor;
        }
    }

    fn image_margin(&self) -> Option<f64> {
        Some(1.0 - self.factor)
    }
}

/// Catalog entry describing a builtin map and its parameters.
#[derive(Clone, Debug)]
pub struct MapInfo {
    pub name: &'static str,
    pub params: &'static [(&'static str, f64)],
    pub description: &'static str,
}

pub const DEFAULT_ALPHA: f64 = std::f64::consts::SQRT_2 - 1.0;

/// Every builtin map, with default parameters.
pub fn builtin_maps() -> Vec<MapInfo> {
    vec![
        MapInfo { name: "doubling", params: &[], description: "x -> 2x mod 1 on the circle" },
        MapInfo {
            name: "circle_expanding",
            params: &[("b", 3.0)],
            description: "x -> b*x mod 1 on the circle, integer b >= 2",
        },
        MapInfo {
            name: "rotation",
            params: &[("alpha", DEFAULT_ALPHA)],
            description: "x -> x + alpha mod 1 on the circle",
        },
        MapInfo { name: "identity", params: &[], description: "identity of the circle" },
        MapInfo { name: "cat_map", params: &[], description: "[[2,1],[1,1]] mod 1 on the 2-torus" },
        MapInfo {
            name: "contraction",
            params: &[("factor", 0.5)],
            description: "x -> factor*x on [-1,1], sink at 0",
        },
        MapInfo {
            name: "planar_contraction",
            params: &[("factor", 0.5)],
            description: "x -> factor*x on [-1,1]^2, sink at the origin",
        },
    ]
}

fn param(params: &BTreeMap<String, f64>, info: &MapInfo, key: &str) -> f64 {
    params
        .get(key)
        .copied()
        .or_else(|| info.params.iter().find(|(k, _)| *k == key).map(|(_, v)| *v))
        .expect("parameter declared in catalog")
}

/// Construct a builtin map by catalog name.
pub fn builtin_map(name: &str, params: &BTreeMap<String, f64>) -> Result<BaseMap> {
    let info = builtin_maps()
        .into_iter()
        .find(|m| m.name == name)
        .ok_or_else(|| Error::Config(format!("unknown map `{name}`")))?;
    for key in params.keys() {
        if !info.params.iter().any(|(k, _)| k == key) {
            return Err(Error::Config(format!("map `{name}` has no parameter `{key}`")));
        }
    }
    let map: BaseMap = match name {
        "doubling" => Arc::new(CircleExpanding::new(2)),
        "circle_expanding" => {
            let b = param(params, &info, "b");
            if b.fract() != 0.0 || b < 2.0 {
                return Err(Error::Config(format!("circle_expanding needs integer b >= 2, got {b}")));
            }
            Arc::new(CircleExpanding::new(b as u32))
        }
        "rotation" => Arc::new(Rotation::new(param(params, &info, "alpha"))),
        "identity" => Arc::new(Identity::new()),
        "cat_map" => Arc::new(CatMap::new()),
        "contraction" | "planar_contraction" => {
            let f = param(params, &info, "factor");
            if !(f > 0.0 && f < 1.0) {
                return Err(Error::Config(format!("contraction factor must lie in (0,1), got {f}")));
            }
            if name == "contraction" {
                Arc::new(IntervalContraction::new(f))
            } else {
                Arc::new(BoxContraction::new(f, 2))
            }
        }
        _ => unreachable!(),
    };
    Ok(map)
}

/// `cos(2πx)`, the standard test observable on the circle.
pub fn cos2pi(x: &[f64]) -> f64 {
    (2.0 * PI * x[0]).cos()
}
