//! Frequency cones C(W,R), frequency windows V, and the dilation sets
//! K_i(W,V,R) = {h : h^{-T}V ⊂ C(W,R)} and K_o(W,V,R) = {h : h^{-T}V ∩ C(W,R) ≠ ∅}.
//!
//! Predicates are three-valued. In d = 2 every built-in patch is an angular
//! sector narrower than a half plane, and windows are bracketed by convex
//! polygons, so most answers are certified by polygon clipping. In higher
//! dimensions box windows are certified through their vertices; everything
//! else falls back to the window's certificate points.

use crate::error::{Error, Result};
use crate::group::{mul, norm, GroupElement};
use nalgebra::DMatrix;
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

const POLY_SIDES: usize = 256;

/// Relatively open subset W of the unit sphere.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case")]
pub enum DirectionPatch {
    /// {u : |u − center| < radius}
    SphericalCap { center: Vec<f64>, radius: f64 },
    /// {u : |u_1 − 1| < epsilon}
    ShearletAxisBand { epsilon: f64 },
    /// {u : 1/(1+ε) < √d·u_i < 1+ε for all i}
    DiagonalBand { epsilon: f64 },
}

/// √(2ε−ε²)/(1−ε): the bound on |v'|/v_1 describing the axis band.
pub fn axis_band_ratio(epsilon: f64) -> f64 {
    (2.0 * epsilon - epsilon * epsilon).sqrt() / (1.0 - epsilon)
}

impl DirectionPatch {
    pub fn cap(center: Vec<f64>, radius: f64) -> Self {
        let n = norm(&center);
        DirectionPatch::SphericalCap { center: center.iter().map(|x| x / n).collect(), radius }
    }

    pub fn validate(&self, d: usize) -> Result<()> {
        match self {
            DirectionPatch::SphericalCap { center, radius } => {
                if center.len() != d {
                    return Err(Error::Parameter("cap center has wrong dimension".into()));
                }
                if (norm(center) - 1.0).abs() > 1e-9 {
                    return Err(Error::Parameter("cap center must be a unit vector".into()));
                }
                if !(*radius > 0.0) {
                    return Err(Error::Parameter("cap radius must be positive".into()));
                }
            }
            DirectionPatch::ShearletAxisBand { epsilon } => {
                if !(*epsilon > 0.0 && *epsilon < 1.0) {
                    return Err(Error::Parameter(format!("axis band epsilon must lie in (0,1), got {epsilon}")));
                }
            }
            DirectionPatch::DiagonalBand { epsilon } => {
                if !(*epsilon > 0.0) {
                    return Err(Error::Parameter("diagonal band epsilon must be positive".into()));
                }
            }
        }
        Ok(())
    }

    /// Membership of a unit vector.
    pub fn contains_direction(&self, u: &[f64]) -> bool {
        match self {
            DirectionPatch::SphericalCap { center, radius } => {
                let d2: f64 = u.iter().zip(center).map(|(a, b)| (a - b) * (a - b)).sum();
                d2 < radius * radius
            }
            DirectionPatch::ShearletAxisBand { epsilon } => (u[0] - 1.0).abs() < *epsilon,
            DirectionPatch::DiagonalBand { epsilon } => {
                let s = (u.len() as f64).sqrt();
                u.iter().all(|x| s * x > 1.0 / (1.0 + epsilon) && s * x < 1.0 + epsilon)
            }
        }
    }

    /// A direction inside the patch.
    pub fn center_direction(&self, d: usize) -> Vec<f64> {
        match self {
            DirectionPatch::SphericalCap { center, .. } => center.clone(),
            DirectionPatch::ShearletAxisBand { .. } => crate::group::unit(d, 0),
            DirectionPatch::DiagonalBand { .. } => vec![1.0 / (d as f64).sqrt(); d],
        }
    }

    /// Angular interval (lo, hi), hi − lo < π, describing the patch in d = 2.
    pub fn sector_2d(&self) -> Option<(f64, f64)> {
        match self {
            DirectionPatch::SphericalCap { center, radius } => {
                if center.len() != 2 || *radius >= 2f64.sqrt() {
                    return None;
                }
                let phi = center[1].atan2(center[0]);
                let half = 2.0 * (radius / 2.0).asin();
                Some((phi - half, phi + half))
            }
            DirectionPatch::ShearletAxisBand { epsilon } => {
                let t = axis_band_ratio(*epsilon).atan();
                Some((-t, t))
            }
            DirectionPatch::DiagonalBand { epsilon } => {
                // In the plane the upper constraints follow from the lower ones.
                let k = 1.0 / ((1.0 + epsilon) * 2f64.sqrt());
                Some((k.asin(), k.acos()))
            }
        }
    }

    /// Convex function g with g(v) < 0 iff v ≠ 0 points into the patch, when
    /// such a description exists.
    pub fn convex_violation(&self, v: &[f64]) -> Option<f64> {
        let n = norm(v);
        match self {
            DirectionPatch::SphericalCap { center, radius } => {
                let cos_half = 1.0 - radius * radius / 2.0;
                if cos_half < 0.0 {
                    return None;
                }
                let dot: f64 = v.iter().zip(center).map(|(a, b)| a * b).sum();
                Some(n * cos_half - dot)
            }
            DirectionPatch::ShearletAxisBand { epsilon } => Some(norm(&v[1..]) - axis_band_ratio(*epsilon) * v[0]),
            DirectionPatch::DiagonalBand { epsilon } => {
                let d = v.len() as f64;
                let k = 1.0 / ((1.0 + epsilon) * d.sqrt());
                let top = (1.0 - (d - 1.0) * k * k).max(0.0).sqrt();
                if top > (1.0 + epsilon) / d.sqrt() {
                    return None;
                }
                Some(v.iter().map(|x| k * n - x).fold(f64::NEG_INFINITY, f64::max))
            }
        }
    }

    /// Bounds on the first coordinate of unit vectors in the patch:
    /// (sign, min |u_1|, max |u'|/|u_1|), when u_1 keeps one sign.
    pub(crate) fn first_axis_bounds(&self, d: usize) -> Option<(f64, f64, f64)> {
        match self {
            DirectionPatch::ShearletAxisBand { epsilon } => Some((1.0, 1.0 - epsilon, axis_band_ratio(*epsilon))),
            DirectionPatch::SphericalCap { center, radius } => {
                let lo = center[0].abs() - radius;
                if lo <= 0.0 {
                    return None;
                }
                let rest = norm(&center[1..]) + radius;
                Some((center[0].signum(), lo, rest / lo))
            }
            DirectionPatch::DiagonalBand { epsilon } => {
                let k = 1.0 / ((1.0 + epsilon) * (d as f64).sqrt());
                Some((1.0, k, (1.0 - k * k).sqrt() / k))
            }
        }
    }

    /// Componentwise bounds [lo_i, hi_i] of unit vectors in the patch, each
    /// interval excluding 0, when they exist.
    pub(crate) fn component_bounds(&self, d: usize) -> Option<Vec<(f64, f64)>> {
        let b: Vec<(f64, f64)> = match self {
            DirectionPatch::DiagonalBand { epsilon } => {
                let s = (d as f64).sqrt();
                vec![(1.0 / ((1.0 + epsilon) * s), ((1.0 + epsilon) / s).min(1.0)); d]
            }
            DirectionPatch::SphericalCap { center, radius } => center.iter().map(|c| ((c - radius).max(-1.0), (c + radius).min(1.0))).collect(),
            DirectionPatch::ShearletAxisBand { .. } => return None,
        };
        if b.iter().any(|(l, h)| *l <= 0.0 && *h >= 0.0) {
            return None;
        }
        Some(b)
    }
}

/// The cone C(W,R) = {v ≠ 0 : v/|v| ∈ W, |v| > R}; R = 0 means no radius cut.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConeSpec {
    pub patch: DirectionPatch,
    pub radius: f64,
}

impl ConeSpec {
    pub fn new(patch: DirectionPatch, radius: f64) -> Result<Self> {
        if !(radius >= 0.0) {
            return Err(Error::Parameter("cone radius must be nonnegative".into()));
        }
        Ok(Self { patch, radius })
    }
}

pub fn cone_contains(cone: &ConeSpec, v: &[f64]) -> bool {
    patch_cone_contains(&cone.patch, cone.radius, v)
}

pub(crate) fn patch_cone_contains(patch: &DirectionPatch, r: f64, v: &[f64]) -> bool {
    let n = norm(v);
    if n == 0.0 || n <= r {
        return false;
    }
    match patch {
        DirectionPatch::ShearletAxisBand { epsilon } => v[0] > 0.0 && norm(&v[1..]) < axis_band_ratio(*epsilon) * v[0],
        _ => {
            let u: Vec<f64> = v.iter().map(|x| x / n).collect();
            patch.contains_direction(&u)
        }
    }
}

/// Three-valued predicate result.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Membership {
    True,
    False,
    /// Not certified; carries the fraction of certificate points supporting membership.
    Approximate(f64),
}

impl Membership {
    pub fn is_true(self) -> bool {
        matches!(self, Membership::True)
    }
    /// True, or approximate with at least the given confidence.
    pub fn at_least(self, confidence: f64) -> bool {
        match self {
            Membership::True => true,
            Membership::False => false,
            Membership::Approximate(c) => c >= confidence,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case")]
pub enum WindowShape {
    Ball { center: Vec<f64>, radius: f64 },
    Box { lo: Vec<f64>, hi: Vec<f64> },
    /// (1,2) × B_1(0) ⊂ ℝ × ℝ^{d−1}
    ShearletBox,
    AnnulusSector { r_min: f64, r_max: f64, patch: DirectionPatch },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WindowSpec {
    #[serde(flatten)]
    pub shape: WindowShape,
    pub dimension: usize,
    #[serde(default = "default_budget")]
    pub sample_budget: usize,
}

fn default_budget() -> usize {
    64
}

/// Open, bounded frequency window with certificate points on its closure.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "WindowSpec", into = "WindowSpec")]
pub struct FrequencyWindow {
    pub shape: WindowShape,
    pub dimension: usize,
    pub sample_budget: usize,
    pub certificate_points: Vec<Vec<f64>>,
    lo: Vec<f64>,
    hi: Vec<f64>,
}

impl TryFrom<WindowSpec> for FrequencyWindow {
    type Error = Error;
    fn try_from(s: WindowSpec) -> Result<Self> {
        FrequencyWindow::new(s.shape, s.dimension, s.sample_budget)
    }
}

impl From<FrequencyWindow> for WindowSpec {
    fn from(w: FrequencyWindow) -> Self {
        WindowSpec { shape: w.shape, dimension: w.dimension, sample_budget: w.sample_budget }
    }
}

impl FrequencyWindow {
    pub fn new(shape: WindowShape, dimension: usize, sample_budget: usize) -> Result<Self> {
        let d = dimension;
        let (lo, hi) = match &shape {
            WindowShape::Ball { center, radius } => {
                if center.len() != d {
                    return Err(Error::Parameter("ball center has wrong dimension".into()));
                }
                if !(*radius > 0.0) {
                    return Err(Error::EmptyWindow);
                }
                (center.iter().map(|c| c - radius).collect(), center.iter().map(|c| c + radius).collect())
            }
            WindowShape::Box { lo, hi } => {
                if lo.len() != d || hi.len() != d {
                    return Err(Error::Parameter("box bounds have wrong dimension".into()));
                }
                if lo.iter().zip(hi).any(|(a, b)| !(a < b)) {
                    return Err(Error::EmptyWindow);
                }
                (lo.clone(), hi.clone())
            }
            WindowShape::ShearletBox => {
                let mut lo = vec![-1.0; d];
                let mut hi = vec![1.0; d];
                lo[0] = 1.0;
                hi[0] = 2.0;
                (lo, hi)
            }
            WindowShape::AnnulusSector { r_min, r_max, patch } => {
                patch.validate(d)?;
                if !(*r_min >= 0.0 && r_min < r_max) {
                    return Err(Error::EmptyWindow);
                }
                let mut lo = vec![f64::INFINITY; d];
                let mut hi = vec![f64::NEG_INFINITY; d];
                if let (2, Some((a, b))) = (d, patch.sector_2d()) {
                    let steps = 512;
                    for j in 0..=steps {
                        let t = a + (b - a) * j as f64 / steps as f64;
                        for r in [*r_min, *r_max] {
                            let p = [r * t.cos(), r * t.sin()];
                            for k in 0..2 {
                                lo[k] = lo[k].min(p[k]);
                                hi[k] = hi[k].max(p[k]);
                            }
                        }
                    }
                } else if let Some(b) = patch.component_bounds(d) {
                    for k in 0..d {
                        let cands = [r_min * b[k].0, r_min * b[k].1, r_max * b[k].0, r_max * b[k].1];
                        lo[k] = cands.iter().cloned().fold(f64::INFINITY, f64::min);
                        hi[k] = cands.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                    }
                } else {
                    lo = vec![-r_max; d];
                    hi = vec![*r_max; d];
                }
                (lo, hi)
            }
        };
        let mut w = FrequencyWindow { shape, dimension: d, sample_budget, certificate_points: vec![], lo, hi };
        w.certificate_points = w.build_certificates();
        if w.certificate_points.is_empty() {
            return Err(Error::EmptyWindow);
        }
        Ok(w)
    }

    pub fn shearlet_box(d: usize) -> Self {
        Self::new(WindowShape::ShearletBox, d, default_budget()).expect("valid")
    }

    pub fn ball(center: Vec<f64>, radius: f64) -> Result<Self> {
        let d = center.len();
        Self::new(WindowShape::Ball { center, radius }, d, default_budget())
    }

    pub fn boxed(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        let d = lo.len();
        Self::new(WindowShape::Box { lo, hi }, d, default_budget())
    }

    pub fn annulus_sector(r_min: f64, r_max: f64, patch: DirectionPatch, d: usize) -> Result<Self> {
        Self::new(WindowShape::AnnulusSector { r_min, r_max, patch }, d, default_budget())
    }

    /// The similitude windows B_{1/n}(e_1).
    pub fn similitude_family(n: f64, d: usize) -> Result<Self> {
        Self::ball(crate::group::unit(d, 0), 1.0 / n)
    }

    /// The diagonal windows {n/(n+1) < |ξ| < (n+1)/n, ξ/|ξ| ∈ U_{1/n}}.
    pub fn diagonal_family(n: f64, d: usize) -> Result<Self> {
        Self::annulus_sector(n / (n + 1.0), (n + 1.0) / n, DirectionPatch::DiagonalBand { epsilon: 1.0 / n }, d)
    }

    pub fn with_budget(mut self, budget: usize) -> Self {
        self.sample_budget = budget;
        self.certificate_points = self.build_certificates();
        self
    }

    /// The window scaled linearly about its center by `factor`.
    pub fn shrunk(&self, factor: f64) -> Result<Self> {
        let c = self.center();
        let shape = match &self.shape {
            WindowShape::Ball { center, radius } => WindowShape::Ball { center: center.clone(), radius: radius * factor },
            WindowShape::Box { .. } | WindowShape::ShearletBox => WindowShape::Box {
                lo: self.lo.iter().zip(&c).map(|(l, m)| m + factor * (l - m)).collect(),
                hi: self.hi.iter().zip(&c).map(|(h, m)| m + factor * (h - m)).collect(),
            },
            WindowShape::AnnulusSector { r_min, r_max, patch } => {
                let mid = 0.5 * (r_min + r_max);
                let half = 0.5 * (r_max - r_min) * factor;
                WindowShape::AnnulusSector { r_min: mid - half, r_max: mid + half, patch: patch.clone() }
            }
        };
        Self::new(shape, self.dimension, self.sample_budget)
    }

    pub fn contains(&self, xi: &[f64]) -> bool {
        match &self.shape {
            WindowShape::Ball { center, radius } => xi.iter().zip(center).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() < radius * radius,
            WindowShape::Box { lo, hi } => xi.iter().enumerate().all(|(k, x)| *x > lo[k] && *x < hi[k]),
            WindowShape::ShearletBox => xi[0] > 1.0 && xi[0] < 2.0 && norm(&xi[1..]) < 1.0,
            WindowShape::AnnulusSector { r_min, r_max, patch } => {
                let n = norm(xi);
                n > *r_min && n < *r_max && patch.contains_direction(&xi.iter().map(|x| x / n).collect::<Vec<_>>())
            }
        }
    }

    pub fn bounding_box(&self) -> (&[f64], &[f64]) {
        (&self.lo, &self.hi)
    }

    pub fn center(&self) -> Vec<f64> {
        match &self.shape {
            WindowShape::Ball { center, .. } => center.clone(),
            WindowShape::AnnulusSector { r_min, r_max, patch } => {
                patch.center_direction(self.dimension).iter().map(|u| u * 0.5 * (r_min + r_max)).collect()
            }
            _ => self.lo.iter().zip(&self.hi).map(|(a, b)| 0.5 * (a + b)).collect(),
        }
    }

    /// Supremum of |ξ| over the window.
    pub fn sup_norm(&self) -> f64 {
        match &self.shape {
            WindowShape::Ball { center, radius } => norm(center) + radius,
            WindowShape::AnnulusSector { r_max, .. } => *r_max,
            WindowShape::ShearletBox => 5f64.sqrt(),
            WindowShape::Box { .. } => box_corners(&self.lo, &self.hi).iter().map(|c| norm(c)).fold(0.0, f64::max),
        }
    }

    /// Infimum of |ξ| over the window.
    pub fn inf_norm(&self) -> f64 {
        match &self.shape {
            WindowShape::Ball { center, radius } => (norm(center) - radius).max(0.0),
            WindowShape::AnnulusSector { r_min, .. } => *r_min,
            WindowShape::ShearletBox => 1.0,
            WindowShape::Box { lo, hi } => norm(&lo.iter().zip(hi).map(|(a, b)| if *a > 0.0 { *a } else if *b < 0.0 { -*b } else { 0.0 }).collect::<Vec<_>>()),
        }
    }

    /// Exact polytope vertices when the window is a box.
    fn exact_vertices(&self) -> Option<Vec<Vec<f64>>> {
        match &self.shape {
            WindowShape::Box { lo, hi } => Some(box_corners(lo, hi)),
            WindowShape::ShearletBox if self.dimension == 2 => Some(box_corners(&self.lo, &self.hi)),
            _ => None,
        }
    }

    /// Convex polygon brackets (outer ⊇ V, inner ⊆ V) in d = 2, counterclockwise.
    fn polygons_2d(&self) -> Option<(Vec<[f64; 2]>, Option<Vec<[f64; 2]>>, bool)> {
        if self.dimension != 2 {
            return None;
        }
        match &self.shape {
            WindowShape::Box { .. } | WindowShape::ShearletBox => {
                let (l, h) = (&self.lo, &self.hi);
                let p = vec![[l[0], l[1]], [h[0], l[1]], [h[0], h[1]], [l[0], h[1]]];
                Some((p.clone(), Some(p), true))
            }
            WindowShape::Ball { center, radius } => {
                let n = POLY_SIDES;
                let step = 2.0 * PI / n as f64;
                let outer_r = radius / (step / 2.0).cos();
                let ring = |r: f64| (0..n).map(|j| [center[0] + r * (j as f64 * step).cos(), center[1] + r * (j as f64 * step).sin()]).collect::<Vec<_>>();
                Some((ring(outer_r), Some(ring(*radius)), false))
            }
            WindowShape::AnnulusSector { r_min, r_max, patch } => {
                let (a, b) = patch.sector_2d()?;
                let m = 64;
                let step = (b - a) / m as f64;
                let e = |t: f64, r: f64| [r * t.cos(), r * t.sin()];
                let mut outer = vec![e(b, *r_min), e(a, *r_min)];
                let ro = r_max / (step / 2.0).cos();
                for j in 0..=m {
                    let t = a + j as f64 * step;
                    let r = if j == 0 || j == m { r_max / (step / 2.0).cos() } else { ro };
                    outer.push(e(t, r));
                }
                let rc = r_min / ((b - a) / 2.0).cos();
                let inner = if rc < *r_max {
                    let mut p = vec![e(b, rc), e(a, rc)];
                    for j in 0..=m {
                        p.push(e(a + j as f64 * step, *r_max));
                    }
                    Some(p)
                } else {
                    None
                };
                Some((outer, inner, false))
            }
        }
    }

    fn build_certificates(&self) -> Vec<Vec<f64>> {
        let d = self.dimension;
        let mut rng = crate::rng::substream(0x5eed_0f_ce27, d as u64);
        let mut pts = Vec::new();
        match &self.shape {
            WindowShape::Box { lo, hi } => {
                pts.extend(box_corners(lo, hi));
                let c: Vec<f64> = lo.iter().zip(hi).map(|(a, b)| 0.5 * (a + b)).collect();
                for k in 0..d {
                    for v in [lo[k], hi[k]] {
                        let mut p = c.clone();
                        p[k] = v;
                        pts.push(p);
                    }
                }
                pts.push(c);
            }
            WindowShape::Ball { center, radius } => {
                pts.push(center.clone());
                for k in 0..d {
                    for s in [-1.0, 1.0] {
                        let mut p = center.clone();
                        p[k] += s * radius;
                        pts.push(p);
                    }
                }
                for _ in 0..self.sample_budget {
                    let u = random_unit(d, &mut rng);
                    pts.push(center.iter().zip(&u).map(|(c, x)| c + radius * x).collect());
                }
            }
            WindowShape::ShearletBox => {
                for x0 in [1.0, 1.5, 2.0] {
                    let mut p = vec![0.0; d];
                    p[0] = x0;
                    pts.push(p.clone());
                    for k in 1..d {
                        for s in [-1.0, 1.0] {
                            let mut q = p.clone();
                            q[k] = s;
                            pts.push(q);
                        }
                    }
                }
                for _ in 0..self.sample_budget {
                    let mut p = vec![rng.random_range(1.0..=2.0)];
                    if d > 1 {
                        let u = random_unit(d - 1, &mut rng);
                        p.extend(u);
                    }
                    pts.push(p);
                }
            }
            WindowShape::AnnulusSector { r_min, r_max, patch } => {
                let c = patch.center_direction(d);
                for r in [*r_min, 0.5 * (r_min + r_max), *r_max] {
                    pts.push(c.iter().map(|u| u * r).collect());
                }
                let mut tries = 0;
                while pts.len() < 3 + self.sample_budget && tries < 1000 * (self.sample_budget + 1) {
                    tries += 1;
                    let p: Vec<f64> = (0..d).map(|k| rng.random_range(self.lo[k]..=self.hi[k])).collect();
                    if self.contains(&p) {
                        pts.push(p);
                    }
                }
            }
        }
        pts
    }

    /// Uniform sample from the window by rejection from its bounding box.
    pub fn sample_interior<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        loop {
            let p: Vec<f64> = (0..self.dimension).map(|k| rng.random_range(self.lo[k]..self.hi[k])).collect();
            if self.contains(&p) {
                return p;
            }
        }
    }

    /// Lebesgue measure of the window.
    pub fn volume(&self) -> f64 {
        let d = self.dimension as i32;
        let ball = |r: f64, n: i32| PI.powf(n as f64 / 2.0) / gamma_half(n) * r.powi(n);
        match &self.shape {
            WindowShape::Ball { radius, .. } => ball(*radius, d),
            WindowShape::Box { lo, hi } => lo.iter().zip(hi).map(|(a, b)| b - a).product(),
            WindowShape::ShearletBox => ball(1.0, d - 1),
            WindowShape::AnnulusSector { r_min, r_max, patch } => match (self.dimension, patch.sector_2d()) {
                (2, Some((a, b))) => 0.5 * (b - a) * (r_max * r_max - r_min * r_min),
                _ => f64::NAN,
            },
        }
    }
}

/// Γ(n/2 + 1)
fn gamma_half(n: i32) -> f64 {
    if n == 0 {
        1.0
    } else if n == 1 {
        PI.sqrt() / 2.0
    } else {
        (n as f64 / 2.0) * gamma_half(n - 2)
    }
}

pub(crate) fn random_unit<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..d).map(|_| rng.sample::<f64, _>(rand_distr::StandardNormal)).collect();
        let n = norm(&v);
        if n > 1e-12 {
            return v.iter().map(|x| x / n).collect();
        }
    }
}

pub(crate) fn box_corners(lo: &[f64], hi: &[f64]) -> Vec<Vec<f64>> {
    let d = lo.len();
    (0..1usize << d).map(|m| (0..d).map(|k| if m >> k & 1 == 1 { hi[k] } else { lo[k] }).collect()).collect()
}

/// min |Mξ| over the box [lo, hi] by exact coordinate descent on the convex quadratic.
pub(crate) fn min_norm_over_box(m: &DMatrix<f64>, lo: &[f64], hi: &[f64]) -> f64 {
    let d = lo.len();
    let a = m.transpose() * m;
    let mut x: Vec<f64> = lo.iter().zip(hi).map(|(l, h)| 0.5 * (l + h)).collect();
    for _ in 0..20_000 {
        let mut change = 0.0f64;
        for k in 0..d {
            let g: f64 = (0..d).map(|j| a[(k, j)] * x[j]).sum();
            let nx = (x[k] - g / a[(k, k)]).clamp(lo[k], hi[k]);
            change = change.max((nx - x[k]).abs());
            x[k] = nx;
        }
        if change < 1e-15 {
            break;
        }
    }
    norm(&mul(m, &x))
}

type P2 = [f64; 2];

fn clip(poly: &[P2], n: P2) -> Vec<P2> {
    let mut out = Vec::with_capacity(poly.len() + 2);
    let k = poly.len();
    for i in 0..k {
        let a = poly[i];
        let b = poly[(i + 1) % k];
        let fa = a[0] * n[0] + a[1] * n[1];
        let fb = b[0] * n[0] + b[1] * n[1];
        if fa >= 0.0 {
            out.push(a);
        }
        if (fa >= 0.0) != (fb >= 0.0) {
            let t = fa / (fa - fb);
            out.push([a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]);
        }
    }
    out
}

fn area(poly: &[P2]) -> f64 {
    let k = poly.len();
    (0..k).map(|i| poly[i][0] * poly[(i + 1) % k][1] - poly[(i + 1) % k][0] * poly[i][1]).sum::<f64>() * 0.5
}

fn min_norm_polygon(poly: &[P2]) -> f64 {
    let k = poly.len();
    // origin inside a convex polygon: all edge cross products share a sign
    let crosses: Vec<f64> = (0..k)
        .map(|i| {
            let a = poly[i];
            let b = poly[(i + 1) % k];
            a[0] * b[1] - a[1] * b[0]
        })
        .collect();
    if crosses.iter().all(|c| *c > 0.0) || crosses.iter().all(|c| *c < 0.0) {
        return 0.0;
    }
    (0..k)
        .map(|i| {
            let a = poly[i];
            let b = poly[(i + 1) % k];
            let ab = [b[0] - a[0], b[1] - a[1]];
            let l2 = ab[0] * ab[0] + ab[1] * ab[1];
            let t = if l2 > 0.0 { (-(a[0] * ab[0] + a[1] * ab[1]) / l2).clamp(0.0, 1.0) } else { 0.0 };
            (a[0] + t * ab[0]).hypot(a[1] + t * ab[1])
        })
        .fold(f64::INFINITY, f64::min)
}

fn map2(m: &DMatrix<f64>, poly: &[P2]) -> Vec<P2> {
    let mut out: Vec<P2> = poly.iter().map(|p| [m[(0, 0)] * p[0] + m[(0, 1)] * p[1], m[(1, 0)] * p[0] + m[(1, 1)] * p[1]]).collect();
    if m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)] < 0.0 {
        out.reverse();
    }
    out
}

fn sector_normals(lo: f64, hi: f64) -> (P2, P2) {
    ([-lo.sin(), lo.cos()], [hi.sin(), -hi.cos()])
}

fn poly_in_sector(poly: &[P2], n1: P2, n2: P2) -> bool {
    poly.iter().all(|p| p[0] * n1[0] + p[1] * n1[1] > 0.0 && p[0] * n2[0] + p[1] * n2[1] > 0.0)
}

/// Whether the clipped image polygon certifies a nonempty intersection with C(W,R).
fn poly_meets_cone(poly: &[P2], n1: P2, n2: P2, r: f64) -> bool {
    let q = clip(&clip(poly, n1), n2);
    q.len() >= 3 && area(&q).abs() > 0.0 && q.iter().map(|p| p[0].hypot(p[1])).fold(0.0, f64::max) > r
}

fn check_window(h: &GroupElement, v: &FrequencyWindow) -> Result<()> {
    if h.dimension() != v.dimension {
        return Err(Error::Parameter("window and element dimensions differ".into()));
    }
    Ok(())
}

fn certificate_fraction(h: &GroupElement, patch: &DirectionPatch, v: &FrequencyWindow, r: f64) -> (usize, usize) {
    let hits = v.certificate_points.iter().filter(|p| patch_cone_contains(patch, r, &h.inv_transpose_apply(p))).count();
    (hits, v.certificate_points.len())
}

/// Certificate point images strictly outside the closed cone.
fn certificate_clearly_outside(h: &GroupElement, patch: &DirectionPatch, v: &FrequencyWindow, r: f64) -> bool {
    v.certificate_points.iter().any(|p| {
        let w = h.inv_transpose_apply(p);
        let n = norm(&w);
        if n < r * (1.0 - 1e-12) {
            return true;
        }
        match patch.convex_violation(&w) {
            Some(g) => g > 1e-12 * n,
            None => false,
        }
    })
}

/// K_i test for a diagonal map, a diagonal-band target and an annulus-sector
/// window whose directions lie in a positive box. Direction ratios are bounded
/// exactly over that box; None when the setting does not apply or is undecided.
fn diagonal_band_k_i(m: &DMatrix<f64>, patch: &DirectionPatch, v: &FrequencyWindow, r: f64) -> Option<bool> {
    let (DirectionPatch::DiagonalBand { epsilon }, WindowShape::AnnulusSector { r_min, patch: directions, .. }) = (patch, &v.shape) else {
        return None;
    };
    let d = v.dimension;
    if (0..d).any(|i| (0..d).any(|j| i != j && m[(i, j)] != 0.0)) {
        return None;
    }
    let b = directions.component_bounds(d)?;
    if b.iter().any(|(l, _)| *l <= 0.0) {
        return None;
    }
    if (0..d).any(|i| m[(i, i)] <= 0.0) {
        return Some(false);
    }
    let lo: Vec<f64> = (0..d).map(|i| m[(i, i)] * b[i].0).collect();
    let hi: Vec<f64> = (0..d).map(|i| m[(i, i)] * b[i].1).collect();
    let (sum_lo, sum_hi) = (lo.iter().map(|x| x * x).sum::<f64>(), hi.iter().map(|x| x * x).sum::<f64>());
    let s = (d as f64).sqrt();
    let inside = (0..d).all(|i| {
        let min_ratio = lo[i] / (sum_hi - hi[i] * hi[i] + lo[i] * lo[i]).sqrt();
        let max_ratio = hi[i] / (sum_lo - lo[i] * lo[i] + hi[i] * hi[i]).sqrt();
        s * min_ratio > 1.0 / (1.0 + epsilon) && s * max_ratio < 1.0 + epsilon
    });
    (inside && r_min * sum_lo.sqrt() > r).then_some(true)
}

/// Whether h ∈ K_i(W, V, R), i.e. h^{-T}V ⊂ C(W,R).
pub fn k_i_contains(h: &GroupElement, patch: &DirectionPatch, v: &FrequencyWindow, r: f64) -> Result<Membership> {
    check_window(h, v)?;
    let m = &h.inv_transpose;
    match diagonal_band_k_i(m, patch, v, r) {
        Some(true) => return Ok(Membership::True),
        Some(false) => return Ok(Membership::False),
        None => {}
    }
    if let (Some((a, b)), Some((outer, inner, exact))) = (patch.sector_2d(), v.polygons_2d()) {
        let (n1, n2) = sector_normals(a, b);
        let po = map2(m, &outer);
        if poly_in_sector(&po, n1, n2) && min_norm_polygon(&po) > r {
            return Ok(Membership::True);
        }
        if exact {
            return Ok(Membership::False);
        }
        if let Some(inner) = inner {
            let pi = map2(m, &inner);
            if !poly_in_sector(&pi, n1, n2) || min_norm_polygon(&pi) <= r {
                return Ok(Membership::False);
            }
        }
    } else {
        let verts = v.exact_vertices();
        let exact = verts.is_some();
        let (lo, hi) = v.bounding_box();
        let superset = verts.unwrap_or_else(|| box_corners(lo, hi));
        let angular = superset.iter().map(|p| patch.convex_violation(&mul(m, p))).collect::<Option<Vec<f64>>>();
        if let Some(g) = angular {
            let inside = g.iter().all(|x| *x < 0.0);
            if inside && min_norm_over_box(m, lo, hi) > r {
                return Ok(Membership::True);
            }
            if exact {
                return Ok(Membership::False);
            }
        }
    }
    if certificate_clearly_outside(h, patch, v, r) {
        return Ok(Membership::False);
    }
    let (hits, n) = certificate_fraction(h, patch, v, r);
    Ok(Membership::Approximate(hits as f64 / n as f64))
}

/// Whether h ∈ K_o(W, V, R), i.e. h^{-T}V meets C(W,R).
pub fn k_o_contains(h: &GroupElement, patch: &DirectionPatch, v: &FrequencyWindow, r: f64) -> Result<Membership> {
    check_window(h, v)?;
    let m = &h.inv_transpose;
    if let (Some((a, b)), Some((outer, inner, exact))) = (patch.sector_2d(), v.polygons_2d()) {
        let (n1, n2) = sector_normals(a, b);
        let po = map2(m, &outer);
        if !poly_meets_cone(&po, n1, n2, r) {
            return Ok(Membership::False);
        }
        if exact {
            return Ok(Membership::True);
        }
        if let Some(inner) = inner {
            if poly_meets_cone(&map2(m, &inner), n1, n2, r) {
                return Ok(Membership::True);
            }
        }
    } else {
        let (lo, hi) = v.bounding_box();
        let superset = v.exact_vertices().unwrap_or_else(|| box_corners(lo, hi));
        let images: Vec<Vec<f64>> = superset.iter().map(|p| mul(m, p)).collect();
        if images.iter().all(|w| norm(w) <= r) {
            return Ok(Membership::False);
        }
        let c = patch.center_direction(v.dimension);
        let hemisphere = match patch {
            DirectionPatch::SphericalCap { radius, .. } => *radius < 2f64.sqrt(),
            _ => true,
        };
        if hemisphere && images.iter().all(|w| w.iter().zip(&c).map(|(a, b)| a * b).sum::<f64>() <= 0.0) {
            return Ok(Membership::False);
        }
    }
    let (hits, n) = certificate_fraction(h, patch, v, r);
    if hits > 0 {
        return Ok(Membership::True);
    }
    Ok(Membership::Approximate(hits as f64 / n as f64))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::{DilationGroup, DilationGroupSpec};
    use proptest::prelude::*;
    use rand::Rng;

    fn band(e: f64) -> DirectionPatch {
        DirectionPatch::ShearletAxisBand { epsilon: e }
    }

    #[test]
    fn axis_band_threshold() {
        assert!((axis_band_ratio(0.1) - 0.19f64.sqrt() / 0.9).abs() < 1e-15);
        assert!((axis_band_ratio(0.1) - 0.4843).abs() < 1e-4);
    }

    #[test]
    fn cone_examples() {
        let c = ConeSpec::new(band(0.37), 1.0).unwrap();
        assert!(cone_contains(&c, &[2.0, 0.0]));
        let c = ConeSpec::new(band(0.1), 0.5).unwrap();
        assert!(!cone_contains(&c, &[1.0, 1.0]));
        assert!(!cone_contains(&c, &[-1.0, 0.0]));
        assert!(!cone_contains(&c, &[0.0, 0.0]));
        let cap = ConeSpec::new(DirectionPatch::cap(vec![1.0, 0.0, 0.0], 0.2), 0.0).unwrap();
        assert!(!cone_contains(&cap, &[-1.0, 0.0, 0.0]));
    }

    #[test]
    fn shearlet_k_examples() {
        let g = DilationGroup::build(DilationGroupSpec::shearlet(vec![0.5])).unwrap();
        let v0 = FrequencyWindow::shearlet_box(2);
        let h = g.shearlet(1.0, 0.01, vec![0.0]).unwrap();
        assert_eq!(k_i_contains(&h, &band(0.1), &v0, 10.0).unwrap(), Membership::True);
        assert_eq!(k_i_contains(&g.identity(), &band(0.1), &v0, 10.0).unwrap(), Membership::False);
        // shear so that only part of the image meets the narrow band
        let h = g.shearlet(1.0, 0.01, vec![0.03]).unwrap();
        assert_eq!(k_o_contains(&h, &band(0.05), &v0, 10.0).unwrap(), Membership::True);
        assert_eq!(k_i_contains(&h, &band(0.05), &v0, 10.0).unwrap(), Membership::False);
    }

    #[test]
    fn similitude_k_examples() {
        let g = DilationGroup::build(DilationGroupSpec::similitude(2)).unwrap();
        let v = FrequencyWindow::ball(vec![1.0, 0.0], 0.1).unwrap();
        let cap = DirectionPatch::cap(vec![1.0, 0.0], 0.1);
        let h = g.similitude_angle(0.01, PI / 2.0).unwrap();
        for r in [0.0, 1.0, 50.0] {
            assert_eq!(k_i_contains(&h, &cap, &v, r).unwrap(), Membership::False);
        }
        let h = g.similitude_angle(2.0, 0.0).unwrap();
        assert_eq!(k_o_contains(&h, &cap, &v, 10.0).unwrap(), Membership::False);
    }

    #[test]
    fn min_norm_box_matches_polygon() {
        let m = DMatrix::from_row_slice(2, 2, &[0.3, -1.2, 0.7, 0.4]);
        let (lo, hi) = ([1.0, -1.0], [2.0, 1.0]);
        let poly = map2(&m, &[[1.0, -1.0], [2.0, -1.0], [2.0, 1.0], [1.0, 1.0]]);
        assert!((min_norm_over_box(&m, &lo, &hi) - min_norm_polygon(&poly)).abs() < 1e-12);
    }

    #[test]
    fn window_errors() {
        assert_eq!(FrequencyWindow::ball(vec![1.0, 0.0], 0.0).unwrap_err(), Error::EmptyWindow);
        assert_eq!(FrequencyWindow::boxed(vec![1.0, 0.0], vec![1.0, 1.0]).unwrap_err(), Error::EmptyWindow);
    }

    #[test]
    fn window_round_trips_through_toml() {
        let w = FrequencyWindow::diagonal_family(4.0, 2).unwrap();
        let s = toml::to_string(&w).unwrap();
        let back: FrequencyWindow = toml::from_str(&s).unwrap();
        assert_eq!(back, w);
    }

    #[test]
    fn higher_dimensional_box_path() {
        let g = DilationGroup::build(DilationGroupSpec::shearlet(vec![0.5, 0.5])).unwrap();
        let v = FrequencyWindow::boxed(vec![1.0, -0.5, -0.5], vec![2.0, 0.5, 0.5]).unwrap();
        let h = g.shearlet(1.0, 1e-3, vec![0.0, 0.0]).unwrap();
        assert_eq!(k_i_contains(&h, &band(0.2), &v, 10.0).unwrap(), Membership::True);
        assert_eq!(k_i_contains(&g.identity(), &band(0.2), &v, 10.0).unwrap(), Membership::False);
        assert_eq!(k_o_contains(&g.identity(), &band(0.2), &v, 10.0).unwrap(), Membership::False);
    }

    #[test]
    fn diagonal_band_k_i_examples() {
        let g = DilationGroup::build(DilationGroupSpec::diagonal(3)).unwrap();
        let v = FrequencyWindow::diagonal_family(4.0, 3).unwrap();
        let w = DirectionPatch::DiagonalBand { epsilon: 1.0 };
        // image norms are at least 0.8·√3/(1.25√3) = 0.64 under the identity
        assert_eq!(k_i_contains(&g.identity(), &w, &v, 0.6).unwrap(), Membership::True);
        assert!(!k_i_contains(&g.identity(), &w, &v, 1.0).unwrap().is_true());
        let h = g.diagonal(vec![0.5; 3]).unwrap();
        assert_eq!(k_i_contains(&h, &w, &v, 1.0).unwrap(), Membership::True);
        let h = g.diagonal(vec![0.5, 0.5, -0.5]).unwrap();
        assert_eq!(k_i_contains(&h, &w, &v, 1.0).unwrap(), Membership::False);
        // a 10:1 distortion leaves the band
        let h = g.diagonal(vec![0.05, 0.5, 0.5]).unwrap();
        assert!(!k_i_contains(&h, &w, &v, 1.0).unwrap().is_true());
    }

    fn arb_h() -> impl Strategy<Value = (f64, f64)> {
        (-6.0f64..1.0, -3.0f64..3.0)
    }

    proptest! {
        #[test]
        fn k_i_inside_k_o_and_monotone((la, b) in arb_h(), e in 0.05f64..0.6, r in 0.0f64..20.0, ds in 0.0f64..0.3, dr in 0.0f64..5.0) {
            let g = DilationGroup::build(DilationGroupSpec::shearlet(vec![0.5])).unwrap();
            let h = g.shearlet(1.0, la.exp(), vec![b * la.exp().sqrt()]).unwrap();
            let v = FrequencyWindow::shearlet_box(2);
            let small = FrequencyWindow::boxed(vec![1.2, -0.5], vec![1.8, 0.5]).unwrap();
            let w = band(e);
            let wb = band((e + ds).min(0.95));
            let ki = k_i_contains(&h, &w, &v, r + dr).unwrap();
            let ko = k_o_contains(&h, &w, &v, r + dr).unwrap();
            if ki.is_true() { prop_assert!(ko.is_true()); }
            // K_o grows with W and V and shrinks with R
            if ko.is_true() {
                prop_assert!(k_o_contains(&h, &wb, &v, r).unwrap().is_true());
            }
            if k_o_contains(&h, &w, &small, r + dr).unwrap().is_true() {
                prop_assert!(k_o_contains(&h, &w, &v, r + dr).unwrap().is_true());
            }
            // K_i grows with W, shrinks with V, shrinks with R
            if ki.is_true() {
                prop_assert!(k_i_contains(&h, &wb, &small, r).unwrap().is_true());
            }
        }

        #[test]
        fn diagonal_band_k_i_is_sound(base in -3.0f64..0.0, la in proptest::collection::vec(-0.6f64..0.6, 3), e in 0.2f64..1.5, r in 0.0f64..3.0, seed in 0u64..1000) {
            let g = DilationGroup::build(DilationGroupSpec::diagonal(3)).unwrap();
            let h = g.diagonal(la.iter().map(|x| (base + x).exp()).collect()).unwrap();
            let v = FrequencyWindow::diagonal_family(4.0, 3).unwrap();
            let w = DirectionPatch::DiagonalBand { epsilon: e };
            prop_assume!(k_i_contains(&h, &w, &v, r).unwrap().is_true());
            let mut rng = crate::rng::substream(seed, 0);
            let (lo, hi) = v.bounding_box();
            let mut checked = 0;
            while checked < 200 {
                let xi: Vec<f64> = lo.iter().zip(hi).map(|(a, b)| rng.random_range(*a..*b)).collect();
                if v.contains(&xi) {
                    prop_assert!(patch_cone_contains(&w, r, &h.inv_transpose_apply(&xi)));
                    checked += 1;
                }
            }
        }

        #[test]
        fn closed_form_band_matches_generic_cap(e in 0.01f64..0.9, x in -3.0f64..3.0, y in -3.0f64..3.0) {
            // the axis band is the cap around e_1 of chord radius √(2ε)
            let band_patch = band(e);
            let cap = DirectionPatch::cap(vec![1.0, 0.0], (2.0 * e).sqrt());
            let v = [x, y];
            let n = norm(&v);
            prop_assume!(n > 1e-9);
            let u = [x / n, y / n];
            let margin = ((u[0] - 1.0).abs() - e).abs();
            prop_assume!(margin > 1e-12);
            prop_assert_eq!(patch_cone_contains(&band_patch, 0.0, &v), patch_cone_contains(&cap, 0.0, &v));
        }

        #[test]
        fn cone_is_scale_invariant(e in 0.05f64..0.9, x in -3.0f64..3.0, y in -3.0f64..3.0, t in 0.01f64..100.0) {
            let c = ConeSpec::new(band(e), 0.0).unwrap();
            prop_assert_eq!(cone_contains(&c, &[x, y]), cone_contains(&c, &[t * x, t * y]));
        }
    }
}
