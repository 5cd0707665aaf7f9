//! Haar-weighted rejection sampling of K_o(W,V,R) and Monte-Carlo membership
//! tests for the geometric cone sets C_i, C_o.
//!
//! Each built-in group gets a chart box that contains K_o up to a lower scale
//! cut `scale_decades` below the largest admissible scale. Proposals are
//! uniform in (log scale, normalized shape parameters); every proposal carries
//! the Haar weight that turns proposal averages into Haar integrals.

use crate::error::{Error, Result};
use crate::geometry::{k_i_contains, k_o_contains, patch_cone_contains, DirectionPatch, FrequencyWindow};
use crate::group::{haar_rotation, norm, rotation_2d, Component, DilationGroup, GroupElement, GroupKind};
use crate::rng::substream;
use crate::stats::{mc_estimate, Estimate};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SamplerSettings {
    /// Decades of scale sampled below the largest scale compatible with K_o.
    pub scale_decades: f64,
    /// Accepted samples per deterministic chunk.
    pub chunk: usize,
    /// Proposal cap per chunk before giving up.
    pub max_proposals: usize,
    /// Give up early when a chunk has accepted nothing after this many proposals.
    pub empty_cutoff: usize,
    /// Minimum confidence for accepting an approximate K_o answer.
    pub acceptance: f64,
}

impl Default for SamplerSettings {
    fn default() -> Self {
        Self { scale_decades: 8.0, chunk: 256, max_proposals: 5_000_000, empty_cutoff: 200_000, acceptance: 0.99 }
    }
}

#[derive(Clone, Debug)]
pub struct WeightedElement {
    pub element: GroupElement,
    /// Haar density divided by proposal density.
    pub weight: f64,
}

#[derive(Clone, Debug)]
enum Proposal {
    Similitude { log_lo: f64, log_hi: f64, angle: Option<(f64, f64)> },
    Diagonal { log_lo: f64, log_hi: f64, ratio: Vec<(f64, f64)>, signs: Vec<f64> },
    Shearlet { log_lo: f64, log_hi: f64, shear_bound: Vec<f64>, sign: f64 },
}

/// Rejection sampler for K_o(W, V, R).
pub struct KoSampler<'a> {
    group: &'a DilationGroup,
    patch: &'a DirectionPatch,
    window: &'a FrequencyWindow,
    radius: f64,
    proposal: Proposal,
    pub settings: SamplerSettings,
}

/// Angular range [lo, hi] of a planar window, from its bounding box corners.
pub(crate) fn window_angles_2d(v: &FrequencyWindow) -> Option<(f64, f64)> {
    let (lo, hi) = v.bounding_box();
    if lo[0] <= 0.0 && hi[0] >= 0.0 && lo[1] <= 0.0 && hi[1] >= 0.0 {
        return None;
    }
    let c = v.center();
    let phi = c[1].atan2(c[0]);
    let mut a = f64::INFINITY;
    let mut b = f64::NEG_INFINITY;
    for p in crate::geometry::box_corners(lo, hi) {
        let mut t = p[1].atan2(p[0]) - phi;
        t = (t + PI).rem_euclid(2.0 * PI) - PI;
        a = a.min(t);
        b = b.max(t);
    }
    if b - a >= PI {
        return None;
    }
    Some((phi + a, phi + b))
}

impl<'a> KoSampler<'a> {
    pub fn new(group: &'a DilationGroup, patch: &'a DirectionPatch, window: &'a FrequencyWindow, radius: f64, settings: SamplerSettings) -> Result<Self> {
        let d = group.dimension();
        if window.dimension != d {
            return Err(Error::Parameter("window dimension differs from group dimension".into()));
        }
        patch.validate(d)?;
        if !(radius > 0.0) {
            return Err(Error::Unbounded("K_o is unbounded in scale for R = 0".into()));
        }
        let span = settings.scale_decades * std::f64::consts::LN_10;
        let (lo, hi) = window.bounding_box();
        let proposal = match group.kind() {
            GroupKind::Similitude => {
                let log_hi = (window.sup_norm() / radius).ln();
                let angle = if d == 2 {
                    match (patch.sector_2d(), window_angles_2d(window)) {
                        (Some((p0, p1)), Some((w0, w1))) => Some((p0 - w1, p1 - w0)).filter(|(a, b)| b - a < 2.0 * PI),
                        _ => None,
                    }
                } else {
                    None
                };
                Proposal::Similitude { log_lo: log_hi - span, log_hi, angle }
            }
            GroupKind::Diagonal => {
                let u = patch.component_bounds(d).ok_or_else(|| Error::ChartBox("patch does not fix the orthant".into()))?;
                if lo.iter().zip(hi).any(|(a, b)| *a <= 0.0 && *b >= 0.0) {
                    return Err(Error::ChartBox("window meets a coordinate hyperplane".into()));
                }
                let m: Vec<f64> = lo.iter().zip(hi).map(|(a, b)| a.abs().min(b.abs())).collect();
                let big: Vec<f64> = lo.iter().zip(hi).map(|(a, b)| a.abs().max(b.abs())).collect();
                let umin: Vec<f64> = u.iter().map(|(a, b)| a.abs().min(b.abs())).collect();
                let umax: Vec<f64> = u.iter().map(|(a, b)| a.abs().max(b.abs())).collect();
                let log_hi = (big[0] / (radius * umin[0])).ln();
                let ratio = (1..d)
                    .map(|i| ((m[i] / big[0] * umin[0] / umax[i]).ln(), (big[i] / m[0] * umax[0] / umin[i]).ln()))
                    .collect();
                let signs = (0..d).map(|i| lo[i].signum() * u[i].0.signum()).collect();
                Proposal::Diagonal { log_lo: log_hi - span, log_hi, ratio, signs }
            }
            GroupKind::Shearlet => {
                let (psign, _, t) = patch.first_axis_bounds(d).ok_or_else(|| Error::ChartBox("patch meets the plane ξ_1 = 0".into()))?;
                if lo[0] <= 0.0 && hi[0] >= 0.0 {
                    return Err(Error::ChartBox("window meets the plane ξ_1 = 0".into()));
                }
                let sign = psign * lo[0].signum();
                if let Some(c) = group.spec().component {
                    let want = match c {
                        Component::Plus => 1.0,
                        Component::Minus => -1.0,
                    };
                    if want != sign {
                        return Err(Error::ChartBox("K_o misses the configured component".into()));
                    }
                }
                let m1 = lo[0].abs().min(hi[0].abs());
                let big1 = lo[0].abs().max(hi[0].abs());
                let log_hi = (big1 * (1.0 + t * t).sqrt() / radius).ln();
                let log_lo = log_hi - span;
                let shear_bound = group
                    .anisotropy()
                    .iter()
                    .enumerate()
                    .map(|(k, c)| {
                        let x = lo[k + 1].abs().max(hi[k + 1].abs());
                        let grow = ((1.0 - c) * log_hi).exp().max(((1.0 - c) * log_lo).exp());
                        t + x * grow / m1
                    })
                    .collect();
                Proposal::Shearlet { log_lo, log_hi, shear_bound, sign }
            }
            GroupKind::Custom => return Err(Error::ChartBox("custom groups carry no chart box hints".into())),
        };
        Ok(Self { group, patch, window, radius, proposal, settings })
    }

    /// Largest operator norm any element of the chart box can have, when finite.
    pub fn scale_ceiling(&self) -> f64 {
        match &self.proposal {
            Proposal::Similitude { log_hi, .. } => log_hi.exp(),
            Proposal::Diagonal { log_hi, ratio, .. } => ratio.iter().map(|r| (log_hi + r.1).exp()).fold(log_hi.exp(), f64::max),
            Proposal::Shearlet { .. } => f64::INFINITY,
        }
    }

    /// One proposal with its Haar weight.
    pub fn propose<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<(GroupElement, f64)> {
        let d = self.group.dimension();
        match &self.proposal {
            Proposal::Similitude { log_lo, log_hi, angle } => {
                let a = rng.random_range(*log_lo..*log_hi).exp();
                let dl = log_hi - log_lo;
                if d == 2 {
                    let (t0, t1) = angle.unwrap_or((-PI, PI));
                    let theta = rng.random_range(t0..t1);
                    Ok((self.group.similitude(a, rotation_2d(theta))?, dl * (t1 - t0) / (2.0 * PI)))
                } else {
                    Ok((self.group.similitude(a, haar_rotation(d, rng))?, dl))
                }
            }
            Proposal::Diagonal { log_lo, log_hi, ratio, signs } => {
                let l1 = rng.random_range(*log_lo..*log_hi);
                let mut entries = vec![signs[0] * l1.exp()];
                let mut w = log_hi - log_lo;
                for (i, (r0, r1)) in ratio.iter().enumerate() {
                    entries.push(signs[i + 1] * (l1 + rng.random_range(*r0..*r1)).exp());
                    w *= r1 - r0;
                }
                Ok((self.group.diagonal(entries)?, w))
            }
            Proposal::Shearlet { log_lo, log_hi, shear_bound, sign } => {
                let la = rng.random_range(*log_lo..*log_hi);
                let a = la.exp();
                let c = self.group.anisotropy();
                let shear: Vec<f64> = shear_bound.iter().zip(c).map(|(s, ci)| rng.random_range(-s..*s) * a.powf(*ci)).collect();
                let box_vol: f64 = shear_bound.iter().map(|s| 2.0 * s).product();
                let expo = 1.0 - d as f64 + c.iter().sum::<f64>();
                Ok((self.group.shearlet(*sign, a, shear)?, (log_hi - log_lo) * box_vol * a.powf(expo)))
            }
        }
    }

    pub fn accepts(&self, h: &GroupElement) -> Result<bool> {
        Ok(k_o_contains(h, self.patch, self.window, self.radius)?.at_least(self.settings.acceptance))
    }

    fn chunk(&self, seed: u64, index: u64, quota: usize, keep: &(dyn Fn(&GroupElement) -> Result<bool> + Sync)) -> Result<Vec<WeightedElement>> {
        let mut rng: ChaCha8Rng = substream(seed, index);
        let mut out = Vec::with_capacity(quota);
        let mut tries = 0;
        while out.len() < quota {
            if tries >= self.settings.max_proposals || (out.is_empty() && tries >= self.settings.empty_cutoff) {
                return Err(Error::BudgetExhausted(tries));
            }
            tries += 1;
            let (h, w) = self.propose(&mut rng)?;
            if self.accepts(&h)? && keep(&h)? {
                out.push(WeightedElement { element: h, weight: w });
            }
        }
        Ok(out)
    }

    fn sample_filtered(&self, count: usize, seed: u64, keep: &(dyn Fn(&GroupElement) -> Result<bool> + Sync)) -> Result<Vec<WeightedElement>> {
        let size = self.settings.chunk.max(1);
        let chunks = count.div_ceil(size);
        let parts: Vec<Vec<WeightedElement>> = (0..chunks)
            .into_par_iter()
            .map(|j| self.chunk(seed, j as u64, size.min(count - j * size), keep))
            .collect::<Result<_>>()?;
        Ok(parts.concat())
    }

    /// `count` elements of K_o, deterministic in `seed`.
    pub fn sample(&self, count: usize, seed: u64) -> Result<Vec<WeightedElement>> {
        self.sample_filtered(count, seed, &|_| Ok(true))
    }

    /// `count` elements of K_o that are certified members of K_i(W, V, R′) for the given patch.
    pub fn sample_inner(&self, count: usize, seed: u64, patch: &DirectionPatch, radius: f64) -> Result<Vec<WeightedElement>> {
        self.sample_filtered(count, seed, &|h| Ok(k_i_contains(h, patch, self.window, radius)?.is_true()))
    }

    /// Haar integral of f over K_o (within the chart box), from `proposals` draws.
    pub fn haar_integral<F: Fn(&GroupElement) -> f64 + Sync>(&self, proposals: usize, seed: u64, f: F) -> Result<Estimate> {
        let size = 4096;
        let chunks = proposals.div_ceil(size);
        let parts: Vec<Result<Vec<f64>>> = (0..chunks)
            .into_par_iter()
            .map(|j| {
                let mut rng = substream(seed, j as u64);
                let n = size.min(proposals - j * size);
                let mut terms = Vec::with_capacity(n);
                for _ in 0..n {
                    let (h, w) = self.propose(&mut rng)?;
                    terms.push(if self.accepts(&h)? { w * f(&h) } else { 0.0 });
                }
                Ok(terms)
            })
            .collect();
        let mut terms = Vec::with_capacity(proposals);
        for p in parts {
            terms.extend(p?);
        }
        Ok(mc_estimate(&terms))
    }
}

/// `count` Haar-weighted elements of K_o(W, V, R) with default settings.
pub fn sample_k_o(group: &DilationGroup, patch: &DirectionPatch, window: &FrequencyWindow, radius: f64, count: usize, seed: u64) -> Result<Vec<WeightedElement>> {
    if count == 0 {
        return Ok(vec![]);
    }
    KoSampler::new(group, patch, window, radius, SamplerSettings::default())?.sample(count, seed)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CSetMode {
    Inner,
    Outer,
}

#[derive(Clone, Debug)]
pub struct CSetVerdict {
    pub member: bool,
    /// 1 when certified; p/(p+1) after p unsuccessful probes otherwise.
    pub confidence: f64,
    /// An element h with the point in h^{-T}V and h in the matching K set.
    pub witness: Option<GroupElement>,
    pub probes: usize,
}

/// Membership of `point` in C_i(W,V,R;H) (Inner) or C_o(W,V,R;H) (Outer),
/// searched over h with h^T point ∈ V.
#[allow(clippy::too_many_arguments)]
pub fn c_set_contains(
    point: &[f64],
    mode: CSetMode,
    group: &DilationGroup,
    patch: &DirectionPatch,
    window: &FrequencyWindow,
    radius: f64,
    budget: usize,
    seed: u64,
) -> Result<CSetVerdict> {
    if budget == 0 {
        return Err(Error::InvalidArgument("c-set search needs a positive budget".into()));
    }
    if !group.in_open_orbit(point) {
        return Err(Error::OutsideOrbit(point.to_vec()));
    }
    if mode == CSetMode::Inner && !patch_cone_contains(patch, radius, point) {
        return Ok(CSetVerdict { member: false, confidence: 1.0, witness: None, probes: 0 });
    }
    let mut rng = substream(seed, 0);
    let c = window.center();
    let mut fixed: Vec<Vec<f64>> = vec![c.clone()];
    for p in &window.certificate_points {
        let q: Vec<f64> = c.iter().zip(p).map(|(a, b)| a + 0.999 * (b - a)).collect();
        if window.contains(&q) {
            fixed.push(q);
        }
    }
    let mut probes = 0;
    while probes < budget {
        let target = if probes < fixed.len() { fixed[probes].clone() } else { window.sample_interior(&mut rng) };
        probes += 1;
        if !group.in_open_orbit(&target) {
            continue;
        }
        let h = group.solve_dual_random(point, &target, &mut rng)?;
        let hit = match mode {
            CSetMode::Inner => k_i_contains(&h, patch, window, radius)?.is_true(),
            CSetMode::Outer => k_o_contains(&h, patch, window, radius)?.is_true(),
        };
        if hit {
            return Ok(CSetVerdict { member: true, confidence: 1.0, witness: Some(h), probes });
        }
    }
    Ok(CSetVerdict { member: false, confidence: probes as f64 / (probes as f64 + 1.0), witness: None, probes })
}

/// Monte-Carlo estimate of μ_H(K_o ∩ chart box), used for diagnostics.
pub fn k_o_measure(sampler: &KoSampler, proposals: usize, seed: u64) -> Result<Estimate> {
    sampler.haar_integral(proposals, seed, |_| 1.0)
}

/// Operator norm bound: sup ‖h‖ over the samples.
pub fn sup_norm(samples: &[WeightedElement]) -> f64 {
    samples.iter().map(|s| s.element.op_norm).fold(0.0, f64::max)
}

/// |h^{-T}ξ| over the window's certificate points, smallest value.
pub fn min_image_norm(h: &GroupElement, window: &FrequencyWindow) -> f64 {
    window.certificate_points.iter().map(|p| norm(&h.inv_transpose_apply(p))).fold(f64::INFINITY, f64::min)
}
