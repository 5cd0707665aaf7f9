//! Band-limited wavelets: smooth bump profiles supported exactly in a
//! frequency window, normalized so that ∫_H |ψ̂(h^T ξ)|² dh = 1.

use crate::error::{Error, Result};
use crate::geometry::{DirectionPatch, FrequencyWindow, WindowShape};
use crate::group::{haar_rotation, norm, rotation_2d, Component, DilationGroup, DilationGroupSpec, GroupElement, GroupKind};
use crate::quadrature::{integrate_box, integrate_oscillatory, PanelPolicy, Quad};
use crate::rng::substream;
use crate::sampling::window_angles_2d;
use crate::stats::{mc_estimate, Estimate};
use nalgebra::DMatrix;
use rand::Rng;
use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// The C∞ bump exp(1 − 1/(1−t²)) on (−1, 1), zero elsewhere.
pub fn bump(t: f64) -> f64 {
    if t.abs() >= 1.0 {
        0.0
    } else {
        (1.0 - 1.0 / (1.0 - t * t)).exp()
    }
}

struct CosineRule {
    /// Panels on [0, 1]; only the right half is stored since the bump is even.
    panels: usize,
    nodes: Vec<(f64, f64)>,
}

impl CosineRule {
    fn new(panels: usize) -> Self {
        let (x, w) = crate::quadrature::gauss_legendre(16);
        let h = 1.0 / panels as f64;
        let mut nodes = Vec::with_capacity(panels * 16);
        for p in 0..panels {
            let c = (p as f64 + 0.5) * h;
            for (xi, wi) in x.iter().zip(&w) {
                let t = c + 0.5 * h * xi;
                // factor 2 folds the left half onto the right
                nodes.push((t, h * wi * bump(t)));
            }
        }
        Self { panels, nodes }
    }

    fn eval(&self, omega: f64) -> f64 {
        self.nodes.iter().map(|(t, w)| w * (omega * t).cos()).sum()
    }
}

struct BumpTransform {
    rules: Vec<CosineRule>,
    integral: f64,
    step: f64,
    envelope: Vec<f64>,
}

const ENVELOPE_MAX: f64 = 1400.0;

impl BumpTransform {
    fn get() -> &'static BumpTransform {
        static T: std::sync::OnceLock<BumpTransform> = std::sync::OnceLock::new();
        T.get_or_init(|| {
            let rules: Vec<CosineRule> = [16, 32, 64, 128, 256].into_iter().map(CosineRule::new).collect();
            let integral = rules[4].eval(0.0);
            let step = 0.25;
            let n = (ENVELOPE_MAX / step) as usize + 1;
            let raw: Vec<f64> = (0..n).map(|i| rules[4].eval(i as f64 * step).abs()).collect();
            // running maximum from the right over a window shifted by one unit, doubled
            let shift = (1.0 / step) as usize;
            let mut tail = vec![0.0; n];
            let mut m = 0.0f64;
            for i in (0..n).rev() {
                m = m.max(raw[i]);
                tail[i] = m;
            }
            let envelope = (0..n).map(|i| 2.0 * tail[i.saturating_sub(shift)]).collect();
            BumpTransform { rules, integral, step, envelope }
        })
    }

    fn envelope(&self, omega: f64) -> f64 {
        let i = ((omega.abs() / self.step) as usize).min(self.envelope.len() - 1);
        self.envelope[i]
    }
}

/// ∫_{−1}^{1} bump(t) e^{iΩt} dt (real, since the bump is even) with an error
/// estimate. Values provably below the rule's roundoff level are returned as
/// zero with that roundoff level as error.
pub fn bump_transform(omega: f64) -> (f64, f64) {
    let t = BumpTransform::get();
    let roundoff = 64.0 * f64::EPSILON * t.integral;
    let o = omega.abs();
    if t.envelope(o) <= roundoff {
        return (0.0, roundoff);
    }
    // 4π of phase per panel on [0, 1]
    let need = (o / (4.0 * PI)).ceil() as usize;
    match t.rules.iter().position(|r| r.panels >= need.max(16)) {
        Some(i) if i + 1 < t.rules.len() => {
            let coarse = t.rules[i].eval(o);
            let fine = t.rules[i + 1].eval(o);
            (fine, (fine - coarse).abs() + roundoff)
        }
        _ => {
            let q = integrate_oscillatory(bump, -1.0, 1.0, o, PanelPolicy::default());
            (q.value.re, q.error)
        }
    }
}

fn patch_profile(patch: &DirectionPatch, u: &[f64]) -> f64 {
    match patch {
        DirectionPatch::SphericalCap { center, radius } => {
            let d2: f64 = u.iter().zip(center).map(|(a, b)| (a - b) * (a - b)).sum();
            bump(d2.sqrt() / radius)
        }
        DirectionPatch::ShearletAxisBand { epsilon } => bump((1.0 - u[0]) / epsilon),
        DirectionPatch::DiagonalBand { epsilon } => {
            let s = (u.len() as f64).sqrt();
            let l = (1.0 + epsilon).ln();
            u.iter().map(|x| if *x > 0.0 { bump((s * x).ln() / l) } else { 0.0 }).product()
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BandlimitedWavelet {
    pub support: FrequencyWindow,
    /// Multiplier applied to the bump profile.
    pub kappa: f64,
    pub group: DilationGroupSpec,
}

/// Quadrature and sampling budgets for Haar integrals over H_{ξ,V}.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdmissibilitySettings {
    /// Panels per chart axis for the d = 2 tensor rule.
    pub panels: usize,
    /// Monte-Carlo points in d ≥ 3.
    pub mc_points: usize,
    pub seed: u64,
}

impl Default for AdmissibilitySettings {
    fn default() -> Self {
        Self { panels: 8, mc_points: 100_000, seed: 0x0ad_0155 }
    }
}

impl BandlimitedWavelet {
    /// Unnormalized bump wavelet fitted to the window.
    pub fn new(support: FrequencyWindow, group: DilationGroupSpec) -> Self {
        Self { support, kappa: 1.0, group }
    }

    /// The bump profile before normalization.
    pub fn profile(&self, xi: &[f64]) -> f64 {
        match &self.support.shape {
            WindowShape::Ball { center, radius } => {
                let d2: f64 = xi.iter().zip(center).map(|(a, b)| (a - b) * (a - b)).sum();
                bump(d2.sqrt() / radius)
            }
            WindowShape::Box { lo, hi } => xi.iter().enumerate().map(|(k, x)| bump((2.0 * x - lo[k] - hi[k]) / (hi[k] - lo[k]))).product(),
            WindowShape::ShearletBox => bump(2.0 * xi[0] - 3.0) * bump(norm(&xi[1..])),
            WindowShape::AnnulusSector { r_min, r_max, patch } => {
                let r = norm(xi);
                let radial = bump((2.0 * r - r_min - r_max) / (r_max - r_min));
                if radial == 0.0 {
                    return 0.0;
                }
                let u: Vec<f64> = xi.iter().map(|x| x / r).collect();
                radial * patch_profile(patch, &u)
            }
        }
    }

    /// ψ̂(ξ)
    pub fn hat(&self, xi: &[f64]) -> f64 {
        self.kappa * self.profile(xi)
    }

    /// Per-axis intervals when the profile is a tensor product of rescaled bumps.
    pub fn tensor_intervals(&self) -> Option<Vec<(f64, f64)>> {
        match &self.support.shape {
            WindowShape::Box { lo, hi } => Some(lo.iter().cloned().zip(hi.iter().cloned()).collect()),
            WindowShape::ShearletBox if self.support.dimension == 2 => Some(vec![(1.0, 2.0), (-1.0, 1.0)]),
            _ => None,
        }
    }

    /// F(π(x,h)ψ)(ξ) = |det h|^{1/2} e^{−2πi⟨x,ξ⟩} ψ̂(h^T ξ)
    pub fn dilated_hat(&self, x: &[f64], h: &GroupElement, xi: &[f64]) -> Complex64 {
        let v = self.hat(&h.dual_apply(xi));
        if v == 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        let phase = -2.0 * PI * x.iter().zip(xi).map(|(a, b)| a * b).sum::<f64>();
        Complex64::from_polar(h.det.abs().sqrt() * v, phase)
    }

    /// ψ(z) = ∫ ψ̂(ξ) e^{2πi⟨z,ξ⟩} dξ with an error estimate.
    pub fn spatial_eval(&self, z: &[f64]) -> Quad {
        if let Some(f) = self.tensor_intervals() {
            let mut value = Complex64::new(self.kappa, 0.0);
            let mut rel = 0.0;
            for (k, (a, b)) in f.iter().enumerate() {
                let (m, s) = (0.5 * (a + b), 0.5 * (b - a));
                let omega = 2.0 * PI * z[k];
                let (g, e) = bump_transform(omega * s);
                if g == 0.0 {
                    let rest: f64 = f.iter().enumerate().filter(|(j, _)| *j != k).map(|(_, (a, b))| 0.5 * (b - a) * BumpTransform::get().integral).product();
                    return Quad { value: Complex64::new(0.0, 0.0), error: self.kappa * s * e * rest };
                }
                value *= Complex64::from_polar(s * g, omega * m);
                rel += e / g.abs();
            }
            return Quad { value, error: value.norm() * rel };
        }
        let (lo, hi) = self.support.bounding_box();
        let panels: Vec<usize> = (0..lo.len()).map(|k| ((z[k].abs() * (hi[k] - lo[k]) / 4.0).ceil() as usize).max(6)).collect();
        let q = integrate_box(lo, hi, &panels, |xi| {
            let v = self.profile(xi);
            if v == 0.0 {
                return Complex64::new(0.0, 0.0);
            }
            Complex64::from_polar(v, 2.0 * PI * z.iter().zip(xi).map(|(a, b)| a * b).sum::<f64>())
        });
        Quad { value: q.value * self.kappa, error: q.error * self.kappa }
    }

    /// ∫_H |ψ̂(h^T ξ)|² dh
    pub fn admissibility_integral(&self, group: &DilationGroup, xi: &[f64], settings: &AdmissibilitySettings) -> Result<Estimate> {
        let chart = StayChart::new(group, xi, &self.support)?;
        chart.integrate(settings, |h| {
            let v = self.hat(&h.dual_apply(xi));
            v * v
        })
    }

    /// Copy with κ chosen so the admissibility integral at the orbit base point is 1.
    pub fn normalize(&self, group: &DilationGroup, settings: &AdmissibilitySettings) -> Result<BandlimitedWavelet> {
        let base = group.orbit().base_point.clone();
        let est = self.admissibility_integral(group, &base, settings)?;
        if !(est.value > 0.0) || !est.value.is_finite() || est.value <= 3.0 * est.stderr {
            return Err(Error::ZeroIntegral);
        }
        let mut w = self.clone();
        w.kappa = self.kappa / est.value.sqrt();
        Ok(w)
    }
}

/// Normalized bump wavelet for a window.
pub fn normalized_wavelet(group: &DilationGroup, window: FrequencyWindow, settings: &AdmissibilitySettings) -> Result<BandlimitedWavelet> {
    BandlimitedWavelet::new(window, group.spec().clone()).normalize(group, settings)
}

#[derive(Clone, Debug)]
enum ChartBox {
    Similitude2 { l: (f64, f64), theta: (f64, f64) },
    SimilitudeHigh { l: (f64, f64) },
    Diagonal { l: Vec<(f64, f64)>, signs: Vec<f64> },
    Shearlet { l: (f64, f64), sign: f64, eta: Vec<(f64, f64)> },
}

/// Chart box containing H_{ξ,V} = {h : h^T ξ ∈ V}, parametrized by the unit cube.
pub struct StayChart<'a> {
    group: &'a DilationGroup,
    xi: Vec<f64>,
    chart: ChartBox,
}

impl<'a> StayChart<'a> {
    pub fn new(group: &'a DilationGroup, xi: &[f64], v: &FrequencyWindow) -> Result<Self> {
        let d = group.dimension();
        if !group.in_open_orbit(xi) {
            return Err(Error::OutsideOrbit(xi.to_vec()));
        }
        if v.dimension != d {
            return Err(Error::Parameter("window dimension differs from group dimension".into()));
        }
        let (lo, hi) = v.bounding_box();
        let chart = match group.kind() {
            GroupKind::Similitude => {
                let n = norm(xi);
                let inf = v.inf_norm();
                if !(inf > 0.0) {
                    return Err(Error::Unbounded("window closure contains the origin".into()));
                }
                let l = ((inf / n).ln(), (v.sup_norm() / n).ln());
                if d == 2 {
                    let phi = xi[1].atan2(xi[0]);
                    let theta = window_angles_2d(v).map(|(w0, w1)| (phi - w1, phi - w0)).unwrap_or((-PI, PI));
                    ChartBox::Similitude2 { l, theta }
                } else {
                    ChartBox::SimilitudeHigh { l }
                }
            }
            GroupKind::Diagonal => {
                if lo.iter().zip(hi).any(|(a, b)| *a <= 0.0 && *b >= 0.0) {
                    return Err(Error::Unbounded("window meets a coordinate hyperplane".into()));
                }
                let l = (0..d)
                    .map(|i| {
                        let (m, big) = (lo[i].abs().min(hi[i].abs()), lo[i].abs().max(hi[i].abs()));
                        ((m / xi[i].abs()).ln(), (big / xi[i].abs()).ln())
                    })
                    .collect();
                let signs = (0..d).map(|i| lo[i].signum() * xi[i].signum()).collect();
                ChartBox::Diagonal { l, signs }
            }
            GroupKind::Shearlet => {
                if lo[0] <= 0.0 && hi[0] >= 0.0 {
                    return Err(Error::Unbounded("window meets the plane ξ_1 = 0".into()));
                }
                let sign = lo[0].signum() * xi[0].signum();
                if let Some(c) = group.spec().component {
                    if (c == Component::Plus) != (sign > 0.0) {
                        return Err(Error::ChartBox("stay region lies in the excluded component".into()));
                    }
                }
                let (m, big) = (lo[0].abs().min(hi[0].abs()), lo[0].abs().max(hi[0].abs()));
                let l = ((m / xi[0].abs()).ln(), (big / xi[0].abs()).ln());
                ChartBox::Shearlet { l, sign, eta: (1..d).map(|i| (lo[i], hi[i])).collect() }
            }
            GroupKind::Custom => return Err(Error::ChartBox("custom groups carry no chart box hints".into())),
        };
        Ok(Self { group, xi: xi.to_vec(), chart })
    }

    /// Dimension of the unit cube parametrizing the box (rotations excluded).
    pub fn cube_dimension(&self) -> usize {
        match &self.chart {
            ChartBox::Similitude2 { .. } => 2,
            ChartBox::SimilitudeHigh { .. } => 1,
            ChartBox::Diagonal { l, .. } => l.len(),
            ChartBox::Shearlet { eta, .. } => 1 + eta.len(),
        }
    }

    /// Element at cube point t and the Haar density times the box Jacobian.
    pub fn element(&self, t: &[f64], rotation: Option<DMatrix<f64>>) -> Result<(GroupElement, f64)> {
        let lerp = |r: (f64, f64), s: f64| r.0 + s * (r.1 - r.0);
        match &self.chart {
            ChartBox::Similitude2 { l, theta } => {
                let h = self.group.similitude(lerp(*l, t[0]).exp(), rotation_2d(lerp(*theta, t[1])))?;
                Ok((h, (l.1 - l.0) * (theta.1 - theta.0) / (2.0 * PI)))
            }
            ChartBox::SimilitudeHigh { l } => {
                let rot = rotation.ok_or_else(|| Error::Parameter("rotation sample required".into()))?;
                Ok((self.group.similitude(lerp(*l, t[0]).exp(), rot)?, l.1 - l.0))
            }
            ChartBox::Diagonal { l, signs } => {
                let entries = l.iter().zip(signs).zip(t).map(|((r, s), u)| s * lerp(*r, *u).exp()).collect();
                Ok((self.group.diagonal(entries)?, l.iter().map(|r| r.1 - r.0).product()))
            }
            ChartBox::Shearlet { l, sign, eta } => {
                let a = lerp(*l, t[0]).exp();
                let c = self.group.anisotropy();
                let x0 = self.xi[0];
                let mut shear = Vec::with_capacity(eta.len());
                let mut width = 1.0;
                for (i, (e0, e1)) in eta.iter().enumerate() {
                    let ac = a.powf(c[i]) * self.xi[i + 1];
                    let b0 = (e0 / sign - ac) / x0;
                    let b1 = (e1 / sign - ac) / x0;
                    shear.push(b0 + t[i + 1] * (b1 - b0));
                    width *= (b1 - b0).abs();
                }
                let d = self.group.dimension() as i32;
                Ok((self.group.shearlet(*sign, a, shear)?, (l.1 - l.0) * a * a.powi(-d) * width))
            }
        }
    }

    /// ∫ f dh over the box: tensor Gauss rule in d = 2, Monte Carlo otherwise.
    pub fn integrate<F: Fn(&GroupElement) -> f64>(&self, settings: &AdmissibilitySettings, f: F) -> Result<Estimate> {
        let k = self.cube_dimension();
        if self.group.dimension() == 2 {
            let mut failure = None;
            let q = integrate_box(&vec![0.0; k], &vec![1.0; k], &vec![settings.panels; k], |t| match self.element(t, None) {
                Ok((h, w)) => Complex64::new(f(&h) * w, 0.0),
                Err(e) => {
                    failure = Some(e);
                    Complex64::new(0.0, 0.0)
                }
            });
            if let Some(e) = failure {
                return Err(e);
            }
            return Ok(Estimate { value: q.value.re, stderr: q.error });
        }
        let mut rng = substream(settings.seed, 0);
        let d = self.group.dimension();
        let mut terms = Vec::with_capacity(settings.mc_points);
        for _ in 0..settings.mc_points {
            let t: Vec<f64> = (0..k).map(|_| rng.random::<f64>()).collect();
            let rot = matches!(self.chart, ChartBox::SimilitudeHigh { .. }).then(|| haar_rotation(d, &mut rng));
            let (h, w) = self.element(&t, rot)?;
            terms.push(f(&h) * w);
        }
        Ok(mc_estimate(&terms))
    }

    /// Monte-Carlo Haar measure of {h : h^T ξ ∈ V} inside the box.
    pub fn measure(&self, window: &FrequencyWindow, points: usize, seed: u64) -> Result<Estimate> {
        let mut rng = substream(seed, 1);
        let d = self.group.dimension();
        let k = self.cube_dimension();
        let mut terms = Vec::with_capacity(points);
        for _ in 0..points {
            let t: Vec<f64> = (0..k).map(|_| rng.random::<f64>()).collect();
            let rot = matches!(self.chart, ChartBox::SimilitudeHigh { .. }).then(|| haar_rotation(d, &mut rng));
            let (h, w) = self.element(&t, rot)?;
            terms.push(if window.contains(&h.dual_apply(&self.xi)) { w } else { 0.0 });
        }
        Ok(mc_estimate(&terms))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::DilationGroupSpec;

    #[test]
    fn bump_values() {
        assert_eq!(bump(0.0), 1.0);
        assert_eq!(bump(1.0), 0.0);
        assert_eq!(bump(-1.0), 0.0);
        assert!((bump(0.5) - (-1.0f64 / 3.0).exp()).abs() < 1e-15);
        assert!((bump(0.5) - 0.716531).abs() < 1e-6);
    }

    fn shearlet_wavelet() -> (DilationGroup, BandlimitedWavelet) {
        let g = DilationGroup::build(DilationGroupSpec::shearlet(vec![0.5])).unwrap();
        let w = normalized_wavelet(&g, FrequencyWindow::shearlet_box(2), &AdmissibilitySettings::default()).unwrap();
        (g, w)
    }

    #[test]
    fn normalization_and_idempotence() {
        let (g, w) = shearlet_wavelet();
        let s = AdmissibilitySettings::default();
        let i = w.admissibility_integral(&g, &[1.0, 0.0], &s).unwrap();
        assert!((i.value - 1.0).abs() < 1e-6, "{i:?}");
        let w2 = w.normalize(&g, &s).unwrap();
        assert!((w2.kappa - w.kappa).abs() / w.kappa < 1e-6);
        let raw = BandlimitedWavelet::new(FrequencyWindow::shearlet_box(2), g.spec().clone());
        let mut scaled = raw.clone();
        scaled.kappa = 2.0;
        let before = scaled.admissibility_integral(&g, &[1.0, 0.0], &s).unwrap().value;
        let after = scaled.normalize(&g, &s).unwrap().admissibility_integral(&g, &[1.0, 0.0], &s).unwrap().value;
        assert!((before / raw.admissibility_integral(&g, &[1.0, 0.0], &s).unwrap().value - 4.0).abs() < 1e-9);
        assert!((after - 1.0).abs() < 1e-6);
    }

    #[test]
    fn dilated_hat_identities() {
        let (g, w) = shearlet_wavelet();
        let xi = [1.4, 0.3];
        let id = g.identity();
        assert!((w.dilated_hat(&[0.0, 0.0], &id, &xi) - Complex64::new(w.hat(&xi), 0.0)).norm() < 1e-15);
        let h = g.shearlet(1.0, 0.5, vec![0.2]).unwrap();
        let a = w.dilated_hat(&[0.0, 0.0], &h, &xi).norm();
        let b = w.dilated_hat(&[3.0, -7.0], &h, &xi).norm();
        assert!((a - b).abs() < 1e-14);
        let gs = DilationGroup::build(DilationGroupSpec::similitude(2)).unwrap();
        let ws = BandlimitedWavelet::new(FrequencyWindow::ball(vec![1.0, 0.0], 0.5).unwrap(), gs.spec().clone());
        let two = gs.similitude_angle(2.0, 0.0).unwrap();
        let x = [0.3, 0.1];
        let xi = [0.6, 0.05];
        let expect = Complex64::from_polar(2.0 * ws.hat(&[1.2, 0.1]), -2.0 * PI * (0.18 + 0.005));
        assert!((ws.dilated_hat(&x, &two, &xi) - expect).norm() < 1e-14);
    }

    #[test]
    fn support_is_exact() {
        let (g, w) = shearlet_wavelet();
        let h = g.shearlet(1.0, 0.3, vec![0.5]).unwrap();
        let mut rng = substream(3, 3);
        for _ in 0..2000 {
            let xi = [rng.random_range(-20.0..20.0), rng.random_range(-20.0..20.0)];
            if !w.support.contains(&h.dual_apply(&xi)) {
                assert_eq!(w.dilated_hat(&[0.0, 0.0], &h, &xi), Complex64::new(0.0, 0.0));
            }
        }
    }

    #[test]
    fn spatial_eval_basics() {
        let (_, w) = shearlet_wavelet();
        let q0 = w.spatial_eval(&[0.0, 0.0]);
        // ∫ exp(−1/(1−t²)) dt = 0.443993816168079...
        let bump_int = std::f64::consts::E * 0.443_993_816_168_079_4;
        assert!((q0.value.re - w.kappa * bump_int * bump_int / 2.0).abs() < 1e-10);
        assert!(q0.value.im.abs() < 1e-14);
        let z = [0.7, -1.3];
        let a = w.spatial_eval(&z).value;
        let b = w.spatial_eval(&[-0.7, 1.3]).value;
        assert!((a - b.conj()).norm() < 1e-13);
    }

    #[test]
    fn spatial_eval_generic_path_matches_separable() {
        let g = DilationGroupSpec::diagonal(2);
        let boxed = BandlimitedWavelet::new(FrequencyWindow::boxed(vec![0.5, 0.5], vec![1.5, 2.0]).unwrap(), g);
        let z = [1.3, -0.4];
        let sep = boxed.spatial_eval(&z).value;
        let (lo, hi) = boxed.support.bounding_box();
        let q = integrate_box(lo, hi, &[12, 12], |xi| Complex64::from_polar(boxed.profile(xi), 2.0 * PI * (z[0] * xi[0] + z[1] * xi[1])));
        assert!((sep - q.value).norm() < 1e-9, "{sep} {}", q.value);
    }

    #[test]
    fn similitude_radial_oracle() {
        // Radial profile g(|ξ|) on an annulus: ∫_H |ψ̂(h^T ξ)|² dh = ∫ g(s)² ds/s.
        let grp = DilationGroup::build(DilationGroupSpec::similitude(2)).unwrap();
        let patch = DirectionPatch::cap(vec![1.0, 0.0], 1.0);
        let v = FrequencyWindow::annulus_sector(0.5, 2.0, patch, 2).unwrap();
        let w = BandlimitedWavelet::new(v, grp.spec().clone());
        let s = AdmissibilitySettings { panels: 16, ..Default::default() };
        let i = w.admissibility_integral(&grp, &[1.0, 0.0], &s).unwrap();
        let r = |s: f64| bump((2.0 * s - 2.5) / 1.5);
        let q = integrate_oscillatory(|l: f64| r(l.exp()).powi(2), 0.5f64.ln(), 2f64.ln(), 0.0, PanelPolicy::default()).value.re;
        let half = 2.0 * (0.5f64).asin();
        let ang = integrate_oscillatory(|t: f64| bump(2.0 * (t / 2.0).sin() / 1.0).powi(2), -half, half, 0.0, PanelPolicy::default()).value.re / (2.0 * PI);
        assert!((i.value - q * ang).abs() < 1e-8, "{} vs {}", i.value, q * ang);
    }

    #[test]
    fn bump_transform_matches_adaptive_rule() {
        for omega in [0.0, 3.7, 41.0, 150.0, 333.3, 640.0, 900.0, 1300.0, 2000.0] {
            let (v, e) = bump_transform(omega);
            let q = integrate_oscillatory(bump, -1.0, 1.0, omega, PanelPolicy { min_panels: 64, ..Default::default() });
            assert!((v - q.value.re).abs() <= e + q.error + 1e-15, "{omega}: {v} vs {}", q.value.re);
            assert!(e < 1e-13);
        }
    }

    #[test]
    fn bump_envelope_dominates() {
        let mut rng = substream(11, 0);
        for _ in 0..300 {
            let omega = rng.random_range(0.0..1500.0);
            let q = integrate_oscillatory(bump, -1.0, 1.0, omega, PanelPolicy { min_panels: 64, ..Default::default() });
            assert!(q.value.re.abs() <= BumpTransform::get().envelope(omega) + q.error, "{omega}");
        }
    }
}
