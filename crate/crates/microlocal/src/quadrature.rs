//! Composite Gauss-Legendre rules with embedded error estimates.

use rustfft::num_complex::Complex64;
use std::f64::consts::PI;
use std::sync::OnceLock;

/// Nodes and weights of the n-point Gauss-Legendre rule on [-1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 1 { z } else { p1 };
            let pnm1 = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (z * pn - pnm1) / (z * z - 1.0);
            let dz = pn / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

pub(crate) struct Rule {
    pub x: Vec<f64>,
    pub w: Vec<f64>,
}

fn rule(n: usize) -> &'static Rule {
    static R8: OnceLock<Rule> = OnceLock::new();
    static R12: OnceLock<Rule> = OnceLock::new();
    static R16: OnceLock<Rule> = OnceLock::new();
    let cell = match n {
        8 => &R8,
        12 => &R12,
        16 => &R16,
        _ => panic!("unsupported rule order {n}"),
    };
    cell.get_or_init(|| {
        let (x, w) = gauss_legendre(n);
        Rule { x, w }
    })
}

/// Result of a quadrature with an error estimate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Quad {
    pub value: Complex64,
    pub error: f64,
}

/// Panel counts and cap for composite rules.
#[derive(Clone, Copy, Debug)]
pub struct PanelPolicy {
    pub min_panels: usize,
    pub max_panels: usize,
    /// Maximum phase (radians) allowed across a single panel.
    pub phase_per_panel: f64,
}

impl Default for PanelPolicy {
    fn default() -> Self {
        Self { min_panels: 16, max_panels: 20_000, phase_per_panel: 8.0 * std::f64::consts::PI }
    }
}

/// Composite 1D rule over [a, b] for f(t)·exp(i·omega·t). f is smooth;
/// the panel count resolves both f and the oscillation. The error estimate
/// compares the 16-point and 8-point rules on the same panels and adds a
/// roundoff term. If the oscillation cannot be resolved within the panel cap,
/// the error estimate is the full absolute sum.
pub fn integrate_oscillatory<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, omega: f64, policy: PanelPolicy) -> Quad {
    if b <= a {
        return Quad { value: Complex64::new(0.0, 0.0), error: 0.0 };
    }
    let span = omega.abs() * (b - a);
    let need = (span / policy.phase_per_panel).ceil() as usize;
    let resolved = need <= policy.max_panels;
    let panels = need.clamp(policy.min_panels, policy.max_panels);
    let h = (b - a) / panels as f64;
    let hi = rule(16);
    let lo = rule(8);
    let mut s_hi = Complex64::new(0.0, 0.0);
    let mut s_lo = Complex64::new(0.0, 0.0);
    let mut abs_sum = 0.0;
    for p in 0..panels {
        let c = a + (p as f64 + 0.5) * h;
        for (x, w) in hi.x.iter().zip(&hi.w) {
            let t = c + 0.5 * h * x;
            let v = f(t);
            if v != 0.0 {
                let term = Complex64::from_polar(v * w * 0.5 * h, omega * t);
                s_hi += term;
                abs_sum += term.norm();
            }
        }
        for (x, w) in lo.x.iter().zip(&lo.w) {
            let t = c + 0.5 * h * x;
            let v = f(t);
            if v != 0.0 {
                s_lo += Complex64::from_polar(v * w * 0.5 * h, omega * t);
            }
        }
    }
    let error = if resolved { (s_hi - s_lo).norm() + 64.0 * f64::EPSILON * abs_sum } else { abs_sum.max((s_hi - s_lo).norm()) };
    Quad { value: s_hi, error }
}

/// Tensor composite rule on a box with `panels[k]` panels along axis k.
/// Calls `f(point, weight)` for every node of the chosen order.
pub(crate) fn tensor_nodes<F: FnMut(&[f64], f64)>(lo: &[f64], hi: &[f64], panels: &[usize], order: usize, mut f: F) {
    let r = rule(order);
    let d = lo.len();
    let per_axis: Vec<Vec<(f64, f64)>> = (0..d)
        .map(|k| {
            let h = (hi[k] - lo[k]) / panels[k] as f64;
            let mut v = Vec::with_capacity(panels[k] * order);
            for p in 0..panels[k] {
                let c = lo[k] + (p as f64 + 0.5) * h;
                for (x, w) in r.x.iter().zip(&r.w) {
                    v.push((c + 0.5 * h * x, 0.5 * h * w));
                }
            }
            v
        })
        .collect();
    let mut idx = vec![0usize; d];
    let mut pt = vec![0.0; d];
    loop {
        let mut w = 1.0;
        for k in 0..d {
            let (x, wk) = per_axis[k][idx[k]];
            pt[k] = x;
            w *= wk;
        }
        f(&pt, w);
        let mut k = 0;
        loop {
            idx[k] += 1;
            if idx[k] < per_axis[k].len() {
                break;
            }
            idx[k] = 0;
            k += 1;
            if k == d {
                return;
            }
        }
    }
}

/// Tensor composite integral of a complex integrand over a box with an
/// embedded error estimate (order 12 against order 8 on the same panels).
pub fn integrate_box<F: FnMut(&[f64]) -> Complex64>(lo: &[f64], hi: &[f64], panels: &[usize], mut f: F) -> Quad {
    let mut s_hi = Complex64::new(0.0, 0.0);
    let mut abs_sum = 0.0;
    tensor_nodes(lo, hi, panels, 12, |p, w| {
        let v = f(p) * w;
        s_hi += v;
        abs_sum += v.norm();
    });
    let mut s_lo = Complex64::new(0.0, 0.0);
    tensor_nodes(lo, hi, panels, 8, |p, w| s_lo += f(p) * w);
    Quad { value: s_hi, error: (s_hi - s_lo).norm() + 64.0 * f64::EPSILON * abs_sum }
}

/// Composite 16-point Gauss-Legendre nodes and weights on [a, b].
pub fn composite_nodes(a: f64, b: f64, panels: usize) -> Vec<(f64, f64)> {
    let r = rule(16);
    let h = (b - a) / panels as f64;
    let mut v = Vec::with_capacity(panels * 16);
    for p in 0..panels {
        let c = a + (p as f64 + 0.5) * h;
        for (x, w) in r.x.iter().zip(&r.w) {
            v.push((c + 0.5 * h * x, 0.5 * h * w));
        }
    }
    v
}

struct PhasedLevel {
    axes: Vec<Vec<f64>>,
    amp: Vec<f64>,
}

impl PhasedLevel {
    fn build<F: FnMut(&[f64]) -> f64>(lo: &[f64], hi: &[f64], panels: &[usize], f: &mut F) -> (Self, f64) {
        let d = lo.len();
        let nodes: Vec<Vec<(f64, f64)>> = (0..d).map(|k| composite_nodes(lo[k], hi[k], panels[k])).collect();
        let total: usize = nodes.iter().map(|n| n.len()).product();
        let mut amp = Vec::with_capacity(total);
        let mut idx = vec![0usize; d];
        let mut pt = vec![0.0; d];
        let mut abs = 0.0;
        for _ in 0..total {
            let mut w = 1.0;
            for k in 0..d {
                pt[k] = nodes[k][idx[k]].0;
                w *= nodes[k][idx[k]].1;
            }
            let v = f(&pt) * w;
            abs += v.abs();
            amp.push(v);
            for k in (0..d).rev() {
                idx[k] += 1;
                if idx[k] < nodes[k].len() {
                    break;
                }
                idx[k] = 0;
            }
        }
        (PhasedLevel { axes: nodes.into_iter().map(|n| n.into_iter().map(|(x, _)| x).collect()).collect(), amp }, abs)
    }

    fn eval(&self, z: &[f64]) -> Complex64 {
        let d = self.axes.len();
        let phase: Vec<Vec<Complex64>> = (0..d).map(|k| self.axes[k].iter().map(|x| Complex64::from_polar(1.0, 2.0 * PI * z[k] * x)).collect()).collect();
        // contract the last axis against the real amplitudes, then the rest
        let n = self.axes[d - 1].len();
        let last = &phase[d - 1];
        let mut cur: Vec<Complex64> = self.amp.chunks_exact(n).map(|row| row.iter().zip(last).map(|(a, p)| p * a).sum()).collect();
        for k in (0..d - 1).rev() {
            let n = self.axes[k].len();
            let p = &phase[k];
            let m = cur.len() / n;
            let mut next = vec![Complex64::new(0.0, 0.0); m];
            for (i, v) in cur.iter().enumerate() {
                next[i / n] += v * p[i % n];
            }
            cur = next;
        }
        cur[0]
    }
}

/// ∫_box f(η) e^{2πi⟨z,η⟩} dη for many z sharing one real amplitude f. Two
/// composite 16-point rules (P and 2P panels per axis) give the value and its
/// error estimate; the phase factorizes over axes, so each z costs one tensor
/// contraction.
pub struct PhasedTensorRule {
    coarse: PhasedLevel,
    fine: PhasedLevel,
    abs_sum: f64,
    resolved: bool,
}

impl PhasedTensorRule {
    /// `panels[k]` is the coarse panel count on axis k.
    pub fn new<F: FnMut(&[f64]) -> f64>(lo: &[f64], hi: &[f64], panels: &[usize], mut f: F) -> Self {
        let (coarse, _) = PhasedLevel::build(lo, hi, panels, &mut f);
        let fine_panels: Vec<usize> = panels.iter().map(|p| 2 * p).collect();
        let (fine, abs_sum) = PhasedLevel::build(lo, hi, &fine_panels, &mut f);
        Self { coarse, fine, abs_sum, resolved: true }
    }

    /// Coarse panel counts resolving phases up to `max_z` with at most
    /// `phase_per_panel` radians per fine panel, capped at `max_panels`.
    /// Returns the counts and whether the cap was reached.
    pub fn panels_for(lo: &[f64], hi: &[f64], max_z: &[f64], min_panels: usize, max_panels: usize, phase_per_panel: f64) -> (Vec<usize>, bool) {
        let mut capped = false;
        let p = (0..lo.len())
            .map(|k| {
                let need = (PI * max_z[k].abs() * (hi[k] - lo[k]) / phase_per_panel).ceil() as usize;
                if need > max_panels {
                    capped = true;
                }
                need.clamp(min_panels.max(1), max_panels)
            })
            .collect();
        (p, capped)
    }

    pub fn mark_unresolved(mut self) -> Self {
        self.resolved = false;
        self
    }

    pub fn eval(&self, z: &[f64]) -> Quad {
        let fine = self.fine.eval(z);
        let coarse = self.coarse.eval(z);
        let error = (fine - coarse).norm() + 64.0 * f64::EPSILON * self.abs_sum;
        Quad { value: fine, error: if self.resolved { error } else { error.max(self.abs_sum) } }
    }

    /// Σ|f·w| over the fine nodes.
    pub fn abs_sum(&self) -> f64 {
        self.abs_sum
    }
}

/// Pairwise (tree) summation, independent of thread scheduling.
pub fn pairwise_sum(v: &[f64]) -> f64 {
    if v.len() <= 8 {
        return v.iter().sum();
    }
    let m = v.len() / 2;
    pairwise_sum(&v[..m]) + pairwise_sum(&v[m..])
}
