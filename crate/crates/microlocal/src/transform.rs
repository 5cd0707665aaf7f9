//! Wavelet coefficients W_ψu(y,h) = ⟨u | π(y,h)ψ⟩ for analytic objects
//! (frequency-side quadrature) and for sampled grids (FFT path).

use crate::error::{Error, Result};
use crate::fft::{fft_nd, signed_index, unravel};
use crate::geometry::{box_corners, min_norm_over_box};
use crate::group::{mul, norm, GroupElement};
use crate::quadrature::{PhasedTensorRule, Quad};
use crate::wavelet::{bump, bump_transform, BandlimitedWavelet};
use nalgebra::{DMatrix, SymmetricEigen};
use rustfft::num_complex::Complex64;
use rustfft::FftDirection;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Regular grid with equal spacing on every axis; row-major samples, last axis fastest.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub dims: Vec<usize>,
    pub spacing: f64,
    pub origin: Vec<f64>,
}

impl GridSpec {
    pub fn new(dims: Vec<usize>, spacing: f64, origin: Vec<f64>) -> Result<Self> {
        let g = Self { dims, spacing, origin };
        g.validate()?;
        Ok(g)
    }

    /// Grid of n^d points centred on the origin.
    pub fn centered(n: usize, d: usize, spacing: f64) -> Result<Self> {
        Self::new(vec![n; d], spacing, vec![-(n as f64) * spacing / 2.0; d])
    }

    pub fn validate(&self) -> Result<()> {
        if self.dims.is_empty() || self.dims.iter().any(|n| *n == 0) {
            return Err(Error::EmptyGrid);
        }
        if self.dims.iter().any(|n| !n.is_power_of_two()) {
            return Err(Error::Grid(format!("sizes {:?} are not powers of two", self.dims)));
        }
        if !(self.spacing > 0.0) || !self.spacing.is_finite() {
            return Err(Error::Grid(format!("spacing {} must be positive", self.spacing)));
        }
        if self.origin.len() != self.dims.len() {
            return Err(Error::Grid("origin length differs from the number of axes".into()));
        }
        Ok(())
    }

    pub fn dimension(&self) -> usize {
        self.dims.len()
    }

    pub fn len(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacing.powi(self.dims.len() as i32)
    }

    pub fn point(&self, index: &[usize]) -> Vec<f64> {
        index.iter().zip(&self.origin).map(|(i, o)| o + *i as f64 * self.spacing).collect()
    }

    pub fn point_of_flat(&self, flat: usize) -> Vec<f64> {
        let mut idx = vec![0; self.dims.len()];
        unravel(flat, &self.dims, &mut idx);
        self.point(&idx)
    }

    pub fn flat_index(&self, index: &[usize]) -> usize {
        index.iter().zip(&self.dims).fold(0, |acc, (i, n)| acc * n + i)
    }

    /// Largest resolvable frequency per axis.
    pub fn nyquist(&self) -> f64 {
        0.5 / self.spacing
    }
}

/// Sidecar header for the flat binary format.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BinaryHeader {
    pub dims: Vec<usize>,
    pub spacing: f64,
    pub origin: Vec<f64>,
    /// Interleaved (re, im) pairs when true, reals otherwise.
    pub complex: bool,
    /// Data file name relative to the header.
    pub data: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub metadata: Vec<(String, String)>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GridSignal {
    pub grid: GridSpec,
    pub samples: Vec<Complex64>,
}

impl GridSignal {
    pub fn new(grid: GridSpec, samples: Vec<Complex64>) -> Result<Self> {
        grid.validate()?;
        if samples.len() != grid.len() {
            return Err(Error::Grid(format!("{} samples for a grid of {}", samples.len(), grid.len())));
        }
        Ok(Self { grid, samples })
    }

    pub fn from_real(grid: GridSpec, samples: Vec<f64>) -> Result<Self> {
        Self::new(grid, samples.into_iter().map(|x| Complex64::new(x, 0.0)).collect())
    }

    /// Σ|u_m|²
    pub fn energy(&self) -> f64 {
        self.samples.iter().map(|s| s.norm_sqr()).sum()
    }

    /// Σ u_m · cell volume
    pub fn total_mass(&self) -> Complex64 {
        self.samples.iter().sum::<Complex64>() * self.grid.cell_volume()
    }

    /// Cyclic shift by whole cells along each axis.
    pub fn shifted(&self, shift: &[i64]) -> GridSignal {
        let dims = &self.grid.dims;
        let mut out = vec![ZERO; self.samples.len()];
        let mut idx = vec![0; dims.len()];
        for (flat, v) in self.samples.iter().enumerate() {
            unravel(flat, dims, &mut idx);
            let to: Vec<usize> = idx.iter().zip(dims).zip(shift).map(|((i, n), s)| (*i as i64 + s).rem_euclid(*n as i64) as usize).collect();
            out[self.grid.flat_index(&to)] = *v;
        }
        GridSignal { grid: self.grid.clone(), samples: out }
    }

    pub fn write(&self, header_path: &Path, metadata: &[(String, String)]) -> Result<()> {
        write_binary(header_path, &self.grid, &self.samples, metadata)
    }

    pub fn read(header_path: &Path) -> Result<Self> {
        let (grid, samples) = read_binary(header_path)?;
        Self::new(grid, samples)
    }
}

fn data_path(header_path: &Path) -> PathBuf {
    header_path.with_extension("bin")
}

/// Writes a TOML header and a flat little-endian f64 file next to it.
pub fn write_binary(header_path: &Path, grid: &GridSpec, values: &[Complex64], metadata: &[(String, String)]) -> Result<()> {
    let complex = values.iter().any(|v| v.im != 0.0);
    let data = data_path(header_path);
    let header = BinaryHeader {
        dims: grid.dims.clone(),
        spacing: grid.spacing,
        origin: grid.origin.clone(),
        complex,
        data: data.file_name().and_then(|s| s.to_str()).unwrap_or("data.bin").to_string(),
        metadata: metadata.to_vec(),
    };
    let text = toml::to_string(&header).map_err(|e| Error::Io(e.to_string()))?;
    std::fs::write(header_path, text)?;
    let mut bytes = Vec::with_capacity(values.len() * if complex { 16 } else { 8 });
    for v in values {
        bytes.extend_from_slice(&v.re.to_le_bytes());
        if complex {
            bytes.extend_from_slice(&v.im.to_le_bytes());
        }
    }
    std::fs::File::create(&data)?.write_all(&bytes)?;
    Ok(())
}

pub fn read_binary(header_path: &Path) -> Result<(GridSpec, Vec<Complex64>)> {
    let text = std::fs::read_to_string(header_path)?;
    let header: BinaryHeader = toml::from_str(&text).map_err(|e| Error::Io(format!("{}: {e}", header_path.display())))?;
    let grid = GridSpec::new(header.dims, header.spacing, header.origin)?;
    let data = header_path.parent().unwrap_or(Path::new(".")).join(&header.data);
    let mut bytes = Vec::new();
    std::fs::File::open(&data)?.read_to_end(&mut bytes)?;
    let width = if header.complex { 16 } else { 8 };
    if bytes.len() != grid.len() * width {
        return Err(Error::Grid(format!("{} holds {} bytes, expected {}", data.display(), bytes.len(), grid.len() * width)));
    }
    let f = |c: &[u8]| f64::from_le_bytes(c.try_into().expect("8-byte chunk"));
    let values = bytes.chunks_exact(width).map(|c| if header.complex { Complex64::new(f(&c[..8]), f(&c[8..])) } else { Complex64::new(f(c), 0.0) }).collect();
    Ok((grid, values))
}

/// Distributions whose wavelet coefficients can be computed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AnalysedObject {
    /// δ_{x0}
    PointMass { x0: Vec<f64> },
    /// Surface measure on the hyperplane through `offset` with unit `normal`.
    HyperplaneDelta { normal: Vec<f64>, offset: Vec<f64> },
    /// Normal density with the given mean and covariance (unit mass).
    Gaussian { center: Vec<f64>, covariance: Vec<Vec<f64>> },
    #[serde(skip)]
    Grid(GridSignal),
}

impl AnalysedObject {
    pub fn dimension(&self) -> usize {
        match self {
            Self::PointMass { x0 } => x0.len(),
            Self::HyperplaneDelta { normal, .. } => normal.len(),
            Self::Gaussian { center, .. } => center.len(),
            Self::Grid(g) => g.grid.dimension(),
        }
    }

    pub fn validate(&self, d: usize) -> Result<()> {
        let check = |v: &[f64], what: &str| {
            if v.len() != d || v.iter().any(|x| !x.is_finite()) {
                Err(Error::Parameter(format!("{what} must be a finite vector of length {d}")))
            } else {
                Ok(())
            }
        };
        match self {
            Self::PointMass { x0 } => check(x0, "x0"),
            Self::HyperplaneDelta { normal, offset } => {
                check(normal, "normal")?;
                check(offset, "offset")?;
                if (norm(normal) - 1.0).abs() > 1e-9 {
                    return Err(Error::Parameter(format!("normal {normal:?} is not unit length")));
                }
                Ok(())
            }
            Self::Gaussian { center, covariance } => {
                check(center, "center")?;
                covariance_matrix(covariance, d).map(|_| ())
            }
            Self::Grid(g) => {
                if g.grid.dimension() != d {
                    return Err(Error::Parameter(format!("grid has {} axes, expected {d}", g.grid.dimension())));
                }
                g.grid.validate()
            }
        }
    }

    /// Hyperplane delta with the normal rescaled to unit length.
    pub fn hyperplane(normal: Vec<f64>, offset: Vec<f64>) -> Result<Self> {
        let n = norm(&normal);
        if !(n > 0.0) {
            return Err(Error::Parameter("zero normal".into()));
        }
        let o = Self::HyperplaneDelta { normal: normal.iter().map(|x| x / n).collect(), offset };
        o.validate(o.dimension())?;
        Ok(o)
    }

    /// Isotropic Gaussian of standard deviation `sigma`.
    pub fn isotropic_gaussian(center: Vec<f64>, sigma: f64) -> Self {
        let d = center.len();
        let covariance = (0..d).map(|i| (0..d).map(|j| if i == j { sigma * sigma } else { 0.0 }).collect()).collect();
        Self::Gaussian { center, covariance }
    }

    /// Same object with coordinates permuted: new axis k is old axis perm[k].
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        let p = |v: &[f64]| perm.iter().map(|&k| v[k]).collect::<Vec<f64>>();
        Ok(match self {
            Self::PointMass { x0 } => Self::PointMass { x0: p(x0) },
            Self::HyperplaneDelta { normal, offset } => Self::HyperplaneDelta { normal: p(normal), offset: p(offset) },
            Self::Gaussian { center, covariance } => Self::Gaussian { center: p(center), covariance: perm.iter().map(|&i| perm.iter().map(|&j| covariance[i][j]).collect()).collect() },
            Self::Grid(_) => return Err(Error::Variant("coordinate permutation of grid signals".into())),
        })
    }
}

fn covariance_matrix(c: &[Vec<f64>], d: usize) -> Result<DMatrix<f64>> {
    if c.len() != d || c.iter().any(|r| r.len() != d) {
        return Err(Error::Parameter(format!("covariance must be {d}×{d}")));
    }
    let m = DMatrix::from_fn(d, d, |i, j| c[i][j]);
    if (0..d).any(|i| (0..d).any(|j| (m[(i, j)] - m[(j, i)]).abs() > 1e-12 * (1.0 + m[(i, j)].abs()))) {
        return Err(Error::Parameter("covariance is not symmetric".into()));
    }
    if m.clone().cholesky().is_none() {
        return Err(Error::Parameter("covariance is not positive definite".into()));
    }
    Ok(m)
}

/// Panel budgets for the frequency-side rules.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CoefficientSettings {
    /// Minimum coarse panels per axis; the fine rule doubles them.
    pub min_panels: usize,
    pub max_panels: usize,
    /// Phase (radians) allowed per fine panel.
    pub phase_per_panel: f64,
    /// Coefficients with a rigorous magnitude bound below this are returned as 0 ± bound.
    pub negligible: f64,
}

impl Default for CoefficientSettings {
    fn default() -> Self {
        Self { min_panels: 8, max_panels: 4096, phase_per_panel: 2.0 * PI, negligible: 1e-100 }
    }
}

impl CoefficientSettings {
    /// Lighter rule used by dense scans.
    pub fn scan() -> Self {
        Self { min_panels: 3, ..Self::default() }
    }
}

/// Frequency-side kernel for one element h: amplitudes ψ̂(η)·|û(h^{-T}η)| are
/// computed once, each y then costs one phase contraction. Covers point masses
/// and Gaussians, whose transforms are a modulus times e^{−2πi⟨shift,ξ⟩}.
pub struct FrequencyKernel {
    rule: Option<PhasedTensorRule>,
    h_inv: DMatrix<f64>,
    shift: Vec<f64>,
    scale: f64,
    z_max: Vec<f64>,
    bound: f64,
}

impl FrequencyKernel {
    /// `z_max[k]` bounds |(h^{-1}(y − shift))_k| for the y the kernel will see.
    pub fn new(u: &AnalysedObject, psi: &BandlimitedWavelet, h: &GroupElement, settings: &CoefficientSettings, z_max: &[f64]) -> Result<Self> {
        let d = h.dimension();
        u.validate(d)?;
        let (lo, hi) = psi.support.bounding_box();
        let scale = h.det.abs().powf(-0.5);
        let volume: f64 = lo.iter().zip(hi).map(|(a, b)| b - a).product();
        let (panels, capped) = PhasedTensorRule::panels_for(lo, hi, z_max, settings.min_panels, settings.max_panels, settings.phase_per_panel);
        let base = |rule: Option<PhasedTensorRule>, shift: &[f64], bound: f64| Self { rule, h_inv: h.inv_matrix.clone(), shift: shift.to_vec(), scale, z_max: z_max.to_vec(), bound };
        match u {
            AnalysedObject::PointMass { x0 } => {
                let rule = PhasedTensorRule::new(lo, hi, &panels, |eta| psi.hat(eta));
                let rule = if capped { rule.mark_unresolved() } else { rule };
                Ok(base(Some(rule), x0, scale * psi.kappa * volume))
            }
            AnalysedObject::Gaussian { center, covariance } => {
                let sigma = covariance_matrix(covariance, d)?;
                let eig = SymmetricEigen::new(sigma.clone());
                let lmin = eig.eigenvalues.min();
                let lmax = eig.eigenvalues.max();
                let m = min_norm_over_box(&h.inv_transpose, lo, hi);
                let bound = scale * psi.kappa * volume * (-2.0 * PI * PI * lmin * m * m).exp();
                if bound <= settings.negligible {
                    return Ok(base(None, center, bound));
                }
                // resolve the Gaussian factor: a panel spans about four of its standard deviations
                let mut panels = panels;
                let mut capped = capped;
                for k in 0..d {
                    let col = norm(&(0..d).map(|i| h.inv_transpose[(i, k)]).collect::<Vec<_>>());
                    let std = 1.0 / (2.0 * PI * lmax.sqrt() * col);
                    let need = ((hi[k] - lo[k]) / (4.0 * std)).ceil() as usize;
                    if need > settings.max_panels {
                        capped = true;
                    }
                    panels[k] = panels[k].max(need.min(settings.max_panels));
                }
                let q = h.inv_transpose.transpose() * &sigma * &h.inv_transpose;
                let rule = PhasedTensorRule::new(lo, hi, &panels, |eta| {
                    let v = psi.hat(eta);
                    if v == 0.0 {
                        return 0.0;
                    }
                    let mut e = 0.0;
                    for i in 0..d {
                        for j in 0..d {
                            e += eta[i] * q[(i, j)] * eta[j];
                        }
                    }
                    v * (-2.0 * PI * PI * e).exp()
                });
                let rule = if capped { rule.mark_unresolved() } else { rule };
                Ok(base(Some(rule), center, bound))
            }
            AnalysedObject::HyperplaneDelta { .. } => Err(Error::Variant("hyperplane deltas use the line integral".into())),
            AnalysedObject::Grid(_) => Err(Error::Variant("grid signals use coefficient_grid".into())),
        }
    }

    pub fn eval(&self, y: &[f64]) -> Quad {
        let Some(rule) = &self.rule else {
            return Quad { value: ZERO, error: self.bound };
        };
        let diff: Vec<f64> = y.iter().zip(&self.shift).map(|(a, b)| a - b).collect();
        let z = mul(&self.h_inv, &diff);
        let q = rule.eval(&z);
        let mut error = self.scale * q.error;
        if z.iter().zip(&self.z_max).any(|(z, m)| z.abs() > m * (1.0 + 1e-12)) {
            error = error.max(self.scale * rule.abs_sum());
        }
        Quad { value: q.value * self.scale, error }
    }
}

/// Largest |(h^{-1}(y − shift))_k| over the given points.
pub fn z_extent(h: &GroupElement, shift: &[f64], ys: &[Vec<f64>]) -> Vec<f64> {
    let d = h.dimension();
    let mut m = vec![0.0f64; d];
    for y in ys {
        let diff: Vec<f64> = y.iter().zip(shift).map(|(a, b)| a - b).collect();
        for (k, z) in mul(&h.inv_matrix, &diff).iter().enumerate() {
            m[k] = m[k].max(z.abs());
        }
    }
    m
}

/// Same bound over every point of an axis-aligned box of y.
pub fn z_extent_box(h: &GroupElement, shift: &[f64], lo: &[f64], hi: &[f64]) -> Vec<f64> {
    z_extent(h, shift, &box_corners(lo, hi))
}

fn object_shift(u: &AnalysedObject) -> Vec<f64> {
    match u {
        AnalysedObject::PointMass { x0 } => x0.clone(),
        AnalysedObject::Gaussian { center, .. } => center.clone(),
        AnalysedObject::HyperplaneDelta { offset, .. } => offset.clone(),
        AnalysedObject::Grid(g) => vec![0.0; g.grid.dimension()],
    }
}

/// W_ψu(y,h) through the frequency-side tensor rule (point masses and Gaussians).
pub fn coefficients_frequency(u: &AnalysedObject, psi: &BandlimitedWavelet, ys: &[Vec<f64>], h: &GroupElement, settings: &CoefficientSettings) -> Result<Vec<Quad>> {
    let kernel = FrequencyKernel::new(u, psi, h, settings, &z_extent(h, &object_shift(u), ys))?;
    Ok(ys.iter().map(|y| kernel.eval(y)).collect())
}

/// Parameter range {t : t·g ∈ [lo, hi]}.
fn line_range(g: &[f64], lo: &[f64], hi: &[f64]) -> Option<(f64, f64)> {
    let (mut t0, mut t1) = (f64::NEG_INFINITY, f64::INFINITY);
    for k in 0..g.len() {
        if g[k] == 0.0 {
            if lo[k] > 0.0 || hi[k] < 0.0 {
                return None;
            }
            continue;
        }
        let (a, b) = (lo[k] / g[k], hi[k] / g[k]);
        t0 = t0.max(a.min(b));
        t1 = t1.min(a.max(b));
    }
    (t0 < t1 && t0.is_finite() && t1.is_finite()).then_some((t0, t1))
}

/// |det h|^{1/2} ∫ ψ̂(t h^Tγ) e^{2πi t⟨y−p,γ⟩} dt, surface constant 1.
fn hyperplane_coefficients(normal: &[f64], offset: &[f64], psi: &BandlimitedWavelet, ys: &[Vec<f64>], h: &GroupElement, settings: &CoefficientSettings) -> Vec<Quad> {
    let (lo, hi) = psi.support.bounding_box();
    let g = h.dual_apply(normal);
    let Some((t0, t1)) = line_range(&g, lo, hi) else {
        return vec![Quad { value: ZERO, error: 0.0 }; ys.len()];
    };
    let scale = h.det.abs().sqrt();
    let zs: Vec<f64> = ys.iter().map(|y| y.iter().zip(offset).zip(normal).map(|((a, b), n)| (a - b) * n).sum()).collect();
    if let Some(q) = single_bump_line(psi, &g, &zs) {
        return q.into_iter().map(|q| Quad { value: q.value * scale, error: q.error * scale }).collect();
    }
    let z_max = zs.iter().fold(0.0f64, |m, z| m.max(z.abs()));
    let (panels, capped) = PhasedTensorRule::panels_for(&[t0], &[t1], &[z_max], 2 * settings.min_panels, settings.max_panels * 8, settings.phase_per_panel);
    let rule = PhasedTensorRule::new(&[t0], &[t1], &panels, |t| psi.hat(&g.iter().map(|x| x * t[0]).collect::<Vec<_>>()));
    let rule = if capped { rule.mark_unresolved() } else { rule };
    zs.iter()
        .map(|z| {
            let q = rule.eval(&[*z]);
            Quad { value: q.value * scale, error: q.error * scale }
        })
        .collect()
}

/// Closed form when the line t·g meets a tensor profile along a single axis k:
/// ∫ψ̂(tg)e^{2πitz}dt = C·(s/|g_k|)·e^{2πizm/g_k}·B(2πzs/g_k), B the bump transform.
fn single_bump_line(psi: &BandlimitedWavelet, g: &[f64], zs: &[f64]) -> Option<Vec<Quad>> {
    let iv = psi.tensor_intervals()?;
    let mut moving = g.iter().enumerate().filter(|(_, x)| **x != 0.0);
    let (k, &gk) = moving.next()?;
    if moving.next().is_some() {
        return None;
    }
    let constant: f64 = iv.iter().enumerate().filter(|(j, _)| *j != k).map(|(_, (lo, hi))| bump((-lo - hi) / (hi - lo))).product::<f64>() * psi.kappa;
    let (m, s) = (0.5 * (iv[k].0 + iv[k].1), 0.5 * (iv[k].1 - iv[k].0));
    let amp = constant * s / gk.abs();
    Some(
        zs.iter()
            .map(|z| {
                if constant == 0.0 {
                    return Quad { value: ZERO, error: 0.0 };
                }
                let (b, e) = bump_transform(2.0 * PI * z * s / gk);
                Quad { value: Complex64::from_polar(amp * b, 2.0 * PI * z * m / gk), error: amp.abs() * e }
            })
            .collect(),
    )
}

/// W_ψu(y,h) for an analytic object at several y sharing one h.
pub fn coefficients_analytic(u: &AnalysedObject, psi: &BandlimitedWavelet, ys: &[Vec<f64>], h: &GroupElement, settings: &CoefficientSettings) -> Result<Vec<Quad>> {
    let d = h.dimension();
    u.validate(d)?;
    if ys.iter().any(|y| y.len() != d) {
        return Err(Error::Parameter(format!("points must have length {d}")));
    }
    match u {
        AnalysedObject::PointMass { x0 } => {
            let scale = h.det.abs().powf(-0.5);
            Ok(ys
                .iter()
                .map(|y| {
                    // ψ̂ is real, so conj ψ(h^{-1}(x0 − y)) = ψ(h^{-1}(y − x0))
                    let diff: Vec<f64> = y.iter().zip(x0).map(|(a, b)| a - b).collect();
                    let q = psi.spatial_eval(&h.inv_apply(&diff));
                    Quad { value: q.value * scale, error: q.error * scale }
                })
                .collect())
        }
        AnalysedObject::HyperplaneDelta { normal, offset } => Ok(hyperplane_coefficients(normal, offset, psi, ys, h, settings)),
        AnalysedObject::Gaussian { .. } => coefficients_frequency(u, psi, ys, h, settings),
        AnalysedObject::Grid(_) => Err(Error::Variant("grid signals use coefficient_grid".into())),
    }
}

pub fn coefficient_analytic(u: &AnalysedObject, psi: &BandlimitedWavelet, y: &[f64], h: &GroupElement, settings: &CoefficientSettings) -> Result<Quad> {
    Ok(coefficients_analytic(u, psi, &[y.to_vec()], h, settings)?.remove(0))
}

/// A grid signal with its forward transform cached.
pub struct PreparedSignal {
    pub signal: GridSignal,
    spectrum: Vec<Complex64>,
}

impl PreparedSignal {
    pub fn new(signal: GridSignal) -> Result<Self> {
        signal.grid.validate()?;
        let mut spectrum = signal.samples.clone();
        fft_nd(&mut spectrum, &signal.grid.dims, FftDirection::Forward);
        Ok(Self { signal, spectrum })
    }

    /// Σ|U_k|² / N with N the number of samples; equals the grid energy.
    pub fn spectral_energy(&self) -> f64 {
        self.spectrum.iter().map(|s| s.norm_sqr()).sum::<f64>() / self.spectrum.len() as f64
    }

    /// Frequency of FFT bin `flat`.
    pub fn frequency(&self, flat: usize) -> Vec<f64> {
        let dims = &self.signal.grid.dims;
        let mut idx = vec![0; dims.len()];
        unravel(flat, dims, &mut idx);
        idx.iter().zip(dims).map(|(k, n)| signed_index(*k, *n) as f64 / (*n as f64 * self.signal.grid.spacing)).collect()
    }

    /// Multiplier |det h|^{1/2} ψ̂(h^T ξ_k) on the frequency grid.
    pub fn multiplier(&self, psi: &BandlimitedWavelet, h: &GroupElement) -> Result<Vec<f64>> {
        check_nyquist(&self.signal.grid, psi, h)?;
        let s = h.det.abs().sqrt();
        Ok((0..self.spectrum.len()).map(|k| s * psi.hat(&h.dual_apply(&self.frequency(k)))).collect())
    }
}

/// The support h^{-T}·supp ψ̂ must lie strictly inside the Nyquist box.
pub fn check_nyquist(grid: &GridSpec, psi: &BandlimitedWavelet, h: &GroupElement) -> Result<()> {
    if psi.support.dimension != grid.dimension() {
        return Err(Error::Grid(format!("wavelet has dimension {}, grid {}", psi.support.dimension, grid.dimension())));
    }
    let (lo, hi) = psi.support.bounding_box();
    let ny = grid.nyquist();
    for c in box_corners(lo, hi) {
        let xi = h.inv_transpose_apply(&c);
        if let Some(x) = xi.iter().find(|x| x.abs() >= ny) {
            return Err(Error::Aliasing(format!("support reaches frequency {x:.4}, Nyquist limit {ny:.4}")));
        }
    }
    Ok(())
}

/// W_ψu(·,h) on the signal grid.
#[derive(Clone, Debug, PartialEq)]
pub struct CoefficientField {
    pub h_matrix: Vec<f64>,
    pub grid: GridSpec,
    pub values: Vec<Complex64>,
}

impl CoefficientField {
    pub fn write_csv(&self, path: &Path, metadata: &[(String, String)]) -> Result<()> {
        let mut f = std::fs::File::create(path)?;
        for (k, v) in metadata {
            writeln!(f, "# {k}: {v}")?;
        }
        let mut w = csv::Writer::from_writer(f);
        let d = self.grid.dimension();
        let mut head = vec!["index".to_string()];
        head.extend((0..d).map(|k| format!("y{k}")));
        head.extend(["real".to_string(), "imag".to_string()]);
        w.write_record(&head).map_err(|e| Error::Io(e.to_string()))?;
        for (i, v) in self.values.iter().enumerate() {
            let mut row = vec![i.to_string()];
            row.extend(self.grid.point_of_flat(i).iter().map(|x| format!("{x:.17e}")));
            row.push(format!("{:.17e}", v.re));
            row.push(format!("{:.17e}", v.im));
            w.write_record(&row).map_err(|e| Error::Io(e.to_string()))?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_binary(&self, header_path: &Path, metadata: &[(String, String)]) -> Result<()> {
        let mut meta = metadata.to_vec();
        meta.push(("h".into(), format!("{:?}", self.h_matrix)));
        write_binary(header_path, &self.grid, &self.values, &meta)
    }
}

/// One pointwise product with the cached spectrum and one inverse transform.
pub fn coefficient_grid(u: &PreparedSignal, psi: &BandlimitedWavelet, h: &GroupElement) -> Result<CoefficientField> {
    let m = u.multiplier(psi, h)?;
    let mut data: Vec<Complex64> = u.spectrum.iter().zip(&m).map(|(s, w)| s * *w).collect();
    let grid = &u.signal.grid;
    fft_nd(&mut data, &grid.dims, FftDirection::Inverse);
    let n = data.len() as f64;
    for v in &mut data {
        *v /= n;
    }
    Ok(CoefficientField { h_matrix: h.matrix.transpose().as_slice().to_vec(), grid: grid.clone(), values: data })
}

/// Samples an analytic object on a grid. Point masses occupy the nearest
/// cell with value 1/cell volume; hyperplanes become the ridge
/// max(0, 1 − |s|/Δ)/Δ in the signed distance s, a mollification at the grid scale.
pub fn synthesize_signal(u: &AnalysedObject, grid: &GridSpec) -> Result<GridSignal> {
    grid.validate()?;
    let d = grid.dimension();
    if let AnalysedObject::Grid(g) = u {
        return Ok(g.clone());
    }
    u.validate(d)?;
    let dx = grid.spacing;
    let mut samples = vec![ZERO; grid.len()];
    match u {
        AnalysedObject::PointMass { x0 } => {
            let idx: Vec<i64> = x0.iter().zip(&grid.origin).map(|(x, o)| ((x - o) / dx).round() as i64).collect();
            if idx.iter().zip(&grid.dims).all(|(i, n)| *i >= 0 && (*i as usize) < *n) {
                let idx: Vec<usize> = idx.iter().map(|i| *i as usize).collect();
                samples[grid.flat_index(&idx)] = Complex64::new(1.0 / grid.cell_volume(), 0.0);
            }
        }
        AnalysedObject::HyperplaneDelta { normal, offset } => {
            for (i, s) in samples.iter_mut().enumerate() {
                let x = grid.point_of_flat(i);
                let dist: f64 = x.iter().zip(offset).zip(normal).map(|((a, b), n)| (a - b) * n).sum();
                *s = Complex64::new((1.0 - dist.abs() / dx).max(0.0) / dx, 0.0);
            }
        }
        AnalysedObject::Gaussian { center, covariance } => {
            let sigma = covariance_matrix(covariance, d)?;
            let inv = sigma.clone().try_inverse().ok_or_else(|| Error::Parameter("singular covariance".into()))?;
            let c = ((2.0 * PI).powi(d as i32) * sigma.determinant()).sqrt().recip();
            for (i, s) in samples.iter_mut().enumerate() {
                let x = grid.point_of_flat(i);
                let r: Vec<f64> = x.iter().zip(center).map(|(a, b)| a - b).collect();
                let q: f64 = (0..d).map(|a| (0..d).map(|b| r[a] * inv[(a, b)] * r[b]).sum::<f64>()).sum();
                *s = Complex64::new(c * (-0.5 * q).exp(), 0.0);
            }
        }
        AnalysedObject::Grid(_) => unreachable!(),
    }
    GridSignal::new(grid.clone(), samples)
}
