//! Matrix dilation groups: similitude, diagonal, shearlet and user-supplied charts.
//!
//! Chart coordinates are the canonical state of a [`GroupElement`]; the matrix,
//! its inverse and inverse transpose are caches derived from them.

use crate::error::{Error, Result};
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::sync::Arc;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GroupKind {
    Similitude,
    Diagonal,
    Shearlet,
    Custom,
}

/// Connected component of the shearlet group.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Component {
    Plus,
    Minus,
}

impl Component {
    pub fn sign(self) -> f64 {
        match self {
            Component::Plus => 1.0,
            Component::Minus => -1.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DilationGroupSpec {
    pub kind: GroupKind,
    pub dimension: usize,
    #[serde(default)]
    pub anisotropy: Vec<f64>,
    /// Restricts shearlet sampling to one component; both when absent.
    #[serde(default)]
    pub component: Option<Component>,
}

impl DilationGroupSpec {
    pub fn similitude(d: usize) -> Self {
        Self { kind: GroupKind::Similitude, dimension: d, anisotropy: vec![], component: None }
    }
    pub fn diagonal(d: usize) -> Self {
        Self { kind: GroupKind::Diagonal, dimension: d, anisotropy: vec![], component: None }
    }
    pub fn shearlet(anisotropy: Vec<f64>) -> Self {
        Self { kind: GroupKind::Shearlet, dimension: anisotropy.len() + 1, anisotropy, component: None }
    }

    /// True when every shearlet exponent lies in (0, 1).
    pub fn anisotropy_in_unit_interval(&self) -> bool {
        self.anisotropy.iter().all(|c| *c > 0.0 && *c < 1.0)
    }
}

/// User-supplied chart for a custom dilation group. The library checks the
/// declared Haar density with the invariance oracle; it does not derive it.
pub trait CustomChart: Send + Sync + fmt::Debug {
    fn dimension(&self) -> usize;
    fn matrix(&self, p: &[f64]) -> DMatrix<f64>;
    fn haar_density(&self, p: &[f64]) -> f64;
    fn compose(&self, p: &[f64], q: &[f64]) -> Vec<f64>;
    fn inverse(&self, p: &[f64]) -> Vec<f64>;
    fn identity(&self) -> Vec<f64>;
    fn in_domain(&self, p: &[f64]) -> bool;
    fn in_orbit(&self, xi: &[f64]) -> bool;
    fn base_point(&self) -> Vec<f64>;
    fn contains_positive_scalar_dilations(&self) -> bool {
        false
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum OrbitPredicate {
    /// ξ ≠ 0
    NonZero,
    /// every ξ_i ≠ 0
    AllNonZero,
    /// ξ_1 ≠ 0
    FirstNonZero,
    Custom,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrbitDescriptor {
    pub kind: GroupKind,
    pub predicate: OrbitPredicate,
    pub base_point: Vec<f64>,
}

/// Chart coordinates of a group element.
#[derive(Clone, Debug, PartialEq)]
pub enum Params {
    Similitude { scale: f64, rotation: DMatrix<f64> },
    Diagonal { entries: Vec<f64> },
    Shearlet { sign: f64, scale: f64, shear: Vec<f64> },
    Custom(Vec<f64>),
}

#[derive(Clone, Debug)]
pub struct GroupElement {
    pub params: Params,
    pub matrix: DMatrix<f64>,
    pub inv_matrix: DMatrix<f64>,
    pub inv_transpose: DMatrix<f64>,
    pub op_norm: f64,
    pub inv_op_norm: f64,
    pub det: f64,
    tag: u64,
}

impl GroupElement {
    pub fn dimension(&self) -> usize {
        self.matrix.nrows()
    }

    /// h^T ξ
    pub fn dual_apply(&self, xi: &[f64]) -> Vec<f64> {
        mul_transpose(&self.matrix, xi)
    }

    /// h^{-T} ξ
    pub fn inv_transpose_apply(&self, xi: &[f64]) -> Vec<f64> {
        mul(&self.inv_transpose, xi)
    }

    /// h^{-1} z
    pub fn inv_apply(&self, z: &[f64]) -> Vec<f64> {
        mul(&self.inv_matrix, z)
    }
}

impl PartialEq for GroupElement {
    fn eq(&self, other: &Self) -> bool {
        self.tag == other.tag && self.params == other.params
    }
}

pub(crate) fn mul(m: &DMatrix<f64>, v: &[f64]) -> Vec<f64> {
    let d = m.nrows();
    (0..d).map(|i| (0..d).map(|j| m[(i, j)] * v[j]).sum()).collect()
}

pub(crate) fn mul_transpose(m: &DMatrix<f64>, v: &[f64]) -> Vec<f64> {
    let d = m.nrows();
    (0..d).map(|i| (0..d).map(|j| m[(j, i)] * v[j]).sum()).collect()
}

pub(crate) fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Largest singular value.
pub fn spectral_norm(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 2 && m.ncols() == 2 {
        // half-sum of the conformal and anticonformal parts; no cancellation
        let (a, b, c, d) = (m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)]);
        return ((a + d).hypot(c - b) + (a - d).hypot(b + c)) / 2.0;
    }
    m.clone().svd(false, false).singular_values.max()
}

/// A dilation group with its orbit descriptor. Immutable once built.
#[derive(Clone, Debug)]
pub struct DilationGroup {
    spec: DilationGroupSpec,
    custom: Option<Arc<dyn CustomChart>>,
    orbit: OrbitDescriptor,
    tag: u64,
}

fn spec_tag(spec: &DilationGroupSpec) -> u64 {
    use std::hash::{Hash, Hasher};
    let mut h = std::collections::hash_map::DefaultHasher::new();
    spec.kind.hash(&mut h);
    spec.dimension.hash(&mut h);
    for c in &spec.anisotropy {
        c.to_bits().hash(&mut h);
    }
    h.finish()
}

impl DilationGroup {
    pub fn build(spec: DilationGroupSpec) -> Result<Self> {
        let d = spec.dimension;
        if d < 2 {
            return Err(Error::Dimension(d));
        }
        let (predicate, base_point) = match spec.kind {
            GroupKind::Similitude => {
                if !spec.anisotropy.is_empty() {
                    return Err(Error::AnisotropyLength { expected: 0, got: spec.anisotropy.len() });
                }
                (OrbitPredicate::NonZero, unit(d, 0))
            }
            GroupKind::Diagonal => {
                if !spec.anisotropy.is_empty() {
                    return Err(Error::AnisotropyLength { expected: 0, got: spec.anisotropy.len() });
                }
                (OrbitPredicate::AllNonZero, vec![1.0 / (d as f64).sqrt(); d])
            }
            GroupKind::Shearlet => {
                if spec.anisotropy.len() != d - 1 {
                    return Err(Error::AnisotropyLength { expected: d - 1, got: spec.anisotropy.len() });
                }
                if spec.anisotropy.iter().any(|c| !c.is_finite()) {
                    return Err(Error::Parameter("anisotropy exponents must be finite".into()));
                }
                (OrbitPredicate::FirstNonZero, unit(d, 0))
            }
            GroupKind::Custom => {
                return Err(Error::Parameter("custom groups are built from a chart".into()));
            }
        };
        let orbit = OrbitDescriptor { kind: spec.kind, predicate, base_point };
        let tag = spec_tag(&spec);
        Ok(Self { spec, custom: None, orbit, tag })
    }

    pub fn build_custom(chart: Arc<dyn CustomChart>) -> Result<Self> {
        let d = chart.dimension();
        if d < 2 {
            return Err(Error::Dimension(d));
        }
        let base_point = chart.base_point();
        if !chart.in_orbit(&base_point) {
            return Err(Error::Parameter("custom base point outside its orbit".into()));
        }
        let spec = DilationGroupSpec { kind: GroupKind::Custom, dimension: d, anisotropy: vec![], component: None };
        let tag = Arc::as_ptr(&chart) as *const () as usize as u64;
        let orbit = OrbitDescriptor { kind: GroupKind::Custom, predicate: OrbitPredicate::Custom, base_point };
        Ok(Self { spec, custom: Some(chart), orbit, tag })
    }

    pub fn spec(&self) -> &DilationGroupSpec {
        &self.spec
    }
    pub fn kind(&self) -> GroupKind {
        self.spec.kind
    }
    pub fn dimension(&self) -> usize {
        self.spec.dimension
    }
    pub fn anisotropy(&self) -> &[f64] {
        &self.spec.anisotropy
    }
    pub fn orbit(&self) -> &OrbitDescriptor {
        &self.orbit
    }
    pub fn custom_chart(&self) -> Option<&Arc<dyn CustomChart>> {
        self.custom.as_ref()
    }

    /// Builds the element for the given chart coordinates, populating all caches.
    pub fn element(&self, params: Params) -> Result<GroupElement> {
        let d = self.dimension();
        let (matrix, inv_matrix, det) = match (&params, self.kind()) {
            (Params::Similitude { scale, rotation }, GroupKind::Similitude) => {
                if !(*scale > 0.0) || !scale.is_finite() {
                    return Err(Error::Parameter(format!("similitude scale must be positive, got {scale}")));
                }
                if rotation.nrows() != d || rotation.ncols() != d {
                    return Err(Error::Parameter("rotation block has wrong shape".into()));
                }
                let dev = (rotation.transpose() * rotation - DMatrix::identity(d, d)).norm();
                if dev >= 1e-10 {
                    return Err(Error::NotOrthonormal(dev));
                }
                if rotation.determinant() < 0.0 {
                    return Err(Error::Parameter("rotation block has determinant -1".into()));
                }
                (rotation * *scale, rotation.transpose() / *scale, scale.powi(d as i32))
            }
            (Params::Diagonal { entries }, GroupKind::Diagonal) => {
                if entries.len() != d {
                    return Err(Error::Parameter("diagonal entry count mismatch".into()));
                }
                if entries.iter().any(|a| *a == 0.0 || !a.is_finite()) {
                    return Err(Error::Parameter("diagonal entries must be finite and nonzero".into()));
                }
                let m = DMatrix::from_diagonal(&DVector::from_column_slice(entries));
                let inv = DMatrix::from_diagonal(&DVector::from_iterator(d, entries.iter().map(|a| 1.0 / a)));
                (m, inv, entries.iter().product())
            }
            (Params::Shearlet { sign, scale, shear }, GroupKind::Shearlet) => {
                if !(*scale > 0.0) || !scale.is_finite() {
                    return Err(Error::Parameter(format!("shearlet scale must be positive, got {scale}")));
                }
                if *sign != 1.0 && *sign != -1.0 {
                    return Err(Error::Parameter("shearlet sign must be +1 or -1".into()));
                }
                if shear.len() != d - 1 {
                    return Err(Error::Parameter("shear vector length mismatch".into()));
                }
                let c = &self.spec.anisotropy;
                let a = *scale;
                let mut m = DMatrix::zeros(d, d);
                let mut inv = DMatrix::zeros(d, d);
                m[(0, 0)] = sign * a;
                inv[(0, 0)] = sign / a;
                for i in 1..d {
                    let ac = a.powf(c[i - 1]);
                    m[(0, i)] = sign * shear[i - 1];
                    m[(i, i)] = sign * ac;
                    inv[(0, i)] = -sign * shear[i - 1] / (a * ac);
                    inv[(i, i)] = sign / ac;
                }
                let sum_c: f64 = c.iter().sum();
                (m, inv, sign.powi(d as i32) * a.powf(1.0 + sum_c))
            }
            (Params::Custom(p), GroupKind::Custom) => {
                let chart = self.custom.as_ref().expect("custom group without chart");
                if !chart.in_domain(p) {
                    return Err(Error::Parameter("custom chart coordinates outside domain".into()));
                }
                let m = chart.matrix(p);
                let det = m.determinant();
                let inv = m.clone().try_inverse().ok_or_else(|| Error::Parameter("singular custom matrix".into()))?;
                (m, inv, det)
            }
            _ => return Err(Error::GroupMismatch),
        };
        let inv_transpose = inv_matrix.transpose();
        let op_norm = spectral_norm(&matrix);
        let inv_op_norm = spectral_norm(&inv_matrix);
        Ok(GroupElement { params, matrix, inv_matrix, inv_transpose, op_norm, inv_op_norm, det, tag: self.tag })
    }

    pub fn similitude(&self, scale: f64, rotation: DMatrix<f64>) -> Result<GroupElement> {
        self.element(Params::Similitude { scale, rotation })
    }

    /// Angle chart of the d = 2 similitude group.
    pub fn similitude_angle(&self, scale: f64, theta: f64) -> Result<GroupElement> {
        if self.dimension() != 2 {
            return Err(Error::Parameter("angle chart requires d = 2".into()));
        }
        self.similitude(scale, rotation_2d(theta))
    }

    pub fn diagonal(&self, entries: Vec<f64>) -> Result<GroupElement> {
        self.element(Params::Diagonal { entries })
    }

    pub fn shearlet(&self, sign: f64, scale: f64, shear: Vec<f64>) -> Result<GroupElement> {
        self.element(Params::Shearlet { sign, scale, shear })
    }

    pub fn identity(&self) -> GroupElement {
        let d = self.dimension();
        let p = match self.kind() {
            GroupKind::Similitude => Params::Similitude { scale: 1.0, rotation: DMatrix::identity(d, d) },
            GroupKind::Diagonal => Params::Diagonal { entries: vec![1.0; d] },
            GroupKind::Shearlet => Params::Shearlet { sign: 1.0, scale: 1.0, shear: vec![0.0; d - 1] },
            GroupKind::Custom => Params::Custom(self.custom.as_ref().unwrap().identity()),
        };
        self.element(p).expect("identity is valid")
    }

    fn check(&self, h: &GroupElement) -> Result<()> {
        if h.tag != self.tag {
            return Err(Error::GroupMismatch);
        }
        Ok(())
    }

    /// Product g·h computed in chart coordinates.
    pub fn compose(&self, g: &GroupElement, h: &GroupElement) -> Result<GroupElement> {
        self.check(g)?;
        self.check(h)?;
        let p = match (&g.params, &h.params) {
            (Params::Similitude { scale: a, rotation: r }, Params::Similitude { scale: b, rotation: s }) => {
                Params::Similitude { scale: a * b, rotation: reorthonormalize(&(r * s)) }
            }
            (Params::Diagonal { entries: a }, Params::Diagonal { entries: b }) => {
                Params::Diagonal { entries: a.iter().zip(b).map(|(x, y)| x * y).collect() }
            }
            (Params::Shearlet { sign: s, scale: a, shear: b }, Params::Shearlet { sign: t, scale: a2, shear: b2 }) => {
                let c = &self.spec.anisotropy;
                let shear = (0..b.len()).map(|i| a * b2[i] + b[i] * a2.powf(c[i])).collect();
                Params::Shearlet { sign: s * t, scale: a * a2, shear }
            }
            (Params::Custom(p), Params::Custom(q)) => Params::Custom(self.custom.as_ref().unwrap().compose(p, q)),
            _ => return Err(Error::GroupMismatch),
        };
        self.element(p)
    }

    pub fn inverse(&self, h: &GroupElement) -> Result<GroupElement> {
        self.check(h)?;
        let p = match &h.params {
            Params::Similitude { scale, rotation } => Params::Similitude { scale: 1.0 / scale, rotation: rotation.transpose() },
            Params::Diagonal { entries } => Params::Diagonal { entries: entries.iter().map(|a| 1.0 / a).collect() },
            Params::Shearlet { sign, scale, shear } => {
                let c = &self.spec.anisotropy;
                let shear = shear.iter().zip(c).map(|(b, ci)| -b * scale.powf(-1.0 - ci)).collect();
                Params::Shearlet { sign: *sign, scale: 1.0 / scale, shear }
            }
            Params::Custom(p) => Params::Custom(self.custom.as_ref().unwrap().inverse(p)),
        };
        self.element(p)
    }

    /// Spectral norm of h.
    pub fn operator_norm(&self, h: &GroupElement) -> f64 {
        h.op_norm
    }

    /// Left Haar density with respect to the chart's Lebesgue measure. For the
    /// similitude group the rotation factor carries the Haar probability
    /// measure of SO(d), so the density is with respect to da × dϑ.
    pub fn left_haar_density(&self, params: &Params) -> f64 {
        match params {
            Params::Similitude { scale, .. } => 1.0 / scale,
            Params::Diagonal { entries } => entries.iter().map(|a| 1.0 / a.abs()).product(),
            Params::Shearlet { scale, .. } => scale.powi(-(self.dimension() as i32)),
            Params::Custom(p) => self.custom.as_ref().unwrap().haar_density(p),
        }
    }

    /// True iff α·id ∈ H for some α > 0, α ≠ 1.
    pub fn contains_positive_scalar_dilations(&self) -> bool {
        match self.kind() {
            GroupKind::Similitude | GroupKind::Diagonal => true,
            GroupKind::Shearlet => self.spec.anisotropy.iter().all(|c| *c == 1.0),
            GroupKind::Custom => self.custom.as_ref().unwrap().contains_positive_scalar_dilations(),
        }
    }

    /// The element α·id when the group contains it.
    pub fn scalar(&self, alpha: f64) -> Option<GroupElement> {
        if !(alpha > 0.0) || !self.contains_positive_scalar_dilations() {
            return None;
        }
        let d = self.dimension();
        let p = match self.kind() {
            GroupKind::Similitude => Params::Similitude { scale: alpha, rotation: DMatrix::identity(d, d) },
            GroupKind::Diagonal => Params::Diagonal { entries: vec![alpha; d] },
            GroupKind::Shearlet => Params::Shearlet { sign: 1.0, scale: alpha, shear: vec![0.0; d - 1] },
            GroupKind::Custom => return None,
        };
        self.element(p).ok()
    }

    pub fn in_open_orbit(&self, xi: &[f64]) -> bool {
        if xi.len() != self.dimension() || xi.iter().all(|x| *x == 0.0) {
            return false;
        }
        match self.orbit.predicate {
            OrbitPredicate::NonZero => true,
            OrbitPredicate::AllNonZero => xi.iter().all(|x| *x != 0.0),
            OrbitPredicate::FirstNonZero => xi[0] != 0.0,
            OrbitPredicate::Custom => self.custom.as_ref().unwrap().in_orbit(xi),
        }
    }

    /// Some h with h^T p = target; both must lie in the open orbit. For the
    /// similitude group in d ≥ 3 the stabilizer freedom is fixed to the
    /// rotation acting in the plane of the two directions.
    pub fn solve_dual(&self, p: &[f64], target: &[f64]) -> Result<GroupElement> {
        if !self.in_open_orbit(p) {
            return Err(Error::OutsideOrbit(p.to_vec()));
        }
        if !self.in_open_orbit(target) {
            return Err(Error::OutsideOrbit(target.to_vec()));
        }
        match self.kind() {
            GroupKind::Similitude => {
                let (np, nt) = (norm(p), norm(target));
                let pu: Vec<f64> = p.iter().map(|x| x / np).collect();
                let tu: Vec<f64> = target.iter().map(|x| x / nt).collect();
                self.similitude(nt / np, rotation_taking(&tu, &pu))
            }
            GroupKind::Diagonal => self.diagonal(p.iter().zip(target).map(|(a, b)| b / a).collect()),
            GroupKind::Shearlet => {
                let sign = (target[0] / p[0]).signum();
                let a = target[0] / (sign * p[0]);
                let c = &self.spec.anisotropy;
                let shear = (1..p.len()).map(|i| (target[i] / sign - a.powf(c[i - 1]) * p[i]) / p[0]).collect();
                self.shearlet(sign, a, shear)
            }
            GroupKind::Custom => Err(Error::Parameter("dual solve needs a built-in group".into())),
        }
    }

    /// Like [`solve_dual`](Self::solve_dual) but with a Haar-random stabilizer
    /// rotation for the similitude group in d ≥ 3.
    pub fn solve_dual_random<R: Rng + ?Sized>(&self, p: &[f64], target: &[f64], rng: &mut R) -> Result<GroupElement> {
        let h = self.solve_dual(p, target)?;
        if self.kind() != GroupKind::Similitude || self.dimension() < 3 {
            return Ok(h);
        }
        let d = self.dimension();
        let nt = norm(target);
        let tu: Vec<f64> = target.iter().map(|x| x / nt).collect();
        let frame = rotation_taking(&unit(d, 0), &tu);
        let q = haar_rotation(d - 1, rng);
        let mut block = DMatrix::identity(d, d);
        block.view_mut((1, 1), (d - 1, d - 1)).copy_from(&q);
        let stab = &frame * block * frame.transpose();
        match &h.params {
            Params::Similitude { scale, rotation } => self.similitude(*scale, reorthonormalize(&(rotation * stab))),
            _ => unreachable!(),
        }
    }
}

/// Flat chart vector for groups with a Euclidean chart: (a, θ) for the d = 2
/// similitude group, (a_1, …, a_d) for the diagonal group and (a, b) for the
/// + component of the shearlet group.
pub fn chart_vector(h: &GroupElement) -> Option<Vec<f64>> {
    match &h.params {
        Params::Similitude { scale, rotation } if rotation.nrows() == 2 => {
            Some(vec![*scale, rotation[(1, 0)].atan2(rotation[(0, 0)])])
        }
        Params::Diagonal { entries } => Some(entries.clone()),
        Params::Shearlet { sign, scale, shear } if *sign > 0.0 => {
            let mut v = vec![*scale];
            v.extend_from_slice(shear);
            Some(v)
        }
        Params::Custom(p) => Some(p.clone()),
        _ => None,
    }
}

impl DilationGroup {
    pub fn from_chart_vector(&self, v: &[f64]) -> Result<GroupElement> {
        let expected = match self.kind() {
            GroupKind::Similitude => 2,
            GroupKind::Custom => v.len(),
            _ => self.dimension(),
        };
        if v.len() != expected {
            return Err(Error::Parameter(format!("chart vector has length {}, expected {expected}", v.len())));
        }
        match self.kind() {
            GroupKind::Similitude if self.dimension() == 2 => self.similitude_angle(v[0], v[1]),
            GroupKind::Diagonal => self.diagonal(v.to_vec()),
            GroupKind::Shearlet => self.shearlet(1.0, v[0], v[1..].to_vec()),
            GroupKind::Custom => self.element(Params::Custom(v.to_vec())),
            _ => Err(Error::Parameter("group has no flat chart".into())),
        }
    }

    /// Haar density with respect to Lebesgue measure on the flat chart vector.
    pub fn chart_vector_density(&self, v: &[f64]) -> Result<f64> {
        let h = self.from_chart_vector(v)?;
        let rho = self.left_haar_density(&h.params);
        Ok(match self.kind() {
            GroupKind::Similitude => rho / (2.0 * std::f64::consts::PI),
            _ => rho,
        })
    }
}

/// Haar measures of a chart box S and of its left translate g₀·S.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct InvarianceCheck {
    pub measure: crate::stats::Estimate,
    pub translated: crate::stats::Estimate,
}

impl InvarianceCheck {
    pub fn within_sigma(&self, k: f64) -> bool {
        self.measure.agrees_with(&self.translated, k)
    }
}

/// Left-invariance oracle: Monte-Carlo estimates of μ(S) and μ(g₀·S) for the
/// chart box S = [lo, hi], using the declared Haar density.
pub fn haar_invariance_check(group: &DilationGroup, lo: &[f64], hi: &[f64], g0: &GroupElement, samples: usize, seed: u64) -> Result<InvarianceCheck> {
    let k = lo.len();
    let mut rng = crate::rng::substream(seed, 0);
    let in_box = |v: &[f64]| v.iter().enumerate().all(|(i, x)| *x > lo[i] && *x < hi[i]);
    let angular = group.kind() == GroupKind::Similitude;
    let unwrap = |mut v: Vec<f64>, centre: f64| {
        if angular {
            let tau = 2.0 * std::f64::consts::PI;
            v[1] -= ((v[1] - centre) / tau).round() * tau;
        }
        v
    };
    let vol = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| y - x).product::<f64>();
    let uniform = |rng: &mut rand_chacha::ChaCha8Rng, a: &[f64], b: &[f64]| -> Vec<f64> { (0..a.len()).map(|i| rng.random_range(a[i]..b[i])).collect() };

    let mut terms = Vec::with_capacity(samples);
    for _ in 0..samples {
        let v = uniform(&mut rng, lo, hi);
        terms.push(group.chart_vector_density(&v)? * vol(lo, hi));
    }
    let measure = crate::stats::mc_estimate(&terms);

    // bounding box of g0·S from a boundary lattice
    let steps = 9usize;
    let mut blo = vec![f64::INFINITY; k];
    let mut bhi = vec![f64::NEG_INFINITY; k];
    let centre_angle = if angular { chart_vector(g0).map(|v| v[1]).unwrap_or(0.0) + 0.5 * (lo[1] + hi[1]) } else { 0.0 };
    for idx in 0..steps.pow(k as u32) {
        let mut r = idx;
        let v: Vec<f64> = (0..k)
            .map(|i| {
                let t = (r % steps) as f64 / (steps - 1) as f64;
                r /= steps;
                lo[i] + t * (hi[i] - lo[i])
            })
            .collect();
        let h = group.from_chart_vector(&v)?;
        let w = unwrap(chart_vector(&group.compose(g0, &h)?).unwrap(), centre_angle);
        for i in 0..k {
            blo[i] = blo[i].min(w[i]);
            bhi[i] = bhi[i].max(w[i]);
        }
    }
    for i in 0..k {
        let pad = 0.05 * (bhi[i] - blo[i]);
        blo[i] -= pad;
        bhi[i] += pad;
        if i == 0 && group.kind() != GroupKind::Diagonal {
            blo[0] = blo[0].max(1e-300);
        }
    }
    let g0inv = group.inverse(g0)?;
    let centre_s = 0.5 * (lo.get(1).copied().unwrap_or(0.0) + hi.get(1).copied().unwrap_or(0.0));
    let mut terms = Vec::with_capacity(samples);
    for _ in 0..samples {
        let v = uniform(&mut rng, &blo, &bhi);
        let h = match group.from_chart_vector(&v) {
            Ok(h) => h,
            Err(_) => {
                terms.push(0.0);
                continue;
            }
        };
        let back = unwrap(chart_vector(&group.compose(&g0inv, &h)?).unwrap(), centre_s);
        let t = if in_box(&back) { group.chart_vector_density(&v)? * vol(&blo, &bhi) } else { 0.0 };
        terms.push(t);
    }
    let translated = crate::stats::mc_estimate(&terms);
    Ok(InvarianceCheck { measure, translated })
}

pub(crate) fn unit(d: usize, k: usize) -> Vec<f64> {
    let mut v = vec![0.0; d];
    v[k] = 1.0;
    v
}

pub fn rotation_2d(theta: f64) -> DMatrix<f64> {
    let (s, c) = theta.sin_cos();
    DMatrix::from_row_slice(2, 2, &[c, -s, s, c])
}

/// Rotation R ∈ SO(d) with R u = v for unit vectors u, v, acting in their span.
pub fn rotation_taking(u: &[f64], v: &[f64]) -> DMatrix<f64> {
    let d = u.len();
    let uu = DVector::from_column_slice(u);
    let vv = DVector::from_column_slice(v);
    let c = uu.dot(&vv);
    if c < -1.0 + 1e-12 {
        // half turn in a plane containing u
        let k = (0..d).min_by(|&i, &j| u[i].abs().total_cmp(&u[j].abs())).unwrap();
        let mut w = DVector::from_column_slice(&unit(d, k));
        w -= &uu * uu.dot(&w);
        w /= w.norm();
        return DMatrix::identity(d, d) - 2.0 * &uu * uu.transpose() - 2.0 * &w * w.transpose();
    }
    let k = &vv * uu.transpose() - &uu * vv.transpose();
    let r = DMatrix::identity(d, d) + &k + &k * &k / (1.0 + c);
    reorthonormalize(&r)
}

/// Haar-distributed rotation via QR of a standard normal matrix with the
/// diagonal of R made positive and the determinant fixed to +1.
pub fn haar_rotation<R: Rng + ?Sized>(d: usize, rng: &mut R) -> DMatrix<f64> {
    let g = DMatrix::from_fn(d, d, |_, _| rng.sample::<f64, _>(StandardNormal));
    let qr = g.qr();
    let (mut q, r) = qr.unpack();
    for j in 0..d {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    if q.determinant() < 0.0 {
        q.column_mut(0).neg_mut();
    }
    q
}

/// Projects a nearly orthogonal matrix back onto O(d) (one Newton-Schulz step).
fn reorthonormalize(m: &DMatrix<f64>) -> DMatrix<f64> {
    let d = m.nrows();
    let mtm = m.transpose() * m;
    m * (3.0 * DMatrix::identity(d, d) - mtm) * 0.5
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::substream;
    use proptest::prelude::*;

    fn close(a: &DMatrix<f64>, b: &DMatrix<f64>, tol: f64) -> bool {
        (a - b).norm() <= tol * (1.0 + b.norm())
    }

    #[test]
    fn orbit_descriptors() {
        let s = DilationGroup::build(DilationGroupSpec::similitude(2)).unwrap();
        assert_eq!(s.orbit().base_point, vec![1.0, 0.0]);
        let g = DilationGroup::build(DilationGroupSpec::diagonal(3)).unwrap();
        let r = 1.0 / 3f64.sqrt();
        assert_eq!(g.orbit().base_point, vec![r, r, r]);
        let sh = DilationGroup::build(DilationGroupSpec::shearlet(vec![0.5])).unwrap();
        assert_eq!(sh.orbit().base_point, vec![1.0, 0.0]);
        assert!(!sh.in_open_orbit(&[0.0, 1.0]));
        assert!(!s.in_open_orbit(&[0.0, 0.0]));
        assert!(DilationGroup::build(DilationGroupSpec::diagonal(2)).unwrap().in_open_orbit(&[1.0, -1.0]));
    }

    #[test]
    fn build_errors() {
        assert_eq!(DilationGroup::build(DilationGroupSpec::similitude(1)).unwrap_err(), Error::Dimension(1));
        let mut spec = DilationGroupSpec::shearlet(vec![0.5]);
        spec.dimension = 3;
        assert!(matches!(DilationGroup::build(spec), Err(Error::AnisotropyLength { expected: 2, got: 1 })));
    }

    #[test]
    fn shearlet_matrix_and_inverse_transpose() {
        let g = DilationGroup::build(DilationGroupSpec::shearlet(vec![0.5])).unwrap();
        let h = g.shearlet(1.0, 2.0, vec![3.0]).unwrap();
        assert!(close(&h.matrix, &DMatrix::from_row_slice(2, 2, &[2.0, 3.0, 0.0, 2f64.sqrt()]), 1e-15));
        let h = g.shearlet(1.0, 4.0, vec![8.0]).unwrap();
        assert!(close(&h.inv_transpose, &DMatrix::from_row_slice(2, 2, &[0.25, 0.0, -1.0, 0.5]), 1e-15));
        assert!((h.det - 4f64.powf(1.5)).abs() < 1e-12);
    }

    #[test]
    fn simple_matrices() {
        let s = DilationGroup::build(DilationGroupSpec::similitude(3)).unwrap();
        let id = s.similitude(1.0, DMatrix::identity(3, 3)).unwrap();
        assert!(close(&id.matrix, &DMatrix::identity(3, 3), 0.0));
        let dg = DilationGroup::build(DilationGroupSpec::diagonal(3)).unwrap();
        let h = dg.diagonal(vec![1.0, -2.0, 3.0]).unwrap();
        assert_eq!(h.matrix, DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, -2.0, 3.0])));
        let d2 = DilationGroup::build(DilationGroupSpec::diagonal(2)).unwrap();
        assert!((d2.diagonal(vec![2.0, 0.5]).unwrap().op_norm - 2.0).abs() < 1e-15);
        let s2 = DilationGroup::build(DilationGroupSpec::similitude(2)).unwrap();
        let r = s2.similitude_angle(1.0, 0.7).unwrap();
        assert!(close(&r.inv_transpose, &r.matrix, 1e-15));
    }

    #[test]
    fn parameter_errors() {
        let s = DilationGroup::build(DilationGroupSpec::similitude(2)).unwrap();
        assert!(s.similitude_angle(-1.0, 0.0).is_err());
        let bad = DMatrix::from_row_slice(2, 2, &[1.0, 0.1, 0.0, 1.0]);
        assert!(matches!(s.similitude(1.0, bad), Err(Error::NotOrthonormal(_))));
        let sh = DilationGroup::build(DilationGroupSpec::shearlet(vec![0.5])).unwrap();
        assert!(sh.shearlet(1.0, 0.0, vec![0.0]).is_err());
        let dg = DilationGroup::build(DilationGroupSpec::diagonal(2)).unwrap();
        assert!(dg.diagonal(vec![0.0, 1.0]).is_err());
        assert_eq!(dg.compose(&dg.identity(), &sh.identity()).unwrap_err(), Error::GroupMismatch);
    }

    #[test]
    fn scalar_dilations() {
        assert!(DilationGroup::build(DilationGroupSpec::similitude(2)).unwrap().contains_positive_scalar_dilations());
        assert!(DilationGroup::build(DilationGroupSpec::diagonal(4)).unwrap().contains_positive_scalar_dilations());
        assert!(!DilationGroup::build(DilationGroupSpec::shearlet(vec![0.5, 0.3])).unwrap().contains_positive_scalar_dilations());
    }

    #[test]
    fn shearlet_composition_closed_form() {
        let g = DilationGroup::build(DilationGroupSpec::shearlet(vec![0.5, 0.25])).unwrap();
        let h1 = g.shearlet(1.0, 1.7, vec![0.3, -2.0]).unwrap();
        let h2 = g.shearlet(-1.0, 0.4, vec![1.1, 0.6]).unwrap();
        let p = g.compose(&h1, &h2).unwrap();
        assert!(close(&p.matrix, &(&h1.matrix * &h2.matrix), 1e-14));
        let e = g.compose(&h1, &g.inverse(&h1).unwrap()).unwrap();
        assert!(close(&e.matrix, &DMatrix::identity(3, 3), 1e-14));
    }

    #[test]
    fn haar_rotations_are_special_orthogonal() {
        let mut rng = substream(7, 0);
        for d in 2..6 {
            let q = haar_rotation(d, &mut rng);
            assert!((q.transpose() * &q - DMatrix::identity(d, d)).norm() < 1e-12);
            assert!((q.determinant() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn haar_rotation_first_column_is_uniform() {
        // mean of the first column of a Haar rotation vanishes and E[q_00^2] = 1/d
        let mut rng = substream(11, 0);
        let n = 20000;
        let d = 3;
        let (mut m, mut s) = (0.0, 0.0);
        for _ in 0..n {
            let q = haar_rotation(d, &mut rng);
            m += q[(0, 0)];
            s += q[(0, 0)] * q[(0, 0)];
        }
        assert!((m / n as f64).abs() < 0.02);
        assert!((s / n as f64 - 1.0 / 3.0).abs() < 0.01);
    }

    #[test]
    fn dual_solve_hits_target() {
        let mut rng = substream(3, 1);
        for spec in [DilationGroupSpec::similitude(3), DilationGroupSpec::diagonal(3), DilationGroupSpec::shearlet(vec![0.5, 0.7])] {
            let g = DilationGroup::build(spec).unwrap();
            let p = [0.8, -0.4, 1.3];
            let t = [-1.5, 0.2, 0.9];
            let h = g.solve_dual_random(&p, &t, &mut rng).unwrap();
            let r = h.dual_apply(&p);
            for k in 0..3 {
                assert!((r[k] - t[k]).abs() < 1e-12, "{:?}", g.kind());
            }
        }
    }

    fn arb_element(kind: usize) -> impl Strategy<Value = (usize, Vec<f64>)> {
        (Just(kind), prop::collection::vec(-2.0f64..2.0, 4))
    }

    fn make(kind: usize, v: &[f64]) -> (DilationGroup, GroupElement) {
        match kind {
            0 => {
                let g = DilationGroup::build(DilationGroupSpec::similitude(2)).unwrap();
                let h = g.similitude_angle(v[0].exp(), v[1] * 3.0).unwrap();
                (g, h)
            }
            1 => {
                let g = DilationGroup::build(DilationGroupSpec::diagonal(2)).unwrap();
                let h = g.diagonal(vec![v[0].exp() * v[2].signum(), v[1].exp()]).unwrap();
                (g, h)
            }
            _ => {
                let g = DilationGroup::build(DilationGroupSpec::shearlet(vec![0.5])).unwrap();
                let h = g.shearlet(if v[3] < 0.0 { -1.0 } else { 1.0 }, v[0].exp(), vec![v[1] * 3.0]).unwrap();
                (g, h)
            }
        }
    }

    proptest! {
        #[test]
        fn group_axioms(k in 0usize..3, a in arb_element(0), b in arb_element(0), c in arb_element(0)) {
            let (g, x) = make(k, &a.1);
            let (_, y) = make(k, &b.1);
            let (_, z) = make(k, &c.1);
            let y = g.element(y.params.clone()).unwrap();
            let z = g.element(z.params.clone()).unwrap();
            let l = g.compose(&g.compose(&x, &y).unwrap(), &z).unwrap();
            let r = g.compose(&x, &g.compose(&y, &z).unwrap()).unwrap();
            prop_assert!(close(&l.matrix, &r.matrix, 1e-10));
            let e = g.compose(&x, &g.inverse(&x).unwrap()).unwrap();
            prop_assert!(close(&e.matrix, &DMatrix::identity(2, 2), 1e-10));
            prop_assert!(close(&(&x.matrix * &x.inv_matrix), &DMatrix::identity(2, 2), 1e-12));
            prop_assert_eq!(x.inv_transpose.clone(), x.inv_matrix.transpose());
            prop_assert!(x.op_norm * x.inv_op_norm >= 1.0 - 1e-12);
        }

        #[test]
        fn two_by_two_norm_matches_svd(e in prop::array::uniform4(-50.0f64..50.0)) {
            let m = DMatrix::from_row_slice(2, 2, &e);
            let svd = m.clone().svd(false, false).singular_values.max();
            prop_assert!((spectral_norm(&m) - svd).abs() <= 1e-12 * svd.max(1e-300));
        }

        #[test]
        fn conformal_norm_product_is_one(r in -20.0f64..20.0, t in -4.0f64..4.0) {
            let (s, c) = t.sin_cos();
            let a = r.exp();
            let m = DMatrix::from_row_slice(2, 2, &[a * c, -a * s, a * s, a * c]);
            let inv = m.clone().try_inverse().unwrap();
            prop_assert!((spectral_norm(&m) * spectral_norm(&inv) - 1.0).abs() <= 1e-14);
        }

        #[test]
        fn shearlet_closed_form_inverse_transpose(a in -4.0f64..4.0, b in -5.0f64..5.0, c in 0.05f64..0.95) {
            let g = DilationGroup::build(DilationGroupSpec::shearlet(vec![c])).unwrap();
            let h = g.shearlet(1.0, a.exp(), vec![b]).unwrap();
            let numeric = h.matrix.clone().try_inverse().unwrap().transpose();
            prop_assert!(close(&h.inv_transpose, &numeric, 1e-12));
            prop_assert!((h.det - a.exp().powf(1.0 + c)).abs() <= 1e-12 * h.det.abs());
        }
    }
}
