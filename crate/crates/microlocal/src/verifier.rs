//! Numerical audits of the structural conditions behind wavefront detection:
//! norm envelopes on K_i/K_o, norm-power integrability, cone approximation
//! with dyadic witness search, the geometric cone-set cross-check, the
//! scalar-dilation gate and stay measures.
//!
//! Nothing here is a proof. Envelopes are exact over the drawn samples,
//! integrability is budget stability, and inclusions are sampled.

use crate::error::{Error, Result};
use crate::geometry::{axis_band_ratio, k_i_contains, k_o_contains, patch_cone_contains, DirectionPatch, FrequencyWindow, WindowShape};
use crate::group::{chart_vector, norm, DilationGroup, GroupElement, GroupKind};
use crate::rng::substream;
use crate::sampling::{c_set_contains, CSetMode, KoSampler, SamplerSettings, WeightedElement};
use crate::stats::{fit_line, Estimate};
use crate::wavelet::StayChart;
use nalgebra::DMatrix;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect()).collect()
}

fn unit_vector(v: &[f64]) -> Result<Vec<f64>> {
    let n = norm(v);
    if !(n > 0.0) || !n.is_finite() {
        return Err(Error::InvalidArgument("direction must be a nonzero finite vector".into()));
    }
    Ok(v.iter().map(|x| x / n).collect())
}

/// Fitted norm envelope ‖h^{-1}‖ ≤ C‖h‖^{-alpha1} over sampled dilations.
#[derive(Clone, Debug, Serialize)]
pub struct MicrolocalFit {
    pub patch: DirectionPatch,
    pub window: FrequencyWindow,
    pub radius: f64,
    /// Samples were drawn from K_i rather than K_o.
    pub inner_set: bool,
    /// Minus the slope of log‖h^{-1}‖ against log‖h‖.
    pub alpha1: f64,
    pub intercept: f64,
    /// max over samples of ‖h^{-1}‖·‖h‖^{alpha1}.
    pub envelope: f64,
    pub alpha2: Option<f64>,
    pub integral: Option<Estimate>,
    pub sample_count: usize,
    pub seed: u64,
}

impl MicrolocalFit {
    pub fn succeeded(&self) -> bool {
        self.alpha1 > 0.0 && self.envelope > 0.0 && self.envelope.is_finite()
    }

    /// Envelope violations at `factor`·C on a fresh batch drawn from the same set.
    pub fn fresh_violations(&self, group: &DilationGroup, count: usize, seed: u64, factor: f64) -> Result<usize> {
        let samples = draw(group, &self.patch, &self.window, self.radius, count, seed, self.inner_set)?;
        Ok(envelope_violations(samples.iter().map(|s| &s.element), self.alpha1, factor * self.envelope))
    }

    pub fn with_integral(mut self, integral: &PowerIntegral) -> Self {
        self.alpha2 = Some(integral.alpha2);
        self.integral = Some(integral.estimate);
        self
    }
}

fn draw(group: &DilationGroup, patch: &DirectionPatch, window: &FrequencyWindow, radius: f64, count: usize, seed: u64, inner: bool) -> Result<Vec<WeightedElement>> {
    let sampler = KoSampler::new(group, patch, window, radius, SamplerSettings::default())?;
    if inner {
        sampler.sample_inner(count, seed, patch, radius)
    } else {
        sampler.sample(count, seed)
    }
}

/// max ‖h^{-1}‖·‖h‖^{alpha1}.
pub fn envelope_constant<'a>(elements: impl IntoIterator<Item = &'a GroupElement>, alpha1: f64) -> f64 {
    elements.into_iter().map(|h| h.inv_op_norm * h.op_norm.powf(alpha1)).fold(0.0, f64::max)
}

/// Elements with ‖h^{-1}‖ > bound·‖h‖^{-alpha1}.
pub fn envelope_violations<'a>(elements: impl IntoIterator<Item = &'a GroupElement>, alpha1: f64, bound: f64) -> usize {
    elements.into_iter().filter(|h| h.inv_op_norm > bound * h.op_norm.powf(-alpha1)).count()
}

/// Regression exponent and exact envelope over `n_samples` elements of
/// K_o(W₀,V,R₀), or of K_i(W₀,V,R₀) when `use_ki` is set.
#[allow(clippy::too_many_arguments)]
pub fn fit_alpha1(
    group: &DilationGroup,
    patch: &DirectionPatch,
    window: &FrequencyWindow,
    radius: f64,
    n_samples: usize,
    use_ki: bool,
    seed: u64,
) -> Result<MicrolocalFit> {
    if n_samples == 0 {
        return Err(Error::TooFewSamples(0));
    }
    let samples = draw(group, patch, window, radius, n_samples, seed, use_ki)?;
    let x: Vec<f64> = samples.iter().map(|s| s.element.op_norm.ln()).collect();
    let y: Vec<f64> = samples.iter().map(|s| s.element.inv_op_norm.ln()).collect();
    let fit = fit_line(&x, &y).ok_or(Error::TooFewSamples(samples.len()))?;
    if !fit.slope.is_finite() {
        return Err(Error::TooFewSamples(samples.len()));
    }
    let alpha1 = -fit.slope;
    Ok(MicrolocalFit {
        patch: patch.clone(),
        window: window.clone(),
        radius,
        inner_set: use_ki,
        alpha1,
        intercept: fit.intercept,
        envelope: envelope_constant(samples.iter().map(|s| &s.element), alpha1),
        alpha2: None,
        integral: None,
        sample_count: samples.len(),
        seed,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Integrability {
    /// Estimate stable under a 4× budget within 3 standard errors.
    Stable,
    NotIntegrable,
}

#[derive(Clone, Debug, Serialize)]
pub struct PowerIntegral {
    pub alpha2: f64,
    pub estimate: Estimate,
    /// Independent estimate with four times the proposals.
    pub check: Estimate,
    pub status: Integrability,
    pub proposals: usize,
}

/// Haar integral of ‖h‖^{alpha2} over K_o(W₀,V,R₀), with the 4× budget
/// stability diagnostic.
#[allow(clippy::too_many_arguments)]
pub fn norm_power_integral(
    group: &DilationGroup,
    patch: &DirectionPatch,
    window: &FrequencyWindow,
    radius: f64,
    alpha2: f64,
    proposals: usize,
    seed: u64,
) -> Result<PowerIntegral> {
    if !(alpha2 > 0.0) || !alpha2.is_finite() {
        return Err(Error::InvalidArgument(format!("alpha2 must be positive, got {alpha2}")));
    }
    if proposals == 0 {
        return Err(Error::InvalidArgument("integral needs a positive budget".into()));
    }
    let sampler = KoSampler::new(group, patch, window, radius, SamplerSettings::default())?;
    let f = |h: &GroupElement| h.op_norm.powf(alpha2);
    let estimate = sampler.haar_integral(proposals, seed, f)?;
    let check = sampler.haar_integral(4 * proposals, seed.wrapping_add(0x9e37_79b9_7f4a_7c15), f)?;
    let finite = estimate.value.is_finite() && check.value.is_finite() && estimate.stderr.is_finite();
    let status = if finite && estimate.agrees_with(&check, 3.0) { Integrability::Stable } else { Integrability::NotIntegrable };
    Ok(PowerIntegral { alpha2, estimate, check, status, proposals })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StrongModeGate {
    Permitted,
    Impossible,
}

impl StrongModeGate {
    pub fn message(self) -> &'static str {
        match self {
            StrongModeGate::Permitted => "strong mode permitted",
            StrongModeGate::Impossible => {
                "strong cone approximation impossible; single-wavelet characterization unavailable; use weak/multi-wavelet mode"
            }
        }
    }
}

/// Groups containing positive scalar dilations cannot have the strong property.
pub fn anisotropy_gate(group: &DilationGroup) -> StrongModeGate {
    if group.contains_positive_scalar_dilations() {
        StrongModeGate::Impossible
    } else {
        StrongModeGate::Permitted
    }
}

/// Haar measure of {h : h^T ξ ∈ V} from `points` chart samples.
pub fn stay_measure(group: &DilationGroup, xi: &[f64], window: &FrequencyWindow, points: usize, seed: u64) -> Result<Estimate> {
    if points == 0 {
        return Err(Error::InvalidArgument("stay measure needs a positive budget".into()));
    }
    StayChart::new(group, xi, window)?.measure(window, points, seed)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PatchFamily {
    /// Caps B_ε(ξ) ∩ S^{d−1} around the probed direction.
    Cap,
    /// {u : |u_1 − 1| < ε}
    ShearletBand,
    /// {u : 1/(1+ε) < √d·u_i < 1+ε}
    DiagonalBand,
}

impl PatchFamily {
    pub fn patch(self, direction: &[f64], epsilon: f64) -> DirectionPatch {
        match self {
            PatchFamily::Cap => DirectionPatch::cap(direction.to_vec(), epsilon),
            PatchFamily::ShearletBand => DirectionPatch::ShearletAxisBand { epsilon },
            PatchFamily::DiagonalBand => DirectionPatch::DiagonalBand { epsilon },
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WindowFamily {
    /// B_{1/n}(e_1)
    SimilitudeBalls,
    /// {n/(n+1) < |ξ| < (n+1)/n, ξ/|ξ| ∈ U_{1/n}}
    DiagonalBands,
}

impl WindowFamily {
    pub fn window(self, n: f64, d: usize) -> Result<FrequencyWindow> {
        match self {
            WindowFamily::SimilitudeBalls => FrequencyWindow::similitude_family(n, d),
            WindowFamily::DiagonalBands => FrequencyWindow::diagonal_family(n, d),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum ConeMode {
    /// Single window V₀.
    Strong { window: FrequencyWindow },
    /// Window ladder V_n, n = 2, 4, 8, …
    Weak { family: WindowFamily },
}

/// Parameters of the dyadic witness search ε′ = ε/2^k, R′ = R·2^k, n = 2^k.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ConeSearch {
    pub family: PatchFamily,
    pub epsilon: f64,
    pub radius: f64,
    pub direction: Vec<f64>,
    /// Samples of K_o(W′,V,R′) used to confirm a witness.
    pub budget: usize,
    /// Samples per candidate before the full confirmation run.
    pub screen: usize,
    pub max_level: u32,
    pub seed: u64,
}

impl ConeSearch {
    pub fn new(family: PatchFamily, epsilon: f64, radius: f64, direction: Vec<f64>, budget: usize) -> Self {
        Self { family, epsilon, radius, direction, budget, screen: 1024, max_level: 12, seed: 0 }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Witness {
    pub epsilon_prime: f64,
    pub radius_prime: f64,
    pub n: Option<f64>,
    pub patch_prime: DirectionPatch,
    /// The closed-form sufficient inequality, when one is known for this setting.
    pub closed_form: Option<bool>,
    /// Samples of K_o(W′,V,R′), all certified members of K_i(W,V,R).
    pub confirmed_samples: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConeTest {
    Direction,
    Radius,
    DirectionAndRadius,
    /// No explicit violating ξ′ was found; K_i membership was merely not certified.
    Uncertified,
}

/// Minimal certificate h ∈ K_o(W′,V,R′) \ K_i(W,V,R).
#[derive(Clone, Debug, Serialize)]
pub struct Counterexample {
    pub matrix: Vec<Vec<f64>>,
    pub chart: Option<Vec<f64>>,
    /// α when the element is α·h_ξ.
    pub scalar: Option<f64>,
    pub base_matrix: Option<Vec<Vec<f64>>>,
    pub xi_prime: Option<Vec<f64>>,
    pub image: Option<Vec<f64>>,
    pub failed: ConeTest,
    pub patch: DirectionPatch,
    pub radius: f64,
    pub patch_prime: DirectionPatch,
    pub radius_prime: f64,
    pub epsilon_prime: f64,
    pub n: Option<f64>,
    pub window: FrequencyWindow,
    #[serde(skip)]
    element: Option<GroupElement>,
}

impl Counterexample {
    pub fn element(&self) -> Option<&GroupElement> {
        self.element.as_ref()
    }

    /// Replays the certificate: h ∈ K_o(W′,V,R′), h ∉ K_i(W,V,R), and ξ′ ∈ V
    /// with h^{-T}ξ′ outside C(W,R).
    pub fn verify(&self, group: &DilationGroup) -> Result<bool> {
        let h = match (&self.element, &self.chart) {
            (Some(h), _) => h.clone(),
            (None, Some(v)) => group.from_chart_vector(v)?,
            (None, None) => return Ok(false),
        };
        if !k_o_contains(&h, &self.patch_prime, &self.window, self.radius_prime)?.is_true() {
            return Ok(false);
        }
        if k_i_contains(&h, &self.patch, &self.window, self.radius)?.is_true() {
            return Ok(false);
        }
        let Some(xi) = &self.xi_prime else { return Ok(false) };
        if !self.window.contains(xi) {
            return Ok(false);
        }
        let image = h.inv_transpose_apply(xi);
        if patch_cone_contains(&self.patch, self.radius, &image) {
            return Ok(false);
        }
        if let (Some(alpha), Some(base)) = (self.scalar, &self.base_matrix) {
            let scaled = base.iter().flatten().zip(self.matrix.iter().flatten()).all(|(b, m)| (alpha * b - m).abs() <= 1e-12 * (1.0 + m.abs()));
            if !scaled {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

#[derive(Clone, Debug, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum ConeStatus {
    HoldsWitness(Witness),
    FailsCounterexample(Box<Counterexample>),
    BudgetExhausted,
}

#[derive(Clone, Debug, Serialize)]
pub struct ConeApproxVerdict {
    pub mode: ConeMode,
    pub search: ConeSearch,
    pub status: ConeStatus,
    pub samples_tested: usize,
    pub candidates_tried: usize,
    pub notes: Vec<String>,
}

impl ConeApproxVerdict {
    pub fn holds(&self) -> bool {
        matches!(self.status, ConeStatus::HoldsWitness(_))
    }
    pub fn witness(&self) -> Option<&Witness> {
        match &self.status {
            ConeStatus::HoldsWitness(w) => Some(w),
            _ => None,
        }
    }
    pub fn counterexample(&self) -> Option<&Counterexample> {
        match &self.status {
            ConeStatus::FailsCounterexample(c) => Some(c),
            _ => None,
        }
    }
}

/// 2√(2ε′−ε′²)/(1−ε′) + 2·4^{1−c}R′^{c−1} < √(2ε−ε²)/(1−ε), with ε′ < 1/2 and
/// R′ > max(4, 4R); c is the largest anisotropy exponent.
pub fn shearlet_strong_sufficient(epsilon: f64, radius: f64, epsilon_prime: f64, radius_prime: f64, c: f64) -> bool {
    epsilon_prime < 0.5
        && radius_prime > 4f64.max(4.0 * radius)
        && c < 1.0
        && 2.0 * axis_band_ratio(epsilon_prime)
            + 2.0 * 4f64.powf(1.0 - c) * radius_prime.powf(c - 1.0)
            < axis_band_ratio(epsilon)
}

/// ε′ < ε/2, 4/(n−1) < ε/2 and (n−1)R′/(n+1) > R.
pub fn similitude_weak_sufficient(epsilon: f64, radius: f64, epsilon_prime: f64, radius_prime: f64, n: f64) -> bool {
    n > 1.0 && epsilon_prime < epsilon / 2.0 && 4.0 / (n - 1.0) < epsilon / 2.0 && (n - 1.0) * radius_prime / (n + 1.0) > radius
}

/// (1+ε′)²((n+1)/n)⁸ < 1+ε and (n/(n+1))⁴R′ > R.
pub fn diagonal_weak_sufficient(epsilon: f64, radius: f64, epsilon_prime: f64, radius_prime: f64, n: f64) -> bool {
    (1.0 + epsilon_prime).powi(2) * ((n + 1.0) / n).powi(8) < 1.0 + epsilon && (n / (n + 1.0)).powi(4) * radius_prime > radius
}

fn closed_form(group: &DilationGroup, mode: &ConeMode, search: &ConeSearch, eps_p: f64, r_p: f64, n: Option<f64>) -> Option<bool> {
    let (eps, r) = (search.epsilon, search.radius);
    let d = group.dimension();
    match (mode, group.kind(), search.family) {
        (ConeMode::Strong { window }, GroupKind::Shearlet, PatchFamily::ShearletBand) if window.shape == WindowShape::ShearletBox => {
            let c = group.anisotropy().iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            Some(shearlet_strong_sufficient(eps, r, eps_p, r_p, c))
        }
        (ConeMode::Weak { family: WindowFamily::SimilitudeBalls }, GroupKind::Similitude, PatchFamily::Cap)
            if search.direction == crate::group::unit(d, 0) =>
        {
            Some(similitude_weak_sufficient(eps, r, eps_p, r_p, n?))
        }
        (ConeMode::Weak { family: WindowFamily::DiagonalBands }, GroupKind::Diagonal, PatchFamily::DiagonalBand) => {
            Some(diagonal_weak_sufficient(eps, r, eps_p, r_p, n?))
        }
        _ => None,
    }
}

/// Dyadic levels (k_ε, k_R, k_n) ordered by total level, then lexicographically.
fn candidate_levels(max_level: u32, weak: bool) -> Vec<(u32, u32, u32)> {
    let n_levels: Vec<u32> = if weak { (1..=max_level).collect() } else { vec![0] };
    let mut out = Vec::new();
    for ke in 0..=max_level {
        for kr in 0..=max_level {
            for &kn in &n_levels {
                out.push((ke, kr, kn));
            }
        }
    }
    out.sort_by_key(|&(a, b, c)| (a + b + c, a, b, c));
    out
}

/// A point ξ′ ∈ V with h^{-T}ξ′ ∉ C(W,R): the window center, certificate
/// points pulled slightly inward, then random interior points.
fn find_violation(h: &GroupElement, patch: &DirectionPatch, window: &FrequencyWindow, radius: f64, seed: u64) -> Option<(Vec<f64>, Vec<f64>, ConeTest)> {
    let c = window.center();
    let mut points = vec![c.clone()];
    for p in &window.certificate_points {
        let q: Vec<f64> = c.iter().zip(p).map(|(a, b)| a + 0.999 * (b - a)).collect();
        if window.contains(&q) {
            points.push(q);
        }
    }
    let mut rng = substream(seed, 0x5eed);
    points.extend((0..4096).map(|_| window.sample_interior(&mut rng)));
    for xi in points {
        if !window.contains(&xi) {
            continue;
        }
        let image = h.inv_transpose_apply(&xi);
        if patch_cone_contains(patch, radius, &image) {
            continue;
        }
        let n = norm(&image);
        let dir_ok = n > 0.0 && patch_cone_contains(patch, 0.0, &image);
        let test = match (dir_ok, n > radius) {
            (false, true) => ConeTest::Direction,
            (true, false) => ConeTest::Radius,
            _ => ConeTest::DirectionAndRadius,
        };
        return Some((xi, image, test));
    }
    None
}

struct Candidate {
    eps_p: f64,
    r_p: f64,
    n: Option<f64>,
    window: FrequencyWindow,
    patch: DirectionPatch,
    patch_prime: DirectionPatch,
}

struct Outcome {
    tested: usize,
    violations: usize,
    first: Option<GroupElement>,
}

fn test_inclusion(group: &DilationGroup, cand: &Candidate, radius: f64, count: usize, seed: u64) -> Result<Outcome> {
    let sampler = KoSampler::new(group, &cand.patch_prime, &cand.window, cand.r_p, SamplerSettings::default())?;
    let samples = sampler.sample(count, seed)?;
    let ok: Vec<Result<bool>> = samples.par_iter().map(|s| Ok(k_i_contains(&s.element, &cand.patch, &cand.window, radius)?.is_true())).collect();
    let mut violations = 0;
    let mut first = None;
    for (s, r) in samples.iter().zip(ok) {
        if !r? {
            violations += 1;
            if first.is_none() {
                first = Some(s.element.clone());
            }
        }
    }
    Ok(Outcome { tested: samples.len(), violations, first })
}

fn counterexample(h: GroupElement, cand: &Candidate, radius: f64, seed: u64) -> Counterexample {
    let found = find_violation(&h, &cand.patch, &cand.window, radius, seed);
    let (xi_prime, image, failed) = match found {
        Some((x, i, t)) => (Some(x), Some(i), t),
        None => (None, None, ConeTest::Uncertified),
    };
    Counterexample {
        matrix: rows(&h.matrix),
        chart: chart_vector(&h),
        scalar: None,
        base_matrix: None,
        xi_prime,
        image,
        failed,
        patch: cand.patch.clone(),
        radius,
        patch_prime: cand.patch_prime.clone(),
        radius_prime: cand.r_p,
        epsilon_prime: cand.eps_p,
        n: cand.n,
        window: cand.window.clone(),
        element: Some(h),
    }
}

/// Replays the scalar-dilation obstruction: with η ∈ V₀ and h_ξ^T ξ = η, the
/// element α·h_ξ, α < (1+R′)^{-1}, lies in K_o(W′,V₀,R′) for every W′ ∋ ξ but
/// maps V₀ onto a fixed angular spread around ξ, so it misses K_i(W,V₀,R)
/// once W is narrower than that spread.
fn scalar_obstruction(group: &DilationGroup, window: &FrequencyWindow, search: &ConeSearch, notes: &mut Vec<String>) -> Result<Counterexample> {
    let xi = unit_vector(&search.direction)?;
    let level = 2f64.powi(search.max_level as i32);
    let eps_p = search.epsilon / level;
    let r_p = search.radius * level;
    let eta = window.center();
    let base = group.solve_dual(&xi, &eta)?;
    let alpha = 0.5 / (1.0 + r_p);
    let scalar = group.scalar(alpha).ok_or_else(|| Error::InvalidArgument("group has no scalar dilations".into()))?;
    let h = group.compose(&scalar, &base)?;
    let mut patch = search.family.patch(&xi, search.epsilon);
    let patch_prime = search.family.patch(&xi, eps_p);
    let mut found = find_violation(&h, &patch, window, search.radius, search.seed);
    if found.is_none() {
        // W is wider than the spread of h_ξ^{-T}V₀: shrink it to B_{s/2}(ξ).
        let mut rng = substream(search.seed, 0xb0b);
        let spread = window
            .certificate_points
            .iter()
            .cloned()
            .chain((0..4096).map(|_| window.sample_interior(&mut rng)))
            .filter(|p| group.in_open_orbit(p))
            .map(|p| {
                let u = unit_vector(&base.inv_transpose_apply(&p)).unwrap_or_else(|_| xi.clone());
                norm(&u.iter().zip(&xi).map(|(a, b)| a - b).collect::<Vec<_>>())
            })
            .fold(0.0, f64::max);
        patch = DirectionPatch::cap(xi.clone(), 0.5 * spread);
        notes.push(format!("requested W is wider than the image spread; using the cap of radius {:.6} around ξ", 0.5 * spread));
        found = find_violation(&h, &patch, window, search.radius, search.seed);
    }
    let (xi_prime, image, failed) = match found {
        Some((x, i, t)) => (Some(x), Some(i), t),
        None => (None, None, ConeTest::Uncertified),
    };
    Ok(Counterexample {
        matrix: rows(&h.matrix),
        chart: chart_vector(&h),
        scalar: Some(alpha),
        base_matrix: Some(rows(&base.matrix)),
        xi_prime,
        image,
        failed,
        patch,
        radius: search.radius,
        patch_prime,
        radius_prime: r_p,
        epsilon_prime: eps_p,
        n: None,
        window: window.clone(),
        element: Some(h),
    })
}

/// Dyadic search for (ε′, R′, n) with K_o(W′,V,R′) ⊂ K_i(W,V,R), confirmed by
/// sampling. Candidates satisfying a known closed-form sufficient inequality
/// are tried first; the rest are screened by sampling.
pub fn check_cone_approx(group: &DilationGroup, mode: &ConeMode, search: &ConeSearch) -> Result<ConeApproxVerdict> {
    if search.budget == 0 {
        return Err(Error::InvalidArgument("cone approximation check needs a positive budget".into()));
    }
    if !(search.epsilon > 0.0) || !(search.radius > 0.0) {
        return Err(Error::InvalidArgument("epsilon and R must be positive".into()));
    }
    let d = group.dimension();
    if search.direction.len() != d || !group.in_open_orbit(&search.direction) {
        return Err(Error::OutsideOrbit(search.direction.clone()));
    }
    let xi = unit_vector(&search.direction)?;
    let w = search.family.patch(&xi, search.epsilon);
    w.validate(d)?;
    if !w.contains_direction(&xi) {
        return Err(Error::InvalidArgument("probed direction must lie in W".into()));
    }
    let mut notes = Vec::new();
    let verdict = |status, samples_tested, candidates_tried, notes| ConeApproxVerdict {
        mode: mode.clone(),
        search: search.clone(),
        status,
        samples_tested,
        candidates_tried,
        notes,
    };

    if let ConeMode::Strong { window } = mode {
        if group.contains_positive_scalar_dilations() {
            notes.push(anisotropy_gate(group).message().into());
            let cx = scalar_obstruction(group, window, search, &mut notes)?;
            return Ok(verdict(ConeStatus::FailsCounterexample(Box::new(cx)), 0, 1, notes));
        }
    }

    let weak = matches!(mode, ConeMode::Weak { .. });
    let levels = candidate_levels(search.max_level, weak);
    let build = |(ke, kr, kn): (u32, u32, u32)| -> Result<Candidate> {
        let eps_p = search.epsilon / 2f64.powi(ke as i32);
        let r_p = search.radius * 2f64.powi(kr as i32);
        let (n, window) = match mode {
            ConeMode::Strong { window } => (None, window.clone()),
            ConeMode::Weak { family } => {
                let n = 2f64.powi(kn as i32);
                (Some(n), family.window(n, d)?)
            }
        };
        Ok(Candidate { eps_p, r_p, n, window, patch: w.clone(), patch_prime: search.family.patch(&xi, eps_p) })
    };
    let closed: Vec<Option<bool>> = levels
        .iter()
        .map(|&(ke, kr, kn)| {
            let eps_p = search.epsilon / 2f64.powi(ke as i32);
            let r_p = search.radius * 2f64.powi(kr as i32);
            closed_form(group, mode, search, eps_p, r_p, weak.then(|| 2f64.powi(kn as i32)))
        })
        .collect();
    let mut order: Vec<usize> = (0..levels.len()).filter(|&i| closed[i] == Some(true)).collect();
    order.extend((0..levels.len()).filter(|&i| closed[i] != Some(true)));

    let cap = search.budget.saturating_mul(20).max(search.screen * 4);
    let mut tested = 0;
    let mut tried = 0;
    let mut best: Option<(f64, Counterexample)> = None;
    for (rank, &i) in order.iter().enumerate() {
        if tested >= cap {
            break;
        }
        let cand = match build(levels[i]) {
            Ok(c) => c,
            Err(e) => {
                notes.push(format!("candidate {:?} skipped: {e}", levels[i]));
                continue;
            }
        };
        tried += 1;
        let seed = search.seed.wrapping_add(rank as u64 * 0x1000_0001);
        let mut stages = vec![search.screen.min(search.budget)];
        if search.budget > search.screen {
            stages.push(search.budget);
        }
        let mut passed = true;
        for (s, &count) in stages.iter().enumerate() {
            let out = match test_inclusion(group, &cand, search.radius, count, seed.wrapping_add(s as u64)) {
                Ok(o) => o,
                Err(Error::BudgetExhausted(p)) => {
                    notes.push(format!("candidate {:?}: K_o sampling exhausted after {p} proposals", levels[i]));
                    passed = false;
                    break;
                }
                Err(e) => return Err(e),
            };
            tested += out.tested;
            if out.violations > 0 {
                passed = false;
                let frac = out.violations as f64 / out.tested as f64;
                if best.as_ref().is_none_or(|(f, _)| frac < *f) {
                    best = Some((frac, counterexample(out.first.expect("violation recorded"), &cand, search.radius, seed)));
                }
                break;
            }
        }
        if passed {
            let witness = Witness {
                epsilon_prime: cand.eps_p,
                radius_prime: cand.r_p,
                n: cand.n,
                patch_prime: cand.patch_prime.clone(),
                closed_form: closed[i],
                confirmed_samples: *stages.last().unwrap(),
            };
            return Ok(verdict(ConeStatus::HoldsWitness(witness), tested, tried, notes));
        }
    }
    let status = match best {
        Some((_, cx)) => ConeStatus::FailsCounterexample(Box::new(cx)),
        None => ConeStatus::BudgetExhausted,
    };
    Ok(verdict(status, tested, tried, notes))
}

/// Sampled cross-check of K_o(W′,V,R′) ⊂ K_i(W,V,R) against
/// C_o(W′,V,R′;H) ⊂ C_i(W,V,R;H).
#[derive(Clone, Debug, Serialize)]
pub struct GeometricReport {
    pub samples: usize,
    /// Sampled h ∈ K_o(W′,V,R′) not certified in K_i(W,V,R).
    pub k_violations: usize,
    /// Points h^{-T}ξ′ ∈ C_o(W′,V,R′;H) not found in C_i(W,V,R;H).
    pub c_violations: usize,
    pub c_violation_point: Option<Vec<f64>>,
    /// Both inclusions pass, or both fail.
    pub consistent: bool,
    pub findings: Vec<String>,
}

/// Probes per C_i membership search.
const C_SET_PROBES: usize = 64;

#[allow(clippy::too_many_arguments)]
pub fn check_geometric_equivalence(
    group: &DilationGroup,
    patch: &DirectionPatch,
    patch_prime: &DirectionPatch,
    window: &FrequencyWindow,
    radius: f64,
    radius_prime: f64,
    budget: usize,
    seed: u64,
) -> Result<GeometricReport> {
    if budget == 0 {
        return Ok(GeometricReport { samples: 0, k_violations: 0, c_violations: 0, c_violation_point: None, consistent: true, findings: vec![] });
    }
    let sampler = KoSampler::new(group, patch_prime, window, radius_prime, SamplerSettings::default())?;
    let samples = sampler.sample(budget, seed)?;
    let rows: Vec<Result<(bool, bool, Vec<f64>)>> = samples
        .par_iter()
        .enumerate()
        .map(|(j, s)| {
            let h = &s.element;
            let k_ok = k_i_contains(h, patch, window, radius)?.is_true();
            let mut rng = substream(seed ^ 0xc5e7, j as u64);
            let xi = match (k_ok, find_violation(h, patch, window, radius, seed.wrapping_add(j as u64))) {
                (false, Some((x, _, _))) => x,
                _ => loop {
                    let x = window.sample_interior(&mut rng);
                    if group.in_open_orbit(&x) {
                        break x;
                    }
                },
            };
            let point = h.inv_transpose_apply(&xi);
            let c = c_set_contains(&point, CSetMode::Inner, group, patch, window, radius, C_SET_PROBES, rng.random())?;
            Ok((k_ok, c.member, point))
        })
        .collect();
    let mut k_violations = 0;
    let mut c_violations = 0;
    let mut c_violation_point = None;
    for r in rows {
        let (k_ok, c_ok, point) = r?;
        if !k_ok {
            k_violations += 1;
        }
        if !c_ok {
            c_violations += 1;
            if c_violation_point.is_none() {
                c_violation_point = Some(point);
            }
        }
    }
    let mut findings = Vec::new();
    if k_violations == 0 && c_violations > 0 {
        findings.push(format!("K-inclusion held on {budget} samples but {c_violations} C_o points were not found in C_i"));
    }
    if k_violations > 0 && c_violations == 0 {
        findings.push(format!("K-inclusion failed on {k_violations} samples but no C_o point outside C_i was found"));
    }
    Ok(GeometricReport { samples: samples.len(), k_violations, c_violations, c_violation_point, consistent: findings.is_empty(), findings })
}

/// Sup of ‖h‖ and of 1/(|h^{-T}ξ′|·‖h‖) over samples of K_o, for the norm
/// boundedness and lower image bounds.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct NormDiagnostics {
    pub sup_norm: f64,
    /// Smallest C₁ with |h^{-T}ξ′|^{-1} ≤ C₁‖h‖ over samples and certificate points.
    pub image_constant: f64,
}

pub fn norm_diagnostics(group: &DilationGroup, patch: &DirectionPatch, window: &FrequencyWindow, radius: f64, count: usize, seed: u64) -> Result<NormDiagnostics> {
    let samples = draw(group, patch, window, radius, count, seed, false)?;
    let mut sup_norm: f64 = 0.0;
    let mut image_constant: f64 = 0.0;
    for s in &samples {
        let h = &s.element;
        sup_norm = sup_norm.max(h.op_norm);
        for p in &window.certificate_points {
            image_constant = image_constant.max(1.0 / (norm(&h.inv_transpose_apply(p)) * h.op_norm));
        }
    }
    Ok(NormDiagnostics { sup_norm, image_constant })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::{unit, DilationGroupSpec};

    fn group(spec: DilationGroupSpec) -> DilationGroup {
        DilationGroup::build(spec).unwrap()
    }

    #[test]
    fn similitude_fit_is_exact_identity() {
        let g = group(DilationGroupSpec::similitude(2));
        let v = FrequencyWindow::similitude_family(2.0, 2).unwrap();
        let w = DirectionPatch::cap(vec![1.0, 0.0], 0.5);
        let fit = fit_alpha1(&g, &w, &v, 1.0, 2000, false, 3).unwrap();
        assert!((fit.alpha1 - 1.0).abs() < 1e-9, "{}", fit.alpha1);
        assert!((fit.envelope - 1.0).abs() < 1e-6, "{} {}", fit.envelope, fit.alpha1);
        assert!(fit.succeeded());
        assert_eq!(fit.fresh_violations(&g, 500, 4, 1.01).unwrap(), 0);
    }

    #[test]
    fn fit_rejects_empty_budget() {
        let g = group(DilationGroupSpec::similitude(2));
        let v = FrequencyWindow::similitude_family(2.0, 2).unwrap();
        let w = DirectionPatch::cap(vec![1.0, 0.0], 0.5);
        assert!(matches!(fit_alpha1(&g, &w, &v, 1.0, 0, false, 3), Err(Error::TooFewSamples(0))));
    }

    #[test]
    fn envelope_counts() {
        let g = group(DilationGroupSpec::diagonal(2));
        let hs = [g.diagonal(vec![1.0, 2.0]).unwrap(), g.diagonal(vec![0.1, 0.4]).unwrap()];
        // ‖h^{-1}‖·‖h‖ = 2 and 4.
        assert!((envelope_constant(&hs, 1.0) - 4.0).abs() < 1e-12);
        assert_eq!(envelope_violations(&hs, 1.0, 3.0), 1);
        assert_eq!(envelope_violations(&hs, 1.0, 4.0 * 1.01), 0);
    }

    #[test]
    fn similitude_power_integral_matches_chart_integral() {
        let g = group(DilationGroupSpec::similitude(2));
        let v = FrequencyWindow::ball(vec![1.5, 0.0], 0.5).unwrap();
        let w = DirectionPatch::cap(vec![1.0, 0.0], 2.0);
        let r = 4.0;
        let res = norm_power_integral(&g, &w, &v, r, 1.0, 20_000, 9).unwrap();
        assert_eq!(res.status, Integrability::Stable);
        // a ranges over (0, sup|ξ|/R) with Haar density 1/a and unit rotation mass.
        let a_max: f64 = 2.0 / r;
        let exact = a_max;
        assert!((res.estimate.value - exact).abs() < 3.0 * res.estimate.stderr + 1e-3 * exact, "{:?} vs {exact}", res.estimate);
    }

    #[test]
    fn power_integral_preconditions() {
        let g = group(DilationGroupSpec::similitude(2));
        let v = FrequencyWindow::similitude_family(2.0, 2).unwrap();
        let w = DirectionPatch::cap(vec![1.0, 0.0], 0.5);
        assert!(norm_power_integral(&g, &w, &v, 1.0, 0.0, 100, 1).is_err());
        assert!(norm_power_integral(&g, &w, &v, 1.0, -1.0, 100, 1).is_err());
        assert!(norm_power_integral(&g, &w, &v, 1.0, 1.0, 0, 1).is_err());
    }

    #[test]
    fn gate() {
        assert_eq!(anisotropy_gate(&group(DilationGroupSpec::similitude(2))), StrongModeGate::Impossible);
        assert_eq!(anisotropy_gate(&group(DilationGroupSpec::diagonal(3))), StrongModeGate::Impossible);
        assert_eq!(anisotropy_gate(&group(DilationGroupSpec::shearlet(vec![0.5]))), StrongModeGate::Permitted);
        assert_eq!(anisotropy_gate(&group(DilationGroupSpec::shearlet(vec![1.0]))), StrongModeGate::Impossible);
    }

    #[test]
    fn closed_forms() {
        assert!(shearlet_strong_sufficient(0.3, 10.0, 0.3 / 8.0, 160.0, 0.5));
        assert!(!shearlet_strong_sufficient(0.3, 10.0, 0.3, 160.0, 0.5));
        assert!(!shearlet_strong_sufficient(0.3, 10.0, 0.01, 39.0, 0.5));
        assert!(similitude_weak_sufficient(0.5, 10.0, 0.125, 20.0, 32.0));
        assert!(!similitude_weak_sufficient(0.5, 10.0, 0.25, 20.0, 32.0));
        assert!(!similitude_weak_sufficient(0.5, 10.0, 0.125, 20.0, 16.0));
        assert!(diagonal_weak_sufficient(0.5, 10.0, 0.125, 20.0, 64.0));
        assert!(!diagonal_weak_sufficient(0.5, 10.0, 0.125, 20.0, 16.0));
        assert!(!diagonal_weak_sufficient(0.5, 10.0, 0.125, 10.0, 64.0));
    }

    #[test]
    fn candidate_order() {
        let c = candidate_levels(2, false);
        assert_eq!(c.len(), 9);
        assert_eq!(c[0], (0, 0, 0));
        assert!(c.windows(2).all(|p| p[0].0 + p[0].1 <= p[1].0 + p[1].1));
        let c = candidate_levels(3, true);
        assert_eq!(c.len(), 4 * 4 * 3);
        assert_eq!(c[0], (0, 0, 1));
    }

    #[test]
    fn budget_zero_is_rejected() {
        let g = group(DilationGroupSpec::shearlet(vec![0.5]));
        let mode = ConeMode::Strong { window: FrequencyWindow::shearlet_box(2) };
        let s = ConeSearch::new(PatchFamily::ShearletBand, 0.3, 10.0, vec![1.0, 0.0], 0);
        assert!(check_cone_approx(&g, &mode, &s).is_err());
    }

    #[test]
    fn shearlet_strong_witness() {
        let g = group(DilationGroupSpec::shearlet(vec![0.5]));
        let mode = ConeMode::Strong { window: FrequencyWindow::shearlet_box(2) };
        let s = ConeSearch::new(PatchFamily::ShearletBand, 0.3, 10.0, vec![1.0, 0.0], 4000).with_seed(5);
        let v = check_cone_approx(&g, &mode, &s).unwrap();
        let w = v.witness().expect("witness");
        assert_eq!(w.closed_form, Some(true));
        assert!(shearlet_strong_sufficient(0.3, 10.0, w.epsilon_prime, w.radius_prime, 0.5));
        assert_eq!(w.confirmed_samples, 4000);
    }

    #[test]
    fn similitude_strong_counterexample_replays_obstruction() {
        let g = group(DilationGroupSpec::similitude(2));
        let v0 = FrequencyWindow::ball(vec![1.0, 0.0], 0.5).unwrap();
        let mode = ConeMode::Strong { window: v0 };
        let s = ConeSearch::new(PatchFamily::Cap, 0.1, 5.0, vec![1.0, 0.0], 1000);
        let v = check_cone_approx(&g, &mode, &s).unwrap();
        let cx = v.counterexample().expect("counterexample");
        let alpha = cx.scalar.unwrap();
        assert!(alpha < 1.0 / (1.0 + cx.radius_prime));
        assert_eq!(cx.failed, ConeTest::Direction);
        assert!(cx.verify(&g).unwrap());
        // Replay from the serialized chart alone.
        let mut bare = cx.clone();
        bare.element = None;
        assert!(bare.verify(&g).unwrap());
    }

    #[test]
    fn wide_patch_is_shrunk_to_the_image_spread() {
        let g = group(DilationGroupSpec::diagonal(2));
        let s2 = std::f64::consts::FRAC_1_SQRT_2;
        let v0 = FrequencyWindow::ball(vec![s2, s2], 0.05).unwrap();
        let mode = ConeMode::Strong { window: v0 };
        let s = ConeSearch::new(PatchFamily::Cap, 1.0, 2.0, vec![1.0, 1.0], 100);
        let v = check_cone_approx(&g, &mode, &s).unwrap();
        let cx = v.counterexample().unwrap();
        assert!(matches!(cx.patch, DirectionPatch::SphericalCap { radius, .. } if radius < 1.0));
        assert!(cx.verify(&g).unwrap());
        assert!(!v.notes.is_empty());
    }

    #[test]
    fn tampered_certificate_fails() {
        let g = group(DilationGroupSpec::similitude(2));
        let mode = ConeMode::Strong { window: FrequencyWindow::ball(vec![1.0, 0.0], 0.5).unwrap() };
        let s = ConeSearch::new(PatchFamily::Cap, 0.1, 5.0, vec![1.0, 0.0], 10);
        let v = check_cone_approx(&g, &mode, &s).unwrap();
        let mut cx = v.counterexample().unwrap().clone();
        cx.xi_prime = Some(vec![1.0, 0.0]);
        assert!(!cx.verify(&g).unwrap());
    }

    #[test]
    fn geometric_cross_check_detects_violation() {
        let g = group(DilationGroupSpec::shearlet(vec![0.5]));
        let v = FrequencyWindow::shearlet_box(2);
        let w = DirectionPatch::ShearletAxisBand { epsilon: 0.3 };
        let wide = DirectionPatch::ShearletAxisBand { epsilon: 0.6 };
        let r = check_geometric_equivalence(&g, &w, &wide, &v, 10.0, 5.0, 300, 2).unwrap();
        assert!(r.k_violations > 0 && r.c_violations > 0 && r.consistent, "{r:?}");
        assert!(r.c_violation_point.is_some());
    }

    #[test]
    fn geometric_cross_check_trivial_case() {
        let g = group(DilationGroupSpec::shearlet(vec![0.5]));
        let v = FrequencyWindow::shearlet_box(2);
        let w = DirectionPatch::ShearletAxisBand { epsilon: 0.3 };
        let r = check_geometric_equivalence(&g, &w, &w, &v, 10.0, 10.0, 0, 2).unwrap();
        assert!(r.consistent && r.samples == 0);
    }

    #[test]
    fn stay_measure_is_orbit_constant_and_monotone() {
        let g = group(DilationGroupSpec::similitude(2));
        let v = FrequencyWindow::ball(vec![1.0, 0.0], 0.5).unwrap();
        let a = stay_measure(&g, &[1.0, 0.0], &v, 40_000, 1).unwrap();
        let b = stay_measure(&g, &[0.3, -2.0], &v, 40_000, 2).unwrap();
        assert!(a.agrees_with(&b, 3.0), "{a:?} {b:?}");
        let small = stay_measure(&g, &[1.0, 0.0], &v.shrunk(0.5).unwrap(), 40_000, 1).unwrap();
        assert!(small.value < a.value);
        assert!(stay_measure(&g, &[0.0, 0.0], &v, 10, 1).is_err());
        assert!(stay_measure(&g, &[1.0, 0.0], &v, 0, 1).is_err());
    }

    #[test]
    fn annulus_stay_measure_matches_chart_integral() {
        // {a ϑ : a ϑ^T ξ ∈ annulus sector}: log-scale length ln(r1/r0) times angular fraction.
        let g = group(DilationGroupSpec::similitude(2));
        let patch = DirectionPatch::cap(unit(2, 0), 0.5);
        let v = FrequencyWindow::annulus_sector(1.0, 3.0, patch, 2).unwrap();
        let est = stay_measure(&g, &[2.0, 0.0], &v, 100_000, 4).unwrap();
        let half = 2.0 * (0.25f64).asin();
        let exact = 3f64.ln() * 2.0 * half / (2.0 * std::f64::consts::PI);
        assert!((est.value - exact).abs() < 3.0 * est.stderr, "{est:?} vs {exact}");
    }

    #[test]
    fn norm_diagnostics_are_stable() {
        let g = group(DilationGroupSpec::shearlet(vec![0.5]));
        let v = FrequencyWindow::shearlet_box(2);
        let w = DirectionPatch::ShearletAxisBand { epsilon: 0.3 };
        let a = norm_diagnostics(&g, &w, &v, 10.0, 1000, 1).unwrap();
        let b = norm_diagnostics(&g, &w, &v, 10.0, 4000, 2).unwrap();
        assert!(a.sup_norm < 1.0 && (a.sup_norm - b.sup_norm).abs() < 0.5 * a.sup_norm);
        assert!(a.image_constant.is_finite() && b.image_constant.is_finite());
    }
}
