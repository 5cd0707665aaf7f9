//! Classification of directed points (x, ξ) by coefficient decay along a
//! ladder of dilations with geometrically decreasing norm.

use crate::error::{Error, Result};
use crate::geometry::{k_i_contains, k_o_contains, DirectionPatch, FrequencyWindow};
use crate::group::{norm, DilationGroup, GroupElement};
use crate::quadrature::Quad;
use crate::stats::{fit_line, LineFit};
use crate::transform::{coefficients_analytic, z_extent_box, AnalysedObject, CoefficientSettings, FrequencyKernel};
use crate::wavelet::BandlimitedWavelet;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::io::Write;
use std::path::Path;
use std::sync::OnceLock;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Tier {
    Ki,
    Ko,
}

#[derive(Clone, Debug)]
pub struct ProbeLadder {
    pub direction: Vec<f64>,
    pub window: FrequencyWindow,
    pub patch: DirectionPatch,
    pub radius: f64,
    pub rho: f64,
    pub elements: Vec<GroupElement>,
    pub norms: Vec<f64>,
    pub tiers: Vec<Tier>,
    pub warnings: Vec<String>,
}

impl ProbeLadder {
    /// The elements tagged K_i, in ladder order.
    pub fn ki_subset(&self) -> ProbeLadder {
        let keep: Vec<usize> = (0..self.elements.len()).filter(|i| self.tiers[*i] == Tier::Ki).collect();
        ProbeLadder {
            elements: keep.iter().map(|i| self.elements[*i].clone()).collect(),
            norms: keep.iter().map(|i| self.norms[*i]).collect(),
            tiers: vec![Tier::Ki; keep.len()],
            ..self.clone()
        }
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }
}

/// The frequency the ladder maps onto the ξ ray: the window centre if it lies
/// in the orbit, the orbit base point otherwise.
fn ladder_anchor(group: &DilationGroup, window: &FrequencyWindow) -> Vec<f64> {
    let c = window.center();
    if group.in_open_orbit(&c) {
        c
    } else {
        group.orbit().base_point.clone()
    }
}

/// h with h^T ξ = λ·anchor, so h^{-T} maps the anchor ray onto the ξ ray.
fn ladder_element(group: &DilationGroup, xi: &[f64], anchor: &[f64], lambda: f64) -> Result<GroupElement> {
    let t: Vec<f64> = anchor.iter().map(|a| a * lambda).collect();
    group.solve_dual(xi, &t)
}

fn element_with_norm(group: &DilationGroup, xi: &[f64], anchor: &[f64], target: f64) -> Result<GroupElement> {
    let f = |l: f64| -> Result<f64> { Ok(ladder_element(group, xi, anchor, l)?.op_norm) };
    let (mut lo, mut hi) = (1.0f64, 1.0f64);
    let mut guard = 0;
    while f(hi)? < target {
        hi *= 2.0;
        guard += 1;
        if guard > 2000 {
            return Err(Error::Parameter(format!("no ladder element of norm {target}")));
        }
    }
    while f(lo)? > target {
        lo *= 0.5;
        guard += 1;
        if guard > 4000 {
            return Err(Error::Parameter(format!("no ladder element of norm {target}")));
        }
    }
    for _ in 0..200 {
        let mid = (lo * hi).sqrt();
        if f(mid)? < target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi / lo - 1.0 < 1e-15 {
            break;
        }
    }
    ladder_element(group, xi, anchor, (lo * hi).sqrt())
}

/// Canonical ladder with ‖h_k‖ = start_norm·ρ^k, k < depth; elements outside
/// K_o(W, V, R) are dropped with a warning.
#[allow(clippy::too_many_arguments)]
pub fn build_probe_ladder(group: &DilationGroup, xi: &[f64], window: &FrequencyWindow, patch: &DirectionPatch, radius: f64, rho: f64, depth: usize, start_norm: f64) -> Result<ProbeLadder> {
    if depth < 4 {
        return Err(Error::InvalidArgument(format!("ladder depth {depth} < 4")));
    }
    if !(rho > 0.0 && rho < 1.0) {
        return Err(Error::InvalidArgument(format!("ratio {rho} outside (0, 1)")));
    }
    if !(start_norm > 0.0) {
        return Err(Error::InvalidArgument(format!("start norm {start_norm} must be positive")));
    }
    if !group.in_open_orbit(xi) {
        return Err(Error::OutsideOrbit(xi.to_vec()));
    }
    let anchor = ladder_anchor(group, window);
    let mut ladder = ProbeLadder {
        direction: xi.to_vec(),
        window: window.clone(),
        patch: patch.clone(),
        radius,
        rho,
        elements: vec![],
        norms: vec![],
        tiers: vec![],
        warnings: vec![],
    };
    for k in 0..depth {
        let h = element_with_norm(group, xi, &anchor, start_norm * rho.powi(k as i32))?;
        if !k_o_contains(&h, patch, window, radius)?.at_least(0.99) {
            ladder.warnings.push(format!("rung {k} (norm {:.3e}) outside K_o, dropped", h.op_norm));
            continue;
        }
        let tier = if k_i_contains(&h, patch, window, radius)?.is_true() { Tier::Ki } else { Tier::Ko };
        ladder.norms.push(h.op_norm);
        ladder.elements.push(h);
        ladder.tiers.push(tier);
    }
    if ladder.elements.is_empty() {
        return Err(Error::Parameter("no ladder element lies in K_o; check window, patch and radius".into()));
    }
    Ok(ladder)
}

/// per_axis^d offsets on a centred lattice of the given step.
pub fn neighbourhood_offsets(d: usize, step: f64, per_axis: usize) -> Vec<Vec<f64>> {
    let half = (per_axis as f64 - 1.0) / 2.0;
    let total = per_axis.pow(d as u32);
    (0..total)
        .map(|mut m| {
            let mut v = vec![0.0; d];
            for k in (0..d).rev() {
                v[k] = ((m % per_axis) as f64 - half) * step;
                m /= per_axis;
            }
            v
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DetectorConfig {
    pub n_regular: f64,
    pub n_singular: f64,
    pub res_max: f64,
    pub floor_multiplier: f64,
    pub rho: f64,
    pub depth: usize,
    pub start_norm: f64,
    /// Cone cutoff R.
    pub radius: f64,
    /// Chord radius of the spherical cap W around ξ.
    pub aperture: f64,
    /// Lattice step of the neighbourhood U.
    pub offset_step: f64,
    pub offsets_per_axis: usize,
    /// Consecutive below-floor rungs that end a ladder early.
    pub early_stop: usize,
    /// Use only the K_i-tagged rungs.
    pub ki_only: bool,
    pub coefficients: CoefficientSettings,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        Self {
            n_regular: 4.0,
            n_singular: 1.0,
            res_max: 0.5,
            floor_multiplier: 1e3,
            rho: 0.5,
            depth: 20,
            start_norm: 1.0,
            radius: 1.0,
            aperture: 0.1,
            offset_step: 0.05,
            offsets_per_axis: 5,
            early_stop: 3,
            ki_only: false,
            coefficients: CoefficientSettings::default(),
        }
    }
}

impl DetectorConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if !(self.n_singular < self.n_regular) {
            return bad("n_singular must be below n_regular");
        }
        if !(self.rho > 0.0 && self.rho < 1.0) {
            return bad("rho must lie in (0, 1)");
        }
        if self.depth < 4 {
            return bad("depth must be at least 4");
        }
        if !(self.radius > 0.0 && self.aperture > 0.0 && self.start_norm > 0.0 && self.offset_step >= 0.0) {
            return bad("radius, aperture, start_norm must be positive and offset_step non-negative");
        }
        if self.offsets_per_axis == 0 || self.early_stop == 0 {
            return bad("offsets_per_axis and early_stop must be positive");
        }
        if !(self.floor_multiplier > 0.0 && self.res_max > 0.0) {
            return bad("floor_multiplier and res_max must be positive");
        }
        Ok(())
    }

    pub fn patch_for(&self, xi: &[f64]) -> DirectionPatch {
        let n = norm(xi);
        DirectionPatch::cap(xi.iter().map(|x| x / n).collect(), self.aperture)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecaySample {
    pub norm: f64,
    pub log_norm: f64,
    /// Largest resolved |W| over x + U (0 when none is resolved).
    pub max_coefficient: f64,
    pub log_coefficient: f64,
    pub error: f64,
    pub below_floor: bool,
    pub tier: Tier,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    Regular,
    Singular,
    Inconclusive,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayReport {
    pub x: Vec<f64>,
    pub direction: Vec<f64>,
    pub samples: Vec<DecaySample>,
    pub fitted_slope: Option<f64>,
    pub residual: Option<f64>,
    pub floor_hit: bool,
    pub verdict: Verdict,
    pub radius: f64,
    pub aperture: f64,
    pub offset_step: f64,
    pub offsets_per_axis: usize,
    pub warnings: Vec<String>,
}

impl DecayReport {
    pub fn write_csv<W: Write>(&self, out: W, metadata: &[(String, String)]) -> Result<()> {
        let mut out = out;
        for (k, v) in metadata {
            writeln!(out, "# {k}: {v}")?;
        }
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["rung", "norm", "log_norm", "max_coefficient", "log_coefficient", "error", "below_floor", "tier"]).map_err(|e| Error::Io(e.to_string()))?;
        for (i, s) in self.samples.iter().enumerate() {
            w.write_record([
                i.to_string(),
                format!("{:.17e}", s.norm),
                format!("{:.17e}", s.log_norm),
                format!("{:.17e}", s.max_coefficient),
                format!("{:.17e}", s.log_coefficient),
                format!("{:.17e}", s.error),
                s.below_floor.to_string(),
                format!("{:?}", s.tier),
            ])
            .map_err(|e| Error::Io(e.to_string()))?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Least-squares slope of log|W| against log‖h‖ over the samples above floor.
pub fn decay_exponent(samples: &[DecaySample]) -> Result<LineFit> {
    let usable: Vec<&DecaySample> = samples.iter().filter(|s| !s.below_floor).collect();
    if usable.len() < 3 {
        return Err(Error::TooFewSamples(usable.len()));
    }
    let x: Vec<f64> = usable.iter().map(|s| s.log_norm).collect();
    let y: Vec<f64> = usable.iter().map(|s| s.log_coefficient).collect();
    fit_line(&x, &y).ok_or(Error::TooFewSamples(usable.len()))
}

/// A ladder bound to an object and wavelet. Frequency kernels are built once
/// per rung and shared by every point of `region`.
pub struct LadderProbe<'a> {
    u: &'a AnalysedObject,
    psi: &'a BandlimitedWavelet,
    pub ladder: ProbeLadder,
    offsets: Vec<Vec<f64>>,
    config: DetectorConfig,
    region: (Vec<f64>, Vec<f64>),
    kernels: Vec<OnceLock<Result<FrequencyKernel>>>,
}

impl<'a> LadderProbe<'a> {
    /// `region_lo/hi` bound the points that will be classified.
    pub fn new(u: &'a AnalysedObject, psi: &'a BandlimitedWavelet, ladder: ProbeLadder, config: &DetectorConfig, region_lo: &[f64], region_hi: &[f64]) -> Result<Self> {
        if matches!(u, AnalysedObject::Grid(_)) {
            return Err(Error::Variant("the detector uses the analytic path".into()));
        }
        let d = ladder.direction.len();
        u.validate(d)?;
        let ladder = if config.ki_only { ladder.ki_subset() } else { ladder };
        let offsets = neighbourhood_offsets(d, config.offset_step, config.offsets_per_axis);
        let reach = config.offset_step * (config.offsets_per_axis as f64 - 1.0) / 2.0;
        let region = (region_lo.iter().map(|v| v - reach).collect(), region_hi.iter().map(|v| v + reach).collect());
        let kernels = (0..ladder.len()).map(|_| OnceLock::new()).collect();
        Ok(Self { u, psi, ladder, offsets, config: *config, region, kernels })
    }

    fn rung_values(&self, k: usize, ys: &[Vec<f64>]) -> Result<Vec<Quad>> {
        let h = &self.ladder.elements[k];
        match self.u {
            AnalysedObject::Gaussian { center, .. } => {
                let kernel = self.kernels[k].get_or_init(|| {
                    let z = z_extent_box(h, center, &self.region.0, &self.region.1);
                    FrequencyKernel::new(self.u, self.psi, h, &self.config.coefficients, &z)
                });
                match kernel {
                    Ok(kernel) => Ok(ys.iter().map(|y| kernel.eval(y)).collect()),
                    Err(e) => Err(e.clone()),
                }
            }
            _ => coefficients_analytic(self.u, self.psi, ys, h, &self.config.coefficients),
        }
    }

    pub fn sample(&self, k: usize, x: &[f64]) -> Result<DecaySample> {
        let ys: Vec<Vec<f64>> = self.offsets.iter().map(|o| x.iter().zip(o).map(|(a, b)| a + b).collect()).collect();
        let values = self.rung_values(k, &ys)?;
        let fm = self.config.floor_multiplier;
        let mut best: Option<(f64, f64)> = None;
        let mut worst_error = 0.0f64;
        for q in &values {
            let m = q.value.norm();
            worst_error = worst_error.max(q.error);
            if m > fm * q.error && best.is_none_or(|(b, _)| m > b) {
                best = Some((m, q.error));
            }
        }
        let norm = self.ladder.norms[k];
        let (max_coefficient, error, below_floor) = match best {
            Some((m, e)) => (m, e, false),
            None => (0.0, worst_error, true),
        };
        Ok(DecaySample {
            norm,
            log_norm: norm.ln(),
            max_coefficient,
            log_coefficient: if max_coefficient > 0.0 { max_coefficient.ln() } else { f64::NEG_INFINITY },
            error,
            below_floor,
            tier: self.ladder.tiers[k],
        })
    }

    pub fn classify(&self, x: &[f64]) -> Result<DecayReport> {
        let c = &self.config;
        let mut samples = Vec::with_capacity(self.ladder.len());
        let mut run = 0;
        for k in 0..self.ladder.len() {
            let s = self.sample(k, x)?;
            run = if s.below_floor { run + 1 } else { 0 };
            samples.push(s);
            if run >= c.early_stop {
                break;
            }
        }
        let floor_hit = run >= c.early_stop;
        // fit the finer half of the usable samples, at least three
        let usable: Vec<DecaySample> = samples.iter().filter(|s| !s.below_floor).cloned().collect();
        let keep = usable.len().div_ceil(2).max(3).min(usable.len());
        let fit = decay_exponent(&usable[usable.len() - keep..]).ok();
        let verdict = if floor_hit {
            Verdict::Regular
        } else {
            match fit {
                Some(f) if f.slope >= c.n_regular && f.max_residual <= c.res_max => Verdict::Regular,
                Some(f) if f.slope <= c.n_singular => Verdict::Singular,
                _ => Verdict::Inconclusive,
            }
        };
        Ok(DecayReport {
            x: x.to_vec(),
            direction: self.ladder.direction.clone(),
            samples,
            fitted_slope: fit.map(|f| f.slope),
            residual: fit.map(|f| f.max_residual),
            floor_hit,
            verdict,
            radius: self.ladder.radius,
            aperture: c.aperture,
            offset_step: c.offset_step,
            offsets_per_axis: c.offsets_per_axis,
            warnings: self.ladder.warnings.clone(),
        })
    }
}

fn ladder_for(group: &DilationGroup, psi: &BandlimitedWavelet, xi: &[f64], config: &DetectorConfig) -> Result<ProbeLadder> {
    build_probe_ladder(group, xi, &psi.support, &config.patch_for(xi), config.radius, config.rho, config.depth, config.start_norm)
}

/// Decay report for one directed point.
pub fn classify_point(u: &AnalysedObject, psi: &BandlimitedWavelet, group: &DilationGroup, x: &[f64], xi: &[f64], config: &DetectorConfig) -> Result<DecayReport> {
    config.validate()?;
    let ladder = ladder_for(group, psi, xi, config)?;
    LadderProbe::new(u, psi, ladder, config, x, x)?.classify(x)
}

/// Cyclic coordinate shift moving the first nonzero component of ξ to axis 0:
/// new axis k is old axis perm[k].
pub fn orbit_permutation(group: &DilationGroup, xi: &[f64]) -> Option<Vec<usize>> {
    let d = xi.len();
    (1..d).map(|s| (0..d).map(|k| (k + s) % d).collect::<Vec<usize>>()).find(|p| group.in_open_orbit(&p.iter().map(|&k| xi[k]).collect::<Vec<_>>()))
}

/// Unit directions at angles 2πk/n; components below 1e-12 are snapped to 0.
pub fn direction_grid_2d(n: usize) -> Vec<Vec<f64>> {
    let snap = |v: f64| if v.abs() < 1e-12 { 0.0 } else { v };
    (0..n)
        .map(|k| {
            let t = 2.0 * std::f64::consts::PI * k as f64 / n as f64;
            vec![snap(t.cos()), snap(t.sin())]
        })
        .collect()
}

/// Node-based grid of n points per axis with the given spacing, containing 0
/// at index n/2.
pub fn point_grid(n: usize, d: usize, spacing: f64) -> Vec<Vec<f64>> {
    let total = n.pow(d as u32);
    (0..total)
        .map(|mut m| {
            let mut v = vec![0.0; d];
            for k in (0..d).rev() {
                v[k] = ((m % n) as f64 - (n / 2) as f64) * spacing;
                m /= n;
            }
            v
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum CellVerdict {
    Regular,
    Singular,
    Inconclusive,
    Unresolvable,
}

impl CellVerdict {
    pub fn code(self) -> u8 {
        match self {
            Self::Regular => 0,
            Self::Singular => 1,
            Self::Inconclusive => 2,
            Self::Unresolvable => 3,
        }
    }
}

impl From<Verdict> for CellVerdict {
    fn from(v: Verdict) -> Self {
        match v {
            Verdict::Regular => Self::Regular,
            Verdict::Singular => Self::Singular,
            Verdict::Inconclusive => Self::Inconclusive,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Pass {
    Direct,
    Permuted,
    Skipped,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanCell {
    pub verdict: CellVerdict,
    pub slope: Option<f64>,
    pub pass: Pass,
}

/// Verdicts indexed [point][direction].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanMap {
    pub points: Vec<Vec<f64>>,
    pub directions: Vec<Vec<f64>>,
    pub cells: Vec<ScanCell>,
    pub warnings: Vec<String>,
}

impl ScanMap {
    pub fn cell(&self, point: usize, direction: usize) -> &ScanCell {
        &self.cells[point * self.directions.len() + direction]
    }

    pub fn count(&self, v: CellVerdict) -> usize {
        self.cells.iter().filter(|c| c.verdict == v).count()
    }

    pub fn write_csv<W: Write>(&self, out: W, metadata: &[(String, String)]) -> Result<()> {
        let mut out = out;
        for (k, v) in metadata {
            writeln!(out, "# {k}: {v}")?;
        }
        let mut w = csv::Writer::from_writer(out);
        let d = self.points.first().map_or(0, |p| p.len());
        let mut head = vec!["point".to_string()];
        head.extend((0..d).map(|k| format!("x{k}")));
        head.push("direction".into());
        head.extend((0..d).map(|k| format!("xi{k}")));
        head.extend(["verdict".to_string(), "slope".to_string(), "pass".to_string()]);
        w.write_record(&head).map_err(|e| Error::Io(e.to_string()))?;
        for (i, p) in self.points.iter().enumerate() {
            for (j, xi) in self.directions.iter().enumerate() {
                let c = self.cell(i, j);
                let mut row = vec![i.to_string()];
                row.extend(p.iter().map(|v| format!("{v:.17e}")));
                row.push(j.to_string());
                row.extend(xi.iter().map(|v| format!("{v:.17e}")));
                row.push(format!("{:?}", c.verdict));
                row.push(c.slope.map_or(String::new(), |s| format!("{s:.17e}")));
                row.push(format!("{:?}", c.pass));
                w.write_record(&row).map_err(|e| Error::Io(e.to_string()))?;
            }
        }
        w.flush()?;
        Ok(())
    }

    /// One row per point, one column per direction; codes 0 regular, 1
    /// singular, 2 inconclusive, 3 unresolvable.
    pub fn write_matrix<W: Write>(&self, mut out: W, metadata: &[(String, String)]) -> Result<()> {
        for (k, v) in metadata {
            writeln!(out, "# {k}: {v}")?;
        }
        for i in 0..self.points.len() {
            let row: Vec<String> = (0..self.directions.len()).map(|j| self.cell(i, j).verdict.code().to_string()).collect();
            writeln!(out, "{}", row.join(" "))?;
        }
        Ok(())
    }

    pub fn write_files(&self, dir: &Path, stem: &str, metadata: &[(String, String)]) -> Result<()> {
        self.write_csv(std::fs::File::create(dir.join(format!("{stem}.csv")))?, metadata)?;
        self.write_matrix(std::fs::File::create(dir.join(format!("{stem}.matrix")))?, metadata)
    }
}

fn bounding(points: &[Vec<f64>]) -> (Vec<f64>, Vec<f64>) {
    let d = points[0].len();
    let lo = (0..d).map(|k| points.iter().map(|p| p[k]).fold(f64::INFINITY, f64::min)).collect();
    let hi = (0..d).map(|k| points.iter().map(|p| p[k]).fold(f64::NEG_INFINITY, f64::max)).collect();
    (lo, hi)
}

/// Dense verdicts over points × directions. Directions outside the orbit are
/// Unresolvable unless `permuted` is set, in which case they are classified
/// in cyclically permuted coordinates.
pub fn wavefront_scan(u: &AnalysedObject, psi: &BandlimitedWavelet, group: &DilationGroup, points: &[Vec<f64>], directions: &[Vec<f64>], config: &DetectorConfig, permuted: bool) -> Result<ScanMap> {
    if points.is_empty() || directions.is_empty() {
        return Err(Error::EmptyGrid);
    }
    config.validate()?;
    let mut cells = vec![ScanCell { verdict: CellVerdict::Unresolvable, slope: None, pass: Pass::Skipped }; points.len() * directions.len()];
    let mut warnings = vec![];
    for (j, xi) in directions.iter().enumerate() {
        let (obj, pts, dir, pass) = if group.in_open_orbit(xi) {
            (u.clone(), points.to_vec(), xi.clone(), Pass::Direct)
        } else if let (true, Some(perm)) = (permuted, orbit_permutation(group, xi)) {
            let p = |v: &Vec<f64>| perm.iter().map(|&k| v[k]).collect::<Vec<f64>>();
            (u.permuted(&perm)?, points.iter().map(p).collect(), p(xi), Pass::Permuted)
        } else {
            warnings.push(format!("direction {xi:?} outside the orbit: Unresolvable"));
            continue;
        };
        let ladder = ladder_for(group, psi, &dir, config)?;
        if !ladder.warnings.is_empty() {
            warnings.push(format!("direction {xi:?}: {} rungs outside K_o", ladder.warnings.len()));
        }
        let (lo, hi) = bounding(&pts);
        let probe = LadderProbe::new(&obj, psi, ladder, config, &lo, &hi)?;
        let reports: Vec<Result<DecayReport>> = pts.par_iter().map(|x| probe.classify(x)).collect();
        for (i, r) in reports.into_iter().enumerate() {
            let r = r?;
            cells[i * directions.len() + j] = ScanCell { verdict: r.verdict.into(), slope: r.fitted_slope, pass };
        }
    }
    Ok(ScanMap { points: points.to_vec(), directions: directions.to_vec(), cells, warnings })
}
