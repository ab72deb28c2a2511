//! Acquisition functions and their maximization.
//!
//! Single-objective scores (EI, PI, LCB) are closed form. For two objectives
//! the expected hypervolume improvement is computed exactly from a cell
//! decomposition of the nondominated region; batches use a Monte-Carlo
//! estimate over joint posterior samples. Fidelity enters through a cost
//! model that divides the raw score by the evaluation price.

use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::f64::consts::{FRAC_1_SQRT_2, PI};

#[cfg(not(feature = "std"))]
use num_traits::Float;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::linalg::{Cholesky, Matrix};
use crate::pareto::{hv2d_sweep, hv_wfg, nondominated_indices};
use crate::surrogate::GpModel;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum AcquisitionKind {
    #[serde(rename = "EI")]
    Ei,
    #[serde(rename = "PI")]
    Pi,
    #[serde(rename = "LCB")]
    Lcb,
    #[serde(rename = "EHVI")]
    Ehvi,
    #[serde(rename = "qEHVI")]
    QEhvi,
}

impl AcquisitionKind {
    pub fn is_multi_objective(self) -> bool {
        matches!(self, AcquisitionKind::Ehvi | AcquisitionKind::QEhvi)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AcquisitionSpec {
    pub kind: AcquisitionKind,
    pub q: usize,
    /// LCB exploration weight; posterior spread multiplier for hypervolume scores.
    pub beta: f64,
    pub mc_samples: usize,
    pub seed: u64,
}

impl AcquisitionSpec {
    pub fn new(kind: AcquisitionKind) -> Self {
        AcquisitionSpec { kind, q: 1, beta: 1.0, mc_samples: 512, seed: 0 }
    }

    pub fn validate(&self) -> Result<()> {
        if self.q == 0 {
            return Err(Error::InvalidParameter("batch size q must be at least 1".into()));
        }
        if self.q > 1 && self.kind != AcquisitionKind::QEhvi {
            return Err(Error::InvalidParameter("q > 1 requires qEHVI".into()));
        }
        if !(self.beta >= 0.0) || !self.beta.is_finite() {
            return Err(Error::InvalidParameter("beta must be finite and non-negative".into()));
        }
        if self.mc_samples == 0 {
            return Err(Error::InvalidParameter("mc_samples must be positive".into()));
        }
        Ok(())
    }
}

#[inline]
pub fn normal_pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * PI).sqrt()
}

#[inline]
pub fn normal_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z * FRAC_1_SQRT_2)
}

fn finite3(a: f64, b: f64, c: f64) -> Result<()> {
    if a.is_finite() && b.is_finite() && c.is_finite() {
        Ok(())
    } else {
        Err(Error::NonFinite("acquisition arguments"))
    }
}

/// `E[max(Y − incumbent, 0)]` for `Y ~ N(mean, sd²)` (maximize convention).
pub fn expected_improvement(mean: f64, sd: f64, incumbent: f64) -> Result<f64> {
    finite3(mean, sd, incumbent)?;
    if sd < 0.0 {
        return Err(Error::InvalidParameter("sd must be non-negative".into()));
    }
    Ok(upper_partial_moment(mean, sd, incumbent))
}

/// `E[(Y − a)⁺]`, also the integral of the survival function from `a` to ∞.
#[inline]
fn upper_partial_moment(mean: f64, sd: f64, a: f64) -> f64 {
    let diff = mean - a;
    if sd <= 0.0 {
        return diff.max(0.0);
    }
    let z = diff / sd;
    (diff * normal_cdf(z) + sd * normal_pdf(z)).max(0.0)
}

/// `P(Y > incumbent)`; a zero-variance posterior counts only strict improvement.
pub fn probability_of_improvement(mean: f64, sd: f64, incumbent: f64) -> Result<f64> {
    finite3(mean, sd, incumbent)?;
    if sd < 0.0 {
        return Err(Error::InvalidParameter("sd must be non-negative".into()));
    }
    if sd == 0.0 {
        return Ok(if mean > incumbent { 1.0 } else { 0.0 });
    }
    Ok(normal_cdf((mean - incumbent) / sd))
}

/// `mean − beta·sd`; smaller is better.
pub fn lower_confidence_bound(mean: f64, sd: f64, beta: f64) -> Result<f64> {
    finite3(mean, sd, beta)?;
    if beta < 0.0 {
        return Err(Error::InvalidParameter("beta must be non-negative".into()));
    }
    Ok(mean - beta * sd)
}

/// Front members that strictly dominate the reference, sorted by the first
/// objective ascending (so the second is descending).
fn effective_front_2d(front: &[Vec<f64>], reference: &[f64]) -> Result<Vec<(f64, f64)>> {
    check_reference(reference, 2)?;
    if let Some(bad) = front.iter().find(|p| p.len() != 2) {
        return Err(Error::DimensionMismatch { expected: 2, got: bad.len() });
    }
    let pts: Vec<Vec<f64>> =
        front.iter().filter(|p| p[0] > reference[0] && p[1] > reference[1]).cloned().collect();
    let mut nd: Vec<(f64, f64)> = nondominated_indices(&pts).into_iter().map(|i| (pts[i][0], pts[i][1])).collect();
    nd.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(Ordering::Equal));
    Ok(nd)
}

fn check_reference(reference: &[f64], m: usize) -> Result<()> {
    if reference.len() != m {
        return Err(Error::DimensionMismatch { expected: m, got: reference.len() });
    }
    if !reference.iter().all(|v| v.is_finite()) {
        return Err(Error::InvalidReferencePoint("reference point must be finite"));
    }
    Ok(())
}

/// Exact two-objective EHVI for independent normal outcomes.
///
/// The nondominated region above `reference` is split into vertical strips
/// between consecutive front members; within each strip the improvement
/// integral factorizes into two univariate partial moments.
pub fn ehvi_2d(mean: [f64; 2], sd: [f64; 2], front: &[Vec<f64>], reference: &[f64]) -> Result<f64> {
    if !mean.iter().chain(&sd).all(|v| v.is_finite()) {
        return Err(Error::NonFinite("posterior moments"));
    }
    if sd.iter().any(|s| *s < 0.0) {
        return Err(Error::InvalidParameter("sd must be non-negative".into()));
    }
    let pts = effective_front_2d(front, reference)?;
    let psi1 = |a: f64, b: Option<f64>| {
        let upper = upper_partial_moment(mean[0], sd[0], a);
        match b {
            Some(b) => (upper - upper_partial_moment(mean[0], sd[0], b)).max(0.0),
            None => upper,
        }
    };
    let psi2 = |c: f64| upper_partial_moment(mean[1], sd[1], c);
    let mut total = 0.0;
    let mut left = reference[0];
    for &(p1, p2) in &pts {
        // strip [left, p1) is open above p2
        total += psi1(left, Some(p1)) * psi2(p2);
        left = p1;
    }
    total += psi1(left, None) * psi2(reference[1]);
    Ok(total.max(0.0))
}

/// Exact EHVI at `x` from two independent per-objective models, whose
/// predictions are already in the maximize convention.
pub fn ehvi_exact(models: &[&GpModel], x: &[f64], front: &[Vec<f64>], reference: &[f64]) -> Result<f64> {
    if models.len() != 2 {
        return Err(Error::DimensionMismatch { expected: 2, got: models.len() });
    }
    for m in models {
        if m.dim() != x.len() {
            return Err(Error::DimensionMismatch { expected: m.dim(), got: x.len() });
        }
    }
    let (m0, s0) = models[0].predict_one(x);
    let (m1, s1) = models[1].predict_one(x);
    ehvi_2d([m0, m1], [s0, s1], front, reference)
}

/// Fixed standard-normal draws shared across candidate evaluations so the
/// Monte-Carlo score is a deterministic, smooth-ish function of `x`.
#[derive(Debug, Clone, PartialEq)]
pub struct BaseSamples {
    n_samples: usize,
    m: usize,
    q: usize,
    z: Vec<f64>,
}

impl BaseSamples {
    pub fn new(n_samples: usize, m: usize, q: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let z = (0..n_samples * m * q).map(|_| rng.sample(StandardNormal)).collect();
        BaseSamples { n_samples, m, q, z }
    }

    #[inline]
    fn slice(&self, sample: usize, objective: usize) -> &[f64] {
        let start = (sample * self.m + objective) * self.q;
        &self.z[start..start + self.q]
    }

    pub fn n_samples(&self) -> usize {
        self.n_samples
    }
}

/// Joint posterior of a batch for one objective: mean vector and covariance.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchPosterior {
    pub mean: Vec<f64>,
    pub cov: Matrix,
}

/// Monte-Carlo estimate of the batch hypervolume improvement with its
/// standard error, from per-objective joint posteriors.
///
/// Covariances are multiplied by `beta²` before sampling.
pub fn qehvi_from_posteriors(
    posteriors: &[BatchPosterior],
    base: &BaseSamples,
    front: &[Vec<f64>],
    reference: &[f64],
    beta: f64,
) -> Result<(f64, f64)> {
    let m = posteriors.len();
    check_reference(reference, m)?;
    let q = posteriors.first().map_or(0, |p| p.mean.len());
    if base.m != m || base.q != q {
        return Err(Error::DimensionMismatch { expected: base.m * base.q, got: m * q });
    }
    let factors: Vec<Option<Cholesky>> = posteriors
        .iter()
        .map(|p| {
            let mut cov = p.cov.clone();
            for i in 0..q {
                for v in cov.row_mut(i) {
                    *v *= beta * beta;
                }
            }
            if (0..q).all(|i| cov[(i, i)] <= 0.0) {
                Ok(None)
            } else {
                Cholesky::with_jitter(&cov).map(Some)
            }
        })
        .collect::<Result<_>>()?;

    let base_front: Vec<Vec<f64>> =
        front.iter().filter(|p| p.iter().zip(reference).all(|(y, r)| y > r)).cloned().collect();
    if let Some(bad) = front.iter().find(|p| p.len() != m) {
        return Err(Error::DimensionMismatch { expected: m, got: bad.len() });
    }
    let hv_base = hv_any(&base_front, reference);

    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    let mut outcomes: Vec<Vec<f64>> = vec![vec![0.0; m]; q];
    let mut pool = base_front.clone();
    for s in 0..base.n_samples {
        for (k, post) in posteriors.iter().enumerate() {
            let z = base.slice(s, k);
            match &factors[k] {
                Some(c) => {
                    let e = c.mul_lower(z);
                    for i in 0..q {
                        outcomes[i][k] = post.mean[i] + e[i];
                    }
                }
                None => {
                    for i in 0..q {
                        outcomes[i][k] = post.mean[i];
                    }
                }
            }
        }
        pool.truncate(base_front.len());
        pool.extend(outcomes.iter().filter(|y| y.iter().zip(reference).all(|(a, r)| a > r)).cloned());
        let gain = if pool.len() == base_front.len() { 0.0 } else { (hv_any(&pool, reference) - hv_base).max(0.0) };
        sum += gain;
        sum_sq += gain * gain;
    }
    let n = base.n_samples as f64;
    let mean = sum / n;
    let var = if base.n_samples > 1 { ((sum_sq / n - mean * mean) * n / (n - 1.0)).max(0.0) } else { 0.0 };
    Ok((mean, (var / n).sqrt()))
}

fn hv_any(points: &[Vec<f64>], reference: &[f64]) -> f64 {
    if points.is_empty() {
        return 0.0;
    }
    match reference.len() {
        2 => hv2d_sweep(points, reference),
        _ => hv_wfg(points.to_vec(), reference),
    }
}

/// Monte-Carlo qEHVI of `batch` under independent per-objective models.
pub fn qehvi_mc(
    models: &[&GpModel],
    batch: &[Vec<f64>],
    front: &[Vec<f64>],
    reference: &[f64],
    spec: &AcquisitionSpec,
) -> Result<f64> {
    qehvi_mc_with_error(models, batch, front, reference, spec).map(|(v, _)| v)
}

/// [`qehvi_mc`] together with its Monte-Carlo standard error.
pub fn qehvi_mc_with_error(
    models: &[&GpModel],
    batch: &[Vec<f64>],
    front: &[Vec<f64>],
    reference: &[f64],
    spec: &AcquisitionSpec,
) -> Result<(f64, f64)> {
    if batch.is_empty() {
        return Err(Error::InvalidParameter("batch must contain at least one point".into()));
    }
    if spec.mc_samples < 128 {
        return Err(Error::InvalidParameter("qEHVI needs at least 128 Monte-Carlo samples".into()));
    }
    let posteriors = models
        .iter()
        .map(|m| m.predict_joint(batch).map(|(mean, cov)| BatchPosterior { mean, cov }))
        .collect::<Result<Vec<_>>>()?;
    let base = BaseSamples::new(spec.mc_samples, models.len(), batch.len(), spec.seed);
    qehvi_from_posteriors(&posteriors, &base, front, reference, spec.beta)
}

/// Posterior correlation between the latent values at `a` and `b`.
pub fn posterior_correlation(model: &GpModel, a: &[f64], b: &[f64]) -> Result<f64> {
    let (_, cov) = model.predict_joint_standardized(&[a.to_vec(), b.to_vec()])?;
    let denom = (cov[(0, 0)] * cov[(1, 1)]).sqrt();
    if !(denom > 1e-300) {
        return Ok(if a == b { 1.0 } else { 0.0 });
    }
    Ok((cov[(0, 1)] / denom).clamp(-1.0, 1.0))
}

/// Evaluation price as a function of fidelity `s ∈ [0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum CostModel {
    /// `c(s) = c0 + s^exponent` on `[min_fidelity, 1]`.
    Continuous {
        c0: f64,
        exponent: f64,
        #[serde(default)]
        min_fidelity: f64,
    },
    /// A fixed cost per fidelity level; the last level must be 1.
    Discrete { levels: Vec<f64>, costs: Vec<f64> },
}

impl Default for CostModel {
    fn default() -> Self {
        CostModel::Continuous { c0: 0.2, exponent: 2.0, min_fidelity: 0.0 }
    }
}

/// Fidelity search space derived from a cost model.
#[derive(Debug, Clone, PartialEq)]
pub enum FidelityDomain {
    Continuous { lower: f64, upper: f64 },
    Discrete(Vec<f64>),
}

impl CostModel {
    pub fn validate(&self) -> Result<()> {
        match self {
            CostModel::Continuous { c0, exponent, min_fidelity } => {
                if !(c0.is_finite() && exponent.is_finite() && min_fidelity.is_finite()) {
                    return Err(Error::InvalidCostModel("parameters must be finite"));
                }
                if !(*min_fidelity >= 0.0 && *min_fidelity < 1.0) {
                    return Err(Error::InvalidCostModel("min_fidelity must lie in [0, 1)"));
                }
                if *exponent <= 0.0 {
                    return Err(Error::InvalidCostModel("exponent must be positive"));
                }
                let cheapest = c0 + min_fidelity.powf(*exponent);
                if !(*c0 >= 0.0 && cheapest > 0.0) {
                    return Err(Error::InvalidCostModel("all costs must be positive"));
                }
                Ok(())
            }
            CostModel::Discrete { levels, costs } => {
                if levels.is_empty() || levels.len() != costs.len() {
                    return Err(Error::InvalidCostModel("levels and costs must be non-empty and aligned"));
                }
                if !levels.windows(2).all(|w| w[0] < w[1]) {
                    return Err(Error::InvalidCostModel("levels must be strictly increasing"));
                }
                if levels[0] < 0.0 || *levels.last().unwrap() != 1.0 {
                    return Err(Error::InvalidCostModel("levels must lie in [0, 1] and end at 1"));
                }
                if !costs.iter().all(|c| c.is_finite() && *c > 0.0) {
                    return Err(Error::InvalidCostModel("all costs must be positive"));
                }
                Ok(())
            }
        }
    }

    pub fn cost(&self, fidelity: f64) -> Result<f64> {
        match self {
            CostModel::Continuous { c0, exponent, min_fidelity } => {
                if !(fidelity >= *min_fidelity - 1e-12 && fidelity <= 1.0 + 1e-12) {
                    return Err(Error::UnknownFidelity(fidelity));
                }
                Ok(c0 + fidelity.clamp(0.0, 1.0).powf(*exponent))
            }
            CostModel::Discrete { levels, costs } => levels
                .iter()
                .position(|l| (l - fidelity).abs() <= 1e-12)
                .map(|i| costs[i])
                .ok_or(Error::UnknownFidelity(fidelity)),
        }
    }

    pub fn target_fidelity(&self) -> f64 {
        1.0
    }

    pub fn domain(&self) -> FidelityDomain {
        match self {
            CostModel::Continuous { min_fidelity, .. } => FidelityDomain::Continuous { lower: *min_fidelity, upper: 1.0 },
            CostModel::Discrete { levels, .. } => FidelityDomain::Discrete(levels.clone()),
        }
    }

    /// Fidelity domain restricted to evaluations costing at most `limit`.
    /// `None` when nothing is affordable.
    pub fn affordable_domain(&self, limit: f64) -> Option<FidelityDomain> {
        match self {
            CostModel::Continuous { c0, exponent, min_fidelity } => {
                let cheapest = c0 + min_fidelity.powf(*exponent);
                if cheapest > limit {
                    return None;
                }
                let upper = if c0 + 1.0 <= limit { 1.0 } else { (limit - c0).max(0.0).powf(1.0 / exponent).min(1.0) };
                Some(FidelityDomain::Continuous { lower: *min_fidelity, upper: upper.max(*min_fidelity) })
            }
            CostModel::Discrete { levels, costs } => {
                let lv: Vec<f64> = levels.iter().zip(costs).filter(|(_, c)| **c <= limit).map(|(l, _)| *l).collect();
                if lv.is_empty() {
                    None
                } else {
                    Some(FidelityDomain::Discrete(lv))
                }
            }
        }
    }

    /// Cost of the cheapest evaluation.
    pub fn min_cost(&self) -> f64 {
        match self {
            CostModel::Continuous { c0, exponent, min_fidelity } => c0 + min_fidelity.powf(*exponent),
            CostModel::Discrete { costs, .. } => costs.iter().cloned().fold(f64::INFINITY, f64::min),
        }
    }
}

/// `acq_value / c(fidelity)`.
pub fn cost_weighted(acq_value: f64, fidelity: f64, model: &CostModel) -> Result<f64> {
    Ok(acq_value / model.cost(fidelity)?)
}

/// One point returned by [`optimize_acquisition`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub x: Vec<f64>,
    pub fidelity: Option<f64>,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerConfig {
    pub n_seeds: usize,
    pub n_refine: usize,
    pub nm_iters: usize,
    pub seed: u64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig { n_seeds: 1024, n_refine: 16, nm_iters: 60, seed: 0 }
    }
}

fn sobol_seed(seed: u64) -> u32 {
    (seed ^ (seed >> 32)) as u32
}

/// Maximizes `score(x, fidelity, chosen)` over a box and fidelity domain.
///
/// Each of the `q` picks scores scrambled Sobol seeds, refines the best
/// `n_refine` with bounded Nelder–Mead and keeps the winner; later picks see
/// earlier ones through `chosen`. Results are sorted by score, descending.
/// Non-finite scores are treated as −∞.
pub fn optimize_acquisition<F>(
    mut score: F,
    bounds: &[(f64, f64)],
    q: usize,
    fidelity: Option<&FidelityDomain>,
    config: &OptimizerConfig,
) -> Vec<Candidate>
where
    F: FnMut(&[f64], Option<f64>, &[Candidate]) -> f64,
{
    let d = bounds.len();
    let continuous_s = match fidelity {
        Some(FidelityDomain::Continuous { lower, upper }) => Some((*lower, *upper)),
        _ => None,
    };
    let levels: Vec<Option<f64>> = match fidelity {
        Some(FidelityDomain::Discrete(l)) => l.iter().map(|v| Some(*v)).collect(),
        _ => vec![None],
    };
    // search box: inputs, plus the fidelity coordinate when continuous
    let mut search: Vec<(f64, f64)> = bounds.to_vec();
    if let Some(s) = continuous_s {
        search.push(s);
    }
    let base_seed = sobol_seed(config.seed);

    let mut chosen: Vec<Candidate> = Vec::with_capacity(q);
    for pick in 0..q {
        let mut eval = |z: &[f64], level: Option<f64>, chosen: &[Candidate]| -> f64 {
            let (x, s) = match continuous_s {
                Some(_) => (&z[..d], Some(z[d])),
                None => (z, level),
            };
            let v = score(x, s, chosen);
            if v.is_finite() {
                v
            } else {
                f64::NEG_INFINITY
            }
        };
        let scramble = base_seed.wrapping_add((pick as u32).wrapping_mul(0x9E37_79B9));
        let mut scored: Vec<(f64, Vec<f64>, Option<f64>)> = Vec::with_capacity(config.n_seeds * levels.len());
        for i in 0..config.n_seeds {
            let z: Vec<f64> = search
                .iter()
                .enumerate()
                .map(|(k, (lo, hi))| {
                    let u = sobol_burley::sample(i as u32, k as u32, scramble) as f64;
                    lo + u * (hi - lo)
                })
                .collect();
            for level in &levels {
                let v = eval(&z, *level, &chosen);
                scored.push((v, z.clone(), *level));
            }
        }
        scored.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap_or(Ordering::Equal));
        let mut best: Option<(f64, Vec<f64>, Option<f64>)> = scored.first().cloned();
        for (v0, z0, level) in scored.into_iter().take(config.n_refine) {
            let (v, z) = nelder_mead(|z| eval(z, level, &chosen), z0, v0, &search, config.nm_iters);
            if best.as_ref().map_or(true, |b| v > b.0) {
                best = Some((v, z, level));
            }
        }
        let Some((v, z, level)) = best else { break };
        let (x, s) = match continuous_s {
            Some(_) => (z[..d].to_vec(), Some(z[d])),
            None => (z, level),
        };
        chosen.push(Candidate { x, fidelity: s, value: v });
    }
    chosen.sort_by(|a, b| b.value.partial_cmp(&a.value).unwrap_or(Ordering::Equal));
    chosen
}

fn clamp_into(z: &mut [f64], bounds: &[(f64, f64)]) {
    for (v, (lo, hi)) in z.iter_mut().zip(bounds) {
        *v = v.clamp(*lo, *hi);
    }
}

/// Bounded Nelder–Mead (maximizing); trial points are clamped into the box.
fn nelder_mead<F: FnMut(&[f64]) -> f64>(
    mut f: F,
    start: Vec<f64>,
    start_value: f64,
    bounds: &[(f64, f64)],
    iters: usize,
) -> (f64, Vec<f64>) {
    let n = start.len();
    if n == 0 || iters == 0 {
        return (start_value, start);
    }
    let mut simplex: Vec<(f64, Vec<f64>)> = Vec::with_capacity(n + 1);
    simplex.push((start_value, start.clone()));
    for k in 0..n {
        let (lo, hi) = bounds[k];
        let step = 0.05 * (hi - lo);
        let mut p = start.clone();
        p[k] = if p[k] + step <= hi { p[k] + step } else { p[k] - step };
        clamp_into(&mut p, bounds);
        let v = f(&p);
        simplex.push((v, p));
    }
    let by_value_desc = |a: &(f64, Vec<f64>), b: &(f64, Vec<f64>)| b.0.partial_cmp(&a.0).unwrap_or(Ordering::Equal);
    for _ in 0..iters {
        simplex.sort_by(by_value_desc);
        let worst = simplex[n].clone();
        let mut centroid = vec![0.0; n];
        for (_, p) in &simplex[..n] {
            for (c, v) in centroid.iter_mut().zip(p) {
                *c += v / n as f64;
            }
        }
        let along = |t: f64| -> Vec<f64> {
            let mut p: Vec<f64> = centroid.iter().zip(&worst.1).map(|(c, w)| c + t * (c - w)).collect();
            clamp_into(&mut p, bounds);
            p
        };
        let xr = along(1.0);
        let fr = f(&xr);
        if fr > simplex[0].0 {
            let xe = along(2.0);
            let fe = f(&xe);
            simplex[n] = if fe > fr { (fe, xe) } else { (fr, xr) };
        } else if fr > simplex[n - 1].0 {
            simplex[n] = (fr, xr);
        } else {
            let xc = if fr > worst.0 { along(0.5) } else { along(-0.5) };
            let fc = f(&xc);
            if fc > worst.0.max(fr) {
                simplex[n] = (fc, xc);
            } else {
                let best = simplex[0].1.clone();
                for entry in simplex.iter_mut().skip(1) {
                    let mut p: Vec<f64> = best.iter().zip(&entry.1).map(|(b, v)| b + 0.5 * (v - b)).collect();
                    clamp_into(&mut p, bounds);
                    let v = f(&p);
                    *entry = (v, p);
                }
            }
        }
    }
    simplex.sort_by(by_value_desc);
    let (v, p) = simplex.swap_remove(0);
    (v, p)
}
