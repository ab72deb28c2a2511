//! Exact Gaussian-process regression.
//!
//! Inputs are min–max normalized to the unit box (using caller supplied
//! bounds when available) and targets are standardized. Hyperparameters live
//! in log space and are fitted by multi-start projected gradient ascent on the
//! log marginal likelihood.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

#[cfg(not(feature = "std"))]
use num_traits::Float;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::linalg::{dot, Cholesky, Matrix};
use crate::{Error, Result};

/// Noise floor on standardized targets.
pub const NOISE_FLOOR: f64 = 1e-6;
pub const NOISE_MAX: f64 = 1e1;
pub const SCALE_MIN: f64 = 1e-3;
pub const SCALE_MAX: f64 = 1e3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelFamily {
    #[default]
    Matern52,
    Rbf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelConfig {
    pub family: KernelFamily,
    /// One lengthscale per input dimension (ARD), in normalized input units.
    pub lengthscales: Vec<f64>,
    pub signal_variance: f64,
    pub noise_variance: f64,
}

impl KernelConfig {
    pub fn new(family: KernelFamily, dim: usize) -> Self {
        KernelConfig { family, lengthscales: vec![0.5; dim], signal_variance: 1.0, noise_variance: 1e-3 }
    }

    pub fn dim(&self) -> usize {
        self.lengthscales.len()
    }

    /// `[ln ℓ_1 .. ln ℓ_d, ln σ_f², ln σ_n²]`.
    pub fn to_log_params(&self) -> Vec<f64> {
        let mut p: Vec<f64> = self.lengthscales.iter().map(|l| l.ln()).collect();
        p.push(self.signal_variance.ln());
        p.push(self.noise_variance.ln());
        p
    }

    pub fn from_log_params(family: KernelFamily, p: &[f64]) -> Self {
        let d = p.len() - 2;
        KernelConfig {
            family,
            lengthscales: p[..d].iter().map(|v| v.exp()).collect(),
            signal_variance: p[d].exp(),
            noise_variance: p[d + 1].exp(),
        }
    }

    /// Checks the hyperparameter box used during fitting.
    pub fn check_bounds(&self) -> Result<()> {
        let in_scale = |v: f64| (SCALE_MIN..=SCALE_MAX).contains(&v);
        if !self.lengthscales.iter().all(|&l| in_scale(l)) || !in_scale(self.signal_variance) {
            return Err(Error::InvalidParameter(format!(
                "lengthscales and signal variance must lie in [{SCALE_MIN}, {SCALE_MAX}]"
            )));
        }
        if !(NOISE_FLOOR..=NOISE_MAX).contains(&self.noise_variance) {
            return Err(Error::InvalidParameter(format!(
                "noise variance must lie in [{NOISE_FLOOR}, {NOISE_MAX}]"
            )));
        }
        Ok(())
    }

    fn log_bounds(dim: usize) -> (Vec<f64>, Vec<f64>) {
        let mut lo = vec![SCALE_MIN.ln(); dim + 1];
        let mut hi = vec![SCALE_MAX.ln(); dim + 1];
        lo.push(NOISE_FLOOR.ln());
        hi.push(NOISE_MAX.ln());
        (lo, hi)
    }

    /// Kernel value from the per-dimension scaled squared distance `r2`.
    #[inline]
    fn eval_r2(&self, r2: f64) -> f64 {
        match self.family {
            KernelFamily::Matern52 => {
                let r = r2.sqrt();
                let s5r = 5.0f64.sqrt() * r;
                self.signal_variance * (1.0 + s5r + 5.0 * r2 / 3.0) * (-s5r).exp()
            }
            KernelFamily::Rbf => self.signal_variance * (-0.5 * r2).exp(),
        }
    }

    /// Factor `g` such that `∂k/∂ln ℓ_i = g · (Δ_i/ℓ_i)²`.
    #[inline]
    fn lengthscale_factor(&self, r2: f64, k: f64) -> f64 {
        match self.family {
            KernelFamily::Matern52 => {
                let s5r = 5.0f64.sqrt() * r2.sqrt();
                self.signal_variance * (5.0 / 3.0) * (1.0 + s5r) * (-s5r).exp()
            }
            KernelFamily::Rbf => k,
        }
    }

    #[inline]
    fn scaled_r2(&self, a: &[f64], b: &[f64]) -> f64 {
        a.iter()
            .zip(b)
            .zip(&self.lengthscales)
            .map(|((x, y), l)| {
                let t = (x - y) / l;
                t * t
            })
            .sum()
    }

    /// Covariance between two normalized inputs, without observation noise.
    pub fn covariance(&self, a: &[f64], b: &[f64]) -> f64 {
        self.eval_r2(self.scaled_r2(a, b))
    }
}

/// Affine maps between raw and model units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Normalization {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub y_mean: f64,
    pub y_scale: f64,
}

impl Normalization {
    pub fn to_unit(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .map(|(v, (lo, hi))| (v - lo) / (hi - lo))
            .collect()
    }

    pub fn from_unit(&self, u: &[f64]) -> Vec<f64> {
        u.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .map(|(v, (lo, hi))| lo + v * (hi - lo))
            .collect()
    }
}

/// Options for [`fit_gp`].
#[derive(Debug, Clone, PartialEq)]
pub struct FitOptions {
    pub family: KernelFamily,
    /// Per-dimension input bounds used for normalization; data range otherwise.
    pub bounds: Option<Vec<(f64, f64)>>,
    /// When set, skip the search and use these hyperparameters verbatim.
    pub fixed: Option<KernelConfig>,
    pub restarts: usize,
    pub max_iter: usize,
    pub grad_tol: f64,
    pub seed: u64,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            family: KernelFamily::Matern52,
            bounds: None,
            fixed: None,
            restarts: 8,
            max_iter: 200,
            grad_tol: 1e-5,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GpModel {
    inputs: Matrix,
    targets: Vec<f64>,
    kernel: KernelConfig,
    factor: Cholesky,
    alpha: Vec<f64>,
    normalization: Normalization,
    degenerate: bool,
    log_marginal_likelihood: f64,
}

/// Posterior marginals in original target units.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct PosteriorSlice {
    pub mean: Vec<f64>,
    pub variance: Vec<f64>,
}

/// Compact, serializable description of a fitted model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSnapshot {
    pub kernel: KernelConfig,
    pub normalization: Normalization,
    pub n: usize,
    pub d: usize,
    pub degenerate: bool,
    pub log_marginal_likelihood: f64,
    /// FNV-1a over the bit patterns of the training inputs and targets.
    pub data_digest: u64,
}

/// Builds the noisy training covariance.
fn training_covariance(x: &Matrix, kernel: &KernelConfig) -> Matrix {
    let n = x.rows();
    let mut k = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let v = kernel.covariance(x.row(i), x.row(j));
            k[(i, j)] = v;
            k[(j, i)] = v;
        }
        k[(i, i)] += kernel.noise_variance;
    }
    k
}

/// Log marginal likelihood of standardized targets `y` at normalized inputs
/// `x`, with its gradient with respect to the log hyperparameters
/// `[ln ℓ.., ln σ_f², ln σ_n²]`.
///
/// Lengthscales and signal variance must be positive and the noise variance
/// non-negative; a zero noise is accepted so degenerate designs can exercise
/// the jitter path.
pub fn log_marginal_likelihood(x: &Matrix, y: &[f64], kernel: &KernelConfig) -> Result<(f64, Vec<f64>)> {
    let (value, grad, _) = lml_impl(x, y, kernel, true)?;
    Ok((value, grad))
}

/// Same as [`log_marginal_likelihood`] but also reports the jitter needed.
pub fn log_marginal_likelihood_with_jitter(
    x: &Matrix,
    y: &[f64],
    kernel: &KernelConfig,
) -> Result<(f64, Vec<f64>, f64)> {
    lml_impl(x, y, kernel, true)
}

fn check_kernel_args(x: &Matrix, y: &[f64], kernel: &KernelConfig) -> Result<()> {
    if x.rows() != y.len() {
        return Err(Error::DimensionMismatch { expected: x.rows(), got: y.len() });
    }
    if kernel.dim() != x.cols() {
        return Err(Error::DimensionMismatch { expected: x.cols(), got: kernel.dim() });
    }
    let ok = kernel.lengthscales.iter().all(|l| l.is_finite() && *l > 0.0)
        && kernel.signal_variance.is_finite()
        && kernel.signal_variance > 0.0
        && kernel.noise_variance.is_finite()
        && kernel.noise_variance >= 0.0;
    if !ok {
        return Err(Error::InvalidParameter("kernel hyperparameters must be positive and finite".into()));
    }
    Ok(())
}

fn lml_impl(x: &Matrix, y: &[f64], kernel: &KernelConfig, with_grad: bool) -> Result<(f64, Vec<f64>, f64)> {
    check_kernel_args(x, y, kernel)?;
    let n = x.rows();
    let d = x.cols();
    let k = training_covariance(x, kernel);
    let chol = Cholesky::with_jitter(&k)?;
    let alpha = chol.solve(y);
    let value = -0.5 * dot(y, &alpha) - 0.5 * chol.log_det() - 0.5 * n as f64 * (2.0 * PI).ln();
    if !with_grad {
        return Ok((value, Vec::new(), chol.jitter()));
    }
    let kinv = chol.inverse();
    let mut grad = vec![0.0; d + 2];
    let mut diff2 = vec![0.0; d];
    for i in 0..n {
        for j in 0..=i {
            let w = alpha[i] * alpha[j] - kinv[(i, j)];
            // off-diagonal entries appear twice in the symmetric sum
            let mult = if i == j { 0.5 } else { 1.0 };
            let (xi, xj) = (x.row(i), x.row(j));
            let mut r2 = 0.0;
            for t in 0..d {
                let s = (xi[t] - xj[t]) / kernel.lengthscales[t];
                diff2[t] = s * s;
                r2 += diff2[t];
            }
            let kv = kernel.eval_r2(r2);
            let g = kernel.lengthscale_factor(r2, kv);
            for t in 0..d {
                grad[t] += mult * w * g * diff2[t];
            }
            grad[d] += mult * w * kv;
            if i == j {
                grad[d + 1] += 0.5 * w * kernel.noise_variance;
            }
        }
    }
    Ok((value, grad, chol.jitter()))
}

fn fnv1a(words: impl Iterator<Item = u64>) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for w in words {
        for b in w.to_le_bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
    }
    h
}

fn validate_training(x: &[Vec<f64>], y: &[f64]) -> Result<usize> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch { expected: x.len(), got: y.len() });
    }
    if x.len() < 2 {
        return Err(Error::InsufficientData { needed: 2, got: x.len() });
    }
    let d = x[0].len();
    if d == 0 {
        return Err(Error::InvalidParameter("inputs need at least one dimension".into()));
    }
    for row in x {
        if row.len() != d {
            return Err(Error::DimensionMismatch { expected: d, got: row.len() });
        }
        if !row.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite("training inputs"));
        }
    }
    if !y.iter().all(|v| v.is_finite()) {
        return Err(Error::NonFinite("training targets"));
    }
    Ok(d)
}

/// Fits a GP to `(x, y)`.
///
/// Constant targets do not fail: the model is flagged degenerate, the signal
/// variance sits at its lower bound and predictions equal the constant.
pub fn fit_gp(x: &[Vec<f64>], y: &[f64], opts: &FitOptions) -> Result<GpModel> {
    let d = validate_training(x, y)?;
    let (lower, upper): (Vec<f64>, Vec<f64>) = match &opts.bounds {
        Some(b) => {
            if b.len() != d {
                return Err(Error::DimensionMismatch { expected: d, got: b.len() });
            }
            b.iter().map(|&(lo, hi)| if hi > lo { (lo, hi) } else { (lo, lo + 1.0) }).unzip()
        }
        None => (0..d)
            .map(|t| {
                let lo = x.iter().map(|r| r[t]).fold(f64::INFINITY, f64::min);
                let hi = x.iter().map(|r| r[t]).fold(f64::NEG_INFINITY, f64::max);
                if hi > lo {
                    (lo, hi)
                } else {
                    (lo, lo + 1.0)
                }
            })
            .unzip(),
    };
    let n = y.len() as f64;
    let y_mean = y.iter().sum::<f64>() / n;
    let var = y.iter().map(|v| (v - y_mean) * (v - y_mean)).sum::<f64>() / n;
    let sd = var.sqrt();
    let degenerate = !(sd > 1e-12 * y_mean.abs().max(1.0));
    let y_scale = if degenerate { 1.0 } else { sd };
    let normalization = Normalization { lower, upper, y_mean, y_scale };
    let inputs = Matrix::from_rows(&x.iter().map(|r| normalization.to_unit(r)).collect::<Vec<_>>());
    let targets: Vec<f64> = if degenerate { vec![0.0; y.len()] } else { y.iter().map(|v| (v - y_mean) / y_scale).collect() };

    let kernel = if let Some(fixed) = &opts.fixed {
        if fixed.dim() != d {
            return Err(Error::DimensionMismatch { expected: d, got: fixed.dim() });
        }
        fixed.clone()
    } else if degenerate {
        KernelConfig { family: opts.family, lengthscales: vec![1.0; d], signal_variance: SCALE_MIN, noise_variance: NOISE_FLOOR }
    } else {
        search_hyperparameters(&inputs, &targets, opts)?
    };
    GpModel::assemble(inputs, targets, kernel, normalization, degenerate)
}

/// Multi-start projected gradient ascent in log space with backtracking.
fn search_hyperparameters(x: &Matrix, y: &[f64], opts: &FitOptions) -> Result<KernelConfig> {
    let d = x.cols();
    let family = opts.family;
    let (lo, hi) = KernelConfig::log_bounds(d);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut best: Option<(f64, Vec<f64>)> = None;
    for restart in 0..opts.restarts.max(1) {
        let start: Vec<f64> = if restart == 0 {
            KernelConfig::new(family, d).to_log_params()
        } else {
            let mut p: Vec<f64> = (0..d).map(|_| rng.random_range(0.05f64.ln()..2.0f64.ln())).collect();
            p.push(rng.random_range(0.2f64.ln()..5.0f64.ln()));
            p.push(rng.random_range(NOISE_FLOOR.ln()..0.1f64.ln()));
            p
        };
        if let Ok((value, params)) = ascend(x, y, family, start, &lo, &hi, opts) {
            if best.as_ref().map_or(true, |(b, _)| value > *b) {
                best = Some((value, params));
            }
        }
    }
    let (_, params) = best.ok_or(Error::NotPositiveDefinite)?;
    Ok(KernelConfig::from_log_params(family, &params))
}

fn project(p: &mut [f64], lo: &[f64], hi: &[f64]) {
    for ((v, l), h) in p.iter_mut().zip(lo).zip(hi) {
        *v = v.clamp(*l, *h);
    }
}

/// Gradient with components that push against an active bound zeroed.
fn projected_gradient(p: &[f64], g: &[f64], lo: &[f64], hi: &[f64]) -> Vec<f64> {
    p.iter()
        .zip(g)
        .zip(lo.iter().zip(hi))
        .map(|((&v, &gv), (&l, &h))| if (v <= l && gv < 0.0) || (v >= h && gv > 0.0) { 0.0 } else { gv })
        .collect()
}

fn ascend(
    x: &Matrix,
    y: &[f64],
    family: KernelFamily,
    mut p: Vec<f64>,
    lo: &[f64],
    hi: &[f64],
    opts: &FitOptions,
) -> Result<(f64, Vec<f64>)> {
    project(&mut p, lo, hi);
    let eval = |p: &[f64], grad: bool| lml_impl(x, y, &KernelConfig::from_log_params(family, p), grad);
    let (mut f, mut g, _) = eval(&p, true)?;
    let mut step = 0.1;
    let mut prev: Option<(Vec<f64>, Vec<f64>)> = None;
    for _ in 0..opts.max_iter {
        let pg = projected_gradient(&p, &g, lo, hi);
        if pg.iter().fold(0.0f64, |m, v| m.max(v.abs())) <= opts.grad_tol {
            break;
        }
        // Barzilai–Borwein trial step, then Armijo backtracking.
        if let Some((pp, gp)) = &prev {
            let s: Vec<f64> = p.iter().zip(pp).map(|(a, b)| a - b).collect();
            let yv: Vec<f64> = g.iter().zip(gp).map(|(a, b)| a - b).collect();
            let sy = dot(&s, &yv);
            if sy < 0.0 {
                step = (dot(&s, &s) / -sy).clamp(1e-4, 10.0);
            }
        }
        let mut accepted = None;
        let mut t = step;
        for _ in 0..30 {
            let mut cand: Vec<f64> = p.iter().zip(&g).map(|(v, gv)| v + t * gv).collect();
            project(&mut cand, lo, hi);
            let moved: f64 = cand.iter().zip(&p).zip(&g).map(|((c, v), gv)| (c - v) * gv).sum();
            if let Ok((fc, _, _)) = eval(&cand, false) {
                if fc >= f + 1e-4 * moved && moved > 0.0 {
                    accepted = Some(cand);
                    break;
                }
            }
            t *= 0.5;
        }
        let Some(cand) = accepted else { break };
        let (fc, gc, _) = eval(&cand, true)?;
        prev = Some((core::mem::replace(&mut p, cand), core::mem::replace(&mut g, gc)));
        f = fc;
        step = t;
    }
    Ok((f, p))
}

impl GpModel {
    fn assemble(
        inputs: Matrix,
        targets: Vec<f64>,
        kernel: KernelConfig,
        normalization: Normalization,
        degenerate: bool,
    ) -> Result<GpModel> {
        let k = training_covariance(&inputs, &kernel);
        let factor = Cholesky::with_jitter(&k)?;
        let alpha = factor.solve(&targets);
        let n = targets.len();
        let lml = -0.5 * dot(&targets, &alpha) - 0.5 * factor.log_det() - 0.5 * n as f64 * (2.0 * PI).ln();
        Ok(GpModel { inputs, targets, kernel, factor, alpha, normalization, degenerate, log_marginal_likelihood: lml })
    }

    pub fn kernel(&self) -> &KernelConfig {
        &self.kernel
    }

    pub fn normalization(&self) -> &Normalization {
        &self.normalization
    }

    /// Training inputs in unit-box coordinates.
    pub fn normalized_inputs(&self) -> &Matrix {
        &self.inputs
    }

    /// Standardized training targets.
    pub fn standardized_targets(&self) -> &[f64] {
        &self.targets
    }

    pub fn factor(&self) -> &Cholesky {
        &self.factor
    }

    pub fn is_degenerate(&self) -> bool {
        self.degenerate
    }

    pub fn dim(&self) -> usize {
        self.inputs.cols()
    }

    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    pub fn log_marginal_likelihood(&self) -> f64 {
        self.log_marginal_likelihood
    }

    /// Log marginal likelihood and gradient of this model's data under other
    /// hyperparameters.
    pub fn log_marginal_likelihood_at(&self, kernel: &KernelConfig) -> Result<(f64, Vec<f64>)> {
        kernel.check_bounds()?;
        log_marginal_likelihood(&self.inputs, &self.targets, kernel)
    }

    pub fn snapshot(&self) -> ModelSnapshot {
        let digest = fnv1a(self.inputs.as_slice().iter().chain(&self.targets).map(|v| v.to_bits()));
        ModelSnapshot {
            kernel: self.kernel.clone(),
            normalization: self.normalization.clone(),
            n: self.len(),
            d: self.dim(),
            degenerate: self.degenerate,
            log_marginal_likelihood: self.log_marginal_likelihood,
            data_digest: digest,
        }
    }

    fn check_query(&self, xq: &[Vec<f64>]) -> Result<()> {
        for row in xq {
            if row.len() != self.dim() {
                return Err(Error::DimensionMismatch { expected: self.dim(), got: row.len() });
            }
            if !row.iter().all(|v| v.is_finite()) {
                return Err(Error::NonFinite("query inputs"));
            }
        }
        Ok(())
    }

    fn cross_cov(&self, u: &[f64]) -> Vec<f64> {
        (0..self.len()).map(|i| self.kernel.covariance(self.inputs.row(i), u)).collect()
    }

    /// Latent posterior at one raw point in standardized units: `(mean, variance)`.
    pub fn predict_standardized(&self, x: &[f64]) -> (f64, f64) {
        let u = self.normalization.to_unit(x);
        let mut ks = self.cross_cov(&u);
        let mean = dot(&ks, &self.alpha);
        self.factor.solve_lower_in_place(&mut ks);
        let var = (self.kernel.signal_variance - dot(&ks, &ks)).max(0.0);
        (mean, var)
    }

    /// Posterior mean and standard deviation at one raw point, original units.
    pub fn predict_one(&self, x: &[f64]) -> (f64, f64) {
        let (m, v) = self.predict_standardized(x);
        let s = self.normalization.y_scale;
        (self.normalization.y_mean + s * m, s * v.sqrt())
    }

    /// Latent posterior marginals (no observation noise) in original units.
    pub fn predict(&self, xq: &[Vec<f64>]) -> Result<PosteriorSlice> {
        self.check_query(xq)?;
        let s2 = self.normalization.y_scale * self.normalization.y_scale;
        let mut out = PosteriorSlice { mean: Vec::with_capacity(xq.len()), variance: Vec::with_capacity(xq.len()) };
        for x in xq {
            let (m, v) = self.predict_standardized(x);
            out.mean.push(self.normalization.y_mean + self.normalization.y_scale * m);
            out.variance.push(v * s2);
        }
        Ok(out)
    }

    /// Joint latent posterior in standardized units: mean vector and covariance.
    pub fn predict_joint_standardized(&self, xq: &[Vec<f64>]) -> Result<(Vec<f64>, Matrix)> {
        self.check_query(xq)?;
        let m = xq.len();
        let units: Vec<Vec<f64>> = xq.iter().map(|x| self.normalization.to_unit(x)).collect();
        let mut vs = Vec::with_capacity(m);
        let mut mean = Vec::with_capacity(m);
        for u in &units {
            let mut ks = self.cross_cov(u);
            mean.push(dot(&ks, &self.alpha));
            self.factor.solve_lower_in_place(&mut ks);
            vs.push(ks);
        }
        let mut cov = Matrix::zeros(m, m);
        for i in 0..m {
            for j in 0..=i {
                let c = self.kernel.covariance(&units[i], &units[j]) - dot(&vs[i], &vs[j]);
                cov[(i, j)] = c;
                cov[(j, i)] = c;
            }
            cov[(i, i)] = cov[(i, i)].max(0.0);
        }
        Ok((mean, cov))
    }

    /// Joint latent posterior in original units.
    pub fn predict_joint(&self, xq: &[Vec<f64>]) -> Result<(Vec<f64>, Matrix)> {
        let (mean, mut cov) = self.predict_joint_standardized(xq)?;
        let s = self.normalization.y_scale;
        let mean = mean.iter().map(|m| self.normalization.y_mean + s * m).collect();
        for i in 0..cov.rows() {
            for v in cov.row_mut(i) {
                *v *= s * s;
            }
        }
        Ok((mean, cov))
    }

    /// Draws `n_samples` joint posterior samples at `xq` (rows are samples).
    ///
    /// The same seed always yields the same samples.
    pub fn sample_posterior(&self, xq: &[Vec<f64>], n_samples: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
        if n_samples == 0 {
            return Err(Error::InvalidParameter("n_samples must be at least 1".into()));
        }
        let (mean, cov) = self.predict_joint_standardized(xq)?;
        let m = mean.len();
        let zero = (0..m).all(|i| cov[(i, i)] <= 0.0);
        let chol = if zero || m == 0 { None } else { Some(Cholesky::with_jitter(&cov)?) };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (ym, ys) = (self.normalization.y_mean, self.normalization.y_scale);
        let mut out = Vec::with_capacity(n_samples);
        let mut z = vec![0.0; m];
        for _ in 0..n_samples {
            for v in z.iter_mut() {
                *v = rng.sample(StandardNormal);
            }
            let row = match &chol {
                Some(c) => c.mul_lower(&z).iter().zip(&mean).map(|(e, mu)| ym + ys * (mu + e)).collect(),
                None => mean.iter().map(|mu| ym + ys * mu).collect(),
            };
            out.push(row);
        }
        Ok(out)
    }
}
