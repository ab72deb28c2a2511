//! Analytic test functions with known optima.
//!
//! Single-objective functions take inputs in their natural domain. The
//! two-objective pairs share one input in the unit box, each component being
//! affinely rescaled to its own domain. All functions here are minimized.
//!
//! Any benchmark can be fidelity-augmented: `f(x, s) = f(x, 1) + (1 − s)·B(x)`
//! where `B` is a fixed low-frequency cosine field whose amplitude is 10% of
//! the objective's range.

use alloc::string::ToString;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::{E, PI};

#[cfg(not(feature = "std"))]
use num_traits::Float;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::acquisition::CostModel;
use crate::pareto::Direction;
use crate::{Error, Result};

/// A listed optimizer: evaluating objective `objective` at `x` gives `value`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Optimum {
    pub objective: usize,
    pub x: Vec<f64>,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkDef {
    pub name: &'static str,
    pub dim: usize,
    pub bounds: Vec<(f64, f64)>,
    pub objectives: usize,
    pub directions: Vec<Direction>,
    pub optima: Vec<Optimum>,
    /// Absolute tolerance to which the listed optima are reproduced.
    pub optimum_tolerance: f64,
    /// Per-objective value range over the domain; scales the fidelity bias.
    pub ranges: Vec<f64>,
    /// Accepts any input dimension, each coordinate sharing `bounds[0]`.
    pub any_dim: bool,
}

impl BenchmarkDef {
    pub fn is_multi_objective(&self) -> bool {
        self.objectives > 1
    }

    /// Bounds for an input of dimension `d`.
    pub fn bounds_for(&self, d: usize) -> Vec<(f64, f64)> {
        if self.any_dim {
            vec![self.bounds[0]; d]
        } else {
            self.bounds.clone()
        }
    }

    /// Evaluates at the target fidelity.
    pub fn eval(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_point(self, x)?;
        Ok(raw_eval(self.name, x))
    }

    /// Evaluates at fidelity `s ∈ [0, 1]`.
    pub fn eval_at_fidelity(&self, x: &[f64], s: f64) -> Result<Vec<f64>> {
        if !(0.0..=1.0).contains(&s) {
            return Err(Error::UnknownFidelity(s));
        }
        let mut y = self.eval(x)?;
        if s < 1.0 {
            let b = self.fidelity_bias(x);
            for (v, bias) in y.iter_mut().zip(b) {
                *v += (1.0 - s) * bias;
            }
        }
        Ok(y)
    }

    /// The bias field `B(x)` for each objective.
    pub fn fidelity_bias(&self, x: &[f64]) -> Vec<f64> {
        let u: Vec<f64> = x.iter().zip(self.bounds_for(x.len())).map(|(v, (lo, hi))| (v - lo) / (hi - lo)).collect();
        (0..self.objectives)
            .map(|k| {
                let mut rng = ChaCha8Rng::seed_from_u64(name_seed(self.name) ^ (k as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
                let mut acc = 0.0;
                for _ in 0..BIAS_TERMS {
                    let mut phase = rng.random_range(0.0..2.0 * PI);
                    for ui in &u {
                        let freq: f64 = rng.random_range(0.5..1.5);
                        phase += 2.0 * PI * freq * ui;
                    }
                    acc += phase.cos();
                }
                0.1 * self.ranges[k] * acc / BIAS_TERMS as f64
            })
            .collect()
    }
}

const BIAS_TERMS: usize = 3;

fn name_seed(name: &str) -> u64 {
    name.bytes().fold(0xcbf2_9ce4_8422_2325u64, |h, b| (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01b3))
}

fn check_point(def: &BenchmarkDef, x: &[f64]) -> Result<()> {
    if x.len() != def.dim && !(def.any_dim && !x.is_empty()) {
        return Err(Error::DimensionMismatch { expected: def.dim, got: x.len() });
    }
    for (index, (&value, (lower, upper))) in x.iter().zip(def.bounds_for(x.len())).enumerate() {
        if !value.is_finite() {
            return Err(Error::NonFinite("benchmark input"));
        }
        let slack = 1e-12 * (upper - lower);
        if value < lower - slack || value > upper + slack {
            return Err(Error::OutOfBounds { index, value, lower, upper });
        }
    }
    Ok(())
}

pub fn branin(x1: f64, x2: f64) -> f64 {
    let b = 5.1 / (4.0 * PI * PI);
    let c = 5.0 / PI;
    let t = 1.0 / (8.0 * PI);
    (x2 - b * x1 * x1 + c * x1 - 6.0).powi(2) + 10.0 * (1.0 - t) * x1.cos() + 10.0
}

pub fn currin(x1: f64, x2: f64) -> f64 {
    // x2 = 0 gives exp(-inf) = 0, so the factor is 1
    let factor = 1.0 - (-1.0 / (2.0 * x2)).exp();
    factor * (2300.0 * x1.powi(3) + 1900.0 * x1 * x1 + 2092.0 * x1 + 60.0)
        / (100.0 * x1.powi(3) + 500.0 * x1 * x1 + 4.0 * x1 + 20.0)
}

pub fn goldstein_price(x1: f64, x2: f64) -> f64 {
    let a = 1.0
        + (x1 + x2 + 1.0).powi(2)
            * (19.0 - 14.0 * x1 + 3.0 * x1 * x1 - 14.0 * x2 + 6.0 * x1 * x2 + 3.0 * x2 * x2);
    let b = 30.0
        + (2.0 * x1 - 3.0 * x2).powi(2)
            * (18.0 - 32.0 * x1 + 12.0 * x1 * x1 + 48.0 * x2 - 36.0 * x1 * x2 + 27.0 * x2 * x2);
    a * b
}

/// Constant of the Schwefel function: the maximum of `x·sin(√|x|)` on the domain.
const SCHWEFEL_C: f64 = 418.982_887_272_433_8;

pub fn schwefel(x: &[f64]) -> f64 {
    SCHWEFEL_C * x.len() as f64 - x.iter().map(|v| v * v.abs().sqrt().sin()).sum::<f64>()
}

pub fn ackley(x: &[f64]) -> f64 {
    let d = x.len() as f64;
    let sq = x.iter().map(|v| v * v).sum::<f64>() / d;
    let cs = x.iter().map(|v| (2.0 * PI * v).cos()).sum::<f64>() / d;
    -20.0 * (-0.2 * sq.sqrt()).exp() - cs.exp() + 20.0 + E
}

pub fn rastrigin(x: &[f64]) -> f64 {
    10.0 * x.len() as f64 + x.iter().map(|v| v * v - 10.0 * (2.0 * PI * v).cos()).sum::<f64>()
}

pub fn eggholder(x1: f64, x2: f64) -> f64 {
    -(x2 + 47.0) * (x2 + x1 / 2.0 + 47.0).abs().sqrt().sin() - x1 * (x1 - (x2 + 47.0)).abs().sqrt().sin()
}

pub fn booth(x1: f64, x2: f64) -> f64 {
    (x1 + 2.0 * x2 - 7.0).powi(2) + (2.0 * x1 + x2 - 5.0).powi(2)
}

pub fn himmelblau(x1: f64, x2: f64) -> f64 {
    (x1 * x1 + x2 - 11.0).powi(2) + (x1 + x2 * x2 - 7.0).powi(2)
}

const HARTMANN3_A: [[f64; 3]; 4] = [[3.0, 10.0, 30.0], [0.1, 10.0, 35.0], [3.0, 10.0, 30.0], [0.1, 10.0, 35.0]];
const HARTMANN3_P: [[f64; 3]; 4] = [
    [0.3689, 0.1170, 0.2673],
    [0.4699, 0.4387, 0.7470],
    [0.1091, 0.8732, 0.5547],
    [0.0381, 0.5743, 0.8828],
];
const HARTMANN3_ALPHA: [f64; 4] = [1.0, 1.2, 3.0, 3.2];

pub fn hartmann3(x: &[f64]) -> f64 {
    -(0..4)
        .map(|i| {
            let inner: f64 = (0..3).map(|j| HARTMANN3_A[i][j] * (x[j] - HARTMANN3_P[i][j]).powi(2)).sum();
            HARTMANN3_ALPHA[i] * (-inner).exp()
        })
        .sum::<f64>()
}

#[inline]
fn rescale(u: f64, lo: f64, hi: f64) -> f64 {
    lo + u * (hi - lo)
}

fn raw_eval(name: &str, x: &[f64]) -> Vec<f64> {
    match name {
        "branin" => vec![branin(x[0], x[1])],
        "goldstein_price" => vec![goldstein_price(x[0], x[1])],
        "schwefel" => vec![schwefel(x)],
        "ackley" => vec![ackley(x)],
        "rastrigin" => vec![rastrigin(x)],
        "eggholder" => vec![eggholder(x[0], x[1])],
        "booth" => vec![booth(x[0], x[1])],
        "himmelblau" => vec![himmelblau(x[0], x[1])],
        "hartmann3" => vec![hartmann3(x)],
        "currin" => vec![currin(x[0], x[1])],
        "branin_currin" => vec![branin(rescale(x[0], -5.0, 10.0), rescale(x[1], 0.0, 15.0)), currin(x[0], x[1])],
        "booth_rastrigin" => vec![
            booth(rescale(x[0], -10.0, 10.0), rescale(x[1], -10.0, 10.0)),
            rastrigin(&[rescale(x[0], -5.12, 5.12), rescale(x[1], -5.12, 5.12)]),
        ],
        "hartmann_himmelblau" => vec![hartmann3(x), himmelblau(rescale(x[0], -5.0, 5.0), rescale(x[1], -5.0, 5.0))],
        _ => unreachable!("unregistered benchmark {name}"),
    }
}

fn single(
    name: &'static str,
    bounds: Vec<(f64, f64)>,
    optima: Vec<(Vec<f64>, f64)>,
    tolerance: f64,
    range: f64,
) -> BenchmarkDef {
    BenchmarkDef {
        name,
        dim: bounds.len(),
        bounds,
        objectives: 1,
        directions: vec![Direction::Minimize],
        optima: optima.into_iter().map(|(x, value)| Optimum { objective: 0, x, value }).collect(),
        optimum_tolerance: tolerance,
        ranges: vec![range],
        any_dim: matches!(name, "schwefel" | "ackley" | "rastrigin"),
    }
}

fn pair(name: &'static str, dim: usize, optima: Vec<Optimum>, ranges: [f64; 2]) -> BenchmarkDef {
    BenchmarkDef {
        name,
        dim,
        bounds: vec![(0.0, 1.0); dim],
        objectives: 2,
        directions: vec![Direction::Minimize; 2],
        optima,
        optimum_tolerance: 1e-6,
        ranges: ranges.to_vec(),
        any_dim: false,
    }
}

const BRANIN_MIN: f64 = 0.397_887_357_729_738_16;
const HARTMANN3_ARGMIN: [f64; 3] = [0.114_588_881_225_412_87, 0.555_648_895_473_937_1, 0.852_546_984_217_274_6];
const HARTMANN3_MIN: f64 = -3.862_779_787_332_663;

/// All registered benchmarks. Value ranges were measured on dense grid scans.
pub fn registry() -> Vec<BenchmarkDef> {
    let schwefel_star = 420.968_746_359_982;
    vec![
        single(
            "branin",
            vec![(-5.0, 10.0), (0.0, 15.0)],
            vec![(vec![-PI, 12.275], BRANIN_MIN), (vec![PI, 2.275], BRANIN_MIN), (vec![3.0 * PI, 2.475], BRANIN_MIN)],
            1e-6,
            307.73,
        ),
        single("goldstein_price", vec![(-2.0, 2.0); 2], vec![(vec![0.0, -1.0], 3.0)], 1e-9, 1_015_685.77),
        single("schwefel", vec![(-500.0, 500.0); 2], vec![(vec![schwefel_star; 2], 0.0)], 1e-6, 1675.46),
        single("ackley", vec![(-32.768, 32.768); 2], vec![(vec![0.0; 2], 0.0)], 1e-6, 22.32),
        single("rastrigin", vec![(-5.12, 5.12); 2], vec![(vec![0.0; 2], 0.0)], 1e-6, 80.70),
        single("eggholder", vec![(-512.0, 512.0); 2], vec![(vec![512.0, 404.2319], -959.6407)], 1e-3, 2008.77),
        single("booth", vec![(-10.0, 10.0); 2], vec![(vec![1.0, 3.0], 0.0)], 1e-6, 2594.0),
        single(
            "himmelblau",
            vec![(-5.0, 5.0); 2],
            vec![
                (vec![3.0, 2.0], 0.0),
                (vec![-2.805118, 3.131312], 0.0),
                (vec![-3.779310, -3.283186], 0.0),
                (vec![3.584428, -1.848126], 0.0),
            ],
            1e-6,
            890.0,
        ),
        single("hartmann3", vec![(0.0, 1.0); 3], vec![(HARTMANN3_ARGMIN.to_vec(), HARTMANN3_MIN)], 1e-6, 3.8628),
        single("currin", vec![(0.0, 1.0); 2], vec![], 1e-6, 12.618),
        pair(
            "branin_currin",
            2,
            vec![Optimum { objective: 0, x: vec![(PI + 5.0) / 15.0, 2.275 / 15.0], value: BRANIN_MIN }],
            [307.73, 12.618],
        ),
        pair(
            "booth_rastrigin",
            2,
            vec![
                Optimum { objective: 0, x: vec![11.0 / 20.0, 13.0 / 20.0], value: 0.0 },
                Optimum { objective: 1, x: vec![0.5, 0.5], value: 0.0 },
            ],
            [2594.0, 80.70],
        ),
        pair(
            "hartmann_himmelblau",
            3,
            vec![
                Optimum { objective: 0, x: HARTMANN3_ARGMIN.to_vec(), value: HARTMANN3_MIN },
                Optimum { objective: 1, x: vec![0.8, 0.7, 0.5], value: 0.0 },
            ],
            [3.8628, 890.0],
        ),
    ]
}

pub fn find(name: &str) -> Result<BenchmarkDef> {
    registry().into_iter().find(|b| b.name == name).ok_or_else(|| Error::UnknownBenchmark(name.to_string()))
}

/// Evaluates a single-objective benchmark in its natural domain.
pub fn eval_single(name: &str, x: &[f64]) -> Result<f64> {
    let def = find(name)?;
    if def.is_multi_objective() {
        return Err(Error::UnknownBenchmark(name.to_string()));
    }
    Ok(def.eval(x)?[0])
}

/// Evaluates a two-objective pair on the unit box.
pub fn eval_multi(name: &str, x: &[f64]) -> Result<Vec<f64>> {
    let def = find(name)?;
    if !def.is_multi_objective() {
        return Err(Error::UnknownBenchmark(name.to_string()));
    }
    def.eval(x)
}

/// Evaluates any benchmark at fidelity `s` and reports the default cost
/// `0.2 + s²`.
pub fn eval_fidelity(name: &str, x: &[f64], s: f64) -> Result<(Vec<f64>, f64)> {
    let def = find(name)?;
    let y = def.eval_at_fidelity(x, s)?;
    Ok((y, CostModel::default().cost(s)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_values() {
        assert_eq!(eval_single("rastrigin", &[0.0, 0.0]).unwrap(), 0.0);
        assert!((eval_single("goldstein_price", &[0.0, -1.0]).unwrap() - 3.0).abs() <= 1e-9);
        assert!((eval_single("branin", &[PI, 2.275]).unwrap() - 0.397887).abs() <= 1e-5);
    }

    #[test]
    fn pair_values_match_independent_evaluation() {
        // frozen from tests/fixtures/benchmark_oracle.py
        let y = eval_multi("branin_currin", &[0.5, 0.5]).unwrap();
        assert!((y[0] - 24.129964413622268).abs() < 1e-12);
        assert!((y[1] - 7.40512391329881).abs() < 1e-12);
        let y = eval_multi("booth_rastrigin", &[0.5, 0.5]).unwrap();
        assert!((y[0] - 74.0).abs() < 1e-12 && y[1].abs() < 1e-12);
        let y = eval_multi("hartmann_himmelblau", &[0.5, 0.5, 0.5]).unwrap();
        assert!((y[0] + 0.6280220150705937).abs() < 1e-12 && (y[1] - 170.0).abs() < 1e-12);
        let booth_min = eval_multi("booth_rastrigin", &[0.55, 0.65]).unwrap();
        assert!(booth_min[0].abs() < 1e-12);
        assert!(eval_multi("branin_currin", &[0.0, 0.0]).unwrap().iter().all(|v| v.is_finite()));
    }

    #[test]
    fn errors() {
        assert!(matches!(eval_single("nope", &[0.0]), Err(Error::UnknownBenchmark(_))));
        assert!(matches!(eval_single("rastrigin", &[6.0, 0.0]), Err(Error::OutOfBounds { index: 0, .. })));
        assert!(eval_single("schwefel", &[420.968_746_359_982; 5]).unwrap().abs() < 1e-6);
        assert!(eval_single("ackley", &[0.0; 7]).unwrap().abs() < 1e-12);
        assert!(matches!(eval_single("branin", &[0.0; 3]), Err(Error::DimensionMismatch { .. })));
        assert!(matches!(eval_multi("nope", &[0.0, 0.0]), Err(Error::UnknownBenchmark(_))));
    }

    #[test]
    fn fidelity_examples() {
        let x = [0.3, 0.8];
        let (hi, _) = eval_fidelity("branin_currin", &x, 1.0).unwrap();
        assert_eq!(hi, eval_multi("branin_currin", &x).unwrap());
        let (lo, _) = eval_fidelity("branin_currin", &x, 0.0).unwrap();
        let bias = find("branin_currin").unwrap().fidelity_bias(&x);
        for k in 0..2 {
            assert!((lo[k] - hi[k] - bias[k]).abs() < 1e-12);
        }
        let (_, cost) = eval_fidelity("branin_currin", &x, 0.5).unwrap();
        assert!((cost - 0.45).abs() < 1e-15);
    }
}
