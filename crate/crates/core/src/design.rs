//! Space-filling initial designs.

use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DesignMethod {
    #[default]
    Lhs,
    Sobol,
    Uniform,
}

/// `n` points inside `bounds`; deterministic given `seed`.
///
/// Latin hypercube puts exactly one point in each of the `n` strata of every
/// dimension. Sobol returns the first `n` points of an Owen-scrambled
/// sequence.
pub fn initial_design(bounds: &[(f64, f64)], n: usize, method: DesignMethod, seed: u64) -> Result<Vec<Vec<f64>>> {
    if n < 1 {
        return Err(Error::InvalidParameter("design size must be positive".into()));
    }
    check_bounds(bounds)?;
    let unit = match method {
        DesignMethod::Lhs => latin_hypercube(bounds.len(), n, seed),
        DesignMethod::Sobol => sobol_points(bounds.len(), 0, n, seed),
        DesignMethod::Uniform => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..n).map(|_| (0..bounds.len()).map(|_| rng.random::<f64>()).collect()).collect()
        }
    };
    Ok(unit.into_iter().map(|u| scale(&u, bounds)).collect())
}

fn check_bounds(bounds: &[(f64, f64)]) -> Result<()> {
    if bounds.is_empty() {
        return Err(Error::InvalidParameter("bounds need at least one dimension".into()));
    }
    if bounds.iter().any(|(lo, hi)| !(lo.is_finite() && hi.is_finite() && hi > lo)) {
        return Err(Error::InvalidParameter("bounds must be finite with lower < upper".into()));
    }
    Ok(())
}

fn scale(u: &[f64], bounds: &[(f64, f64)]) -> Vec<f64> {
    u.iter().zip(bounds).map(|(v, (lo, hi))| lo + v * (hi - lo)).collect()
}

fn latin_hypercube(d: usize, n: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut points = alloc::vec![alloc::vec![0.0; d]; n];
    for k in 0..d {
        let mut strata: Vec<usize> = (0..n).collect();
        strata.shuffle(&mut rng);
        for (p, s) in points.iter_mut().zip(strata) {
            p[k] = (s as f64 + rng.random::<f64>()) / n as f64;
        }
    }
    points
}

/// Scrambled Sobol points `start..start + n` in `[0, 1)^d`.
///
/// The generator holds 2^16 points per scramble; later indices continue in
/// independently scrambled blocks of 2^16.
pub fn sobol_points(d: usize, start: usize, n: usize, seed: u64) -> Vec<Vec<f64>> {
    let scramble = (seed ^ (seed >> 32)) as u32;
    (start..start + n)
        .map(|i| {
            let block = (i >> 16) as u32;
            let s = scramble ^ block.wrapping_mul(0x85EB_CA6B);
            (0..d).map(|k| sobol_burley::sample((i & 0xFFFF) as u32, k as u32, s) as f64).collect()
        })
        .collect()
}
