//! Dominance, Pareto fronts and exact hypervolume.
//!
//! Everything below [`ObjectiveVector`] works in the internal *maximize*
//! convention: callers flip minimized objectives once at the boundary.

use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Maximize,
    Minimize,
}

impl Direction {
    /// Converts a user-facing value to the maximize convention (and back).
    #[inline]
    pub fn to_internal(self, v: f64) -> f64 {
        match self {
            Direction::Maximize => v,
            Direction::Minimize => -v,
        }
    }

    #[inline]
    pub fn from_internal(self, v: f64) -> f64 {
        self.to_internal(v)
    }

    pub fn flip(self) -> Direction {
        match self {
            Direction::Maximize => Direction::Minimize,
            Direction::Minimize => Direction::Maximize,
        }
    }
}

/// Objective values together with the direction of each objective.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveVector {
    pub values: Vec<f64>,
    pub directions: Vec<Direction>,
}

impl ObjectiveVector {
    pub fn new(values: Vec<f64>, directions: Vec<Direction>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidParameter("objective vector needs at least one value".into()));
        }
        if values.len() != directions.len() {
            return Err(Error::DimensionMismatch { expected: values.len(), got: directions.len() });
        }
        if !values.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite("objective vector"));
        }
        Ok(ObjectiveVector { values, directions })
    }

    pub fn maximizing(values: Vec<f64>) -> Result<Self> {
        let m = values.len();
        Self::new(values, vec![Direction::Maximize; m])
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn internal(&self) -> Vec<f64> {
        self.values.iter().zip(&self.directions).map(|(v, d)| d.to_internal(*v)).collect()
    }

    /// `true` when `self` is at least as good in every objective and
    /// strictly better in one.
    pub fn dominates(&self, other: &ObjectiveVector) -> Result<bool> {
        if self.len() != other.len() {
            return Err(Error::DimensionMismatch { expected: self.len(), got: other.len() });
        }
        if self.directions != other.directions {
            return Err(Error::InvalidParameter("objective directions differ".into()));
        }
        Ok(dominates(&self.internal(), &other.internal()))
    }
}

/// Dominance under the maximize convention.
#[inline]
pub fn dominates(a: &[f64], b: &[f64]) -> bool {
    let mut strict = false;
    for (x, y) in a.iter().zip(b) {
        if x < y {
            return false;
        }
        if x > y {
            strict = true;
        }
    }
    strict
}

/// Nondominated members of an archive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParetoFront {
    /// Indices into the archive, ascending.
    pub indices: Vec<usize>,
    pub points: Vec<Vec<f64>>,
}

impl ParetoFront {
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }
}

/// Extracts the Pareto front (maximize convention).
///
/// Exact duplicates keep only their first occurrence.
pub fn pareto_front(archive: &[Vec<f64>]) -> Result<ParetoFront> {
    if archive.is_empty() {
        return Err(Error::EmptyArchive);
    }
    let m = archive[0].len();
    if let Some(bad) = archive.iter().find(|p| p.len() != m) {
        return Err(Error::DimensionMismatch { expected: m, got: bad.len() });
    }
    let indices = nondominated_indices(archive);
    let points = indices.iter().map(|&i| archive[i].clone()).collect();
    Ok(ParetoFront { indices, points })
}

/// Indices of nondominated points, first-occurrence for duplicates.
pub fn nondominated_indices(points: &[Vec<f64>]) -> Vec<usize> {
    if points.first().map_or(false, |p| p.len() == 2) {
        return nondominated_2d(points);
    }
    let mut keep = Vec::new();
    'outer: for (i, p) in points.iter().enumerate() {
        for (j, q) in points.iter().enumerate() {
            if dominates(q, p) || (j < i && q == p) {
                continue 'outer;
            }
        }
        keep.push(i);
    }
    keep
}

fn nondominated_2d(points: &[Vec<f64>]) -> Vec<usize> {
    // Sort by first objective descending, then second descending, then index.
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&a, &b| {
        cmp_desc(points[a][0], points[b][0]).then(cmp_desc(points[a][1], points[b][1])).then(a.cmp(&b))
    });
    let mut keep = Vec::new();
    let mut best_second = f64::NEG_INFINITY;
    let mut last: Option<&[f64]> = None;
    for &i in &order {
        let p = &points[i];
        if let Some(l) = last {
            if l == p.as_slice() {
                continue;
            }
        }
        if p[1] > best_second {
            keep.push(i);
            best_second = p[1];
        }
        last = Some(p);
    }
    keep.sort_unstable();
    keep
}

#[inline]
fn cmp_desc(a: f64, b: f64) -> Ordering {
    b.partial_cmp(&a).unwrap_or(Ordering::Equal)
}

/// Hypervolume together with how many points were clipped because they do
/// not strictly dominate the reference point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Hypervolume {
    pub value: f64,
    pub clipped: usize,
    /// Set when points were supplied but every one of them was clipped.
    pub all_clipped: bool,
}

/// Lebesgue measure of the region dominated by `points` and bounded below by
/// `reference` (maximize convention).
pub fn hypervolume(points: &[Vec<f64>], reference: &[f64]) -> Result<Hypervolume> {
    if reference.is_empty() {
        return Err(Error::InvalidReferencePoint("reference point must have at least one dimension"));
    }
    if !reference.iter().all(|v| v.is_finite()) {
        return Err(Error::InvalidReferencePoint("reference point must be finite"));
    }
    let m = reference.len();
    let mut kept = Vec::with_capacity(points.len());
    for p in points {
        if p.len() != m {
            return Err(Error::DimensionMismatch { expected: m, got: p.len() });
        }
        if p.iter().zip(reference).all(|(y, r)| y > r) {
            kept.push(p.clone());
        }
    }
    let clipped = points.len() - kept.len();
    let value = if kept.is_empty() {
        0.0
    } else {
        match m {
            1 => kept.iter().map(|p| p[0]).fold(f64::NEG_INFINITY, f64::max) - reference[0],
            2 => hv2d_sweep(&kept, reference),
            _ => hv_wfg(kept, reference),
        }
    };
    Ok(Hypervolume { value, clipped, all_clipped: clipped > 0 && clipped == points.len() })
}

/// Two-objective hypervolume by a sorted sweep. Points must strictly
/// dominate `reference`.
pub fn hv2d_sweep(points: &[Vec<f64>], reference: &[f64]) -> f64 {
    let mut pts: Vec<(f64, f64)> = points.iter().map(|p| (p[0], p[1])).collect();
    pts.sort_by(|a, b| cmp_desc(a.0, b.0).then(cmp_desc(a.1, b.1)));
    let mut volume = 0.0;
    let mut top = reference[1];
    for (x, y) in pts {
        if y > top {
            volume += (x - reference[0]) * (y - top);
            top = y;
        }
    }
    volume
}

/// WFG-style exclusive-hypervolume recursion for any number of objectives.
/// Points must strictly dominate `reference`.
pub fn hv_wfg(mut points: Vec<Vec<f64>>, reference: &[f64]) -> f64 {
    let m = reference.len();
    if points.is_empty() {
        return 0.0;
    }
    if m == 1 {
        return points.iter().map(|p| p[0]).fold(f64::NEG_INFINITY, f64::max) - reference[0];
    }
    if m == 2 {
        return hv2d_sweep(&points, reference);
    }
    // Sorting on the last objective keeps limit sets small.
    points.sort_by(|a, b| cmp_desc(a[m - 1], b[m - 1]));
    let mut total = 0.0;
    for i in 0..points.len() {
        total += exclusive_hv(&points[i], &points[i + 1..], reference);
    }
    total
}

fn box_volume(p: &[f64], reference: &[f64]) -> f64 {
    p.iter().zip(reference).map(|(y, r)| (y - r).max(0.0)).product()
}

fn exclusive_hv(p: &[f64], rest: &[Vec<f64>], reference: &[f64]) -> f64 {
    let limited: Vec<Vec<f64>> = rest.iter().map(|q| q.iter().zip(p).map(|(a, b)| a.min(*b)).collect()).collect();
    let idx = nondominated_indices(&limited);
    let nd: Vec<Vec<f64>> = idx.into_iter().map(|i| limited[i].clone()).filter(|q| q.iter().zip(reference).all(|(y, r)| y > r)).collect();
    box_volume(p, reference) - hv_wfg(nd, reference)
}

/// Componentwise worst value minus 10% of the range, with a fallback offset
/// of `max(0.1·|worst|, 1e-6)` for zero-range objectives.
pub fn default_reference_point(archive: &[Vec<f64>]) -> Result<Vec<f64>> {
    if archive.is_empty() {
        return Err(Error::EmptyArchive);
    }
    let m = archive[0].len();
    let mut out = Vec::with_capacity(m);
    for t in 0..m {
        let mut worst = f64::INFINITY;
        let mut best = f64::NEG_INFINITY;
        for p in archive {
            if p.len() != m {
                return Err(Error::DimensionMismatch { expected: m, got: p.len() });
            }
            if !p[t].is_finite() {
                return Err(Error::NonFinite("archive"));
            }
            worst = worst.min(p[t]);
            best = best.max(p[t]);
        }
        let range = best - worst;
        let offset = if range > 0.0 { 0.1 * range } else { (0.1 * worst.abs()).max(1e-6) };
        out.push(worst - offset);
    }
    Ok(out)
}
