use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use momf_core::benchmarks::BenchmarkDef;
use momf_core::design::sobol_points;
use momf_core::pareto::{default_reference_point, nondominated_indices};

/// Points in the frozen domain scan used for reference points and gd.
pub const SCAN_POINTS: usize = 100_000;
const SCAN_SEED: u64 = 0x5CA7;

/// Dense-scan summary of a benchmark, in the internal maximize convention.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkScan {
    /// Worst scanned value minus 10% of the scanned range, per objective.
    pub reference: Vec<f64>,
    /// Nondominated scanned points.
    pub front: Vec<Vec<f64>>,
    /// Best attainable value for single-objective benchmarks with a listed optimum.
    pub optimum: Option<f64>,
}

type Cache = Mutex<HashMap<(String, usize), Arc<BenchmarkScan>>>;

/// Seeded Sobol scan of the benchmark domain, computed once per
/// `(benchmark, dimension)` and process.
pub fn benchmark_scan(def: &BenchmarkDef, d: usize) -> Arc<BenchmarkScan> {
    static CACHE: OnceLock<Cache> = OnceLock::new();
    let cache = CACHE.get_or_init(Cache::default);
    let key = (def.name.to_string(), d);
    if let Some(s) = cache.lock().unwrap_or_else(|e| e.into_inner()).get(&key) {
        return s.clone();
    }
    let scan = Arc::new(compute(def, d));
    cache.lock().unwrap_or_else(|e| e.into_inner()).insert(key, scan.clone());
    scan
}

fn compute(def: &BenchmarkDef, d: usize) -> BenchmarkScan {
    let bounds = def.bounds_for(d);
    let values: Vec<Vec<f64>> = sobol_points(d, 0, SCAN_POINTS, SCAN_SEED)
        .into_iter()
        .map(|u| {
            let x: Vec<f64> = u.iter().zip(&bounds).map(|(v, (lo, hi))| lo + v * (hi - lo)).collect();
            let y = def.eval(&x).expect("scan points lie inside the domain");
            y.iter().zip(&def.directions).map(|(v, dir)| dir.to_internal(*v)).collect()
        })
        .collect();
    let reference = default_reference_point(&values).expect("the scan is non-empty and finite");
    let front = nondominated_indices(&values).into_iter().map(|i| values[i].clone()).collect();
    let optimum = if def.objectives == 1 {
        def.optima.first().map(|o| def.directions[0].to_internal(o.value))
    } else {
        None
    };
    BenchmarkScan { reference, front, optimum }
}
