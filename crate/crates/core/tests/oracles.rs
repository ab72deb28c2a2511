//! Independent oracles checked against the library: brute-force hypervolume,
//! dense linear solves, finite differences and plain Monte Carlo.

use momf_core::acquisition::{
    ehvi_2d, ehvi_exact, expected_improvement, lower_confidence_bound, optimize_acquisition,
    probability_of_improvement, qehvi_mc_with_error, AcquisitionKind, AcquisitionSpec, CostModel, FidelityDomain,
    OptimizerConfig,
};
use momf_core::benchmarks::{self, registry};
use momf_core::design::sobol_points;
use momf_core::linalg::Matrix;
use momf_core::pareto::{dominates, hv2d_sweep, hv_wfg, hypervolume, pareto_front};
use momf_core::surrogate::{
    fit_gp, log_marginal_likelihood, FitOptions, KernelConfig, KernelFamily, NOISE_FLOOR,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Inclusion–exclusion over all subsets; maximize convention.
fn hv_brute(points: &[Vec<f64>], r: &[f64]) -> f64 {
    let n = points.len();
    let mut total = 0.0;
    for mask in 1u32..(1 << n) {
        let mut vol = 1.0;
        for k in 0..r.len() {
            let lo = (0..n).filter(|i| mask >> i & 1 == 1).map(|i| points[i][k]).fold(f64::INFINITY, f64::min);
            vol *= (lo - r[k]).max(0.0);
        }
        total += if mask.count_ones() % 2 == 1 { vol } else { -vol };
    }
    total
}

fn brute_front(points: &[Vec<f64>]) -> Vec<usize> {
    (0..points.len())
        .filter(|&i| {
            let dominated = (0..points.len()).any(|j| {
                let ge = points[j].iter().zip(&points[i]).all(|(a, b)| a >= b);
                let gt = points[j].iter().zip(&points[i]).any(|(a, b)| a > b);
                ge && gt
            });
            let earlier_duplicate = (0..i).any(|j| points[j] == points[i]);
            !dominated && !earlier_duplicate
        })
        .collect()
}

fn random_points(r: &mut ChaCha8Rng, n: usize, m: usize) -> Vec<Vec<f64>> {
    (0..n).map(|_| (0..m).map(|_| r.random_range(0.0..1.0)).collect()).collect()
}

#[test]
fn hv_sweep_and_recursion_match_inclusion_exclusion() {
    let mut r = rng(1);
    for _ in 0..50 {
        let n = r.random_range(1..=12);
        let pts = random_points(&mut r, n, 2);
        let reference = [-0.1, -0.05];
        let exact = hv_brute(&pts, &reference);
        let sweep = hv2d_sweep(&pts, &reference);
        let rec = hv_wfg(pts.clone(), &reference);
        assert!((sweep - exact).abs() <= 1e-10 * exact.abs().max(1e-300), "{sweep} vs {exact}");
        assert!((rec - sweep).abs() <= 1e-10 * sweep, "{rec} vs {sweep}");
    }
    for _ in 0..30 {
        let n = r.random_range(1..=8);
        let m = r.random_range(3..=4);
        let pts = random_points(&mut r, n, m);
        let reference = vec![0.0; m];
        let exact = hv_brute(&pts, &reference);
        let rec = hypervolume(&pts, &reference).unwrap().value;
        assert!((rec - exact).abs() <= 1e-10 * exact, "{rec} vs {exact}");
    }
}

#[test]
fn hv_clips_points_that_do_not_dominate_reference() {
    let pts = vec![vec![1.0, 2.0], vec![-1.0, 5.0]];
    let hv = hypervolume(&pts, &[0.0, 0.0]).unwrap();
    assert_eq!(hv.clipped, 1);
    assert!((hv.value - 2.0).abs() < 1e-15);
    let none = hypervolume(&pts, &[3.0, 3.0]).unwrap();
    assert!(none.all_clipped && none.value == 0.0);
}

#[test]
fn pareto_front_matches_pairwise_scan() {
    let mut r = rng(2);
    for trial in 0..40 {
        let m = 2 + trial % 3;
        let mut pts = random_points(&mut r, 100, m);
        // coarse values force ties and duplicates
        for p in &mut pts {
            for v in p.iter_mut() {
                *v = (*v * 6.0).round();
            }
        }
        let front = pareto_front(&pts).unwrap();
        assert_eq!(front.indices, brute_front(&pts));
        for i in 0..pts.len() {
            if !front.indices.contains(&i) {
                assert!(front.points.iter().any(|f| dominates(f, &pts[i]) || *f == pts[i]));
            }
        }
    }
}

fn random_kernel(r: &mut ChaCha8Rng, family: KernelFamily, d: usize) -> KernelConfig {
    KernelConfig {
        family,
        lengthscales: (0..d).map(|_| r.random_range(0.2..2.0)).collect(),
        signal_variance: r.random_range(0.3..3.0),
        noise_variance: r.random_range(1e-4..0.1),
    }
}

#[test]
fn mll_gradient_matches_central_differences() {
    let mut r = rng(3);
    for inst in 0..20 {
        let d = r.random_range(1..=4);
        let n = r.random_range(3..=12);
        let x = Matrix::from_rows(&random_points(&mut r, n, d));
        let y: Vec<f64> = (0..n).map(|_| r.sample::<f64, _>(StandardNormal)).collect();
        let family = if inst % 2 == 0 { KernelFamily::Matern52 } else { KernelFamily::Rbf };
        let kernel = random_kernel(&mut r, family, d);
        let (_, grad) = log_marginal_likelihood(&x, &y, &kernel).unwrap();
        let p = kernel.to_log_params();
        let h = 1e-5;
        for k in 0..p.len() {
            let mut up = p.clone();
            let mut dn = p.clone();
            up[k] += h;
            dn[k] -= h;
            let fu = log_marginal_likelihood(&x, &y, &KernelConfig::from_log_params(family, &up)).unwrap().0;
            let fd = log_marginal_likelihood(&x, &y, &KernelConfig::from_log_params(family, &dn)).unwrap().0;
            let numeric = (fu - fd) / (2.0 * h);
            let tol = 1e-4 * grad[k].abs().max(numeric.abs()) + 1e-7;
            assert!((grad[k] - numeric).abs() <= tol, "instance {inst} param {k}: {} vs {numeric}", grad[k]);
        }
    }
}

/// Gaussian elimination with partial pivoting.
fn dense_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for c in 0..n {
        let p = (c..n).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs())).unwrap();
        a.swap(c, p);
        b.swap(c, p);
        for i in c + 1..n {
            let f = a[i][c] / a[c][c];
            for j in c..n {
                a[i][j] -= f * a[c][j];
            }
            b[i] -= f * b[c];
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|j| a[i][j] * x[j]).sum();
        x[i] = (b[i] - s) / a[i][i];
    }
    x
}

fn matern52(l: f64, s2: f64, a: f64, b: f64) -> f64 {
    let r = ((a - b) / l).abs();
    s2 * (1.0 + 5f64.sqrt() * r + 5.0 * r * r / 3.0) * (-(5f64.sqrt()) * r).exp()
}

fn sin_data() -> (Vec<Vec<f64>>, Vec<f64>) {
    let x: Vec<Vec<f64>> = (0..20).map(|i| vec![(i as f64 + 0.5) / 20.0]).collect();
    let y = x.iter().map(|v| (2.0 * std::f64::consts::PI * v[0]).sin()).collect();
    (x, y)
}

#[test]
fn sine_posterior_mean_matches_dense_solve_and_truth() {
    let (x, y) = sin_data();
    let fixed = KernelConfig {
        family: KernelFamily::Matern52,
        lengthscales: vec![0.3],
        signal_variance: 1.0,
        noise_variance: 1e-4,
    };
    let opts = FitOptions { bounds: Some(vec![(0.0, 1.0)]), fixed: Some(fixed.clone()), ..FitOptions::default() };
    let model = fit_gp(&x, &y, &opts).unwrap();

    let n = y.len() as f64;
    let mean = y.iter().sum::<f64>() / n;
    let scale = (y.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
    let ys: Vec<f64> = y.iter().map(|v| (v - mean) / scale).collect();
    let k: Vec<Vec<f64>> = x
        .iter()
        .map(|a| x.iter().map(|b| matern52(0.3, 1.0, a[0], b[0]) + if a == b { 1e-4 } else { 0.0 }).collect())
        .collect();
    let alpha = dense_solve(k, ys);
    let held_out: Vec<Vec<f64>> = (0..50).map(|i| vec![i as f64 / 49.0]).collect();
    let pred = model.predict(&held_out).unwrap();
    for (q, m) in held_out.iter().zip(&pred.mean) {
        let oracle = mean + scale * x.iter().zip(&alpha).map(|(xi, a)| a * matern52(0.3, 1.0, q[0], xi[0])).sum::<f64>();
        assert!((m - oracle).abs() < 1e-8, "{m} vs {oracle}");
    }

    let fitted = fit_gp(&x, &y, &FitOptions { bounds: Some(vec![(0.0, 1.0)]), ..FitOptions::default() }).unwrap();
    let pred = fitted.predict(&held_out).unwrap();
    let worst = held_out
        .iter()
        .zip(&pred.mean)
        .map(|(q, m)| (m - (2.0 * std::f64::consts::PI * q[0]).sin()).abs())
        .fold(0.0, f64::max);
    assert!(worst <= 0.05, "max error {worst}");
}

#[test]
fn noiseless_training_points_are_interpolated() {
    let mut r = rng(4);
    for _ in 0..5 {
        let x = random_points(&mut r, 10, 2);
        let y: Vec<f64> = x.iter().map(|p| (3.0 * p[0]).sin() + p[1] * p[1]).collect();
        let m = fit_gp(&x, &y, &FitOptions::default()).unwrap();
        for (xi, yi) in x.iter().zip(&y) {
            let (mu, var) = m.predict_standardized(xi);
            let (mean, _) = m.predict_one(xi);
            assert!((mean - yi).abs() <= 1e-5, "{mean} vs {yi}");
            assert!(var <= 10.0 * NOISE_FLOOR, "{var}");
            assert!(mu.is_finite());
        }
    }
}

#[test]
fn far_queries_revert_to_prior() {
    let (x, y) = sin_data();
    let m = fit_gp(&x, &y, &FitOptions { bounds: Some(vec![(0.0, 1.0)]), ..FitOptions::default() }).unwrap();
    let far = vec![vec![1e4]];
    let p = m.predict(&far).unwrap();
    let norm = m.normalization();
    let prior_var = m.kernel().signal_variance * norm.y_scale * norm.y_scale;
    assert!((p.mean[0] - norm.y_mean).abs() < 1e-6);
    assert!((p.variance[0] - prior_var).abs() <= 0.05 * prior_var);
    assert!(m.predict(&[]).unwrap().mean.is_empty());
}

#[test]
fn posterior_sampling_statistics() {
    let (x, y) = sin_data();
    let m = fit_gp(&x, &y, &FitOptions { bounds: Some(vec![(0.0, 1.0)]), ..FitOptions::default() }).unwrap();
    let q = vec![vec![1.3]];
    let p = m.predict(&q).unwrap();
    let n = 1 << 16;
    let draws = m.sample_posterior(&q, n, 11).unwrap();
    let mean = draws.iter().map(|d| d[0]).sum::<f64>() / n as f64;
    let var = draws.iter().map(|d| (d[0] - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    let se = (p.variance[0] / n as f64).sqrt();
    assert!((mean - p.mean[0]).abs() <= 3.0 * se, "{mean} vs {}", p.mean[0]);
    assert!((var - p.variance[0]).abs() <= 0.05 * p.variance[0]);
    assert_eq!(draws, m.sample_posterior(&q, n, 11).unwrap());
}

#[test]
fn adding_the_query_point_never_raises_variance() {
    let mut r = rng(5);
    for _ in 0..20 {
        let x = random_points(&mut r, 6, 2);
        let y: Vec<f64> = (0..6).map(|_| r.random_range(-1.0..1.0)).collect();
        let kernel = random_kernel(&mut r, KernelFamily::Matern52, 2);
        let kernel = KernelConfig { noise_variance: NOISE_FLOOR, ..kernel };
        let opts = FitOptions { bounds: Some(vec![(0.0, 1.0); 2]), fixed: Some(kernel), ..FitOptions::default() };
        let before = fit_gp(&x, &y, &opts).unwrap();
        let q: Vec<f64> = (0..2).map(|_| r.random_range(0.0..1.0)).collect();
        let (_, v0) = before.predict_standardized(&q);
        let mut x2 = x.clone();
        x2.push(q.clone());
        let mut y2 = y.clone();
        y2.push(0.5);
        // keep the same target standardization so variances are comparable
        let after = fit_gp(&x2, &y2, &opts).unwrap();
        let (_, v1) = after.predict_standardized(&q);
        assert!(v1 <= v0 + 1e-12, "{v1} > {v0}");
    }
}

#[test]
fn affine_rescaling_keeps_mean_argmax() {
    let mut r = rng(6);
    let x = random_points(&mut r, 12, 2);
    let y: Vec<f64> = x.iter().map(|p| -(p[0] - 0.6).powi(2) - (p[1] - 0.2).powi(2)).collect();
    let grid: Vec<Vec<f64>> = (0..21).flat_map(|i| (0..21).map(move |j| vec![i as f64 / 20.0, j as f64 / 20.0])).collect();
    let argmax = |m: &momf_core::surrogate::GpModel, g: &[Vec<f64>]| {
        let p = m.predict(g).unwrap();
        (0..g.len()).max_by(|&a, &b| p.mean[a].total_cmp(&p.mean[b])).unwrap()
    };
    let base = fit_gp(&x, &y, &FitOptions { bounds: Some(vec![(0.0, 1.0); 2]), ..FitOptions::default() }).unwrap();
    let (a, b) = ([3.0, 0.5], [-7.0, 2.0]);
    let xs: Vec<Vec<f64>> = x.iter().map(|p| vec![a[0] * p[0] + b[0], a[1] * p[1] + b[1]]).collect();
    let ys: Vec<f64> = y.iter().map(|v| 40.0 * v + 1000.0).collect();
    let bounds = vec![(b[0], a[0] + b[0]), (b[1], a[1] + b[1])];
    let scaled = fit_gp(&xs, &ys, &FitOptions { bounds: Some(bounds), ..FitOptions::default() }).unwrap();
    let gs: Vec<Vec<f64>> = grid.iter().map(|p| vec![a[0] * p[0] + b[0], a[1] * p[1] + b[1]]).collect();
    assert_eq!(argmax(&base, &grid), argmax(&scaled, &gs));
}

fn mc_normal(r: &mut ChaCha8Rng, n: usize, mut f: impl FnMut(f64) -> f64) -> (f64, f64) {
    let mut s = 0.0;
    let mut s2 = 0.0;
    for _ in 0..n {
        let v = f(r.sample(StandardNormal));
        s += v;
        s2 += v * v;
    }
    let mean = s / n as f64;
    let var = (s2 / n as f64 - mean * mean) * n as f64 / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

#[test]
fn ei_and_pi_match_monte_carlo() {
    let mut r = rng(7);
    let mut mc = rng(8);
    let n = 1_000_000;
    for _ in 0..50 {
        let mu: f64 = r.random_range(-2.0..2.0);
        let sd: f64 = r.random_range(0.1..2.0);
        let f: f64 = mu + sd * r.random_range(-3.0..3.0);
        let ei = expected_improvement(mu, sd, f).unwrap();
        let pi = probability_of_improvement(mu, sd, f).unwrap();
        let (ei_mc, ei_se) = mc_normal(&mut mc, n, |z| (mu + sd * z - f).max(0.0));
        let (pi_mc, pi_se) = mc_normal(&mut mc, n, |z| if mu + sd * z > f { 1.0 } else { 0.0 });
        assert!((ei - ei_mc).abs() <= 3.0 * ei_se + 1e-12, "EI {ei} vs {ei_mc} ± {ei_se}");
        assert!((pi - pi_mc).abs() <= 3.0 * pi_se + 1e-12, "PI {pi} vs {pi_mc} ± {pi_se}");
    }
}

#[test]
fn lcb_selection_switches_at_analytic_threshold() {
    let (m1, s1, m2, s2) = (0.0, 0.2, 1.0, 1.0);
    let threshold = (m2 - m1) / (s2 - s1);
    let select = |beta: f64| {
        let a = lower_confidence_bound(m1, s1, beta).unwrap();
        let b = lower_confidence_bound(m2, s2, beta).unwrap();
        if b < a { 1 } else { 0 }
    };
    assert_eq!(select(0.0), 0);
    assert_eq!(select(threshold - 1e-9), 0);
    assert_eq!(select(threshold + 1e-9), 1);
    assert_eq!(select(10.0), 1);
    let mut last = 0;
    for i in 0..=100 {
        let s = select(i as f64 * 0.1);
        assert!(s >= last);
        last = s;
    }
}

fn random_front(r: &mut ChaCha8Rng, n: usize) -> Vec<Vec<f64>> {
    let mut pts = Vec::new();
    for i in 0..n {
        let t = (i as f64 + r.random_range(0.1..0.9)) / n as f64;
        pts.push(vec![t, (1.0 - t * t).sqrt() * r.random_range(0.8..1.0)]);
    }
    pts
}

#[test]
fn ehvi_matches_monte_carlo() {
    let mut r = rng(9);
    let mut mc = rng(10);
    let reference = [0.0, 0.0];
    for _ in 0..10 {
        let front = random_front(&mut r, 3);
        let mean = [r.random_range(0.2..1.0), r.random_range(0.2..1.0)];
        let sd = [r.random_range(0.05..0.5), r.random_range(0.05..0.5)];
        let exact = ehvi_2d(mean, sd, &front, &reference).unwrap();
        let base = hv_brute(&front, &reference);
        let n = 1 << 16;
        let (mut s, mut s2) = (0.0, 0.0);
        for _ in 0..n {
            let y = vec![
                mean[0] + sd[0] * mc.sample::<f64, _>(StandardNormal),
                mean[1] + sd[1] * mc.sample::<f64, _>(StandardNormal),
            ];
            let mut all = front.clone();
            all.push(y);
            let g = hv_brute(&all, &reference) - base;
            s += g;
            s2 += g * g;
        }
        let m = s / n as f64;
        let se = ((s2 / n as f64 - m * m) / (n - 1) as f64).sqrt();
        assert!((exact - m).abs() <= 3.0 * se, "{exact} vs {m} ± {se}");
    }
}

#[test]
fn ehvi_degenerate_and_dominated_cases() {
    let gain = ehvi_2d([1.0, 1.0], [0.0, 0.0], &[vec![0.0, 0.0]], &[-1.0, -1.0]).unwrap();
    assert!((gain - 3.0).abs() < 1e-12);
    let front = vec![vec![5.0, 5.0]];
    let none = ehvi_2d([0.0, 0.0], [0.1, 0.1], &front, &[-1.0, -1.0]).unwrap();
    assert!(none.abs() <= 1e-9, "{none}");
}

fn toy_models(seed: u64) -> (momf_core::surrogate::GpModel, momf_core::surrogate::GpModel) {
    let mut r = rng(seed);
    let x = random_points(&mut r, 8, 2);
    let y1: Vec<f64> = x.iter().map(|p| (3.0 * p[0]).sin() + 0.3 * p[1]).collect();
    let y2: Vec<f64> = x.iter().map(|p| (2.0 * p[1]).cos() - 0.5 * p[0]).collect();
    let opts = FitOptions { bounds: Some(vec![(0.0, 1.0); 2]), ..FitOptions::default() };
    (fit_gp(&x, &y1, &opts).unwrap(), fit_gp(&x, &y2, &opts).unwrap())
}

#[test]
fn qehvi_single_point_agrees_with_exact_ehvi() {
    let (a, b) = toy_models(12);
    let models = [&a, &b];
    let mut r = rng(13);
    let front = vec![vec![0.5, 0.6], vec![0.9, 0.1], vec![0.1, 0.9]];
    let reference = [-1.0, -1.0];
    let spec = AcquisitionSpec { mc_samples: 1 << 16, seed: 5, ..AcquisitionSpec::new(AcquisitionKind::QEhvi) };
    for _ in 0..5 {
        let x = vec![r.random_range(0.0..1.0), r.random_range(0.0..1.0)];
        let exact = ehvi_exact(&models, &x, &front, &reference).unwrap();
        let (mc, se) = qehvi_mc_with_error(&models, &[x.clone()], &front, &reference, &spec).unwrap();
        assert!((exact - mc).abs() <= 3.0 * se.max(1e-12), "{exact} vs {mc} ± {se}");
        let (dup, dup_se) = qehvi_mc_with_error(&models, &[x.clone(), x.clone()], &front, &reference, &spec).unwrap();
        assert!((dup - exact).abs() <= 3.0 * (dup_se + se).max(1e-12), "{dup} vs {exact}");
        assert!(mc >= 0.0);
    }
}

#[test]
fn discrete_fidelity_search_finds_enumerated_maximizer() {
    // score peaks at a different x per level; level 0.5 wins after weighting
    let cost = CostModel::Discrete { levels: vec![0.25, 0.5, 1.0], costs: vec![1.0, 2.0, 8.0] };
    let raw = |x: &[f64], s: f64| {
        let centre = 0.2 + 0.5 * s;
        let height = 1.0 + 6.0 * s;
        if (x[0] - centre).abs() < 0.25 { height * (1.0 - ((x[0] - centre) / 0.25).powi(2)) } else { 0.0 }
    };
    let score = |x: &[f64], s: Option<f64>| raw(x, s.unwrap()) / cost.cost(s.unwrap()).unwrap();
    let mut best = (f64::NEG_INFINITY, 0.0, 0.0);
    for s in [0.25, 0.5, 1.0] {
        for i in 0..=10_000 {
            let x = i as f64 / 10_000.0;
            let v = score(&[x], Some(s));
            if v > best.0 {
                best = (v, x, s);
            }
        }
    }
    let found = optimize_acquisition(
        |x, s, _| score(x, s),
        &[(0.0, 1.0)],
        1,
        Some(&cost.domain()),
        &OptimizerConfig { seed: 3, ..OptimizerConfig::default() },
    );
    assert_eq!(found[0].fidelity, Some(best.2));
    assert!((found[0].x[0] - best.1).abs() < 1e-3, "{:?} vs {best:?}", found[0]);

    // scaling all costs leaves the argmax alone
    let scaled = CostModel::Discrete { levels: vec![0.25, 0.5, 1.0], costs: vec![3.0, 6.0, 24.0] };
    let again = optimize_acquisition(
        |x, s, _| raw(x, s.unwrap()) / scaled.cost(s.unwrap()).unwrap(),
        &[(0.0, 1.0)],
        1,
        Some(&scaled.domain()),
        &OptimizerConfig { seed: 3, ..OptimizerConfig::default() },
    );
    assert_eq!(again[0].x, found[0].x);
    assert_eq!(again[0].fidelity, found[0].fidelity);
}

#[test]
fn continuous_fidelity_becomes_a_search_coordinate() {
    let cost = CostModel::Continuous { c0: 1.0, exponent: 2.0, min_fidelity: 0.0 };
    let FidelityDomain::Continuous { lower, upper } = cost.domain() else { panic!("expected continuous") };
    assert_eq!((lower, upper), (0.0, 1.0));
    let found = optimize_acquisition(
        |x, s, _| {
            let s = s.unwrap();
            (1.0 + s) * (1.0 - (x[0] - 0.4).powi(2)) / cost.cost(s).unwrap()
        },
        &[(0.0, 1.0)],
        1,
        Some(&cost.domain()),
        &OptimizerConfig::default(),
    );
    // (1 + s)/(1 + s²) peaks at s = √2 − 1
    assert!((found[0].fidelity.unwrap() - (2f64.sqrt() - 1.0)).abs() < 1e-2);
    assert!((found[0].x[0] - 0.4).abs() < 1e-2);
}

#[test]
fn every_listed_optimum_is_reproduced() {
    for def in registry() {
        for opt in &def.optima {
            let y = def.eval(&opt.x).unwrap()[opt.objective];
            assert!((y - opt.value).abs() <= def.optimum_tolerance, "{} {:?}: {y} vs {}", def.name, opt.x, opt.value);
        }
    }
}

#[test]
fn benchmarks_finite_and_fidelity_bias_shrinks() {
    for def in registry() {
        let scan = sobol_points(def.dim, 0, 10_000, 17);
        for u in &scan {
            let x: Vec<f64> = u.iter().zip(&def.bounds).map(|(v, (lo, hi))| lo + v * (hi - lo)).collect();
            assert!(def.eval(&x).unwrap().iter().all(|v| v.is_finite()), "{} at {x:?}", def.name);
        }
        let mut last = f64::INFINITY;
        for s in [0.0, 0.25, 0.5, 0.75, 1.0] {
            let worst = scan[..1000]
                .iter()
                .map(|u| {
                    let x: Vec<f64> = u.iter().zip(&def.bounds).map(|(v, (lo, hi))| lo + v * (hi - lo)).collect();
                    let a = def.eval_at_fidelity(&x, s).unwrap();
                    let b = def.eval(&x).unwrap();
                    a.iter().zip(&b).map(|(p, q)| (p - q).powi(2)).sum::<f64>().sqrt()
                })
                .fold(0.0, f64::max);
            assert!(worst <= last, "{} at s={s}", def.name);
            last = worst;
        }
        assert_eq!(last, 0.0);
    }
    let (_, cost) = benchmarks::eval_fidelity("branin", &[0.0, 0.0], 0.5).unwrap();
    assert!((cost - 0.45).abs() < 1e-15);
}
