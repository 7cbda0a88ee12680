//! Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

use std::sync::OnceLock;
use std::time::{Duration, Instant};

use clipvi::harness::{parse_config, run_experiment, AggregateResult};
use clipvi::methods::{
    step_korpelevich, step_popov, step_projection_two_sample, MethodKind, MethodState, Runner,
};
use clipvi::problems::{FeasibleSet, NoiseSpec, Problem};
use clipvi::rng::CounterRng;
use clipvi::schedules::{
    korpelevich_offset, series_lower_bound, square_series_integral_bound,
    square_series_upper_bound, theoretical_a, StepSchedule,
};
use clipvi::smoothness::{
    alpha_symmetry_residual, derived_constants, fit_l1, lattice_pairs, SymmetryConstants,
};
use clipvi::{point, Point};

fn report(n: u32, name: &str, pass: bool, detail: String) {
    println!(
        "criterion {n:>2} {name}: {} ({detail})",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(pass, "criterion {n} failed: {detail}");
}

/// Independent evaluation of `F(u) = (‖u₁‖^{p−2}u₁ + u₂, ‖u₂‖^{p−2}u₂ − u₁)`.
fn minmax_f(p: f64, u: &[f64]) -> Vec<f64> {
    let n = u.len() / 2;
    let (a, b) = u.split_at(n);
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    let sa = if na == 0.0 { 0.0 } else { na.powf(p - 2.0) };
    let sb = if nb == 0.0 { 0.0 } else { nb.powf(p - 2.0) };
    let mut out = vec![0.0; u.len()];
    for i in 0..n {
        out[i] = sa * a[i] + b[i];
        out[n + i] = sb * b[i] - a[i];
    }
    out
}

fn random_point(rng: &mut CounterRng, dim: usize, half_width: f64) -> Vec<f64> {
    (0..dim)
        .map(|_| rng.uniform(-half_width, half_width))
        .collect()
}

#[test]
fn criterion_01_quasi_sharpness() {
    let start = Instant::now();
    let mut rng = CounterRng::new(101);
    let mut worst = f64::INFINITY;
    let mut max_cross = 0.0f64;
    for p in [2.0, 2.5, 4.0, 6.0] {
        for m in [2usize, 10] {
            let mu = 2f64.powf(1.0 - p / 2.0);
            let pb = Problem::minmax(p, m, NoiseSpec::none()).unwrap();
            assert_eq!(pb.mu(), mu);
            for i in 0..100_000 {
                let u = random_point(&mut rng, m, 10.0);
                let gap = pb.quasi_sharp_gap(&u);
                worst = worst.min(gap);
                if i < 1000 {
                    let own = point::dot(&minmax_f(p, &u), &u) - mu * point::norm(&u).powf(p);
                    max_cross = max_cross.max((own - gap).abs() / own.abs().max(1.0));
                }
            }
        }
    }
    let elapsed = start.elapsed();
    report(
        1,
        "quasi-sharpness",
        worst >= -1e-9 && max_cross < 1e-12 && elapsed < Duration::from_secs(5),
        format!("min gap {worst:.3e}, cross-check {max_cross:.1e}, {elapsed:.2?}"),
    );
}

#[test]
fn criterion_02_projection_properties() {
    let start = Instant::now();
    let dim = 5;
    let sets = [
        FeasibleSet::WholeSpace,
        FeasibleSet::ball(Point::new(vec![1.0, -2.0, 0.5, 0.0, 3.0]), 2.5).unwrap(),
        FeasibleSet::axis_box(
            Point::new(vec![-1.0, -2.0, 0.0, -0.5, -3.0]),
            Point::new(vec![1.0, 0.5, 4.0, 0.5, -1.0]),
        )
        .unwrap(),
    ];
    let mut rng = CounterRng::new(202);
    let (mut w1, mut w2, mut w3) = (f64::NEG_INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
    for set in &sets {
        for _ in 0..10_000 {
            let v = random_point(&mut rng, dim, 10.0);
            let raw = random_point(&mut rng, dim, 10.0);
            let pv = set.project(&v).unwrap();
            let u = set.project(&raw).unwrap();
            let v_pv: Vec<f64> = v.iter().zip(pv.iter()).map(|(a, b)| a - b).collect();
            let u_pv: Vec<f64> = u.iter().zip(pv.iter()).map(|(a, b)| a - b).collect();
            w1 = w1.max(point::dot(&v_pv, &u_pv));
            w2 = w2.max(point::dist_sq(&u, &pv) - point::dist_sq(&u, &v) + point::dist_sq(&v, &pv));
            let pw = set.project(&raw).unwrap();
            w3 = w3.max(point::dist(&pw, &pv) - point::dist(&raw, &v));
        }
    }
    let elapsed = start.elapsed();
    report(
        2,
        "projection properties",
        w1 <= 1e-10 && w2 <= 1e-10 && w3 <= 1e-12 && elapsed < Duration::from_secs(1),
        format!("max residuals {w1:.1e}, {w2:.1e}, {w3:.1e}, {elapsed:.2?}"),
    );
}

#[test]
fn criterion_03_hand_steps() {
    let pb = Problem::minmax(2.0, 2, NoiseSpec::none()).unwrap();
    let mut rng = CounterRng::new(0);
    let mut err: f64 = 0.0;

    let mut s = MethodState::new(Point::new(vec![1.0, 0.0]));
    step_projection_two_sample(&mut s, &pb, 2f64.sqrt(), &mut rng);
    err = err.max(point::dist(&s.u, &[0.0, 1.0]));

    let g = 0.1 / 2f64.sqrt();
    let mut s = MethodState::new(Point::new(vec![1.0, 0.0]));
    step_korpelevich(&mut s, &pb, 0.1, &mut rng);
    // u = (1−γ, γ), F(u) = (1, 2γ−1), h' = (1−γ, γ−2γ²)
    err = err.max(point::dist(&s.h, &[1.0 - g, g - 2.0 * g * g]));
    let rounded_k = point::dist(&s.h, &[0.9292893, 0.0607107]);

    let mut s = MethodState::new(Point::new(vec![1.0, 0.0]));
    step_popov(&mut s, &pb, 0.1, 0.5, &mut rng).unwrap();
    err = err.max(point::dist(&s.u, &[1.0 - g, g]));
    let rounded_p = point::dist(&s.u, &[0.9292893, 0.0707107]);

    report(
        3,
        "hand steps",
        err <= 1e-12 && rounded_k < 1e-7 && rounded_p < 1e-7,
        format!(
            "max error {err:.1e} vs exact, {:.1e} vs 7-digit values",
            rounded_k.max(rounded_p)
        ),
    );
}

#[test]
fn criterion_04_noise_free_descent() {
    let start = Instant::now();
    let m = 10;
    let pb = Problem::minmax(2.0, m, NoiseSpec::none()).unwrap();
    let far = Point::diagonal(m, 5.0);
    // inside the unclipped region ‖F‖ ≤ 1/2, so C_F = 1/2 gives a = μ
    let near = Point::diagonal(m, 0.3);
    let a_far = theoretical_a(pb.mu(), point::norm(&minmax_f(2.0, &far)), 0.0).unwrap();
    let a_near = theoretical_a(pb.mu(), 0.5, 0.0).unwrap();
    let constants = derived_constants(2f64.sqrt(), 0.0, 0.5).unwrap();
    let d = korpelevich_offset(pb.mu(), &constants).unwrap();
    let cases = [
        (
            MethodKind::ProjectionTwoSample,
            StepSchedule::harmonic(a_near, 2.0).unwrap(),
            &near,
        ),
        (
            MethodKind::ProjectionTwoSample,
            StepSchedule::power_law(0.5, 0.75).unwrap(),
            &far,
        ),
        (
            MethodKind::Korpelevich,
            StepSchedule::harmonic(a_far, 2.0 * d / a_far).unwrap(),
            &far,
        ),
    ];
    let mut violations = 0;
    let mut finals = Vec::new();
    for (kind, schedule, u0) in cases {
        let mut r = Runner::new(kind, &pb, schedule, u0, None, CounterRng::new(4)).unwrap();
        let mut prev = pb.distance_to_solution(r.state().last_iterate(kind));
        for _ in 0..10_000 {
            r.step();
            let d = pb.distance_to_solution(r.state().last_iterate(kind));
            if d > prev {
                violations += 1;
            }
            prev = d;
        }
        finals.push(format!("{prev:.1e}"));
    }
    let elapsed = start.elapsed();
    report(
        4,
        "noise-free descent",
        violations == 0 && elapsed < Duration::from_secs(1),
        format!(
            "{violations} violations, final dist {}, {elapsed:.2?}",
            finals.join(" / ")
        ),
    );
}

const P2_CONFIG: &str = r#"
iterations = 100000
seeds = 20
master_seed = 2024
fit_window = [10000, 100000]
verify_samples = 0
[problem]
p = 2.0
dimension = 10
sigma_total = 1.0
[checkpoints]
count = 60
list = [1000, 2000, 5000, 10000, 14678, 21544, 31623, 46416, 68129, 100000]
[[methods]]
kind = "projection_two_sample"
schedule = { type = "harmonic" }
[[methods]]
kind = "projection_same_sample"
schedule = { type = "harmonic" }
[[methods]]
kind = "korpelevich"
schedule = { type = "harmonic" }
"#;

fn p2_experiment() -> &'static (AggregateResult, Duration) {
    static CELL: OnceLock<(AggregateResult, Duration)> = OnceLock::new();
    CELL.get_or_init(|| {
        let start = Instant::now();
        let res = run_experiment(&parse_config(P2_CONFIG, &[]).unwrap()).unwrap();
        (res, start.elapsed())
    })
}

fn final_last(res: &AggregateResult, label: &str) -> f64 {
    res.method(label)
        .unwrap()
        .rows
        .last()
        .unwrap()
        .mean_dist2_last
}

#[test]
fn criterion_05_rate_p2() {
    let (res, elapsed) = p2_experiment();
    let mut ok = *elapsed < Duration::from_secs(120);
    let mut detail = Vec::new();
    for label in ["projection_two_sample", "korpelevich"] {
        let m = res.method(label).unwrap();
        let slope = m.slope_last.unwrap();
        let at_1e3 = m.rows.iter().find(|r| r.k == 1000).unwrap().mean_dist2_last;
        let drop = at_1e3 / final_last(res, label);
        ok &= (-1.4..=-0.6).contains(&slope) && drop >= 10.0;
        detail.push(format!("{label} slope {slope:.3}, drop {drop:.0}x"));
    }
    detail.push(format!("{elapsed:.1?}"));
    report(5, "rate p=2", ok, detail.join(", "));
}

#[test]
fn criterion_06_rate_p4() {
    let text = r#"
iterations = 1000000
seeds = 20
master_seed = 2024
verify_samples = 0
[problem]
p = 4.0
dimension = 10
sigma_total = 1.0
[checkpoints]
count = 60
[[methods]]
kind = "projection_two_sample"
schedule = { type = "power_law", b = 1.0, q = 0.6 }
[[methods]]
kind = "korpelevich"
schedule = { type = "power_law", b = 1.0, q = 0.6 }
"#;
    let start = Instant::now();
    let res = run_experiment(&parse_config(text, &[]).unwrap()).unwrap();
    let elapsed = start.elapsed();
    let mut ok = elapsed < Duration::from_secs(600);
    let mut detail = Vec::new();
    for m in &res.methods {
        let slope = m.slope_avg.unwrap();
        ok &= (-0.6..=-0.067).contains(&slope);
        detail.push(format!(
            "{} avg slope {slope:.3} (last {:.3})",
            m.method.label,
            m.slope_last.unwrap()
        ));
    }
    detail.push(format!("target [-0.6, -0.067], {elapsed:.1?}"));
    report(6, "rate p=4", ok, detail.join(", "));
}

#[test]
fn criterion_07_method_comparison() {
    let (res, _) = p2_experiment();
    let two = final_last(res, "projection_two_sample");
    let same = final_last(res, "projection_same_sample");
    let korp = final_last(res, "korpelevich");
    let ratio = two.max(same) / two.min(same);
    let advantage = two / korp;
    report(
        7,
        "method comparison",
        ratio <= 3.0 && advantage <= 3.0,
        format!("two/same ratio {ratio:.2}, projection/korpelevich {advantage:.2}"),
    );
}

#[test]
fn criterion_08_oracle_statistics() {
    let n = 1_000_000usize;
    let mut worst_second = 0.0f64;
    let mut worst_mean = f64::NEG_INFINITY;
    for (m, sigma) in [(10usize, 1.0), (4, 0.3)] {
        let pb = Problem::minmax(2.0, m, NoiseSpec::new(sigma).unwrap()).unwrap();
        let u = Point::diagonal(m, 2.0);
        let f = minmax_f(2.0, &u);
        let mut rng = CounterRng::new(808);
        let mut out = vec![0.0; m];
        let mut sum = vec![0.0; m];
        let mut sq = 0.0;
        for _ in 0..n {
            pb.sample_into(&u, &mut rng, &mut out);
            for i in 0..m {
                let e = out[i] - f[i];
                sum[i] += e;
                sq += e * e;
            }
        }
        let second = sq / n as f64;
        let target = m as f64 * sigma * sigma;
        worst_second = worst_second.max((second - target).abs() / target);
        let mean_norm = point::norm(&sum) / n as f64;
        worst_mean = worst_mean.max(mean_norm / (3.0 * sigma * (m as f64 / n as f64).sqrt()));
    }
    report(
        8,
        "oracle statistics",
        worst_second <= 0.05 && worst_mean <= 1.0,
        format!("second moment rel. error {worst_second:.2e}, mean error / bound {worst_mean:.3}"),
    );
}

#[test]
fn criterion_09_alpha_symmetry() {
    let mut rng = CounterRng::new(909);
    let pairs = |rng: &mut CounterRng, m: usize, n: usize| -> Vec<(Point, Point)> {
        (0..n)
            .map(|_| {
                (
                    Point::new(random_point(rng, m, 10.0)),
                    Point::new(random_point(rng, m, 10.0)),
                )
            })
            .collect()
    };

    // p = 2 is linear with ‖A‖ = √2: L₀ = √2, L₁ = 0 in either form
    let lin = Problem::minmax(2.0, 10, NoiseSpec::none()).unwrap();
    let exact = [
        derived_constants(2f64.sqrt(), 0.0, 0.5).unwrap(),
        SymmetryConstants::unit_alpha(2f64.sqrt(), 0.0).unwrap(),
    ];
    let mut worst_lin = f64::NEG_INFINITY;
    for (y, y2) in pairs(&mut rng, 10, 10_000) {
        for c in &exact {
            worst_lin = worst_lin.max(alpha_symmetry_residual(lin.operator(), c, &y, &y2));
        }
    }

    // p = 4: fit L₁ on a lattice plus random pairs, then verify on fresh pairs
    let m = 4;
    let alpha = 2.0 / 3.0;
    let quartic = Problem::minmax(4.0, m, NoiseSpec::none()).unwrap();
    let mut fit_pairs = lattice_pairs(m, 10.0, 4);
    fit_pairs.extend(pairs(&mut rng, m, 2000));
    let l1 = fit_l1(quartic.operator(), alpha, 1.0, &fit_pairs, 0.1).unwrap();
    let fitted = derived_constants(1.0, l1, alpha).unwrap();
    let mut worst_quartic = f64::NEG_INFINITY;
    for (y, y2) in pairs(&mut rng, m, 10_000) {
        worst_quartic = worst_quartic.max(alpha_symmetry_residual(
            quartic.operator(),
            &fitted,
            &y,
            &y2,
        ));
    }
    report(
        9,
        "alpha-symmetry",
        worst_lin <= 1e-9 && worst_quartic <= 1e-9,
        format!("linear worst residual {worst_lin:.2e}, p=4 worst residual {worst_quartic:.2e} (L1 = {l1:.4})"),
    );
}

#[test]
fn criterion_10_series_bounds() {
    let qs = [0.5, 0.55, 0.6, 0.75, 0.9, 0.99];
    let ks = [1u64, 2, 3, 5, 10, 100, 1000, 10_000, 100_000];
    let mut cells = 0;
    let mut failures = 0;
    let mut integral_misses = 0;
    for &q in &qs {
        for &k in &ks {
            let (mut s, mut s2) = (0.0, 0.0);
            for t in 0..=k {
                let x = (t as f64 + 1.0).powf(-q);
                s += x;
                s2 += x * x;
            }
            cells += 1;
            if series_lower_bound(q, k).unwrap() > s
                || s2 > square_series_upper_bound(q, k).unwrap()
            {
                failures += 1;
            }
            if s2 > square_series_integral_bound(q, k).unwrap() {
                integral_misses += 1;
            }
        }
    }
    report(
        10,
        "series bounds",
        failures == 0,
        format!("{failures} failures over {cells} cells; integral-only bound undercuts the sum in {integral_misses}"),
    );
}
