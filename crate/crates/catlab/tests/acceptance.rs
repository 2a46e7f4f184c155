//! Acceptance suite: one test per criterion, each printing a PASS/FAIL line
//! (run with `cargo test --test acceptance -- --nocapture` to see them all).
//! Tolerances are pinned in the asserts; shared expensive artifacts (the
//! difference-quotient table and the response series) are computed once.

use std::sync::OnceLock;
use std::time::Instant;

use catlab::cat_family::{bad_set, complexity, CatFamily};
use catlab::config::Observable;
use catlab::coupling::{
    random_admissible_params, random_state, scheme_step, star_norm, SchemeParams,
};
use catlab::foliation::{build_f1, build_f2, disintegration_check, region_polygon, RegionId};
use catlab::measures::{
    cov_sequence, equidistribution_defect, monte_carlo_pushforward, mu_all, pushforward_values,
    SquareGrid,
};
use catlab::response::{
    closed_form_residual_exact, closed_form_residual_float, diff_quotients, nu_t, nu_tilde,
    response_density_integral, response_series, SeriesReport,
};
use catlab::scalar::{Rational, Scalar};
use catlab::standard_pairs::{growth_stats, StandardFamily, StandardSegment};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const BATTERY: [Observable; 7] = Observable::BATTERY;
const T_GRID: [(i64, i64); 4] = [(1, 64), (1, 128), (1, 256), (1, 512)];
const SEED: u64 = 20_260_810;

fn fam(num: i64, den: i64) -> CatFamily<f64> {
    CatFamily::new(num as f64 / den as f64).unwrap()
}

fn report(idx: u32, name: &str, pass: bool, detail: &str) {
    println!(
        "acceptance {:02} {}: {} ({})",
        idx,
        name,
        if pass { "PASS" } else { "FAIL" },
        detail
    );
}

/// Difference quotients for the whole battery over the t grid, shared by the
/// Lipschitz and linear-response criteria. The two smallest parameters use a
/// denser outer rule (their stabilization depth is lower, so it stays cheap).
fn quotient_table() -> &'static Vec<Vec<(f64, f64, usize)>> {
    static TABLE: OnceLock<Vec<Vec<(f64, f64, usize)>>> = OnceLock::new();
    TABLE.get_or_init(|| {
        T_GRID
            .iter()
            .map(|&(num, den)| {
                let lines = if den >= 256 { 4096 } else { 2048 };
                diff_quotients(&fam(num, den), &BATTERY, 1e-4, 24, lines, 8, 0.4, 4_000_000)
                    .expect("difference quotients")
            })
            .collect()
    })
}

fn series_report() -> &'static SeriesReport {
    static REPORT: OnceLock<SeriesReport> = OnceLock::new();
    REPORT.get_or_init(|| {
        let fam0 = CatFamily::new(0.0).unwrap();
        response_series(&fam0, &BATTERY, 30, 12, 12, 0.4, 4_000_000, 40_000_000)
            .expect("response series")
    })
}

#[test]
fn acceptance_01_closed_form_transfer_identity() {
    let start = Instant::now();
    let mut worst_exact = 0.0f64;
    for &(num, den) in &[(1i64, 8i64), (1, 16), (1, 32)] {
        let r = closed_form_residual_exact(num, den, 100_000, SEED);
        worst_exact = worst_exact.max(r);
    }
    let float_res = closed_form_residual_float(0.125, 100_000, SEED);
    let elapsed = start.elapsed().as_secs_f64();
    let pass = worst_exact == 0.0 && float_res <= 1e-10 && elapsed < 10.0;
    report(
        1,
        "closed-form transfer identity",
        pass,
        &format!(
            "exact residual {:e}, float residual {:e}, {:.1}s",
            worst_exact, float_res, elapsed
        ),
    );
    assert_eq!(worst_exact, 0.0, "rational-mode residual must vanish");
    assert!(float_res <= 1e-10, "float residual {}", float_res);
    assert!(elapsed < 10.0, "runtime {:.1}s over budget", elapsed);
}

#[test]
fn acceptance_02_first_order_measure_defect() {
    let start = Instant::now();
    let mut detail = String::new();
    let mut pass = true;
    for &o in &BATTERY {
        let limit = nu_tilde(|p| o.eval(p), 48);
        let mut errs = Vec::new();
        for &(num, den) in &T_GRID {
            let t = num as f64 / den as f64;
            let v = nu_t(&fam(num, den), |p| o.eval(p), 48) / t;
            let err = (v - limit).abs();
            pass &= err <= 3.0 * t * o.c1_norm();
            errs.push((t, err));
        }
        // Halving ratio whenever both errors are above the quadrature floor.
        for w in errs.windows(2) {
            let (_, e_big) = w[0];
            let (_, e_small) = w[1];
            if e_big > 1e-6 && e_small > 1e-6 {
                let ratio = e_small / e_big;
                pass &= (0.35..=0.65).contains(&ratio);
                detail.push_str(&format!("{}:{:.2} ", o.id(), ratio));
            }
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    report(
        2,
        "first-order measure defect",
        pass && elapsed < 60.0,
        &format!("ratios {} {:.1}s", detail.trim(), elapsed),
    );
    assert!(pass, "defect bound or halving ratio failed: {}", detail);
    assert!(elapsed < 60.0);
}

#[test]
fn acceptance_03_zero_average_density() {
    let start = Instant::now();
    let mut worst = 0.0f64;
    for &(num, den) in &T_GRID {
        let v = response_density_integral(&fam(num, den), 16).abs();
        worst = worst.max(v);
    }
    let elapsed = start.elapsed().as_secs_f64();
    let pass = worst <= 1e-8 && elapsed < 30.0;
    report(
        3,
        "zero-average response density",
        pass,
        &format!("max |integral| {:e}, {:.1}s", worst, elapsed),
    );
    assert!(worst <= 1e-8, "integral {}", worst);
    assert!(elapsed < 30.0);
}

#[test]
fn acceptance_04_lipschitz_constant() {
    let start = Instant::now();
    let quots = quotient_table();
    let mut c = 0.0f64;
    for row in quots {
        for (i, &(q, _, _)) in row.iter().enumerate() {
            c = c.max(q.abs() / BATTERY[i].c1_norm());
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    let pass = c <= 50.0 && elapsed < 1800.0;
    report(
        4,
        "Lipschitz constant",
        pass,
        &format!("C = {:.4}, {:.0}s", c, elapsed),
    );
    assert!(c <= 50.0, "C = {}", c);
    assert!(elapsed < 1800.0);
}

#[test]
fn acceptance_05_linear_response() {
    let start = Instant::now();
    let series = series_report();
    let quots = quotient_table();
    let mut pass = true;
    let mut detail = String::new();
    for target in [Observable::Xy, Observable::Cos2PiXSin2PiY] {
        let i = BATTERY.iter().position(|o| *o == target).unwrap();
        let s = series.series_value(i);
        let bound_extra = series.tail[i] + series.noise[i];
        // Match at the smallest parameter.
        let (q, dq, _) = quots[T_GRID.len() - 1][i];
        let t_small = 1.0 / 512.0;
        let tol = bound_extra + 10.0 * t_small + 3.0 * dq;
        let dev_small = (q - s).abs();
        pass &= dev_small <= tol;
        // Deviations decrease in t, one inversion allowed.
        let devs: Vec<f64> = (0..T_GRID.len())
            .map(|ti| (quots[ti][i].0 - s).abs())
            .collect();
        let inversions = devs.windows(2).filter(|w| w[1] > w[0]).count();
        pass &= inversions <= 1;
        detail.push_str(&format!(
            "{}: dev {:.2e} tol {:.2e} inversions {}; ",
            target.id(),
            dev_small,
            tol,
            inversions
        ));
    }
    let elapsed = start.elapsed().as_secs_f64();
    report(
        5,
        "linear response",
        pass && elapsed < 7200.0,
        &format!("{}{:.0}s", detail, elapsed),
    );
    assert!(pass, "{}", detail);
    assert!(elapsed < 7200.0);
}

#[test]
fn acceptance_06_bad_set_linearity() {
    let start = Instant::now();
    let fam0: CatFamily<Rational> = CatFamily::new(Rational::zero()).unwrap();
    let areas: Vec<f64> = [(1i64, 16i64), (1, 32), (1, 64), (1, 128)]
        .iter()
        .map(|&(num, den)| {
            let ft = CatFamily::new(Rational::from_ratio(num, den)).unwrap();
            bad_set(&fam0, &ft).total_bad_area().to_f64()
        })
        .collect();
    let mut pass = true;
    let mut ratios = Vec::new();
    for w in areas.windows(2) {
        let r = w[1] / w[0];
        ratios.push(r);
        pass &= (0.45..=0.55).contains(&r);
    }
    let elapsed = start.elapsed().as_secs_f64();
    report(
        6,
        "bad-set linearity",
        pass && elapsed < 5.0,
        &format!("halving ratios {:?}, {:.2}s", ratios, elapsed),
    );
    assert!(pass, "ratios {:?}", ratios);
    assert!(elapsed < 5.0);
}

#[test]
fn acceptance_07_growth_lemma() {
    let start = Instant::now();
    // N0 from the complexity of the iterated singularity sets, with the
    // uniform cone expansion sqrt(2).
    let lambda = 2f64.sqrt();
    let t_wide = [0.0, 1.0 / 64.0, 1.0 / 16.0, 0.125];
    let mut n0 = None;
    for k in 1..=10u32 {
        let mut worst = 0usize;
        for &t in &t_wide {
            worst = worst.max(complexity(&CatFamily::new(t).unwrap(), k, 10).unwrap());
        }
        if ((worst + 1) as f64) < lambda.powi(k as i32) {
            n0 = Some(k as usize);
            break;
        }
    }
    let n0 = n0.expect("no contraction depth found by k = 10");
    let mut plateaus = Vec::new();
    let mut pass = true;
    for &t in &t_wide {
        let f = CatFamily::new(t).unwrap();
        let w = StandardSegment::from_endpoints(
            [0.4, 0.4],
            [0.4 + 7.0e-4, 0.4 + 7.2e-4],
        )
        .unwrap();
        let stats = growth_stats(
            &f,
            &StandardFamily::single(w),
            n0 * 12,
            n0,
            1_500_000,
            300_000,
            SEED,
        );
        pass &= stats.fitted_z > 0.0 && stats.fitted_z < 1.0;
        // Envelope with the fitted slope and the worst intercept holds at
        // every multiple by construction; it must stay commensurate with the
        // observed plateau for the fit to mean anything.
        let tail = &stats.z_values[stats.z_values.len() - 4 * n0..];
        let observed: f64 = tail.iter().sum::<f64>() / tail.len() as f64;
        let implied = stats.envelope_intercept / (1.0 - stats.fitted_z);
        pass &= implied.is_finite() && implied <= 20.0 * observed.max(1.0);
        plateaus.push(observed);
    }
    let spread = plateaus.iter().copied().fold(0.0f64, f64::max)
        / plateaus.iter().copied().fold(f64::MAX, f64::min);
    pass &= spread <= 2.0;
    let elapsed = start.elapsed().as_secs_f64();
    report(
        7,
        "growth lemma",
        pass && elapsed < 300.0,
        &format!(
            "N0 = {}, plateaus {:?}, spread {:.2}, {:.0}s",
            n0, plateaus, spread, elapsed
        ),
    );
    assert!(pass, "plateaus {:?} spread {}", plateaus, spread);
    assert!(elapsed < 300.0);
}

#[test]
fn acceptance_08_equidistribution() {
    let start = Instant::now();
    let f0 = CatFamily::new(0.0).unwrap();
    let grid = SquareGrid::new(&f0, 1.0 / 32.0);
    let w = StandardSegment::vertical(0.37);
    let mut defects = Vec::new();
    let mut n_found = None;
    for k in 0..=19usize {
        let d = equidistribution_defect(&f0, &w, &grid, k);
        defects.push(d);
        if n_found.is_none() && d <= 0.01 {
            n_found = Some(k);
        }
        if let Some(n) = n_found {
            if k >= n + 4 {
                break;
            }
        }
    }
    let mut pass = false;
    let detail = if let Some(n) = n_found {
        let window = &defects[n..(n + 5).min(defects.len())];
        pass = window.len() == 5 && window.iter().all(|&d| d <= 0.01);
        format!("N = {}, window {:?}", n, window)
    } else {
        format!("defect never reached 1/100: {:?}", defects)
    };
    let elapsed = start.elapsed().as_secs_f64();
    report(
        8,
        "equidistribution",
        pass && elapsed < 300.0,
        &format!("{}, {:.0}s", detail, elapsed),
    );
    assert!(pass, "{}", detail);
    assert!(elapsed < 300.0);
}

#[test]
fn acceptance_09_correlation_decay() {
    let start = Instant::now();
    let w = StandardSegment::from_endpoints([0.31, 0.45], [0.31, 0.5]).unwrap();
    // gamma[obs][t]
    let mut gammas: Vec<Vec<f64>> = vec![Vec::new(); BATTERY.len()];
    let mut pass = true;
    let mut detail = String::new();
    for &(num, den) in &T_GRID {
        let f = fam(num, den);
        let mus = mu_all(&f, &BATTERY, 2e-5, 24, 4096, 8, 0.4, 8_000_000).unwrap();
        let mu_vals: Vec<f64> = mus.iter().map(|e| e.value).collect();
        let mu_floors: Vec<f64> = mus.iter().map(|e| e.delta).collect();
        let seq = cov_sequence(
            &f, &BATTERY, &w, &mu_vals, &mu_floors, 40, 8, 0.4, 2_000_000, 250_000, SEED,
        );
        for (i, o) in BATTERY.iter().enumerate() {
            let points: Vec<(f64, f64)> = (5..=40)
                .filter_map(|n| {
                    let (v, res) = seq.rows[n][i];
                    if v > 10.0 * res && v > 1e-11 {
                        Some((n as f64, v.ln()))
                    } else {
                        None
                    }
                })
                .collect();
            if points.len() < 8 {
                // Effectively zero covariance for this observable.
                continue;
            }
            let n = points.len() as f64;
            let sx: f64 = points.iter().map(|p| p.0).sum();
            let sy: f64 = points.iter().map(|p| p.1).sum();
            let sxx: f64 = points.iter().map(|p| p.0 * p.0).sum();
            let sxy: f64 = points.iter().map(|p| p.0 * p.1).sum();
            let syy: f64 = points.iter().map(|p| p.1 * p.1).sum();
            let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
            let r_num = n * sxy - sx * sy;
            let r2 = r_num * r_num / ((n * sxx - sx * sx) * (n * syy - sy * sy));
            pass &= slope < 0.0 && r2 >= 0.98;
            if slope >= 0.0 || r2 < 0.98 {
                detail.push_str(&format!(
                    "{}@{}/{}: slope {:.3} R2 {:.4}; ",
                    o.id(),
                    num,
                    den,
                    slope,
                    r2
                ));
            }
            gammas[i].push(slope.exp());
        }
    }
    let mut spreads = Vec::new();
    for (i, g) in gammas.iter().enumerate() {
        if g.len() == T_GRID.len() {
            let spread = g.iter().copied().fold(0.0f64, f64::max)
                / g.iter().copied().fold(f64::MAX, f64::min);
            spreads.push((BATTERY[i].id(), spread));
            pass &= spread <= 1.2;
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    report(
        9,
        "correlation decay",
        pass && elapsed < 1800.0,
        &format!("gamma spreads {:?} {} {:.0}s", spreads, detail, elapsed),
    );
    assert!(pass, "{} spreads {:?}", detail, spreads);
    assert!(elapsed < 1800.0);
}

#[test]
fn acceptance_10_scheme_contraction() {
    let start = Instant::now();
    // Hand-derived example reproduced to five digits.
    let example = SchemeParams::new(0.4, 0.1, 2, 3, 0.45, 1.02, 2.0, 0.25).unwrap();
    let tau_ok = (example.tau() - 0.99804).abs() < 5e-6;
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut worst_excess = f64::MIN;
    for _ in 0..100 {
        let p = random_admissible_params(&mut rng);
        let tau = p.tau();
        for _ in 0..10 {
            let s = random_state(&mut rng, 8);
            let before = star_norm(&s, &p);
            let after = star_norm(&scheme_step(&s, &p), &p);
            worst_excess = worst_excess.max(after / before - tau);
        }
    }
    let pass = tau_ok && worst_excess <= 1e-12;
    let elapsed = start.elapsed().as_secs_f64();
    report(
        10,
        "scheme contraction",
        pass && elapsed < 60.0,
        &format!(
            "tau(example) = {:.6}, worst ratio excess {:.2e}, {:.1}s",
            example.tau(),
            worst_excess,
            elapsed
        ),
    );
    assert!(tau_ok, "tau = {}", example.tau());
    assert!(worst_excess <= 1e-12, "excess {}", worst_excess);
    assert!(elapsed < 60.0);
}

#[test]
fn acceptance_11_disintegration() {
    let start = Instant::now();
    let tests: [(&str, fn([f64; 2]) -> f64); 3] = [
        ("one", |_| 1.0),
        ("xy", |p| p[0] * p[1]),
        ("cos2pix", |p| (2.0 * std::f64::consts::PI * p[0]).cos()),
    ];
    let mut worst = 0.0f64;
    for &t in &[1.0 / 64.0, 1.0 / 16.0, 0.125] {
        let mut regions = build_f1(t).unwrap();
        regions.extend(build_f2(t).unwrap());
        for region in &regions {
            for (_, g) in tests {
                let res = disintegration_check(region, g, 1e-6).unwrap();
                worst = worst.max(res);
            }
        }
        // Region areas tile the square exactly (rational arithmetic).
        let tr = Rational::from_ratio((t * 512.0).round() as i64, 512);
        let total = RegionId::ALL
            .iter()
            .map(|&id| region_polygon(id, &tr).area())
            .fold(Rational::zero(), |a, b| a + b);
        assert!(
            (total.to_f64() - 1.0).abs() <= 1e-10,
            "areas sum to {}",
            total
        );
    }
    let elapsed = start.elapsed().as_secs_f64();
    let pass = worst <= 1e-6 && elapsed < 60.0;
    report(
        11,
        "disintegration",
        pass,
        &format!("max residual {:.2e}, {:.1}s", worst, elapsed),
    );
    assert!(worst <= 1e-6, "residual {}", worst);
    assert!(elapsed < 60.0);
}

#[test]
fn acceptance_12_quadrature_vs_monte_carlo() {
    let start = Instant::now();
    let obs = [Observable::Xy, Observable::Cos2PiXSin2PiY];
    let mut pass = true;
    let mut detail = String::new();
    for &(num, den) in &[(1i64, 64i64), (1, 16)] {
        let f = fam(num, den);
        let profile =
            pushforward_values(&f, &obs, &[1, 2, 3], 1024, 8, 0.4, 1 << 22).unwrap();
        for n in 1..=3usize {
            let mc = monte_carlo_pushforward(&f, &obs, n, 10_000_000, SEED + n as u64);
            for (i, o) in obs.iter().enumerate() {
                let delta = (profile.values[n][i] - mc[i].0).abs();
                let combined =
                    (mc[i].1.powi(2) + profile.outer_delta[n][i].powi(2)).sqrt();
                let ok = delta <= 3.0 * combined.max(1e-9);
                pass &= ok;
                if !ok {
                    detail.push_str(&format!(
                        "{} t={}/{} n={}: |{:.3e}| > 3x{:.3e}; ",
                        o.id(),
                        num,
                        den,
                        n,
                        delta,
                        combined
                    ));
                }
            }
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    report(
        12,
        "quadrature vs Monte Carlo",
        pass && elapsed < 300.0,
        &format!("{}{:.0}s", detail, elapsed),
    );
    assert!(pass, "{}", detail);
    assert!(elapsed < 300.0);
}
