use catlab::cat_family::CatFamily;
use catlab::config::Observable;
use catlab::measures::{cov_sequence, mu_all};
use catlab::standard_pairs::StandardSegment;

fn fit(points: &[(f64, f64)]) -> (f64, f64) {
    let n = points.len() as f64;
    let sx: f64 = points.iter().map(|p| p.0).sum();
    let sy: f64 = points.iter().map(|p| p.1).sum();
    let sxx: f64 = points.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = points.iter().map(|p| p.0 * p.1).sum();
    let syy: f64 = points.iter().map(|p| p.1 * p.1).sum();
    let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    let rn = n * sxy - sx * sy;
    (slope, rn * rn / ((n * sxx - sx * sx) * (n * syy - sy * sy)))
}

fn main() {
    let den = 128i64;
    let f = CatFamily::new(1.0 / den as f64).unwrap();
    let obs = Observable::BATTERY;
    let mus = mu_all(&f, &obs, 2e-5, 24, 4096, 8, 0.4, 8_000_000).unwrap();
    let mu_vals: Vec<f64> = mus.iter().map(|e| e.value).collect();
    let mu_floors: Vec<f64> = mus.iter().map(|e| e.delta).collect();
    let candidates: Vec<(&str, StandardSegment)> = vec![
        ("short-vert", StandardSegment::from_endpoints([0.31, 0.45], [0.31, 0.5]).unwrap()),
        ("full-line", StandardSegment::vertical(0.5)),
        ("eu-short", {
            let e = f.eigen.e_u;
            StandardSegment::from_endpoints([0.4, 0.3], [0.4 + 0.05 * e[0], 0.3 + 0.05 * e[1]]).unwrap()
        }),
        ("diag-short", StandardSegment::from_endpoints([0.62, 0.17], [0.66, 0.21]).unwrap()),
    ];
    for (name, w) in &candidates {
        let seq = cov_sequence(&f, &obs, w, &mu_vals, &mu_floors, 40, 8, 0.4, 2_000_000, 250_000, 20_260_810);
        print!("{:>10}:", name);
        for (i, o) in obs.iter().enumerate().skip(1) {
            let pts: Vec<(f64, f64)> = (5..=40).filter_map(|n| {
                let (v, r) = seq.rows[n][i];
                (v > 10.0 * r && v > 1e-11).then(|| (n as f64, v.ln()))
            }).collect();
            if pts.len() < 8 { print!(" {}:skip", o.id()); continue; }
            let (_s, r2) = fit(&pts);
            print!(" {}:{:.3}", o.id(), r2);
        }
        println!();
    }
    // averaged |cov| over 8 short segments
    let xs = [0.11, 0.23, 0.31, 0.43, 0.55, 0.63, 0.77, 0.87];
    let mut sums = vec![vec![0.0f64; obs.len()]; 41];
    let mut floors = vec![vec![0.0f64; obs.len()]; 41];
    for x in xs {
        let w = StandardSegment::from_endpoints([x, 0.45], [x, 0.5]).unwrap();
        let seq = cov_sequence(&f, &obs, &w, &mu_vals, &mu_floors, 40, 8, 0.4, 2_000_000, 250_000, 20_260_810);
        for n in 0..=40 {
            for i in 0..obs.len() {
                sums[n][i] += seq.rows[n][i].0 / xs.len() as f64;
                floors[n][i] = floors[n][i].max(seq.rows[n][i].1);
            }
        }
    }
    print!("  mean-abs:");
    for (i, o) in obs.iter().enumerate().skip(1) {
        let pts: Vec<(f64, f64)> = (5..=40).filter_map(|n| {
            (sums[n][i] > 10.0 * floors[n][i] && sums[n][i] > 1e-11).then(|| (n as f64, sums[n][i].ln()))
        }).collect();
        if pts.len() < 8 { print!(" {}:skip", o.id()); continue; }
        let (_s, r2) = fit(&pts);
        print!(" {}:{:.3}", o.id(), r2);
    }
    println!();
}
