//! The measurable partitions of the square minus both backward singularity
//! sets: seven long-leaf regions plus two shrinking triangles, each carrying
//! a conditional density whose nested quadrature reproduces plain 2-d
//! integrals.

use catlab::foliation::{build_f1, build_f2, disintegration_check, min_leaf_length, RegionId};
use catlab::scalar::{Rational, Scalar};

fn main() {
    let t = 0.125;
    let regions = build_f1(t).unwrap();
    println!("long-leaf regions at t = {}:", t);
    for r in &regions {
        println!(
            "  {}: area {:.5}, min leaf length {:.4}",
            r.id.name(),
            r.polygon.area(),
            min_leaf_length(r, 256)
        );
    }
    let [rt, bt] = build_f2(t).unwrap();
    println!(
        "shrinking triangles: area(R) = {:.6}, area(B) = {:.6} (each t^2/2 = {:.6})",
        rt.polygon.area(),
        bt.polygon.area(),
        t * t / 2.0
    );
    let tr = Rational::from_ratio(1, 8);
    let total = RegionId::ALL
        .iter()
        .map(|&id| catlab::foliation::region_polygon(id, &tr).area())
        .fold(Rational::zero(), |a, b| a + b);
    println!("exact area sum over all nine regions: {}", total);

    let g = |p: [f64; 2]| (2.0 * std::f64::consts::PI * p[0]).cos() * p[1];
    for r in regions.iter().chain([&rt, &bt]) {
        let res = disintegration_check(r, g, 1e-6).unwrap();
        println!("  disintegration residual on {}: {:.2e}", r.id.name(), res);
    }
}
