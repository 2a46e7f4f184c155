//! Fragmentation versus expansion: the regularity Z of an evolved standard
//! family contracts from any starting value down to a plateau set by the
//! map's cutting geometry.

use catlab::cat_family::CatFamily;
use catlab::standard_pairs::{growth_stats, StandardFamily, StandardSegment};

fn main() {
    let t = 1.0 / 16.0;
    let fam = CatFamily::new(t).unwrap();
    let n0 = 5;
    let short = StandardSegment::from_endpoints([0.4, 0.4], [0.4007, 0.40072]).unwrap();
    let stats = growth_stats(
        &fam,
        &StandardFamily::single(short),
        n0 * 10,
        n0,
        1_000_000,
        200_000,
        17,
    );
    println!("start |W| ~ 1e-3, Z_0 = {:.1}", stats.z_values[0]);
    for (step, z) in stats.z_values.iter().enumerate().step_by(n0) {
        println!("  step {:3}: Z = {:9.3}", step, z);
    }
    println!(
        "fitted per-block contraction z = {:.4}, implied plateau = {:.3}",
        stats.fitted_z, stats.plateau
    );

    let line = StandardFamily::single(StandardSegment::vertical(0.5));
    let stats = growth_stats(&fam, &line, 100, n0, 1_000_000, 200_000, 18);
    let max_z = stats.z_values.iter().copied().fold(0.0f64, f64::max);
    println!(
        "full vertical line: Z stays within [{:.3}, {:.3}] over 100 steps",
        stats.z_values.iter().copied().fold(f64::MAX, f64::min),
        max_z
    );
}
