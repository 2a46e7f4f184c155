//! Geometric coupling: two long standard segments crossing the same small
//! eigen-aligned square couple along the stable direction; under iteration
//! the coupled distance contracts by the stable multiplier while connectors
//! crossing singularities shed mass.

use catlab::cat_family::CatFamily;
use catlab::coupling::{couple_segments, decoupled_fraction, verify_eta_coupled, AlignedSquare};
use catlab::standard_pairs::StandardSegment;

fn main() {
    let fam = CatFamily::new(1.0 / 16.0).unwrap();
    let e_u = fam.eigen.e_u;
    let e_s = fam.eigen.e_s;
    let mk = |c: [f64; 2], half: f64| {
        StandardSegment::from_endpoints(
            [c[0] - half * e_u[0], c[1] - half * e_u[1]],
            [c[0] + half * e_u[0], c[1] + half * e_u[1]],
        )
        .unwrap()
    };
    let w1 = mk([0.5, 0.45], 0.35);
    let off = 8e-4;
    let w2 = mk([0.5 + off * e_s[0], 0.45 + off * e_s[1]], 0.3);
    let q = AlignedSquare::new(
        &fam,
        [0.5 + 0.5 * off * e_s[0], 0.45 + 0.5 * off * e_s[1]],
        5e-4,
    );
    let pair = couple_segments(&w1, &w2, &q, 5e-4).unwrap();
    println!(
        "coupled subsegments of length {:.4} / {:.4} at eta = {:.3e} (verified: {})",
        pair.w1.length(),
        pair.w2.length(),
        pair.eta,
        verify_eta_coupled(&pair, e_u, e_s, 200)
    );
    let report = decoupled_fraction(&fam, &pair, 5, 4, 8).unwrap();
    println!(
        "per-step stable contraction: {:.6} (mu_s = {:.6})",
        report.contraction_per_step, fam.eigen.mu_s
    );
    for (i, (eta, loss)) in report
        .eta_sequence
        .iter()
        .zip(&report.block_losses)
        .enumerate()
    {
        println!("block {}: eta = {:.3e}, decoupled mass = {:.3e}", i, eta, loss);
    }
    println!("surviving coupled mass = {:.6}", report.surviving_mass);
}
