//! Builds the forward singularity pullbacks `S_t^{+,k}` and the backward set
//! `S_t^-`, and reports their segment counts, lengths, and cone alignment.

use catlab::cat_family::{arrangement_in_cone, CatFamily};
use catlab::geometry::Cone;

fn main() {
    let stable = Cone::stable(1, 4).unwrap();
    let unstable = Cone::unstable();
    for t in [0.0, 1.0 / 64.0, 1.0 / 16.0, 0.125] {
        let fam = CatFamily::new(t).unwrap();
        println!("t = {}", t);
        println!(
            "  backward segments: {} (unstable-aligned: {})",
            fam.s_minus().segments.len(),
            arrangement_in_cone(fam.s_minus(), &unstable)
        );
        for k in 1..=6 {
            let arr = fam.singularity_forward(k, 8).unwrap();
            println!(
                "  S^{{+,{}}}: {:4} segments, total length {:8.3}, stable-aligned: {}",
                k,
                arr.segments.len(),
                arr.total_length(),
                arrangement_in_cone(&arr, &stable)
            );
        }
    }
}
