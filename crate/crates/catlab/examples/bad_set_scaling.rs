//! The bad set (points whose preimage tags change under the perturbation)
//! is a union of symmetric differences of branch images; its measure scales
//! linearly in t. Areas computed exactly in rational arithmetic.

use catlab::cat_family::{bad_set, CatFamily};
use catlab::scalar::{Rational, Scalar};

fn main() {
    let fam0: CatFamily<Rational> = CatFamily::new(Rational::zero()).unwrap();
    let mut prev: Option<f64> = None;
    for den in [8i64, 16, 32, 64, 128, 256] {
        let t = Rational::from_ratio(1, den);
        let famt = CatFamily::new(t).unwrap();
        let gb = bad_set(&fam0, &famt);
        let area = gb.total_bad_area().to_f64();
        let tv = 1.0 / den as f64;
        print!(
            "t = 1/{:<4} pieces = {:2}  m(B_t) = {:.6e}  m(B_t)/t = {:.4}",
            den,
            gb.bad.len(),
            area,
            area / tv
        );
        if let Some(p) = prev {
            print!("  halving ratio = {:.4}", area / p);
        }
        println!();
        prev = Some(area);
    }
}
