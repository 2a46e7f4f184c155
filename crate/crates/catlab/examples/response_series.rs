//! The response series: each term integrates an observable along the k-th
//! image of the diagonal under the unperturbed map; the finite-difference
//! quotients of the perturbed physical measure approach the truncated sum.

use catlab::cat_family::CatFamily;
use catlab::config::Observable;
use catlab::response::{diff_quotients, response_series};

fn main() {
    let fam0 = CatFamily::new(0.0).unwrap();
    let obs = [Observable::Xy, Observable::Cos2PiXSin2PiY];
    let series = response_series(&fam0, &obs, 20, 10, 12, 0.4, 2_000_000, 8_000_000).unwrap();
    println!("series terms (xy):");
    for k in 0..=8 {
        println!("  k = {:2}: {:+.6e}", k, series.terms[k][0]);
    }
    println!(
        "truncated sums: xy = {:+.7}, cos2pix*sin2piy = {:+.3e}",
        series.series_value(0),
        series.series_value(1)
    );
    for den in [64i64, 128, 256] {
        let fam = CatFamily::new(1.0 / den as f64).unwrap();
        let q = diff_quotients(&fam, &obs, 1e-4, 24, 1024, 8, 0.4, 4_000_000).unwrap();
        println!(
            "t = 1/{:<4} quotient(xy) = {:+.5} (delta {:.1e})  quotient(cs) = {:+.5}",
            den, q[0].0, q[0].1, q[1].0
        );
    }
}
