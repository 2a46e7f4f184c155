//! Pushforward of Lebesgue under iterates: the composite quadrature profile
//! `m(phi . F_t^n)` stabilizes geometrically to the physical measure, and a
//! seeded Monte-Carlo run cross-checks the early iterates.

use catlab::cat_family::CatFamily;
use catlab::config::Observable;
use catlab::measures::{monte_carlo_pushforward, pushforward_profile};

fn main() {
    let t = 1.0 / 16.0;
    let fam = CatFamily::new(t).unwrap();
    let obs = [Observable::Xy, Observable::Cos2PiXSin2PiY];
    let profile = pushforward_profile(&fam, &obs, 10, 1024, 8, 0.4, 1 << 22).unwrap();
    println!("t = {}: m(phi . F^n) over n", t);
    println!("{:>3} {:>22} {:>22}", "n", "xy", "cos2pix*sin2piy");
    for n in 0..=10 {
        println!(
            "{:>3} {:>22.12} {:>22.12}",
            n, profile.values[n][0], profile.values[n][1]
        );
    }
    let n = 3;
    let mc = monte_carlo_pushforward(&fam, &obs, n, 2_000_000, 99);
    for (i, o) in obs.iter().enumerate() {
        println!(
            "mc check at n = {}: {} = {:.6} +/- {:.1e} (quadrature {:.6})",
            n,
            o.id(),
            mc[i].0,
            mc[i].1,
            profile.values[n][i]
        );
    }
}
