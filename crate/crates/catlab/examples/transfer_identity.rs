//! The closed form of the response density: `(L_t 1 - 1)/t` equals
//! `1/(1-t)` off the uncovered hole and `-1/t` on it. In rational arithmetic
//! the identity is exact; in floats it holds to roundoff.

use catlab::cat_family::{CatFamily, ResponseDensity};
use catlab::geometry::Point2;
use catlab::response::{closed_form_residual_exact, closed_form_residual_float};
use catlab::scalar::{Rational, Scalar};

fn main() {
    let t = Rational::from_ratio(1, 8);
    let fam = CatFamily::new(t).unwrap();
    let rd = ResponseDensity::new(&fam).unwrap();

    let covered = Point2::new(Rational::from_ratio(3, 10), Rational::from_ratio(7, 10));
    let hole = Point2::new(Rational::from_ratio(1, 2), Rational::from_ratio(7, 16));
    let (v, tag) = rd.eval(&covered).unwrap();
    println!("covered point: D_t = {} ({:?})", v, tag);
    let (v, tag) = rd.eval(&hole).unwrap();
    println!("hole point:    D_t = {} ({:?})", v, tag);

    for (num, den) in [(1i64, 8i64), (1, 16), (1, 32)] {
        let exact = closed_form_residual_exact(num, den, 20_000, 7);
        println!("t = {}/{}: exact-mode max residual = {}", num, den, exact);
    }
    let float = closed_form_residual_float(0.125, 50_000, 7);
    println!("t = 1/8: float-mode max residual = {:e}", float);
}
