//! The linear bookkeeping scheme for coupled/uncoupled mass: five recursion
//! rows conserve mass, and the weighted star norm contracts by an explicit
//! factor tau < 1 for admissible parameters.

use catlab::coupling::{scheme_step, star_norm, CouplingState, SchemeParams};

fn main() {
    let params = SchemeParams::new(0.4, 0.1, 2, 3, 0.45, 1.02, 2.0, 0.25).unwrap();
    println!("tau = {:.6}", params.tau());
    let mut state = CouplingState::uncoupled(4);
    println!("{:>4} {:>12} {:>12} {:>14}", "n", "mass", "star norm", "coupled mass");
    for n in 0..=60 {
        if n % 5 == 0 {
            let coupled: f64 = state.c.iter().sum();
            println!(
                "{:>4} {:>12.9} {:>12.6} {:>14.6}",
                n,
                state.total_mass(),
                star_norm(&state, &params),
                coupled
            );
        }
        state = scheme_step(&state, &params);
    }
}
