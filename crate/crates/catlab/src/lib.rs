//! Numerical laboratory for a piecewise-affine perturbation of the Arnold cat
//! map on the open unit square `M = (0,1)^2`.
//!
//! The map family acts as `(x, y) -> ({x + y}, {x + (2 - t) y})` for a
//! parameter `t` in `[0, 1/8]`. It is assembled from four affine branches
//! `z -> A_t z - v_j` with `A_t = [[1, 1], [1, 2 - t]]` on open polygonal
//! domains. At `t = 0` this is the classical cat map (Lebesgue-preserving and
//! bijective a.e.); for `t > 0` the branch images leave a hole of measure `t`
//! uncovered, so the perturbation changes the number of preimages on a set of
//! measure proportional to `t`.
//!
//! What the crate provides, module by module:
//!
//! * [`geometry`] — planar primitives (points, segments, convex polygons,
//!   segment arrangements, cones) over either `f64` or exact rational
//!   coordinates, plus Monte-Carlo neighborhood areas.
//! * [`cat_family`] — the branch system itself: evaluation, iteration,
//!   preimage tags, the transfer operator, the response density with its
//!   good/bad decomposition, iterated singularity sets, and complexity counts.
//! * [`standard_pairs`] — weighted families of unstable segments:
//!   fragmentation by the singularity lines, evolution, regularity `Z`, and
//!   growth statistics.
//! * [`foliation`] — the explicit measurable partitions of
//!   `M \ (S_0^- ∪ S_t^-)` into unstable leaves, with conditional densities
//!   and factor measures validated against 2-d quadrature.
//! * [`measures`] — physical-measure estimation by quadrature pushforward of
//!   Lebesgue along vertical lines, correlation functionals, equidistribution
//!   defects over eigen-aligned square grids, and a Monte-Carlo cross-check.
//! * [`response`] — the first-order functionals `nu_t`, the limit functional,
//!   the response series along the evolved diagonal, difference quotients,
//!   and the exact closed-form identity for the response density.
//! * [`coupling`] — geometric coupling of standard segments through aligned
//!   squares, decoupling bookkeeping under iteration, and the contracting
//!   linear scheme with its star norm.
//! * [`config`] — run configuration, the observable battery, deterministic
//!   seeding and output conventions shared by the CLI and the examples.
//!
//! The `catlab` binary is a thin batch front-end over these modules; the
//! `examples/` directory contains one runnable demo per capability.

pub mod config;
pub mod coupling;
pub mod foliation;
pub mod geometry;
pub mod cat_family;
pub mod measures;
pub mod quad;
pub mod response;
pub mod scalar;
pub mod standard_pairs;

pub use cat_family::{CatFamily, CatError};
pub use config::{Observable, RunConfig};
pub use scalar::{Ratio128, Rational, Scalar};

/// Library version string, embedded in every output row.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
