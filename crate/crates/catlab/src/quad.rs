//! Gauss–Legendre rules, compensated summation, and quadrature over segments
//! and convex polygons.
//!
//! All reductions in the crate go through [`NeumaierSum`] in a fixed order so
//! that identical inputs give byte-identical outputs.

use crate::geometry::ConvexPolygon;

/// Compensated (Neumaier) accumulator.
#[derive(Debug, Clone, Copy, Default)]
pub struct NeumaierSum {
    sum: f64,
    comp: f64,
}

impl NeumaierSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Sums a slice with compensation, in slice order.
pub fn compensated_sum(xs: &[f64]) -> f64 {
    let mut acc = NeumaierSum::new();
    for &x in xs {
        acc.add(x);
    }
    acc.value()
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`, computed by Newton on the
/// Legendre recurrence.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(order: usize) -> Self {
        assert!(order >= 1, "quadrature order must be positive");
        let n = order;
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        for i in 0..n {
            // Chebyshev initial guess.
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            for _ in 0..100 {
                let (p, dp) = legendre(n, x);
                let dx = p / dp;
                x -= dx;
                if dx.abs() < 1e-15 {
                    break;
                }
            }
            let (_, dp) = legendre(n, x);
            nodes[n - 1 - i] = x;
            weights[n - 1 - i] = 2.0 / ((1.0 - x * x) * dp * dp);
        }
        Self { nodes, weights }
    }

    /// Integrates `f` over `[a, b]`.
    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        let mid = 0.5 * (a + b);
        let half = 0.5 * (b - a);
        let mut acc = NeumaierSum::new();
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            acc.add(w * f(mid + half * x));
        }
        half * acc.value()
    }

    /// Integrates `f` along the straight segment `a -> b` in arclength.
    pub fn integrate_segment<F: FnMut([f64; 2]) -> f64>(
        &self,
        a: [f64; 2],
        b: [f64; 2],
        mut f: F,
    ) -> f64 {
        let len = ((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2)).sqrt();
        self.integrate(0.0, 1.0, |u| f([a[0] + u * (b[0] - a[0]), a[1] + u * (b[1] - a[1])]))
            * len
    }
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// Integrates `f` over a convex polygon by fan triangulation and a Duffy-type
/// product rule of the given order per triangle.
pub fn integrate_polygon<F: FnMut([f64; 2]) -> f64>(
    poly: &ConvexPolygon<f64>,
    order: usize,
    mut f: F,
) -> f64 {
    let verts = poly.vertices();
    if verts.len() < 3 {
        return 0.0;
    }
    let gl = GaussLegendre::new(order);
    let p0 = [verts[0].x, verts[0].y];
    let mut acc = NeumaierSum::new();
    for i in 1..verts.len() - 1 {
        let p1 = [verts[i].x, verts[i].y];
        let p2 = [verts[i + 1].x, verts[i + 1].y];
        let e1 = [p1[0] - p0[0], p1[1] - p0[1]];
        let e2 = [p2[0] - p0[0], p2[1] - p0[1]];
        let jac = e1[0] * e2[1] - e1[1] * e2[0]; // CCW, so positive
        let mut tri = NeumaierSum::new();
        for (u, wu) in gl.nodes.iter().zip(&gl.weights) {
            let u = 0.5 * (u + 1.0);
            for (v, wv) in gl.nodes.iter().zip(&gl.weights) {
                let v = 0.5 * (v + 1.0);
                // Duffy map: square -> triangle, Jacobian u.
                let x = p0[0] + u * ((1.0 - v) * e1[0] + v * e2[0]);
                let y = p0[1] + u * ((1.0 - v) * e1[1] + v * e2[1]);
                tri.add(wu * wv * u * f([x, y]));
            }
        }
        acc.add(0.25 * jac * tri.value());
    }
    acc.value()
}

/// Integrates `f` over the open unit square with an `order`-point tensor rule.
pub fn integrate_unit_square<F: FnMut([f64; 2]) -> f64>(order: usize, mut f: F) -> f64 {
    let gl = GaussLegendre::new(order);
    let mut acc = NeumaierSum::new();
    for (x, wx) in gl.nodes.iter().zip(&gl.weights) {
        let x = 0.5 * (x + 1.0);
        for (y, wy) in gl.nodes.iter().zip(&gl.weights) {
            let y = 0.5 * (y + 1.0);
            acc.add(wx * wy * f([x, y]));
        }
    }
    0.25 * acc.value()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{ConvexPolygon, Point2};
    use approx::assert_abs_diff_eq;

    #[test]
    fn gl_integrates_polynomials_exactly() {
        let gl = GaussLegendre::new(6);
        let v = gl.integrate(0.0, 1.0, |x| x.powi(10));
        assert_abs_diff_eq!(v, 1.0 / 11.0, epsilon = 1e-14);
    }

    #[test]
    fn gl_integrates_trig() {
        let gl = GaussLegendre::new(24);
        let v = gl.integrate(0.0, 1.0, |x| (2.0 * std::f64::consts::PI * x).cos());
        assert_abs_diff_eq!(v, 0.0, epsilon = 1e-14);
    }

    #[test]
    fn polygon_quadrature_matches_area_and_moments() {
        let square = ConvexPolygon::new(vec![
            Point2::new(0.0, 0.0),
            Point2::new(1.0, 0.0),
            Point2::new(1.0, 1.0),
            Point2::new(0.0, 1.0),
        ])
        .unwrap();
        assert_abs_diff_eq!(integrate_polygon(&square, 8, |_| 1.0), 1.0, epsilon = 1e-13);
        assert_abs_diff_eq!(
            integrate_polygon(&square, 8, |p| p[0] * p[1]),
            0.25,
            epsilon = 1e-13
        );
        let tri = ConvexPolygon::new(vec![
            Point2::new(0.0, 0.0),
            Point2::new(1.0, 0.0),
            Point2::new(0.0, 1.0),
        ])
        .unwrap();
        assert_abs_diff_eq!(integrate_polygon(&tri, 8, |_| 1.0), 0.5, epsilon = 1e-14);
    }

    #[test]
    fn neumaier_handles_cancellation() {
        let xs = [1e16, 1.0, -1e16];
        assert_eq!(compensated_sum(&xs), 1.0);
    }
}
