//! The perturbed cat-map family `F_t` on `M = (0,1)^2`.
//!
//! For `t` in `[0, 1/8]` the map is `(x, y) -> ({x + y}, {x + (2 - t) y})`,
//! realized as four affine branches `z -> A_t z - v_j`,
//! `A_t = [[1, 1], [1, 2 - t]]`, `v_1 = (0,0)`, `v_2 = (0,1)`, `v_3 = (1,1)`,
//! `v_4 = (1,2)`, on open polygonal domains whose closures tile the square.
//! The branch-domain boundaries are the three interior lines
//! `x + (2-t) y = 1`, `x + (2-t) y = 2`, `x + y = 1`; their images under the
//! branches are unstable-aligned segments. For `t > 0` the branch images are
//! pairwise disjoint and leave a hole `H_t` of measure `t` uncovered, so the
//! number of preimages of a point is 0 or 1.
//!
//! This module owns branch evaluation, iteration with itineraries, preimage
//! tags, the transfer operator, the response density `(L_t 1 - 1)/t` with its
//! good/bad decomposition, iterated pullbacks of the singularity set, and the
//! complexity (maximal number of faces meeting at an arrangement vertex).

use std::f64::consts::PI;

use thiserror::Error;

use crate::geometry::{
    convex_difference, dist_to_boundary, Cone, ConvexPolygon, Point2, PointLocation, Segment,
    SegmentArrangement,
};
use crate::scalar::{format_scalar, Scalar};

pub const T_MAX_NUM: i64 = 1;
pub const T_MAX_DEN: i64 = 8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CatError {
    #[error("parameter t = {0} outside [0, 1/8]")]
    ParameterOutOfRange(String),
    #[error("point lies on a singularity (step {step})")]
    OnSingularity { step: usize },
    #[error("pullback depth {0} exceeds the configured cap {1}")]
    DepthExceeded(u32, u32),
}

/// One affine branch `z -> matrix . z - translation` with its open domain and
/// image polygons.
#[derive(Debug, Clone)]
pub struct AffineBranch<S> {
    pub matrix: [[S; 2]; 2],
    pub translation: [S; 2],
    pub domain: ConvexPolygon<S>,
    pub image: ConvexPolygon<S>,
    pub index: u8,
}

impl<S: Scalar> AffineBranch<S> {
    pub fn apply(&self, p: &Point2<S>) -> Point2<S> {
        Point2::new(
            self.matrix[0][0].clone() * p.x.clone() + self.matrix[0][1].clone() * p.y.clone()
                - self.translation[0].clone(),
            self.matrix[1][0].clone() * p.x.clone() + self.matrix[1][1].clone() * p.y.clone()
                - self.translation[1].clone(),
        )
    }

    pub fn det(&self) -> S {
        self.matrix[0][0].clone() * self.matrix[1][1].clone()
            - self.matrix[0][1].clone() * self.matrix[1][0].clone()
    }

    /// Inverse branch `z -> A^{-1} (z + translation)`.
    pub fn apply_inverse(&self, p: &Point2<S>) -> Point2<S> {
        let det = self.det();
        let x = p.x.clone() + self.translation[0].clone();
        let y = p.y.clone() + self.translation[1].clone();
        Point2::new(
            (self.matrix[1][1].clone() * x.clone() - self.matrix[0][1].clone() * y.clone())
                / det.clone(),
            (self.matrix[0][0].clone() * y - self.matrix[1][0].clone() * x) / det,
        )
    }

}

/// Spectral data of `A_t` plus the cone expansion bounds, in float form.
#[derive(Debug, Clone, Copy)]
pub struct EigenData {
    pub mu_u: f64,
    pub mu_s: f64,
    pub e_u: [f64; 2],
    pub e_s: [f64; 2],
    /// Minimal expansion of unstable-cone directions over t in [0, 1/8].
    pub lambda: f64,
    /// Maximal expansion of unstable-cone directions over t in [0, 1/8].
    pub lambda_bar: f64,
}

/// The four-branch family at a fixed parameter.
#[derive(Debug, Clone)]
pub struct CatFamily<S> {
    pub t: S,
    pub branches: [AffineBranch<S>; 4],
    pub eigen: EigenData,
    s_plus_1: SegmentArrangement<S>,
    s_minus: SegmentArrangement<S>,
}

/// Builds the family at parameter `t`.
pub fn make_family<S: Scalar>(t: S) -> Result<CatFamily<S>, CatError> {
    CatFamily::new(t)
}

impl CatFamily<f64> {
    pub fn from_t(t: f64) -> Result<Self, CatError> {
        Self::new(t)
    }
}

impl<S: Scalar> CatFamily<S> {
    pub fn new(t: S) -> Result<Self, CatError> {
        if t < S::zero() || t > S::from_ratio(T_MAX_NUM, T_MAX_DEN) {
            return Err(CatError::ParameterOutOfRange(format!("{}", t)));
        }
        let one = S::one();
        let two = S::from_ratio(2, 1);
        let kappa = two.clone() - t.clone(); // 2 - t
        let c = one.clone() / kappa.clone(); // 1/(2-t)
        let zero = S::zero();

        let matrix = [
            [one.clone(), one.clone()],
            [one.clone(), kappa.clone()],
        ];
        let p = |x: S, y: S| Point2::new(x, y);

        // Domains; closures tile the square, shared edges are the three
        // interior singularity lines.
        let d1 = ConvexPolygon::new(vec![
            p(zero.clone(), zero.clone()),
            p(one.clone(), zero.clone()),
            p(zero.clone(), c.clone()),
        ])
        .expect("branch 1 domain");
        let d2 = ConvexPolygon::new(vec![
            p(one.clone(), zero.clone()),
            p(zero.clone(), one.clone()),
            p(zero.clone(), c.clone()),
        ])
        .expect("branch 2 domain");
        let d3 = ConvexPolygon::new(vec![
            p(one.clone(), zero.clone()),
            p(one.clone(), c.clone()),
            p(t.clone(), one.clone()),
            p(zero.clone(), one.clone()),
        ])
        .expect("branch 3 domain");
        let d4 = ConvexPolygon::new(vec![
            p(one.clone(), c.clone()),
            p(one.clone(), one.clone()),
            p(t.clone(), one.clone()),
        ])
        .expect("branch 4 domain");

        let translations = [
            [zero.clone(), zero.clone()],
            [zero.clone(), one.clone()],
            [one.clone(), one.clone()],
            [one.clone(), two.clone()],
        ];
        let domains = [d1, d2, d3, d4];
        let branches: [AffineBranch<S>; 4] = std::array::from_fn(|i| {
            let neg_v = [
                -(translations[i][0].clone()),
                -(translations[i][1].clone()),
            ];
            let image = domains[i].map_affine(&matrix, &neg_v);
            AffineBranch {
                matrix: matrix.clone(),
                translation: translations[i].clone(),
                domain: domains[i].clone(),
                image,
                index: (i + 1) as u8,
            }
        });

        let eigen = eigen_data(t.to_f64());
        let s_plus_1 = s_plus_one(&t);
        let s_minus = backward_from_images(&branches);
        Ok(Self {
            t,
            branches,
            eigen,
            s_plus_1,
            s_minus,
        })
    }

    pub fn det(&self) -> S {
        self.branches[0].det()
    }

    /// Signed values of the three branch-cut lines at a point:
    /// `x + (2-t) y - 1`, `x + (2-t) y - 2`, `x + y - 1`.
    fn cut_values(&self, p: &Point2<S>) -> [S; 3] {
        let kappa = S::from_ratio(2, 1) - self.t.clone();
        let g = p.x.clone() + kappa * p.y.clone();
        [
            g.clone() - S::one(),
            g - S::from_ratio(2, 1),
            p.x.clone() + p.y.clone() - S::one(),
        ]
    }

    /// Branch index (1..=4) containing the point, or `None` on a cut line or
    /// outside the open square.
    pub fn branch_of(&self, p: &Point2<S>) -> Option<u8> {
        let eps = S::snap();
        let inside = p.x.clone() > eps.clone()
            && p.y.clone() > eps.clone()
            && p.x.clone() < S::one() - eps.clone()
            && p.y.clone() < S::one() - eps.clone();
        if !inside {
            return None;
        }
        let [l1, l2, l3] = self.cut_values(p);
        if l1.abs() <= eps.clone() || l2.abs() <= eps.clone() || l3.abs() <= eps {
            return None;
        }
        let zero = S::zero();
        Some(if l1 < zero {
            1
        } else if l3 < zero {
            2
        } else if l2 < zero {
            3
        } else {
            4
        })
    }

    /// Applies the map. The image is computed by the branch-affine formula
    /// and cross-checked against the fractional-part formula.
    pub fn apply(&self, p: &Point2<S>) -> Result<(Point2<S>, u8), CatError> {
        let j = self
            .branch_of(p)
            .ok_or(CatError::OnSingularity { step: 0 })?;
        let img = self.branches[(j - 1) as usize].apply(p);
        debug_assert!(
            {
                let frac = self.fractional_image(p);
                (frac.x.clone() - img.x.clone()).abs() <= S::from_ratio(1, 1_000_000_000_000)
                    && (frac.y.clone() - img.y.clone()).abs()
                        <= S::from_ratio(1, 1_000_000_000_000)
            },
            "branch-affine and fractional-part formulas disagree"
        );
        // Images of interior off-cut points stay strictly inside M.
        let eps = S::snap();
        if img.x <= eps.clone()
            || img.y <= eps.clone()
            || img.x >= S::one() - eps.clone()
            || img.y >= S::one() - eps
        {
            return Err(CatError::OnSingularity { step: 0 });
        }
        Ok((img, j))
    }

    /// Fractional-part formula `({x + y}, {x + (2 - t) y})`, exact in
    /// rational mode.
    pub fn fractional_image(&self, p: &Point2<S>) -> Point2<S> {
        let kappa = S::from_ratio(2, 1) - self.t.clone();
        let fx = frac_in(p.x.clone() + p.y.clone(), 2);
        let fy = frac_in(p.x.clone() + kappa * p.y.clone(), 3);
        Point2::new(fx, fy)
    }

    /// n-fold application with itinerary; reports the failing step when the
    /// orbit lands on a singularity.
    pub fn iterate(&self, p: &Point2<S>, n: usize) -> Result<(Point2<S>, Vec<u8>), CatError> {
        let mut cur = p.clone();
        let mut itinerary = Vec::with_capacity(n);
        for step in 0..n {
            match self.apply(&cur) {
                Ok((img, j)) => {
                    itinerary.push(j);
                    cur = img;
                }
                Err(CatError::OnSingularity { .. }) => {
                    return Err(CatError::OnSingularity { step });
                }
                Err(e) => return Err(e),
            }
        }
        Ok((cur, itinerary))
    }

    /// Branch indices whose image polygons strictly contain the point.
    pub fn preimage_tags_of(&self, p: &Point2<S>) -> Result<Vec<u8>, CatError> {
        let mut tags = Vec::new();
        for b in &self.branches {
            match b.image.locate(p) {
                PointLocation::Inside => tags.push(b.index),
                PointLocation::Boundary => {
                    return Err(CatError::OnSingularity { step: 0 });
                }
                PointLocation::Outside => {}
            }
        }
        Ok(tags)
    }

    /// Transfer operator applied to `g` at `x`: the sum over preimages of
    /// `g / |det A_t|`. An empty preimage set gives 0.
    pub fn transfer<F: Fn([f64; 2]) -> f64>(&self, g: F, p: &Point2<S>) -> Result<f64, CatError> {
        let tags = self.preimage_tags_of(p)?;
        let det = self.det().to_f64().abs();
        let mut acc = 0.0;
        for j in tags {
            let pre = self.branches[(j - 1) as usize].apply_inverse(p);
            acc += g(pre.to_f64()) / det;
        }
        Ok(acc)
    }

    /// Transfer operator on the constant function 1, exact in rational mode.
    pub fn transfer_constant(&self, p: &Point2<S>) -> Result<S, CatError> {
        let tags = self.preimage_tags_of(p)?;
        let det = self.det().abs();
        let count = S::from_ratio(tags.len() as i64, 1);
        Ok(count / det)
    }

    /// The three interior forward singularity lines (pullback generation 1).
    pub fn s_plus(&self) -> &SegmentArrangement<S> {
        &self.s_plus_1
    }

    /// The interior backward singularity lines (images of the cuts).
    pub fn s_minus(&self) -> &SegmentArrangement<S> {
        &self.s_minus
    }

    /// Arrangement of all segments where `F_t^k` may be discontinuous,
    /// obtained by iterated branch-inverse pullback of the cut lines.
    pub fn singularity_forward(&self, k: u32, k_max: u32) -> Result<SegmentArrangement<S>, CatError> {
        if k < 1 || k > k_max {
            return Err(CatError::DepthExceeded(k, k_max));
        }
        let mut all: Vec<Segment<S>> = self.s_plus_1.segments.clone();
        let mut gen = self.s_plus_1.segments.clone();
        for _ in 2..=k {
            let mut next = Vec::new();
            for seg in &gen {
                for b in &self.branches {
                    if let Some((lo, hi)) = b.image.clip_segment(seg) {
                        let piece = Segment::new(seg.at(lo), seg.at(hi));
                        if piece.is_degenerate() {
                            continue;
                        }
                        let pulled = Segment::new(
                            b.apply_inverse(&piece.a),
                            b.apply_inverse(&piece.b),
                        );
                        if !pulled.is_degenerate() {
                            next.push(pulled);
                        }
                    }
                }
            }
            all.extend(next.iter().cloned());
            gen = next;
        }
        Ok(SegmentArrangement::new(merge_collinear(all), k))
    }

    /// JSON document `{t, branches: [...]}`; rational mode serializes
    /// coordinates as `p/q` strings.
    pub fn to_json(&self) -> serde_json::Value {
        let fmt = |x: &S| -> serde_json::Value {
            if S::EXACT {
                serde_json::Value::String(format_scalar(x))
            } else {
                serde_json::json!(x.to_f64())
            }
        };
        let branches: Vec<serde_json::Value> = self
            .branches
            .iter()
            .map(|b| {
                serde_json::json!({
                    "index": b.index,
                    "matrix": [[fmt(&b.matrix[0][0]), fmt(&b.matrix[0][1])],
                               [fmt(&b.matrix[1][0]), fmt(&b.matrix[1][1])]],
                    "translation": [fmt(&b.translation[0]), fmt(&b.translation[1])],
                    "domain": b.domain.vertices().iter()
                        .map(|p| serde_json::json!([fmt(&p.x), fmt(&p.y)]))
                        .collect::<Vec<_>>(),
                })
            })
            .collect();
        serde_json::json!({ "t": fmt(&self.t), "branches": branches })
    }

    pub fn to_f64_family(&self) -> CatFamily<f64> {
        CatFamily::new(self.t.to_f64()).expect("parameter already validated")
    }
}

/// Fractional part of `v` known to lie in `[0, bound)`.
fn frac_in<S: Scalar>(v: S, bound: i64) -> S {
    let mut v = v;
    for _ in 0..bound {
        if v >= S::one() {
            v = v - S::one();
        } else {
            break;
        }
    }
    v
}

fn s_plus_one<S: Scalar>(t: &S) -> SegmentArrangement<S> {
    let one = S::one();
    let kappa = S::from_ratio(2, 1) - t.clone();
    let c = one.clone() / kappa;
    let segs = vec![
        // x + (2-t) y = 1
        Segment::new(Point2::new(one.clone(), S::zero()), Point2::new(S::zero(), c.clone())),
        // x + (2-t) y = 2
        Segment::new(Point2::new(t.clone(), one.clone()), Point2::new(one.clone(), c)),
        // x + y = 1
        Segment::new(Point2::new(S::zero(), one.clone()), Point2::new(one, S::zero())),
    ];
    SegmentArrangement::new(segs, 1)
}

/// Interior edges of the branch images: the backward singularity set.
fn backward_from_images<S: Scalar>(branches: &[AffineBranch<S>; 4]) -> SegmentArrangement<S> {
    let mut segs = Vec::new();
    for b in branches {
        for e in b.image.edges() {
            if !lies_on_unit_boundary(&e) {
                segs.push(e);
            }
        }
    }
    SegmentArrangement::new(merge_collinear(segs), 0)
}

fn lies_on_unit_boundary<S: Scalar>(seg: &Segment<S>) -> bool {
    let eps = S::snap();
    let on_line = |v: &S, c: i64| (v.clone() - S::from_ratio(c, 1)).abs() <= eps.clone();
    (on_line(&seg.a.x, 0) && on_line(&seg.b.x, 0))
        || (on_line(&seg.a.x, 1) && on_line(&seg.b.x, 1))
        || (on_line(&seg.a.y, 0) && on_line(&seg.b.y, 0))
        || (on_line(&seg.a.y, 1) && on_line(&seg.b.y, 1))
}

/// Merges collinear overlapping segments; exact grouping in rational mode,
/// snapped keys in float mode.
pub fn merge_collinear<S: Scalar>(segs: Vec<Segment<S>>) -> Vec<Segment<S>> {
    use std::collections::HashMap;
    // Line through a, b: n . z = c with n = (ay - by, bx - ax), normalized so
    // the first nonzero component is +1.
    let mut groups: HashMap<String, Vec<(S, S, Segment<S>)>> = HashMap::new();
    for seg in segs {
        if seg.is_degenerate() {
            continue;
        }
        let nx = seg.a.y.clone() - seg.b.y.clone();
        let ny = seg.b.x.clone() - seg.a.x.clone();
        let c = nx.clone() * seg.a.x.clone() + ny.clone() * seg.a.y.clone();
        let scale = if nx.abs() > ny.abs() { nx.clone() } else { ny.clone() };
        let (nx, ny, c) = (nx / scale.clone(), ny / scale.clone(), c / scale);
        let key = if S::EXACT {
            format!("{}|{}|{}", nx, ny, c)
        } else {
            // Integer-rounded key; kills negative zeros and 1-ulp noise.
            let r = |v: &S| (v.to_f64() * 1e9).round() as i64;
            format!("{}|{}|{}", r(&nx), r(&ny), r(&c))
        };
        // Parameter along the line: projection on the direction (ny, -nx).
        let dirx = ny.clone();
        let diry = -nx.clone();
        let pa = dirx.clone() * seg.a.x.clone() + diry.clone() * seg.a.y.clone();
        let pb = dirx * seg.b.x.clone() + diry * seg.b.y.clone();
        let (lo, hi, s) = if pa <= pb {
            (pa, pb, seg)
        } else {
            (pb, pa, Segment::new(seg.b.clone(), seg.a.clone()))
        };
        groups.entry(key).or_default().push((lo, hi, s));
    }
    let mut out = Vec::new();
    let mut keys: Vec<String> = groups.keys().cloned().collect();
    keys.sort();
    for key in keys {
        let mut intervals = groups.remove(&key).unwrap();
        intervals.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        let mut cur: Option<(S, S, Segment<S>)> = None;
        for (lo, hi, seg) in intervals {
            match cur.take() {
                None => cur = Some((lo, hi, seg)),
                Some((clo, chi, cseg)) => {
                    if lo.clone() - chi.clone() <= S::snap() {
                        if hi > chi {
                            // Extend: endpoints of the union are cseg start,
                            // seg end (both sorted by parameter).
                            cur = Some((clo, hi, Segment::new(cseg.a, seg.b)));
                        } else {
                            cur = Some((clo, chi, cseg));
                        }
                    } else {
                        out.push(cseg);
                        cur = Some((lo, hi, seg));
                    }
                }
            }
        }
        if let Some((_, _, cseg)) = cur {
            out.push(cseg);
        }
    }
    out
}

fn eigen_data(t: f64) -> EigenData {
    let disc = (t * t - 2.0 * t + 5.0).sqrt();
    let mu_u = (3.0 - t + disc) / 2.0;
    let mu_s = (1.0 - t) / mu_u;
    let norm_u = (1.0 + (mu_u - 1.0).powi(2)).sqrt();
    let norm_s = (1.0 + (mu_s - 1.0).powi(2)).sqrt();
    let (lambda, lambda_bar) = cone_expansion_bounds();
    EigenData {
        mu_u,
        mu_s,
        e_u: [1.0 / norm_u, (mu_u - 1.0) / norm_u],
        e_s: [1.0 / norm_s, (mu_s - 1.0) / norm_s],
        lambda,
        lambda_bar,
    }
}

/// Expansion of a unit vector at angle theta under `A_t`, squared.
fn cone_gain2(theta: f64, kappa: f64) -> f64 {
    let (s, c) = theta.sin_cos();
    (c + s).powi(2) + (c + kappa * s).powi(2)
}

/// Certified extrema of the cone expansion over the closed unstable cone and
/// `t` in `[0, 1/8]`. The gain is monotone in `t`, so the minimum sits at
/// `t = 1/8` and the maximum at `t = 0`; in the angle we scan 1-degree panels
/// and refine any panel whose curvature bound could beat the current
/// extremum.
pub fn cone_expansion_bounds() -> (f64, f64) {
    let min = scan_extremum(2.0 - 0.125, false);
    let max = scan_extremum(2.0, true);
    (min.sqrt(), max.sqrt())
}

fn scan_extremum(kappa: f64, want_max: bool) -> f64 {
    let curvature = 8.0 * (1.0 + kappa * kappa); // |g''| bound
    let panels = 90;
    let h = PI / 2.0 / panels as f64;
    let mut best = if want_max { f64::MIN } else { f64::MAX };
    for i in 0..=panels {
        let g = cone_gain2(i as f64 * h, kappa);
        if want_max {
            best = best.max(g);
        } else {
            best = best.min(g);
        }
    }
    // Refine panels whose interior could beat the endpoint extremum.
    for i in 0..panels {
        let a = i as f64 * h;
        let b = a + h;
        refine(&mut best, a, b, kappa, curvature, want_max);
    }
    best
}

fn refine(best: &mut f64, a: f64, b: f64, kappa: f64, curvature: f64, want_max: bool) {
    let h = b - a;
    if h < 1e-9 {
        return;
    }
    let ga = cone_gain2(a, kappa);
    let gb = cone_gain2(b, kappa);
    let slack = curvature * h * h / 8.0;
    let could_beat = if want_max {
        ga.max(gb) + slack > *best + 1e-15
    } else {
        ga.min(gb) - slack < *best - 1e-15
    };
    if !could_beat {
        return;
    }
    let mid = 0.5 * (a + b);
    let gm = cone_gain2(mid, kappa);
    if want_max {
        *best = best.max(gm);
    } else {
        *best = best.min(gm);
    }
    refine(best, a, mid, kappa, curvature, want_max);
    refine(best, mid, b, kappa, curvature, want_max);
}

/// Preimage tags under both the unperturbed and the perturbed family.
pub fn preimage_tags<S: Scalar>(
    fam0: &CatFamily<S>,
    famt: &CatFamily<S>,
    p: &Point2<S>,
) -> Result<(Vec<u8>, Vec<u8>), CatError> {
    let n0 = fam0.preimage_tags_of(p)?;
    let nt = famt.preimage_tags_of(p)?;
    Ok((n0, nt))
}

/// Good/bad decomposition data: the bad set is the union of the symmetric
/// differences of perturbed and unperturbed branch images.
#[derive(Debug, Clone)]
pub struct GoodBadPartition<S> {
    pub bad: Vec<ConvexPolygon<S>>,
    pub singular: SegmentArrangement<S>,
    pub t: S,
}

impl<S: Scalar> GoodBadPartition<S> {
    pub fn total_bad_area(&self) -> S {
        self.bad
            .iter()
            .map(|p| p.area())
            .fold(S::zero(), |a, b| a + b)
    }

    pub fn locate(&self, p: &Point2<S>) -> PointLocation {
        let mut boundary = false;
        for piece in &self.bad {
            match piece.locate(p) {
                PointLocation::Inside => return PointLocation::Inside,
                PointLocation::Boundary => boundary = true,
                PointLocation::Outside => {}
            }
        }
        if boundary {
            PointLocation::Boundary
        } else {
            PointLocation::Outside
        }
    }
}

/// Explicit polygon decomposition of the bad set, with the union of both
/// backward singularity sets.
pub fn bad_set<S: Scalar>(fam0: &CatFamily<S>, famt: &CatFamily<S>) -> GoodBadPartition<S> {
    let mut bad = Vec::new();
    for (b0, bt) in fam0.branches.iter().zip(&famt.branches) {
        bad.extend(convex_difference(&b0.image, &bt.image));
        bad.extend(convex_difference(&bt.image, &b0.image));
    }
    let mut segs = fam0.s_minus.segments.clone();
    segs.extend(famt.s_minus.segments.iter().cloned());
    GoodBadPartition {
        bad,
        singular: SegmentArrangement::new(merge_collinear(segs), 0),
        t: famt.t.clone(),
    }
}

/// Good/bad tag of a point for the response density.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DensityTag {
    Good,
    Bad,
}

/// Evaluator for the response density `D_t = (L_t 1 - 1)/t`; builds the
/// good/bad partition once.
pub struct ResponseDensity<S: Scalar> {
    famt: CatFamily<S>,
    partition: GoodBadPartition<S>,
    inv_t: S,
    inv_one_minus_t: S,
}

impl<S: Scalar> ResponseDensity<S> {
    pub fn new(famt: &CatFamily<S>) -> Result<Self, CatError> {
        if famt.t <= S::zero() {
            return Err(CatError::ParameterOutOfRange(format!("{}", famt.t)));
        }
        let fam0 = CatFamily::new(S::zero())?;
        let partition = bad_set(&fam0, famt);
        Ok(Self {
            famt: famt.clone(),
            partition,
            inv_t: S::one() / famt.t.clone(),
            inv_one_minus_t: S::one() / (S::one() - famt.t.clone()),
        })
    }

    /// Density value alone (no good/bad tag), skipping the partition walk.
    pub fn eval_value(&self, p: &Point2<S>) -> Result<S, CatError> {
        let l1 = self.famt.transfer_constant(p)?;
        Ok((l1 - S::one()) * self.inv_t.clone())
    }

    /// `(value, tag)` at a point off both backward singularity sets.
    pub fn eval(&self, p: &Point2<S>) -> Result<(S, DensityTag), CatError> {
        let l1 = self.famt.transfer_constant(p)?;
        let value = (l1 - S::one()) * self.inv_t.clone();
        let tag = match self.partition.locate(p) {
            PointLocation::Inside => DensityTag::Bad,
            PointLocation::Boundary => return Err(CatError::OnSingularity { step: 0 }),
            PointLocation::Outside => DensityTag::Good,
        };
        Ok((value, tag))
    }

    /// Closed form: `1/(1-t)` off the hole, `-1/t` on it. The hole is the
    /// diagonal strip `0 < x - y < t` together with the top-left triangle
    /// `y > x + 1 - t`.
    pub fn closed_form(&self, p: &Point2<S>) -> Result<S, CatError> {
        let eps = S::snap();
        let d = p.x.clone() - p.y.clone();
        let r = p.y.clone() - p.x.clone() - S::one() + self.famt.t.clone();
        if d.abs() <= eps.clone()
            || (d.clone() - self.famt.t.clone()).abs() <= eps.clone()
            || r.abs() <= eps
        {
            return Err(CatError::OnSingularity { step: 0 });
        }
        let in_hole =
            (d > S::zero() && d < self.famt.t.clone()) || r > S::zero();
        Ok(if in_hole {
            -self.inv_t.clone()
        } else {
            self.inv_one_minus_t.clone()
        })
    }

    pub fn partition(&self) -> &GoodBadPartition<S> {
        &self.partition
    }
}

/// Convenience one-shot evaluation of the response density.
pub fn response_density<S: Scalar>(
    famt: &CatFamily<S>,
    p: &Point2<S>,
) -> Result<(S, DensityTag), CatError> {
    ResponseDensity::new(famt)?.eval(p)
}

/// Complexity of the depth-`k` singularity arrangement: the maximal number
/// of faces of `M \ S_t^{+,k}` adjacent to a single arrangement vertex.
pub fn complexity(famt: &CatFamily<f64>, k: u32, k_max: u32) -> Result<usize, CatError> {
    let arr = famt.singularity_forward(k, k_max)?;
    Ok(arrangement_max_faces(&arr))
}

fn vertex_key(p: [f64; 2]) -> (i64, i64) {
    ((p[0] * 1e9).round() as i64, (p[1] * 1e9).round() as i64)
}

/// Maximal number of faces meeting at a vertex of the arrangement, counting
/// only sectors that lie inside the open square.
pub fn arrangement_max_faces(arr: &SegmentArrangement<f64>) -> usize {
    use std::collections::HashMap;
    let segs: Vec<([f64; 2], [f64; 2])> = arr
        .segments
        .iter()
        .map(|s| ([s.a.x, s.a.y], [s.b.x, s.b.y]))
        .collect();
    let mut incid: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
    let mut points: HashMap<(i64, i64), [f64; 2]> = HashMap::new();
    let mut note = |p: [f64; 2], idx: usize| {
        let k = vertex_key(p);
        incid.entry(k).or_default().push(idx);
        points.entry(k).or_insert(p);
    };
    for (i, (a, b)) in segs.iter().enumerate() {
        note(*a, i);
        note(*b, i);
    }
    // Pairwise transversal crossings, with an x-interval sweep to prune.
    let mut order: Vec<usize> = (0..segs.len()).collect();
    let xmin = |s: &([f64; 2], [f64; 2])| s.0[0].min(s.1[0]);
    let xmax = |s: &([f64; 2], [f64; 2])| s.0[0].max(s.1[0]);
    order.sort_by(|&a, &b| xmin(&segs[a]).total_cmp(&xmin(&segs[b])));
    for (pos, &i) in order.iter().enumerate() {
        let hi = xmax(&segs[i]) + 1e-12;
        for &j in &order[pos + 1..] {
            if xmin(&segs[j]) > hi {
                break;
            }
            if let Some(p) = cross_point(segs[i], segs[j]) {
                note(p, i);
                note(p, j);
            }
        }
    }
    let mut best = 0usize;
    for (key, mut idxs) in incid {
        idxs.sort_unstable();
        idxs.dedup();
        let v = points[&key];
        let mut rays: Vec<f64> = Vec::new();
        for &i in &idxs {
            let (a, b) = segs[i];
            let da = ((a[0] - v[0]).powi(2) + (a[1] - v[1]).powi(2)).sqrt();
            let db = ((b[0] - v[0]).powi(2) + (b[1] - v[1]).powi(2)).sqrt();
            if da > 1e-9 {
                rays.push((a[1] - v[1]).atan2(a[0] - v[0]));
            }
            if db > 1e-9 {
                rays.push((b[1] - v[1]).atan2(b[0] - v[0]));
            }
        }
        // Boundary rays when the vertex sits on the square boundary.
        if dist_to_boundary(v) < 1e-9 {
            for dir in boundary_rays(v) {
                rays.push(dir);
            }
        }
        rays.sort_by(f64::total_cmp);
        rays.dedup_by(|a, b| (*a - *b).abs() < 1e-7);
        if rays.len() < 2 {
            best = best.max(1);
            continue;
        }
        let mut faces = 0usize;
        let n = rays.len();
        for i in 0..n {
            let a = rays[i];
            let b = if i + 1 < n {
                rays[i + 1]
            } else {
                rays[0] + 2.0 * PI
            };
            if b - a < 1e-7 {
                continue;
            }
            let mid = 0.5 * (a + b);
            let probe = [v[0] + 1e-7 * mid.cos(), v[1] + 1e-7 * mid.sin()];
            if probe[0] > 0.0 && probe[0] < 1.0 && probe[1] > 0.0 && probe[1] < 1.0 {
                faces += 1;
            }
        }
        best = best.max(faces);
    }
    best
}

fn boundary_rays(v: [f64; 2]) -> Vec<f64> {
    let mut out = Vec::new();
    let eps = 1e-9;
    if v[1].abs() < eps || (1.0 - v[1]).abs() < eps {
        if v[0] > eps {
            out.push(PI); // toward -x
        }
        if v[0] < 1.0 - eps {
            out.push(0.0); // toward +x
        }
    }
    if v[0].abs() < eps || (1.0 - v[0]).abs() < eps {
        if v[1] > eps {
            out.push(-PI / 2.0);
        }
        if v[1] < 1.0 - eps {
            out.push(PI / 2.0);
        }
    }
    out
}

fn cross_point(s1: ([f64; 2], [f64; 2]), s2: ([f64; 2], [f64; 2])) -> Option<[f64; 2]> {
    let d1 = [s1.1[0] - s1.0[0], s1.1[1] - s1.0[1]];
    let d2 = [s2.1[0] - s2.0[0], s2.1[1] - s2.0[1]];
    let denom = d1[0] * d2[1] - d1[1] * d2[0];
    if denom.abs() < 1e-14 {
        return None;
    }
    let ax = s2.0[0] - s1.0[0];
    let ay = s2.0[1] - s1.0[1];
    let t1 = (ax * d2[1] - ay * d2[0]) / denom;
    let t2 = (ax * d1[1] - ay * d1[0]) / denom;
    let eps = 1e-12;
    if (-eps..=1.0 + eps).contains(&t1) && (-eps..=1.0 + eps).contains(&t2) {
        Some([s1.0[0] + t1 * d1[0], s1.0[1] + t1 * d1[1]])
    } else {
        None
    }
}

/// Verifies that every direction in the arrangement lies in the given cone.
pub fn arrangement_in_cone<S: Scalar>(arr: &SegmentArrangement<S>, cone: &Cone) -> bool {
    arr.segments.iter().all(|s| {
        let (dx, dy) = s.direction();
        cone.contains_dir(&dx, &dy)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Rational;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn fam(t: f64) -> CatFamily<f64> {
        CatFamily::new(t).unwrap()
    }

    #[test]
    fn family_construction_t0() {
        let f = fam(0.0);
        assert_eq!(f.branches[0].matrix, [[1.0, 1.0], [1.0, 2.0]]);
        assert_abs_diff_eq!(f.det(), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(f.eigen.mu_u, (3.0 + 5f64.sqrt()) / 2.0, epsilon = 1e-14);
    }

    #[test]
    fn family_rejects_out_of_range() {
        assert!(CatFamily::new(-0.01).is_err());
        assert!(CatFamily::new(0.2).is_err());
    }

    #[test]
    fn domain_edge_at_t_eighth() {
        // Branch 1 domain edge: y = -(8/15) x + 8/15 runs (1,0) -> (0, 8/15).
        let f = fam(0.125);
        let verts = f.branches[0].domain.vertices();
        assert!(verts
            .iter()
            .any(|p| (p.x - 0.0).abs() < 1e-12 && (p.y - 8.0 / 15.0).abs() < 1e-12));
        assert!(verts.iter().any(|p| (p.x - 1.0).abs() < 1e-12 && p.y.abs() < 1e-12));
    }

    #[test]
    fn determinant_identity_on_grid() {
        for &t in &[0.0, 1.0 / 64.0, 1.0 / 16.0, 0.125] {
            let f = fam(t);
            assert_abs_diff_eq!(f.eigen.mu_u * f.eigen.mu_s, 1.0 - t, epsilon = 1e-14);
            assert!(f.eigen.mu_u >= f.eigen.lambda);
        }
    }

    #[test]
    fn eigenvectors_sit_in_cones() {
        let cu = Cone::unstable();
        let cs = Cone::stable(1, 4).unwrap();
        for &t in &[0.0, 1.0 / 16.0, 0.125] {
            let f = fam(t);
            assert!(cu.contains_dir_strict(&f.eigen.e_u[0], &f.eigen.e_u[1]));
            assert!(cs.contains_dir_strict(&f.eigen.e_s[0], &f.eigen.e_s[1]));
        }
    }

    #[test]
    fn cone_expansion_bounds() {
        // The minimum sits on the cone boundary (1, 0); the maximum is the
        // unperturbed unstable multiplier, whose eigendirection lies inside
        // the cone.
        let (lambda, lambda_bar) = super::cone_expansion_bounds();
        assert_abs_diff_eq!(lambda, 2f64.sqrt(), epsilon = 1e-9);
        assert_abs_diff_eq!(lambda_bar, (3.0 + 5f64.sqrt()) / 2.0, epsilon = 1e-9);
    }

    #[test]
    fn apply_hand_values() {
        let f = fam(0.0);
        let (img, j) = f.apply(&Point2::new(0.25, 0.25)).unwrap();
        assert_eq!(j, 1);
        assert_abs_diff_eq!(img.x, 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(img.y, 0.75, epsilon = 1e-15);

        let f = fam(0.125);
        let (img, j) = f.apply(&Point2::new(0.9, 0.95)).unwrap();
        assert_eq!(j, 4);
        assert_abs_diff_eq!(img.x, 0.85, epsilon = 1e-12);
        assert_abs_diff_eq!(img.y, 0.68125, epsilon = 1e-12);
    }

    #[test]
    fn apply_flags_boundary_image() {
        // (0.5, 0.25) at t = 0 sits on x + 2y = 1, the image's y-coordinate
        // would wrap exactly to 0.
        let f = fam(0.0);
        assert!(matches!(
            f.apply(&Point2::new(0.5, 0.25)),
            Err(CatError::OnSingularity { step: 0 })
        ));
        assert!(f.apply(&Point2::new(0.5, 0.2500001)).is_ok());
    }

    #[test]
    fn iterate_identity_and_two_steps() {
        let f = fam(0.0);
        let p = Point2::new(0.3, 0.7);
        let (q, it) = f.iterate(&p, 0).unwrap();
        assert_eq!(q, p);
        assert!(it.is_empty());

        let (q, it) = f.iterate(&Point2::new(0.24, 0.26), 2).unwrap();
        assert_eq!(it.len(), 2);
        assert_abs_diff_eq!(q.x, 0.26, epsilon = 1e-12);
        assert_abs_diff_eq!(q.y, 0.02, epsilon = 1e-12);
    }

    #[test]
    fn iterate_reports_singular_step() {
        let f = fam(0.0);
        // (0.25, 0.25) -> (0.5, 0.75); next step from (0.5, 0.75) gives
        // x + y = 1.25 ok, but x + 2y = 2.0 exactly: singular at step 1.
        match f.iterate(&Point2::new(0.25, 0.25), 2) {
            Err(CatError::OnSingularity { step }) => assert_eq!(step, 1),
            other => panic!("expected singularity at step 1, got {:?}", other),
        }
    }

    #[test]
    fn branch_consistency_random_points() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for &t in &[0.0, 1.0 / 64.0, 0.125] {
            let f = fam(t);
            let mut checked = 0u32;
            while checked < 20_000 {
                let p = Point2::new(rng.random::<f64>(), rng.random::<f64>());
                if let Ok((img, _)) = f.apply(&p) {
                    let frac = f.fractional_image(&p);
                    assert!((frac.x - img.x).abs() <= 1e-12);
                    assert!((frac.y - img.y).abs() <= 1e-12);
                    checked += 1;
                }
            }
        }
    }

    #[test]
    fn preimage_tags_bijection_and_hole() {
        let f0 = fam(0.0);
        let tags = f0.preimage_tags_of(&Point2::new(0.5, 0.75)).unwrap();
        assert_eq!(tags, vec![1]);

        let ft = fam(0.125);
        // Point in the uncovered strip: (0.5, 0.4375) has x - y = 1/16 in (0, t).
        let tags = ft.preimage_tags_of(&Point2::new(0.5, 0.4375)).unwrap();
        assert!(tags.is_empty());
    }

    #[test]
    fn images_are_pairwise_disjoint() {
        // The four branch images tile M \ H_t, so no point carries two tags.
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for &t in &[1.0 / 64.0, 1.0 / 16.0, 0.125] {
            let f = fam(t);
            let mut hole_mass = 0u32;
            let mut checked = 0u32;
            while checked < 20_000 {
                let p = Point2::new(rng.random::<f64>(), rng.random::<f64>());
                if let Ok(tags) = f.preimage_tags_of(&p) {
                    assert!(tags.len() <= 1, "overlapping branch images at {:?}", p);
                    if tags.is_empty() {
                        hole_mass += 1;
                    }
                    checked += 1;
                }
            }
            let frac = hole_mass as f64 / checked as f64;
            assert!((frac - t).abs() < 0.01, "hole fraction {} vs t {}", frac, t);
        }
    }

    #[test]
    fn transfer_of_one() {
        let ft = fam(0.125);
        // Off the hole: 1/(1-t) = 8/7.
        let v = ft.transfer(|_| 1.0, &Point2::new(0.3, 0.7)).unwrap();
        assert_abs_diff_eq!(v, 8.0 / 7.0, epsilon = 1e-12);
        // On the hole: 0.
        let v = ft.transfer(|_| 1.0, &Point2::new(0.5, 0.4375)).unwrap();
        assert_eq!(v, 0.0);
        // Unperturbed: Lebesgue invariance. ((0.3, 0.6) would sit exactly on
        // the backward line y = 2x and is rightly rejected.)
        let f0 = fam(0.0);
        assert!(f0.transfer(|_| 1.0, &Point2::new(0.3, 0.6)).is_err());
        let v = f0.transfer(|_| 1.0, &Point2::new(0.3, 0.55)).unwrap();
        assert_abs_diff_eq!(v, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn response_density_closed_form_points() {
        let ft = fam(0.125);
        let rd = ResponseDensity::new(&ft).unwrap();
        let (v, tag) = rd.eval(&Point2::new(0.3, 0.7)).unwrap();
        assert_abs_diff_eq!(v, 8.0 / 7.0, epsilon = 1e-12);
        assert_eq!(tag, DensityTag::Good);
        // Between the perturbed and unperturbed steep lines: still covered
        // (value 8/7) but the preimage tag changed, so the point is bad.
        let (v, tag) = rd.eval(&Point2::new(0.3, 0.58)).unwrap();
        assert_abs_diff_eq!(v, 8.0 / 7.0, epsilon = 1e-12);
        assert_eq!(tag, DensityTag::Bad);
        let (v, tag) = rd.eval(&Point2::new(0.5, 0.4375)).unwrap();
        assert_abs_diff_eq!(v, -8.0, epsilon = 1e-12);
        assert_eq!(tag, DensityTag::Bad);
    }

    #[test]
    fn response_density_exact_rational() {
        let t = Rational::from_ratio(1, 8);
        let ft = CatFamily::new(t).unwrap();
        let rd = ResponseDensity::new(&ft).unwrap();
        let p = Point2::new(Rational::from_ratio(3, 10), Rational::from_ratio(7, 10));
        let (v, _) = rd.eval(&p).unwrap();
        assert_eq!(v, Rational::from_ratio(8, 7));
        assert_eq!(rd.closed_form(&p).unwrap(), Rational::from_ratio(8, 7));
    }

    #[test]
    fn forward_singularities_three_lines_any_t() {
        for &t in &[0.0, 0.125] {
            let f = fam(t);
            let arr = f.singularity_forward(1, 8).unwrap();
            assert_eq!(arr.segments.len(), 3, "t = {}", t);
        }
    }

    #[test]
    fn backward_singularities_counts() {
        assert_eq!(fam(0.125).s_minus().segments.len(), 5);
        assert_eq!(fam(0.0).s_minus().segments.len(), 3);
    }

    #[test]
    fn forward_sets_live_in_stable_cone() {
        let cs = Cone::stable(1, 4).unwrap();
        for &t in &[0.0, 1.0 / 64.0, 1.0 / 16.0, 0.125] {
            let f = fam(t);
            for k in 1..=6 {
                let arr = f.singularity_forward(k, 8).unwrap();
                assert!(arrangement_in_cone(&arr, &cs), "t={} k={}", t, k);
            }
        }
    }

    #[test]
    fn backward_sets_live_in_unstable_cone() {
        let cu = Cone::unstable();
        for &t in &[0.0, 0.125] {
            assert!(arrangement_in_cone(fam(t).s_minus(), &cu));
        }
    }

    /// Row-scan oracle: along a horizontal transect, the discontinuity
    /// abscissas of `F_t^k` (found by itinerary changes plus bisection) must
    /// coincide with the crossings of the constructed arrangement.
    fn row_scan_crossings(f: &CatFamily<f64>, depth: usize, y: f64, n: usize) -> Vec<f64> {
        let itin = |x: f64| -> Option<Vec<u8>> {
            f.iterate(&Point2::new(x, y), depth).ok().map(|r| r.1)
        };
        let mut out = Vec::new();
        let mut prev: Option<(f64, Vec<u8>)> = None;
        for ix in 1..n {
            let x = ix as f64 / n as f64;
            let cur = itin(x);
            if let (Some((xp, a)), Some(b)) = (&prev, &cur) {
                if a != b {
                    let (mut lo, mut hi) = (*xp, x);
                    for _ in 0..60 {
                        let mid = 0.5 * (lo + hi);
                        match itin(mid) {
                            Some(m) if m == *a => lo = mid,
                            _ => hi = mid,
                        }
                    }
                    out.push(0.5 * (lo + hi));
                }
            }
            if let Some(c) = cur {
                prev = Some((x, c));
            }
        }
        out
    }

    #[test]
    fn second_pullback_matches_row_scan_oracle() {
        use crate::geometry::segment_intersections;
        let f = fam(0.125);
        let arr = f.singularity_forward(2, 8).unwrap();
        for &y in &[0.137, 0.451, 0.62, 0.883] {
            let oracle = row_scan_crossings(&f, 2, y, 2000);
            let row = Segment::new(Point2::new(0.0, y), Point2::new(1.0, y));
            let mut hits: Vec<f64> = segment_intersections(&row, &arr)
                .unwrap()
                .into_iter()
                .map(|(p, _)| p.x)
                .collect();
            hits.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
            assert_eq!(hits.len(), oracle.len(), "row y = {}", y);
            for (a, b) in hits.iter().zip(&oracle) {
                assert!((a - b).abs() < 1e-6, "crossing {} vs oracle {}", a, b);
            }
        }
    }

    #[test]
    fn bad_set_scales_linearly() {
        let f0 = fam(0.0);
        let mut prev: Option<f64> = None;
        for &t in &[1.0 / 16.0, 1.0 / 32.0, 1.0 / 64.0] {
            let gb = bad_set(&f0, &fam(t));
            let area = gb.total_bad_area();
            assert!(area > 0.0 && area <= 3.0 * t, "area {} at t {}", area, t);
            if let Some(pa) = prev {
                let ratio = area / pa;
                assert!((0.45..=0.55).contains(&ratio), "halving ratio {}", ratio);
            }
            prev = Some(area);
        }
    }

    #[test]
    fn bad_set_hugs_unperturbed_backward_set() {
        // Every sampled bad point lies within H*t of S_0^-. The backward set
        // here is the full union of image-polygon boundaries, which includes
        // the square boundary (the interior-line arrangement alone misses
        // the shrinking corner triangles, which sit t-close to the square
        // boundary but far from the interior lines).
        let f0 = fam(0.0);
        let t = 1.0 / 16.0;
        let gb = bad_set(&f0, &fam(t));
        let mut all = f0.s_minus().segments.clone();
        for (a, b) in [
            ([0.0, 0.0], [1.0, 0.0]),
            ([1.0, 0.0], [1.0, 1.0]),
            ([1.0, 1.0], [0.0, 1.0]),
            ([0.0, 1.0], [0.0, 0.0]),
        ] {
            all.push(Segment::new(Point2::new(a[0], a[1]), Point2::new(b[0], b[1])));
        }
        let segs: Vec<([f64; 2], [f64; 2], f64)> = all
            .iter()
            .map(|s| {
                let a = [s.a.x, s.a.y];
                let b = [s.b.x, s.b.y];
                let l2 = (b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2);
                (a, b, l2)
            })
            .collect();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut max_h = 0.0f64;
        let mut found = 0;
        while found < 2_000 {
            let p = Point2::new(rng.random::<f64>(), rng.random::<f64>());
            if gb.locate(&p) == PointLocation::Inside {
                let d2 = segs
                    .iter()
                    .map(|(a, b, l2)| crate::geometry::dist2_point_segment([p.x, p.y], *a, *b, *l2))
                    .fold(f64::MAX, f64::min);
                max_h = max_h.max(d2.sqrt() / t);
                found += 1;
            }
        }
        assert!(max_h < 3.0, "measured H = {}", max_h);
    }

    /// Independent face-count oracle: walk a small circle around a vertex
    /// and count maximal arcs of constant depth-`k` itinerary.
    fn faces_by_circle_probe(f: &CatFamily<f64>, v: [f64; 2], depth: usize) -> usize {
        let r = 2e-6;
        let n = 4096;
        let mut blocks = Vec::new();
        let mut prev: Option<Vec<u8>> = None;
        for i in 0..n {
            let th = 2.0 * PI * i as f64 / n as f64;
            let p = Point2::new(v[0] + r * th.cos(), v[1] + r * th.sin());
            if p.x <= 0.0 || p.x >= 1.0 || p.y <= 0.0 || p.y >= 1.0 {
                prev = None;
                continue;
            }
            match f.iterate(&p, depth) {
                Ok((_, it)) => {
                    if prev.as_ref() != Some(&it) {
                        blocks.push(it.clone());
                        prev = Some(it);
                    }
                }
                Err(_) => prev = None,
            }
        }
        blocks.dedup();
        if blocks.len() > 1 && blocks.first() == blocks.last() {
            blocks.pop();
        }
        blocks.len()
    }

    #[test]
    fn complexity_small_depths() {
        let f = fam(0.125);
        let k1 = complexity(&f, 1, 8).unwrap();
        // The three cut lines only meet on the boundary; the worst vertex is
        // the corner (1, 0) where branch domains 1, 2, 3 all touch.
        assert_eq!(k1, 3);
        assert_eq!(faces_by_circle_probe(&f, [1.0 - 1e-9, 1e-9], 1), 3);
        let k2 = complexity(&f, 2, 8).unwrap();
        assert!(k2 >= k1);
    }

    #[test]
    fn hyperbolicity_beats_cutting_by_depth_ten() {
        let lambda = 2f64.sqrt();
        let mut found = None;
        for n0 in 1..=10u32 {
            let mut worst = 0usize;
            for &t in &[0.0, 1.0 / 64.0, 1.0 / 16.0, 0.125] {
                worst = worst.max(complexity(&fam(t), n0, 10).unwrap());
            }
            if ((worst + 1) as f64) < lambda.powi(n0 as i32) {
                found = Some((n0, worst));
                break;
            }
        }
        let (n0, k) = found.expect("no depth with (K+1) < lambda^k up to 10");
        assert!(n0 <= 10, "N0 = {} with K = {}", n0, k);
    }

    #[test]
    fn json_serialization_shapes() {
        let f = fam(0.125);
        let v = f.to_json();
        assert_eq!(v["branches"].as_array().unwrap().len(), 4);
        let fr = CatFamily::new(Rational::from_ratio(1, 8)).unwrap();
        let vr = fr.to_json();
        assert_eq!(vr["t"], serde_json::json!("1/8"));
    }
}
