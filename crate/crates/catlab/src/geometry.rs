//! Planar primitives on the open unit square `M = (0,1)^2`: points, segments,
//! convex polygons with boolean-style operations, segment arrangements, and
//! the unstable/stable cones.
//!
//! Everything is generic over [`Scalar`], so the same predicates run exactly
//! on rationals (the parameters of interest are dyadic) or with a snapping
//! tolerance on `f64`. Points exactly on an arrangement segment count as
//! intersections; callers needing open-set semantics perturb the query.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::scalar::Scalar;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GeometryError {
    #[error("point ({0}, {1}) lies outside the closed unit square")]
    OutsideUnitSquare(String, String),
    #[error("polygon is not convex after normalization")]
    ConvexViolation,
    #[error("query segment overlaps arrangement segment {0} collinearly; perturb the query")]
    CollinearOverlap(usize),
    #[error("degenerate segment")]
    DegenerateSegment,
    #[error("stable cone margin rejected: {0}")]
    ConeMargin(String),
}

/// A point of the plane. The `M`-constrained constructor enforces membership
/// in the closed unit square; intermediate affine images use `new`.
#[derive(Debug, Clone, PartialEq)]
pub struct Point2<S> {
    pub x: S,
    pub y: S,
}

impl<S: Scalar> Point2<S> {
    pub fn new(x: S, y: S) -> Self {
        Self { x, y }
    }

    /// Constructor restricted to the closed unit square.
    pub fn new_in_m(x: S, y: S) -> Result<Self, GeometryError> {
        let zero = S::zero();
        let one = S::one();
        if x < zero || x > one || y < zero || y > one {
            return Err(GeometryError::OutsideUnitSquare(
                format!("{}", x),
                format!("{}", y),
            ));
        }
        Ok(Self { x, y })
    }

    pub fn to_f64(&self) -> [f64; 2] {
        [self.x.to_f64(), self.y.to_f64()]
    }
}

/// Oriented straight segment `a -> b`.
#[derive(Debug, Clone, PartialEq)]
pub struct Segment<S> {
    pub a: Point2<S>,
    pub b: Point2<S>,
}

impl<S: Scalar> Segment<S> {
    pub fn new(a: Point2<S>, b: Point2<S>) -> Self {
        Self { a, b }
    }

    pub fn direction(&self) -> (S, S) {
        (
            self.b.x.clone() - self.a.x.clone(),
            self.b.y.clone() - self.a.y.clone(),
        )
    }

    /// Squared Euclidean length, exact in rational mode.
    pub fn length2(&self) -> S {
        let (dx, dy) = self.direction();
        dx.clone() * dx + dy.clone() * dy
    }

    pub fn length(&self) -> f64 {
        self.length2().to_f64().sqrt()
    }

    pub fn is_degenerate(&self) -> bool {
        self.length2() <= S::snap() * S::snap()
    }

    /// Point at parameter `u` in `[0, 1]`.
    pub fn at(&self, u: S) -> Point2<S> {
        let (dx, dy) = self.direction();
        Point2::new(self.a.x.clone() + u.clone() * dx, self.a.y.clone() + u * dy)
    }

    pub fn to_f64(&self) -> Segment<f64> {
        Segment::new(
            Point2::new(self.a.x.to_f64(), self.a.y.to_f64()),
            Point2::new(self.b.x.to_f64(), self.b.y.to_f64()),
        )
    }

    /// Clips the segment to the closed unit square. Returns `None` when the
    /// intersection is empty or a single point.
    pub fn clip_to_unit_square(&self) -> Option<Segment<S>> {
        let one = S::one();
        // Parameter interval [lo, hi] intersected with each half-plane.
        let mut lo = S::zero();
        let mut hi = S::one();
        let (dx, dy) = self.direction();
        // half-planes: x >= 0, x <= 1, y >= 0, y <= 1
        let constraints = [
            (dx.clone(), self.a.x.clone(), false), // x >= 0
            (dx, self.a.x.clone(), true),          // x <= 1
            (dy.clone(), self.a.y.clone(), false), // y >= 0
            (dy, self.a.y.clone(), true),          // y <= 1
        ];
        for (d, start, upper) in constraints {
            // value(u) = start + u d; constraint start + u d >= 0 (or <= 1)
            let (d, c) = if upper {
                (-d, one.clone() - start)
            } else {
                (d, start)
            };
            // c + u d >= 0
            if d.is_zero_snapped() {
                if c < -S::snap() {
                    return None;
                }
                continue;
            }
            let bound = -c / d.clone();
            if d > S::zero() {
                if bound > lo {
                    lo = bound;
                }
            } else if bound < hi {
                hi = bound;
            }
        }
        if hi <= lo {
            return None;
        }
        let s = Segment::new(self.at(lo), self.at(hi));
        if s.is_degenerate() {
            None
        } else {
            Some(s)
        }
    }
}

/// Convex polygon with counterclockwise vertices; duplicate and collinear
/// vertices are removed at construction.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvexPolygon<S> {
    verts: Vec<Point2<S>>,
}

fn cross<S: Scalar>(o: &Point2<S>, a: &Point2<S>, b: &Point2<S>) -> S {
    (a.x.clone() - o.x.clone()) * (b.y.clone() - o.y.clone())
        - (a.y.clone() - o.y.clone()) * (b.x.clone() - o.x.clone())
}

impl<S: Scalar> ConvexPolygon<S> {
    /// Builds a polygon from vertices in either orientation. Degenerate
    /// inputs (fewer than three distinct non-collinear vertices) yield an
    /// empty polygon with zero area.
    pub fn new(verts: Vec<Point2<S>>) -> Result<Self, GeometryError> {
        let mut vs: Vec<Point2<S>> = Vec::with_capacity(verts.len());
        for v in verts {
            if let Some(last) = vs.last() {
                let dx = (v.x.clone() - last.x.clone()).abs();
                let dy = (v.y.clone() - last.y.clone()).abs();
                if dx <= S::snap() && dy <= S::snap() {
                    continue;
                }
            }
            vs.push(v);
        }
        while vs.len() > 1 {
            let first = vs.first().unwrap();
            let last = vs.last().unwrap();
            let dx = (first.x.clone() - last.x.clone()).abs();
            let dy = (first.y.clone() - last.y.clone()).abs();
            if dx <= S::snap() && dy <= S::snap() {
                vs.pop();
            } else {
                break;
            }
        }
        if vs.len() < 3 {
            return Ok(Self { verts: vec![] });
        }
        // Orient counterclockwise.
        if signed_area2(&vs) < S::zero() {
            vs.reverse();
        }
        // Drop collinear middle vertices.
        let n = vs.len();
        let mut keep = Vec::with_capacity(n);
        for i in 0..n {
            let prev = &vs[(i + n - 1) % n];
            let cur = &vs[i];
            let next = &vs[(i + 1) % n];
            let c = cross(prev, cur, next);
            if c.abs() > S::snap() {
                if c < S::zero() {
                    return Err(GeometryError::ConvexViolation);
                }
                keep.push(cur.clone());
            }
        }
        if keep.len() < 3 {
            return Ok(Self { verts: vec![] });
        }
        Ok(Self { verts: keep })
    }

    pub fn empty() -> Self {
        Self { verts: vec![] }
    }

    pub fn is_empty(&self) -> bool {
        self.verts.len() < 3
    }

    pub fn vertices(&self) -> &[Point2<S>] {
        &self.verts
    }

    /// Shoelace area; zero for degenerate polygons.
    pub fn area(&self) -> S {
        if self.is_empty() {
            return S::zero();
        }
        signed_area2(&self.verts) / S::from_ratio(2, 1)
    }

    pub fn edges(&self) -> Vec<Segment<S>> {
        let n = self.verts.len();
        (0..n)
            .map(|i| Segment::new(self.verts[i].clone(), self.verts[(i + 1) % n].clone()))
            .collect()
    }

    /// Locates a point relative to the polygon, with boundary detection at
    /// the snapping tolerance.
    pub fn locate(&self, p: &Point2<S>) -> PointLocation {
        if self.is_empty() {
            return PointLocation::Outside;
        }
        let n = self.verts.len();
        let mut on_boundary = false;
        for i in 0..n {
            let a = &self.verts[i];
            let b = &self.verts[(i + 1) % n];
            let c = cross(a, b, p);
            if c < -edge_snap::<S>(a, b) {
                return PointLocation::Outside;
            }
            if c.abs() <= edge_snap::<S>(a, b) {
                on_boundary = true;
            }
        }
        if on_boundary {
            PointLocation::Boundary
        } else {
            PointLocation::Inside
        }
    }

    pub fn contains_strict(&self, p: &Point2<S>) -> bool {
        self.locate(p) == PointLocation::Inside
    }

    /// Clips to the half-plane `n . z <= c`.
    pub fn clip_halfplane(&self, nx: S, ny: S, c: S) -> ConvexPolygon<S> {
        if self.is_empty() {
            return ConvexPolygon::empty();
        }
        let n = self.verts.len();
        let vals: Vec<S> = self
            .verts
            .iter()
            .map(|p| c.clone() - (nx.clone() * p.x.clone() + ny.clone() * p.y.clone()))
            .collect();
        let mut out: Vec<Point2<S>> = Vec::with_capacity(n + 2);
        for i in 0..n {
            let j = (i + 1) % n;
            let (vi, vj) = (vals[i].clone(), vals[j].clone());
            let inside_i = vi >= -S::snap();
            let inside_j = vj >= -S::snap();
            if inside_i {
                out.push(self.verts[i].clone());
            }
            if inside_i != inside_j {
                let denom = vi.clone() - vj.clone();
                if !denom.is_zero_snapped() {
                    let u = vi / denom;
                    let seg = Segment::new(self.verts[i].clone(), self.verts[j].clone());
                    out.push(seg.at(u));
                }
            }
        }
        ConvexPolygon::new(out).unwrap_or_else(|_| ConvexPolygon::empty())
    }

    /// Maps vertices through an affine map `z -> A z + w`.
    pub fn map_affine(&self, a: &[[S; 2]; 2], w: &[S; 2]) -> ConvexPolygon<S> {
        let verts = self
            .verts
            .iter()
            .map(|p| {
                Point2::new(
                    a[0][0].clone() * p.x.clone() + a[0][1].clone() * p.y.clone() + w[0].clone(),
                    a[1][0].clone() * p.x.clone() + a[1][1].clone() * p.y.clone() + w[1].clone(),
                )
            })
            .collect();
        ConvexPolygon::new(verts).unwrap_or_else(|_| ConvexPolygon::empty())
    }

    /// Clips a segment to the polygon, returning the parameter interval on
    /// the input segment, if any.
    pub fn clip_segment(&self, seg: &Segment<S>) -> Option<(S, S)> {
        if self.is_empty() {
            return None;
        }
        let mut lo = S::zero();
        let mut hi = S::one();
        let n = self.verts.len();
        for i in 0..n {
            let a = &self.verts[i];
            let b = &self.verts[(i + 1) % n];
            // inside: cross(a, b, z) >= 0
            let va = cross(a, b, &seg.a);
            let vb = cross(a, b, &seg.b);
            let d = vb.clone() - va.clone();
            if d.is_zero_snapped() {
                if va < -edge_snap::<S>(a, b) {
                    return None;
                }
                continue;
            }
            let bound = -va / d.clone();
            if d > S::zero() {
                if bound > lo {
                    lo = bound;
                }
            } else if bound < hi {
                hi = bound;
            }
        }
        if hi <= lo {
            None
        } else {
            Some((lo, hi))
        }
    }

    pub fn to_f64(&self) -> ConvexPolygon<f64> {
        ConvexPolygon {
            verts: self
                .verts
                .iter()
                .map(|p| Point2::new(p.x.to_f64(), p.y.to_f64()))
                .collect(),
        }
    }
}

/// Edge-length-aware snapping for orientation predicates in float mode.
fn edge_snap<S: Scalar>(a: &Point2<S>, b: &Point2<S>) -> S {
    if S::EXACT {
        return S::zero();
    }
    let len = (b.x.clone() - a.x.clone()).abs() + (b.y.clone() - a.y.clone()).abs();
    S::snap() * (S::one() + len)
}

fn signed_area2<S: Scalar>(verts: &[Point2<S>]) -> S {
    let n = verts.len();
    let mut acc = S::zero();
    for i in 0..n {
        let a = &verts[i];
        let b = &verts[(i + 1) % n];
        acc = acc + (a.x.clone() * b.y.clone() - b.x.clone() * a.y.clone());
    }
    acc
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PointLocation {
    Inside,
    Boundary,
    Outside,
}

/// Shoelace area of a convex polygon.
pub fn polygon_area<S: Scalar>(p: &ConvexPolygon<S>) -> S {
    p.area()
}

/// Convex intersection, as a (possibly empty) list of convex pieces. For two
/// convex polygons the result has at most one piece.
pub fn polygon_intersect<S: Scalar>(
    p: &ConvexPolygon<S>,
    q: &ConvexPolygon<S>,
) -> Vec<ConvexPolygon<S>> {
    if p.is_empty() || q.is_empty() {
        return vec![];
    }
    let mut cur = p.clone();
    let n = q.verts.len();
    for i in 0..n {
        let a = &q.verts[i];
        let b = &q.verts[(i + 1) % n];
        // inside of edge a->b (CCW): cross(a, b, z) >= 0, i.e. n . z >= c
        // with n = (ay - by, bx - ax), c = n . a; negate for the <= form.
        let nx = a.y.clone() - b.y.clone();
        let ny = b.x.clone() - a.x.clone();
        let c = nx.clone() * a.x.clone() + ny.clone() * a.y.clone();
        cur = cur.clip_halfplane(-nx, -ny, -c);
        if cur.is_empty() {
            return vec![];
        }
    }
    vec![cur]
}

/// Decomposes `p \ q` into pairwise essentially disjoint convex pieces.
pub fn convex_difference<S: Scalar>(
    p: &ConvexPolygon<S>,
    q: &ConvexPolygon<S>,
) -> Vec<ConvexPolygon<S>> {
    if p.is_empty() {
        return vec![];
    }
    if q.is_empty() {
        return vec![p.clone()];
    }
    let mut pieces = Vec::new();
    let mut remaining = p.clone();
    let n = q.verts.len();
    for i in 0..n {
        let a = &q.verts[i];
        let b = &q.verts[(i + 1) % n];
        let nx = a.y.clone() - b.y.clone();
        let ny = b.x.clone() - a.x.clone();
        let c = nx.clone() * a.x.clone() + ny.clone() * a.y.clone();
        // inside of q's edge is n . z >= c; the outside piece is n . z <= c.
        let outside = remaining.clip_halfplane(nx.clone(), ny.clone(), c.clone());
        if !outside.is_empty() && !outside.area().is_zero_snapped() {
            pieces.push(outside);
        }
        remaining = remaining.clip_halfplane(-nx, -ny, -c);
        if remaining.is_empty() {
            break;
        }
    }
    pieces
}

/// Area of the symmetric difference `p Δ q`, via the convex decomposition
/// identity `area(p) + area(q) - 2 area(p ∩ q)`.
pub fn symmetric_difference_area<S: Scalar>(p: &ConvexPolygon<S>, q: &ConvexPolygon<S>) -> S {
    let inter: S = polygon_intersect(p, q)
        .iter()
        .map(|r| r.area())
        .fold(S::zero(), |a, b| a + b);
    p.area() + q.area() - S::from_ratio(2, 1) * inter
}

/// Finite union of segments tagged with the pullback generation it
/// represents (`k` for a forward set, 0 for a backward set).
#[derive(Debug, Clone)]
pub struct SegmentArrangement<S> {
    pub segments: Vec<Segment<S>>,
    pub generation: u32,
}

impl<S: Scalar> SegmentArrangement<S> {
    pub fn new(segments: Vec<Segment<S>>, generation: u32) -> Self {
        Self {
            segments,
            generation,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }

    pub fn total_length(&self) -> f64 {
        self.segments.iter().map(|s| s.length()).sum()
    }

    pub fn to_f64(&self) -> SegmentArrangement<f64> {
        SegmentArrangement::new(
            self.segments.iter().map(|s| s.to_f64()).collect(),
            self.generation,
        )
    }
}

/// All transversal intersections of `w` with the arrangement, sorted by the
/// parameter along `w`. Points exactly on arrangement segments count.
pub fn segment_intersections<S: Scalar>(
    w: &Segment<S>,
    arr: &SegmentArrangement<S>,
) -> Result<Vec<(Point2<S>, usize)>, GeometryError> {
    if w.is_degenerate() {
        return Err(GeometryError::DegenerateSegment);
    }
    let mut hits: Vec<(S, Point2<S>, usize)> = Vec::new();
    let (dwx, dwy) = w.direction();
    for (idx, s) in arr.segments.iter().enumerate() {
        let (dsx, dsy) = s.direction();
        let denom = dwx.clone() * dsy.clone() - dwy.clone() * dsx.clone();
        let ax = s.a.x.clone() - w.a.x.clone();
        let ay = s.a.y.clone() - w.a.y.clone();
        if denom.is_zero_snapped() {
            // Parallel. Overlap only if collinear.
            let c = ax.clone() * dwy.clone() - ay.clone() * dwx.clone();
            if c.abs() <= S::snap() * (S::one() + S::one()) {
                // Collinear: project both endpoints on w and test overlap.
                let l2 = w.length2();
                let t0 = (ax.clone() * dwx.clone() + ay.clone() * dwy.clone()) / l2.clone();
                let bx = s.b.x.clone() - w.a.x.clone();
                let by = s.b.y.clone() - w.a.y.clone();
                let t1 = (bx * dwx.clone() + by * dwy.clone()) / l2;
                let (lo, hi) = if t0 <= t1 {
                    (t0, t1)
                } else {
                    (t1, t0)
                };
                if hi > S::zero() && lo < S::one() && !(hi.clone() - lo.clone()).is_zero_snapped()
                {
                    return Err(GeometryError::CollinearOverlap(idx));
                }
            }
            continue;
        }
        // Solve w.a + tw dw = s.a + ts ds (Cramer).
        let tw = (ax.clone() * dsy.clone() - ay.clone() * dsx.clone()) / denom.clone();
        let ts = (ax * dwy.clone() - ay * dwx.clone()) / denom.clone();
        let eps = S::snap();
        if tw >= -eps.clone()
            && tw <= S::one() + eps.clone()
            && ts >= -eps.clone()
            && ts <= S::one() + eps
        {
            hits.push((tw.clone(), w.at(tw), idx));
        }
    }
    hits.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    Ok(hits.into_iter().map(|(_, p, i)| (p, i)).collect())
}

/// Unstable/stable cone pair. The unstable cone is exactly
/// `{(ξ, η) : ξ η >= 0}`; the stable cone is the sector of negative slopes
/// between `-1/tan_r0` and `-tan_r0`, so membership tests stay rational.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ConeKind {
    Unstable,
    Stable,
}

#[derive(Debug, Clone)]
pub struct Cone {
    pub kind: ConeKind,
    /// Tangent of the angular margin of the stable cone, as a ratio.
    pub tan_r0: (i64, i64),
}

impl Cone {
    pub fn unstable() -> Self {
        Self {
            kind: ConeKind::Unstable,
            tan_r0: (0, 1),
        }
    }

    /// Stable cone with margin `r0 = atan(num/den)`. The margin must leave
    /// every slope in `[-1, -1/2]` strictly inside; `tan r0 = 1/4` is the
    /// default (half of the maximal admissible tangent `1/2`).
    pub fn stable(num: i64, den: i64) -> Result<Self, GeometryError> {
        if num <= 0 || den <= 0 {
            return Err(GeometryError::ConeMargin("tan r0 must be positive".into()));
        }
        // Admissibility: the shallowest singularity slope over t in [0, 1/8]
        // is -1/2, the steepest is -1. Need tan r0 < 1/2 and 1/tan r0 > 1.
        if 2 * num >= den {
            return Err(GeometryError::ConeMargin(format!(
                "tan r0 = {}/{} >= 1/2 does not contain the shallowest singularity slope",
                num, den
            )));
        }
        Ok(Self {
            kind: ConeKind::Stable,
            tan_r0: (num, den),
        })
    }

    pub fn r0(&self) -> f64 {
        (self.tan_r0.0 as f64 / self.tan_r0.1 as f64).atan()
    }

    /// Cone membership of a direction (up to sign), exact in rational mode.
    pub fn contains_dir<S: Scalar>(&self, dx: &S, dy: &S) -> bool {
        match self.kind {
            ConeKind::Unstable => {
                let prod = dx.clone() * dy.clone();
                prod >= -S::snap()
            }
            ConeKind::Stable => {
                // slope in [-den/num, -num/den] with tan_r0 = num/den:
                // require dx dy < 0 and num |dx| <= den |dy|, num |dy| <= den |dx|... no:
                // |dy|/|dx| in [num/den, den/num].
                let (num, den) = self.tan_r0;
                let n = S::from_ratio(num, 1);
                let d = S::from_ratio(den, 1);
                let adx = dx.abs();
                let ady = dy.abs();
                if adx.is_zero_snapped() || ady.is_zero_snapped() {
                    return false;
                }
                let prod = dx.clone() * dy.clone();
                if prod >= S::zero() {
                    return false;
                }
                n.clone() * adx.clone() <= d.clone() * ady.clone() && n * ady <= d * adx
            }
        }
    }

    /// Strict interior membership.
    pub fn contains_dir_strict<S: Scalar>(&self, dx: &S, dy: &S) -> bool {
        match self.kind {
            ConeKind::Unstable => dx.clone() * dy.clone() > S::snap(),
            ConeKind::Stable => {
                let (num, den) = self.tan_r0;
                let n = S::from_ratio(num, 1);
                let d = S::from_ratio(den, 1);
                let adx = dx.abs();
                let ady = dy.abs();
                let prod = dx.clone() * dy.clone();
                prod < -S::snap()
                    && n.clone() * adx.clone() < d.clone() * ady.clone()
                    && n * ady < d * adx
            }
        }
    }
}

/// Monte-Carlo estimate of the Lebesgue measure of the `s`-neighborhood of an
/// arrangement, with standard error; deterministic for a given seed.
#[derive(Debug, Clone, Copy)]
pub struct NeighborhoodEstimate {
    pub area: f64,
    pub stderr: f64,
    pub samples: u64,
}

pub fn neighborhood_area_mc(
    arr: &SegmentArrangement<f64>,
    s: f64,
    samples: u64,
    seed: u64,
) -> NeighborhoodEstimate {
    assert!(s > 0.0, "neighborhood radius must be positive");
    assert!(samples >= 10_000, "need at least 1e4 samples");
    let s2 = s * s;
    let segs: Vec<([f64; 2], [f64; 2], f64)> = arr
        .segments
        .iter()
        .map(|seg| {
            let a = [seg.a.x, seg.a.y];
            let b = [seg.b.x, seg.b.y];
            let l2 = (b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2);
            (a, b, l2)
        })
        .collect();
    const BATCH: u64 = 65_536;
    let batches = samples.div_ceil(BATCH);
    let mut inside: u64 = 0;
    let mut total: u64 = 0;
    for batch in 0..batches {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(batch);
        let n = BATCH.min(samples - batch * BATCH);
        for _ in 0..n {
            let x: f64 = rng.random();
            let y: f64 = rng.random();
            let hit = segs.iter().any(|(a, b, l2)| {
                dist2_point_segment([x, y], *a, *b, *l2) <= s2
            });
            if hit {
                inside += 1;
            }
            total += 1;
        }
    }
    let p = inside as f64 / total as f64;
    NeighborhoodEstimate {
        area: p,
        stderr: (p * (1.0 - p) / total as f64).sqrt(),
        samples: total,
    }
}

/// Squared distance from a point to a segment (with precomputed squared
/// length).
pub fn dist2_point_segment(p: [f64; 2], a: [f64; 2], b: [f64; 2], l2: f64) -> f64 {
    let apx = p[0] - a[0];
    let apy = p[1] - a[1];
    if l2 <= f64::MIN_POSITIVE {
        return apx * apx + apy * apy;
    }
    let abx = b[0] - a[0];
    let aby = b[1] - a[1];
    let t = ((apx * abx + apy * aby) / l2).clamp(0.0, 1.0);
    let dx = apx - t * abx;
    let dy = apy - t * aby;
    dx * dx + dy * dy
}

/// Distance from a point to the boundary of the unit square.
pub fn dist_to_boundary(p: [f64; 2]) -> f64 {
    p[0].min(1.0 - p[0]).min(p[1]).min(1.0 - p[1])
}
