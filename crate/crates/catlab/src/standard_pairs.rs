//! Standard segments (unstable-cone segments in the closed square) and
//! weighted standard families.
//!
//! A standard family is a finite collection `{(W_j, p_j)}` with positive
//! weights summing to 1; it represents the probability measure that averages
//! arclength integrals over the segments. Evolution fragments each segment at
//! the three branch-cut lines, maps the pieces, and splits weights by length
//! fraction, so a family evolved from a single segment keeps
//! `p = |W_piece| / |F^n W|`. The regularity functional is
//! `Z = sum p_j / |W_j|`.
//!
//! Exact evolution multiplies the fragment count by roughly the unstable
//! multiplier per step, so long runs switch to systematic resampling with a
//! fixed particle budget (deterministic for a given seed).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::cat_family::CatFamily;
use crate::geometry::{Cone, Point2, Segment};
use crate::quad::{GaussLegendre, NeumaierSum};
use crate::scalar::Scalar;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PairError {
    #[error("segment is degenerate")]
    DegenerateInput,
    #[error("segment direction is outside the unstable cone")]
    NotUnstable,
    #[error("segment leaves the closed unit square")]
    OutsideSquare,
    #[error("weights must be positive and sum to one (got {0})")]
    BadWeights(f64),
}

/// Length below which fragmentation dust is dropped (weight redistributed).
pub const DUST_LENGTH: f64 = 1e-14;

/// A segment aligned with the unstable cone, inside the closed square.
#[derive(Debug, Clone, PartialEq)]
pub struct StandardSegment {
    seg: Segment<f64>,
}

impl StandardSegment {
    pub fn new(seg: Segment<f64>) -> Result<Self, PairError> {
        if seg.is_degenerate() {
            return Err(PairError::DegenerateInput);
        }
        let (dx, dy) = seg.direction();
        if !Cone::unstable().contains_dir(&dx, &dy) {
            return Err(PairError::NotUnstable);
        }
        let eps = 1e-9;
        for p in [&seg.a, &seg.b] {
            if p.x < -eps || p.x > 1.0 + eps || p.y < -eps || p.y > 1.0 + eps {
                return Err(PairError::OutsideSquare);
            }
        }
        Ok(Self { seg })
    }

    pub fn from_endpoints(a: [f64; 2], b: [f64; 2]) -> Result<Self, PairError> {
        Self::new(Segment::new(Point2::new(a[0], a[1]), Point2::new(b[0], b[1])))
    }

    /// Full vertical line at abscissa `x`.
    pub fn vertical(x: f64) -> Self {
        Self {
            seg: Segment::new(Point2::new(x, 0.0), Point2::new(x, 1.0)),
        }
    }

    pub fn segment(&self) -> &Segment<f64> {
        &self.seg
    }

    pub fn length(&self) -> f64 {
        self.seg.length()
    }

    pub fn at(&self, u: f64) -> [f64; 2] {
        [
            self.seg.a.x + u * (self.seg.b.x - self.seg.a.x),
            self.seg.a.y + u * (self.seg.b.y - self.seg.a.y),
        ]
    }

    /// Mean of `phi` along the segment (arclength average).
    pub fn mean<F: FnMut([f64; 2]) -> f64>(&self, gl: &GaussLegendre, panel: f64, mut f: F) -> f64 {
        let len = self.length();
        let panels = (len / panel).ceil().max(1.0) as usize;
        let mut acc = NeumaierSum::new();
        for i in 0..panels {
            let a = i as f64 / panels as f64;
            let b = (i + 1) as f64 / panels as f64;
            acc.add(gl.integrate(a, b, |u| f(self.at(u))));
        }
        acc.value()
    }
}

/// Weighted collection of standard segments with total weight 1.
#[derive(Debug, Clone)]
pub struct StandardFamily {
    pairs: Vec<(StandardSegment, f64)>,
    /// Cumulative weight dropped as fragmentation dust.
    pub dropped_weight: f64,
}

impl StandardFamily {
    pub fn new(pairs: Vec<(StandardSegment, f64)>) -> Result<Self, PairError> {
        if pairs.is_empty() {
            return Err(PairError::BadWeights(0.0));
        }
        let total: f64 = pairs.iter().map(|(_, p)| *p).sum();
        if pairs.iter().any(|(_, p)| *p <= 0.0) || (total - 1.0).abs() > 1e-9 {
            return Err(PairError::BadWeights(total));
        }
        // Renormalize exactly to kill accumulated rounding.
        let pairs = pairs
            .into_iter()
            .map(|(w, p)| (w, p / total))
            .collect();
        Ok(Self {
            pairs,
            dropped_weight: 0.0,
        })
    }

    pub fn single(w: StandardSegment) -> Self {
        Self {
            pairs: vec![(w, 1.0)],
            dropped_weight: 0.0,
        }
    }

    pub fn pairs(&self) -> &[(StandardSegment, f64)] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn total_weight(&self) -> f64 {
        let mut acc = NeumaierSum::new();
        for (_, p) in &self.pairs {
            acc.add(*p);
        }
        acc.value()
    }

    pub fn total_length(&self) -> f64 {
        self.pairs.iter().map(|(w, _)| w.length()).sum()
    }

    /// `mu_G(phi) = sum p_j mean_{W_j} phi`.
    pub fn measure<F: FnMut([f64; 2]) -> f64>(
        &self,
        gl: &GaussLegendre,
        panel: f64,
        mut f: F,
    ) -> f64 {
        let mut acc = NeumaierSum::new();
        for (w, p) in &self.pairs {
            acc.add(p * w.mean(gl, panel, &mut f));
        }
        acc.value()
    }

    /// Family measure of every battery observable in one pass over the
    /// segments.
    pub fn measure_battery(
        &self,
        gl: &GaussLegendre,
        panel: f64,
        obs: &[crate::config::Observable],
    ) -> Vec<f64> {
        let mut acc = vec![NeumaierSum::new(); obs.len()];
        for (w, p) in &self.pairs {
            let len = w.length();
            let panels = (len / panel).ceil().max(1.0) as usize;
            for k in 0..panels {
                let lo = k as f64 / panels as f64;
                let hi = (k + 1) as f64 / panels as f64;
                let half = 0.5 * (hi - lo);
                let mid = 0.5 * (hi + lo);
                for (node, wt) in gl.nodes.iter().zip(&gl.weights) {
                    let q = w.at(mid + half * node);
                    let scale = p * wt * half;
                    for (o, a) in obs.iter().zip(acc.iter_mut()) {
                        a.add(scale * o.eval(q));
                    }
                }
            }
        }
        acc.iter().map(|a| a.value()).collect()
    }

    /// Regularity `Z = sum p_j / |W_j|`.
    pub fn regularity(&self) -> f64 {
        let mut acc = NeumaierSum::new();
        for (w, p) in &self.pairs {
            acc.add(p / w.length());
        }
        acc.value()
    }

    /// Mass carried by segments not longer than `delta`.
    pub fn mass_below(&self, delta: f64) -> f64 {
        self.pairs
            .iter()
            .filter(|(w, _)| w.length() <= delta)
            .map(|(_, p)| *p)
            .sum()
    }

    /// JSON list of `{a, b, p}` entries.
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::Value::Array(
            self.pairs
                .iter()
                .map(|(w, p)| {
                    serde_json::json!({
                        "a": [w.seg.a.x, w.seg.a.y],
                        "b": [w.seg.b.x, w.seg.b.y],
                        "p": p,
                    })
                })
                .collect(),
        )
    }
}

/// Cuts a segment at the three branch-cut lines; returns the fragmentation
/// parameters in `(0, 1)`, sorted.
pub fn cut_params<S: Scalar>(fam: &CatFamily<S>, seg: &Segment<S>) -> Vec<S> {
    let kappa = S::from_ratio(2, 1) - fam.t.clone();
    let lines: [(S, S, S); 3] = [
        (S::one(), kappa.clone(), S::one()),
        (S::one(), kappa, S::from_ratio(2, 1)),
        (S::one(), S::one(), S::one()),
    ];
    let mut cuts: Vec<S> = Vec::new();
    for (nx, ny, c) in lines {
        let va = nx.clone() * seg.a.x.clone() + ny.clone() * seg.a.y.clone() - c.clone();
        let vb = nx * seg.b.x.clone() + ny * seg.b.y.clone() - c;
        let d = vb - va.clone();
        if d.is_zero_snapped() {
            continue;
        }
        let u = -va / d;
        if u > S::snap() && u < S::one() - S::snap() {
            cuts.push(u);
        }
    }
    cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    cuts
}

/// Maximal open subsegments of `w \ S_t^{+,1}` with relative length weights
/// summing to 1, in order along `w`.
pub fn fragment(
    fam: &CatFamily<f64>,
    w: &StandardSegment,
) -> Result<Vec<(StandardSegment, f64)>, PairError> {
    if w.segment().is_degenerate() {
        return Err(PairError::DegenerateInput);
    }
    let cuts = cut_params(fam, w.segment());
    let mut params = vec![0.0];
    params.extend(cuts);
    params.push(1.0);
    let mut out = Vec::with_capacity(params.len() - 1);
    for i in 0..params.len() - 1 {
        let (lo, hi) = (params[i], params[i + 1]);
        if hi - lo <= 1e-15 {
            continue;
        }
        let a = w.at(lo);
        let b = w.at(hi);
        let piece = StandardSegment::from_endpoints(a, b)?;
        out.push((piece, hi - lo));
    }
    if out.is_empty() {
        return Err(PairError::DegenerateInput);
    }
    Ok(out)
}

/// Maps a fragment that crosses no cut line through its branch; clamps the
/// image into the closed square against float drift.
fn map_fragment(fam: &CatFamily<f64>, w: &StandardSegment) -> Option<StandardSegment> {
    let mid = w.at(0.5);
    let j = fam.branch_of(&Point2::new(mid[0], mid[1]))?;
    let b = &fam.branches[(j - 1) as usize];
    let ia = b.apply(&w.seg.a);
    let ib = b.apply(&w.seg.b);
    let clamp = |v: f64| v.clamp(0.0, 1.0);
    StandardSegment::from_endpoints([clamp(ia.x), clamp(ia.y)], [clamp(ib.x), clamp(ib.y)]).ok()
}

/// One evolution step: fragment, map, split weights by length fraction.
/// Dust below [`DUST_LENGTH`] is dropped and the defect redistributed
/// proportionally over the survivors.
pub fn evolve_step(fam: &CatFamily<f64>, family: &StandardFamily) -> StandardFamily {
    let mut pairs = Vec::with_capacity(family.len() * 2);
    let mut dropped = NeumaierSum::new();
    for (w, p) in family.pairs() {
        match fragment(fam, w) {
            Ok(pieces) => {
                for (piece, frac) in pieces {
                    let weight = p * frac;
                    if piece.length() < DUST_LENGTH {
                        dropped.add(weight);
                        continue;
                    }
                    match map_fragment(fam, &piece) {
                        Some(img) if img.length() >= DUST_LENGTH => pairs.push((img, weight)),
                        _ => dropped.add(weight),
                    }
                }
            }
            Err(_) => dropped.add(*p),
        }
    }
    let defect = dropped.value();
    let mut kept = NeumaierSum::new();
    for (_, p) in &pairs {
        kept.add(*p);
    }
    let scale = 1.0 / kept.value().max(f64::MIN_POSITIVE);
    for (_, p) in &mut pairs {
        *p *= scale;
    }
    StandardFamily {
        pairs,
        dropped_weight: family.dropped_weight + defect,
    }
}

/// n-step evolution without any budget (fragment count grows geometrically).
pub fn evolve(fam: &CatFamily<f64>, family: &StandardFamily, n: usize) -> StandardFamily {
    let mut cur = family.clone();
    for _ in 0..n {
        cur = evolve_step(fam, &cur);
    }
    cur
}

/// Systematic resampling to `m` equally weighted particles. Unbiased for the
/// family measure and for `Z`; deterministic given the rng state.
pub fn resample(family: &StandardFamily, m: usize, rng: &mut ChaCha8Rng) -> StandardFamily {
    let offset: f64 = rng.random::<f64>() / m as f64;
    let mut out = Vec::with_capacity(m);
    let mut cum = 0.0;
    let mut i = 0usize;
    let pairs = family.pairs();
    let total = family.total_weight();
    for k in 0..m {
        let target = total * (offset + k as f64 / m as f64);
        while i + 1 < pairs.len() && cum + pairs[i].1 < target {
            cum += pairs[i].1;
            i += 1;
        }
        out.push((pairs[i].0.clone(), total / m as f64));
    }
    StandardFamily {
        pairs: out,
        dropped_weight: family.dropped_weight,
    }
}

/// Evolution driver with a fragment budget: exact while the family is small,
/// systematic resampling once the budget is exceeded.
pub struct Evolver {
    pub fam: CatFamily<f64>,
    pub family: StandardFamily,
    pub budget: usize,
    pub particles: usize,
    pub steps_done: usize,
    pub resampled: bool,
    rng: ChaCha8Rng,
}

impl Evolver {
    pub fn new(fam: CatFamily<f64>, family: StandardFamily, budget: usize, particles: usize, seed: u64) -> Self {
        Self {
            fam,
            family,
            budget,
            particles,
            steps_done: 0,
            resampled: false,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn step(&mut self) {
        self.family = evolve_step(&self.fam, &self.family);
        self.steps_done += 1;
        if self.family.len() > self.budget {
            self.family = resample(&self.family, self.particles, &mut self.rng);
            self.resampled = true;
        }
    }
}

/// Regularity trace of an evolved family with the fitted per-block affine
/// contraction `Z_{k+1} <= z Z_k + b` at multiples of `n0`.
#[derive(Debug, Clone)]
pub struct GrowthStats {
    pub z_values: Vec<f64>,
    pub n0: usize,
    pub fitted_z: f64,
    pub fitted_intercept: f64,
    /// `b / (1 - z)`: the plateau implied by the fit.
    pub plateau: f64,
    /// Envelope intercept making the per-block bound hold at every multiple.
    pub envelope_intercept: f64,
    pub resampled: bool,
}

impl GrowthStats {
    pub fn first_step_at_or_below(&self, threshold: f64) -> Option<usize> {
        self.z_values.iter().position(|&z| z <= threshold)
    }
}

/// Evolves `g0` for `steps` steps recording `Z` after each, then fits the
/// affine contraction over consecutive multiples of `n0`.
pub fn growth_stats(
    fam: &CatFamily<f64>,
    g0: &StandardFamily,
    steps: usize,
    n0: usize,
    budget: usize,
    particles: usize,
    seed: u64,
) -> GrowthStats {
    assert!(n0 >= 1);
    let mut ev = Evolver::new(fam.clone(), g0.clone(), budget, particles, seed);
    let mut z_values = Vec::with_capacity(steps + 1);
    z_values.push(g0.regularity());
    for _ in 0..steps {
        ev.step();
        z_values.push(ev.family.regularity());
    }
    // Least squares on (Z_{k n0}, Z_{(k+1) n0}).
    let blocks: Vec<(f64, f64)> = (0..)
        .map(|k| (k * n0, (k + 1) * n0))
        .take_while(|&(_, b)| b < z_values.len())
        .map(|(a, b)| (z_values[a], z_values[b]))
        .collect();
    let n = blocks.len() as f64;
    let sx: f64 = blocks.iter().map(|b| b.0).sum();
    let sy: f64 = blocks.iter().map(|b| b.1).sum();
    let sxx: f64 = blocks.iter().map(|b| b.0 * b.0).sum();
    let sxy: f64 = blocks.iter().map(|b| b.0 * b.1).sum();
    let denom = n * sxx - sx * sx;
    let (a, b) = if denom.abs() > 1e-30 {
        ((n * sxy - sx * sy) / denom, (sy * sxx - sx * sxy) / denom)
    } else {
        (0.0, sy / n.max(1.0))
    };
    let envelope_intercept = blocks
        .iter()
        .map(|&(x, y)| y - a * x)
        .fold(f64::MIN, f64::max);
    GrowthStats {
        z_values,
        n0,
        fitted_z: a,
        fitted_intercept: b,
        plateau: if a < 1.0 { b / (1.0 - a) } else { f64::INFINITY },
        envelope_intercept,
        resampled: ev.resampled,
    }
}

/// Measured crossing-count constants for depth-`k` singularity sets: the
/// complexity `K_k` (from the arrangement) and the envelope slope `P_k` so
/// that `#(W ∩ S^{+,k}) <= K_k + P_k |W|` over the sample.
pub fn crossing_constants(
    fam: &CatFamily<f64>,
    k: u32,
    k_max: u32,
    samples: usize,
    seed: u64,
) -> Result<(usize, f64), crate::cat_family::CatError> {
    use crate::geometry::segment_intersections;
    let arr = fam.singularity_forward(k, k_max)?;
    let kk = crate::cat_family::arrangement_max_faces(&arr);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut p = 0.0f64;
    let mut done = 0usize;
    while done < samples {
        let x0 = rng.random::<f64>();
        let y0 = rng.random::<f64>();
        let dx = rng.random::<f64>();
        let dy = rng.random::<f64>();
        let len = 0.05 + 1.3 * rng.random::<f64>();
        let norm = (dx * dx + dy * dy).sqrt();
        if norm < 1e-6 {
            continue;
        }
        let seg = Segment::new(
            Point2::new(x0, y0),
            Point2::new(x0 + len * dx / norm, y0 + len * dy / norm),
        );
        let Some(clipped) = seg.clip_to_unit_square() else {
            continue;
        };
        if clipped.length() < 1e-3 {
            continue;
        }
        let Ok(hits) = segment_intersections(&clipped, &arr) else {
            continue;
        };
        let excess = hits.len() as f64 - kk as f64;
        if excess > 0.0 {
            p = p.max(excess / clipped.length());
        }
        done += 1;
    }
    Ok((kk, p))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn fam(t: f64) -> CatFamily<f64> {
        CatFamily::new(t).unwrap()
    }

    fn gl() -> GaussLegendre {
        GaussLegendre::new(8)
    }

    #[test]
    fn standard_segment_rejects_stable_direction() {
        assert!(StandardSegment::from_endpoints([0.1, 0.9], [0.9, 0.1]).is_err());
        assert!(StandardSegment::from_endpoints([0.1, 0.1], [0.9, 0.9]).is_ok());
        assert!(StandardSegment::from_endpoints([0.5, 0.0], [0.5, 1.0]).is_ok());
    }

    #[test]
    fn family_measure_basics() {
        let v = StandardFamily::single(StandardSegment::vertical(0.5));
        assert_abs_diff_eq!(v.measure(&gl(), 0.4, |_| 1.0), 1.0, epsilon = 1e-13);
        assert_abs_diff_eq!(v.measure(&gl(), 0.4, |p| p[1]), 0.5, epsilon = 1e-13);

        // Two equal-weight segments, phi = x: average of midpoint abscissas.
        let w1 = StandardSegment::from_endpoints([0.1, 0.2], [0.3, 0.4]).unwrap();
        let w2 = StandardSegment::from_endpoints([0.6, 0.1], [0.8, 0.5]).unwrap();
        let g = StandardFamily::new(vec![(w1, 0.5), (w2, 0.5)]).unwrap();
        assert_abs_diff_eq!(g.measure(&gl(), 0.4, |p| p[0]), 0.5 * (0.2 + 0.7), epsilon = 1e-12);
    }

    #[test]
    fn fragment_full_vertical_line() {
        // x = 0.4, t = 1/8: cuts at y = 0.32, 0.6, 0.8533..; four components.
        let f = fam(0.125);
        let w = StandardSegment::vertical(0.4);
        let pieces = fragment(&f, &w).unwrap();
        assert_eq!(pieces.len(), 4);
        let total: f64 = pieces.iter().map(|(_, p)| p).sum();
        assert_abs_diff_eq!(total, 1.0, epsilon = 1e-12);
        let kappa = 2.0 - 0.125;
        let expected = [
            (1.0 - 0.4) / kappa,
            1.0 - 0.4 - (1.0 - 0.4) / kappa,
            (2.0 - 0.4) / kappa - (1.0 - 0.4),
            1.0 - (2.0 - 0.4) / kappa,
        ];
        for ((_, p), e) in pieces.iter().zip(expected) {
            assert_abs_diff_eq!(*p, e, epsilon = 1e-12);
        }
    }

    #[test]
    fn fragment_uncut_segment_is_identity() {
        let f = fam(0.125);
        let w = StandardSegment::from_endpoints([0.05, 0.05], [0.1, 0.11]).unwrap();
        let pieces = fragment(&f, &w).unwrap();
        assert_eq!(pieces.len(), 1);
        assert_abs_diff_eq!(pieces[0].1, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn evolution_conserves_weight_and_cone() {
        let f = fam(1.0 / 16.0);
        let mut g = StandardFamily::single(StandardSegment::vertical(0.37));
        for _ in 0..12 {
            g = evolve_step(&f, &g);
            assert!((g.total_weight() - 1.0).abs() < 1e-10);
            for (w, _) in g.pairs() {
                let (dx, dy) = w.segment().direction();
                assert!(dx * dy >= 0.0, "evolved piece left the unstable cone");
            }
        }
        assert!(g.dropped_weight < 1e-9);
    }

    #[test]
    fn single_curve_weights_are_length_fractions() {
        let f = fam(0.125);
        let g = evolve(&f, &StandardFamily::single(StandardSegment::vertical(0.43)), 5);
        let total_len = g.total_length();
        for (w, p) in g.pairs() {
            assert_abs_diff_eq!(*p, w.length() / total_len, epsilon = 1e-10);
        }
    }

    #[test]
    fn unstable_length_grows_within_cone_bounds() {
        let f = fam(1.0 / 16.0);
        let lambda = f.eigen.lambda;
        let lambda_bar = f.eigen.lambda_bar;
        let w = StandardSegment::from_endpoints([0.21, 0.3], [0.27, 0.35]).unwrap();
        let mut g = StandardFamily::single(w.clone());
        let mut prev = w.length();
        for _ in 0..10 {
            g = evolve_step(&f, &g);
            let len = g.total_length();
            let rate = len / prev;
            assert!(
                rate >= lambda - 1e-9 && rate <= lambda_bar + 1e-9,
                "step growth {} outside [{}, {}]",
                rate,
                lambda,
                lambda_bar
            );
            prev = len;
        }
    }

    #[test]
    fn pushforward_identity_for_measures() {
        // mu_G(phi . F) = mu_{FG}(phi): integrate the composition piecewise
        // (it is smooth between cuts) and compare to the evolved family.
        let f = fam(1.0 / 16.0);
        let w = StandardSegment::vertical(0.3);
        let phi = |p: [f64; 2]| (2.0 * std::f64::consts::PI * p[0]).cos() * p[1];
        let glr = GaussLegendre::new(16);
        let mut lhs = 0.0;
        for (piece, frac) in fragment(&f, &w).unwrap() {
            lhs += frac
                * piece.mean(&glr, 0.2, |p| {
                    match f.apply(&Point2::new(p[0], p[1])) {
                        Ok((q, _)) => phi([q.x, q.y]),
                        Err(_) => 0.0,
                    }
                });
        }
        let g = StandardFamily::single(w);
        let rhs = evolve_step(&f, &g).measure(&glr, 0.2, phi);
        assert_abs_diff_eq!(lhs, rhs, epsilon = 1e-9);
    }

    #[test]
    fn regularity_invariant_under_reweighting() {
        let w1 = StandardSegment::from_endpoints([0.1, 0.1], [0.5, 0.5]).unwrap();
        let w2 = StandardSegment::from_endpoints([0.6, 0.2], [0.9, 0.4]).unwrap();
        let g = StandardFamily::new(vec![(w1.clone(), 0.4), (w2.clone(), 0.6)]).unwrap();
        // Split w1's weight into 0.25 + 0.15 on the same segment.
        let gt = StandardFamily::new(vec![
            (w1.clone(), 0.25),
            (w1, 0.15),
            (w2, 0.6),
        ])
        .unwrap();
        assert_abs_diff_eq!(g.regularity(), gt.regularity(), epsilon = 1e-12);
        let glr = gl();
        for obs in crate::config::Observable::BATTERY {
            assert_abs_diff_eq!(
                g.measure(&glr, 0.4, |p| obs.eval(p)),
                gt.measure(&glr, 0.4, |p| obs.eval(p)),
                epsilon = 1e-12
            );
        }
    }

    #[test]
    fn short_mass_bounded_by_regularity() {
        let f = fam(0.125);
        let g = evolve(&f, &StandardFamily::single(StandardSegment::vertical(0.55)), 8);
        let z = g.regularity();
        for delta in [1e-3, 1e-2, 0.1] {
            assert!(g.mass_below(delta) <= delta * z + 1e-12);
        }
        assert!(z >= 1.0 / 2f64.sqrt());
    }

    #[test]
    fn resampling_preserves_measure_statistics() {
        let f = fam(1.0 / 16.0);
        let g = evolve(&f, &StandardFamily::single(StandardSegment::vertical(0.7)), 9);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let r = resample(&g, 4000, &mut rng);
        assert!((r.total_weight() - 1.0).abs() < 1e-12);
        let glr = gl();
        let a = g.measure(&glr, 0.4, |p| p[0] * p[1]);
        let b = r.measure(&glr, 0.4, |p| p[0] * p[1]);
        assert!((a - b).abs() < 5e-3, "resampled measure drifted: {} vs {}", a, b);
        let zr = r.regularity();
        let zg = g.regularity();
        assert!((zr / zg - 1.0).abs() < 0.2, "Z drifted: {} vs {}", zr, zg);
    }

    #[test]
    fn growth_from_short_segment_plateaus() {
        let f = fam(1.0 / 16.0);
        let w = StandardSegment::from_endpoints([0.4, 0.4], [0.4 + 7.0e-4, 0.4 + 7.2e-4]).unwrap();
        let g0 = StandardFamily::single(w);
        let stats = growth_stats(&f, &g0, 40, 5, 300_000, 100_000, 17);
        assert!(stats.fitted_z < 1.0, "fitted z = {}", stats.fitted_z);
        assert!(stats.z_values[0] > 900.0);
        let plateau = stats.plateau;
        assert!(plateau.is_finite() && plateau > 0.0);
        // Z must come down to the plateau scale and stay bounded.
        let tail = &stats.z_values[30..];
        assert!(tail.iter().all(|&z| z < 10.0 * plateau.max(1.0)));
    }
}
