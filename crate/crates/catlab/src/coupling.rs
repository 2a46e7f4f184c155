//! Coupling of standard segments and the contracting bookkeeping scheme.
//!
//! Two standard segments are `eta`-coupled when every point of one connects
//! to the other by a stable-direction segment of length at most `eta`.
//! Geometric coupling happens through a small eigen-aligned square: two long
//! segments crossing its center can be trimmed to subsegments coupled at
//! distance `3 rho + zeta sin(2 alpha*)`. Under iteration the coupled
//! distance contracts by the stable multiplier each step, while mass whose
//! connector crosses an iterated singularity decouples; the lost fraction
//! per block is proportional to the current distance.
//!
//! The bookkeeping scheme tracks coupled mass `c_r` (distance class `r`) and
//! uncoupled mass `u_r` (regularity class `r`) through five linear recursion
//! rows; the weighted star norm `sum psi_-^r c_r + sum psi_+^{r+1} u_r`
//! contracts by an explicit factor `tau < 1` for admissible parameters.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::cat_family::CatFamily;
use crate::geometry::SegmentArrangement;
use crate::quad::NeumaierSum;
use crate::standard_pairs::StandardSegment;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CouplingError {
    #[error("segments cannot be coupled: {0}")]
    Incompatible(String),
    #[error("scheme parameters are not contractive (tau = {0})")]
    ParamsNotContractive(f64),
    #[error("invalid scheme parameters: {0}")]
    InvalidParams(String),
}

/// Eigen-aligned square with a given center and side.
#[derive(Debug, Clone, Copy)]
pub struct AlignedSquare {
    pub center: [f64; 2],
    pub side: f64,
    pub e_u: [f64; 2],
    pub e_s: [f64; 2],
}

impl AlignedSquare {
    pub fn new(fam: &CatFamily<f64>, center: [f64; 2], side: f64) -> Self {
        Self {
            center,
            side,
            e_u: fam.eigen.e_u,
            e_s: fam.eigen.e_s,
        }
    }

    fn to_uv(&self, p: [f64; 2]) -> (f64, f64) {
        let dx = p[0] - self.center[0];
        let dy = p[1] - self.center[1];
        (
            dx * self.e_u[0] + dy * self.e_u[1],
            dx * self.e_s[0] + dy * self.e_s[1],
        )
    }
}

/// A coupled pair of subsegments with their stable-direction distance bound.
#[derive(Debug, Clone)]
pub struct CoupledPair {
    pub w1: StandardSegment,
    pub w2: StandardSegment,
    pub eta: f64,
}

/// Couples two standard segments through the center of an aligned square of
/// side `rho_side`. Preconditions follow the geometric lemma: both segments
/// meet the center part of the square, both angles to the unstable
/// eigendirection are at most `pi/8`, and `rho_side <= zeta/1000` for
/// `zeta = min(|w1|, |w2|)`. The returned subsegments have length at least
/// `zeta/200` and are `eta = 3 rho + zeta sin(2 alpha*)`-coupled.
pub fn couple_segments(
    w1: &StandardSegment,
    w2: &StandardSegment,
    q: &AlignedSquare,
    rho_side: f64,
) -> Result<CoupledPair, CouplingError> {
    let zeta = w1.length().min(w2.length());
    if rho_side > zeta / 1000.0 {
        return Err(CouplingError::Incompatible(format!(
            "square side {} exceeds zeta/1000 = {}",
            rho_side,
            zeta / 1000.0
        )));
    }
    let angle = |w: &StandardSegment| -> f64 {
        let (dx, dy) = w.segment().direction();
        let dot = (dx * q.e_u[0] + dy * q.e_u[1]).abs();
        let norm = (dx * dx + dy * dy).sqrt();
        (dot / norm).clamp(-1.0, 1.0).acos()
    };
    let a1 = angle(w1);
    let a2 = angle(w2);
    let alpha_star = a1.max(a2);
    if alpha_star > std::f64::consts::PI / 8.0 {
        return Err(CouplingError::Incompatible(format!(
            "angle to the unstable direction {} exceeds pi/8",
            alpha_star
        )));
    }
    // Both segments must meet the square within their center part.
    let check_center = |w: &StandardSegment, which: &str| -> Result<(), CouplingError> {
        let hit = segment_square_params(w, q, q.side);
        match hit {
            Some((lo, hi)) => {
                let mid = 0.5 * (lo + hi);
                if mid < 0.01 || mid > 0.99 {
                    Err(CouplingError::Incompatible(format!(
                        "{} meets the square outside its center part",
                        which
                    )))
                } else {
                    Ok(())
                }
            }
            None => Err(CouplingError::Incompatible(format!(
                "{} misses the square",
                which
            ))),
        }
    };
    check_center(w1, "w1")?;
    check_center(w2, "w2")?;

    // Start both subsegments at the u-coordinate of the right side of the
    // tripled square and extend over a common u-interval of length zeta/200.
    let u_start = 1.5 * rho_side;
    let du = zeta / 200.0;
    let sub = |w: &StandardSegment, which: &str| -> Result<StandardSegment, CouplingError> {
        let (ua, _) = q.to_uv(w.at(0.0));
        let (ub, _) = q.to_uv(w.at(1.0));
        let (p_lo, p_hi, u_lo, u_hi) = if ua <= ub {
            (0.0, 1.0, ua, ub)
        } else {
            (1.0, 0.0, ub, ua)
        };
        if u_start < u_lo || u_start + du > u_hi {
            return Err(CouplingError::Incompatible(format!(
                "{} too short on the coupling side",
                which
            )));
        }
        let par_at = |u: f64| p_lo + (p_hi - p_lo) * (u - u_lo) / (u_hi - u_lo);
        let pa = par_at(u_start);
        let pb = par_at(u_start + du);
        StandardSegment::from_endpoints(w.at(pa.min(pb)), w.at(pa.max(pb))).map_err(|e| {
            CouplingError::Incompatible(format!("{}: degenerate trimmed segment ({})", which, e))
        })
    };
    let w1c = sub(w1, "w1")?;
    let w2c = sub(w2, "w2")?;
    let eta = 3.0 * rho_side + zeta * (2.0 * alpha_star).sin();
    Ok(CoupledPair {
        w1: w1c,
        w2: w2c,
        eta,
    })
}

/// Parameter interval of `w` inside the aligned square of the given side, if
/// any.
fn segment_square_params(w: &StandardSegment, q: &AlignedSquare, side: f64) -> Option<(f64, f64)> {
    let (ua, va) = q.to_uv(w.at(0.0));
    let (ub, vb) = q.to_uv(w.at(1.0));
    let mut lo = 0.0f64;
    let mut hi = 1.0f64;
    let h = side / 2.0;
    for (s, e) in [(ua, ub), (va, vb)] {
        let d = e - s;
        for (c, sign) in [(h, 1.0), (h, -1.0)] {
            // sign * coord <= h
            let (vs, vd) = (sign * s, sign * d);
            if vd.abs() < 1e-300 {
                if vs > c {
                    return None;
                }
                continue;
            }
            let bound = (c - vs) / vd;
            if vd > 0.0 {
                hi = hi.min(bound);
            } else {
                lo = lo.max(bound);
            }
        }
    }
    if hi > lo {
        Some((lo, hi))
    } else {
        None
    }
}

/// Verifies pointwise eta-coupling by dense sampling along the stable
/// direction: every point of each segment must connect to the other within
/// distance `eta` along `e_s`.
pub fn verify_eta_coupled(
    pair: &CoupledPair,
    e_u: [f64; 2],
    e_s: [f64; 2],
    samples: usize,
) -> bool {
    let proj = |p: [f64; 2]| (p[0] * e_u[0] + p[1] * e_u[1], p[0] * e_s[0] + p[1] * e_s[1]);
    let check = |a: &StandardSegment, b: &StandardSegment| -> bool {
        let (bu0, bs0) = proj(b.at(0.0));
        let (bu1, bs1) = proj(b.at(1.0));
        let (blo, bhi) = (bu0.min(bu1), bu0.max(bu1));
        for i in 0..=samples {
            let u = i as f64 / samples as f64;
            let (au, as_) = proj(a.at(u));
            if au < blo - 1e-12 || au > bhi + 1e-12 {
                return false;
            }
            let tau = if (bu1 - bu0).abs() < 1e-300 {
                0.5
            } else {
                (au - bu0) / (bu1 - bu0)
            };
            let bs = bs0 + tau * (bs1 - bs0);
            if (as_ - bs).abs() > pair.eta + 1e-12 {
                return false;
            }
        }
        true
    };
    check(&pair.w1, &pair.w2) && check(&pair.w2, &pair.w1)
}

/// Per-block decoupling report for two coupled segments evolved with
/// synchronized fragmentation.
#[derive(Debug, Clone)]
pub struct DecouplingReport {
    /// Mass lost to singularity-crossing connectors in each block.
    pub block_losses: Vec<f64>,
    /// Coupled-distance bound at the start of each block.
    pub eta_sequence: Vec<f64>,
    /// Mass still coupled at the end.
    pub surviving_mass: f64,
    /// Measured per-step stable contraction (should equal `mu_s`).
    pub contraction_per_step: f64,
}

/// Evolves an eta-coupled pair for `blocks` blocks of `n0` steps each,
/// removing the mass whose stable connector crosses the depth-`n0`
/// singularity set (the remainder maps by a common itinerary, so the
/// connector contracts by `mu_s` exactly each step).
pub fn decoupled_fraction(
    fam: &CatFamily<f64>,
    pair: &CoupledPair,
    blocks: usize,
    n0: u32,
    k_max: u32,
) -> Result<DecouplingReport, crate::cat_family::CatError> {
    let arr = fam.singularity_forward(n0, k_max)?;
    let mu_s = fam.eigen.mu_s;
    let e_s = fam.eigen.e_s;
    let e_u = fam.eigen.e_u;
    // State: parameter-aligned coupled pieces (mass, seg1, seg2).
    let mut pieces: Vec<(f64, StandardSegment, StandardSegment)> =
        vec![(1.0, pair.w1.clone(), pair.w2.clone())];
    let mut eta = pair.eta;
    let mut block_losses = Vec::with_capacity(blocks);
    let mut eta_sequence = Vec::with_capacity(blocks);
    let mut contraction = f64::NAN;
    for _ in 0..blocks {
        eta_sequence.push(eta);
        let mut next: Vec<(f64, StandardSegment, StandardSegment)> = Vec::new();
        let mut lost = NeumaierSum::new();
        for (mass, s1, s2) in &pieces {
            // Parameter intervals where the connector crosses the depth-n0
            // singularity set, plus the parameters where either segment
            // itself crosses (kept pieces must be cut there: each sub-piece
            // then carries a constant itinerary).
            let (bad, cut_points) = connector_crossings(s1, s2, &arr, e_u);
            let keep = complement_intervals(&bad, 1e-12);
            for (klo, khi) in keep {
                let mut bounds = vec![klo];
                bounds.extend(
                    cut_points
                        .iter()
                        .copied()
                        .filter(|c| *c > klo + 1e-12 && *c < khi - 1e-12),
                );
                bounds.push(khi);
                for win in bounds.windows(2) {
                    let (lo, hi) = (win[0], win[1]);
                    let frac = hi - lo;
                    if frac <= 1e-12 {
                        continue;
                    }
                    match (trim(s1, lo, hi), trim(s2, lo, hi)) {
                        (Some(sub1), Some(sub2)) => {
                            match iterate_pair(fam, &sub1, &sub2, n0) {
                                Some((i1, i2)) => next.push((mass * frac, i1, i2)),
                                None => lost.add(mass * frac),
                            }
                        }
                        _ => lost.add(mass * frac),
                    }
                }
            }
            let bad_mass: f64 = bad.iter().map(|(lo, hi)| hi - lo).sum();
            lost.add(mass * bad_mass);
        }
        block_losses.push(lost.value());
        // Stable distance contracts by mu_s^{n0}.
        if contraction.is_nan() {
            if let Some((_, s1, s2)) = next.first() {
                let d_before = stable_distance(&pieces[0].1, &pieces[0].2, e_u, e_s);
                let d_after = stable_distance(s1, s2, e_u, e_s);
                if d_before > 1e-14 {
                    contraction = (d_after / d_before).powf(1.0 / n0 as f64);
                }
            }
        }
        pieces = next;
        eta *= mu_s.powi(n0 as i32);
        if pieces.is_empty() {
            break;
        }
    }
    let surviving: f64 = pieces.iter().map(|(m, _, _)| m).sum();
    Ok(DecouplingReport {
        block_losses,
        eta_sequence,
        surviving_mass: surviving,
        contraction_per_step: contraction,
    })
}

fn trim(w: &StandardSegment, lo: f64, hi: f64) -> Option<StandardSegment> {
    StandardSegment::from_endpoints(w.at(lo), w.at(hi)).ok()
}

/// Stable-direction distance at the common parameter midpoint.
fn stable_distance(a: &StandardSegment, b: &StandardSegment, _e_u: [f64; 2], e_s: [f64; 2]) -> f64 {
    let pa = a.at(0.5);
    let pb = b.at(0.5);
    ((pb[0] - pa[0]) * e_s[0] + (pb[1] - pa[1]) * e_s[1]).abs()
}

/// Parameter intervals (on the common parameterization) where the stable
/// connector between the two segments meets the arrangement, together with
/// the parameters where either segment itself crosses an arrangement line.
fn connector_crossings(
    s1: &StandardSegment,
    s2: &StandardSegment,
    arr: &SegmentArrangement<f64>,
    e_u: [f64; 2],
) -> (Vec<(f64, f64)>, Vec<f64>) {
    let mut bad: Vec<(f64, f64)> = Vec::new();
    let mut cut_points: Vec<f64> = Vec::new();
    let a1 = s1.at(0.0);
    let b1 = s1.at(1.0);
    let a2 = s2.at(0.0);
    let b2 = s2.at(1.0);
    // Partner orientation: parameters increase along e_u together.
    let du1 = (b1[0] - a1[0]) * e_u[0] + (b1[1] - a1[1]) * e_u[1];
    let du2 = (b2[0] - a2[0]) * e_u[0] + (b2[1] - a2[1]) * e_u[1];
    let flip = du1 * du2 < 0.0;
    let p2 = |tau: f64| if flip { 1.0 - tau } else { tau };
    for seg in &arr.segments {
        let (nx, ny) = (seg.a.y - seg.b.y, seg.b.x - seg.a.x);
        let c = nx * seg.a.x + ny * seg.a.y;
        // Signed line values at both endpoints of the connector, linear in tau.
        let f1 = |tau: f64| {
            let p = s1.at(tau);
            nx * p[0] + ny * p[1] - c
        };
        let f2v = |tau: f64| {
            let p = s2.at(p2(tau));
            nx * p[0] + ny * p[1] - c
        };
        let (g10, g11) = (f1(0.0), f1(1.0));
        let (g20, g21) = (f2v(0.0), f2v(1.0));
        // Connector straddles the LINE when f1 and f2 have opposite signs;
        // the product is quadratic in tau. Find its negative set on [0,1].
        let prod = |tau: f64| {
            (g10 + tau * (g11 - g10)) * (g20 + tau * (g21 - g20))
        };
        let mut candidates = vec![0.0, 1.0];
        // roots of each linear factor
        for (va, vb) in [(g10, g11), (g20, g21)] {
            let d = vb - va;
            if d.abs() > 1e-300 {
                let r = -va / d;
                if r > 0.0 && r < 1.0 {
                    candidates.push(r);
                    cut_points.push(r);
                }
            }
        }
        candidates.sort_unstable_by(f64::total_cmp);
        for win in candidates.windows(2) {
            let (lo, hi) = (win[0], win[1]);
            if hi - lo < 1e-15 {
                continue;
            }
            let mid = 0.5 * (lo + hi);
            if prod(mid) > 0.0 {
                continue;
            }
            // Straddles the line; restrict to the extent of the singularity
            // segment, via the crossing point's position along it.
            let mut sub_lo = lo;
            let mut sub_hi = hi;
            let on_extent = |tau: f64| -> bool {
                let p1 = s1.at(tau);
                let p2p = s2.at(p2(tau));
                let denom = f1(tau) - f2v(tau);
                let x = if denom.abs() < 1e-300 {
                    p1
                } else {
                    let u = f1(tau) / denom;
                    [p1[0] + u * (p2p[0] - p1[0]), p1[1] + u * (p2p[1] - p1[1])]
                };
                let dx = seg.b.x - seg.a.x;
                let dy = seg.b.y - seg.a.y;
                let l2 = dx * dx + dy * dy;
                let tproj = ((x[0] - seg.a.x) * dx + (x[1] - seg.a.y) * dy) / l2;
                (-1e-9..=1.0 + 1e-9).contains(&tproj)
            };
            // Bisect the extent condition at the interval ends if needed.
            let lo_on = on_extent(sub_lo + 1e-12);
            let hi_on = on_extent(sub_hi - 1e-12);
            if !lo_on && !hi_on {
                if !on_extent(0.5 * (sub_lo + sub_hi)) {
                    continue;
                }
            }
            if lo_on != hi_on {
                let (mut a, mut b) = (sub_lo, sub_hi);
                for _ in 0..50 {
                    let m = 0.5 * (a + b);
                    if on_extent(m) == lo_on {
                        a = m;
                    } else {
                        b = m;
                    }
                }
                if lo_on {
                    sub_hi = 0.5 * (a + b);
                } else {
                    sub_lo = 0.5 * (a + b);
                }
            }
            bad.push((sub_lo, sub_hi));
        }
    }
    cut_points.sort_unstable_by(f64::total_cmp);
    cut_points.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    (merge_intervals(bad), cut_points)
}

fn merge_intervals(mut xs: Vec<(f64, f64)>) -> Vec<(f64, f64)> {
    xs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut out: Vec<(f64, f64)> = Vec::with_capacity(xs.len());
    for (lo, hi) in xs {
        if let Some(last) = out.last_mut() {
            if lo <= last.1 {
                last.1 = last.1.max(hi);
                continue;
            }
        }
        out.push((lo, hi));
    }
    out
}

fn complement_intervals(bad: &[(f64, f64)], eps: f64) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(bad.len() + 1);
    let mut cursor = 0.0;
    for &(lo, hi) in bad {
        if lo - cursor > eps {
            out.push((cursor, lo));
        }
        cursor = cursor.max(hi);
    }
    if 1.0 - cursor > eps {
        out.push((cursor, 1.0));
    }
    out
}

/// Iterates a parameter-aligned pair for `n` steps; `None` when either
/// segment fragments (which the caller has excluded up to measure zero).
fn iterate_pair(
    fam: &CatFamily<f64>,
    s1: &StandardSegment,
    s2: &StandardSegment,
    n: u32,
) -> Option<(StandardSegment, StandardSegment)> {
    use crate::geometry::Point2;
    let mut a1 = s1.at(0.0);
    let mut b1 = s1.at(1.0);
    let mut a2 = s2.at(0.0);
    let mut b2 = s2.at(1.0);
    let probe = |a: [f64; 2], b: [f64; 2]| -> Option<u8> {
        // A kept piece has constant itinerary; verify on three interior
        // points rather than trusting the midpoint alone.
        let at = |u: f64| [a[0] + u * (b[0] - a[0]), a[1] + u * (b[1] - a[1])];
        let j = fam.branch_of(&Point2::new(at(0.5)[0], at(0.5)[1]))?;
        for u in [0.25, 0.75] {
            let p = at(u);
            if fam.branch_of(&Point2::new(p[0], p[1])) != Some(j) {
                return None;
            }
        }
        Some(j)
    };
    for _ in 0..n {
        let j1 = probe(a1, b1)?;
        let j2 = probe(a2, b2)?;
        let br1 = &fam.branches[(j1 - 1) as usize];
        let br2 = &fam.branches[(j2 - 1) as usize];
        let map = |b: &crate::cat_family::AffineBranch<f64>, p: [f64; 2]| {
            let q = b.apply(&Point2::new(p[0], p[1]));
            [q.x.clamp(0.0, 1.0), q.y.clamp(0.0, 1.0)]
        };
        a1 = map(br1, a1);
        b1 = map(br1, b1);
        a2 = map(br2, a2);
        b2 = map(br2, b2);
    }
    Some((
        StandardSegment::from_endpoints(a1, b1).ok()?,
        StandardSegment::from_endpoints(a2, b2).ok()?,
    ))
}

/// Parameters of the linear bookkeeping scheme.
#[derive(Debug, Clone, Copy)]
pub struct SchemeParams {
    pub rho: f64,
    pub p_c: f64,
    pub beta1: u32,
    pub beta2: u32,
    pub psi_minus: f64,
    pub psi_plus: f64,
    pub big_l: f64,
    pub eta0: f64,
}

impl SchemeParams {
    pub fn new(
        rho: f64,
        p_c: f64,
        beta1: u32,
        beta2: u32,
        psi_minus: f64,
        psi_plus: f64,
        big_l: f64,
        eta0: f64,
    ) -> Result<Self, CouplingError> {
        let fail = |msg: String| Err(CouplingError::InvalidParams(msg));
        if !(0.0 < rho && rho < 0.5) {
            return fail(format!("rho = {} outside (0, 1/2)", rho));
        }
        if !(0.0 < p_c && p_c <= 1.0) {
            return fail(format!("p_c = {} outside (0, 1]", p_c));
        }
        if beta1 == 0 || beta2 == 0 {
            return fail("beta1, beta2 must be positive".into());
        }
        if !(rho < psi_minus && psi_minus < 0.5) {
            return fail(format!("psi_minus = {} outside (rho, 1/2)", psi_minus));
        }
        let cap = (psi_minus / rho)
            .powf(1.0 / beta1 as f64)
            .min((2.0 * (1.0 - psi_minus)).powf(1.0 / (beta2 as f64 + 1.0)));
        if !(1.0 < psi_plus && psi_plus < cap) {
            return fail(format!(
                "psi_plus = {} outside (1, {})",
                psi_plus, cap
            ));
        }
        if big_l <= 0.0 || eta0 <= 0.0 || eta0 > 1.0 / (2.0 * big_l) {
            return fail(format!(
                "eta0 = {} outside (0, 1/(2L) = {}]",
                eta0,
                1.0 / (2.0 * big_l)
            ));
        }
        let params = Self {
            rho,
            p_c,
            beta1,
            beta2,
            psi_minus,
            psi_plus,
            big_l,
            eta0,
        };
        let tau = params.tau_unchecked();
        if tau >= 1.0 {
            return Err(CouplingError::ParamsNotContractive(tau));
        }
        Ok(params)
    }

    /// Contraction factor of the star norm:
    /// `max{ p_c/psi_+ + (1 - p_c), sup_r [...] }`.
    pub fn tau(&self) -> f64 {
        self.tau_unchecked()
    }

    fn tau_unchecked(&self) -> f64 {
        let first = self.p_c / self.psi_plus + (1.0 - self.p_c);
        // r-th supremand: psi_-(1 - rho^r/2) + (geo^r / 2) psi_+^{beta2+1}
        // with geo = rho psi_+^{beta1} / psi_-; the r-dependent part decays
        // geometrically, and the r -> inf limit is psi_-.
        let geo = self.rho * self.psi_plus.powi(self.beta1 as i32) / self.psi_minus;
        let mut sup = self.psi_minus;
        let mut weight = 1.0f64;
        let mut rho_r = 1.0f64;
        let mut r = 0u32;
        while weight >= 1e-6 && r <= 10_000 {
            let term = self.psi_minus * (1.0 - 0.5 * rho_r)
                + 0.5 * weight * self.psi_plus.powi(self.beta2 as i32 + 1);
            sup = sup.max(term);
            weight *= geo;
            rho_r *= self.rho;
            r += 1;
        }
        first.max(sup)
    }
}

/// Coupled/uncoupled mass sequences.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingState {
    pub c: Vec<f64>,
    pub u: Vec<f64>,
    pub n: usize,
}

impl CouplingState {
    /// Initial state: all mass uncoupled in regularity class `r0`.
    pub fn uncoupled(r0: usize) -> Self {
        let mut u = vec![0.0; r0 + 1];
        u[r0] = 1.0;
        Self {
            c: vec![0.0],
            u,
            n: 0,
        }
    }

    pub fn total_mass(&self) -> f64 {
        let mut acc = NeumaierSum::new();
        for &v in self.c.iter().chain(&self.u) {
            acc.add(v);
        }
        acc.value()
    }
}

/// One step of the five-row recursion.
pub fn scheme_step(state: &CouplingState, params: &SchemeParams) -> CouplingState {
    let rc = state.c.len();
    let ru = state.u.len();
    let b1 = params.beta1 as usize;
    let b2 = params.beta2 as usize;
    let mut c = vec![0.0; rc + 1];
    let mut u = vec![0.0; (ru.max(rc * b1 + b2 + 1)).max(2)];
    // c_r(n+1) = (1 - rho^{r-1}/2) c_{r-1}(n), r >= 1
    for r in 1..=rc {
        let prev = state.c[r - 1];
        if prev != 0.0 {
            c[r] = (1.0 - 0.5 * params.rho.powi((r - 1) as i32)) * prev;
        }
    }
    // c_0(n+1) = p_c u_0(n)
    c[0] = params.p_c * state.u[0];
    // u_0(n+1) = u_1(n) + (1 - p_c) u_0(n)
    u[0] = state.u.get(1).copied().unwrap_or(0.0) + (1.0 - params.p_c) * state.u[0];
    // u_r(n+1) = u_{r+1}(n) [+ rho^{(r-b2)/b1}/2 c_{(r-b2)/b1}(n) on the net]
    for r in 1..u.len() {
        let mut v = state.u.get(r + 1).copied().unwrap_or(0.0);
        if r >= b2 && (r - b2) % b1 == 0 {
            let k = (r - b2) / b1;
            if k < rc {
                v += 0.5 * params.rho.powi(k as i32) * state.c[k];
            }
        }
        u[r] = v;
    }
    // Trim trailing zeros to keep vectors compact.
    while c.len() > 1 && *c.last().unwrap() == 0.0 {
        c.pop();
    }
    while u.len() > 1 && *u.last().unwrap() == 0.0 {
        u.pop();
    }
    CouplingState {
        c,
        u,
        n: state.n + 1,
    }
}

/// Star norm `sum psi_-^r c_r + sum psi_+^{r+1} u_r`.
pub fn star_norm(state: &CouplingState, params: &SchemeParams) -> f64 {
    let mut acc = NeumaierSum::new();
    for (r, &cv) in state.c.iter().enumerate() {
        if cv != 0.0 {
            acc.add(params.psi_minus.powi(r as i32) * cv);
        }
    }
    for (r, &uv) in state.u.iter().enumerate() {
        if uv != 0.0 {
            acc.add(params.psi_plus.powi(r as i32 + 1) * uv);
        }
    }
    acc.value()
}

/// Draws admissible random parameter tuples (rejection sampling in the
/// admissible box).
pub fn random_admissible_params(rng: &mut ChaCha8Rng) -> SchemeParams {
    loop {
        let rho: f64 = rng.random_range(0.05..0.45);
        let psi_minus: f64 = rng.random_range((rho + 0.01).min(0.49)..0.499);
        let beta1 = rng.random_range(1..=4u32);
        let beta2 = rng.random_range(1..=5u32);
        let cap = (psi_minus / rho)
            .powf(1.0 / beta1 as f64)
            .min((2.0 * (1.0 - psi_minus)).powf(1.0 / (beta2 as f64 + 1.0)));
        if cap <= 1.0 + 1e-6 {
            continue;
        }
        let psi_plus = rng.random_range(1.0 + 0.25 * (cap - 1.0)..1.0 + 0.75 * (cap - 1.0));
        let p_c = rng.random_range(0.01..1.0);
        let big_l = rng.random_range(0.5..20.0);
        let eta0 = rng.random_range(0.1 / (2.0 * big_l)..1.0 / (2.0 * big_l));
        if let Ok(p) = SchemeParams::new(rho, p_c, beta1, beta2, psi_minus, psi_plus, big_l, eta0)
        {
            return p;
        }
    }
}

/// Random finitely supported nonnegative state with unit mass.
pub fn random_state(rng: &mut ChaCha8Rng, max_r: usize) -> CouplingState {
    let rc = rng.random_range(1..=max_r);
    let ru = rng.random_range(1..=max_r);
    let mut c: Vec<f64> = (0..rc).map(|_| rng.random::<f64>()).collect();
    let mut u: Vec<f64> = (0..ru).map(|_| rng.random::<f64>()).collect();
    let total: f64 = c.iter().chain(u.iter()).sum();
    for v in c.iter_mut().chain(u.iter_mut()) {
        *v /= total;
    }
    CouplingState { c, u, n: 0 }
}
