//! First-order response functionals and the response series.
//!
//! `nu_t(phi) = int (phi . F_t - phi) dm` is a one-step quantity; its scaled
//! limit is `m(phi) - int_0^1 phi(s, s) ds`, an integral of `phi` against
//! Lebesgue minus the diagonal line measure. The response series sums the
//! same functional composed with iterates of the unperturbed map, realized
//! by evolving the diagonal as a standard family: term `k` equals `m(phi)`
//! minus the family measure of `phi` after `k` steps. The diagonal evolution
//! stays in exact rational arithmetic while affordable (the unperturbed
//! matrix is integral, so fragment endpoints keep small denominators), then
//! continues in floats with a particle budget.

use rand_chacha::ChaCha8Rng;
use rand::{Rng, SeedableRng};
use thiserror::Error;

use crate::cat_family::{CatError, CatFamily, ResponseDensity};
use crate::config::Observable;
use crate::geometry::{Point2, Segment};
use crate::measures::{plan_depth, pushforward_values, MeasuresError};
use crate::quad::{integrate_polygon, integrate_unit_square, GaussLegendre, NeumaierSum};
use crate::scalar::{Rational, Scalar};
use crate::standard_pairs::{cut_params, StandardFamily, StandardSegment};

#[derive(Debug, Error)]
pub enum ResponseError {
    #[error("series terms stopped decaying over the last ten orders")]
    SeriesDivergenceSuspected,
    #[error(transparent)]
    Measures(#[from] MeasuresError),
    #[error(transparent)]
    Cat(#[from] CatError),
}

/// `nu_t(phi) = int_M (phi . F_t - phi) dm` by per-branch polygon quadrature
/// (the integrand is smooth on each branch domain).
pub fn nu_t<F: Fn([f64; 2]) -> f64>(fam: &CatFamily<f64>, phi: F, order: usize) -> f64 {
    let mut acc = NeumaierSum::new();
    for b in &fam.branches {
        let poly = b.domain.to_f64();
        acc.add(integrate_polygon(&poly, order, |p| {
            let img = b.apply(&Point2::new(p[0], p[1]));
            phi([img.x, img.y]) - phi(p)
        }));
    }
    acc.value()
}

/// The limit functional: `m(phi) - int_0^1 phi(s, s) ds`.
pub fn nu_tilde<F: Fn([f64; 2]) -> f64>(phi: F, order: usize) -> f64 {
    let area = integrate_unit_square(order, |p| phi(p));
    let gl = GaussLegendre::new(order.max(32));
    // Panelize the diagonal so oscillatory observables are resolved.
    let mut diag = NeumaierSum::new();
    let panels = 8;
    for i in 0..panels {
        let a = i as f64 / panels as f64;
        let b = (i + 1) as f64 / panels as f64;
        diag.add(gl.integrate(a, b, |s| phi([s, s])));
    }
    area - diag.value()
}

/// Exact evolution of the diagonal under the unperturbed map in rational
/// arithmetic, producing the image segments after `depth` steps.
fn diagonal_exact(depth: usize) -> Vec<Segment<Rational>> {
    let fam: CatFamily<Rational> = CatFamily::new(Rational::zero()).expect("t = 0");
    let mut pieces = vec![Segment::new(
        Point2::new(Rational::zero(), Rational::zero()),
        Point2::new(Rational::one(), Rational::one()),
    )];
    let half = Rational::from_ratio(1, 2);
    for _ in 0..depth {
        let mut next = Vec::with_capacity(pieces.len() * 3);
        for seg in &pieces {
            let cuts = cut_params(&fam, seg);
            let mut params = vec![Rational::zero()];
            params.extend(cuts);
            params.push(Rational::one());
            for i in 0..params.len() - 1 {
                let (lo, hi) = (params[i].clone(), params[i + 1].clone());
                if hi <= lo {
                    continue;
                }
                let piece = Segment::new(seg.at(lo.clone()), seg.at(hi.clone()));
                let mid = piece.at(half.clone());
                let Some(j) = fam.branch_of(&mid) else {
                    // Measure-zero contact with a cut; drop the sliver.
                    continue;
                };
                let b = &fam.branches[(j - 1) as usize];
                next.push(Segment::new(b.apply(&piece.a), b.apply(&piece.b)));
            }
        }
        pieces = next;
    }
    pieces
}

/// Family measures of the diagonal's depth-`k` image by an exact depth-first
/// fragmentation walk; memory stays linear in the depth.
fn dfs_diagonal_measures(
    fam0: &CatFamily<f64>,
    k: usize,
    observables: &[Observable],
    gl: &GaussLegendre,
) -> Vec<f64> {
    let kappa = 2.0 - fam0.t;
    let vx = [0.0, 0.0, 1.0, 1.0];
    let vy = [0.0, 1.0, 1.0, 2.0];
    let mut acc = vec![NeumaierSum::new(); observables.len()];
    let mut total = NeumaierSum::new();
    let mut stack: Vec<(usize, [f64; 4])> = vec![(0, [0.0, 0.0, 1.0, 1.0])];
    while let Some((depth, seg)) = stack.pop() {
        let [ax, ay, bx, by] = seg;
        if depth == k {
            let len = ((bx - ax).powi(2) + (by - ay).powi(2)).sqrt();
            total.add(len);
            for (node, wt) in gl.nodes.iter().zip(&gl.weights) {
                let u = 0.5 * (node + 1.0);
                let x = ax + u * (bx - ax);
                let y = ay + u * (by - ay);
                for (o, a) in observables.iter().zip(acc.iter_mut()) {
                    a.add(0.5 * wt * len * o.eval([x, y]));
                }
            }
            continue;
        }
        // Cut at the three branch lines, map each child.
        let ga = ax + kappa * ay;
        let gb = bx + kappa * by;
        let ha = ax + ay;
        let hb = bx + by;
        let mut cuts = [0.0f64; 3];
        let mut nc = 0;
        for (va, vb) in [(ga - 1.0, gb - 1.0), (ga - 2.0, gb - 2.0), (ha - 1.0, hb - 1.0)] {
            let d = vb - va;
            if d.abs() < 1e-300 {
                continue;
            }
            let u = -va / d;
            if u > 1e-14 && u < 1.0 - 1e-14 {
                cuts[nc] = u;
                nc += 1;
            }
        }
        cuts[..nc].sort_unstable_by(f64::total_cmp);
        let mut lo = 0.0;
        for i in 0..=nc {
            let hi = if i < nc { cuts[i] } else { 1.0 };
            if hi - lo <= 1e-14 {
                lo = hi;
                continue;
            }
            let sax = ax + lo * (bx - ax);
            let say = ay + lo * (by - ay);
            let sbx = ax + hi * (bx - ax);
            let sby = ay + hi * (by - ay);
            let mx = 0.5 * (sax + sbx);
            let my = 0.5 * (say + sby);
            let g = mx + kappa * my;
            let j = if g < 1.0 {
                0
            } else if mx + my < 1.0 {
                1
            } else if g < 2.0 {
                2
            } else {
                3
            };
            stack.push((
                depth + 1,
                [
                    (sax + say - vx[j]).clamp(0.0, 1.0),
                    (sax + kappa * say - vy[j]).clamp(0.0, 1.0),
                    (sbx + sby - vx[j]).clamp(0.0, 1.0),
                    (sbx + kappa * sby - vy[j]).clamp(0.0, 1.0),
                ],
            ));
            lo = hi;
        }
    }
    let t = total.value();
    acc.iter().map(|a| a.value() / t).collect()
}

/// Last measurable term, its order, and the fitted geometric decay ratio,
/// per observable.
fn fitted_decay(
    terms: &[Vec<f64>],
    resolutions: &[Vec<f64>],
) -> (Vec<f64>, Vec<usize>, Vec<f64>) {
    let n_obs = terms.first().map_or(0, |t| t.len());
    let mut v_last = vec![0.0; n_obs];
    let mut k_last = vec![0usize; n_obs];
    let mut ratio = vec![0.5; n_obs];
    for i in 0..n_obs {
        let sig: Vec<(usize, f64)> = terms
            .iter()
            .enumerate()
            .filter(|(kk, t)| t[i].abs() > (3.0 * resolutions[*kk][i]).max(1e-13))
            .map(|(kk, t)| (kk, t[i].abs()))
            .collect();
        if let Some(&(kk, v)) = sig.last() {
            v_last[i] = v;
            k_last[i] = kk;
            if sig.len() >= 2 {
                let mut rs: Vec<f64> = sig
                    .windows(2)
                    .map(|w| (w[1].1 / w[0].1).clamp(0.02, 0.9))
                    .collect();
                rs.sort_by(f64::total_cmp);
                ratio[i] = rs[rs.len() / 2];
            }
        } else {
            v_last[i] = resolutions.last().map_or(1e-13, |r| r[i]);
            k_last[i] = terms.len().saturating_sub(1);
        }
    }
    (v_last, k_last, ratio)
}

/// Response-series data: per-observable terms, partial sums, measurement
/// resolutions, and a geometric tail bound past the truncation order.
#[derive(Debug, Clone)]
pub struct SeriesReport {
    pub observables: Vec<Observable>,
    /// `terms[k][i]`: the k-th term for observable i.
    pub terms: Vec<Vec<f64>>,
    pub partials: Vec<Vec<f64>>,
    pub resolutions: Vec<Vec<f64>>,
    /// Depth up to which the evolution was exact.
    pub k_exact: usize,
    pub k: usize,
    /// Per-observable geometric tail bound beyond order `k`.
    pub tail: Vec<f64>,
    /// Per-observable sum of term resolutions (noise in the partial sum).
    pub noise: Vec<f64>,
}

impl SeriesReport {
    pub fn series_value(&self, i: usize) -> f64 {
        self.partials.last().map(|row| row[i]).unwrap_or(0.0)
    }
}

/// Truncated response series by diagonal evolution under the unperturbed
/// family. Three phases, all exact: rational endpoints up to `exact_depth`,
/// stored float evolution while the fragment count fits `store_budget`, and
/// a streaming depth-first pass (no storage) while the leaf count fits
/// `dfs_leaf_budget`. Orders beyond that are reported as zero with a
/// resolution taken from the measured geometric decay; the fragment count
/// grows like the unstable multiplier per order, so no direct evaluation is
/// possible there, and the extrapolated bound feeds the tail.
#[allow(clippy::too_many_arguments)]
pub fn response_series(
    fam0: &CatFamily<f64>,
    observables: &[Observable],
    k: usize,
    exact_depth: usize,
    gl_order: usize,
    panel: f64,
    store_budget: usize,
    dfs_leaf_budget: usize,
) -> Result<SeriesReport, ResponseError> {
    assert!(fam0.t == 0.0, "the series is taken under the unperturbed map");
    let gl = GaussLegendre::new(gl_order.max(12));
    let means: Vec<f64> = observables
        .iter()
        .map(|o| integrate_unit_square(48, |p| o.eval(p)))
        .collect();

    let mut terms: Vec<Vec<f64>> = Vec::with_capacity(k + 1);
    let mut resolutions: Vec<Vec<f64>> = Vec::with_capacity(k + 1);

    // Rational phase: evolve in exact arithmetic, keeping every step.
    let exact_upto = exact_depth.min(k);
    let mut stored: Option<StandardFamily> = None;
    for depth in 0..=exact_upto {
        let pieces = diagonal_exact(depth);
        let total: f64 = pieces.iter().map(|s| s.length()).sum();
        let family = StandardFamily::new(
            pieces
                .iter()
                .filter_map(|s| {
                    StandardSegment::new(s.to_f64())
                        .ok()
                        .map(|w| (w, s.length() / total))
                })
                .collect(),
        )
        .expect("diagonal family");
        let measures = family.measure_battery(&gl, panel, observables);
        terms.push(means.iter().zip(&measures).map(|(m, v)| m - v).collect());
        resolutions.push(vec![1e-12; observables.len()]);
        if depth == exact_upto {
            stored = Some(family);
        }
    }
    let mut family = stored.expect("at least order zero");

    // Stored float phase: still exact fragmentation, bounded memory.
    let mut depth = exact_upto;
    while depth < k && family.len() * 3 <= store_budget {
        family = crate::standard_pairs::evolve_step(fam0, &family);
        depth += 1;
        let measures = family.measure_battery(&gl, panel, observables);
        terms.push(means.iter().zip(&measures).map(|(m, v)| m - v).collect());
        resolutions.push(vec![1e-12; observables.len()]);
    }

    // Streaming depth-first phase: no storage, leaf count still exponential.
    let growth = fam0.eigen.mu_u;
    let mut leaves_estimate = family.len() as f64 * growth;
    while depth < k && leaves_estimate <= dfs_leaf_budget as f64 {
        depth += 1;
        leaves_estimate *= growth;
        let measures = dfs_diagonal_measures(fam0, depth, observables, &gl);
        terms.push(
            means
                .iter()
                .zip(&measures)
                .map(|(m, v)| m - v)
                .collect(),
        );
        resolutions.push(vec![1e-10; observables.len()]);
    }

    // Beyond direct evaluation: zero with the extrapolated decay bound as
    // the per-order resolution.
    if depth < k {
        let (v_last, k_last, ratio) = fitted_decay(&terms, &resolutions);
        for kk in depth + 1..=k {
            terms.push(vec![0.0; observables.len()]);
            resolutions.push(
                (0..observables.len())
                    .map(|i| {
                        (v_last[i] * ratio[i].powi((kk as i32 - k_last[i] as i32).max(1)))
                            .max(1e-14)
                    })
                    .collect(),
            );
        }
    }

    // Divergence check on the measurable part of the terms.
    for i in 0..observables.len() {
        let signal: Vec<f64> = terms
            .iter()
            .zip(&resolutions)
            .map(|(t, r)| (t[i].abs(), 3.0 * r[i]))
            .filter(|(v, floor)| v > floor && *v > 1e-11)
            .map(|(v, _)| v)
            .collect();
        if signal.len() >= 12 {
            let tail10 = &signal[signal.len() - 10..];
            let inc = tail10.windows(2).filter(|w| w[1] > w[0]).count();
            if inc >= 9 {
                return Err(ResponseError::SeriesDivergenceSuspected);
            }
        }
    }

    let mut partials = Vec::with_capacity(terms.len());
    let mut acc = vec![NeumaierSum::new(); observables.len()];
    for row in &terms {
        for (a, v) in acc.iter_mut().zip(row) {
            a.add(*v);
        }
        partials.push(acc.iter().map(|a| a.value()).collect());
    }

    // Geometric tail: fitted decay ratio of the signal terms, capped at 0.9.
    let mut tail = Vec::with_capacity(observables.len());
    let mut noise = Vec::with_capacity(observables.len());
    for i in 0..observables.len() {
        let floors: Vec<f64> = resolutions.iter().map(|r| (3.0 * r[i]).max(1e-11)).collect();
        let sig: Vec<(usize, f64)> = terms
            .iter()
            .enumerate()
            .filter(|(kk, t)| t[i].abs() > floors[*kk])
            .map(|(kk, t)| (kk, t[i].abs()))
            .collect();
        let t_bound = if sig.len() >= 2 {
            let ratios: Vec<f64> = sig.windows(2).map(|w| w[1].1 / w[0].1).collect();
            let mut rs = ratios.clone();
            rs.sort_by(f64::total_cmp);
            let r = rs[rs.len() / 2].clamp(0.02, 0.9);
            let (k_last, v_last) = *sig.last().unwrap();
            v_last * r.powi((k as i32 - k_last as i32).max(0) + 1) / (1.0 - r)
        } else {
            floors.last().copied().unwrap_or(1e-11)
        };
        tail.push(t_bound);
        noise.push(resolutions.iter().map(|r| r[i]).sum());
    }

    Ok(SeriesReport {
        observables: observables.to_vec(),
        terms,
        partials,
        resolutions,
        k_exact: depth,
        k,
        tail,
        noise,
    })
}

/// Finite-difference quotient `(mu_t(phi) - m(phi)) / t` with both terms from
/// the same composite quadrature (the outer-rule bias cancels in the
/// difference). Returns `(quotient, delta, n_used)` per observable.
#[allow(clippy::too_many_arguments)]
pub fn diff_quotients(
    fam: &CatFamily<f64>,
    obs: &[Observable],
    tol: f64,
    n_cap: usize,
    lines: usize,
    gl_order: usize,
    panel: f64,
    budget: usize,
) -> Result<Vec<(f64, f64, usize)>, ResponseError> {
    let t = fam.t;
    assert!(t > 0.0);
    let n_run = plan_depth(fam, obs, tol, n_cap, gl_order, panel, budget)?.max(1);
    let full = pushforward_values(
        fam,
        obs,
        &[0, n_run - 1, n_run],
        lines,
        gl_order,
        panel,
        budget,
    )?;
    Ok((0..obs.len())
        .map(|i| {
            let quotient = (full.values[n_run][i] - full.values[0][i]) / t;
            let delta = ((full.values[n_run][i] - full.values[n_run - 1][i]).abs()
                + full.outer_delta[n_run][i]
                + full.outer_delta[0][i])
                / t;
            (quotient, delta, n_run)
        })
        .collect())
}

/// Maximum residual of the closed-form identity for the response density
/// over seeded samples (off the hole boundary by the stated margin).
/// Exactly zero in rational mode.
pub fn closed_form_residual_exact(t_num: i64, t_den: i64, samples: usize, seed: u64) -> f64 {
    use crate::scalar::Ratio128;
    let t = Ratio128::from_ratio(t_num, t_den);
    let fam: CatFamily<Ratio128> = CatFamily::new(t).expect("t in range");
    let rd = ResponseDensity::new(&fam).expect("t > 0");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let margin = 1e-9;
    let tf = t_num as f64 / t_den as f64;
    let mut max_res = 0.0f64;
    let mut done = 0usize;
    const DEN: i64 = 1 << 30;
    while done < samples {
        let px = rng.random_range(1..DEN);
        let py = rng.random_range(1..DEN);
        let (xf, yf) = (px as f64 / DEN as f64, py as f64 / DEN as f64);
        let d = xf - yf;
        if d.abs() < margin
            || (d - tf).abs() < margin
            || (yf - xf - 1.0 + tf).abs() < margin
        {
            continue;
        }
        let p = Point2::new(Ratio128::from_ratio(px, DEN), Ratio128::from_ratio(py, DEN));
        let (Ok(v), Ok(cf)) = (rd.eval_value(&p), rd.closed_form(&p)) else {
            continue;
        };
        let res = v - cf;
        max_res = max_res.max(res.abs().to_f64());
        done += 1;
    }
    max_res
}

/// Float-mode variant of the closed-form residual.
pub fn closed_form_residual_float(t: f64, samples: usize, seed: u64) -> f64 {
    let fam = CatFamily::new(t).expect("t in range");
    let rd = ResponseDensity::new(&fam).expect("t > 0");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let margin = 1e-9;
    let mut max_res = 0.0f64;
    let mut done = 0usize;
    while done < samples {
        let x: f64 = rng.random();
        let y: f64 = rng.random();
        let d = x - y;
        if d.abs() < margin || (d - t).abs() < margin || (y - x - 1.0 + t).abs() < margin {
            continue;
        }
        let p = Point2::new(x, y);
        let (Ok(v), Ok(cf)) = (rd.eval_value(&p), rd.closed_form(&p)) else {
            continue;
        };
        max_res = max_res.max((v - cf).abs());
        done += 1;
    }
    max_res
}

/// Quadrature of the response density over the square, split along the hole
/// boundary: the four branch images carry the off-hole value, the strip and
/// the triangle carry the on-hole value.
pub fn response_density_integral(fam: &CatFamily<f64>, order: usize) -> f64 {
    let rd = ResponseDensity::new(fam).expect("t > 0");
    let mut acc = NeumaierSum::new();
    let mut eval_poly = |poly: &crate::geometry::ConvexPolygon<f64>| {
        acc.add(integrate_polygon(poly, order, |p| {
            rd.closed_form(&Point2::new(p[0], p[1]))
                .or_else(|_| rd.eval(&Point2::new(p[0], p[1])).map(|(v, _)| v))
                .unwrap_or(0.0)
        }));
    };
    for b in &fam.branches {
        eval_poly(&b.image);
    }
    for poly in hole_polygons(fam.t) {
        eval_poly(&poly);
    }
    acc.value()
}

/// The hole `H_t` as polygons: the diagonal strip and the top-left triangle.
pub fn hole_polygons(t: f64) -> Vec<crate::geometry::ConvexPolygon<f64>> {
    use crate::geometry::ConvexPolygon;
    let p = |x: f64, y: f64| Point2::new(x, y);
    vec![
        ConvexPolygon::new(vec![p(0.0, 0.0), p(t, 0.0), p(1.0, 1.0 - t), p(1.0, 1.0)]).unwrap(),
        ConvexPolygon::new(vec![p(0.0, 1.0 - t), p(t, 1.0), p(0.0, 1.0)]).unwrap(),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn fam(t: f64) -> CatFamily<f64> {
        CatFamily::new(t).unwrap()
    }

    #[test]
    fn nu_tilde_battery_values() {
        assert_abs_diff_eq!(nu_tilde(|_| 1.0, 32), 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(
            nu_tilde(|p| p[0] * p[1], 32),
            -1.0 / 12.0,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(
            nu_tilde(|p| (2.0 * std::f64::consts::PI * p[0]).cos(), 32),
            0.0,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(nu_tilde(|p| p[1], 32), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn nu_t_vanishes_at_t0() {
        let f = fam(0.0);
        for o in Observable::BATTERY {
            assert_abs_diff_eq!(nu_t(&f, |p| o.eval(p), 24), 0.0, epsilon = 1e-10);
        }
    }

    #[test]
    fn nu_t_over_t_approaches_limit_for_xy() {
        // nu_t(xy)/t = -1/12 + t/6 + O(t^3).
        for &t in &[1.0 / 64.0, 1.0 / 128.0] {
            let f = fam(t);
            let v = nu_t(&f, |p| p[0] * p[1], 32) / t;
            assert_abs_diff_eq!(v, -1.0 / 12.0 + t / 6.0, epsilon = 1e-8);
        }
    }

    /// Piecewise-polynomial oracle for `int_0^1 {p s}{q s} ds`: integrate the
    /// product of sawtooth functions exactly over each interval between
    /// breakpoints `i/p` and `j/q`.
    fn sawtooth_product_integral(p: u64, q: u64) -> f64 {
        let mut breaks: Vec<f64> = Vec::new();
        for i in 0..=p {
            breaks.push(i as f64 / p as f64);
        }
        for j in 0..=q {
            breaks.push(j as f64 / q as f64);
        }
        breaks.sort_by(f64::total_cmp);
        breaks.dedup_by(|a, b| (*a - *b).abs() < 1e-15);
        let mut acc = 0.0;
        for w in breaks.windows(2) {
            let (a, b) = (w[0], w[1]);
            if b - a < 1e-15 {
                continue;
            }
            let mid = 0.5 * (a + b);
            let fp = (mid * p as f64).floor();
            let fq = (mid * q as f64).floor();
            // integral of (p s - fp)(q s - fq) over [a, b]
            let pf = p as f64;
            let qf = q as f64;
            let prim = |s: f64| {
                pf * qf * s * s * s / 3.0 - (pf * fq + qf * fp) * s * s / 2.0 + fp * fq * s
            };
            acc += prim(b) - prim(a);
        }
        acc
    }

    #[test]
    fn sawtooth_oracle_matches_known_case() {
        // int {2s}{3s} ds = 19/72.
        assert_abs_diff_eq!(sawtooth_product_integral(2, 3), 19.0 / 72.0, epsilon = 1e-13);
    }

    #[test]
    fn series_terms_match_sawtooth_oracle_for_xy() {
        let f0 = fam(0.0);
        let report = response_series(&f0, &[Observable::Xy], 6, 6, 16, 0.25, 1 << 22, 1 << 22)
            .unwrap();
        // (p_k, q_k): images of the diagonal are ({p s}, {q s}).
        let (mut p, mut q) = (1u64, 1u64);
        for k in 0..=6usize {
            let expected = 0.25 - sawtooth_product_integral(p, q);
            assert_abs_diff_eq!(report.terms[k][0], expected, epsilon = 1e-9);
            let np = p + q;
            let nq = p + 2 * q;
            p = np;
            q = nq;
        }
        // k = 0 term is -1/12, k = 1 term is 1/4 - 19/72 = -1/72.
        assert_abs_diff_eq!(report.terms[0][0], -1.0 / 12.0, epsilon = 1e-12);
        assert_abs_diff_eq!(report.terms[1][0], -1.0 / 72.0, epsilon = 1e-12);
    }

    #[test]
    fn series_of_constant_vanishes() {
        let f0 = fam(0.0);
        let report =
            response_series(&f0, &[Observable::One], 10, 8, 8, 0.4, 1 << 20, 1 << 22).unwrap();
        for row in &report.terms {
            assert_abs_diff_eq!(row[0], 0.0, epsilon = 1e-10);
        }
    }

    #[test]
    fn closed_form_residual_is_zero_in_rationals() {
        for &(n, d) in &[(1i64, 8i64), (1, 16), (1, 32)] {
            let r = closed_form_residual_exact(n, d, 2_000, 99);
            assert_eq!(r, 0.0);
        }
    }

    #[test]
    fn closed_form_residual_small_in_floats() {
        let r = closed_form_residual_float(0.125, 20_000, 7);
        assert!(r <= 1e-10, "residual {}", r);
    }

    #[test]
    fn density_integrates_to_zero() {
        for &t in &[1.0 / 64.0, 1.0 / 16.0, 0.125] {
            let v = response_density_integral(&fam(t), 16);
            assert_abs_diff_eq!(v, 0.0, epsilon = 1e-10);
        }
    }

    #[test]
    fn hole_area_is_t() {
        for &t in &[1.0 / 64.0, 0.125] {
            let total: f64 = hole_polygons(t).iter().map(|p| p.area()).sum();
            assert_abs_diff_eq!(total, t, epsilon = 1e-14);
        }
    }
}
