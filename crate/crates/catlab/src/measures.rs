//! Physical-measure estimation and correlation functionals.
//!
//! The pushforward of Lebesgue under `F_t^n` is computed as a composite
//! quadrature: an outer midpoint rule over vertical lines (each a standard
//! segment of unit length) and, along each line, exact stepwise
//! fragmentation at the branch cuts followed by Gauss–Legendre panels on the
//! smooth pieces. Fragment counts grow like the unstable multiplier per
//! step, so a per-line budget guards the exact path; long correlation runs
//! switch to systematic resampling with two independent particle streams
//! whose half-difference is reported as the measurement resolution.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::cat_family::CatFamily;
use crate::config::Observable;
use crate::quad::{GaussLegendre, NeumaierSum};
use crate::standard_pairs::StandardSegment;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MeasuresError {
    #[error("pushforward did not converge within {n} steps (last delta {delta:e})")]
    NoConvergence { n: usize, delta: f64 },
    #[error("line fragmented into more pieces than the budget {budget} at step {step}")]
    SingularityBudgetExceeded { budget: usize, step: usize },
}

/// One fragment of an evolved segment: weight on the source parameter and
/// the current image endpoints.
#[derive(Debug, Clone, Copy)]
struct Piece {
    w: f64,
    ax: f64,
    ay: f64,
    bx: f64,
    by: f64,
}

/// Branch data in flat form for the hot loop.
#[derive(Debug, Clone, Copy)]
pub(crate) struct FlatMap {
    kappa: f64, // 2 - t
    vx: [f64; 4],
    vy: [f64; 4],
}

impl FlatMap {
    pub(crate) fn new(fam: &CatFamily<f64>) -> Self {
        Self {
            kappa: 2.0 - fam.t,
            vx: [0.0, 0.0, 1.0, 1.0],
            vy: [0.0, 1.0, 1.0, 2.0],
        }
    }

    #[inline]
    fn branch_at(&self, x: f64, y: f64) -> usize {
        let g = x + self.kappa * y;
        if g < 1.0 {
            0
        } else if x + y < 1.0 {
            1
        } else if g < 2.0 {
            2
        } else {
            3
        }
    }

    #[inline]
    fn map(&self, j: usize, x: f64, y: f64) -> (f64, f64) {
        (
            (x + y - self.vx[j]).clamp(0.0, 1.0),
            (x + self.kappa * y - self.vy[j]).clamp(0.0, 1.0),
        )
    }

    /// Cut parameters of the segment against the three branch-cut lines,
    /// written into `out`; returns the count (0..=3).
    #[inline]
    fn cuts(&self, p: &Piece, out: &mut [f64; 3]) -> usize {
        let ga = p.ax + self.kappa * p.ay;
        let gb = p.bx + self.kappa * p.by;
        let ha = p.ax + p.ay;
        let hb = p.bx + p.by;
        let mut n = 0;
        for (va, vb) in [(ga - 1.0, gb - 1.0), (ga - 2.0, gb - 2.0), (ha - 1.0, hb - 1.0)] {
            let d = vb - va;
            if d.abs() < 1e-300 {
                continue;
            }
            let u = -va / d;
            if u > 1e-14 && u < 1.0 - 1e-14 {
                out[n] = u;
                n += 1;
            }
        }
        out[..n].sort_unstable_by(f64::total_cmp);
        n
    }
}

/// Evolving fragment list for one source segment.
struct LineState {
    pieces: Vec<Piece>,
    scratch: Vec<Piece>,
}

impl LineState {
    fn new(a: [f64; 2], b: [f64; 2]) -> Self {
        Self {
            pieces: vec![Piece {
                w: 1.0,
                ax: a[0],
                ay: a[1],
                bx: b[0],
                by: b[1],
            }],
            scratch: Vec::new(),
        }
    }

    fn step(&mut self, m: &FlatMap, budget: usize, step_no: usize) -> Result<(), MeasuresError> {
        self.scratch.clear();
        let mut cuts = [0.0f64; 3];
        for p in &self.pieces {
            let n = m.cuts(p, &mut cuts);
            let mut lo = 0.0;
            for i in 0..=n {
                let hi = if i < n { cuts[i] } else { 1.0 };
                if hi - lo <= 1e-14 {
                    lo = hi;
                    continue;
                }
                let ax = p.ax + lo * (p.bx - p.ax);
                let ay = p.ay + lo * (p.by - p.ay);
                let bx = p.ax + hi * (p.bx - p.ax);
                let by = p.ay + hi * (p.by - p.ay);
                let j = m.branch_at(0.5 * (ax + bx), 0.5 * (ay + by));
                let (iax, iay) = m.map(j, ax, ay);
                let (ibx, iby) = m.map(j, bx, by);
                self.scratch.push(Piece {
                    w: p.w * (hi - lo),
                    ax: iax,
                    ay: iay,
                    bx: ibx,
                    by: iby,
                });
                lo = hi;
            }
        }
        std::mem::swap(&mut self.pieces, &mut self.scratch);
        if self.pieces.len() > budget {
            return Err(MeasuresError::SingularityBudgetExceeded {
                budget,
                step: step_no,
            });
        }
        Ok(())
    }

    /// Weighted mean of each observable over the current image, i.e.
    /// `int_0^1 phi(F^n(line(u))) du` for the unit-parameter source.
    fn integrate(&self, obs: &[Observable], gl: &GaussLegendre, panel: f64, out: &mut [NeumaierSum]) {
        for p in &self.pieces {
            let len = ((p.bx - p.ax).powi(2) + (p.by - p.ay).powi(2)).sqrt();
            let panels = (len / panel).ceil().max(1.0) as usize;
            for k in 0..panels {
                let lo = k as f64 / panels as f64;
                let hi = (k + 1) as f64 / panels as f64;
                let half = 0.5 * (hi - lo);
                let mid = 0.5 * (hi + lo);
                for (node, wt) in gl.nodes.iter().zip(&gl.weights) {
                    let u = mid + half * node;
                    let x = p.ax + u * (p.bx - p.ax);
                    let y = p.ay + u * (p.by - p.ay);
                    let scale = p.w * wt * half;
                    for (o, acc) in obs.iter().zip(out.iter_mut()) {
                        acc.add(scale * o.eval([x, y]));
                    }
                }
            }
        }
    }
}

/// Quadrature profile `m(phi . F^n)` for `n = 0..=n_max`, all observables at
/// once, with an even/odd line split for an outer-rule error proxy.
#[derive(Debug, Clone)]
pub struct PushforwardProfile {
    pub values: Vec<Vec<f64>>,
    pub outer_delta: Vec<Vec<f64>>,
    pub lines: usize,
}

pub fn pushforward_profile(
    fam: &CatFamily<f64>,
    obs: &[Observable],
    n_max: usize,
    lines: usize,
    gl_order: usize,
    panel: f64,
    budget: usize,
) -> Result<PushforwardProfile, MeasuresError> {
    let m = FlatMap::new(fam);
    let gl = GaussLegendre::new(gl_order);
    let mut even = vec![vec![NeumaierSum::new(); obs.len()]; n_max + 1];
    let mut odd = vec![vec![NeumaierSum::new(); obs.len()]; n_max + 1];
    let mut buf = vec![NeumaierSum::new(); obs.len()];
    for line in 0..lines {
        let x = (line as f64 + 0.5) / lines as f64;
        let mut state = LineState::new([x, 0.0], [x, 1.0]);
        for n in 0..=n_max {
            if n > 0 {
                state.step(&m, budget, n)?;
            }
            for acc in buf.iter_mut() {
                *acc = NeumaierSum::new();
            }
            state.integrate(obs, &gl, panel, &mut buf);
            let target = if line % 2 == 0 { &mut even } else { &mut odd };
            for (acc, v) in target[n].iter_mut().zip(&buf) {
                acc.add(v.value());
            }
        }
    }
    let half = (lines / 2).max(1) as f64;
    let mut values = Vec::with_capacity(n_max + 1);
    let mut outer_delta = Vec::with_capacity(n_max + 1);
    for n in 0..=n_max {
        let mut row = Vec::with_capacity(obs.len());
        let mut drow = Vec::with_capacity(obs.len());
        for i in 0..obs.len() {
            let e = even[n][i].value() / half;
            let o = odd[n][i].value() / half;
            row.push(0.5 * (e + o));
            drow.push(0.5 * (e - o).abs());
        }
        values.push(row);
        outer_delta.push(drow);
    }
    Ok(PushforwardProfile {
        values,
        outer_delta,
        lines,
    })
}

/// Single-observable pushforward `m(phi . F^n)`.
pub fn pushforward_lebesgue(
    fam: &CatFamily<f64>,
    obs: Observable,
    n: usize,
    lines: usize,
    gl_order: usize,
    panel: f64,
    budget: usize,
) -> Result<f64, MeasuresError> {
    let profile = pushforward_profile(fam, &[obs], n, lines, gl_order, panel, budget)?;
    Ok(profile.values[n][0])
}

/// Physical-measure estimate record.
#[derive(Debug, Clone)]
pub struct MeasureEstimate {
    pub t: f64,
    pub observable: Observable,
    pub n: usize,
    pub lines: usize,
    pub nodes: usize,
    pub value: f64,
    /// Richardson-style proxy: last n-increment plus the outer-rule split.
    pub delta: f64,
}

/// Largest depth whose exact fragment count stays inside the budget.
pub fn budget_depth(budget: usize) -> usize {
    let mut n = 0usize;
    let mut pieces = 1.5f64;
    while pieces * 2.7 <= budget as f64 && n < 40 {
        pieces *= 2.7;
        n += 1;
    }
    n
}

/// Plans the stabilization depth for `m(phi . F^n)`. A thin pilot rule
/// tracks the per-step increments, which decay geometrically until they hit
/// the pilot's own outer-rule noise; the decay rate is fitted on the
/// decaying prefix and extrapolated to the requested tolerance. The result
/// is capped by the fragment budget.
pub fn plan_depth(
    fam: &CatFamily<f64>,
    obs: &[Observable],
    tol: f64,
    n_cap: usize,
    gl_order: usize,
    panel: f64,
    budget: usize,
) -> Result<usize, MeasuresError> {
    let cap = n_cap.min(budget_depth(budget));
    let pilot_lines = 64usize;
    let m = FlatMap::new(fam);
    let gl = GaussLegendre::new(gl_order);
    let mut states: Vec<LineState> = (0..pilot_lines)
        .map(|line| {
            let x = (line as f64 + 0.5) / pilot_lines as f64;
            LineState::new([x, 0.0], [x, 1.0])
        })
        .collect();
    let mut buf = vec![NeumaierSum::new(); obs.len()];
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut deltas: Vec<f64> = Vec::new();
    for n in 0..=cap {
        if n > 0 {
            for st in states.iter_mut() {
                st.step(&m, budget, n)?;
            }
        }
        let mut row = vec![NeumaierSum::new(); obs.len()];
        for st in &states {
            for acc in buf.iter_mut() {
                *acc = NeumaierSum::new();
            }
            st.integrate(obs, &gl, panel, &mut buf);
            for (acc, v) in row.iter_mut().zip(&buf) {
                acc.add(v.value());
            }
        }
        let row: Vec<f64> = row.iter().map(|a| a.value() / pilot_lines as f64).collect();
        if let Some(prev) = rows.last() {
            let worst = row
                .iter()
                .zip(prev)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0f64, f64::max);
            deltas.push(worst);
            if worst < tol / 3.0 {
                return Ok(n);
            }
            // Plateau: the increments stopped decaying (pilot noise floor).
            let k = deltas.len();
            if k >= 4 && deltas[k - 1] > 0.6 * deltas[k - 2] && deltas[k - 2] > 0.6 * deltas[k - 3]
            {
                break;
            }
        }
        rows.push(row);
    }
    // Extrapolate the geometric decay of the increments beyond the floor.
    let min_idx = deltas
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .unwrap_or(0);
    let n_min = min_idx + 1; // deltas[i] is the step i -> i+1 increment
    let d_min = deltas[min_idx].max(1e-300);
    let mut ratios: Vec<f64> = deltas[..=min_idx]
        .windows(2)
        .map(|w| (w[1] / w[0]).clamp(0.1, 0.9))
        .collect();
    ratios.sort_by(f64::total_cmp);
    let gamma = ratios.get(ratios.len() / 2).copied().unwrap_or(0.5);
    let extra = if d_min <= tol / 3.0 {
        0.0
    } else {
        ((tol / 3.0) / d_min).ln() / gamma.ln()
    };
    let n_star = (n_min as f64 + extra.max(0.0)).ceil() as usize;
    Ok(n_star.clamp(1, cap))
}

/// `m(phi . F^n)` at the requested depths only (one evolution pass), with
/// an even/odd split per depth as the outer-rule error proxy.
pub fn pushforward_values(
    fam: &CatFamily<f64>,
    obs: &[Observable],
    depths: &[usize],
    lines: usize,
    gl_order: usize,
    panel: f64,
    budget: usize,
) -> Result<PushforwardProfile, MeasuresError> {
    let n_max = depths.iter().copied().max().unwrap_or(0);
    let want: Vec<bool> = (0..=n_max).map(|n| depths.contains(&n)).collect();
    let m = FlatMap::new(fam);
    let gl = GaussLegendre::new(gl_order);
    let mut even = vec![vec![NeumaierSum::new(); obs.len()]; n_max + 1];
    let mut odd = vec![vec![NeumaierSum::new(); obs.len()]; n_max + 1];
    let mut buf = vec![NeumaierSum::new(); obs.len()];
    for line in 0..lines {
        let x = (line as f64 + 0.5) / lines as f64;
        let mut state = LineState::new([x, 0.0], [x, 1.0]);
        for n in 0..=n_max {
            if n > 0 {
                state.step(&m, budget, n)?;
            }
            if !want[n] {
                continue;
            }
            for acc in buf.iter_mut() {
                *acc = NeumaierSum::new();
            }
            state.integrate(obs, &gl, panel, &mut buf);
            let target = if line % 2 == 0 { &mut even } else { &mut odd };
            for (acc, v) in target[n].iter_mut().zip(&buf) {
                acc.add(v.value());
            }
        }
    }
    let half = (lines / 2).max(1) as f64;
    let mut values = vec![vec![0.0; obs.len()]; n_max + 1];
    let mut outer_delta = vec![vec![0.0; obs.len()]; n_max + 1];
    for n in 0..=n_max {
        if !want[n] {
            continue;
        }
        for i in 0..obs.len() {
            let e = even[n][i].value() / half;
            let o = odd[n][i].value() / half;
            values[n][i] = 0.5 * (e + o);
            outer_delta[n][i] = 0.5 * (e - o).abs();
        }
    }
    Ok(PushforwardProfile {
        values,
        outer_delta,
        lines,
    })
}

/// Estimates `mu_t` for every observable at once: the pilot plans the
/// stabilization depth, the full rule integrates at that depth, and the
/// reported delta combines the last increment with the outer-rule split.
pub fn mu_all(
    fam: &CatFamily<f64>,
    obs: &[Observable],
    tol: f64,
    n_cap: usize,
    lines: usize,
    gl_order: usize,
    panel: f64,
    budget: usize,
) -> Result<Vec<MeasureEstimate>, MeasuresError> {
    assert!(tol > 0.0);
    let cap = n_cap.min(budget_depth(budget));
    let mut n_run = plan_depth(fam, obs, tol, n_cap, gl_order, panel, budget)?.max(1);
    for attempt in 0..2 {
        let full = pushforward_values(
            fam,
            obs,
            &[0, n_run - 1, n_run],
            lines,
            gl_order,
            panel,
            budget,
        )?;
        let mut out = Vec::with_capacity(obs.len());
        let mut worst = 0.0f64;
        for (i, &o) in obs.iter().enumerate() {
            let value = full.values[n_run][i];
            let delta = (full.values[n_run][i] - full.values[n_run - 1][i]).abs()
                + full.outer_delta[n_run][i];
            worst = worst.max((full.values[n_run][i] - full.values[n_run - 1][i]).abs());
            out.push(MeasureEstimate {
                t: fam.t,
                observable: o,
                n: n_run,
                lines,
                nodes: gl_order,
                value,
                delta,
            });
        }
        if worst < tol {
            return Ok(out);
        }
        if attempt == 1 || n_run + 2 > cap {
            return Err(MeasuresError::NoConvergence {
                n: n_run,
                delta: worst,
            });
        }
        n_run += 2;
    }
    unreachable!()
}

/// `mu_t` for a single observable.
pub fn mu_t(
    fam: &CatFamily<f64>,
    obs: Observable,
    tol: f64,
    n_cap: usize,
    lines: usize,
    gl_order: usize,
    panel: f64,
    budget: usize,
) -> Result<MeasureEstimate, MeasuresError> {
    Ok(mu_all(fam, &[obs], tol, n_cap, lines, gl_order, panel, budget)?.remove(0))
}

/// Correlation functional
/// `cov(phi, n, t; rho) = |int_W (phi . F^n) rho - mu int_W rho|`
/// for a density `rho` given in the unit parameter of `w` (integrals in
/// arclength). Exact fragmentation; errors out when the fragment budget is
/// exceeded.
pub fn cov<F: Fn(f64) -> f64>(
    fam: &CatFamily<f64>,
    obs: Observable,
    n: usize,
    w: &StandardSegment,
    rho: F,
    mu_val: f64,
    gl_order: usize,
    budget: usize,
) -> Result<f64, MeasuresError> {
    let m = FlatMap::new(fam);
    let gl = GaussLegendre::new(gl_order);
    let len = w.length();
    // Pieces keyed by source-parameter interval.
    let mut pieces: Vec<(f64, f64, Piece)> = vec![(
        0.0,
        1.0,
        Piece {
            w: 1.0,
            ax: w.at(0.0)[0],
            ay: w.at(0.0)[1],
            bx: w.at(1.0)[0],
            by: w.at(1.0)[1],
        },
    )];
    let mut cuts = [0.0f64; 3];
    for step in 0..n {
        let mut next = Vec::with_capacity(pieces.len() * 2);
        for (plo, phi_par, p) in &pieces {
            let nc = m.cuts(p, &mut cuts);
            let mut lo = 0.0;
            for i in 0..=nc {
                let hi = if i < nc { cuts[i] } else { 1.0 };
                if hi - lo <= 1e-14 {
                    lo = hi;
                    continue;
                }
                let ax = p.ax + lo * (p.bx - p.ax);
                let ay = p.ay + lo * (p.by - p.ay);
                let bx = p.ax + hi * (p.bx - p.ax);
                let by = p.ay + hi * (p.by - p.ay);
                let j = m.branch_at(0.5 * (ax + bx), 0.5 * (ay + by));
                let (iax, iay) = m.map(j, ax, ay);
                let (ibx, iby) = m.map(j, bx, by);
                next.push((
                    plo + lo * (phi_par - plo),
                    plo + hi * (phi_par - plo),
                    Piece {
                        w: 0.0,
                        ax: iax,
                        ay: iay,
                        bx: ibx,
                        by: iby,
                    },
                ));
                lo = hi;
            }
        }
        pieces = next;
        if pieces.len() > budget {
            return Err(MeasuresError::SingularityBudgetExceeded { budget, step });
        }
    }
    let mut lhs = NeumaierSum::new();
    let mut rho_int = NeumaierSum::new();
    for (plo, phi_par, p) in &pieces {
        let span = phi_par - plo;
        lhs.add(
            gl.integrate(0.0, 1.0, |u| {
                let tau = plo + u * span;
                let x = p.ax + u * (p.bx - p.ax);
                let y = p.ay + u * (p.by - p.ay);
                rho(tau) * obs.eval([x, y])
            }) * span
                * len,
        );
        rho_int.add(gl.integrate(*plo, *phi_par, &rho) * len);
    }
    Ok((lhs.value() - mu_val * rho_int.value()).abs())
}

/// Correlation sequence over a range of iterates for the whole battery, with
/// a uniform density on `w`. Exact while the budget allows, then systematic
/// resampling in two independent streams.
///
/// The reported resolution per point is the maximum of the stream
/// half-difference and the caller's per-observable reference floor (the
/// uncertainty of the `mu` values the covariances are measured against —
/// past the point where the covariance sinks under that floor the sequence
/// carries no signal).
pub struct CovSequence {
    /// `[n][obs] -> (cov value, resolution)`
    pub rows: Vec<Vec<(f64, f64)>>,
    pub n_exact: usize,
}

#[allow(clippy::too_many_arguments)]
pub fn cov_sequence(
    fam: &CatFamily<f64>,
    obs: &[Observable],
    w: &StandardSegment,
    mu_vals: &[f64],
    mu_floors: &[f64],
    n_max: usize,
    gl_order: usize,
    panel: f64,
    budget: usize,
    particles: usize,
    seed: u64,
) -> CovSequence {
    use crate::standard_pairs::{evolve_step, resample, StandardFamily};
    let gl = GaussLegendre::new(gl_order);
    let mut streams = [
        (
            StandardFamily::single(w.clone()),
            ChaCha8Rng::seed_from_u64(seed),
        ),
        (
            StandardFamily::single(w.clone()),
            ChaCha8Rng::seed_from_u64(seed.wrapping_add(0x9e37_79b9)),
        ),
    ];
    let mut rows = Vec::with_capacity(n_max + 1);
    let mut n_exact = 0usize;
    let mut exact = true;
    // Once resampling starts, the stream split is only a one-degree-of-
    // freedom dispersion estimate; track its running maximum so a lucky
    // small split cannot masquerade as signal.
    let mut split_cap = vec![0.0f64; obs.len()];
    for n in 0..=n_max {
        if n > 0 {
            for (famly, rng) in streams.iter_mut() {
                *famly = evolve_step(fam, famly);
                if famly.len() > budget {
                    *famly = resample(famly, particles, rng);
                    exact = false;
                }
            }
        }
        if exact {
            n_exact = n;
        }
        let va = streams[0].0.measure_battery(&gl, panel, obs);
        let vb = streams[1].0.measure_battery(&gl, panel, obs);
        let mut row = Vec::with_capacity(obs.len());
        for i in 0..obs.len() {
            let value = (0.5 * (va[i] + vb[i]) - mu_vals[i]).abs();
            let split = if exact {
                1e-12
            } else {
                let s = (0.5 * (va[i] - vb[i]).abs()).max(1e-12);
                split_cap[i] = split_cap[i].max(s);
                split_cap[i]
            };
            row.push((value, split.max(mu_floors[i])));
        }
        rows.push(row);
    }
    CovSequence { rows, n_exact }
}

/// Partition of the square into `eta`-squares aligned with the eigen
/// directions, with the interior (`>= 2 eta` from the boundary) flagged.
#[derive(Debug, Clone)]
pub struct SquareGrid {
    pub eta: f64,
    e_u: [f64; 2],
    e_s: [f64; 2],
    u0: f64,
    s0: f64,
    nu: usize,
    ns: usize,
    interior: Vec<bool>,
    pub interior_count: usize,
    pub total_count: usize,
}

impl SquareGrid {
    pub fn new(fam: &CatFamily<f64>, eta: f64) -> Self {
        assert!(eta > 0.0 && eta < 0.5);
        let e_u = fam.eigen.e_u;
        let e_s = fam.eigen.e_s;
        let corners = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0]];
        let proj = |p: [f64; 2]| (p[0] * e_u[0] + p[1] * e_u[1], p[0] * e_s[0] + p[1] * e_s[1]);
        let mut umin = f64::MAX;
        let mut umax = f64::MIN;
        let mut smin = f64::MAX;
        let mut smax = f64::MIN;
        for c in corners {
            let (u, s) = proj(c);
            umin = umin.min(u);
            umax = umax.max(u);
            smin = smin.min(s);
            smax = smax.max(s);
        }
        let nu = ((umax - umin) / eta).ceil() as usize + 1;
        let ns = ((smax - smin) / eta).ceil() as usize + 1;
        let mut interior = vec![false; nu * ns];
        let mut interior_count = 0usize;
        let mut total_count = 0usize;
        for i in 0..nu {
            for j in 0..ns {
                let mut all_inside = true;
                let mut any_inside = false;
                let mut min_dist = f64::MAX;
                for (du, ds) in [(0.0, 0.0), (1.0, 0.0), (0.0, 1.0), (1.0, 1.0)] {
                    let u = umin + (i as f64 + du) * eta;
                    let s = smin + (j as f64 + ds) * eta;
                    let x = u * e_u[0] + s * e_s[0];
                    let y = u * e_u[1] + s * e_s[1];
                    let inside = (0.0..=1.0).contains(&x) && (0.0..=1.0).contains(&y);
                    all_inside &= inside;
                    any_inside |= inside;
                    min_dist = min_dist.min(crate::geometry::dist_to_boundary([x, y]));
                }
                if any_inside {
                    total_count += 1;
                }
                if all_inside && min_dist >= 2.0 * eta {
                    interior[i * ns + j] = true;
                    interior_count += 1;
                }
            }
        }
        Self {
            eta,
            e_u,
            e_s,
            u0: umin,
            s0: smin,
            nu,
            ns,
            interior,
            interior_count,
            total_count,
        }
    }

    #[inline]
    fn project(&self, p: [f64; 2]) -> (f64, f64) {
        (
            p[0] * self.e_u[0] + p[1] * self.e_u[1],
            p[0] * self.e_s[0] + p[1] * self.e_s[1],
        )
    }

    #[inline]
    fn cell_index(&self, u: f64, s: f64) -> Option<usize> {
        let i = ((u - self.u0) / self.eta).floor();
        let j = ((s - self.s0) / self.eta).floor();
        if i < 0.0 || j < 0.0 {
            return None;
        }
        let (i, j) = (i as usize, j as usize);
        if i >= self.nu || j >= self.ns {
            return None;
        }
        Some(i * self.ns + j)
    }

    /// Adds the lengths of the segment's intersections with each cell.
    fn accumulate_segment(&self, a: [f64; 2], b: [f64; 2], cells: &mut [f64]) {
        let (ua, sa) = self.project(a);
        let (ub, sb) = self.project(b);
        let len = ((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2)).sqrt();
        if len == 0.0 {
            return;
        }
        let mut params = vec![0.0f64, 1.0];
        push_gridline_crossings(ua, ub - ua, self.u0, self.eta, &mut params);
        push_gridline_crossings(sa, sb - sa, self.s0, self.eta, &mut params);
        params.sort_unstable_by(f64::total_cmp);
        for win in params.windows(2) {
            let (lo, hi) = (win[0], win[1]);
            if hi - lo <= 1e-15 {
                continue;
            }
            let tm = 0.5 * (lo + hi);
            let u = ua + tm * (ub - ua);
            let s = sa + tm * (sb - sa);
            if let Some(idx) = self.cell_index(u, s) {
                cells[idx] += (hi - lo) * len;
            }
        }
    }

    pub fn cell_count(&self) -> usize {
        self.nu * self.ns
    }
}

/// Parameters where `start + t delta` crosses the gridlines
/// `origin + k eta`, pushed into `out` for `t` strictly inside `(0, 1)`.
fn push_gridline_crossings(start: f64, delta: f64, origin: f64, eta: f64, out: &mut Vec<f64>) {
    if delta.abs() < 1e-15 {
        return;
    }
    let lo = start.min(start + delta);
    let hi = start.max(start + delta);
    let kmin = ((lo - origin) / eta).floor() as i64;
    let kmax = ((hi - origin) / eta).ceil() as i64;
    for k in kmin..=kmax {
        let t = (origin + k as f64 * eta - start) / delta;
        if t > 0.0 && t < 1.0 {
            out.push(t);
        }
    }
}

/// Equidistribution defect of `F^k(w)` over the interior squares:
/// `sum_Q |1/#interior - |Q ∩ F^k w| / |F^k w||`, computed by a depth-first
/// exact fragmentation (memory stays linear in `k`).
pub fn equidistribution_defect(
    fam: &CatFamily<f64>,
    w: &StandardSegment,
    grid: &SquareGrid,
    k: usize,
) -> f64 {
    let m = FlatMap::new(fam);
    let mut cells = vec![0.0f64; grid.cell_count()];
    let mut total = 0.0f64;
    let seg = w.segment();
    let mut stack: Vec<(usize, Piece)> = vec![(
        0,
        Piece {
            w: 1.0,
            ax: seg.a.x,
            ay: seg.a.y,
            bx: seg.b.x,
            by: seg.b.y,
        },
    )];
    let mut cuts = [0.0f64; 3];
    while let Some((depth, p)) = stack.pop() {
        if depth == k {
            total += ((p.bx - p.ax).powi(2) + (p.by - p.ay).powi(2)).sqrt();
            grid.accumulate_segment([p.ax, p.ay], [p.bx, p.by], &mut cells);
            continue;
        }
        let nc = m.cuts(&p, &mut cuts);
        let mut lo = 0.0;
        for i in 0..=nc {
            let hi = if i < nc { cuts[i] } else { 1.0 };
            if hi - lo <= 1e-14 {
                lo = hi;
                continue;
            }
            let ax = p.ax + lo * (p.bx - p.ax);
            let ay = p.ay + lo * (p.by - p.ay);
            let bx = p.ax + hi * (p.bx - p.ax);
            let by = p.ay + hi * (p.by - p.ay);
            let j = m.branch_at(0.5 * (ax + bx), 0.5 * (ay + by));
            let (iax, iay) = m.map(j, ax, ay);
            let (ibx, iby) = m.map(j, bx, by);
            stack.push((
                depth + 1,
                Piece {
                    w: 0.0,
                    ax: iax,
                    ay: iay,
                    bx: ibx,
                    by: iby,
                },
            ));
            lo = hi;
        }
    }
    let _ = total;
    // Shares are normalized over the interior squares: at desk-scale eta the
    // boundary band holds a fixed fraction of the square, and normalizing by
    // the full image length would floor the defect at that fraction
    // regardless of k.
    let mut interior_total = 0.0f64;
    for (idx, &len) in cells.iter().enumerate() {
        if grid.interior[idx] {
            interior_total += len;
        }
    }
    if interior_total == 0.0 {
        return 2.0;
    }
    let share = 1.0 / grid.interior_count as f64;
    let mut defect = NeumaierSum::new();
    for (idx, &len) in cells.iter().enumerate() {
        if grid.interior[idx] {
            defect.add((share - len / interior_total).abs());
        }
    }
    defect.value()
}

/// Plain Monte-Carlo pushforward `m(phi . F^n)`: iterate seeded uniform
/// points and average. Deterministic for a fixed seed; the count-based
/// batching keeps the reduction order independent of timing.
pub fn monte_carlo_pushforward(
    fam: &CatFamily<f64>,
    obs: &[Observable],
    n: usize,
    samples: u64,
    seed: u64,
) -> Vec<(f64, f64)> {
    let m = FlatMap::new(fam);
    const BATCH: u64 = 1 << 16;
    let batches = samples.div_ceil(BATCH);
    let mut sums = vec![NeumaierSum::new(); obs.len()];
    let mut sq_sums = vec![NeumaierSum::new(); obs.len()];
    let mut kept: u64 = 0;
    for batch in 0..batches {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(batch);
        let count = BATCH.min(samples - batch * BATCH);
        for _ in 0..count {
            let mut x: f64 = rng.random();
            let mut y: f64 = rng.random();
            let mut ok = true;
            for _ in 0..n {
                let j = m.branch_at(x, y);
                let (nx, ny) = m.map(j, x, y);
                if nx <= 0.0 || nx >= 1.0 || ny <= 0.0 || ny >= 1.0 {
                    ok = false;
                    break;
                }
                x = nx;
                y = ny;
            }
            if !ok {
                continue;
            }
            kept += 1;
            for (o, (s, s2)) in obs.iter().zip(sums.iter_mut().zip(sq_sums.iter_mut())) {
                let v = o.eval([x, y]);
                s.add(v);
                s2.add(v * v);
            }
        }
    }
    let kn = kept as f64;
    obs.iter()
        .enumerate()
        .map(|(i, _)| {
            let mean = sums[i].value() / kn;
            let var = (sq_sums[i].value() / kn - mean * mean).max(0.0);
            (mean, (var / kn).sqrt())
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn fam(t: f64) -> CatFamily<f64> {
        CatFamily::new(t).unwrap()
    }

    #[test]
    fn pushforward_identity_cases() {
        let f = fam(1.0 / 16.0);
        // n = 0, phi = x + y (as separate battery entries).
        let v = pushforward_profile(&f, &[Observable::X, Observable::Y], 0, 128, 8, 0.4, 1 << 20)
            .unwrap();
        assert_abs_diff_eq!(v.values[0][0] + v.values[0][1], 1.0, epsilon = 1e-10);
    }

    #[test]
    fn lebesgue_invariance_at_t0() {
        let f = fam(0.0);
        let profile = pushforward_profile(
            &f,
            &[Observable::Xy, Observable::Cos2PiX],
            6,
            256,
            8,
            0.4,
            1 << 22,
        )
        .unwrap();
        for n in 0..=6 {
            assert_abs_diff_eq!(profile.values[n][0], 0.25, epsilon = 5e-6);
            assert_abs_diff_eq!(profile.values[n][1], 0.0, epsilon = 5e-6);
        }
    }

    #[test]
    fn pushforward_stabilizes() {
        // The first step moves the value by O(t); afterwards it settles into
        // a band set by the outer-rule resolution.
        let f = fam(1.0 / 16.0);
        let profile = pushforward_profile(
            &f,
            &[Observable::Cos2PiXSin2PiY],
            10,
            256,
            8,
            0.4,
            1 << 22,
        )
        .unwrap();
        let first = (profile.values[1][0] - profile.values[0][0]).abs();
        let settled = profile.values[4][0];
        let band: f64 = (5..=10)
            .map(|n| (profile.values[n][0] - settled).abs())
            .fold(0.0, f64::max);
        assert!(first > 10.0 * band, "first {} band {}", first, band);
        assert!(band < 5e-4, "band {}", band);
    }

    #[test]
    fn mu_trivial_cases() {
        let f = fam(0.0);
        let est = mu_t(&f, Observable::One, 1e-8, 10, 64, 8, 0.4, 1 << 20).unwrap();
        assert_abs_diff_eq!(est.value, 1.0, epsilon = 1e-10);
        let est = mu_t(&f, Observable::Xy, 1e-6, 10, 256, 8, 0.4, 1 << 20).unwrap();
        assert_abs_diff_eq!(est.value, 0.25, epsilon = 1e-5);
    }

    #[test]
    fn mu_of_y_moves_linearly_in_t() {
        // The first-order term of mu_t(y) vanishes, so mu_t(y) stays within
        // C t of 1/2 with small C.
        let est = mu_t(
            &fam(1.0 / 16.0),
            Observable::Y,
            1e-6,
            16,
            256,
            8,
            0.4,
            1 << 22,
        )
        .unwrap();
        assert!((est.value - 0.5).abs() <= 0.5 * (1.0 / 16.0));
    }

    #[test]
    fn cov_of_constant_vanishes() {
        let f = fam(1.0 / 16.0);
        let w = StandardSegment::vertical(0.3);
        let v = cov(&f, Observable::One, 3, &w, |_| 1.0, 1.0, 8, 1 << 20).unwrap();
        assert!(v < 1e-12);
    }

    #[test]
    fn cov_at_n0_is_direct_difference() {
        let f = fam(0.0);
        let w = StandardSegment::vertical(0.3);
        // rho = 1 (unit parameter), phi = x: |0.3 - mu(x)|.
        let v = cov(&f, Observable::X, 0, &w, |_| 1.0, 0.5, 8, 1 << 20).unwrap();
        assert_abs_diff_eq!(v, 0.2, epsilon = 1e-12);
    }

    #[test]
    fn cov_decays_with_n() {
        let f = fam(1.0 / 16.0);
        let w = StandardSegment::vertical(0.41);
        let mu = 0.0; // cos2pix has mean ~ 0 under mu_t as well
        let c5 = cov(&f, Observable::Cos2PiX, 5, &w, |_| 1.0, mu, 8, 1 << 22).unwrap();
        let c10 = cov(&f, Observable::Cos2PiX, 10, &w, |_| 1.0, mu, 8, 1 << 22).unwrap();
        assert!(c10 < 0.5 * c5, "cov(5) = {}, cov(10) = {}", c5, c10);
    }

    #[test]
    fn grid_counts_and_interior_ratio() {
        let f = fam(0.0);
        let g = SquareGrid::new(&f, 1.0 / 32.0);
        assert!(g.interior_count > 500, "interior {}", g.interior_count);
        assert!(g.interior_count < g.total_count);
    }

    #[test]
    fn equidistribution_defect_trends() {
        let f = fam(0.0);
        let grid = SquareGrid::new(&f, 1.0 / 32.0);
        // A short segment at k = 0 concentrates in a couple of cells.
        let short = StandardSegment::from_endpoints([0.5, 0.5], [0.502, 0.502]).unwrap();
        let d0 = equidistribution_defect(&f, &short, &grid, 0);
        assert!(d0 > 1.8, "short-segment defect {}", d0);
        // The full vertical line equidistributes.
        let line = StandardSegment::vertical(0.37);
        let d10 = equidistribution_defect(&f, &line, &grid, 10);
        let d13 = equidistribution_defect(&f, &line, &grid, 13);
        assert!(d13 < d10 + 0.02, "defect grew: {} -> {}", d10, d13);
        assert!(d13 < 0.1, "defect at k=13: {}", d13);
    }

    #[test]
    fn mc_matches_quadrature_at_small_n() {
        let f = fam(1.0 / 16.0);
        let obs = [Observable::Xy];
        let quad = pushforward_profile(&f, &obs, 2, 512, 8, 0.4, 1 << 20).unwrap();
        let mc = monte_carlo_pushforward(&f, &obs, 2, 2_000_000, 424242);
        let delta = (quad.values[2][0] - mc[0].0).abs();
        let combined = (mc[0].1.powi(2) + quad.outer_delta[2][0].powi(2)).sqrt();
        assert!(
            delta <= 3.0 * combined.max(1e-6),
            "quad {} vs mc {} (3se {})",
            quad.values[2][0],
            mc[0].0,
            3.0 * combined
        );
    }
}
