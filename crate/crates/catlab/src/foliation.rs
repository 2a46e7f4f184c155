//! Explicit measurable partitions of `M \ (S_0^- ∪ S_t^-)` into unstable
//! leaves, with conditional densities and factor measures.
//!
//! The complement of the two backward singularity sets splits into seven
//! long regions `A..G` plus two thin triangles `R` (top-left) and `B`
//! (bottom-right) that shrink with `t`. The triangles are foliated by
//! slope-one segments (constant conditional density `1/|leaf|`, factor
//! density `|leaf|/sqrt(2) ds`). The long regions are foliated either by
//! slope-one parallels or by ray fans whose apex is chosen so every leaf is
//! an unstable segment of length at least 1/2:
//!
//! * `A`, `B`, `C`: fans centered at the origin;
//! * `D`: parallels `y = x - c`, `c` in `(0, t)`;
//! * `E`: fan centered at the vertex `(1-t, 1-2t)`;
//! * `F`: fan centered at `(0, -1)` (the common point of its two steep
//!   edges, outside the square);
//! * `G`: fan centered at the vertex `(1, 1-t)`.
//!
//! Fans disintegrate Lebesgue in polar coordinates: the conditional density
//! on a leaf `r in [r1, r2]` is `r / int r dr` and the factor density is
//! `(r2^2 - r1^2)/2 dtheta`. Each region is validated against direct 2-d
//! quadrature by [`disintegration_check`].

use thiserror::Error;

use crate::cat_family::CatError;
use crate::config::CsvWriter;
use crate::geometry::{ConvexPolygon, Point2};
use crate::quad::{integrate_polygon, GaussLegendre, NeumaierSum};
use crate::scalar::Scalar;
use crate::standard_pairs::StandardSegment;

#[derive(Debug, Error)]
pub enum FoliationError {
    #[error("parameter t = {0} outside (0, 1/8]")]
    ParameterOutOfRange(f64),
    #[error("nested quadrature did not stabilize (orders disagree by {0:e})")]
    QuadratureNonconvergence(f64),
    #[error(transparent)]
    Cat(#[from] CatError),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RegionId {
    A,
    B,
    C,
    D,
    E,
    F,
    G,
    /// Shrinking triangle at the top-left corner.
    RTri,
    /// Shrinking triangle at the bottom-right corner.
    BTri,
}

impl RegionId {
    pub const ALL: [RegionId; 9] = [
        RegionId::A,
        RegionId::B,
        RegionId::C,
        RegionId::D,
        RegionId::E,
        RegionId::F,
        RegionId::G,
        RegionId::RTri,
        RegionId::BTri,
    ];

    pub const LONG: [RegionId; 7] = [
        RegionId::A,
        RegionId::B,
        RegionId::C,
        RegionId::D,
        RegionId::E,
        RegionId::F,
        RegionId::G,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            RegionId::A => "A",
            RegionId::B => "B",
            RegionId::C => "C",
            RegionId::D => "D",
            RegionId::E => "E",
            RegionId::F => "F",
            RegionId::G => "G",
            RegionId::RTri => "R",
            RegionId::BTri => "B_tri",
        }
    }
}

/// Region polygon at parameter `t` (exact when `S` is rational).
pub fn region_polygon<S: Scalar>(id: RegionId, t: &S) -> ConvexPolygon<S> {
    let zero = S::zero();
    let one = S::one();
    let two = S::from_ratio(2, 1);
    let half = S::from_ratio(1, 2);
    let kappa = two.clone() - t.clone();
    let c = one.clone() / kappa; // 1/(2-t)
    let p = |x: S, y: S| Point2::new(x, y);
    let verts = match id {
        RegionId::A => vec![
            p(zero.clone(), zero.clone()),
            p(half.clone(), one.clone()),
            p(t.clone(), one.clone()),
            p(zero.clone(), one.clone() - t.clone()),
        ],
        RegionId::B => vec![
            p(zero.clone(), zero.clone()),
            p(c.clone(), one.clone()),
            p(half.clone(), one.clone()),
        ],
        RegionId::C => vec![
            p(zero.clone(), zero.clone()),
            p(one.clone(), one.clone()),
            p(c.clone(), one.clone()),
        ],
        RegionId::D => vec![
            p(zero.clone(), zero.clone()),
            p(t.clone(), zero.clone()),
            p(one.clone() - t.clone(), one.clone() - two.clone() * t.clone()),
            p(one.clone(), one.clone()),
        ],
        RegionId::E => vec![
            p(t.clone(), zero.clone()),
            p(half, zero.clone()),
            p(one.clone() - t.clone(), one.clone() - two.clone() * t.clone()),
        ],
        RegionId::F => vec![
            p(half.clone(), zero.clone()),
            p(c.clone(), zero.clone()),
            p(one.clone(), one.clone() - t.clone()),
            p(one.clone() - t.clone(), one.clone() - two.clone() * t.clone()),
        ],
        RegionId::G => vec![
            p(c, zero.clone()),
            p(one.clone(), zero.clone()),
            p(one.clone(), one.clone() - t.clone()),
        ],
        RegionId::RTri => vec![
            p(zero.clone(), one.clone() - t.clone()),
            p(t.clone(), one.clone()),
            p(zero.clone(), one.clone()),
        ],
        RegionId::BTri => vec![
            p(one.clone() - t.clone(), one.clone() - two * t.clone()),
            p(one.clone(), one.clone() - t.clone()),
            p(one.clone(), one),
        ],
    };
    ConvexPolygon::new(verts).expect("region polygon")
}

#[derive(Debug, Clone)]
pub enum FoliationKind {
    /// Ray fan from a fixed center; leaves carry density proportional to the
    /// radius.
    Polar { center: [f64; 2] },
    /// Slope-one parallels `y = x - c(param)`; uniform leaf densities.
    ParallelSlope1 { offset: f64 },
}

/// Conditional density along a leaf, in the arclength coordinate from the
/// leaf start.
#[derive(Debug, Clone, Copy)]
pub enum LeafDensity {
    Uniform { len: f64 },
    /// Density `(r1 + sigma) * 2 / (r2^2 - r1^2)`.
    LinearInR { r1: f64, r2: f64 },
}

impl LeafDensity {
    pub fn eval(&self, sigma: f64) -> f64 {
        match self {
            LeafDensity::Uniform { len } => 1.0 / len,
            LeafDensity::LinearInR { r1, r2 } => 2.0 * (r1 + sigma) / (r2 * r2 - r1 * r1),
        }
    }

    /// `sup |p| + sup |p'|` along the leaf.
    pub fn c1_norm(&self) -> f64 {
        match self {
            LeafDensity::Uniform { len } => 1.0 / len,
            LeafDensity::LinearInR { r1, r2 } => {
                let denom = r2 * r2 - r1 * r1;
                2.0 * r2 / denom + 2.0 / denom
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct Leaf {
    pub segment: StandardSegment,
    pub density: LeafDensity,
    /// Factor density at this leaf's parameter.
    pub factor_weight: f64,
}

/// A region together with its leaf generator (leaves are not materialized).
#[derive(Debug, Clone)]
pub struct FoliatedRegion {
    pub id: RegionId,
    pub t: f64,
    pub polygon: ConvexPolygon<f64>,
    pub kind: FoliationKind,
    /// Parameter range of the family (angle for fans, offset for parallels).
    pub param_range: (f64, f64),
    /// Panel boundaries: parameters where the leaf endpoints switch edges.
    pub panels: Vec<(f64, f64)>,
}

impl FoliatedRegion {
    fn new(id: RegionId, t: f64) -> Result<Self, FoliationError> {
        if !(0.0 < t && t <= 0.125) {
            return Err(FoliationError::ParameterOutOfRange(t));
        }
        let polygon = region_polygon(id, &t);
        let kind = match id {
            RegionId::A | RegionId::B | RegionId::C => FoliationKind::Polar { center: [0.0, 0.0] },
            RegionId::D => FoliationKind::ParallelSlope1 { offset: 0.0 },
            RegionId::E => FoliationKind::Polar {
                center: [1.0 - t, 1.0 - 2.0 * t],
            },
            RegionId::F => FoliationKind::Polar { center: [0.0, -1.0] },
            RegionId::G => FoliationKind::Polar {
                center: [1.0, 1.0 - t],
            },
            // R leaves are y = x + 1 - s, i.e. offset c = s - 1.
            RegionId::RTri => FoliationKind::ParallelSlope1 { offset: -1.0 },
            RegionId::BTri => FoliationKind::ParallelSlope1 { offset: 0.0 },
        };
        let (param_range, cuts) = match &kind {
            FoliationKind::Polar { center } => {
                let mut angles: Vec<f64> = polygon
                    .vertices()
                    .iter()
                    .filter_map(|v| {
                        let dx = v.x - center[0];
                        let dy = v.y - center[1];
                        if dx.abs() + dy.abs() < 1e-12 {
                            None
                        } else {
                            Some(dy.atan2(dx))
                        }
                    })
                    .collect();
                angles.sort_by(f64::total_cmp);
                let lo = angles[0];
                let hi = *angles.last().unwrap();
                let interior: Vec<f64> = angles[1..angles.len() - 1]
                    .iter()
                    .copied()
                    .filter(|a| *a > lo + 1e-12 && *a < hi - 1e-12)
                    .collect();
                ((lo, hi), interior)
            }
            FoliationKind::ParallelSlope1 { offset } => {
                // Parameter s with leaf offset c = s + offset.
                let mut cs: Vec<f64> = polygon
                    .vertices()
                    .iter()
                    .map(|v| v.x - v.y - offset)
                    .collect();
                cs.sort_by(f64::total_cmp);
                let lo = cs[0];
                let hi = *cs.last().unwrap();
                let interior: Vec<f64> = cs[1..cs.len() - 1]
                    .iter()
                    .copied()
                    .filter(|c| *c > lo + 1e-12 && *c < hi - 1e-12)
                    .collect();
                ((lo, hi), interior)
            }
        };
        let mut bounds = vec![param_range.0];
        bounds.extend(cuts);
        bounds.push(param_range.1);
        bounds.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
        let panels = bounds.windows(2).map(|w| (w[0], w[1])).collect();
        Ok(Self {
            id,
            t,
            polygon,
            kind,
            param_range,
            panels,
        })
    }

    /// Leaf at the given parameter, or `None` when the ray/line misses the
    /// region (can only happen at the extreme parameters).
    pub fn leaf(&self, param: f64) -> Option<Leaf> {
        match &self.kind {
            FoliationKind::Polar { center } => {
                let dir = [param.cos(), param.sin()];
                let (r1, r2) = ray_clip(&self.polygon, *center, dir)?;
                if r2 - r1 < 1e-12 {
                    return None;
                }
                let a = [center[0] + r1 * dir[0], center[1] + r1 * dir[1]];
                let b = [center[0] + r2 * dir[0], center[1] + r2 * dir[1]];
                let segment = StandardSegment::from_endpoints(a, b).ok()?;
                Some(Leaf {
                    segment,
                    density: LeafDensity::LinearInR { r1, r2 },
                    factor_weight: 0.5 * (r2 * r2 - r1 * r1),
                })
            }
            FoliationKind::ParallelSlope1 { offset } => {
                let c = param + offset;
                // Leaf on y = x - c: clip a long chord of that line.
                let seg = crate::geometry::Segment::new(
                    Point2::new(c - 2.0, -2.0),
                    Point2::new(c + 2.0, 2.0),
                );
                let (ulo, uhi) = self.polygon.clip_segment(&seg)?;
                if uhi - ulo < 1e-12 {
                    return None;
                }
                let a = seg.at(ulo);
                let b = seg.at(uhi);
                let segment = StandardSegment::from_endpoints([a.x, a.y], [b.x, b.y]).ok()?;
                let len = segment.length();
                Some(Leaf {
                    segment,
                    density: LeafDensity::Uniform { len },
                    factor_weight: len / 2f64.sqrt(),
                })
            }
        }
    }

    /// Integral of the factor measure (must equal the region area).
    pub fn factor_mass(&self, order: usize) -> f64 {
        let gl = GaussLegendre::new(order);
        let mut acc = NeumaierSum::new();
        for &(lo, hi) in &self.panels {
            acc.add(gl.integrate(lo, hi, |p| self.leaf(p).map_or(0.0, |l| l.factor_weight)));
        }
        acc.value()
    }

    /// Nested quadrature `int (int_leaf g p) dm_factor`.
    pub fn leafwise_integral<F: Fn([f64; 2]) -> f64>(&self, g: &F, order: usize) -> f64 {
        let outer = GaussLegendre::new(order);
        let inner = GaussLegendre::new(32);
        let mut acc = NeumaierSum::new();
        for &(lo, hi) in &self.panels {
            acc.add(outer.integrate(lo, hi, |p| {
                let Some(leaf) = self.leaf(p) else {
                    return 0.0;
                };
                let len = leaf.segment.length();
                let mean = inner.integrate(0.0, 1.0, |u| {
                    let q = leaf.segment.at(u);
                    g(q) * leaf.density.eval(u * len)
                }) * len;
                mean * leaf.factor_weight
            }));
        }
        acc.value()
    }
}

/// Clips the ray `center + r dir`, `r >= 0`, to a convex polygon; returns
/// the radial interval.
fn ray_clip(poly: &ConvexPolygon<f64>, center: [f64; 2], dir: [f64; 2]) -> Option<(f64, f64)> {
    let far = 8.0;
    let seg = crate::geometry::Segment::new(
        Point2::new(center[0], center[1]),
        Point2::new(center[0] + far * dir[0], center[1] + far * dir[1]),
    );
    let (lo, hi) = poly.clip_segment(&seg)?;
    Some((lo * far, hi * far))
}

/// The two shrinking-triangle foliations.
pub fn build_f2(t: f64) -> Result<[FoliatedRegion; 2], FoliationError> {
    Ok([
        FoliatedRegion::new(RegionId::RTri, t)?,
        FoliatedRegion::new(RegionId::BTri, t)?,
    ])
}

/// The seven long-leaf foliations. Every leaf has length at least 1/2
/// (verified by sampling at construction).
pub fn build_f1(t: f64) -> Result<Vec<FoliatedRegion>, FoliationError> {
    let regions: Vec<FoliatedRegion> = RegionId::LONG
        .iter()
        .map(|&id| FoliatedRegion::new(id, t))
        .collect::<Result<_, _>>()?;
    for r in &regions {
        let min_len = min_leaf_length(r, 512);
        debug_assert!(
            min_len >= 0.5,
            "region {} has a leaf of length {}",
            r.id.name(),
            min_len
        );
    }
    Ok(regions)
}

/// Minimal leaf length over a parameter sample.
pub fn min_leaf_length(region: &FoliatedRegion, samples: usize) -> f64 {
    let (lo, hi) = region.param_range;
    let mut min_len = f64::MAX;
    for i in 0..samples {
        let p = lo + (hi - lo) * (i as f64 + 0.5) / samples as f64;
        if let Some(leaf) = region.leaf(p) {
            min_len = min_len.min(leaf.segment.length());
        }
    }
    min_len
}

/// `|leafwise nested quadrature - direct 2-d quadrature|`, with an internal
/// order-refinement check on the nested side.
pub fn disintegration_check<F: Fn([f64; 2]) -> f64>(
    region: &FoliatedRegion,
    g: F,
    tol: f64,
) -> Result<f64, FoliationError> {
    let nested_a = region.leafwise_integral(&g, 48);
    let nested_b = region.leafwise_integral(&g, 64);
    if (nested_a - nested_b).abs() > tol.max(1e-12) {
        return Err(FoliationError::QuadratureNonconvergence(
            (nested_a - nested_b).abs(),
        ));
    }
    let direct = integrate_polygon(&region.polygon, 24, |p| g(p));
    Ok((nested_b - direct).abs())
}

/// Dumps leaves to CSV: `region,param,ax,ay,bx,by,factor_weight`.
pub fn leaf_dump(
    regions: &[FoliatedRegion],
    per_region: usize,
    path: &std::path::Path,
) -> Result<(), FoliationError> {
    let mut csv = CsvWriter::create(
        path,
        &["region", "param", "ax", "ay", "bx", "by", "factor_weight"],
    )?;
    for r in regions {
        let (lo, hi) = r.param_range;
        for i in 0..per_region {
            let p = lo + (hi - lo) * (i as f64 + 0.5) / per_region as f64;
            if let Some(leaf) = r.leaf(p) {
                let s = leaf.segment.segment();
                csv.row(&[
                    r.id.name().to_string(),
                    format!("{}", p),
                    format!("{}", s.a.x),
                    format!("{}", s.a.y),
                    format!("{}", s.b.x),
                    format!("{}", s.b.y),
                    format!("{}", leaf.factor_weight),
                ])?;
            }
        }
    }
    Ok(())
}
