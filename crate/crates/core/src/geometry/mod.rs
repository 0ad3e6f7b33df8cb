//! Bounded convex domains and the geometric primitives the simulations use:
//! membership, Euclidean projection, supporting-hyperplane normals, diameter
//! and uniform sampling.
//!
//! A [`ConvexBody`] is immutable once built and is `Send + Sync`; sampling
//! always takes a caller-owned random stream.

mod polytope;
mod spec;

pub use polytope::{HalfSpace, Polytope, PolytopeOptions};
pub use spec::{BoxSpec, DomainSpec, HalfSpaceSpec};

use crate::error::{Error, Result};
use crate::linalg;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

/// Relative boundary tolerance used by [`ConvexBody::supporting_normal`].
pub const BOUNDARY_TOL_REL: f64 = 1e-8;

/// Membership slack for shapes whose projection is not exact in floating
/// point (ball rescaling, polytope iterations), in units of machine epsilon.
const ROUNDOFF_SLACK: f64 = 64.0 * f64::EPSILON;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BodyKind {
    Interval,
    Box,
    Ball,
    Polytope,
}

impl BodyKind {
    pub fn as_str(self) -> &'static str {
        match self {
            BodyKind::Interval => "interval",
            BodyKind::Box => "box",
            BodyKind::Ball => "ball",
            BodyKind::Polytope => "polytope",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundingBox {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl BoundingBox {
    pub fn diagonal(&self) -> f64 {
        linalg::dist(&self.lo, &self.hi)
    }

    pub fn contains(&self, p: &[f64]) -> bool {
        p.iter()
            .zip(self.lo.iter().zip(&self.hi))
            .all(|(x, (l, h))| *l <= *x && *x <= *h)
    }
}

#[derive(Debug, Clone)]
enum Shape {
    Interval { lo: f64, hi: f64 },
    Box { lo: Vec<f64>, hi: Vec<f64> },
    Ball { center: Vec<f64>, radius: f64 },
    Polytope(Polytope),
}

/// How a [`UniformSample`] was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SampleMethod {
    Exact,
    Rejection,
    HitAndRun,
}

#[derive(Debug, Clone, PartialEq)]
pub struct UniformSample {
    pub point: Vec<f64>,
    pub method: SampleMethod,
}

/// A bounded convex set Ω with nonempty interior.
#[derive(Debug, Clone)]
pub struct ConvexBody {
    shape: Shape,
    dim: usize,
    diameter: f64,
    bbox: BoundingBox,
}

impl ConvexBody {
    pub fn interval(lo: f64, hi: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite()) {
            return Err(Error::InvalidBody("interval endpoints must be finite".into()));
        }
        if lo >= hi {
            return Err(Error::InvalidBody(format!(
                "interval requires lo < hi (got [{lo}, {hi}])"
            )));
        }
        Ok(Self {
            shape: Shape::Interval { lo, hi },
            dim: 1,
            diameter: hi - lo,
            bbox: BoundingBox {
                lo: vec![lo],
                hi: vec![hi],
            },
        })
    }

    /// Axis-aligned box `[lo, hi]`.
    pub fn new_box(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.is_empty() {
            return Err(Error::InvalidBody("box needs at least one dimension".into()));
        }
        if lo.len() != hi.len() {
            return Err(Error::DimensionMismatch {
                expected: lo.len(),
                got: hi.len(),
            });
        }
        if let Some(i) = (0..lo.len()).find(|&i| !(lo[i] < hi[i]) || !lo[i].is_finite() || !hi[i].is_finite())
        {
            return Err(Error::InvalidBody(format!(
                "box requires finite lo < hi in every coordinate (coordinate {i}: [{}, {}])",
                lo[i], hi[i]
            )));
        }
        let diameter = linalg::dist(&lo, &hi);
        Ok(Self {
            dim: lo.len(),
            diameter,
            bbox: BoundingBox {
                lo: lo.clone(),
                hi: hi.clone(),
            },
            shape: Shape::Box { lo, hi },
        })
    }

    /// The cube `[0, d/√n]^n`, which has diameter exactly `d`.
    pub fn cube_with_diameter(n: usize, d: f64) -> Result<Self> {
        let side = d / (n as f64).sqrt();
        Self::new_box(vec![0.0; n], vec![side; n])
    }

    pub fn ball(center: Vec<f64>, radius: f64) -> Result<Self> {
        if center.is_empty() {
            return Err(Error::InvalidBody("ball needs at least one dimension".into()));
        }
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::InvalidBody(format!("ball radius must be positive (got {radius})")));
        }
        if center.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidBody("ball center must be finite".into()));
        }
        let bbox = BoundingBox {
            lo: center.iter().map(|c| c - radius).collect(),
            hi: center.iter().map(|c| c + radius).collect(),
        };
        Ok(Self {
            dim: center.len(),
            diameter: 2.0 * radius,
            bbox,
            shape: Shape::Ball { center, radius },
        })
    }

    pub fn polytope(halfspaces: Vec<HalfSpace>, options: PolytopeOptions) -> Result<Self> {
        let poly = Polytope::new(halfspaces, options)?;
        Ok(Self {
            dim: poly.dimension(),
            diameter: poly.diameter(),
            bbox: poly.bounding_box().clone(),
            shape: Shape::Polytope(poly),
        })
    }

    pub fn kind(&self) -> BodyKind {
        match self.shape {
            Shape::Interval { .. } => BodyKind::Interval,
            Shape::Box { .. } => BodyKind::Box,
            Shape::Ball { .. } => BodyKind::Ball,
            Shape::Polytope(_) => BodyKind::Polytope,
        }
    }

    pub fn dimension(&self) -> usize {
        self.dim
    }

    pub fn diameter(&self) -> f64 {
        self.diameter
    }

    pub fn bounding_box(&self) -> &BoundingBox {
        &self.bbox
    }

    pub fn boundary_tol(&self) -> f64 {
        BOUNDARY_TOL_REL * self.diameter
    }

    fn check_dim(&self, p: &[f64]) -> Result<()> {
        if p.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: p.len(),
            });
        }
        Ok(())
    }

    /// Closed-set membership test for Ω̄.
    pub fn contains(&self, p: &[f64]) -> Result<bool> {
        self.check_dim(p)?;
        Ok(match &self.shape {
            Shape::Interval { lo, hi } => *lo <= p[0] && p[0] <= *hi,
            Shape::Box { lo, hi } => p
                .iter()
                .zip(lo.iter().zip(hi))
                .all(|(x, (l, h))| *l <= *x && *x <= *h),
            Shape::Ball { center, radius } => {
                let r2: f64 = p.iter().zip(center).map(|(x, c)| (x - c) * (x - c)).sum();
                r2 <= radius * radius * (1.0 + ROUNDOFF_SLACK)
            }
            Shape::Polytope(poly) => poly.contains(p, ROUNDOFF_SLACK),
        })
    }

    /// Euclidean nearest point of Ω̄.
    pub fn project(&self, p: &[f64]) -> Result<Vec<f64>> {
        let mut out = p.to_vec();
        self.project_in_place(&mut out)?;
        Ok(out)
    }

    /// Projects `p` onto Ω̄ in place. Points already in Ω̄ are left untouched.
    pub fn project_in_place(&self, p: &mut [f64]) -> Result<()> {
        self.check_dim(p)?;
        match &self.shape {
            Shape::Interval { lo, hi } => {
                p[0] = p[0].clamp(*lo, *hi);
            }
            Shape::Box { lo, hi } => {
                for ((x, l), h) in p.iter_mut().zip(lo).zip(hi) {
                    *x = x.clamp(*l, *h);
                }
            }
            Shape::Ball { center, radius } => {
                let r2: f64 = p.iter().zip(center).map(|(x, c)| (x - c) * (x - c)).sum();
                if r2 > radius * radius * (1.0 + ROUNDOFF_SLACK) {
                    let s = radius / r2.sqrt();
                    for (x, c) in p.iter_mut().zip(center) {
                        *x = c + (*x - c) * s;
                    }
                }
            }
            Shape::Polytope(poly) => {
                if !poly.contains(p, ROUNDOFF_SLACK) {
                    poly.project_in_place(p, ROUNDOFF_SLACK)?;
                }
            }
        }
        Ok(())
    }

    /// Inward unit normal of a supporting hyperplane at a boundary point.
    ///
    /// At non-smooth points (box corners, polytope edges) the normalized sum
    /// of the active faces' inward normals is returned.
    pub fn supporting_normal(&self, point: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(point)?;
        let tol = self.boundary_tol();
        match &self.shape {
            Shape::Interval { lo, hi } => {
                box_normal(point, std::slice::from_ref(lo), std::slice::from_ref(hi), tol)
            }
            Shape::Box { lo, hi } => box_normal(point, lo, hi, tol),
            Shape::Ball { center, radius } => {
                let mut n = linalg::sub(center, point);
                let r = linalg::normalize(&mut n);
                let gap = (r - radius).abs();
                if gap > tol {
                    return Err(Error::NotNearBoundary { distance: gap, tol });
                }
                if r == 0.0 {
                    return Err(Error::ZeroActiveSet);
                }
                Ok(n)
            }
            Shape::Polytope(poly) => poly.supporting_normal(point, tol),
        }
    }

    /// Draws one point from the uniform law σ on Ω.
    pub fn sample_uniform<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<UniformSample> {
        match &self.shape {
            Shape::Interval { lo, hi } => Ok(UniformSample {
                point: vec![lo + (hi - lo) * rng.random::<f64>()],
                method: SampleMethod::Exact,
            }),
            Shape::Box { lo, hi } => Ok(UniformSample {
                point: lo
                    .iter()
                    .zip(hi)
                    .map(|(l, h)| l + (h - l) * rng.random::<f64>())
                    .collect(),
                method: SampleMethod::Exact,
            }),
            Shape::Ball { center, radius } => {
                let n = center.len();
                let mut dir: Vec<f64> = (0..n).map(|_| StandardNormal.sample(rng)).collect();
                while linalg::normalize(&mut dir) == 0.0 {
                    dir = (0..n).map(|_| StandardNormal.sample(rng)).collect();
                }
                let u: f64 = rng.random();
                let r = radius * u.powf(1.0 / n as f64);
                Ok(UniformSample {
                    point: center.iter().zip(&dir).map(|(c, v)| c + r * v).collect(),
                    method: SampleMethod::Exact,
                })
            }
            Shape::Polytope(poly) => poly.sample_uniform(rng),
        }
    }

    /// A canonical interior point: the midpoint for intervals and boxes, the
    /// center for balls and the vertex centroid (or the construction-time
    /// interior witness) for polytopes.
    pub fn center(&self) -> Vec<f64> {
        match &self.shape {
            Shape::Interval { lo, hi } => vec![0.5 * (lo + hi)],
            Shape::Box { lo, hi } => lo.iter().zip(hi).map(|(l, h)| 0.5 * (l + h)).collect(),
            Shape::Ball { center, .. } => center.clone(),
            Shape::Polytope(poly) => poly.interior_point().to_vec(),
        }
    }

    /// A pair of points of Ω̄ at distance equal to the diameter.
    pub fn antipodal_pair(&self) -> Result<(Vec<f64>, Vec<f64>)> {
        match &self.shape {
            Shape::Interval { lo, hi } => Ok((vec![*lo], vec![*hi])),
            Shape::Box { lo, hi } => Ok((lo.clone(), hi.clone())),
            Shape::Ball { center, radius } => {
                let mut a = center.clone();
                let mut b = center.clone();
                a[0] -= radius;
                b[0] += radius;
                Ok((a, b))
            }
            Shape::Polytope(poly) => poly.farthest_vertex_pair().ok_or_else(|| {
                Error::DiameterUnavailable(
                    "polytope vertices were not enumerated; no antipodal pair known".into(),
                )
            }),
        }
    }

    /// The domain-spec document describing this body.
    pub fn to_spec(&self) -> DomainSpec {
        match &self.shape {
            Shape::Interval { lo, hi } => DomainSpec::Interval { lo: *lo, hi: *hi },
            Shape::Box { lo, hi } => DomainSpec::Box {
                lo: lo.clone(),
                hi: hi.clone(),
            },
            Shape::Ball { center, radius } => DomainSpec::Ball {
                center: center.clone(),
                radius: *radius,
            },
            Shape::Polytope(poly) => poly.to_spec(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        DomainSpec::from_json(text)?.build()
    }
}

fn box_normal(p: &[f64], lo: &[f64], hi: &[f64], tol: f64) -> Result<Vec<f64>> {
    let mut n = vec![0.0; p.len()];
    let mut nearest = f64::INFINITY;
    let mut outside = 0.0_f64;
    for i in 0..p.len() {
        let below = p[i] - lo[i];
        let above = hi[i] - p[i];
        outside = outside.max(-below).max(-above);
        nearest = nearest.min(below.abs()).min(above.abs());
        if below.abs() <= tol {
            n[i] += 1.0;
        }
        if above.abs() <= tol {
            n[i] -= 1.0;
        }
    }
    if outside > tol {
        return Err(Error::NotNearBoundary {
            distance: outside,
            tol,
        });
    }
    if nearest > tol {
        return Err(Error::NotNearBoundary {
            distance: nearest,
            tol,
        });
    }
    if linalg::normalize(&mut n) == 0.0 {
        return Err(Error::ZeroActiveSet);
    }
    Ok(n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::replicate_stream;

    fn unit_square() -> ConvexBody {
        ConvexBody::new_box(vec![0.0, 0.0], vec![1.0, 1.0]).unwrap()
    }

    #[test]
    fn contains_examples() {
        let sq = unit_square();
        assert!(sq.contains(&[0.5, 0.5]).unwrap());
        assert!(!sq.contains(&[1.1, 0.5]).unwrap());
        let ball = ConvexBody::ball(vec![0.0; 3], 1.0).unwrap();
        assert!(ball.contains(&[1.0, 0.0, 0.0]).unwrap());
        assert!(matches!(
            sq.contains(&[0.5]),
            Err(Error::DimensionMismatch { expected: 2, got: 1 })
        ));
    }

    #[test]
    fn project_examples() {
        assert_eq!(unit_square().project(&[1.3, -0.2]).unwrap(), vec![1.0, 0.0]);
        let disk = ConvexBody::ball(vec![0.0, 0.0], 1.0).unwrap();
        assert_eq!(disk.project(&[2.0, 0.0]).unwrap(), vec![1.0, 0.0]);
        let p = [0.3, -0.4];
        assert_eq!(disk.project(&p).unwrap(), p.to_vec());
    }

    #[test]
    fn normal_examples() {
        let disk = ConvexBody::ball(vec![0.0, 0.0], 1.0).unwrap();
        assert_eq!(disk.supporting_normal(&[1.0, 0.0]).unwrap(), vec![-1.0, 0.0]);
        let sq = unit_square();
        assert_eq!(sq.supporting_normal(&[0.0, 0.5]).unwrap(), vec![1.0, 0.0]);
        let c = sq.supporting_normal(&[0.0, 0.0]).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!((c[0] - h).abs() < 1e-15 && (c[1] - h).abs() < 1e-15);
        assert!(matches!(
            sq.supporting_normal(&[0.5, 0.5]),
            Err(Error::NotNearBoundary { .. })
        ));
    }

    #[test]
    fn diameter_examples() {
        for n in [1usize, 2, 5, 32] {
            let b = ConvexBody::new_box(vec![0.0; n], vec![1.0; n]).unwrap();
            assert!((b.diameter() - (n as f64).sqrt()).abs() < 1e-14);
            let c = ConvexBody::cube_with_diameter(n, 1.0).unwrap();
            assert!((c.diameter() - 1.0).abs() < 1e-14);
        }
        assert_eq!(ConvexBody::ball(vec![0.0; 4], 2.5).unwrap().diameter(), 5.0);
    }

    #[test]
    fn degenerate_bodies_rejected() {
        assert!(ConvexBody::new_box(vec![0.0, 0.0], vec![1.0, 0.0]).is_err());
        assert!(ConvexBody::ball(vec![0.0], 0.0).is_err());
        assert!(ConvexBody::interval(1.0, 1.0).is_err());
    }

    #[test]
    fn interval_sample_mean() {
        let body = ConvexBody::interval(0.0, 1.0).unwrap();
        let mut rng = replicate_stream(11, 0);
        let n = 1_000_000;
        let mean = (0..n)
            .map(|_| body.sample_uniform(&mut rng).unwrap().point[0])
            .sum::<f64>()
            / n as f64;
        let tol = 3.0 * (1.0 / 12f64.sqrt()) / 1e3;
        assert!((mean - 0.5).abs() < tol, "mean {mean}");
    }

    #[test]
    fn disk_second_moment() {
        // E|x|² = ∫₀¹ r²·2r dr = 1/2 for the unit disk.
        let body = ConvexBody::ball(vec![0.0, 0.0], 1.0).unwrap();
        let mut rng = replicate_stream(12, 0);
        let n = 1_000_000;
        let vals: Vec<f64> = (0..n)
            .map(|_| {
                let p = body.sample_uniform(&mut rng).unwrap().point;
                linalg::dot(&p, &p)
            })
            .collect();
        let mean = vals.iter().sum::<f64>() / n as f64;
        let var = vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64;
        assert!((mean - 0.5).abs() < 3.0 * var.sqrt() / 1e3, "mean {mean}");
    }

    #[test]
    fn box_samples_inside() {
        let sq = unit_square();
        let mut rng = replicate_stream(13, 0);
        for _ in 0..10_000 {
            let s = sq.sample_uniform(&mut rng).unwrap();
            assert_eq!(s.method, SampleMethod::Exact);
            assert!(sq.contains(&s.point).unwrap());
        }
    }
}
