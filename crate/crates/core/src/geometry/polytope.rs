use super::spec::{BoxSpec, DomainSpec, HalfSpaceSpec};
use super::{BoundingBox, SampleMethod, UniformSample};
use crate::error::{Error, Result};
use crate::linalg;
use crate::rng::replicate_stream;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

/// Upper limit on `C(faces, n)` for brute-force vertex enumeration.
const MAX_VERTEX_COMBINATIONS: u64 = 200_000;
/// Below this rejection acceptance rate the sampler switches to hit-and-run.
const MIN_ACCEPTANCE: f64 = 1e-3;
const ACCEPTANCE_PROBES: usize = 10_000;
const PROBE_SEED: u64 = 0x5eed_0fb0_d1e5;

/// `{x : ⟨a, x⟩ ≤ b}`
#[derive(Debug, Clone, PartialEq)]
pub struct HalfSpace {
    pub a: Vec<f64>,
    pub b: f64,
}

impl HalfSpace {
    pub fn new(a: Vec<f64>, b: f64) -> Self {
        Self { a, b }
    }
}

#[derive(Debug, Clone)]
pub struct PolytopeOptions {
    /// Required when vertices cannot be enumerated. An over-estimate is sound
    /// for every bound in this crate since they are monotone in d.
    pub diameter: Option<f64>,
    /// Enclosing box; its faces are added to the constraint set.
    pub bounding_box: Option<BoundingBox>,
    pub max_iterations: usize,
    pub tolerance: f64,
    pub allow_hit_and_run: bool,
    /// Hit-and-run steps per independent sample; `None` picks `500 + 100 n`.
    pub burn_in: Option<usize>,
}

impl Default for PolytopeOptions {
    fn default() -> Self {
        Self {
            diameter: None,
            bounding_box: None,
            max_iterations: 10_000,
            tolerance: 1e-12,
            allow_hit_and_run: true,
            burn_in: None,
        }
    }
}

/// Finite intersection of half-spaces, stored with unit normals.
#[derive(Debug, Clone)]
pub struct Polytope {
    normals: Vec<Vec<f64>>,
    offsets: Vec<f64>,
    /// The half-spaces as given, for echoing back in the domain spec.
    original: Vec<HalfSpace>,
    user_bbox: bool,
    user_diameter: Option<f64>,
    dim: usize,
    vertices: Option<Vec<Vec<f64>>>,
    interior: Vec<f64>,
    bbox: BoundingBox,
    diameter: f64,
    acceptance: f64,
    max_iterations: usize,
    tolerance: f64,
    allow_hit_and_run: bool,
    burn_in: usize,
}

impl Polytope {
    pub fn new(halfspaces: Vec<HalfSpace>, options: PolytopeOptions) -> Result<Self> {
        let dim = halfspaces
            .first()
            .map(|h| h.a.len())
            .ok_or_else(|| Error::InvalidBody("polytope needs at least one half-space".into()))?;
        if dim == 0 {
            return Err(Error::InvalidBody("half-space normals must be nonempty".into()));
        }
        let mut normals = Vec::with_capacity(halfspaces.len());
        let mut offsets = Vec::with_capacity(halfspaces.len());
        for (i, h) in halfspaces.iter().enumerate() {
            if h.a.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: h.a.len(),
                });
            }
            let mut a = h.a.clone();
            let len = linalg::normalize(&mut a);
            if !(len > 0.0 && len.is_finite() && h.b.is_finite()) {
                return Err(Error::InvalidBody(format!(
                    "half-space {i} has a zero or non-finite normal"
                )));
            }
            normals.push(a);
            offsets.push(h.b / len);
        }
        if let Some(bb) = &options.bounding_box {
            if bb.lo.len() != dim || bb.hi.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: bb.lo.len().min(bb.hi.len()),
                });
            }
            if (0..dim).any(|i| !(bb.lo[i] < bb.hi[i])) {
                return Err(Error::InvalidBody("bounding box requires lo < hi".into()));
            }
            for i in 0..dim {
                let mut e = vec![0.0; dim];
                e[i] = 1.0;
                normals.push(e.clone());
                offsets.push(bb.hi[i]);
                e[i] = -1.0;
                normals.push(e);
                offsets.push(-bb.lo[i]);
            }
        }

        let mut poly = Self {
            normals,
            offsets,
            original: halfspaces,
            user_bbox: options.bounding_box.is_some(),
            user_diameter: options.diameter,
            dim,
            vertices: None,
            interior: Vec::new(),
            bbox: BoundingBox {
                lo: vec![],
                hi: vec![],
            },
            diameter: 0.0,
            acceptance: 1.0,
            max_iterations: options.max_iterations,
            tolerance: options.tolerance,
            allow_hit_and_run: options.allow_hit_and_run,
            burn_in: options.burn_in.unwrap_or(500 + 100 * dim),
        };

        let m = poly.normals.len();
        if binomial(m as u64 + 2 * dim as u64, dim as u64) <= MAX_VERTEX_COMBINATIONS {
            poly.enumerate_vertices()?;
        } else {
            poly.bbox = options.bounding_box.clone().ok_or_else(|| {
                Error::DiameterUnavailable(
                    "too many faces to enumerate vertices; supply bounding_box and diameter".into(),
                )
            })?;
            let d = options.diameter.ok_or_else(|| {
                Error::DiameterUnavailable(
                    "polytope vertices not enumerable and no diameter supplied".into(),
                )
            })?;
            if !(d > 0.0) || d > poly.bbox.diagonal() * (1.0 + 1e-12) {
                return Err(Error::InvalidBody(format!(
                    "supplied diameter {d} must be positive and at most the bounding-box diagonal {}",
                    poly.bbox.diagonal()
                )));
            }
            poly.diameter = d;
            poly.interior = poly.find_interior_by_rejection()?;
        }
        poly.acceptance = poly.estimate_acceptance();
        if poly.acceptance < MIN_ACCEPTANCE && !poly.allow_hit_and_run {
            return Err(Error::Sampling(format!(
                "rejection acceptance {:.2e} is below {MIN_ACCEPTANCE:e} and hit-and-run is disabled",
                poly.acceptance
            )));
        }
        Ok(poly)
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

    pub fn interior_point(&self) -> &[f64] {
        &self.interior
    }

    pub fn vertices(&self) -> Option<&[Vec<f64>]> {
        self.vertices.as_deref()
    }

    pub fn acceptance_rate(&self) -> f64 {
        self.acceptance
    }

    fn slack(&self, i: usize, p: &[f64]) -> f64 {
        self.offsets[i] - linalg::dot(&self.normals[i], p)
    }

    pub(super) fn contains(&self, p: &[f64], rel: f64) -> bool {
        let pn = linalg::norm(p);
        (0..self.normals.len()).all(|i| self.slack(i, p) >= -rel * (self.offsets[i].abs() + pn))
    }

    fn max_violation(&self, p: &[f64]) -> f64 {
        (0..self.normals.len())
            .map(|i| -self.slack(i, p))
            .fold(0.0, f64::max)
    }

    /// Dykstra's alternating projections onto the half-spaces, followed by a
    /// few plain cyclic sweeps that remove the last round-off violations.
    pub(super) fn project_in_place(&self, p: &mut [f64], rel: f64) -> Result<()> {
        let m = self.normals.len();
        let n = self.dim;
        let mut corrections = vec![0.0; m * n];
        let mut y = vec![0.0; n];
        let mut prev = p.to_vec();
        let tol = self.tolerance * self.diameter.max(1.0);
        let mut converged = false;
        let mut residual = f64::INFINITY;
        for _ in 0..self.max_iterations {
            prev.copy_from_slice(p);
            for i in 0..m {
                let corr = &mut corrections[i * n..(i + 1) * n];
                for k in 0..n {
                    y[k] = p[k] + corr[k];
                }
                let excess = linalg::dot(&self.normals[i], &y) - self.offsets[i];
                for k in 0..n {
                    let projected = if excess > 0.0 {
                        y[k] - excess * self.normals[i][k]
                    } else {
                        y[k]
                    };
                    corr[k] = y[k] - projected;
                    p[k] = projected;
                }
            }
            residual = linalg::dist(&prev, p);
            if residual <= tol && self.max_violation(p) <= tol {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(Error::ProjectionDiverged {
                iterations: self.max_iterations,
                residual,
            });
        }
        for _ in 0..1000 {
            if self.contains(p, rel) {
                return Ok(());
            }
            for i in 0..m {
                let excess = -self.slack(i, p);
                if excess > 0.0 {
                    // Overshoot by a few ulps so the face test passes exactly.
                    let step = excess + 4.0 * f64::EPSILON * (self.offsets[i].abs() + 1.0);
                    linalg::axpy(-step, &self.normals[i], p);
                }
            }
        }
        if self.contains(p, rel) {
            Ok(())
        } else {
            Err(Error::ProjectionDiverged {
                iterations: self.max_iterations,
                residual: self.max_violation(p),
            })
        }
    }

    pub(super) fn supporting_normal(&self, p: &[f64], tol: f64) -> Result<Vec<f64>> {
        let mut n = vec![0.0; self.dim];
        let mut nearest = f64::INFINITY;
        let mut outside = 0.0_f64;
        for i in 0..self.normals.len() {
            let s = self.slack(i, p);
            outside = outside.max(-s);
            nearest = nearest.min(s.abs());
            if s.abs() <= tol {
                linalg::axpy(-1.0, &self.normals[i], &mut n);
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
        if linalg::normalize(&mut n) <= 1e-12 {
            return Err(Error::ZeroActiveSet);
        }
        Ok(n)
    }

    /// Brute-force vertex enumeration of P ∩ [-M, M]^n for a large M. Any
    /// vertex on the artificial box means P itself is unbounded.
    fn enumerate_vertices(&mut self) -> Result<()> {
        let n = self.dim;
        let big = 1e6 * (1.0 + self.offsets.iter().fold(0.0_f64, |a, b| a.max(b.abs())));
        let mut normals = self.normals.clone();
        let mut offsets = self.offsets.clone();
        for i in 0..n {
            let mut e = vec![0.0; n];
            e[i] = 1.0;
            normals.push(e.clone());
            offsets.push(big);
            e[i] = -1.0;
            normals.push(e);
            offsets.push(big);
        }
        let feas_tol = 1e-15 * big;
        let mut vertices: Vec<Vec<f64>> = Vec::new();
        for combo in Combinations::new(normals.len(), n) {
            let mat: Vec<Vec<f64>> = combo.iter().map(|&i| normals[i].clone()).collect();
            let rhs: Vec<f64> = combo.iter().map(|&i| offsets[i]).collect();
            let Some(v) = linalg::solve(mat, rhs) else {
                continue;
            };
            let feasible = normals
                .iter()
                .zip(&offsets)
                .all(|(a, b)| linalg::dot(a, &v) <= b + feas_tol);
            if feasible && !vertices.iter().any(|w| linalg::dist(w, &v) <= 1e-9) {
                vertices.push(v);
            }
        }
        if vertices.is_empty() {
            return Err(Error::InvalidBody("polytope is empty".into()));
        }
        if vertices
            .iter()
            .any(|v| v.iter().any(|x| x.abs() >= big * (1.0 - 1e-9)))
        {
            return Err(Error::InvalidBody(
                "polytope is unbounded; add faces or a bounding_box".into(),
            ));
        }
        let mut lo = vertices[0].clone();
        let mut hi = vertices[0].clone();
        for v in &vertices {
            for k in 0..n {
                lo[k] = lo[k].min(v[k]);
                hi[k] = hi[k].max(v[k]);
            }
        }
        let mut diam = 0.0_f64;
        for (i, a) in vertices.iter().enumerate() {
            for b in &vertices[i + 1..] {
                diam = diam.max(linalg::dist(a, b));
            }
        }
        let centroid: Vec<f64> = (0..n)
            .map(|k| vertices.iter().map(|v| v[k]).sum::<f64>() / vertices.len() as f64)
            .collect();
        let strict = 1e-9 * diam.max(f64::MIN_POSITIVE);
        if diam <= 0.0 || (0..self.normals.len()).any(|i| self.slack(i, &centroid) <= strict) {
            return Err(Error::InvalidBody("polytope has empty interior".into()));
        }
        if let Some(d) = self.user_diameter {
            if d < diam * (1.0 - 1e-12) {
                return Err(Error::InvalidBody(format!(
                    "supplied diameter {d} is smaller than the vertex diameter {diam}"
                )));
            }
            diam = d;
        }
        self.diameter = diam;
        self.interior = centroid;
        self.bbox = BoundingBox { lo, hi };
        self.vertices = Some(vertices);
        Ok(())
    }

    fn find_interior_by_rejection(&self) -> Result<Vec<f64>> {
        let mut rng = replicate_stream(PROBE_SEED, 1);
        for _ in 0..ACCEPTANCE_PROBES * 10 {
            let p = self.bbox_draw(&mut rng);
            if (0..self.normals.len()).all(|i| self.slack(i, &p) > 0.0) {
                return Ok(p);
            }
        }
        Err(Error::InvalidBody(
            "no strictly feasible point found inside the bounding box".into(),
        ))
    }

    fn bbox_draw<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        self.bbox
            .lo
            .iter()
            .zip(&self.bbox.hi)
            .map(|(l, h)| l + (h - l) * rng.random::<f64>())
            .collect()
    }

    fn estimate_acceptance(&self) -> f64 {
        let mut rng = replicate_stream(PROBE_SEED, 0);
        let hits = (0..ACCEPTANCE_PROBES)
            .filter(|_| self.contains(&self.bbox_draw(&mut rng), 0.0))
            .count();
        hits as f64 / ACCEPTANCE_PROBES as f64
    }

    pub(super) fn sample_uniform<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<UniformSample> {
        if self.acceptance >= MIN_ACCEPTANCE {
            // Expected tries are 1/acceptance; the cap only guards against a
            // badly mis-estimated rate.
            let cap = (100.0 / self.acceptance).ceil() as usize;
            for _ in 0..cap {
                let p = self.bbox_draw(rng);
                if self.contains(&p, 0.0) {
                    return Ok(UniformSample {
                        point: p,
                        method: SampleMethod::Rejection,
                    });
                }
            }
        }
        if !self.allow_hit_and_run {
            return Err(Error::Sampling(
                "rejection sampling failed and hit-and-run is disabled".into(),
            ));
        }
        Ok(UniformSample {
            point: self.hit_and_run(rng, self.burn_in),
            method: SampleMethod::HitAndRun,
        })
    }

    /// Runs a hit-and-run chain from the interior witness for `steps` moves.
    pub fn hit_and_run<R: Rng + ?Sized>(&self, rng: &mut R, steps: usize) -> Vec<f64> {
        let n = self.dim;
        let mut x = self.interior.clone();
        let mut dir = vec![0.0; n];
        for _ in 0..steps {
            loop {
                for v in dir.iter_mut() {
                    *v = StandardNormal.sample(rng);
                }
                if linalg::normalize(&mut dir) > 0.0 {
                    break;
                }
            }
            let (mut t_lo, mut t_hi) = (f64::NEG_INFINITY, f64::INFINITY);
            for i in 0..self.normals.len() {
                let rate = linalg::dot(&self.normals[i], &dir);
                let room = self.slack(i, &x).max(0.0);
                if rate > 0.0 {
                    t_hi = t_hi.min(room / rate);
                } else if rate < 0.0 {
                    t_lo = t_lo.max(room / rate);
                }
            }
            let t = t_lo + (t_hi - t_lo) * rng.random::<f64>();
            linalg::axpy(t, &dir, &mut x);
        }
        if !self.contains(&x, 0.0) {
            let _ = self.project_in_place(&mut x, 0.0);
        }
        x
    }

    pub(super) fn farthest_vertex_pair(&self) -> Option<(Vec<f64>, Vec<f64>)> {
        let vs = self.vertices.as_ref()?;
        let mut best = (0, 0, -1.0);
        for i in 0..vs.len() {
            for j in i + 1..vs.len() {
                let d = linalg::dist(&vs[i], &vs[j]);
                if d > best.2 {
                    best = (i, j, d);
                }
            }
        }
        Some((vs[best.0].clone(), vs[best.1].clone()))
    }

    pub(super) fn to_spec(&self) -> DomainSpec {
        DomainSpec::Polytope {
            halfspaces: self
                .original
                .iter()
                .map(|h| HalfSpaceSpec {
                    a: h.a.clone(),
                    b: h.b,
                })
                .collect(),
            diameter: self.user_diameter,
            bounding_box: self.user_bbox.then(|| BoxSpec {
                lo: self.bbox.lo.clone(),
                hi: self.bbox.hi.clone(),
            }),
        }
    }
}

fn binomial(n: u64, k: u64) -> u64 {
    let k = k.min(n.saturating_sub(k));
    let mut acc: u64 = 1;
    for i in 0..k {
        acc = acc.saturating_mul(n - i) / (i + 1);
        if acc > MAX_VERTEX_COMBINATIONS * 16 {
            return u64::MAX;
        }
    }
    acc
}

/// Lexicographic k-subsets of `0..n`.
struct Combinations {
    idx: Vec<usize>,
    n: usize,
    done: bool,
}

impl Combinations {
    fn new(n: usize, k: usize) -> Self {
        Self {
            idx: (0..k).collect(),
            n,
            done: k > n,
        }
    }
}

impl Iterator for Combinations {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        if self.done {
            return None;
        }
        let out = self.idx.clone();
        let k = self.idx.len();
        let mut i = k;
        loop {
            if i == 0 {
                self.done = true;
                break;
            }
            i -= 1;
            if self.idx[i] < self.n - k + i {
                self.idx[i] += 1;
                for j in i + 1..k {
                    self.idx[j] = self.idx[j - 1] + 1;
                }
                break;
            }
        }
        Some(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::ConvexBody;

    fn triangle() -> ConvexBody {
        // x ≥ 0, y ≥ 0, x + y ≤ 1
        ConvexBody::polytope(
            vec![
                HalfSpace::new(vec![-1.0, 0.0], 0.0),
                HalfSpace::new(vec![0.0, -1.0], 0.0),
                HalfSpace::new(vec![1.0, 1.0], 1.0),
            ],
            PolytopeOptions::default(),
        )
        .unwrap()
    }

    #[test]
    fn combinations_count() {
        assert_eq!(Combinations::new(5, 2).count(), 10);
        assert_eq!(Combinations::new(6, 3).count(), 20);
        assert_eq!(binomial(10, 3), 120);
        // Beyond the enumeration cap the count saturates.
        assert_eq!(binomial(32, 8), u64::MAX);
    }

    #[test]
    fn triangle_geometry() {
        let t = triangle();
        assert!((t.diameter() - 2f64.sqrt()).abs() < 1e-12);
        let bb = t.bounding_box();
        assert!(bb.lo.iter().all(|v| v.abs() < 1e-12));
        assert!(bb.hi.iter().all(|v| (v - 1.0).abs() < 1e-12));
    }

    #[test]
    fn triangle_projection() {
        let t = triangle();
        let p = t.project(&[1.0, 1.0]).unwrap();
        assert!((p[0] - 0.5).abs() < 1e-10 && (p[1] - 0.5).abs() < 1e-10);
        assert!(t.contains(&p).unwrap());
        let q = t.project(&[-1.0, -2.0]).unwrap();
        assert!(q.iter().all(|v| v.abs() < 1e-10));
        let r = t.project(&[2.0, -0.5]).unwrap();
        assert!((r[0] - 1.0).abs() < 1e-10 && r[1].abs() < 1e-10);
    }

    #[test]
    fn triangle_normals() {
        let t = triangle();
        let n = t.supporting_normal(&[0.5, 0.5]).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!((n[0] + h).abs() < 1e-12 && (n[1] + h).abs() < 1e-12);
        let c = t.supporting_normal(&[0.0, 0.0]).unwrap();
        assert!((c[0] - h).abs() < 1e-12 && (c[1] - h).abs() < 1e-12);
    }

    #[test]
    fn unbounded_and_empty_rejected() {
        let open = ConvexBody::polytope(
            vec![
                HalfSpace::new(vec![-1.0, 0.0], 0.0),
                HalfSpace::new(vec![0.0, -1.0], 0.0),
            ],
            PolytopeOptions::default(),
        );
        assert!(matches!(open, Err(Error::InvalidBody(_))));
        let empty = ConvexBody::polytope(
            vec![
                HalfSpace::new(vec![1.0], -1.0),
                HalfSpace::new(vec![-1.0], -1.0),
            ],
            PolytopeOptions::default(),
        );
        assert!(empty.is_err());
        let flat = ConvexBody::polytope(
            vec![
                HalfSpace::new(vec![1.0], 0.0),
                HalfSpace::new(vec![-1.0], 0.0),
            ],
            PolytopeOptions::default(),
        );
        assert!(flat.is_err());
    }

    #[test]
    fn thin_simplex_uses_hit_and_run() {
        // The corner simplex x_i ≥ 0, Σx ≤ 1 in R^7 fills 1/7! of its box.
        let n = 7;
        let mut hs: Vec<HalfSpace> = (0..n)
            .map(|i| {
                let mut a = vec![0.0; n];
                a[i] = -1.0;
                HalfSpace::new(a, 0.0)
            })
            .collect();
        hs.push(HalfSpace::new(vec![1.0; n], 1.0));
        let body = ConvexBody::polytope(
            hs,
            PolytopeOptions {
                burn_in: Some(200),
                ..Default::default()
            },
        )
        .unwrap();
        let mut rng = replicate_stream(3, 0);
        let mut mean = vec![0.0; n];
        let draws = 2000;
        for _ in 0..draws {
            let s = body.sample_uniform(&mut rng).unwrap();
            assert_eq!(s.method, SampleMethod::HitAndRun);
            assert!(body.contains(&s.point).unwrap());
            linalg::axpy(1.0 / draws as f64, &s.point, &mut mean);
        }
        // Uniform on the simplex has mean 1/(n+1) per coordinate.
        for m in mean {
            assert!((m - 1.0 / 8.0).abs() < 0.02, "coordinate mean {m}");
        }
    }

    #[test]
    fn user_bbox_without_enumeration() {
        let opts = PolytopeOptions {
            diameter: Some(5.0),
            bounding_box: None,
            ..Default::default()
        };
        // Enumerable, so the supplied over-estimate is kept.
        let sq = ConvexBody::polytope(
            vec![
                HalfSpace::new(vec![1.0, 0.0], 1.0),
                HalfSpace::new(vec![-1.0, 0.0], 0.0),
                HalfSpace::new(vec![0.0, 1.0], 1.0),
                HalfSpace::new(vec![0.0, -1.0], 0.0),
            ],
            opts,
        )
        .unwrap();
        assert_eq!(sq.diameter(), 5.0);
        let too_small = ConvexBody::polytope(
            vec![
                HalfSpace::new(vec![1.0, 0.0], 1.0),
                HalfSpace::new(vec![-1.0, 0.0], 0.0),
                HalfSpace::new(vec![0.0, 1.0], 1.0),
                HalfSpace::new(vec![0.0, -1.0], 0.0),
            ],
            PolytopeOptions {
                diameter: Some(1.0),
                ..Default::default()
            },
        );
        assert!(too_small.is_err());
    }
}
