//! Finite-dimensional Hilbert-space geometry: points, bounded convex bodies
//! with closed-form metric projections, and a catalog of nonexpansive
//! operators. A second, exact mode carries finitely supported rational
//! sequences under the ℓ¹ norm for the shift counterexample.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::counterfn::CounterFn;

#[derive(Debug, Error)]
pub enum SpaceError {
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("mode mismatch: expected {expected} point")]
    ModeMismatch { expected: &'static str },
    #[error("projection is not supported in closed form for this body kind")]
    UnsupportedProjection,
    #[error("invalid body: {0}")]
    InvalidBody(String),
    #[error("invalid operator: {0}")]
    InvalidOperator(String),
    #[error("point has non-finite coordinates")]
    NonFinite,
}

/// Exact ℓ¹ vector: finitely supported map index → rational, zeros dropped.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct L1Vec {
    entries: BTreeMap<usize, BigRational>,
}

impl L1Vec {
    pub fn zero() -> Self {
        L1Vec {
            entries: BTreeMap::new(),
        }
    }

    pub fn from_entries(entries: impl IntoIterator<Item = (usize, BigRational)>) -> Self {
        let mut map = BTreeMap::new();
        for (i, v) in entries {
            if !v.is_zero() {
                map.insert(i, v);
            }
        }
        L1Vec { entries: map }
    }

    /// The vector (c, c, …, c) with `len` leading entries.
    pub fn constant_prefix(c: BigRational, len: usize) -> Self {
        Self::from_entries((0..len).map(|i| (i, c.clone())))
    }

    pub fn support(&self) -> impl Iterator<Item = (&usize, &BigRational)> {
        self.entries.iter()
    }

    pub fn shift(&self) -> Self {
        L1Vec {
            entries: self
                .entries
                .iter()
                .map(|(i, v)| (i + 1, v.clone()))
                .collect(),
        }
    }

    pub fn sub(&self, other: &L1Vec) -> L1Vec {
        let mut entries = self.entries.clone();
        for (i, v) in &other.entries {
            let slot = entries.entry(*i).or_insert_with(BigRational::zero);
            *slot -= v;
            if slot.is_zero() {
                entries.remove(i);
            }
        }
        L1Vec { entries }
    }

    pub fn norm_exact(&self) -> BigRational {
        self.entries
            .values()
            .fold(BigRational::zero(), |acc, v| acc + v.abs())
    }
}

/// A point in one of the two numeric regimes. Euclidean mode carries doubles
/// and the ℓ² norm; ℓ¹ mode carries exact rationals so the shift-operator
/// identities hold with zero tolerance.
#[derive(Clone, Debug, PartialEq)]
pub enum Point {
    Euclidean(Vec<f64>),
    L1(L1Vec),
}

impl Point {
    pub fn euclidean(coords: Vec<f64>) -> Result<Self, SpaceError> {
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(SpaceError::NonFinite);
        }
        Ok(Point::Euclidean(coords))
    }

    pub fn coords(&self) -> Result<&[f64], SpaceError> {
        match self {
            Point::Euclidean(c) => Ok(c),
            Point::L1(_) => Err(SpaceError::ModeMismatch {
                expected: "euclidean",
            }),
        }
    }

    pub fn l1(&self) -> Result<&L1Vec, SpaceError> {
        match self {
            Point::L1(v) => Ok(v),
            Point::Euclidean(_) => Err(SpaceError::ModeMismatch { expected: "l1" }),
        }
    }

    pub fn dim(&self) -> Option<usize> {
        match self {
            Point::Euclidean(c) => Some(c.len()),
            Point::L1(_) => None,
        }
    }

    /// Norm in the mode's own geometry: ℓ² for Euclidean, ℓ¹ (rounded to f64)
    /// for the exact mode.
    pub fn norm(&self) -> f64 {
        match self {
            Point::Euclidean(c) => c.iter().map(|x| x * x).sum::<f64>().sqrt(),
            Point::L1(v) => v.norm_exact().to_f64().unwrap_or(f64::INFINITY),
        }
    }

    pub fn distance(&self, other: &Point) -> Result<f64, SpaceError> {
        match (self, other) {
            (Point::Euclidean(a), Point::Euclidean(b)) => {
                if a.len() != b.len() {
                    return Err(SpaceError::DimensionMismatch(a.len(), b.len()));
                }
                Ok(a.iter()
                    .zip(b)
                    .map(|(x, y)| (x - y) * (x - y))
                    .sum::<f64>()
                    .sqrt())
            }
            (Point::L1(a), Point::L1(b)) => {
                Ok(a.sub(b).norm_exact().to_f64().unwrap_or(f64::INFINITY))
            }
            _ => Err(SpaceError::ModeMismatch {
                expected: "matching",
            }),
        }
    }

    pub fn dot(&self, other: &Point) -> Result<f64, SpaceError> {
        let (a, b) = (self.coords()?, other.coords()?);
        if a.len() != b.len() {
            return Err(SpaceError::DimensionMismatch(a.len(), b.len()));
        }
        Ok(a.iter().zip(b).map(|(x, y)| x * y).sum())
    }

    pub fn sub(&self, other: &Point) -> Result<Point, SpaceError> {
        match (self, other) {
            (Point::Euclidean(a), Point::Euclidean(b)) => {
                if a.len() != b.len() {
                    return Err(SpaceError::DimensionMismatch(a.len(), b.len()));
                }
                Ok(Point::Euclidean(a.iter().zip(b).map(|(x, y)| x - y).collect()))
            }
            (Point::L1(a), Point::L1(b)) => Ok(Point::L1(a.sub(b))),
            _ => Err(SpaceError::ModeMismatch {
                expected: "matching",
            }),
        }
    }
}

/// w_γ(u, v) = (1−γ)u + γv. A γ outside [0,1] is clamped (with a warning),
/// mirroring the truncation the interval parameterization performs.
pub fn convex_combine(gamma: f64, u: &Point, v: &Point) -> Result<Point, SpaceError> {
    let g = if !(0.0..=1.0).contains(&gamma) {
        log::warn!("convex_combine: gamma {gamma} outside [0,1], clamping");
        gamma.clamp(0.0, 1.0)
    } else {
        gamma
    };
    let (a, b) = (u.coords()?, v.coords()?);
    if a.len() != b.len() {
        return Err(SpaceError::DimensionMismatch(a.len(), b.len()));
    }
    Ok(Point::Euclidean(
        a.iter().zip(b).map(|(x, y)| (1.0 - g) * x + g * y).collect(),
    ))
}

/// Closed halfspace ⟨normal, x⟩ ≤ offset.
#[derive(Clone, Debug)]
pub struct Halfspace {
    pub normal: Vec<f64>,
    pub offset: f64,
}

#[derive(Clone, Debug)]
pub enum BodyKind {
    Ball {
        center: Vec<f64>,
        radius: f64,
    },
    Box {
        lower: Vec<f64>,
        upper: Vec<f64>,
    },
    Segment {
        start: Vec<f64>,
        end: Vec<f64>,
    },
    /// Intersection of halfspaces clipped to an explicit bounding box; the box
    /// both makes the body bounded and gives the sampler a frame.
    HalfspaceIntersection {
        halfspaces: Vec<Halfspace>,
        lower: Vec<f64>,
        upper: Vec<f64>,
    },
}

/// A bounded closed convex body with a verified integer diameter bound `b`.
#[derive(Clone, Debug)]
pub struct ConvexBody {
    kind: BodyKind,
    diameter_bound: u64,
}

fn sq_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum()
}

impl ConvexBody {
    pub fn new(kind: BodyKind, diameter_bound: u64) -> Result<Self, SpaceError> {
        if diameter_bound == 0 {
            return Err(SpaceError::InvalidBody(
                "diameter bound b must be a positive integer".into(),
            ));
        }
        let b = diameter_bound as f64;
        let diam = match &kind {
            BodyKind::Ball { center, radius } => {
                if !(*radius > 0.0) || center.iter().any(|c| !c.is_finite()) {
                    return Err(SpaceError::InvalidBody("ball needs a positive radius".into()));
                }
                2.0 * radius
            }
            BodyKind::Box { lower, upper } => {
                if lower.len() != upper.len() || lower.is_empty() {
                    return Err(SpaceError::InvalidBody("box bounds length mismatch".into()));
                }
                if lower.iter().zip(upper).any(|(l, u)| l > u) {
                    return Err(SpaceError::InvalidBody("box lower above upper".into()));
                }
                lower
                    .iter()
                    .zip(upper)
                    .map(|(l, u)| (u - l) * (u - l))
                    .sum::<f64>()
                    .sqrt()
            }
            BodyKind::Segment { start, end } => {
                if start.len() != end.len() {
                    return Err(SpaceError::InvalidBody("segment endpoint mismatch".into()));
                }
                start
                    .iter()
                    .zip(end)
                    .map(|(a, c)| (a - c) * (a - c))
                    .sum::<f64>()
                    .sqrt()
            }
            BodyKind::HalfspaceIntersection { lower, upper, halfspaces } => {
                if lower.len() != upper.len() || halfspaces.is_empty() {
                    return Err(SpaceError::InvalidBody(
                        "halfspace intersection needs halfspaces and a bounding box".into(),
                    ));
                }
                lower
                    .iter()
                    .zip(upper)
                    .map(|(l, u)| (u - l) * (u - l))
                    .sum::<f64>()
                    .sqrt()
            }
        };
        if diam > b + 1e-12 {
            return Err(SpaceError::InvalidBody(format!(
                "diameter {diam} exceeds declared bound {diameter_bound}"
            )));
        }
        Ok(ConvexBody {
            kind,
            diameter_bound,
        })
    }

    pub fn kind(&self) -> &BodyKind {
        &self.kind
    }

    pub fn diameter_bound(&self) -> u64 {
        self.diameter_bound
    }

    pub fn dim(&self) -> usize {
        match &self.kind {
            BodyKind::Ball { center, .. } => center.len(),
            BodyKind::Box { lower, .. } => lower.len(),
            BodyKind::Segment { start, .. } => start.len(),
            BodyKind::HalfspaceIntersection { lower, .. } => lower.len(),
        }
    }

    pub fn center(&self) -> Point {
        let c = match &self.kind {
            BodyKind::Ball { center, .. } => center.clone(),
            BodyKind::Box { lower, upper } => lower
                .iter()
                .zip(upper)
                .map(|(l, u)| 0.5 * (l + u))
                .collect(),
            BodyKind::Segment { start, end } => start
                .iter()
                .zip(end)
                .map(|(a, b)| 0.5 * (a + b))
                .collect(),
            BodyKind::HalfspaceIntersection { lower, upper, .. } => lower
                .iter()
                .zip(upper)
                .map(|(l, u)| 0.5 * (l + u))
                .collect(),
        };
        Point::Euclidean(c)
    }

    pub fn contains(&self, p: &Point, tol: f64) -> bool {
        let x = match p.coords() {
            Ok(x) => x,
            Err(_) => return false,
        };
        if x.len() != self.dim() {
            return false;
        }
        match &self.kind {
            BodyKind::Ball { center, radius } => {
                let d: f64 = x
                    .iter()
                    .zip(center)
                    .map(|(a, c)| (a - c) * (a - c))
                    .sum::<f64>()
                    .sqrt();
                d <= radius + tol
            }
            BodyKind::Box { lower, upper } => x
                .iter()
                .zip(lower.iter().zip(upper))
                .all(|(v, (l, u))| *v >= l - tol && *v <= u + tol),
            BodyKind::Segment { start, end } => {
                let proj = project_segment(start, end, x);
                proj.iter()
                    .zip(x)
                    .map(|(p, v)| (p - v) * (p - v))
                    .sum::<f64>()
                    .sqrt()
                    <= tol
            }
            BodyKind::HalfspaceIntersection { halfspaces, lower, upper } => {
                let in_box = x
                    .iter()
                    .zip(lower.iter().zip(upper))
                    .all(|(v, (l, u))| *v >= l - tol && *v <= u + tol);
                in_box
                    && halfspaces.iter().all(|h| {
                        x.iter().zip(&h.normal).map(|(a, n)| a * n).sum::<f64>()
                            <= h.offset + tol
                    })
            }
        }
    }

    /// Metric projection, closed form per body kind. Halfspace intersections
    /// have no closed form and report an error rather than an iterative
    /// approximation, keeping projection error out of tolerance budgets.
    pub fn project(&self, p: &Point) -> Result<Point, SpaceError> {
        let x = p.coords()?;
        if x.len() != self.dim() {
            return Err(SpaceError::DimensionMismatch(x.len(), self.dim()));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(SpaceError::NonFinite);
        }
        let out = match &self.kind {
            BodyKind::Ball { center, radius } => {
                let diff: Vec<f64> = x.iter().zip(center).map(|(a, c)| a - c).collect();
                let d = sq_norm(&diff).sqrt();
                if d <= *radius {
                    x.to_vec()
                } else {
                    let scale = radius / d;
                    center
                        .iter()
                        .zip(&diff)
                        .map(|(c, v)| c + scale * v)
                        .collect()
                }
            }
            BodyKind::Box { lower, upper } => x
                .iter()
                .zip(lower.iter().zip(upper))
                .map(|(v, (l, u))| v.clamp(*l, *u))
                .collect(),
            BodyKind::Segment { start, end } => project_segment(start, end, x),
            BodyKind::HalfspaceIntersection { .. } => {
                return Err(SpaceError::UnsupportedProjection)
            }
        };
        Ok(Point::Euclidean(out))
    }

    /// Extreme/anchor points fed to the sampler ahead of random fill.
    pub fn anchor_points(&self) -> Vec<Point> {
        let mut pts = vec![self.center()];
        match &self.kind {
            BodyKind::Ball { center, radius } => {
                for i in 0..center.len() {
                    for sign in [1.0, -1.0] {
                        let mut c = center.clone();
                        c[i] += sign * radius;
                        pts.push(Point::Euclidean(c));
                    }
                }
            }
            BodyKind::Box { lower, upper } => {
                let dim = lower.len();
                let corners = 1usize << dim.min(10);
                for mask in 0..corners {
                    let c: Vec<f64> = (0..dim)
                        .map(|i| if mask >> i & 1 == 1 { upper[i] } else { lower[i] })
                        .collect();
                    pts.push(Point::Euclidean(c));
                }
            }
            BodyKind::Segment { start, end } => {
                pts.push(Point::Euclidean(start.clone()));
                pts.push(Point::Euclidean(end.clone()));
            }
            BodyKind::HalfspaceIntersection { .. } => {}
        }
        pts.retain(|p| self.contains(p, 1e-9));
        pts
    }
}

fn project_segment(start: &[f64], end: &[f64], x: &[f64]) -> Vec<f64> {
    let dir: Vec<f64> = end.iter().zip(start).map(|(e, s)| e - s).collect();
    let len2 = sq_norm(&dir);
    if len2 == 0.0 {
        return start.to_vec();
    }
    let t = x
        .iter()
        .zip(start)
        .zip(&dir)
        .map(|((v, s), d)| (v - s) * d)
        .sum::<f64>()
        / len2;
    let t = t.clamp(0.0, 1.0);
    start
        .iter()
        .zip(&dir)
        .map(|(s, d)| s + t * d)
        .collect()
}

/// Affine representation A·x + c of an operator, used for exact resolvent
/// solves. Row-major square matrix.
#[derive(Clone, Debug)]
pub struct AffineMap {
    pub matrix: Vec<f64>,
    pub offset: Vec<f64>,
    pub dim: usize,
}

impl AffineMap {
    fn identity(dim: usize) -> Self {
        let mut matrix = vec![0.0; dim * dim];
        for i in 0..dim {
            matrix[i * dim + i] = 1.0;
        }
        AffineMap {
            matrix,
            offset: vec![0.0; dim],
            dim,
        }
    }

    fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut out = self.offset.clone();
        for i in 0..self.dim {
            let row = &self.matrix[i * self.dim..(i + 1) * self.dim];
            out[i] += row.iter().zip(x).map(|(a, b)| a * b).sum::<f64>();
        }
        out
    }

    /// self ∘ other
    fn compose(&self, other: &AffineMap) -> AffineMap {
        let d = self.dim;
        let mut matrix = vec![0.0; d * d];
        for i in 0..d {
            for j in 0..d {
                let mut acc = 0.0;
                for k in 0..d {
                    acc += self.matrix[i * d + k] * other.matrix[k * d + j];
                }
                matrix[i * d + j] = acc;
            }
        }
        let offset: Vec<f64> = {
            let tmp = self.apply(&other.offset);
            tmp
        };
        AffineMap {
            matrix,
            offset,
            dim: d,
        }
    }

    fn scaled_add(&mut self, other: &AffineMap, w: f64) {
        for (a, b) in self.matrix.iter_mut().zip(&other.matrix) {
            *a += w * b;
        }
        for (a, b) in self.offset.iter_mut().zip(&other.offset) {
            *a += w * b;
        }
    }
}

/// The operator catalog. Every built-in kind is nonexpansive in its mode's
/// norm; every Euclidean kind except the ℓ¹ shift maps its configured body
/// into itself when constructed consistently with it.
#[derive(Clone, Debug)]
pub enum Operator {
    Identity,
    Constant(Point),
    /// Rotation by `angle` radians in the coordinate plane `(i, j)` about
    /// `center`; coordinates outside the plane are fixed.
    Rotation {
        angle: f64,
        center: Vec<f64>,
        plane: (usize, usize),
    },
    /// Reflection across the hyperplane ⟨normal, x⟩ = offset.
    Reflection { normal: Vec<f64>, offset: f64 },
    MetricProjection(ConvexBody),
    /// Applied left to right: the first operator acts first.
    Composition(Vec<Operator>),
    ConvexCombination(Vec<(f64, Operator)>),
    /// x ↦ 2·center − x
    PointNegation { center: Vec<f64> },
    /// (x₀, x₁, …) ↦ (0, x₀, x₁, …) on exact ℓ¹ vectors.
    L1Shift,
}

impl Operator {
    pub fn rotation_about_origin(angle_deg: f64, dim: usize) -> Self {
        Operator::Rotation {
            angle: angle_deg.to_radians(),
            center: vec![0.0; dim],
            plane: (0, 1),
        }
    }

    pub fn apply(&self, x: &Point) -> Result<Point, SpaceError> {
        match self {
            Operator::Identity => Ok(x.clone()),
            Operator::Constant(c) => match (c, x) {
                (Point::Euclidean(cv), Point::Euclidean(xv)) if cv.len() == xv.len() => {
                    Ok(c.clone())
                }
                (Point::Euclidean(cv), Point::Euclidean(xv)) => {
                    Err(SpaceError::DimensionMismatch(cv.len(), xv.len()))
                }
                _ => Err(SpaceError::ModeMismatch {
                    expected: "euclidean",
                }),
            },
            Operator::Rotation { angle, center, plane } => {
                let xv = x.coords()?;
                if xv.len() != center.len() || plane.0.max(plane.1) >= xv.len() {
                    return Err(SpaceError::DimensionMismatch(xv.len(), center.len()));
                }
                let (i, j) = *plane;
                let (c, s) = (angle.cos(), angle.sin());
                let mut out: Vec<f64> = xv.to_vec();
                let u = xv[i] - center[i];
                let v = xv[j] - center[j];
                out[i] = center[i] + c * u - s * v;
                out[j] = center[j] + s * u + c * v;
                Ok(Point::Euclidean(out))
            }
            Operator::Reflection { normal, offset } => {
                let xv = x.coords()?;
                if xv.len() != normal.len() {
                    return Err(SpaceError::DimensionMismatch(xv.len(), normal.len()));
                }
                let n2 = sq_norm(normal);
                if n2 == 0.0 {
                    return Err(SpaceError::InvalidOperator("zero reflection normal".into()));
                }
                let t = 2.0 * (xv.iter().zip(normal).map(|(a, n)| a * n).sum::<f64>() - offset)
                    / n2;
                Ok(Point::Euclidean(
                    xv.iter().zip(normal).map(|(a, n)| a - t * n).collect(),
                ))
            }
            Operator::MetricProjection(body) => body.project(x),
            Operator::Composition(ops) => {
                let mut cur = x.clone();
                for op in ops {
                    cur = op.apply(&cur)?;
                }
                Ok(cur)
            }
            Operator::ConvexCombination(parts) => {
                let total: f64 = parts.iter().map(|(w, _)| w).sum();
                if parts.iter().any(|(w, _)| *w < 0.0) || (total - 1.0).abs() > 1e-9 {
                    return Err(SpaceError::InvalidOperator(
                        "convex combination weights must be nonnegative and sum to 1".into(),
                    ));
                }
                let dim = x.coords()?.len();
                let mut acc = vec![0.0; dim];
                for (w, op) in parts {
                    let y = op.apply(x)?;
                    for (a, b) in acc.iter_mut().zip(y.coords()?) {
                        *a += w * b;
                    }
                }
                Ok(Point::Euclidean(acc))
            }
            Operator::PointNegation { center } => {
                let xv = x.coords()?;
                if xv.len() != center.len() {
                    return Err(SpaceError::DimensionMismatch(xv.len(), center.len()));
                }
                Ok(Point::Euclidean(
                    center.iter().zip(xv).map(|(c, v)| 2.0 * c - v).collect(),
                ))
            }
            Operator::L1Shift => Ok(Point::L1(x.l1()?.shift())),
        }
    }

    /// Affine decomposition A·x + c when the operator is affine, enabling the
    /// exact resolvent solve. Projections are only piecewise affine and return
    /// `None`.
    pub fn affine_map(&self, dim: usize) -> Option<AffineMap> {
        match self {
            Operator::Identity => Some(AffineMap::identity(dim)),
            Operator::Constant(c) => {
                let cv = c.coords().ok()?;
                Some(AffineMap {
                    matrix: vec![0.0; dim * dim],
                    offset: cv.to_vec(),
                    dim,
                })
            }
            Operator::Rotation { angle, center, plane } => {
                if center.len() != dim || plane.0.max(plane.1) >= dim {
                    return None;
                }
                let mut m = AffineMap::identity(dim);
                let (i, j) = *plane;
                let (c, s) = (angle.cos(), angle.sin());
                m.matrix[i * dim + i] = c;
                m.matrix[i * dim + j] = -s;
                m.matrix[j * dim + i] = s;
                m.matrix[j * dim + j] = c;
                // offset = center − R·center
                let rc = m.apply(center);
                m.offset = center.iter().zip(&rc).map(|(a, b)| a - b).collect();
                Some(m)
            }
            Operator::Reflection { normal, offset } => {
                if normal.len() != dim {
                    return None;
                }
                let n2 = sq_norm(normal);
                let mut m = AffineMap::identity(dim);
                for i in 0..dim {
                    for j in 0..dim {
                        m.matrix[i * dim + j] -= 2.0 * normal[i] * normal[j] / n2;
                    }
                }
                m.offset = normal.iter().map(|n| 2.0 * offset * n / n2).collect();
                Some(m)
            }
            Operator::PointNegation { center } => {
                if center.len() != dim {
                    return None;
                }
                let mut m = AffineMap::identity(dim);
                for v in m.matrix.iter_mut() {
                    *v = -*v;
                }
                m.offset = center.iter().map(|c| 2.0 * c).collect();
                Some(m)
            }
            Operator::Composition(ops) => {
                let mut acc = AffineMap::identity(dim);
                for op in ops {
                    let m = op.affine_map(dim)?;
                    acc = m.compose(&acc);
                }
                Some(acc)
            }
            Operator::ConvexCombination(parts) => {
                let mut acc = AffineMap {
                    matrix: vec![0.0; dim * dim],
                    offset: vec![0.0; dim],
                    dim,
                };
                for (w, op) in parts {
                    let m = op.affine_map(dim)?;
                    acc.scaled_add(&m, *w);
                }
                Some(acc)
            }
            Operator::MetricProjection(_) | Operator::L1Shift => None,
        }
    }

    /// Exactly known fixed points of the built-in kinds, used to seed lemma
    /// premises that random sampling almost never satisfies.
    pub fn known_fixed_points(&self, body: &ConvexBody) -> Vec<Point> {
        let mut pts = Vec::new();
        match self {
            Operator::Identity => pts.extend(body.anchor_points()),
            Operator::Constant(c) => pts.push(c.clone()),
            Operator::Rotation { center, .. } => pts.push(Point::Euclidean(center.clone())),
            Operator::PointNegation { center } => pts.push(Point::Euclidean(center.clone())),
            Operator::MetricProjection(target) => {
                for p in target.anchor_points() {
                    pts.push(p);
                }
            }
            Operator::Reflection { normal, offset } => {
                // Points of the mirror hyperplane: project anchors onto it.
                let n2 = sq_norm(normal);
                for p in body.anchor_points() {
                    if let Ok(xv) = p.coords() {
                        let t = (xv.iter().zip(normal).map(|(a, n)| a * n).sum::<f64>()
                            - offset)
                            / n2;
                        let proj: Vec<f64> =
                            xv.iter().zip(normal).map(|(a, n)| a - t * n).collect();
                        pts.push(Point::Euclidean(proj));
                    }
                }
            }
            Operator::Composition(_) | Operator::ConvexCombination(_) | Operator::L1Shift => {}
        }
        pts.retain(|p| {
            body.contains(p, 1e-9)
                && self
                    .apply(p)
                    .and_then(|y| y.distance(p))
                    .map(|d| d <= 1e-9)
                    .unwrap_or(false)
        });
        pts
    }

    pub fn describe(&self) -> String {
        match self {
            Operator::Identity => "identity".into(),
            Operator::Constant(_) => "constant".into(),
            Operator::Rotation { angle, .. } => {
                format!("rotation-{:.1}deg", angle.to_degrees())
            }
            Operator::Reflection { .. } => "reflection".into(),
            Operator::MetricProjection(_) => "projection".into(),
            Operator::Composition(ops) => format!(
                "compose({})",
                ops.iter().map(|o| o.describe()).collect::<Vec<_>>().join(",")
            ),
            Operator::ConvexCombination(_) => "convex-combination".into(),
            Operator::PointNegation { .. } => "point-negation".into(),
            Operator::L1Shift => "l1-shift".into(),
        }
    }
}

/// Residual ‖op(x) − x‖ in the point's own norm.
pub fn residual(op: &Operator, x: &Point) -> Result<f64, SpaceError> {
    let y = op.apply(x)?;
    y.distance(x)
}

/// Exact ℓ¹ residual, zero-tolerance variant for the shift counterexample.
pub fn residual_exact(op: &Operator, x: &L1Vec) -> Result<BigRational, SpaceError> {
    let y = op.apply(&Point::L1(x.clone()))?;
    Ok(y.l1()?.sub(x).norm_exact())
}

/// θ(x) = −‖x‖₁, the bounded continuous functional of the shift
/// counterexample, as an exact rational.
pub fn theta_exact(x: &L1Vec) -> BigRational {
    -x.norm_exact()
}

/// Deterministic sampler: the body's anchor points (center first, then
/// extremes), caller-supplied adversarial points, then seeded random fill.
pub fn sample_points(body: &ConvexBody, count: usize, seed: u64) -> Vec<Point> {
    sample_points_with(body, count, seed, &[])
}

pub fn sample_points_with(
    body: &ConvexBody,
    count: usize,
    seed: u64,
    extra: &[Point],
) -> Vec<Point> {
    let mut out: Vec<Point> = Vec::with_capacity(count);
    for p in body.anchor_points() {
        if out.len() == count {
            return out;
        }
        out.push(p);
    }
    for p in extra {
        if out.len() == count {
            return out;
        }
        if body.contains(p, 1e-9) {
            out.push(p.clone());
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    while out.len() < count {
        out.push(random_member(body, &mut rng));
    }
    out
}

fn random_member(body: &ConvexBody, rng: &mut ChaCha8Rng) -> Point {
    match body.kind() {
        BodyKind::Ball { center, radius } => loop {
            let v: Vec<f64> = center
                .iter()
                .map(|c| c + radius * (rng.gen::<f64>() * 2.0 - 1.0))
                .collect();
            let p = Point::Euclidean(v);
            if body.contains(&p, 0.0) {
                return p;
            }
        },
        BodyKind::Box { lower, upper } => {
            let v: Vec<f64> = lower
                .iter()
                .zip(upper)
                .map(|(l, u)| l + (u - l) * rng.gen::<f64>())
                .collect();
            Point::Euclidean(v)
        }
        BodyKind::Segment { start, end } => {
            let t: f64 = rng.gen();
            Point::Euclidean(
                start
                    .iter()
                    .zip(end)
                    .map(|(s, e)| s + t * (e - s))
                    .collect(),
            )
        }
        BodyKind::HalfspaceIntersection { lower, upper, .. } => loop {
            let v: Vec<f64> = lower
                .iter()
                .zip(upper)
                .map(|(l, u)| l + (u - l) * rng.gen::<f64>())
                .collect();
            let p = Point::Euclidean(v);
            if body.contains(&p, 0.0) {
                return p;
            }
        },
    }
}

/// A finite family T_0, …, T_{ℓ−1} of nonexpansive operators with the optional
/// modulus τ for the common-fixed-point condition.
#[derive(Clone, Debug)]
pub struct OperatorFamily {
    operators: Vec<Operator>,
    tau: Option<CounterFn>,
}

impl OperatorFamily {
    pub fn new(operators: Vec<Operator>, tau: Option<CounterFn>) -> Result<Self, SpaceError> {
        if operators.is_empty() {
            return Err(SpaceError::InvalidOperator(
                "operator family must contain at least one operator".into(),
            ));
        }
        if let Some(t) = &tau {
            if !t.is_monotone() {
                return Err(SpaceError::InvalidOperator(
                    "tau modulus must be monotone".into(),
                ));
            }
        }
        Ok(OperatorFamily { operators, tau })
    }

    pub fn ell(&self) -> u64 {
        self.operators.len() as u64
    }

    pub fn operators(&self) -> &[Operator] {
        &self.operators
    }

    pub fn tau(&self) -> Option<&CounterFn> {
        self.tau.as_ref()
    }

    /// U_n = T_{n mod ℓ}
    pub fn cyclic(&self, n: u64) -> &Operator {
        &self.operators[(n % self.ell()) as usize]
    }
}

/// Exact rational 1/(n+1), handy for the ℓ¹ identities.
pub fn unit_fraction(n: u64) -> BigRational {
    BigRational::new(BigInt::from(1), BigInt::from(n + 1))
}
