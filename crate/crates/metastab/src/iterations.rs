//! The three iteration schemes with per-step residual records.
//!
//! The resolvent sequence solves, for each n, the fixed-point equation of the
//! strict contraction U_n(x) = (1−1/(n+1))U(x) + (1/(n+1))v₀ with a certified
//! inner accuracy; affine operators get an exact linear solve so the Picard
//! cost does not blow up for large n. The Halpern and cyclic sequences are
//! plain recurrences.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::counterfn::LambdaSeq;
use crate::space::{convex_combine, ConvexBody, Operator, OperatorFamily, Point, SpaceError};

#[derive(Debug, Error)]
pub enum IterError {
    #[error(transparent)]
    Space(#[from] SpaceError),
    #[error("resolvent solver did not converge within {0} iterations; the operator may expand or leave the body")]
    NonConvergence(u64),
    #[error("start point lies outside the body")]
    StartOutsideBody,
    #[error("iterate left the body at step {0} (violation {1:.3e})")]
    LeftBody(u64, f64),
    #[error("resolvent linear system is singular")]
    SingularSystem,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Scheme {
    Browder,
    Halpern,
    Bauschke,
}

impl Scheme {
    pub fn name(&self) -> &'static str {
        match self {
            Scheme::Browder => "browder",
            Scheme::Halpern => "halpern",
            Scheme::Bauschke => "bauschke",
        }
    }
}

/// Computed prefix u_0..u_N of an iteration with residual records.
#[derive(Clone, Debug)]
pub struct IterationTrace {
    pub scheme: Scheme,
    pub points: Vec<Point>,
    /// ‖U(u_n)−u_n‖; for the cyclic scheme, the max over the family.
    pub residuals: Vec<f64>,
    /// ‖T_i(u_n)−u_n‖ per operator, cyclic scheme only.
    pub per_op_residuals: Vec<Vec<f64>>,
    /// Guaranteed inner-solver error per step, resolvent scheme only.
    pub solver_certs: Vec<f64>,
    /// Human-readable snapshot of how the trace was produced.
    pub config: String,
}

impl IterationTrace {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn cert(&self, n: usize) -> f64 {
        self.solver_certs.get(n).copied().unwrap_or(0.0)
    }
}

/// Inner-solver accuracy schedule ε_n = min(floor, 1/(10(n+1)²)); the default
/// floor keeps solver error negligible against the 1/(n+1)-scale quantities
/// under test.
#[derive(Clone, Copy, Debug)]
pub struct EpsSchedule {
    pub floor: f64,
}

impl Default for EpsSchedule {
    fn default() -> Self {
        EpsSchedule { floor: 1e-10 }
    }
}

impl EpsSchedule {
    pub fn eps(&self, n: u64) -> f64 {
        let n1 = n as f64 + 1.0;
        self.floor.min(1.0 / (10.0 * n1 * n1))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SolveMethod {
    ExactLinear,
    Picard,
}

#[derive(Clone, Debug)]
pub struct Resolvent {
    pub point: Point,
    pub certified_error: f64,
    pub method: SolveMethod,
}

fn resolvent_apply(op: &Operator, v0: &Point, n: u64, x: &Point) -> Result<Point, SpaceError> {
    let lambda = 1.0 / (n as f64 + 1.0);
    let ux = op.apply(x)?;
    convex_combine(lambda, &ux, v0)
}

/// Fixed point of U_n(x) = (1−1/(n+1))U(x) + (1/(n+1))v₀, certified to `eps`.
///
/// Affine operators are solved exactly; the certificate then reflects only
/// the floating-point residual of the solved system. Otherwise Picard
/// iteration runs until the successive-step distance drops below eps·(1−q)
/// with q = n/(n+1), which certifies ‖x̃ − u_n‖ ≤ eps.
pub fn solve_resolvent(
    op: &Operator,
    body: &ConvexBody,
    v0: &Point,
    n: u64,
    eps: f64,
) -> Result<Resolvent, IterError> {
    solve_resolvent_with(op, body, v0, n, eps, true)
}

pub fn solve_resolvent_with(
    op: &Operator,
    body: &ConvexBody,
    v0: &Point,
    n: u64,
    eps: f64,
    allow_exact: bool,
) -> Result<Resolvent, IterError> {
    if !body.contains(v0, 1e-9) {
        return Err(IterError::StartOutsideBody);
    }
    let dim = body.dim();
    let lambda = 1.0 / (n as f64 + 1.0);
    let q = 1.0 - lambda;
    if allow_exact {
        if let Some(am) = op.affine_map(dim) {
            // (I − q·A) x = q·c + λ·v₀
            let mut m = DMatrix::<f64>::identity(dim, dim);
            for i in 0..dim {
                for j in 0..dim {
                    m[(i, j)] -= q * am.matrix[i * dim + j];
                }
            }
            let v0c = v0.coords()?;
            let rhs = DVector::<f64>::from_iterator(
                dim,
                (0..dim).map(|i| q * am.offset[i] + lambda * v0c[i]),
            );
            let solved = m.lu().solve(&rhs).ok_or(IterError::SingularSystem)?;
            let point = Point::Euclidean(solved.iter().copied().collect());
            let recomputed = resolvent_apply(op, v0, n, &point)?;
            let resid = recomputed.distance(&point)?;
            let certified_error = resid * (n as f64 + 1.0);
            return Ok(Resolvent {
                point,
                certified_error,
                method: SolveMethod::ExactLinear,
            });
        }
    }
    // Picard iteration with contraction factor q.
    let target = eps * (1.0 - q);
    let b = body.diameter_bound() as f64;
    let bound_steps = if q < 1.0 {
        ((b / target).ln() / -(q.ln())).ceil().max(1.0) as u64
    } else {
        u64::MAX
    };
    let budget = bound_steps.saturating_mul(2).saturating_add(100);
    let mut x = v0.clone();
    for _ in 0..budget {
        let next = resolvent_apply(op, v0, n, &x)?;
        let step = next.distance(&x)?;
        if step <= target {
            return Ok(Resolvent {
                point: next,
                certified_error: eps,
                method: SolveMethod::Picard,
            });
        }
        x = next;
    }
    Err(IterError::NonConvergence(budget))
}

fn push_checked(
    points: &mut Vec<Point>,
    body: &ConvexBody,
    p: Point,
    n: u64,
) -> Result<(), IterError> {
    if !body.contains(&p, 1e-9) {
        let proj = body.project(&p).ok();
        let viol = proj
            .and_then(|q| q.distance(&p).ok())
            .unwrap_or(f64::INFINITY);
        return Err(IterError::LeftBody(n, viol));
    }
    points.push(p);
    Ok(())
}

/// u_n = fixed point of the n-th resolvent, for n = 0..=n_end.
pub fn browder_sequence(
    op: &Operator,
    body: &ConvexBody,
    v0: &Point,
    n_end: u64,
    eps: &EpsSchedule,
) -> Result<IterationTrace, IterError> {
    let mut points = Vec::with_capacity(n_end as usize + 1);
    let mut residuals = Vec::with_capacity(n_end as usize + 1);
    let mut certs = Vec::with_capacity(n_end as usize + 1);
    for n in 0..=n_end {
        let sol = solve_resolvent(op, body, v0, n, eps.eps(n))?;
        let r = crate::space::residual(op, &sol.point)?;
        residuals.push(r);
        certs.push(sol.certified_error);
        push_checked(&mut points, body, sol.point, n)?;
    }
    Ok(IterationTrace {
        scheme: Scheme::Browder,
        points,
        residuals,
        per_op_residuals: Vec::new(),
        solver_certs: certs,
        config: format!("browder op={} N={n_end}", op.describe()),
    })
}

/// u_{n+1} = λ_{n+1}·u₀ + (1−λ_{n+1})·U(u_n)
pub fn halpern_sequence(
    op: &Operator,
    body: &ConvexBody,
    u0: &Point,
    lambda: &LambdaSeq,
    n_end: u64,
) -> Result<IterationTrace, IterError> {
    if !body.contains(u0, 1e-9) {
        return Err(IterError::StartOutsideBody);
    }
    let mut points = Vec::with_capacity(n_end as usize + 1);
    let mut residuals = Vec::with_capacity(n_end as usize + 1);
    let mut current = u0.clone();
    points.push(current.clone());
    for n in 0..n_end {
        let ux = op.apply(&current)?;
        residuals.push(ux.distance(&current)?);
        let l = lambda.value_f64(n + 1);
        let next = convex_combine(l, &ux, u0)?;
        push_checked(&mut points, body, next.clone(), n + 1)?;
        current = next;
    }
    let ux = op.apply(&current)?;
    residuals.push(ux.distance(&current)?);
    Ok(IterationTrace {
        scheme: Scheme::Halpern,
        points,
        residuals,
        per_op_residuals: Vec::new(),
        solver_certs: Vec::new(),
        config: format!("halpern op={} N={n_end}", op.describe()),
    })
}

/// u_{n+1} = λ_{n+1}·u₀ + (1−λ_{n+1})·T_{(n+1) mod ℓ}(u_n), with per-operator
/// residuals recorded at every step.
pub fn bauschke_sequence(
    family: &OperatorFamily,
    body: &ConvexBody,
    u0: &Point,
    lambda: &LambdaSeq,
    n_end: u64,
) -> Result<IterationTrace, IterError> {
    if !body.contains(u0, 1e-9) {
        return Err(IterError::StartOutsideBody);
    }
    let ell = family.ell() as usize;
    let mut points = Vec::with_capacity(n_end as usize + 1);
    let mut residuals = Vec::with_capacity(n_end as usize + 1);
    let mut per_op = Vec::with_capacity(n_end as usize + 1);
    let mut current = u0.clone();
    points.push(current.clone());
    for n in 0..=n_end {
        let mut row = Vec::with_capacity(ell);
        for i in 0..ell {
            row.push(crate::space::residual(&family.operators()[i], &current)?);
        }
        residuals.push(row.iter().cloned().fold(0.0f64, f64::max));
        per_op.push(row);
        if n == n_end {
            break;
        }
        let t = family.cyclic(n + 1).apply(&current)?;
        let l = lambda.value_f64(n + 1);
        let next = convex_combine(l, &t, u0)?;
        push_checked(&mut points, body, next.clone(), n + 1)?;
        current = next;
    }
    Ok(IterationTrace {
        scheme: Scheme::Bauschke,
        points,
        residuals,
        per_op_residuals: per_op,
        solver_certs: Vec::new(),
        config: format!("bauschke ell={ell} N={n_end}"),
    })
}

/// One step of a streamed cyclic iteration.
pub struct StepView<'a> {
    pub n: u64,
    pub u: &'a Point,
    /// u_{n−ℓ}, once n ≥ ℓ.
    pub back_ell: Option<&'a Point>,
    /// ‖u_n − U_n(u_{n−1})‖ for n ≥ 1; this is λ_n‖u₀ − U_n(u_{n−1})‖.
    pub step_gap: Option<f64>,
}

/// Stream the cyclic iteration to `n_end` without materializing the trace;
/// the visitor sees every index once, in order. Memory stays O(ℓ).
pub fn bauschke_scan<F>(
    family: &OperatorFamily,
    body: &ConvexBody,
    u0: &Point,
    lambda: &LambdaSeq,
    n_end: u64,
    mut visitor: F,
) -> Result<(), IterError>
where
    F: FnMut(StepView<'_>),
{
    if !body.contains(u0, 1e-9) {
        return Err(IterError::StartOutsideBody);
    }
    let ell = family.ell() as usize;
    // Ring of the last ℓ points u_{n−ℓ}..u_{n−1}, oldest first.
    let mut ring: Vec<Point> = Vec::with_capacity(ell);
    let mut current = u0.clone();
    let mut step_gap: Option<f64> = None;
    for n in 0..=n_end {
        let back = if ring.len() == ell { ring.first() } else { None };
        visitor(StepView {
            n,
            u: &current,
            back_ell: back,
            step_gap,
        });
        if n == n_end {
            break;
        }
        let t = family.cyclic(n + 1).apply(&current)?;
        let l = lambda.value_f64(n + 1);
        let next = convex_combine(l, &t, u0)?;
        if !body.contains(&next, 1e-9) {
            return Err(IterError::LeftBody(n + 1, f64::NAN));
        }
        step_gap = Some(next.distance(&t)?);
        if ring.len() == ell {
            ring.remove(0);
        }
        ring.push(current.clone());
        current = next;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::BodyKind;

    fn ball_half() -> ConvexBody {
        ConvexBody::new(
            BodyKind::Ball {
                center: vec![0.0, 0.0],
                radius: 0.5,
            },
            1,
        )
        .unwrap()
    }

    fn v0() -> Point {
        Point::Euclidean(vec![0.5, 0.0])
    }

    #[test]
    fn resolvent_of_identity_is_anchor() {
        let body = ball_half();
        for n in [0u64, 1, 5, 100] {
            let sol = solve_resolvent(&Operator::Identity, &body, &v0(), n, 1e-12).unwrap();
            assert!(sol.point.distance(&v0()).unwrap() <= 1e-9);
        }
    }

    #[test]
    fn resolvent_of_constant_matches_closed_form() {
        let body = ball_half();
        let c = Point::Euclidean(vec![-0.25, 0.1]);
        let op = Operator::Constant(c.clone());
        for n in [0u64, 3, 9] {
            let sol = solve_resolvent(&op, &body, &v0(), n, 1e-12).unwrap();
            // x = (n/(n+1))·c + (1/(n+1))·v₀
            let l = 1.0 / (n as f64 + 1.0);
            let expect = convex_combine(l, &c, &v0()).unwrap();
            assert!(sol.point.distance(&expect).unwrap() <= 1e-10);
        }
    }

    #[test]
    fn resolvent_of_rotation_matches_hand_solve() {
        // n = 9: (I − 0.9R)x = 0.1·v₀ with R the quarter turn.
        let body = ball_half();
        let rot = Operator::rotation_about_origin(90.0, 2);
        let sol = solve_resolvent(&rot, &body, &v0(), 9, 1e-12).unwrap();
        assert_eq!(sol.method, SolveMethod::ExactLinear);
        // I − 0.9R = [[1, 0.9], [−0.9, 1]], det = 1.81.
        let det = 1.81;
        let expect = [0.1 * 0.5 / det, 0.1 * 0.45 / det];
        let got = sol.point.coords().unwrap();
        assert!((got[0] - expect[0]).abs() < 1e-14);
        assert!((got[1] - expect[1]).abs() < 1e-14);
        assert!(sol.certified_error < 1e-12);
    }

    #[test]
    fn picard_agrees_with_exact_solve() {
        let body = ball_half();
        let rot = Operator::rotation_about_origin(90.0, 2);
        for n in [0u64, 1, 7, 40] {
            let exact = solve_resolvent(&rot, &body, &v0(), n, 1e-11).unwrap();
            let picard = solve_resolvent_with(&rot, &body, &v0(), n, 1e-11, false).unwrap();
            assert_eq!(picard.method, SolveMethod::Picard);
            assert!(exact.point.distance(&picard.point).unwrap() <= 2e-11);
        }
    }

    #[test]
    fn browder_identity_trace_is_constant_with_zero_residuals() {
        let body = ball_half();
        let tr = browder_sequence(
            &Operator::Identity,
            &body,
            &v0(),
            50,
            &EpsSchedule::default(),
        )
        .unwrap();
        for (p, r) in tr.points.iter().zip(&tr.residuals) {
            assert!(p.distance(&v0()).unwrap() <= 1e-9);
            assert!(*r <= 1e-9);
        }
    }

    #[test]
    fn browder_rotation_quasi_fixed_point_bound() {
        let body = ball_half();
        let rot = Operator::rotation_about_origin(90.0, 2);
        let tr = browder_sequence(&rot, &body, &v0(), 300, &EpsSchedule::default()).unwrap();
        let b = body.diameter_bound() as f64;
        let mut prev_norm = f64::INFINITY;
        for n in 0..tr.len() {
            let lhs = tr.residuals[n];
            let rhs = b / (n as f64 + 1.0) + 2.0 * tr.cert(n) + 1e-9;
            assert!(lhs <= rhs, "residual {lhs} above {rhs} at n={n}");
            let norm = tr.points[n].norm();
            assert!(norm <= prev_norm + 1e-12, "norm increased at n={n}");
            prev_norm = norm;
        }
    }

    #[test]
    fn halpern_identity_is_constant() {
        let body = ball_half();
        let tr =
            halpern_sequence(&Operator::Identity, &body, &v0(), &LambdaSeq::Harmonic, 40)
                .unwrap();
        for p in &tr.points {
            assert!(p.distance(&v0()).unwrap() <= 1e-12);
        }
    }

    #[test]
    fn halpern_negation_hand_recurrence() {
        // 1-D interval [−1, 1], u₀ = 1, U = negation about 0:
        // u₁ = 0, u₂ = 1/3, u₃ = 0.
        let body = ConvexBody::new(
            BodyKind::Box {
                lower: vec![-1.0],
                upper: vec![1.0],
            },
            2,
        )
        .unwrap();
        let op = Operator::PointNegation { center: vec![0.0] };
        let u0 = Point::Euclidean(vec![1.0]);
        let tr = halpern_sequence(&op, &body, &u0, &LambdaSeq::Harmonic, 3).unwrap();
        let xs: Vec<f64> = tr.points.iter().map(|p| p.coords().unwrap()[0]).collect();
        assert!((xs[0] - 1.0).abs() < 1e-15);
        assert!(xs[1].abs() < 1e-15);
        assert!((xs[2] - 1.0 / 3.0).abs() < 1e-15);
        assert!(xs[3].abs() < 1e-15);
    }

    #[test]
    fn halpern_rotation_stays_in_body_and_step_identity_holds() {
        let body = ball_half();
        let rot = Operator::rotation_about_origin(90.0, 2);
        let tr = halpern_sequence(&rot, &body, &v0(), &LambdaSeq::Harmonic, 500).unwrap();
        for (n, p) in tr.points.iter().enumerate() {
            assert!(body.contains(p, 1e-9), "left body at {n}");
        }
        // Recompute each step from its predecessor.
        for n in 0..500usize {
            let ux = rot.apply(&tr.points[n]).unwrap();
            let l = 1.0 / (n as f64 + 2.0);
            let re = convex_combine(l, &ux, &v0()).unwrap();
            assert!(re.distance(&tr.points[n + 1]).unwrap() <= 1e-12);
        }
    }

    #[test]
    fn bauschke_single_operator_equals_halpern() {
        let body = ball_half();
        let rot = Operator::rotation_about_origin(90.0, 2);
        let fam = OperatorFamily::new(vec![rot.clone()], None).unwrap();
        let a = bauschke_sequence(&fam, &body, &v0(), &LambdaSeq::Harmonic, 200).unwrap();
        let h = halpern_sequence(&rot, &body, &v0(), &LambdaSeq::Harmonic, 200).unwrap();
        for (p, q) in a.points.iter().zip(&h.points) {
            assert_eq!(p.coords().unwrap(), q.coords().unwrap());
        }
    }

    #[test]
    fn bauschke_identity_family_is_constant() {
        let body = ball_half();
        let fam =
            OperatorFamily::new(vec![Operator::Identity, Operator::Identity], None).unwrap();
        let tr = bauschke_sequence(&fam, &body, &v0(), &LambdaSeq::Harmonic, 60).unwrap();
        for p in &tr.points {
            assert!(p.distance(&v0()).unwrap() <= 1e-12);
        }
    }

    fn axis_family_on_corner_box() -> (ConvexBody, OperatorFamily, Point) {
        let body = ConvexBody::new(
            BodyKind::Box {
                lower: vec![0.0, 0.0],
                upper: vec![0.5, 0.5],
            },
            1,
        )
        .unwrap();
        let seg_x = ConvexBody::new(
            BodyKind::Segment {
                start: vec![0.0, 0.0],
                end: vec![0.5, 0.0],
            },
            1,
        )
        .unwrap();
        let seg_y = ConvexBody::new(
            BodyKind::Segment {
                start: vec![0.0, 0.0],
                end: vec![0.0, 0.5],
            },
            1,
        )
        .unwrap();
        let fam = OperatorFamily::new(
            vec![
                Operator::MetricProjection(seg_x),
                Operator::MetricProjection(seg_y),
            ],
            Some(crate::counterfn::CounterFn::identity()),
        )
        .unwrap();
        (body, fam, Point::Euclidean(vec![0.5, 0.5]))
    }

    #[test]
    fn bauschke_axis_projections_shrink_to_origin() {
        let (body, fam, u0) = axis_family_on_corner_box();
        let tr = bauschke_sequence(&fam, &body, &u0, &LambdaSeq::Harmonic, 50_000).unwrap();
        let last = tr.points.last().unwrap();
        assert!(last.norm() < 0.02, "‖u_N‖ = {}", last.norm());
        let tail = &tr.residuals[tr.len() - 100..];
        assert!(tail.iter().all(|r| *r < 0.02));
        assert_eq!(tr.per_op_residuals.len(), tr.len());
        assert_eq!(tr.per_op_residuals[0].len(), 2);
    }

    #[test]
    fn scan_matches_materialized_prefix() {
        let (body, fam, u0) = axis_family_on_corner_box();
        let tr = bauschke_sequence(&fam, &body, &u0, &LambdaSeq::Harmonic, 300).unwrap();
        let mut seen = 0u64;
        bauschke_scan(&fam, &body, &u0, &LambdaSeq::Harmonic, 300, |step| {
            let expect = &tr.points[step.n as usize];
            assert_eq!(step.u.coords().unwrap(), expect.coords().unwrap());
            if step.n >= 2 {
                let back = step.back_ell.expect("ring filled");
                assert_eq!(
                    back.coords().unwrap(),
                    tr.points[step.n as usize - 2].coords().unwrap()
                );
            }
            seen += 1;
        })
        .unwrap();
        assert_eq!(seen, 301);
    }

    #[test]
    fn traces_are_bitwise_deterministic() {
        let body = ball_half();
        let rot = Operator::rotation_about_origin(90.0, 2);
        let a = halpern_sequence(&rot, &body, &v0(), &LambdaSeq::Harmonic, 400).unwrap();
        let b = halpern_sequence(&rot, &body, &v0(), &LambdaSeq::Harmonic, 400).unwrap();
        for (p, q) in a.points.iter().zip(&b.points) {
            for (x, y) in p.coords().unwrap().iter().zip(q.coords().unwrap()) {
                assert_eq!(x.to_bits(), y.to_bits());
            }
        }
    }

    #[test]
    fn start_outside_body_is_rejected() {
        let body = ball_half();
        let bad = Point::Euclidean(vec![0.9, 0.9]);
        assert!(matches!(
            halpern_sequence(&Operator::Identity, &body, &bad, &LambdaSeq::Harmonic, 5),
            Err(IterError::StartOutsideBody)
        ));
    }
}
