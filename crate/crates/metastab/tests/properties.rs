//! Property tests for the crate-wide invariants: nonexpansiveness of the
//! operator catalog, tilde/normalization algebra, saturation soundness, and
//! the saturating order.

use proptest::prelude::*;

use metastab::counterfn::{iterate, nat, Bound, CounterFn, Nat};
use metastab::rates::{self, ProblemParams};
use metastab::space::{convex_combine, BodyKind, ConvexBody, Operator, Point};

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

fn operator_strategy() -> impl Strategy<Value = Operator> {
    let leaf = prop_oneof![
        Just(Operator::Identity),
        (-180.0f64..180.0).prop_map(|a| Operator::Rotation {
            angle: a.to_radians(),
            center: vec![0.0, 0.0],
            plane: (0, 1),
        }),
        (-1.0f64..1.0, -1.0f64..1.0).prop_filter_map("nonzero normal", |(x, y)| {
            if x * x + y * y > 1e-3 {
                Some(Operator::Reflection {
                    normal: vec![x, y],
                    offset: 0.0,
                })
            } else {
                None
            }
        }),
        (-0.2f64..0.2, -0.2f64..0.2).prop_map(|(x, y)| Operator::PointNegation {
            center: vec![x, y],
        }),
        Just(Operator::MetricProjection(
            ConvexBody::new(
                BodyKind::Segment {
                    start: vec![-0.5, 0.0],
                    end: vec![0.5, 0.0],
                },
                1,
            )
            .unwrap(),
        )),
    ];
    // One level of composition or averaging on top of the leaves.
    leaf.clone().prop_recursive(1, 4, 2, move |inner| {
        prop_oneof![
            (inner.clone(), inner.clone())
                .prop_map(|(a, b)| Operator::Composition(vec![a, b])),
            (inner.clone(), inner, 0.0f64..1.0).prop_map(|(a, b, w)| {
                Operator::ConvexCombination(vec![(w, a), (1.0 - w, b)])
            }),
        ]
    })
}

fn point_in_ball() -> impl Strategy<Value = Point> {
    (-0.5f64..0.5, -0.5f64..0.5)
        .prop_filter_map("inside radius 1/2", |(x, y)| {
            if x * x + y * y <= 0.25 {
                Some(Point::Euclidean(vec![x, y]))
            } else {
                None
            }
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn catalog_operators_are_nonexpansive(
        op in operator_strategy(),
        x in point_in_ball(),
        y in point_in_ball(),
    ) {
        let d = x.distance(&y).unwrap();
        let dd = op.apply(&x).unwrap().distance(&op.apply(&y).unwrap()).unwrap();
        prop_assert!(dd <= d + 1e-12, "{} expanded {d} to {dd}", op.describe());
    }

    #[test]
    fn convex_combination_preserves_membership(
        x in point_in_ball(),
        y in point_in_ball(),
        g in 0.0f64..=1.0,
    ) {
        let body = ball_half();
        let w = convex_combine(g, &x, &y).unwrap();
        prop_assert!(body.contains(&w, 1e-12));
    }

    #[test]
    fn tilde_is_monotone_idempotent_envelope(values in prop::collection::vec(0u64..1000, 1..20)) {
        let raw = CounterFn::raw_table(values.iter().map(|v| nat(*v)).collect()).unwrap();
        let t = raw.tilde();
        let tt = t.tilde();
        let mut prev = Nat::from(0u32);
        for n in 0..(values.len() as u64 + 8) {
            let v = t.eval(&nat(n));
            // Envelope dominates the raw table and is monotone.
            prop_assert!(v >= raw.eval(&nat(n)).min(v.clone()));
            prop_assert!(v >= prev);
            // Idempotence.
            prop_assert_eq!(&v, &tt.eval(&nat(n)));
            // Pointwise least monotone envelope: equals the running max.
            let running = (0..=n).map(|j| raw.eval(&nat(j))).max().unwrap();
            prop_assert_eq!(&v, &running);
            prev = v;
        }
    }

    #[test]
    fn iterate_saturation_survives_cap_raise(
        slope in 1u64..4,
        intercept in 0u64..5,
        r in 0u64..40,
        start in 0u64..10,
        cap in 10u64..100_000,
    ) {
        let g = CounterFn::affine(nat(slope), nat(intercept));
        let cap_n = nat(cap);
        let out = iterate(&g, &Bound::Exact(nat(r)), &nat(start), &cap_n).unwrap();
        if out.is_saturated() {
            let big = &cap_n * nat(10);
            match iterate(&g, &Bound::Exact(nat(r)), &nat(start), &big).unwrap() {
                Bound::Saturated(c) => prop_assert_eq!(c, big),
                Bound::Exact(v) => prop_assert!(v >= cap_n),
            }
        } else {
            // Exact results must be cap-independent.
            let big = &cap_n * nat(10);
            prop_assert_eq!(out, iterate(&g, &Bound::Exact(nat(r)), &nat(start), &big).unwrap());
        }
    }

    #[test]
    fn saturating_order_respects_clamping(a in 0u64..1000, b in 0u64..1000, cap in 2u64..500) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let cap_n = nat(cap);
        let la = Bound::clamp(nat(lo), &cap_n);
        let lb = Bound::clamp(nat(hi), &cap_n);
        prop_assert!(la.le(&lb));
    }

    #[test]
    fn rate_saturation_is_monotone_in_cap(k in 0u64..3, c in 0u64..20) {
        // Raising the cap never shrinks a bound: an Exact survives unchanged
        // and a Saturated either stays saturated or resolves at or above the
        // old cap.
        let f = CounterFn::plus_const(c);
        let small = ProblemParams::harmonic(1, 1, nat(100_000)).unwrap();
        let large = ProblemParams::harmonic(1, 1, nat(100_000_000)).unwrap();
        let lo = rates::beta_browder(&small, &nat(k), &f).unwrap();
        let hi = rates::beta_browder(&large, &nat(k), &f).unwrap();
        match (lo, hi) {
            (Bound::Exact(a), Bound::Exact(b)) => prop_assert_eq!(a, b),
            (Bound::Saturated(cap), Bound::Exact(b)) => prop_assert!(b >= cap),
            (Bound::Saturated(_), Bound::Saturated(_)) => {}
            (Bound::Exact(_), Bound::Saturated(_)) => {
                prop_assert!(false, "raising the cap must not introduce saturation")
            }
        }
    }
}
