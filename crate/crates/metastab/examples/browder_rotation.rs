//! Browder resolvent pipeline on the quarter-turn rotation of a radius-1/2
//! ball: computes the sequence with certified inner solves, checks the
//! quasi-fixed-point bound ‖U(u_n)−u_n‖ ≤ b/(n+1), evaluates the
//! metastability rate, and searches windows for witnesses.

use metastab::counterfn::{default_cap, nat, CounterFn};
use metastab::iterations::{browder_sequence, EpsSchedule};
use metastab::rates::{phi_browder, ProblemParams};
use metastab::space::{BodyKind, ConvexBody, Operator, Point};
use metastab::verify::{check_asymptotic_regularity, check_metastability, minimal_window_oracle};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let body = ConvexBody::new(
        BodyKind::Ball {
            center: vec![0.0, 0.0],
            radius: 0.5,
        },
        1,
    )?;
    let op = Operator::rotation_about_origin(90.0, 2);
    let v0 = Point::euclidean(vec![0.5, 0.0])?;
    let params = ProblemParams::harmonic(1, 1, default_cap())?;

    println!("computing resolvent sequence to N = 2000 ...");
    let trace = browder_sequence(&op, &body, &v0, 2000, &EpsSchedule::default())?;
    for n in [0usize, 1, 10, 100, 1000, 2000] {
        let c = trace.points[n].coords()?;
        println!(
            "  u_{n:<5} = ({:+.6}, {:+.6})   residual {:.3e}   cert {:.1e}",
            c[0],
            c[1],
            trace.residuals[n],
            trace.cert(n)
        );
    }

    let reg = check_asymptotic_regularity(&trace, &params, 2, None, None, 1e-9)?;
    for r in &reg {
        println!(
            "{}: checked {} worst margin {:+.3e} -> {:?}",
            r.lemma,
            r.checked,
            r.worst_margin.unwrap_or(f64::NAN),
            r.verdict
        );
    }

    println!("\nmetastability windows (tolerance 1e-7):");
    for k in 0..=4u64 {
        for f in [
            CounterFn::identity(),
            CounterFn::plus_const(10),
            CounterFn::times_const(2),
        ] {
            let bound = phi_browder(&params, &nat(k), &f)?;
            let rep = check_metastability(&trace, k, &f, &bound, 1e-7);
            let oracle = minimal_window_oracle(&trace, k, &f, 1e-7);
            println!(
                "  k={k} f={:<9} bound={:<22} witness={:?} oracle={:?} gap={:.3e} {:?}",
                f.describe(),
                bound.to_string(),
                rep.witness_n,
                oracle,
                rep.max_pair_gap.unwrap_or(f64::NAN),
                rep.verdict
            );
            assert_eq!(rep.witness_n, oracle, "checker must agree with the oracle");
        }
    }
    Ok(())
}
