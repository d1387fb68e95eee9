//! Halpern iteration u_{n+1} = λ_{n+1}u₀ + (1−λ_{n+1})U(u_n) with
//! λ_n = 1/(n+1) on the quarter-turn rotation: regularity window from the
//! closed-form rate α(k) = 16b²(k+1)²+8b(k+1), metastability search, and the
//! saturated rate functional reported a fortiori.

use metastab::counterfn::{default_cap, nat, CounterFn, LambdaSeq};
use metastab::iterations::halpern_sequence;
use metastab::rates::{alpha_wittmann_value, phi_wittmann, ProblemParams};
use metastab::space::{BodyKind, ConvexBody, Operator, Point};
use metastab::verify::{check_asymptotic_regularity, check_metastability};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let body = ConvexBody::new(
        BodyKind::Ball {
            center: vec![0.0, 0.0],
            radius: 0.5,
        },
        1,
    )?;
    let op = Operator::rotation_about_origin(90.0, 2);
    let u0 = Point::euclidean(vec![0.5, 0.0])?;
    let params = ProblemParams::harmonic(1, 1, default_cap())?;

    println!("computing Halpern iteration to N = 100000 ...");
    let trace = halpern_sequence(&op, &body, &u0, &LambdaSeq::Harmonic, 100_000)?;
    for n in [0usize, 10, 100, 1000, 10_000, 100_000] {
        println!(
            "  n={n:<6} |u_n| = {:.6}   residual {:.3e}",
            trace.points[n].norm(),
            trace.residuals[n]
        );
    }

    println!("\nregularity window from alpha_W:");
    let f2 = CounterFn::times_const(2);
    for k in 0..=3u64 {
        let alpha = alpha_wittmann_value(&nat(1), &nat(k));
        let reps = check_asymptotic_regularity(&trace, &params, k, Some(&f2), None, 1e-9)?;
        println!(
            "  k={k} alpha_W={alpha:<5} -> {:?} ({})",
            reps[0].verdict,
            reps[0].diagnostics.join("; ")
        );
    }

    println!("\nmetastability with the saturated rate:");
    for k in 0..=2u64 {
        for f in [CounterFn::plus_const(5), CounterFn::times_const(2)] {
            let bound = phi_wittmann(&params, &nat(k), &f)?;
            let rep = check_metastability(&trace, k, &f, &bound, 1e-7);
            println!(
                "  k={k} f={:<8} bound={} witness={:?} {:?}",
                f.describe(),
                bound,
                rep.witness_n,
                rep.verdict
            );
        }
    }
    Ok(())
}
