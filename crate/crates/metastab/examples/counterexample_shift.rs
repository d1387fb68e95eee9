//! The shift operator on the ℓ¹ unit ball, in exact rational arithmetic:
//! u_n = (1/(n+1), …, 1/(n+1)) has θ(u_n) = −1 and ‖U(u_n)−u_n‖₁ = 2/(n+1)
//! exactly, so the unrelativized general principle is false even though its
//! hypothesis holds at the unique fixed point.

use metastab::space::{residual_exact, theta_exact, unit_fraction, L1Vec, Operator};
use metastab::verify::run_counterexample;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    println!("exact identities for a few n:");
    for n in [0u64, 1, 3, 10, 100] {
        let u = L1Vec::constant_prefix(unit_fraction(n), (n + 1) as usize);
        let r = residual_exact(&Operator::L1Shift, &u)?;
        println!(
            "  n={n:<4} |u_n|_1 = {}   theta = {}   |U(u)-u|_1 = {}",
            u.norm_exact(),
            theta_exact(&u),
            r
        );
    }

    let rep = run_counterexample(100);
    println!(
        "\nchecked {} exact identities, vacuous {}, verdict {:?}",
        rep.checked, rep.vacuous, rep.verdict
    );
    for d in &rep.diagnostics {
        println!("  {d}");
    }
    Ok(())
}
