//! Exact-rational validation of the harmonic coefficient moduli: μ(k)=k as a
//! rate of convergence of λ_n = 1/(n+1), ν(k)=3^k as a divergence rate of
//! ∑λ_n, ξ(k)=ℓ(k+1) as a Cauchy modulus of ∑|λ_n − λ_{n+ℓ}|, and the
//! τ = id fixed-point condition for the two-projection family.

use metastab::counterfn::{default_cap, CounterFn, LambdaSeq};
use metastab::rates::ProblemParams;
use metastab::space::{BodyKind, ConvexBody, Operator, OperatorFamily, Point};
use metastab::verify::{validate_moduli, ModuliCheckConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let body = ConvexBody::new(
        BodyKind::Box {
            lower: vec![0.0, 0.0],
            upper: vec![0.5, 0.5],
        },
        1,
    )?;
    let seg = |end: [f64; 2]| {
        ConvexBody::new(
            BodyKind::Segment {
                start: vec![0.0, 0.0],
                end: end.to_vec(),
            },
            1,
        )
    };
    let family = OperatorFamily::new(
        vec![
            Operator::MetricProjection(seg([0.5, 0.0])?),
            Operator::MetricProjection(seg([0.0, 0.5])?),
        ],
        Some(CounterFn::identity()),
    )?;
    let params =
        ProblemParams::harmonic(1, 2, default_cap())?.with_tau(CounterFn::identity());

    // Sanity prints before the sweep.
    let lam = LambdaSeq::Harmonic;
    println!(
        "lambda_0..4 = {}, {}, {}, {}, {}",
        lam.value_exact(0),
        lam.value_exact(1),
        lam.value_exact(2),
        lam.value_exact(3),
        lam.value_exact(4)
    );

    let cfg = ModuliCheckConfig::default();
    println!(
        "validating: mu for k<=:{}, nu for k<=:{} (exact sums), xi for k<=:{} over windows of {}, tau on {} samples",
        cfg.k_max_mu, cfg.k_max_nu, cfg.k_max_xi, cfg.xi_window, cfg.tau_samples
    );
    let reports = validate_moduli(&params, Some((&family, &body)), &cfg)?;
    for r in &reports {
        println!(
            "{:<26} checked={:<8} vacuous={:<6} -> {:?} {}",
            r.lemma,
            r.checked,
            r.vacuous,
            r.verdict,
            r.diagnostics.join("; ")
        );
    }
    let point = Point::euclidean(vec![0.25, 0.1])?;
    println!(
        "\n(for reference, T_1T_0 collapses everything to the origin: T_1(T_0({:?})) has norm {})",
        point.coords()?,
        family.operators()[1]
            .apply(&family.operators()[0].apply(&point)?)?
            .norm()
    );
    Ok(())
}
