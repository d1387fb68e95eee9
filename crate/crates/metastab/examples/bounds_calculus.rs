//! Tour of the rate calculus: the shared primitives, the per-scheme towers,
//! saturation behavior, and the closed-form vs. combinator-composition
//! cross-check.

use metastab::counterfn::{default_cap, nat, Bound, CounterFn};
use metastab::rates::{
    alpha_hat, beta_browder, chi, phi_browder, phi_browder_composed, phi_wittmann,
    phi_wittmann_composed, proj_bound_initial, sigma_prime, ProblemParams,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let p1 = ProblemParams::harmonic(1, 1, default_cap())?;
    let id = CounterFn::identity();

    println!("projection recursion bound (f̃+1)^(r)(0), r = b²(k+1):");
    for (b, k, f) in [
        (1u64, 0u64, CounterFn::identity()),
        (1, 1, CounterFn::identity()),
        (2, 0, CounterFn::constant(nat(0))),
    ] {
        let p = ProblemParams::harmonic(b, 1, default_cap())?;
        println!(
            "  b={b} k={k} f={:<8} -> {}",
            f.describe(),
            proj_bound_initial(&p, &nat(k), &f)?
        );
    }

    println!("\nresolvent projection bound beta(k, f) = 12b(omega_f^(r(k))(0)+1)^2:");
    println!("  b=1 k=0 f=identity -> {}", beta_browder(&p1, &nat(0), &id)?);

    println!("\nsigma'(k, n) with harmonic moduli (mu = id, nu = 3^k):");
    for n in [0u64, 6, 100] {
        println!(
            "  k=0 n={n:<4} -> {}",
            sigma_prime(&p1, &nat(0), &Bound::Exact(nat(n)))?
        );
    }

    let p2 = ProblemParams::harmonic(1, 2, default_cap())?.with_tau(CounterFn::identity());
    println!("\ncyclic thresholds for ell = 2, tau = id:");
    println!("  chi(0)       = {}", chi(&p2, &Bound::exact(0))?);
    println!("  chi(1)       = {}", chi(&p2, &Bound::exact(1))?);
    println!("  alpha_hat(0) = {}", alpha_hat(&p2, &Bound::exact(0))?);
    println!("  alpha_hat(3) = {}", alpha_hat(&p2, &Bound::exact(3))?);

    println!("\nmetastability towers saturate almost immediately:");
    for k in 0..=1u64 {
        let closed = phi_browder(&p1, &nat(k), &id)?;
        let composed = phi_browder_composed(&p1, &nat(k), &id)?;
        assert_eq!(closed, composed);
        println!("  phi_browder (k={k})  = {closed}   [closed == composed]");
    }
    let closed = phi_wittmann(&p1, &nat(0), &id)?;
    assert_eq!(closed, phi_wittmann_composed(&p1, &nat(0), &id)?);
    println!("  phi_halpern (k=0)  = {closed}   [closed == composed]");

    println!("\nsmaller caps saturate no later:");
    let tiny = ProblemParams::harmonic(1, 1, nat(10_000))?;
    println!("  cap=10^4: phi_browder(0, id) = {}", phi_browder(&tiny, &nat(0), &id)?);
    Ok(())
}
