//! The bound calculus: every rate functional extracted for the three
//! iterations, evaluated exactly with saturation, plus the two generic
//! combinators that assemble a rate of metastability from an asymptotic
//! regularity rate α, a projection bound β and the window data δ, γ, η, σ.
//!
//! Every bound is available through two routes: the closed form printed in
//! the final theorem statements, and the generic combinator composition. The
//! test suite asserts the two agree, which is the artifact's defence against
//! transcription slips in the heavily nested formulas.
//!
//! Function arguments are normalized to max(f̃, id) on entry, so callers may
//! pass arbitrary tables; the normalization keeps every function that enters
//! an iteration tower monotone and inflationary, which is what the
//! saturation certificates need.

use std::sync::Arc;

use num_traits::{One, Zero};
use thiserror::Error;

use crate::counterfn::{
    iterate_map, ln_upper, nat, Bound, CounterFn, FnError, LambdaModuli, Nat, SatMap,
    DEFAULT_ITERATION_BUDGET,
};

#[derive(Debug, Error)]
pub enum RateError {
    #[error(transparent)]
    Fn(#[from] FnError),
    #[error("tau modulus required for this rate but not configured")]
    MissingTau,
    #[error("unknown primitive `{0}`")]
    UnknownPrimitive(String),
    #[error("primitive `{name}` expects {expected} arguments, got {got}")]
    ArityMismatch {
        name: String,
        expected: usize,
        got: usize,
    },
    #[error("argument {0} of `{1}` must be a {2}")]
    ArgType(usize, String, &'static str),
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
}

/// Instance parameters shared by the bound functionals.
#[derive(Clone, Debug)]
pub struct ProblemParams {
    pub b: u64,
    pub ell: u64,
    pub moduli: LambdaModuli,
    pub tau: Option<CounterFn>,
    pub cap: Nat,
}

impl ProblemParams {
    pub fn new(
        b: u64,
        ell: u64,
        moduli: LambdaModuli,
        tau: Option<CounterFn>,
        cap: Nat,
    ) -> Result<Self, RateError> {
        if b == 0 {
            return Err(RateError::InvalidParams("b must be at least 1".into()));
        }
        if ell == 0 {
            return Err(RateError::InvalidParams("ell must be at least 1".into()));
        }
        if cap < nat(2) {
            return Err(RateError::InvalidParams("cap must be at least 2".into()));
        }
        if let Some(t) = &tau {
            if !t.is_monotone() {
                return Err(RateError::InvalidParams("tau must be monotone".into()));
            }
        }
        for (name, f) in [
            ("mu", &moduli.mu),
            ("nu", &moduli.nu),
            ("xi", &moduli.xi),
        ] {
            if !f.is_monotone() {
                return Err(RateError::InvalidParams(format!("{name} must be monotone")));
            }
        }
        Ok(ProblemParams {
            b,
            ell,
            moduli,
            tau,
            cap,
        })
    }

    /// Single-operator setup with the harmonic coefficient moduli.
    pub fn harmonic(b: u64, ell: u64, cap: Nat) -> Result<Self, RateError> {
        let moduli = crate::counterfn::default_harmonic_moduli(ell)?;
        Self::new(b, ell, moduli, None, cap)
    }

    pub fn with_tau(mut self, tau: CounterFn) -> Self {
        self.tau = Some(tau);
        self
    }

    fn b_nat(&self) -> Nat {
        nat(self.b)
    }

    fn ell_nat(&self) -> Nat {
        nat(self.ell)
    }
}

/// A monotone ℕ→ℕ map evaluated with saturation, backed by a closure. The
/// inflation certificate gates propagation of saturated inputs.
#[derive(Clone)]
pub struct RateFn {
    eval: Arc<dyn Fn(&Nat) -> Result<Bound, RateError> + Send + Sync>,
    inflationary: bool,
    cap: Nat,
}

impl RateFn {
    pub fn new(
        cap: Nat,
        inflationary: bool,
        eval: impl Fn(&Nat) -> Result<Bound, RateError> + Send + Sync + 'static,
    ) -> Self {
        RateFn {
            eval: Arc::new(eval),
            inflationary,
            cap,
        }
    }

    pub fn apply(&self, arg: &Bound) -> Result<Bound, RateError> {
        match arg {
            Bound::Exact(n) => (self.eval)(n),
            Bound::Saturated(_) => {
                if self.inflationary {
                    Ok(Bound::Saturated(self.cap.clone()))
                } else {
                    Err(FnError::CannotCertifySaturation.into())
                }
            }
        }
    }

    pub fn is_inflationary(&self) -> bool {
        self.inflationary
    }

    /// Normalized bridge from a counter function: f ↦ max(f̃, id).
    pub fn from_counter(f: &CounterFn, cap: &Nat) -> RateFn {
        let g = f.normalized();
        let cap_inner = cap.clone();
        RateFn::new(cap.clone(), true, move |n| {
            Ok(g.apply(&Bound::Exact(n.clone()), &cap_inner)?)
        })
    }

    /// Plain bridge without the inflation wrapper, for structural moduli that
    /// must be used exactly as configured (μ, ν, ξ, τ).
    fn from_counter_plain(f: &CounterFn, cap: &Nat) -> RateFn {
        let g = f.tilde();
        let infl = g.is_inflationary();
        let cap_inner = cap.clone();
        RateFn::new(cap.clone(), infl, move |n| {
            Ok(g.apply(&Bound::Exact(n.clone()), &cap_inner)?)
        })
    }
}

impl SatMap for RateFn {
    fn apply_sat(&self, arg: &Bound, _cap: &Nat) -> Result<Bound, FnError> {
        self.apply(arg).map_err(|e| match e {
            RateError::Fn(f) => f,
            other => FnError::InvalidConstruction(other.to_string()),
        })
    }

    fn certified_inflationary(&self) -> bool {
        self.inflationary
    }
}

/// A bound functional (k, f) ↦ ℕ. The flag certifies value ≥ k, which is what
/// lets a saturated k propagate.
#[derive(Clone)]
pub struct RateFunctional {
    eval: Arc<dyn Fn(&Nat, &RateFn) -> Result<Bound, RateError> + Send + Sync>,
    inflationary_in_k: bool,
    cap: Nat,
}

impl RateFunctional {
    pub fn new(
        cap: Nat,
        inflationary_in_k: bool,
        eval: impl Fn(&Nat, &RateFn) -> Result<Bound, RateError> + Send + Sync + 'static,
    ) -> Self {
        RateFunctional {
            eval: Arc::new(eval),
            inflationary_in_k,
            cap,
        }
    }

    pub fn apply(&self, k: &Bound, f: &RateFn) -> Result<Bound, RateError> {
        match k {
            Bound::Exact(kv) => (self.eval)(kv, f),
            Bound::Saturated(_) => {
                if self.inflationary_in_k {
                    Ok(Bound::Saturated(self.cap.clone()))
                } else {
                    Err(FnError::CannotCertifySaturation.into())
                }
            }
        }
    }
}

/// How a window functional's value relates to its index argument n when n is
/// saturated: always at least n, at least n provided the function argument is
/// inflationary, or not certifiable.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NPropagation {
    Always,
    IfArgInflationary,
    Never,
}

/// Window data (k, n, f) ↦ ℕ for the combinator: the γ, η and σ slots.
#[derive(Clone)]
pub struct WindowFunctional {
    eval: Arc<dyn Fn(&Nat, &Nat, &RateFn) -> Result<Bound, RateError> + Send + Sync>,
    n_propagation: NPropagation,
    cap: Nat,
}

impl WindowFunctional {
    pub fn new(
        cap: Nat,
        n_propagation: NPropagation,
        eval: impl Fn(&Nat, &Nat, &RateFn) -> Result<Bound, RateError> + Send + Sync + 'static,
    ) -> Self {
        WindowFunctional {
            eval: Arc::new(eval),
            n_propagation,
            cap,
        }
    }

    pub fn apply(&self, k: &Nat, n: &Bound, f: &RateFn) -> Result<Bound, RateError> {
        match n {
            Bound::Exact(nv) => (self.eval)(k, nv, f),
            Bound::Saturated(_) => {
                let ok = match self.n_propagation {
                    NPropagation::Always => true,
                    NPropagation::IfArgInflationary => f.is_inflationary(),
                    NPropagation::Never => false,
                };
                if ok {
                    Ok(Bound::Saturated(self.cap.clone()))
                } else {
                    Err(FnError::CannotCertifySaturation.into())
                }
            }
        }
    }
}

/// The five slots of the metastability combinator for one instantiation.
#[derive(Clone)]
pub struct GeneralInstantiation {
    pub sigma: WindowFunctional,
    pub psi: RateFunctional,
    pub delta: RateFn,
    pub gamma: WindowFunctional,
    pub eta: WindowFunctional,
}

fn add_const(v: Bound, c: &Nat, cap: &Nat) -> Bound {
    match v {
        Bound::Exact(x) => Bound::clamp(x + c, cap),
        s => s,
    }
}

/// ψ(k, f) = α(β(k, f̂), f) with f̂(m) = f(α(m, f)).
pub fn psi_general(
    alpha: &RateFunctional,
    beta: &RateFunctional,
    k: &Nat,
    f: &RateFn,
    cap: &Nat,
) -> Result<Bound, RateError> {
    let fhat = fhat_of(alpha, f, cap);
    let bv = beta.apply(&Bound::Exact(k.clone()), &fhat)?;
    alpha.apply(&bv, f)
}

fn fhat_of(alpha: &RateFunctional, f: &RateFn, cap: &Nat) -> RateFn {
    let alpha = alpha.clone();
    let f_outer = f.clone();
    let f_inner = f.clone();
    // f̂(m) = f(α(m, f)) ≥ α(m, f) ≥ m when both certificates hold.
    let infl = alpha.inflationary_in_k && f.is_inflationary();
    RateFn::new(cap.clone(), infl, move |m| {
        let am = alpha.apply(&Bound::Exact(m.clone()), &f_inner)?;
        f_outer.apply(&am)
    })
}

/// Packages α and β into the ψ functional so it can sit in an instantiation.
pub fn make_psi(alpha: RateFunctional, beta: RateFunctional, cap: &Nat) -> RateFunctional {
    let infl = alpha.inflationary_in_k && beta.inflationary_in_k;
    let cap_inner = cap.clone();
    RateFunctional::new(cap.clone(), infl, move |k, f| {
        psi_general(&alpha, &beta, k, f, &cap_inner)
    })
}

/// φ(k, f) = σ(2k+1, ψ(δ(2k+1), f̂), f) with
/// f̂(m) = max{γ(2k+1, m, f), η(2k+1, m, f)}.
pub fn phi_general(
    inst: &GeneralInstantiation,
    k: &Nat,
    f: &RateFn,
    cap: &Nat,
) -> Result<Bound, RateError> {
    let k2 = k * nat(2) + Nat::one();
    let gamma = inst.gamma.clone();
    let eta = inst.eta.clone();
    let f_in = f.clone();
    let k2_in = k2.clone();
    let infl = f.is_inflationary();
    let fsec = RateFn::new(cap.clone(), infl, move |m| {
        let a = gamma.apply(&k2_in, &Bound::Exact(m.clone()), &f_in)?;
        let b = eta.apply(&k2_in, &Bound::Exact(m.clone()), &f_in)?;
        Ok(a.max_with(b))
    });
    let dv = inst.delta.apply(&Bound::Exact(k2.clone()))?;
    let pv = inst.psi.apply(&dv, &fsec)?;
    inst.sigma.apply(&k2, &pv, f)
}

// ---------------------------------------------------------------------------
// Shared primitives.
// ---------------------------------------------------------------------------

/// r(k) = b⁴(k+1)² + b²
pub fn r_value(b: u64, k: &Nat) -> Nat {
    let b = nat(b);
    let k1 = k + Nat::one();
    &b * &b * &b * &b * &k1 * &k1 + &b * &b
}

fn r_bound(params: &ProblemParams, k: &Bound) -> Result<Bound, RateError> {
    match k {
        Bound::Exact(kv) => Ok(Bound::clamp(r_value(params.b, kv), &params.cap)),
        // r(k) ≥ (k+1)² > k, so a saturated k stays saturated.
        Bound::Saturated(_) => Ok(Bound::Saturated(params.cap.clone())),
    }
}

/// ω_g(m) = max{g(12b(m+1)²), 12b(m+1)²} + 1
pub fn omega_fn(params: &ProblemParams, g: &RateFn) -> RateFn {
    let cap = params.cap.clone();
    let b = params.b_nat();
    let g = g.clone();
    // ω(m) ≥ 12b(m+1)² + 1 > m regardless of g.
    RateFn::new(params.cap.clone(), true, move |m| {
        let m1 = m + Nat::one();
        let probe = nat(12) * &b * &m1 * &m1;
        if probe >= cap {
            return Ok(Bound::Saturated(cap.clone()));
        }
        let gx = g.apply(&Bound::Exact(probe.clone()))?;
        let best = gx.max_with(Bound::Exact(probe));
        Ok(add_const(best, &Nat::one(), &cap))
    })
}

/// ω_g as a first-class counter function (for exact iteration through the
/// public composition API): ω_g(m) = max{g(12b(m+1)²), 12b(m+1)²} + 1.
pub fn omega_counterfn(b: u64, g: &CounterFn) -> CounterFn {
    let quad = CounterFn::product_of(
        CounterFn::constant(nat(12) * nat(b)),
        CounterFn::product_of(CounterFn::plus_const(1), CounterFn::plus_const(1))
            .expect("monotone factors"),
    )
    .expect("monotone factors");
    let probed = CounterFn::compose(g.normalized(), quad.clone()).expect("monotone parts");
    let best = CounterFn::max_of(probed, quad).expect("monotone parts");
    CounterFn::sum_of(best, CounterFn::constant(Nat::one())).expect("monotone parts")
}

/// γ_{k,g}(m) = max{g(m), 2b(k+1)}
pub fn gamma_kg_fn(params: &ProblemParams, k: &Nat, g: &RateFn) -> RateFn {
    let cap = params.cap.clone();
    let floor = nat(2) * params.b_nat() * (k + Nat::one());
    let g = g.clone();
    let infl = g.is_inflationary();
    RateFn::new(params.cap.clone(), infl, move |m| {
        let gv = g.apply(&Bound::Exact(m.clone()))?;
        Ok(gv.max_with(Bound::clamp(floor.clone(), &cap)))
    })
}

fn moduli_fn(params: &ProblemParams, which: Modulus) -> RateFn {
    let f = match which {
        Modulus::Mu => &params.moduli.mu,
        Modulus::Nu => &params.moduli.nu,
        Modulus::Xi => &params.moduli.xi,
    };
    RateFn::from_counter_plain(f, &params.cap)
}

#[derive(Clone, Copy)]
enum Modulus {
    Mu,
    Nu,
    Xi,
}

fn tau_fn(params: &ProblemParams) -> Result<RateFn, RateError> {
    let t = params.tau.as_ref().ok_or(RateError::MissingTau)?;
    Ok(RateFn::from_counter_plain(t, &params.cap))
}

/// χ(k) = ν(ξ(2b(k+1)) + 1 + ℓ + ⌈ln 2b(k+1)⌉^), with the certified bit-length
/// upper bound standing in for the ceiling of the logarithm.
pub fn chi(params: &ProblemParams, k: &Bound) -> Result<Bound, RateError> {
    let nu = moduli_fn(params, Modulus::Nu);
    let xi = moduli_fn(params, Modulus::Xi);
    match k {
        Bound::Exact(kv) => {
            let arg = nat(2) * params.b_nat() * (kv + Nat::one());
            let xiv = xi.apply(&Bound::Exact(arg.clone()))?;
            let shift = Nat::one() + params.ell_nat() + nat(ln_upper(&arg)?);
            nu.apply(&add_const(xiv, &shift, &params.cap))
        }
        Bound::Saturated(_) => {
            // χ(k) ≥ ξ(2b(k+1)) ≥ 2b(k+1) > k needs both certificates.
            if nu.is_inflationary() && xi.is_inflationary() {
                Ok(Bound::Saturated(params.cap.clone()))
            } else {
                Err(FnError::CannotCertifySaturation.into())
            }
        }
    }
}

/// α̃(k) = max{μ(2ℓb(k+1)), χ(2k+1)}
pub fn alpha_tilde(params: &ProblemParams, k: &Bound) -> Result<Bound, RateError> {
    match k {
        Bound::Exact(kv) => {
            let mu = moduli_fn(params, Modulus::Mu);
            let arg = nat(2) * params.ell_nat() * params.b_nat() * (kv + Nat::one());
            let muv = mu.apply(&Bound::Exact(arg))?;
            let k2 = kv * nat(2) + Nat::one();
            let chiv = chi(params, &Bound::Exact(k2))?;
            Ok(muv.max_with(chiv))
        }
        Bound::Saturated(_) => chi(params, k),
    }
}

/// α̂(k) = α̃(τ(k)), the regularity threshold of the cyclic iteration.
pub fn alpha_hat(params: &ProblemParams, k: &Bound) -> Result<Bound, RateError> {
    let tau = tau_fn(params)?;
    let tk = tau.apply(k)?;
    alpha_tilde(params, &tk)
}

/// σ′(k, n) = ν(ñ + 1 + ⌈ln 3b²(k+1)²⌉^) with ñ = max{n, μ(6b²(k+1)²)}.
pub fn sigma_prime(params: &ProblemParams, k: &Nat, n: &Bound) -> Result<Bound, RateError> {
    let mu = moduli_fn(params, Modulus::Mu);
    let nu = moduli_fn(params, Modulus::Nu);
    let b = params.b_nat();
    let k1 = k + Nat::one();
    let six = nat(6) * &b * &b * &k1 * &k1;
    let muv = mu.apply(&Bound::Exact(six))?;
    let ntil = n.clone().max_with(muv);
    let three = nat(3) * &b * &b * &k1 * &k1;
    let shift = Nat::one() + nat(ln_upper(&three)?);
    nu.apply(&add_const(ntil, &shift, &params.cap))
}

fn sigma_prime_window(params: &ProblemParams) -> WindowFunctional {
    let p = params.clone();
    let nu_infl = moduli_fn(params, Modulus::Nu).is_inflationary();
    let prop = if nu_infl {
        NPropagation::Always
    } else {
        NPropagation::Never
    };
    WindowFunctional::new(params.cap.clone(), prop, move |k, n, _f| {
        sigma_prime(&p, k, &Bound::Exact(n.clone()))
    })
}

// ---------------------------------------------------------------------------
// Projection bounds.
// ---------------------------------------------------------------------------

/// (f̃+1)^(r)(0) with r = b²(k+1): the recursion bound of the basic
/// projection argument.
pub fn proj_bound_initial(
    params: &ProblemParams,
    k: &Nat,
    f: &CounterFn,
) -> Result<Bound, RateError> {
    let fstar = RateFn::from_counter(f, &params.cap);
    let cap = params.cap.clone();
    let succ = RateFn::new(params.cap.clone(), true, move |m| {
        let v = fstar.apply(&Bound::Exact(m.clone()))?;
        Ok(add_const(v, &Nat::one(), &cap))
    });
    let b = params.b_nat();
    let r = &b * &b * (k + Nat::one());
    let rv = Bound::clamp(r, &params.cap);
    Ok(iterate_map(
        &succ,
        &rv,
        &Nat::zero(),
        &params.cap,
        DEFAULT_ITERATION_BUDGET,
    )?)
}

fn twelve_b_sq(params: &ProblemParams, it: Bound) -> Bound {
    match it {
        Bound::Exact(v) => {
            let v1 = &v + Nat::one();
            Bound::clamp(nat(12) * params.b_nat() * &v1 * &v1, &params.cap)
        }
        s => s,
    }
}

/// β(k, f) = 12b(ω_f^{(r(k))}(0)+1)², the refined projection bound for the
/// resolvent iteration.
pub fn beta_browder(params: &ProblemParams, k: &Nat, f: &CounterFn) -> Result<Bound, RateError> {
    let fstar = RateFn::from_counter(f, &params.cap);
    beta_browder_inner(params, &Bound::Exact(k.clone()), &fstar)
}

fn beta_browder_inner(
    params: &ProblemParams,
    k: &Bound,
    f: &RateFn,
) -> Result<Bound, RateError> {
    let r = r_bound(params, k)?;
    let om = omega_fn(params, f);
    let it = iterate_map(&om, &r, &Nat::zero(), &params.cap, DEFAULT_ITERATION_BUDGET)?;
    Ok(twelve_b_sq(params, it))
}

/// β₀(k, f) = 12b(ω_{γ_{k,f}}^{(r(2k+1))}(0)+1)², shared by the Halpern and
/// cyclic pipelines.
pub fn beta_zero(params: &ProblemParams, k: &Nat, f: &CounterFn) -> Result<Bound, RateError> {
    let fstar = RateFn::from_counter(f, &params.cap);
    beta_zero_inner(params, &Bound::Exact(k.clone()), &fstar)
}

fn beta_zero_inner(params: &ProblemParams, k: &Bound, f: &RateFn) -> Result<Bound, RateError> {
    let kv = match k {
        Bound::Exact(kv) => kv.clone(),
        // γ_{k,f} ≥ 2b(k+1) already exceeds the cap.
        Bound::Saturated(_) => return Ok(Bound::Saturated(params.cap.clone())),
    };
    let k2 = &kv * nat(2) + Nat::one();
    let r = r_bound(params, &Bound::Exact(k2))?;
    let gk = gamma_kg_fn(params, &kv, f);
    let om = omega_fn(params, &gk);
    let it = iterate_map(&om, &r, &Nat::zero(), &params.cap, DEFAULT_ITERATION_BUDGET)?;
    Ok(twelve_b_sq(params, it))
}

/// β(k, f) = 3β₀(k, g) + 2 with g(m) = f(3m+2): the projection bound adapted
/// to a family of ℓ operators.
pub fn beta_bauschke(params: &ProblemParams, k: &Nat, f: &CounterFn) -> Result<Bound, RateError> {
    let fstar = RateFn::from_counter(f, &params.cap);
    beta_bauschke_inner(params, &Bound::Exact(k.clone()), &fstar)
}

fn beta_bauschke_inner(
    params: &ProblemParams,
    k: &Bound,
    f: &RateFn,
) -> Result<Bound, RateError> {
    let cap = params.cap.clone();
    let f_in = f.clone();
    let g = RateFn::new(params.cap.clone(), f.is_inflationary(), move |m| {
        let arg = Bound::clamp(m * nat(3) + nat(2), &cap);
        f_in.apply(&arg)
    });
    let b0 = beta_zero_inner(params, k, &g)?;
    match b0 {
        Bound::Exact(v) => Ok(Bound::clamp(v * nat(3) + nat(2), &params.cap)),
        s => Ok(s),
    }
}

// ---------------------------------------------------------------------------
// The resolvent (Browder) instantiation.
// ---------------------------------------------------------------------------

/// α(k, f) = b(k+1): rate of asymptotic regularity of the resolvent sequence.
pub fn alpha_browder(params: &ProblemParams) -> RateFunctional {
    let b = params.b_nat();
    let cap = params.cap.clone();
    RateFunctional::new(params.cap.clone(), true, move |k, _f| {
        Ok(Bound::clamp(&b * (k + Nat::one()), &cap))
    })
}

pub fn beta_browder_functional(params: &ProblemParams) -> RateFunctional {
    let p = params.clone();
    RateFunctional::new(params.cap.clone(), true, move |k, f| {
        beta_browder_inner(&p, &Bound::Exact(k.clone()), f)
    })
}

pub fn browder_instantiation(params: &ProblemParams) -> GeneralInstantiation {
    let cap = params.cap.clone();
    let b = params.b_nat();
    let delta = RateFn::new(params.cap.clone(), true, {
        let cap = cap.clone();
        move |k| {
            let k1 = k + Nat::one();
            Ok(Bound::clamp(nat(2) * &k1 * &k1 - Nat::one(), &cap))
        }
    });
    let gamma = WindowFunctional::new(params.cap.clone(), NPropagation::IfArgInflationary, {
        let cap = cap.clone();
        let b = b.clone();
        move |k, n, f| {
            let fv = f.apply(&Bound::Exact(n.clone()))?;
            let k1 = k + Nat::one();
            match fv {
                Bound::Exact(v) => Ok(Bound::clamp(
                    nat(2) * &b * (v + Nat::one()) * &k1 * &k1,
                    &cap,
                )),
                s => Ok(s),
            }
        }
    });
    let eta = WindowFunctional::new(
        params.cap.clone(),
        NPropagation::IfArgInflationary,
        move |_k, n, f| f.apply(&Bound::Exact(n.clone())),
    );
    let sigma = WindowFunctional::new(params.cap.clone(), NPropagation::Always, {
        let cap = cap.clone();
        move |_k, n, _f| Ok(Bound::clamp(n.clone(), &cap))
    });
    let psi = make_psi(
        alpha_browder(params),
        beta_browder_functional(params),
        &params.cap,
    );
    GeneralInstantiation {
        sigma,
        psi,
        delta,
        gamma,
        eta,
    }
}

/// Closed form of the resolvent metastability rate:
/// 12b²(h^(R)(0)+1)² + b with R = 64b⁴(k+1)⁴ + b² and
/// h(m) = max{8b(f(12b²(m+1)²+b)+1)(k+1)², 12b(m+1)²} + 1.
pub fn phi_browder(params: &ProblemParams, k: &Nat, f: &CounterFn) -> Result<Bound, RateError> {
    let fstar = RateFn::from_counter(f, &params.cap);
    let b = params.b_nat();
    let cap = params.cap.clone();
    let k1 = k + Nat::one();
    let r = nat(64) * &b * &b * &b * &b * &k1 * &k1 * &k1 * &k1 + &b * &b;
    let h = {
        let cap = cap.clone();
        let b = b.clone();
        let k1 = k1.clone();
        RateFn::new(params.cap.clone(), true, move |m| {
            let m1 = m + Nat::one();
            let quad = nat(12) * &b * &m1 * &m1;
            let probe = &b * &quad + &b; // 12b²(m+1)² + b
            if probe >= cap {
                return Ok(Bound::Saturated(cap.clone()));
            }
            let fv = fstar.apply(&Bound::Exact(probe))?;
            let first = match fv {
                Bound::Exact(v) => Bound::clamp(
                    nat(8) * &b * (v + Nat::one()) * &k1 * &k1,
                    &cap,
                ),
                s => s,
            };
            let best = first.max_with(Bound::clamp(quad, &cap));
            Ok(add_const(best, &Nat::one(), &cap))
        })
    };
    let it = iterate_map(
        &h,
        &Bound::clamp(r, &params.cap),
        &Nat::zero(),
        &params.cap,
        DEFAULT_ITERATION_BUDGET,
    )?;
    match it {
        Bound::Exact(v) => {
            let v1 = &v + Nat::one();
            Ok(Bound::clamp(nat(12) * &b * &b * &v1 * &v1 + &b, &cap))
        }
        s => Ok(s),
    }
}

pub fn phi_browder_composed(
    params: &ProblemParams,
    k: &Nat,
    f: &CounterFn,
) -> Result<Bound, RateError> {
    let inst = browder_instantiation(params);
    let fstar = RateFn::from_counter(f, &params.cap);
    phi_general(&inst, k, &fstar, &params.cap)
}

// ---------------------------------------------------------------------------
// The Halpern (Wittmann) instantiation, λ_n = 1/(n+1).
// ---------------------------------------------------------------------------

/// α(k, f) = 4b(k+1)(4b(k+1)+2) = 16b²(k+1)² + 8b(k+1): asymptotic
/// regularity rate of the Halpern iteration with λ_n = 1/(n+1).
pub fn alpha_wittmann(params: &ProblemParams) -> RateFunctional {
    let b = params.b_nat();
    let cap = params.cap.clone();
    RateFunctional::new(params.cap.clone(), true, move |k, _f| {
        Ok(Bound::clamp(alpha_wittmann_value(&b, k), &cap))
    })
}

/// Exact value of the Halpern regularity rate.
pub fn alpha_wittmann_value(b: &Nat, k: &Nat) -> Nat {
    let k1 = k + Nat::one();
    nat(16) * b * b * &k1 * &k1 + nat(8) * b * &k1
}

pub fn beta_wittmann_functional(params: &ProblemParams) -> RateFunctional {
    let p = params.clone();
    RateFunctional::new(params.cap.clone(), true, move |k, f| {
        beta_zero_inner(&p, &Bound::Exact(k.clone()), f)
    })
}

fn gamma_eta_sigma_prime(params: &ProblemParams) -> (WindowFunctional, WindowFunctional) {
    let cap = params.cap.clone();
    let b = params.b_nat();
    let p1 = params.clone();
    let gamma = WindowFunctional::new(params.cap.clone(), NPropagation::IfArgInflationary, {
        let cap = cap.clone();
        move |k, n, f| {
            let sp = sigma_prime(&p1, k, &Bound::Exact(n.clone()))?;
            let fv = f.apply(&sp)?;
            let k1 = k + Nat::one();
            match fv {
                Bound::Exact(v) => Ok(Bound::clamp(
                    nat(9) * &b * &k1 * &k1 * (v + Nat::one()) - Nat::one(),
                    &cap,
                )),
                s => Ok(s),
            }
        }
    });
    let p2 = params.clone();
    let eta = WindowFunctional::new(
        params.cap.clone(),
        NPropagation::IfArgInflationary,
        move |k, n, f| {
            let sp = sigma_prime(&p2, k, &Bound::Exact(n.clone()))?;
            f.apply(&sp)
        },
    );
    (gamma, eta)
}

fn delta_sq12(params: &ProblemParams) -> RateFn {
    let cap = params.cap.clone();
    RateFn::new(params.cap.clone(), true, move |k| {
        let k1 = k + Nat::one();
        Ok(Bound::clamp(nat(12) * &k1 * &k1 - Nat::one(), &cap))
    })
}

pub fn wittmann_instantiation(params: &ProblemParams) -> GeneralInstantiation {
    let (gamma, eta) = gamma_eta_sigma_prime(params);
    GeneralInstantiation {
        sigma: sigma_prime_window(params),
        psi: make_psi(
            alpha_wittmann(params),
            beta_wittmann_functional(params),
            &params.cap,
        ),
        delta: delta_sq12(params),
        gamma,
        eta,
    }
}

/// f̂(m) = 36b(k+1)²(f(σ′(2k+1, m))+1) − 1, the merged window function of the
/// Halpern and cyclic closed forms.
fn fsec_closed(params: &ProblemParams, k: &Nat, fstar: &RateFn) -> RateFn {
    let p = params.clone();
    let b = params.b_nat();
    let cap = params.cap.clone();
    let k1 = k + Nat::one();
    let k2 = k * nat(2) + Nat::one();
    let fstar = fstar.clone();
    let infl = moduli_fn(params, Modulus::Nu).is_inflationary() && fstar.is_inflationary();
    RateFn::new(params.cap.clone(), infl, move |m| {
        let sp = sigma_prime(&p, &k2, &Bound::Exact(m.clone()))?;
        let fv = fstar.apply(&sp)?;
        match fv {
            Bound::Exact(v) => Ok(Bound::clamp(
                nat(36) * &b * &k1 * &k1 * (v + Nat::one()) - Nat::one(),
                &cap,
            )),
            s => Ok(s),
        }
    })
}

/// Closed form of the Halpern metastability rate:
/// σ′(2k+1, ψ(48(k+1)²−1, f̂)) with ψ assembled from the Halpern α and β.
pub fn phi_wittmann(params: &ProblemParams, k: &Nat, f: &CounterFn) -> Result<Bound, RateError> {
    let fstar = RateFn::from_counter(f, &params.cap);
    let fsec = fsec_closed(params, k, &fstar);
    let kk = nat(48) * (k + Nat::one()) * (k + Nat::one()) - Nat::one();
    let psi = make_psi(
        alpha_wittmann(params),
        beta_wittmann_functional(params),
        &params.cap,
    );
    let pv = psi.apply(&Bound::clamp(kk, &params.cap), &fsec)?;
    let k2 = k * nat(2) + Nat::one();
    sigma_prime(params, &k2, &pv)
}

pub fn phi_wittmann_composed(
    params: &ProblemParams,
    k: &Nat,
    f: &CounterFn,
) -> Result<Bound, RateError> {
    let inst = wittmann_instantiation(params);
    let fstar = RateFn::from_counter(f, &params.cap);
    phi_general(&inst, k, &fstar, &params.cap)
}

// ---------------------------------------------------------------------------
// The cyclic (Bauschke) instantiation.
// ---------------------------------------------------------------------------

pub fn alpha_bauschke_functional(params: &ProblemParams) -> Result<RateFunctional, RateError> {
    let tau = tau_fn(params)?;
    let nu_infl = moduli_fn(params, Modulus::Nu).is_inflationary();
    let xi_infl = moduli_fn(params, Modulus::Xi).is_inflationary();
    let infl = tau.is_inflationary() && nu_infl && xi_infl;
    let p = params.clone();
    Ok(RateFunctional::new(params.cap.clone(), infl, move |k, _f| {
        alpha_hat(&p, &Bound::Exact(k.clone()))
    }))
}

pub fn beta_bauschke_functional(params: &ProblemParams) -> RateFunctional {
    let p = params.clone();
    RateFunctional::new(params.cap.clone(), true, move |k, f| {
        beta_bauschke_inner(&p, &Bound::Exact(k.clone()), f)
    })
}

/// ψ(k, f) = α̂(β(k, f̂)) with f̂(m) = f(α̂(m)); α̂ ignores its function slot.
pub fn psi_bauschke(params: &ProblemParams, k: &Nat, f: &CounterFn) -> Result<Bound, RateError> {
    let alpha = alpha_bauschke_functional(params)?;
    let beta = beta_bauschke_functional(params);
    let fstar = RateFn::from_counter(f, &params.cap);
    psi_general(&alpha, &beta, k, &fstar, &params.cap)
}

pub fn bauschke_instantiation(params: &ProblemParams) -> Result<GeneralInstantiation, RateError> {
    let (gamma, eta) = gamma_eta_sigma_prime(params);
    Ok(GeneralInstantiation {
        sigma: sigma_prime_window(params),
        psi: make_psi(
            alpha_bauschke_functional(params)?,
            beta_bauschke_functional(params),
            &params.cap,
        ),
        delta: delta_sq12(params),
        gamma,
        eta,
    })
}

/// Closed form of the cyclic metastability rate: as the Halpern form but with
/// ψ = α̂ ∘ β for the family projection bound.
pub fn phi_bauschke(params: &ProblemParams, k: &Nat, f: &CounterFn) -> Result<Bound, RateError> {
    let fstar = RateFn::from_counter(f, &params.cap);
    let fsec = fsec_closed(params, k, &fstar);
    let kk = nat(48) * (k + Nat::one()) * (k + Nat::one()) - Nat::one();
    let psi = make_psi(
        alpha_bauschke_functional(params)?,
        beta_bauschke_functional(params),
        &params.cap,
    );
    let pv = psi.apply(&Bound::clamp(kk, &params.cap), &fsec)?;
    let k2 = k * nat(2) + Nat::one();
    sigma_prime(params, &k2, &pv)
}

pub fn phi_bauschke_composed(
    params: &ProblemParams,
    k: &Nat,
    f: &CounterFn,
) -> Result<Bound, RateError> {
    let inst = bauschke_instantiation(params)?;
    let fstar = RateFn::from_counter(f, &params.cap);
    phi_general(&inst, k, &fstar, &params.cap)
}

// ---------------------------------------------------------------------------
// Primitive dispatch for the CLI.
// ---------------------------------------------------------------------------

#[derive(Clone, Debug)]
pub enum PrimitiveArg {
    Nat(Nat),
    Fn(CounterFn),
}

impl PrimitiveArg {
    fn as_nat(&self, idx: usize, name: &str) -> Result<&Nat, RateError> {
        match self {
            PrimitiveArg::Nat(n) => Ok(n),
            PrimitiveArg::Fn(_) => Err(RateError::ArgType(idx, name.into(), "natural")),
        }
    }

    fn as_fn(&self, idx: usize, name: &str) -> Result<&CounterFn, RateError> {
        match self {
            PrimitiveArg::Fn(f) => Ok(f),
            PrimitiveArg::Nat(_) => Err(RateError::ArgType(idx, name.into(), "counter function")),
        }
    }
}

/// Evaluate a named rate primitive or theorem bound on explicit arguments.
pub fn eval_primitive(
    params: &ProblemParams,
    name: &str,
    args: &[PrimitiveArg],
) -> Result<Bound, RateError> {
    let expect = |n: usize| -> Result<(), RateError> {
        if args.len() == n {
            Ok(())
        } else {
            Err(RateError::ArityMismatch {
                name: name.into(),
                expected: n,
                got: args.len(),
            })
        }
    };
    match name {
        "r" => {
            expect(1)?;
            let k = args[0].as_nat(0, name)?;
            Ok(Bound::clamp(r_value(params.b, k), &params.cap))
        }
        "omega" => {
            expect(2)?;
            let g = args[0].as_fn(0, name)?;
            let m = args[1].as_nat(1, name)?;
            let om = omega_fn(params, &RateFn::from_counter(g, &params.cap));
            om.apply(&Bound::Exact(m.clone()))
        }
        "gamma_kg" => {
            expect(3)?;
            let k = args[0].as_nat(0, name)?;
            let g = args[1].as_fn(1, name)?;
            let m = args[2].as_nat(2, name)?;
            let gk = gamma_kg_fn(params, k, &RateFn::from_counter(g, &params.cap));
            gk.apply(&Bound::Exact(m.clone()))
        }
        "chi" => {
            expect(1)?;
            chi(params, &Bound::Exact(args[0].as_nat(0, name)?.clone()))
        }
        "alpha_tilde" => {
            expect(1)?;
            alpha_tilde(params, &Bound::Exact(args[0].as_nat(0, name)?.clone()))
        }
        "alpha_hat" => {
            expect(1)?;
            alpha_hat(params, &Bound::Exact(args[0].as_nat(0, name)?.clone()))
        }
        "alpha_B" => {
            expect(1)?;
            let k = args[0].as_nat(0, name)?;
            Ok(Bound::clamp(params.b_nat() * (k + Nat::one()), &params.cap))
        }
        "alpha_W" => {
            expect(1)?;
            let k = args[0].as_nat(0, name)?;
            Ok(Bound::clamp(
                alpha_wittmann_value(&params.b_nat(), k),
                &params.cap,
            ))
        }
        "beta0" => {
            expect(2)?;
            beta_zero(params, args[0].as_nat(0, name)?, args[1].as_fn(1, name)?)
        }
        "delta_B" => {
            expect(1)?;
            let k1 = args[0].as_nat(0, name)? + Nat::one();
            Ok(Bound::clamp(nat(2) * &k1 * &k1 - Nat::one(), &params.cap))
        }
        "delta_W" => {
            expect(1)?;
            let k1 = args[0].as_nat(0, name)? + Nat::one();
            Ok(Bound::clamp(nat(12) * &k1 * &k1 - Nat::one(), &params.cap))
        }
        "gamma_B" => {
            expect(3)?;
            let inst = browder_instantiation(params);
            let k = args[0].as_nat(0, name)?;
            let n = args[1].as_nat(1, name)?;
            let f = RateFn::from_counter(args[2].as_fn(2, name)?, &params.cap);
            inst.gamma.apply(k, &Bound::Exact(n.clone()), &f)
        }
        "gamma_W" => {
            expect(3)?;
            let (gamma, _) = gamma_eta_sigma_prime(params);
            let k = args[0].as_nat(0, name)?;
            let n = args[1].as_nat(1, name)?;
            let f = RateFn::from_counter(args[2].as_fn(2, name)?, &params.cap);
            gamma.apply(k, &Bound::Exact(n.clone()), &f)
        }
        "eta" => {
            expect(3)?;
            let (_, eta) = gamma_eta_sigma_prime(params);
            let k = args[0].as_nat(0, name)?;
            let n = args[1].as_nat(1, name)?;
            let f = RateFn::from_counter(args[2].as_fn(2, name)?, &params.cap);
            eta.apply(k, &Bound::Exact(n.clone()), &f)
        }
        "sigma" => {
            expect(2)?;
            let k = args[0].as_nat(0, name)?;
            let n = args[1].as_nat(1, name)?;
            sigma_prime(params, k, &Bound::Exact(n.clone()))
        }
        "proj_bound_initial" => {
            expect(2)?;
            proj_bound_initial(params, args[0].as_nat(0, name)?, args[1].as_fn(1, name)?)
        }
        "beta_browder" => {
            expect(2)?;
            beta_browder(params, args[0].as_nat(0, name)?, args[1].as_fn(1, name)?)
        }
        "beta_wittmann" => {
            expect(2)?;
            beta_zero(params, args[0].as_nat(0, name)?, args[1].as_fn(1, name)?)
        }
        "beta_bauschke" => {
            expect(2)?;
            beta_bauschke(params, args[0].as_nat(0, name)?, args[1].as_fn(1, name)?)
        }
        "psi_browder" => {
            expect(2)?;
            let f = RateFn::from_counter(args[1].as_fn(1, name)?, &params.cap);
            psi_general(
                &alpha_browder(params),
                &beta_browder_functional(params),
                args[0].as_nat(0, name)?,
                &f,
                &params.cap,
            )
        }
        "psi_wittmann" => {
            expect(2)?;
            let f = RateFn::from_counter(args[1].as_fn(1, name)?, &params.cap);
            psi_general(
                &alpha_wittmann(params),
                &beta_wittmann_functional(params),
                args[0].as_nat(0, name)?,
                &f,
                &params.cap,
            )
        }
        "psi_bauschke" => {
            expect(2)?;
            psi_bauschke(params, args[0].as_nat(0, name)?, args[1].as_fn(1, name)?)
        }
        "phi_browder" => {
            expect(2)?;
            phi_browder(params, args[0].as_nat(0, name)?, args[1].as_fn(1, name)?)
        }
        "phi_wittmann" => {
            expect(2)?;
            phi_wittmann(params, args[0].as_nat(0, name)?, args[1].as_fn(1, name)?)
        }
        "phi_bauschke" => {
            expect(2)?;
            phi_bauschke(params, args[0].as_nat(0, name)?, args[1].as_fn(1, name)?)
        }
        other => Err(RateError::UnknownPrimitive(other.into())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::counterfn::default_cap;

    fn params_b(b: u64) -> ProblemParams {
        ProblemParams::harmonic(b, 1, default_cap()).unwrap()
    }

    fn params_bauschke(b: u64, ell: u64) -> ProblemParams {
        ProblemParams::harmonic(b, ell, default_cap())
            .unwrap()
            .with_tau(CounterFn::identity())
    }

    fn id() -> CounterFn {
        CounterFn::identity()
    }

    fn exact(v: u64) -> Bound {
        Bound::exact(v)
    }

    #[test]
    fn r_values() {
        assert_eq!(r_value(1, &nat(0)), nat(2));
        assert_eq!(r_value(2, &nat(1)), nat(68));
    }

    #[test]
    fn omega_chain_for_identity() {
        let p = params_b(1);
        let om = omega_fn(&p, &RateFn::from_counter(&id(), &p.cap));
        assert_eq!(om.apply(&exact(0)).unwrap(), exact(13));
        assert_eq!(om.apply(&exact(13)).unwrap(), exact(2353));
        // Iterating twice from zero reproduces the chain.
        let it = iterate_map(&om, &exact(2), &Nat::zero(), &p.cap, 1000).unwrap();
        assert_eq!(it, exact(2353));
    }

    #[test]
    fn omega_as_counterfn_iterates_through_public_api() {
        let om = omega_counterfn(1, &id());
        assert_eq!(om.eval(&nat(0)), nat(13));
        assert_eq!(om.eval(&nat(13)), nat(2353));
        assert!(om.is_inflationary());
        let cap = default_cap();
        let it = crate::counterfn::iterate(&om, &exact(2), &Nat::zero(), &cap).unwrap();
        assert_eq!(it, exact(2353));
        // A saturated iteration count propagates through the certificate.
        let it = crate::counterfn::iterate(
            &om,
            &Bound::Saturated(cap.clone()),
            &Nat::zero(),
            &cap,
        )
        .unwrap();
        assert_eq!(it, Bound::Saturated(cap));
    }

    #[test]
    fn proj_bound_initial_examples() {
        let p = params_b(1);
        assert_eq!(proj_bound_initial(&p, &nat(0), &id()).unwrap(), exact(1));
        assert_eq!(proj_bound_initial(&p, &nat(1), &id()).unwrap(), exact(2));
        let p2 = params_b(2);
        let c0 = CounterFn::constant(Nat::zero());
        assert_eq!(proj_bound_initial(&p2, &nat(0), &c0).unwrap(), exact(4));
    }

    #[test]
    fn beta_browder_frozen_value() {
        let p = params_b(1);
        // ω_id(0)=13, ω_id(13)=2353, then 12·(2353+1)².
        assert_eq!(
            beta_browder(&p, &nat(0), &id()).unwrap(),
            exact(66_495_792)
        );
        // The same chain dominates a constant-zero argument.
        let c0 = CounterFn::constant(Nat::zero());
        assert_eq!(beta_browder(&p, &nat(0), &c0).unwrap(), exact(66_495_792));
    }

    #[test]
    fn beta_browder_saturates_with_saturated_iteration_count() {
        let p = params_b(1);
        let f = RateFn::from_counter(&id(), &p.cap);
        let out =
            beta_browder_inner(&p, &Bound::Saturated(p.cap.clone()), &f).unwrap();
        assert_eq!(out, Bound::Saturated(p.cap.clone()));
    }

    #[test]
    fn psi_general_trivial_combinators() {
        let cap = default_cap();
        let pass_k = RateFunctional::new(cap.clone(), true, {
            let cap = cap.clone();
            move |k, _f| Ok(Bound::clamp(k.clone(), &cap))
        });
        let f = RateFn::from_counter(&id(), &cap);
        for k in [0u64, 3, 17] {
            let out = psi_general(&pass_k, &pass_k, &nat(k), &f, &cap).unwrap();
            assert_eq!(out, exact(k));
        }
        // α(k, f) = b(k+1) with b = 1 turns β = k into ψ = k + 1.
        let p = params_b(1);
        let alpha = alpha_browder(&p);
        for k in [0u64, 5, 40] {
            let out = psi_general(&alpha, &pass_k, &nat(k), &f, &cap).unwrap();
            assert_eq!(out, exact(k + 1));
        }
    }

    #[test]
    fn phi_general_plug_through() {
        let cap = default_cap();
        let sigma_n = WindowFunctional::new(cap.clone(), NPropagation::Always, {
            let cap = cap.clone();
            move |_k, n, _f| Ok(Bound::clamp(n.clone(), &cap))
        });
        let psi_k = RateFunctional::new(cap.clone(), true, {
            let cap = cap.clone();
            move |k, _f| Ok(Bound::clamp(k.clone(), &cap))
        });
        let delta_id = RateFn::new(cap.clone(), true, {
            let cap = cap.clone();
            move |k| Ok(Bound::clamp(k.clone(), &cap))
        });
        let through_f = WindowFunctional::new(cap.clone(), NPropagation::IfArgInflationary, {
            move |_k, n, f| f.apply(&Bound::Exact(n.clone()))
        });
        let inst = GeneralInstantiation {
            sigma: sigma_n.clone(),
            psi: psi_k.clone(),
            delta: delta_id,
            gamma: through_f.clone(),
            eta: through_f.clone(),
        };
        let f = RateFn::from_counter(&id(), &cap);
        for k in [0u64, 1, 4] {
            let out = phi_general(&inst, &nat(k), &f, &cap).unwrap();
            assert_eq!(out, exact(2 * k + 1));
        }
        // δ(k) = 2k sends φ(1, f) through ψ(6, ·) = 6.
        let delta_double = RateFn::new(cap.clone(), true, {
            let cap = cap.clone();
            move |k| Ok(Bound::clamp(k * nat(2), &cap))
        });
        let inst2 = GeneralInstantiation {
            sigma: sigma_n,
            psi: psi_k,
            delta: delta_double,
            gamma: through_f.clone(),
            eta: through_f,
        };
        let out = phi_general(&inst2, &nat(1), &f, &cap).unwrap();
        assert_eq!(out, exact(6));
    }

    #[test]
    fn sigma_prime_examples() {
        let p = params_b(1);
        // ñ = max{0, μ(6)} = 6, bitlen(3) = 2, ν(9) = 3⁹.
        assert_eq!(
            sigma_prime(&p, &nat(0), &exact(0)).unwrap(),
            exact(19_683)
        );
        // Unchanged while n stays below μ(6b²(k+1)²).
        assert_eq!(
            sigma_prime(&p, &nat(0), &exact(6)).unwrap(),
            exact(19_683)
        );
        // 3^103 clears the default cap.
        assert_eq!(
            sigma_prime(&p, &nat(0), &exact(100)).unwrap(),
            Bound::Saturated(p.cap.clone())
        );
        // Monotone in n.
        let lo = sigma_prime(&p, &nat(0), &exact(0)).unwrap();
        let hi = sigma_prime(&p, &nat(0), &exact(7)).unwrap();
        assert!(lo.le(&hi));
    }

    #[test]
    fn chi_and_alpha_tilde_frozen_values() {
        let p = params_bauschke(1, 2);
        // ξ(2)=6, bitlen(2)=2: ν(6+1+2+2)=3¹¹.
        assert_eq!(chi(&p, &exact(0)).unwrap(), exact(177_147));
        // ξ(4)=10, bitlen(4)=3: ν(16)=3¹⁶.
        assert_eq!(chi(&p, &exact(1)).unwrap(), exact(43_046_721));
        // α̃(0) = max{μ(4), χ(1)}.
        assert_eq!(alpha_tilde(&p, &exact(0)).unwrap(), exact(43_046_721));
        // τ = id, so α̂ coincides.
        assert_eq!(alpha_hat(&p, &exact(0)).unwrap(), exact(43_046_721));
        // Constant τ pins α̂ at α̃(0).
        let p0 = params_bauschke(1, 2);
        let p0 = ProblemParams {
            tau: Some(CounterFn::constant(Nat::zero())),
            ..p0
        };
        for k in [0u64, 2, 5] {
            assert_eq!(alpha_hat(&p0, &exact(k)).unwrap(), exact(43_046_721));
        }
        // χ grows past the cap for moderate k.
        assert_eq!(
            alpha_hat(&p, &exact(3)).unwrap(),
            Bound::Saturated(p.cap.clone())
        );
    }

    #[test]
    fn alpha_wittmann_value_example() {
        assert_eq!(alpha_wittmann_value(&nat(1), &nat(3)), nat(288));
    }

    #[test]
    fn phi_browder_saturates_and_matches_composition() {
        let p = params_b(1);
        let closed = phi_browder(&p, &nat(0), &id()).unwrap();
        assert_eq!(closed, Bound::Saturated(p.cap.clone()));
        let composed = phi_browder_composed(&p, &nat(0), &id()).unwrap();
        assert_eq!(closed, composed);
        // A smaller cap saturates no later.
        let p_small = ProblemParams {
            cap: nat(10_000),
            ..params_b(1)
        };
        assert_eq!(
            phi_browder(&p_small, &nat(0), &id()).unwrap(),
            Bound::Saturated(nat(10_000))
        );
    }

    #[test]
    fn phi_wittmann_saturates_and_matches_composition() {
        let p = params_b(1);
        let closed = phi_wittmann(&p, &nat(0), &id()).unwrap();
        assert_eq!(closed, Bound::Saturated(p.cap.clone()));
        assert_eq!(closed, phi_wittmann_composed(&p, &nat(0), &id()).unwrap());
    }

    #[test]
    fn phi_bauschke_matches_wittmann_saturation_for_single_operator() {
        let p = params_bauschke(1, 1);
        let a = phi_bauschke(&p, &nat(0), &id()).unwrap();
        let w = phi_wittmann(&p, &nat(0), &id()).unwrap();
        assert_eq!(a, Bound::Saturated(p.cap.clone()));
        assert_eq!(a, w);
        let p2 = params_bauschke(1, 2);
        assert_eq!(
            phi_bauschke(&p2, &nat(0), &id()).unwrap(),
            Bound::Saturated(p2.cap.clone())
        );
    }

    #[test]
    fn structural_identity_on_sampled_inputs() {
        let fns = [
            id(),
            CounterFn::plus_const(10),
            CounterFn::times_const(2),
            CounterFn::constant(nat(3)),
            CounterFn::table(vec![nat(5), nat(1), nat(9)]).unwrap(),
        ];
        let p = params_b(1);
        let p2 = params_b(2);
        let pb = params_bauschke(1, 2);
        for (i, f) in fns.iter().enumerate() {
            let k = nat((i % 3) as u64);
            assert_eq!(
                phi_browder(&p, &k, f).unwrap(),
                phi_browder_composed(&p, &k, f).unwrap(),
                "browder at k={k} f={}",
                f.describe()
            );
            assert_eq!(
                phi_browder(&p2, &k, f).unwrap(),
                phi_browder_composed(&p2, &k, f).unwrap()
            );
            assert_eq!(
                phi_wittmann(&p, &k, f).unwrap(),
                phi_wittmann_composed(&p, &k, f).unwrap(),
                "wittmann at k={k} f={}",
                f.describe()
            );
            assert_eq!(
                phi_bauschke(&pb, &k, f).unwrap(),
                phi_bauschke_composed(&pb, &k, f).unwrap(),
                "bauschke at k={k} f={}",
                f.describe()
            );
        }
    }

    #[test]
    fn beta_bauschke_relation_and_monotonicity() {
        let p = params_bauschke(1, 2);
        for k in [0u64, 1, 2] {
            for f in [id(), CounterFn::plus_const(3)] {
                let lhs = beta_bauschke(&p, &nat(k), &f).unwrap();
                // 3·β₀(k, m ↦ f(3m+2)) + 2 built by hand.
                let g = CounterFn::compose(
                    f.normalized(),
                    CounterFn::affine(nat(3), nat(2)),
                )
                .unwrap();
                let rhs = match beta_zero(&p, &nat(k), &g).unwrap() {
                    Bound::Exact(v) => Bound::clamp(v * nat(3) + nat(2), &p.cap),
                    s => s,
                };
                assert_eq!(lhs, rhs);
            }
        }
        let b0 = beta_bauschke(&p, &nat(0), &id()).unwrap();
        let b1 = beta_bauschke(&p, &nat(1), &id()).unwrap();
        let b2 = beta_bauschke(&p, &nat(2), &id()).unwrap();
        assert!(b0.le(&b1) && b1.le(&b2));
    }

    #[test]
    fn eval_primitive_dispatch() {
        let p = params_bauschke(1, 2);
        assert_eq!(
            eval_primitive(&p, "r", &[PrimitiveArg::Nat(nat(0))]).unwrap(),
            exact(2)
        );
        let p2 = params_b(2);
        assert_eq!(
            eval_primitive(&p2, "r", &[PrimitiveArg::Nat(nat(1))]).unwrap(),
            exact(68)
        );
        assert_eq!(
            eval_primitive(
                &p,
                "omega",
                &[PrimitiveArg::Fn(id()), PrimitiveArg::Nat(nat(0))]
            )
            .unwrap(),
            exact(13)
        );
        assert!(matches!(
            eval_primitive(&p, "nope", &[]),
            Err(RateError::UnknownPrimitive(_))
        ));
        assert!(matches!(
            eval_primitive(&p, "r", &[]),
            Err(RateError::ArityMismatch { .. })
        ));
        assert!(matches!(
            eval_primitive(&p, "r", &[PrimitiveArg::Fn(id())]),
            Err(RateError::ArgType(..))
        ));
    }

    #[test]
    fn monotonicity_under_saturating_comparison() {
        // k ≤ k′ and f ≤* g pairs; every functional must respect them.
        let p = params_b(1);
        let pb = params_bauschke(1, 2);
        let fns = [id(), CounterFn::plus_const(10), CounterFn::times_const(2)];
        let pairs: Vec<(usize, usize)> = vec![(0, 0), (0, 1), (0, 2), (1, 1), (2, 2)];
        for (fi, gi) in pairs {
            let f = &fns[fi];
            let g = &fns[gi];
            assert!(crate::counterfn::majorizes(f, g, 64).holds_on_range);
            for k in 0..3u64 {
                for k2 in k..4u64 {
                    let checks: Vec<(Bound, Bound)> = vec![
                        (
                            beta_browder(&p, &nat(k), f).unwrap(),
                            beta_browder(&p, &nat(k2), g).unwrap(),
                        ),
                        (
                            phi_browder(&p, &nat(k), f).unwrap(),
                            phi_browder(&p, &nat(k2), g).unwrap(),
                        ),
                        (
                            phi_wittmann(&p, &nat(k), f).unwrap(),
                            phi_wittmann(&p, &nat(k2), g).unwrap(),
                        ),
                        (
                            phi_bauschke(&pb, &nat(k), f).unwrap(),
                            phi_bauschke(&pb, &nat(k2), g).unwrap(),
                        ),
                    ];
                    for (lo, hi) in checks {
                        assert!(lo.le(&hi), "monotonicity broke at k={k},k'={k2}");
                    }
                }
            }
        }
    }
}
