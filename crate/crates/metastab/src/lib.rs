//! Fixed-point iteration laboratory for nonexpansive operators in
//! finite-dimensional Hilbert space.
//!
//! The crate computes the three classical strongly convergent iterations
//! (Browder's resolvent sequence, the Halpern iteration, and the cyclic
//! Halpern-type iteration for finite operator families), evaluates the
//! associated rate-of-metastability functionals exactly with saturation, and
//! empirically verifies the quantitative lemmas those rates rest on.
//!
//! Start with the runnable examples (`cargo run --example browder_rotation`,
//! etc.), one per major capability. The `metastab` binary wraps the same
//! machinery behind a batch experiment runner.

pub mod cli;
pub mod counterfn;
pub mod iterations;
pub mod rates;
pub mod space;
pub mod verify;
