//! Random walks on free products of finitely generated groups.
//!
//! The crate computes, for a walk `μ = Σ α_i μ̄_i` on `Γ_1 ∗ … ∗ Γ_m`:
//!
//! * per-factor Green-function analytics (radius, `G_i` and `G_i'` at the
//!   radius, `θ_i`, the `Φ_i`/`Ψ_i` kernel, period, leading singular term),
//! * the product walk's spectral radius, exact return-probability series and
//!   the `ζ_i` functions,
//! * the asymptotic law of `μ^{(nδ)}(e)` (an inherited `n^{-λ} log^κ n` law or
//!   the `n^{-3/2}` law),
//! * the phase diagram in the mixing weight `α_1` for two factors,
//! * brute-force and Monte Carlo oracles for all of the above.

pub mod acceptance;
pub mod bessel;
pub mod classify;
pub mod error;
pub mod ext;
pub mod factors;
pub mod kernel;
pub mod mc;
pub mod phase;
pub mod product;
pub mod quad;
pub mod series;

pub use error::{Error, Result};
pub use ext::Ext;
