//! Mean-field analysis of quantum annealing for the p-spin ferromagnet with a
//! k-body transverse driver.
//!
//! ```text
//! H(s, λ) = s[λ H₀ + (1 − λ) V_k] + (1 − s) V_TF
//! H₀ = −N(Σσᶻ/N)^p,  V_k = N(Σσˣ/N)^k,  V_TF = −Σσˣ
//! ```

pub mod cli;
pub mod exactdiag;
pub mod model;
pub mod pathlab;
pub mod semiclassical;
pub mod spinwave;
pub mod statapprox;

pub use model::{AnnealPoint, ModelError, ModelParams, Phase, SemiClassicalState};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/model.md")]
    mod model {}
    #[doc = include_str!("../../../book/src/phase-diagram.md")]
    mod phase_diagram {}
    #[doc = include_str!("../../../book/src/spin-wave.md")]
    mod spin_wave {}
    #[doc = include_str!("../../../book/src/exact.md")]
    mod exact {}
    #[doc = include_str!("../../../book/src/static.md")]
    mod static_approximation {}
    #[doc = include_str!("../../../book/src/paths.md")]
    mod paths {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
