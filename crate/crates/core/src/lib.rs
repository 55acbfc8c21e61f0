//! Screened zeta kernels and the Fredholm machinery around them.
//!
//! The kernel `K_θ` is the inverse Fourier–Laplace transform of
//! `exp(-2θ ξ'/ξ(s))`. It factors into an arithmetic part (the Dirichlet
//! coefficients `λ_θ(n)` of `exp(-2θ ζ'/ζ)`) and an archimedean density
//! `g_θ`, so that `K_θ(x) = Σ λ_θ(n) n^{-1/2} g_θ(x - log n)`.
//!
//! Module map:
//!
//! * [`specfun`]: Γ, digamma, Bessel `I_ν`, `J_0`, `J_1`, Bernoulli numbers.
//! * [`fps`]: exact truncated power series over `Q[θ]` and the expansion
//!   coefficients `C̃_n(θ)`, `A_n(θ)`.
//! * [`arith`]: von Mangoldt sieve, `λ_θ(n)`, `ζ'/ζ` on the real axis.
//! * [`archimedean`]: Bessel-kernel densities `Ψ⁰`, `Ψ^{1,N}`, `Ψ^N`, `Ψ²`, `g^N`.
//! * [`kernel`]: the assembled kernel profile and its Laplace check.
//! * [`fredholm`]: Nyström discretisation on `[-t, t]`, determinants,
//!   integral-equation solutions and the Hamiltonian `diag(m⁻², m²)`.
//! * [`verify`]: cross-validation campaigns producing machine-readable reports.

pub mod archimedean;
pub mod arith;
pub mod cheb;
mod error;
pub mod fps;
pub mod fredholm;
pub mod kernel;
pub mod quad;
pub mod report;
pub mod specfun;
pub mod verify;

mod par;

pub use error::{Error, Result};

/// Library version, embedded in every report and output file.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
