//! Numerical laboratory for quantitative spectral analysis of 1D quasiperiodic
//! Schrödinger operators `(Hu)_n = u_{n+1} + u_{n-1} + V(n) u_n`.
//!
//! The toolkit covers the computable layer of the theory:
//!
//! * [`arithmetic`] — continued fractions, the Liouville exponent β(α), the
//!   quotient growth exponents K_*/K^*, Diophantine phase tests, and an
//!   explicit Liouville-frequency construction.
//! * [`potential`] — deterministic potential families (almost Mathieu,
//!   Sturmian, skew-shift, analytic cosine series, file-backed) and their
//!   almost-periodicity / repetition-defect profiles.
//! * [`cocycle`] — SL(2,ℝ) transfer-matrix products, Lyapunov exponents, the
//!   uniform growth bound Λ, and exact 2×2 matrix lemmas (powers, hyperbolic
//!   conjugation, product perturbation, telescoping).
//! * [`spectrum`] — periodic-approximant discriminants, band sets, trace
//!   level-set measures, box-counting dimension, localized-block density.
//! * [`subordinacy`] — half-line solutions, truncated norms, the
//!   Jitomirskaya–Last length scale, Weyl m-functions, the whole-line Borel
//!   transform, and the spectral-dimension estimator.
//! * [`dynamics`] — finite-box quantum evolution, Abel-averaged moments and
//!   upper/lower transport exponents.

pub mod arithmetic;
pub mod cocycle;
pub mod dynamics;
pub mod error;
pub mod linalg;
pub mod potential;
pub mod scaling;
pub mod spectrum;
pub mod subordinacy;

pub use arithmetic::{Frequency, FrequencyExpansion};
pub use cocycle::{Mat2, TransferChain};
pub use error::{QpError, Result};
pub use potential::PotentialSource;
pub use scaling::ScalingFit;
pub use spectrum::{BandSet, Discriminant};
