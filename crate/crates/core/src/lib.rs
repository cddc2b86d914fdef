//! Forward and inverse spectral maps for the operator
//!
//! ```text
//! l(y) = (-1)^m y^(2m) + sum_{g=0}^{2m-2} p_g(x) y^(g),   p_g(x) = sum_{n>=1} p_{g,n} e^{inx}
//! ```
//!
//! with complex periodic coefficients carrying only positive frequencies.
//!
//! The crate is organised bottom-up:
//!
//! * [`lattice`]: model order, roots of unity, pole lattice and the
//!   periodic/half-line coefficient conventions.
//! * [`polyops`]: exact polynomial division producing the `d` coefficient tables.
//! * [`forward`]: potential to wave-coefficient triangle to spectral data.
//! * [`inverse`]: spectral data back to the triangle and the potential, by
//!   recurrence and by finite sections of the Marchenko-type equation.
//! * [`evalseries`]: evaluators for the explicit series and the residual oracles.
//! * [`characterize`]: summability conditions and the half-plane determinant test.
//! * [`io`]: JSON/CSV interchange formats shared with the CLI.
//!
//! All complex arithmetic is `f64`-based ([`C64`]).

// `!(x < y)` is used on purpose so that NaN fails the check
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod characterize;
pub mod error;
pub mod evalseries;
pub mod forward;
pub mod inverse;
pub mod io;
pub mod lattice;
pub mod linalg;
pub mod polyops;
pub mod quad;

pub use error::{Error, Result};
pub use lattice::{Form, FourierPotential, ModelOrder};

/// Double-precision complex scalar used throughout.
pub type C64 = num_complex::Complex64;

/// Numerical tolerances. Every knob has a default; none is a hard-coded constant.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Tolerances {
    /// Relative threshold below which a recurrence denominator counts as resonant.
    pub resonance: f64,
    /// Relative threshold for the remainder of an exact polynomial division.
    pub remainder: f64,
    /// Linear systems with (row-equilibrated) condition estimate `>= 1/singular` are rejected.
    pub singular: f64,
    /// Relative distance to a pole below which series evaluation is refused.
    pub near_pole: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            resonance: 1e-10,
            remainder: 1e-10,
            singular: 1e-13,
            near_pole: 1e-10,
        }
    }
}
