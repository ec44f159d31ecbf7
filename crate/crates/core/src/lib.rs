//! Numerical laboratory for Moser–Trudinger inequalities on the stretched cone
//! `[0,1) x (-1,1)` (and the infinite cone `x1 > 0`) with measure `dx1/x1 dx2`,
//! together with a mountain-pass solver for `-Δ_B u = f(u)`.
//!
//! All grid work happens in log coordinates `(r, y) = (-ln x1, x2)`, where the
//! cone measure is Lebesgue measure and the Fuchs-type Laplacian
//! `(x1 d/dx1)^2 + (d/dx2)^2` is the flat Laplacian.

pub mod cone_domain;
pub mod cone_operator;
pub mod corpus;
pub mod error;
pub mod mellin;
pub mod mountain_pass;
pub mod mt_lab;
pub mod norms;
pub mod rearrangement;

pub use error::{ConeError, Result};

/// `ω₁ = 2π`, the perimeter of the unit circle.
pub const OMEGA_1: f64 = 2.0 * std::f64::consts::PI;

/// The sharp exponent `α₂ = 2ω₁ = 4π`.
pub const ALPHA_2: f64 = 2.0 * OMEGA_1;

/// Largest exponent argument accepted by any `exp` evaluation in a functional.
pub const EXP_GUARD: f64 = 700.0;
